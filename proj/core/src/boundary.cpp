#include "hemo/boundary.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hemo/binary_io.hpp"
#include "hemo/neighbor_grid.hpp"

namespace hemo {

namespace {

constexpr double kPi = std::numbers::pi;

// Any unit vector perpendicular to t.
Vec3 perpendicular(const Vec3& t) {
    Vec3 ref = std::abs(t.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 n = cross(t, ref);
    return n * (1.0 / n.norm());
}

// Rotate v by the minimal rotation taking unit vector a to unit vector b.
Vec3 transport(const Vec3& v, const Vec3& a, const Vec3& b) {
    const Vec3 axis = cross(a, b);
    const double s2 = axis.squared_norm();
    const double c = dot(a, b);
    if (s2 < 1e-24) {
        if (c > 0.0) return v;
        // Antiparallel tangents: rotate around any perpendicular by pi.
        const Vec3 p = perpendicular(a);
        return p * (2.0 * dot(v, p)) - v;
    }
    // Rodrigues with sin/cos folded into the cross products.
    const Vec3 k = axis * (1.0 / std::sqrt(s2));
    const double cosang = c;
    const double sinang = std::sqrt(s2);
    return v * cosang + cross(k, v) * sinang + k * (dot(k, v) * (1.0 - cosang));
}

void append_ring(std::vector<Vec3>& out, const Vec3& center, const Vec3& n, const Vec3& b,
                 double radius, double spacing, bool odd) {
    const int m = std::max(1, static_cast<int>(std::ceil(2.0 * kPi * radius / spacing)));
    const double offset = odd ? kPi / m : 0.0;
    for (int i = 0; i < m; ++i) {
        const double ang = offset + 2.0 * kPi * i / m;
        out.push_back(center + n * (radius * std::cos(ang)) + b * (radius * std::sin(ang)));
    }
}

void append_cap(std::vector<Vec3>& out, const Vec3& center, const Vec3& n, const Vec3& b,
                double radius, double spacing) {
    out.push_back(center);
    int ring = 1;
    for (double r = spacing; r < radius; r += spacing, ++ring) {
        append_ring(out, center, n, b, r, spacing, ring % 2 == 1);
    }
}

}  // namespace

std::vector<Vec3> sample_tube(const TubeSpec& tube, double spacing) {
    if (tube.axis.size() < 2) throw std::invalid_argument("tube axis needs at least 2 points");
    if (!(spacing > 0.0)) throw std::invalid_argument("tube sampling spacing must be positive");
    if (!(tube.radius > spacing)) {
        throw std::invalid_argument("tube radius must exceed the sampling spacing");
    }

    // Segment lengths; repeated axis points are degenerate.
    std::vector<double> seg_len(tube.axis.size() - 1);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < tube.axis.size(); ++s) {
        seg_len[s] = (tube.axis[s + 1] - tube.axis[s]).norm();
        if (seg_len[s] < 1e-12) throw std::invalid_argument("tube axis has repeated points");
        total += seg_len[s];
    }

    std::vector<Vec3> out;
    const int rings = static_cast<int>(std::floor(total / spacing + 1e-9)) + 1;
    out.reserve(static_cast<std::size_t>(rings) *
                static_cast<std::size_t>(std::ceil(2.0 * kPi * tube.radius / spacing) + 1));

    std::size_t seg = 0;
    double seg_start = 0.0;
    Vec3 tangent = (tube.axis[1] - tube.axis[0]) * (1.0 / seg_len[0]);
    Vec3 normal = perpendicular(tangent);
    Vec3 first_n, first_b, first_c;  // start-cap frame
    for (int ring = 0; ring < rings; ++ring) {
        const double t = std::min(ring * spacing, total);
        while (seg + 1 < seg_len.size() && t > seg_start + seg_len[seg]) {
            seg_start += seg_len[seg];
            ++seg;
            const Vec3 nt = (tube.axis[seg + 1] - tube.axis[seg]) * (1.0 / seg_len[seg]);
            normal = transport(normal, tangent, nt);
            tangent = nt;
            // Re-orthogonalize against drift.
            normal -= tangent * dot(normal, tangent);
            normal *= 1.0 / normal.norm();
        }
        const Vec3 center = tube.axis[seg] + tangent * (t - seg_start);
        const Vec3 binormal = cross(tangent, normal);
        append_ring(out, center, normal, binormal, tube.radius, spacing, ring % 2 == 1);
        if (ring == 0) {
            first_n = normal;
            first_b = binormal;
            first_c = center;
        }
        if (ring == rings - 1 && tube.cap_end) {
            append_cap(out, center, normal, binormal, tube.radius, spacing);
        }
    }
    if (tube.cap_start) append_cap(out, first_c, first_n, first_b, tube.radius, spacing);
    return out;
}

TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file " + path);
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw std::runtime_error("malformed vertex: " + line);
            if (!is_finite(v)) throw std::runtime_error("non-finite vertex: " + line);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // "7/1/3" style references: the vertex index is the first field.
                const auto slash = tok.find('/');
                if (slash != std::string::npos) tok = tok.substr(0, slash);
                const int raw = std::stoi(tok);
                const int n = static_cast<int>(mesh.vertices.size());
                const int v = raw > 0 ? raw - 1 : n + raw;  // negative = relative
                if (v < 0 || v >= n) throw std::runtime_error("face index out of range: " + line);
                idx.push_back(v);
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
            }
        }
    }
    return mesh;
}

std::vector<Vec3> sample_mesh(const TriangleMesh& mesh, double spacing, std::uint64_t seed) {
    if (mesh.triangles.empty()) throw std::invalid_argument("mesh has no triangles");
    if (!(spacing > 0.0)) throw std::invalid_argument("mesh sampling spacing must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Vec3> out;
    double carry = 0.0;
    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        const double area = 0.5 * cross(b - a, c - a).norm();
        carry += area / (spacing * spacing);
        int count = static_cast<int>(std::floor(carry));
        carry -= count;
        for (int s = 0; s < count; ++s) {
            const double su = std::sqrt(uni(rng));
            const double v = uni(rng);
            out.push_back(a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v));
        }
    }
    return out;
}

std::vector<ProxyParticle> proxy_volumes(const std::vector<Vec3>& positions, double rho0,
                                         const KernelParams& kp) {
    NeighborGrid grid({}, positions, kp.h);
    std::vector<ProxyParticle> out(positions.size());
    std::vector<int> fluid_nb, proxy_nb;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        grid.query_point(positions[i], fluid_nb, proxy_nb);
        double wsum = 0.0;  // self is in the list (distance 0 < h)
        for (int k : proxy_nb) {
            wsum += kernel_w(positions[i] - positions[k], kp.h, kp.value_family);
        }
        out[i].r = positions[i];
        out[i].volume = 1.0 / wsum;
        out[i].weight = rho0 * out[i].volume;
    }
    return out;
}

void write_proxies(const std::string& path, const std::vector<ProxyParticle>& proxies) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write proxy file " + path);
    io::write_magic(os, "BFPX");
    io::write_u32(os, 1);
    io::write_u32(os, static_cast<std::uint32_t>(proxies.size()));
    for (const auto& p : proxies) {
        io::write_vec3_f32(os, p.r);
        io::write_f32(os, static_cast<float>(p.weight));
    }
    if (!os) throw std::runtime_error("short write to proxy file " + path);
}

std::vector<ProxyParticle> read_proxies(const std::string& path, double rho0) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open proxy file " + path);
    io::expect_magic(is, "BFPX", path);
    const std::uint32_t version = io::read_u32(is);
    if (version != 1) throw std::runtime_error(path + ": unsupported proxy file version");
    const std::uint32_t count = io::read_u32(is);
    std::vector<ProxyParticle> out(count);
    for (auto& p : out) {
        p.r = io::read_vec3_f32(is);
        p.weight = io::read_f32(is);
        p.volume = p.weight / rho0;
    }
    return out;
}

}  // namespace hemo
