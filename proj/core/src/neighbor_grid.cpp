#include "hemo/neighbor_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

namespace hemo {

namespace {

// 21 bits per axis, biased to unsigned. Covers cell coordinates up to
// ~1e6 in magnitude, far beyond any sane domain; anything outside is a
// runaway particle and gets rejected instead of silently aliasing.
constexpr std::int64_t kBias = std::int64_t{1} << 20;

std::int64_t axis_cell(double x, double h) { return static_cast<std::int64_t>(std::floor(x / h)); }

std::uint64_t pack(std::int64_t cx, std::int64_t cy, std::int64_t cz) {
    return (static_cast<std::uint64_t>(cx + kBias) << 42) |
           (static_cast<std::uint64_t>(cy + kBias) << 21) |
           static_cast<std::uint64_t>(cz + kBias);
}

bool axis_ok(std::int64_t c) { return c >= -kBias && c < kBias; }

std::uint64_t cell_key(const Vec3& r, const char* tag, int index, double h) {
    if (!is_finite(r)) {
        throw std::invalid_argument(std::string(tag) + " particle " + std::to_string(index) +
                                    " has a non-finite coordinate");
    }
    const std::int64_t cx = axis_cell(r.x, h);
    const std::int64_t cy = axis_cell(r.y, h);
    const std::int64_t cz = axis_cell(r.z, h);
    if (!axis_ok(cx) || !axis_ok(cy) || !axis_ok(cz)) {
        throw std::invalid_argument(std::string(tag) + " particle " + std::to_string(index) +
                                    " is outside the addressable domain");
    }
    return pack(cx, cy, cz);
}

// Cell coordinate of an arbitrary query center, which may sit outside the
// addressable domain (its in-domain stencil columns still count). The floor
// is range-checked as a double first so wild values never hit the int cast.
bool center_cell(double x, double h, std::int64_t& out) {
    const double f = std::floor(x / h);
    if (!(f >= -4.0 * kBias && f <= 4.0 * kBias)) return false;
    out = static_cast<std::int64_t>(f);
    return true;
}

}  // namespace

void NeighborGrid::CellStore::clear() {
    key.clear();
    start.assign(1, 0);
    id.clear();
    pos.clear();
}

void NeighborGrid::CellStore::build(const std::vector<Vec3>& src, const char* tag, double h) {
    const int n = static_cast<int>(src.size());
    std::vector<std::pair<std::uint64_t, int>> bins(n);
    for (int i = 0; i < n; ++i) bins[i] = {cell_key(src[i], tag, i, h), i};
    std::sort(bins.begin(), bins.end());

    key.clear();
    start.clear();
    id.resize(n);
    pos.resize(n);
    for (int s = 0; s < n; ++s) {
        if (s == 0 || bins[s].first != bins[s - 1].first) {
            key.push_back(bins[s].first);
            start.push_back(s);
        }
        id[s] = bins[s].second;
        pos[s] = src[bins[s].second];
    }
    start.push_back(n);
    if (key.empty()) start.assign(1, 0);
}

NeighborGrid::NeighborGrid(std::vector<Vec3> fluid_positions, std::vector<Vec3> proxy_positions,
                           double h)
    : h_(h), proxy_(std::move(proxy_positions)) {
    if (!(h > 0.0)) throw std::invalid_argument("grid cell size must be positive");
    proxy_cells_.build(proxy_, "proxy", h_);
    rebuild_fluid(std::move(fluid_positions));
}

void NeighborGrid::rebuild_fluid(std::vector<Vec3> fluid_positions) {
    fluid_ = std::move(fluid_positions);
    fluid_cells_.build(fluid_, "fluid", h_);
}

// The packed key keeps z in the low bits, so the three stencil cells of one
// (x,y) column occupy consecutive keys and the occupied subset is one
// contiguous run of the sorted key array: a single binary search per column.
NeighborGrid::Stencil NeighborGrid::stencil(const CellStore& side, std::int64_t cx,
                                            std::int64_t cy, std::int64_t cz) const {
    Stencil st;
    if (side.key.empty()) return st;
    const std::int64_t zlo = std::max(cz - 1, -kBias);
    const std::int64_t zhi = std::min(cz + 1, kBias - 1);
    if (zlo > zhi) return st;
    for (std::int64_t nx = cx - 1; nx <= cx + 1; ++nx) {
        if (!axis_ok(nx)) continue;
        for (std::int64_t ny = cy - 1; ny <= cy + 1; ++ny) {
            if (!axis_ok(ny)) continue;
            const std::uint64_t klo = pack(nx, ny, zlo);
            const std::uint64_t khi = pack(nx, ny, zhi);
            auto it = std::lower_bound(side.key.begin(), side.key.end(), klo);
            std::size_t c = static_cast<std::size_t>(it - side.key.begin());
            std::size_t e = c;
            while (e < side.key.size() && side.key[e] <= khi) ++e;
            if (e == c) continue;
            st.lo[st.count] = side.start[c];
            st.hi[st.count] = side.start[e];
            ++st.count;
        }
    }
    return st;
}

namespace {

// Exact strict-radius filter over one packed candidate range.
inline void filter_range(const Vec3* pos, const int* id, int lo, int hi, const Vec3& center,
                         double h2, int exclude, std::vector<int>& out) {
    for (int k = lo; k < hi; ++k) {
        const double dx = pos[k].x - center.x;
        const double dy = pos[k].y - center.y;
        const double dz = pos[k].z - center.z;
        if (dx * dx + dy * dy + dz * dz < h2 && id[k] != exclude) out.push_back(id[k]);
    }
}

}  // namespace

void NeighborGrid::gather(const Vec3& center, int exclude_fluid, std::vector<int>& fluid_out,
                          std::vector<int>& proxy_out) const {
    fluid_out.clear();
    proxy_out.clear();
    std::int64_t cx, cy, cz;
    if (!center_cell(center.x, h_, cx) || !center_cell(center.y, h_, cy) ||
        !center_cell(center.z, h_, cz)) {
        return;
    }
    const double h2 = h_ * h_;
    const Stencil sf = stencil(fluid_cells_, cx, cy, cz);
    for (int c = 0; c < sf.count; ++c) {
        filter_range(fluid_cells_.pos.data(), fluid_cells_.id.data(), sf.lo[c], sf.hi[c], center,
                     h2, exclude_fluid, fluid_out);
    }
    const Stencil sp = stencil(proxy_cells_, cx, cy, cz);
    for (int c = 0; c < sp.count; ++c) {
        filter_range(proxy_cells_.pos.data(), proxy_cells_.id.data(), sp.lo[c], sp.hi[c], center,
                     h2, -1, proxy_out);
    }
    std::sort(fluid_out.begin(), fluid_out.end());
    std::sort(proxy_out.begin(), proxy_out.end());
}

void NeighborGrid::query(int i, std::vector<int>& fluid_out, std::vector<int>& proxy_out) const {
    if (i < 0 || i >= static_cast<int>(fluid_.size())) {
        throw std::out_of_range("neighbor query index " + std::to_string(i) + " out of range");
    }
    gather(fluid_[i], i, fluid_out, proxy_out);
}

NeighborLists NeighborGrid::query(int i) const {
    NeighborLists out;
    query(i, out.fluid, out.proxy);
    return out;
}

void NeighborGrid::query_point(const Vec3& r, std::vector<int>& fluid_out,
                               std::vector<int>& proxy_out) const {
    gather(r, -1, fluid_out, proxy_out);
}

NeighborLists NeighborGrid::query_point(const Vec3& r) const {
    NeighborLists out;
    query_point(r, out.fluid, out.proxy);
    return out;
}

namespace {

// query_all worker output: rows in cell-major particle order.
struct RowScratch {
    std::vector<int> particle;                // row -> fluid index
    std::vector<int> fluid_len, proxy_len;    // per row
    std::vector<int> fluid_idx, proxy_idx;    // concatenated rows
};

}  // namespace

void NeighborGrid::query_all(NeighborTable& out, int threads) const {
    const int n = static_cast<int>(fluid_.size());
    const int ncells = static_cast<int>(fluid_cells_.key.size());
    const double h2 = h_ * h_;

    const auto run_cells = [&](int cell_begin, int cell_end, RowScratch& rs) {
        rs.particle.clear();
        rs.fluid_len.clear();
        rs.proxy_len.clear();
        rs.fluid_idx.clear();
        rs.proxy_idx.clear();
        std::vector<int> frow, prow;
        frow.reserve(96);
        prow.reserve(96);
        for (int c = cell_begin; c < cell_end; ++c) {
            const std::uint64_t k = fluid_cells_.key[c];
            const std::int64_t cx = static_cast<std::int64_t>(k >> 42) - kBias;
            const std::int64_t cy = static_cast<std::int64_t>((k >> 21) & 0x1fffff) - kBias;
            const std::int64_t cz = static_cast<std::int64_t>(k & 0x1fffff) - kBias;
            const Stencil sf = stencil(fluid_cells_, cx, cy, cz);
            const Stencil sp = stencil(proxy_cells_, cx, cy, cz);
            for (int s = fluid_cells_.start[c]; s < fluid_cells_.start[c + 1]; ++s) {
                const Vec3 center = fluid_cells_.pos[s];
                const int self = fluid_cells_.id[s];
                frow.clear();
                prow.clear();
                for (int r = 0; r < sf.count; ++r) {
                    filter_range(fluid_cells_.pos.data(), fluid_cells_.id.data(), sf.lo[r],
                                 sf.hi[r], center, h2, self, frow);
                }
                for (int r = 0; r < sp.count; ++r) {
                    filter_range(proxy_cells_.pos.data(), proxy_cells_.id.data(), sp.lo[r],
                                 sp.hi[r], center, h2, -1, prow);
                }
                std::sort(frow.begin(), frow.end());
                std::sort(prow.begin(), prow.end());
                rs.particle.push_back(self);
                rs.fluid_len.push_back(static_cast<int>(frow.size()));
                rs.proxy_len.push_back(static_cast<int>(prow.size()));
                rs.fluid_idx.insert(rs.fluid_idx.end(), frow.begin(), frow.end());
                rs.proxy_idx.insert(rs.proxy_idx.end(), prow.begin(), prow.end());
            }
        }
    };

    const int workers = std::max(1, std::min(threads, ncells));
    std::vector<RowScratch> scratch(static_cast<std::size_t>(workers));
    if (workers <= 1) {
        run_cells(0, ncells, scratch[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const int chunk = (ncells + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(ncells, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end, w] { run_cells(begin, end, scratch[w]); });
        }
        for (auto& t : pool) t.join();
    }

    // Reorder cell-major rows into the particle-indexed CSR tables.
    out.fluid_start.assign(static_cast<std::size_t>(n) + 1, 0);
    out.proxy_start.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const RowScratch& rs : scratch) {
        for (std::size_t r = 0; r < rs.particle.size(); ++r) {
            out.fluid_start[rs.particle[r] + 1] = rs.fluid_len[r];
            out.proxy_start[rs.particle[r] + 1] = rs.proxy_len[r];
        }
    }
    for (int i = 0; i < n; ++i) {
        out.fluid_start[i + 1] += out.fluid_start[i];
        out.proxy_start[i + 1] += out.proxy_start[i];
    }
    out.fluid_idx.resize(static_cast<std::size_t>(out.fluid_start[n]));
    out.proxy_idx.resize(static_cast<std::size_t>(out.proxy_start[n]));
    for (const RowScratch& rs : scratch) {
        std::size_t foff = 0, poff = 0;
        for (std::size_t r = 0; r < rs.particle.size(); ++r) {
            const int p = rs.particle[r];
            std::copy_n(rs.fluid_idx.begin() + foff, rs.fluid_len[r],
                        out.fluid_idx.begin() + out.fluid_start[p]);
            std::copy_n(rs.proxy_idx.begin() + poff, rs.proxy_len[r],
                        out.proxy_idx.begin() + out.proxy_start[p]);
            foff += static_cast<std::size_t>(rs.fluid_len[r]);
            poff += static_cast<std::size_t>(rs.proxy_len[r]);
        }
    }
}

}  // namespace hemo
