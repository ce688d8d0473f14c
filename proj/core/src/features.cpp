#include "hemo/features.hpp"

#include <algorithm>
#include <cmath>

namespace hemo {

void fluid_samples(const FluidState& state, int i, std::span<const int> fluid_nb,
                   NeighborSamples& out) {
    out.dr.clear();
    out.dv.clear();
    const FluidParticle& pi = state.particles[i];
    out.dr.reserve(fluid_nb.size());
    out.dv.reserve(fluid_nb.size());
    for (int j : fluid_nb) {
        out.dr.push_back(state.particles[j].r - pi.r);
        out.dv.push_back(state.particles[j].v - pi.v);
    }
}

void proxy_samples(const FluidState& state, int i, std::span<const int> proxy_nb,
                   const std::vector<ProxyParticle>& proxies, NeighborSamples& out) {
    out.dr.clear();
    out.dv.clear();
    const FluidParticle& pi = state.particles[i];
    out.dr.reserve(proxy_nb.size());
    for (int k : proxy_nb) out.dr.push_back(proxies[k].r - pi.r);
}

namespace {

// Shared moment kernels over precomputed magnitudes. The hot path caches
// the norms once; the vector overloads below recompute them per call but
// land on bitwise-identical sums.
double dispersion_mags(const std::vector<double>& mags) {
    const std::size_t n = mags.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double m : mags) mean += m;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double m : mags) {
        const double dev = m - mean;
        var += dev * dev;
    }
    return var / static_cast<double>(n);
}

std::pair<double, double> shape_mags(const std::vector<double>& mags, double range, int bins) {
    const std::size_t n = mags.size();
    if (n == 0) return {0.0, 0.0};

    // Partition p covers ((p-1)*range/bins, p*range/bins] and is
    // represented by its upper edge; everything beyond falls into bin
    // `bins`, and magnitude 0 into bin 1.
    double freq_small[16];
    thread_local std::vector<double> freq_big;
    double* freq;
    if (bins < 16) {
        freq = freq_small;
    } else {
        freq_big.resize(static_cast<std::size_t>(bins) + 1);
        freq = freq_big.data();
    }
    for (int p = 0; p <= bins; ++p) freq[p] = 0.0;
    for (double mag : mags) {
        int p = static_cast<int>(std::ceil(mag * bins / range));
        p = std::clamp(p, 1, bins);
        freq[p] += 1.0;
    }

    double mean = 0.0;
    for (int p = 1; p <= bins; ++p) mean += (p * range / bins) * freq[p];
    mean /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (int p = 1; p <= bins; ++p) {
        const double dev = p * range / bins - mean;
        const double d2 = dev * dev;
        m2 += d2 * freq[p];
        m3 += d2 * dev * freq[p];
        m4 += d2 * d2 * freq[p];
    }
    m2 /= static_cast<double>(n);
    if (m2 <= 0.0) return {0.0, 0.0};
    const double sigma = std::sqrt(m2);
    const double s3 = sigma * sigma * sigma;
    const double alpha = m3 / static_cast<double>(n) / s3;
    const double beta = m4 / static_cast<double>(n) / (s3 * sigma);
    return {alpha, beta};
}

void magnitudes(const std::vector<Vec3>& rel, std::vector<double>& out) {
    out.clear();
    out.reserve(rel.size());
    for (const Vec3& d : rel) out.push_back(d.norm());
}

}  // namespace

Vec3 central_tendency(const std::vector<Vec3>& rel) {
    if (rel.empty()) return {};
    Vec3 sum;
    for (const Vec3& d : rel) sum += d;
    return sum * (1.0 / static_cast<double>(rel.size()));
}

double dispersion(const std::vector<Vec3>& rel) {
    thread_local std::vector<double> mags;
    magnitudes(rel, mags);
    return dispersion_mags(mags);
}

std::pair<double, double> shape_coefficients(const std::vector<Vec3>& rel, double range,
                                             int bins) {
    thread_local std::vector<double> mags;
    magnitudes(rel, mags);
    return shape_mags(mags, range, bins);
}

namespace {

// Accumulation happens in index order so that any permutation of the
// neighbor enumeration yields bitwise-identical features.
std::span<const int> canonical(std::span<const int> nb, std::vector<int>& buf) {
    if (std::is_sorted(nb.begin(), nb.end())) return nb;
    buf.assign(nb.begin(), nb.end());
    std::sort(buf.begin(), buf.end());
    return buf;
}

}  // namespace

FeatureVector extract_feature_vector(const FluidState& state, int i,
                                     std::span<const int> fluid_nb,
                                     std::span<const int> proxy_nb,
                                     const std::vector<ProxyParticle>& proxies,
                                     const BinningSpec& spec) {
    thread_local std::vector<int> fluid_buf, proxy_buf;
    const std::span<const int> fnb = canonical(fluid_nb, fluid_buf);
    const std::span<const int> pnb = canonical(proxy_nb, proxy_buf);

    FeatureVector f{};
    const FluidParticle& pi = state.particles[i];
    f[feat::kAx] = pi.a.x;
    f[feat::kAy] = pi.a.y;
    f[feat::kAz] = pi.a.z;

    // Single pass per neighbor set caches the norms; the moment kernels
    // then reuse them, matching the staged helpers sum for sum.
    thread_local std::vector<double> mag_dr, mag_dv, mag_dp;
    mag_dr.clear();
    mag_dv.clear();
    mag_dr.reserve(fnb.size());
    mag_dv.reserve(fnb.size());
    Vec3 rsum, vsum;
    for (int j : fnb) {
        const Vec3 dr = state.particles[j].r - pi.r;
        const Vec3 dv = state.particles[j].v - pi.v;
        rsum += dr;
        vsum += dv;
        mag_dr.push_back(dr.norm());
        mag_dv.push_back(dv.norm());
    }
    const std::size_t n = fnb.size();
    f[feat::kN] = static_cast<double>(n);
    if (n > 0) {
        const double inv = 1.0 / static_cast<double>(n);
        const Vec3 dis_b = rsum * inv;
        const Vec3 rv_b = vsum * inv;
        f[feat::kDisAvgB + 0] = dis_b.x;
        f[feat::kDisAvgB + 1] = dis_b.y;
        f[feat::kDisAvgB + 2] = dis_b.z;
        f[feat::kRvAvgB + 0] = rv_b.x;
        f[feat::kRvAvgB + 1] = rv_b.y;
        f[feat::kRvAvgB + 2] = rv_b.z;
    }
    f[feat::kDDisB] = dispersion_mags(mag_dr);
    f[feat::kDRvB] = dispersion_mags(mag_dv);
    const auto [a_dis_b, b_dis_b] = shape_mags(mag_dr, spec.dist_range, spec.bins);
    const auto [a_rv_b, b_rv_b] = shape_mags(mag_dv, spec.vel_range, spec.bins);
    f[feat::kAlphaDisB] = a_dis_b;
    f[feat::kAlphaRvB] = a_rv_b;
    f[feat::kBetaDisB] = b_dis_b;
    f[feat::kBetaRvB] = b_rv_b;

    mag_dp.clear();
    mag_dp.reserve(pnb.size());
    Vec3 psum;
    for (int k : pnb) {
        const Vec3 dp = proxies[k].r - pi.r;
        psum += dp;
        mag_dp.push_back(dp.norm());
    }
    const std::size_t m = pnb.size();
    f[feat::kM] = static_cast<double>(m);
    if (m > 0) {
        const Vec3 dis_p = psum * (1.0 / static_cast<double>(m));
        f[feat::kDisAvgP + 0] = dis_p.x;
        f[feat::kDisAvgP + 1] = dis_p.y;
        f[feat::kDisAvgP + 2] = dis_p.z;
    }
    f[feat::kDDisP] = dispersion_mags(mag_dp);
    const auto [a_dis_p, b_dis_p] = shape_mags(mag_dp, spec.dist_range, spec.bins);
    f[feat::kAlphaDisP] = a_dis_p;
    f[feat::kBetaDisP] = b_dis_p;
    return f;
}

FeatureVector extract_feature_vector(const FluidState& state, int i, const NeighborGrid& grid,
                                     const std::vector<ProxyParticle>& proxies,
                                     const BinningSpec& spec) {
    thread_local std::vector<int> fluid_nb, proxy_nb;
    grid.query(i, fluid_nb, proxy_nb);
    return extract_feature_vector(state, i, fluid_nb, proxy_nb, proxies, spec);
}

}  // namespace hemo
