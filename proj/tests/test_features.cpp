#include "hemo/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

using namespace hemo;

namespace {

FluidState two_neighbor_state() {
    FluidState s;
    s.particles.resize(3);
    s.particles[0].r = {0, 0, 0};
    s.particles[0].v = {0.1, 0, 0};
    s.particles[0].a = {1.0, -2.0, 3.0};
    s.particles[1].r = {0.03, 0.04, 0};
    s.particles[1].v = {0.2, 0.1, 0};
    s.particles[2].r = {-0.02, 0, 0.05};
    s.particles[2].v = {0.0, -0.1, 0.3};
    return s;
}

}  // namespace

TEST(Features, RelativeSamplesAreNeighborMinusSelf) {
    const FluidState s = two_neighbor_state();
    NeighborSamples ns;
    fluid_samples(s, 0, std::vector<int>{1, 2}, ns);
    ASSERT_EQ(ns.dr.size(), 2u);
    EXPECT_DOUBLE_EQ(ns.dr[0].x, 0.03);
    EXPECT_DOUBLE_EQ(ns.dr[0].y, 0.04);
    EXPECT_DOUBLE_EQ(ns.dr[1].x, -0.02);
    EXPECT_DOUBLE_EQ(ns.dr[1].z, 0.05);
    EXPECT_DOUBLE_EQ(ns.dv[0].x, 0.1);
    EXPECT_DOUBLE_EQ(ns.dv[1].y, -0.1);
}

TEST(Features, CentralTendencyAndDispersionHandValues) {
    const std::vector<Vec3> rel{{0.03, 0.04, 0}, {-0.02, 0, 0.05}};
    const Vec3 mean = central_tendency(rel);
    EXPECT_DOUBLE_EQ(mean.x, (0.03 - 0.02) / 2.0);
    EXPECT_DOUBLE_EQ(mean.y, 0.02);
    EXPECT_DOUBLE_EQ(mean.z, 0.025);

    // Magnitudes are both 0.05 and sqrt(0.0029): population variance of
    // {0.05, 0.053851648...} computed by hand below.
    const double m0 = 0.05, m1 = std::sqrt(0.02 * 0.02 + 0.05 * 0.05);
    const double mu = (m0 + m1) / 2.0;
    const double var = ((m0 - mu) * (m0 - mu) + (m1 - mu) * (m1 - mu)) / 2.0;
    EXPECT_DOUBLE_EQ(dispersion(rel), var);

    EXPECT_DOUBLE_EQ(dispersion({}), 0.0);
    EXPECT_DOUBLE_EQ(dispersion({{0.1, 0.2, 0.3}}), 0.0);  // singleton
    const Vec3 zero = central_tendency({});
    EXPECT_DOUBLE_EQ(zero.x, 0.0);
    EXPECT_DOUBLE_EQ(zero.y, 0.0);
    EXPECT_DOUBLE_EQ(zero.z, 0.0);
}

// Frequencies {1,2,3,2,1,0} over bins 1..6 of [0,1]: skewness ~0 (symmetric
// up to representative offsets) and kurtosis 2.25, computed independently
// from the binned-moment definition.
TEST(Features, ShapeCoefficientsMomentOracle) {
    const int bins = 6;
    const double range = 1.0;
    std::vector<Vec3> rel;
    auto push_in_bin = [&](int bin, int count) {
        // Magnitude in the middle of bin `bin` (1-based): ceil maps it there.
        const double mag = (bin - 0.5) * range / bins;
        for (int c = 0; c < count; ++c) rel.push_back({mag, 0, 0});
    };
    const int freq[6] = {1, 2, 3, 2, 1, 0};
    for (int b = 1; b <= 6; ++b) push_in_bin(b, freq[b - 1]);

    const auto [alpha, beta] = shape_coefficients(rel, range, bins);
    EXPECT_NEAR(alpha, 0.0, 1e-12);
    EXPECT_NEAR(beta, 2.25, 1e-12);
}

TEST(Features, ShapeCoefficientsEdgeCases) {
    // Empty and single-bin inputs yield (0, 0).
    auto [a0, b0] = shape_coefficients({}, 1.0, 6);
    EXPECT_EQ(a0, 0.0);
    EXPECT_EQ(b0, 0.0);
    const std::vector<Vec3> same{{0.25, 0, 0}, {0.26, 0, 0}, {0.27, 0, 0}};
    auto [a1, b1] = shape_coefficients(same, 1.0, 6);  // all in bin 2
    EXPECT_EQ(a1, 0.0);
    EXPECT_EQ(b1, 0.0);

    // Out-of-range magnitudes clamp into the top bin; zero magnitudes land
    // in bin 1 (ceil floor).
    const std::vector<Vec3> clamped{{5.0, 0, 0}, {0.0, 0, 0}};
    auto [a2, b2] = shape_coefficients(clamped, 1.0, 6);
    // Two bins, representatives 1/6 and 1: symmetric pair -> alpha 0,
    // beta = m4/sigma^4 = 1 for any two-point symmetric distribution.
    EXPECT_NEAR(a2, 0.0, 1e-12);
    EXPECT_NEAR(b2, 1.0, 1e-12);
}

TEST(Features, VectorLayoutAndCounts) {
    const FluidState s = two_neighbor_state();
    std::vector<ProxyParticle> proxies(2);
    proxies[0].r = {0, -0.05, 0};
    proxies[0].weight = 0.1;
    proxies[1].r = {0.05, 0, 0.01};
    proxies[1].weight = 0.1;
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;

    const FeatureVector f = extract_feature_vector(s, 0, std::vector<int>{1, 2},
                                                   std::vector<int>{0, 1}, proxies, spec);
    EXPECT_EQ(static_cast<int>(f.size()), kFeatureDim);
    EXPECT_DOUBLE_EQ(f[feat::kAx], 1.0);
    EXPECT_DOUBLE_EQ(f[feat::kAy], -2.0);
    EXPECT_DOUBLE_EQ(f[feat::kAz], 3.0);
    EXPECT_DOUBLE_EQ(f[feat::kN], 2.0);
    EXPECT_DOUBLE_EQ(f[feat::kM], 2.0);

    // Cross-check statistics against the stage functions.
    NeighborSamples fs, ps;
    fluid_samples(s, 0, std::vector<int>{1, 2}, fs);
    proxy_samples(s, 0, std::vector<int>{0, 1}, proxies, ps);
    const Vec3 db = central_tendency(fs.dr);
    const Vec3 vb = central_tendency(fs.dv);
    const Vec3 dp = central_tendency(ps.dr);
    EXPECT_DOUBLE_EQ(f[feat::kDisAvgB], db.x);
    EXPECT_DOUBLE_EQ(f[feat::kDisAvgB + 1], db.y);
    EXPECT_DOUBLE_EQ(f[feat::kDisAvgB + 2], db.z);
    EXPECT_DOUBLE_EQ(f[feat::kRvAvgB], vb.x);
    EXPECT_DOUBLE_EQ(f[feat::kRvAvgB + 1], vb.y);
    EXPECT_DOUBLE_EQ(f[feat::kRvAvgB + 2], vb.z);
    EXPECT_DOUBLE_EQ(f[feat::kDisAvgP], dp.x);
    EXPECT_DOUBLE_EQ(f[feat::kDDisB], dispersion(fs.dr));
    EXPECT_DOUBLE_EQ(f[feat::kDRvB], dispersion(fs.dv));
    EXPECT_DOUBLE_EQ(f[feat::kDDisP], dispersion(ps.dr));
    const auto [adis, bdis] = shape_coefficients(fs.dr, spec.dist_range, spec.bins);
    const auto [arv, brv] = shape_coefficients(fs.dv, spec.vel_range, spec.bins);
    const auto [adp, bdp] = shape_coefficients(ps.dr, spec.dist_range, spec.bins);
    EXPECT_DOUBLE_EQ(f[feat::kAlphaDisB], adis);
    EXPECT_DOUBLE_EQ(f[feat::kBetaDisB], bdis);
    EXPECT_DOUBLE_EQ(f[feat::kAlphaRvB], arv);
    EXPECT_DOUBLE_EQ(f[feat::kBetaRvB], brv);
    EXPECT_DOUBLE_EQ(f[feat::kAlphaDisP], adp);
    EXPECT_DOUBLE_EQ(f[feat::kBetaDisP], bdp);
}

TEST(Features, IsolatedParticleZeroFills) {
    FluidState s;
    s.particles.resize(1);
    s.particles[0].a = {0.5, 0, 0};
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;
    const FeatureVector f = extract_feature_vector(s, 0, {}, {}, {}, spec);
    EXPECT_DOUBLE_EQ(f[feat::kAx], 0.5);
    for (int c = feat::kN; c < kFeatureDim; ++c) {
        EXPECT_DOUBLE_EQ(f[c], 0.0) << "component " << c;
    }
}

TEST(Features, TranslationInvariance) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(-0.1, 0.1), vel(-0.5, 0.5);
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;
    for (int trial = 0; trial < 50; ++trial) {
        FluidState s;
        std::vector<ProxyParticle> proxies(4);
        for (int i = 0; i < 8; ++i) {
            FluidParticle p;
            p.r = {pos(rng), pos(rng), pos(rng)};
            p.v = {vel(rng), vel(rng), vel(rng)};
            p.a = {vel(rng), vel(rng), vel(rng)};
            s.particles.push_back(p);
        }
        for (auto& q : proxies) {
            q.r = {pos(rng), pos(rng), pos(rng)};
            q.weight = 0.1;
        }
        std::vector<int> fl(7), pr(4);
        std::iota(fl.begin(), fl.end(), 1);
        std::iota(pr.begin(), pr.end(), 0);
        const FeatureVector base = extract_feature_vector(s, 0, fl, pr, proxies, spec);

        const Vec3 shift{1.7, -0.4, 12.0};
        FluidState moved = s;
        auto shifted = proxies;
        for (auto& p : moved.particles) p.r += shift;
        for (auto& q : shifted) q.r += shift;
        const FeatureVector after = extract_feature_vector(moved, 0, fl, pr, shifted, spec);
        for (int c = 0; c < kFeatureDim; ++c) {
            EXPECT_NEAR(after[c], base[c], 1e-9 * std::max(1.0, std::abs(base[c])))
                << "component " << c;
        }
    }
}

TEST(Features, UniformVelocityBoostLeavesRelativeStatistics) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> pos(-0.1, 0.1), vel(-0.5, 0.5);
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;
    FluidState s;
    for (int i = 0; i < 10; ++i) {
        FluidParticle p;
        p.r = {pos(rng), pos(rng), pos(rng)};
        p.v = {vel(rng), vel(rng), vel(rng)};
        s.particles.push_back(p);
    }
    std::vector<int> fl(9);
    std::iota(fl.begin(), fl.end(), 1);
    const FeatureVector base = extract_feature_vector(s, 0, fl, {}, {}, spec);
    FluidState boosted = s;
    const Vec3 u{0.9, -0.3, 0.2};
    for (auto& p : boosted.particles) p.v += u;
    const FeatureVector after = extract_feature_vector(boosted, 0, fl, {}, {}, spec);
    for (int c = 0; c < kFeatureDim; ++c) {
        EXPECT_NEAR(after[c], base[c], 1e-9 * std::max(1.0, std::abs(base[c])))
            << "component " << c;
    }
}

TEST(Features, NeighborEnumerationOrderIsBitwiseIrrelevant) {
    // Shuffling the neighbor lists handed to the extractor must not change
    // a single bit: accumulation is canonicalized to ascending index order.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> pos(-0.08, 0.08), vel(-0.5, 0.5);
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;

    FluidState s;
    for (int i = 0; i < 12; ++i) {
        FluidParticle p;
        p.r = {pos(rng), pos(rng), pos(rng)};
        p.v = {vel(rng), vel(rng), vel(rng)};
        p.a = {vel(rng), vel(rng), vel(rng)};
        s.particles.push_back(p);
    }
    std::vector<ProxyParticle> proxies(6);
    for (auto& q : proxies) {
        q.r = {pos(rng), pos(rng), pos(rng)};
        q.weight = 0.1;
    }
    NeighborGrid grid(s.positions(), proxy_positions(proxies), 0.1);

    std::vector<int> fl, pr;
    for (int i = 0; i < 12; ++i) {
        grid.query(i, fl, pr);
        const FeatureVector base = extract_feature_vector(s, i, fl, pr, proxies, spec);
        for (int round = 0; round < 5; ++round) {
            auto fl2 = fl;
            auto pr2 = pr;
            std::shuffle(fl2.begin(), fl2.end(), rng);
            std::shuffle(pr2.begin(), pr2.end(), rng);
            const FeatureVector after = extract_feature_vector(s, i, fl2, pr2, proxies, spec);
            for (int c = 0; c < kFeatureDim; ++c) {
                EXPECT_EQ(after[c], base[c]) << "component " << c;
            }
        }
    }
}

TEST(Features, GridOverloadMatchesExplicitLists) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> pos(-0.08, 0.08), vel(-0.5, 0.5);
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;
    FluidState s;
    for (int i = 0; i < 15; ++i) {
        FluidParticle p;
        p.r = {pos(rng), pos(rng), pos(rng)};
        p.v = {vel(rng), vel(rng), vel(rng)};
        s.particles.push_back(p);
    }
    std::vector<ProxyParticle> proxies(5);
    for (auto& q : proxies) {
        q.r = {pos(rng), pos(rng), pos(rng)};
        q.weight = 0.1;
    }
    NeighborGrid grid(s.positions(), proxy_positions(proxies), 0.1);
    std::vector<int> fl, pr;
    for (int i = 0; i < 15; ++i) {
        grid.query(i, fl, pr);
        const FeatureVector a = extract_feature_vector(s, i, fl, pr, proxies, spec);
        const FeatureVector b = extract_feature_vector(s, i, grid, proxies, spec);
        for (int c = 0; c < kFeatureDim; ++c) EXPECT_EQ(a[c], b[c]);
    }
}
