#include "hemo/kernels.hpp"

#include <numbers>

namespace hemo {

namespace {

constexpr double kPi = std::numbers::pi;

// poly6: W = 315/(64 pi h^9) (h^2 - r^2)^3 on r < h
double poly6_w(double r2, double h) {
    const double h2 = h * h;
    if (r2 >= h2) return 0.0;
    const double d = h2 - r2;
    const double h3 = h * h * h;
    const double h9 = h3 * h3 * h3;
    return 315.0 / (64.0 * kPi * h9) * d * d * d;
}

// grad poly6: -945/(32 pi h^9) (h^2 - r^2)^2 r
Vec3 poly6_grad(const Vec3& r, double r2, double h) {
    const double h2 = h * h;
    if (r2 >= h2) return {};
    const double d = h2 - r2;
    const double h3 = h * h * h;
    const double h9 = h3 * h3 * h3;
    return r * (-945.0 / (32.0 * kPi * h9) * d * d);
}

// spiky: W = 15/(pi h^6) (h - r)^3 on r < h
double spiky_w(double rn, double h) {
    if (rn >= h) return 0.0;
    const double d = h - rn;
    const double h3 = h * h * h;
    return 15.0 / (kPi * h3 * h3) * d * d * d;
}

// grad spiky: -45/(pi h^6) (h - r)^2 r/|r|; defined as zero at the origin
Vec3 spiky_grad(const Vec3& r, double rn, double h) {
    if (rn >= h || rn == 0.0) return {};
    const double d = h - rn;
    const double h3 = h * h * h;
    return r * (-45.0 / (kPi * h3 * h3) * d * d / rn);
}

}  // namespace

double kernel_w(const Vec3& r, double h, KernelFamily family) {
    switch (family) {
        case KernelFamily::Poly6:
            return poly6_w(r.squared_norm(), h);
        case KernelFamily::Spiky:
            return spiky_w(r.norm(), h);
    }
    return 0.0;
}

Vec3 kernel_grad(const Vec3& r, double h, KernelFamily family) {
    switch (family) {
        case KernelFamily::Poly6:
            return poly6_grad(r, r.squared_norm(), h);
        case KernelFamily::Spiky:
            return spiky_grad(r, r.norm(), h);
    }
    return {};
}

double kernel_w_origin(double h, KernelFamily family) {
    return kernel_w(Vec3{}, h, family);
}

}  // namespace hemo
