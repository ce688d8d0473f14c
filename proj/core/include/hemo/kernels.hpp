#pragma once

#include "hemo/vec.hpp"

namespace hemo {

// Compactly supported smoothing kernels. Both families vanish for
// |r| >= h and are spherically symmetric.
enum class KernelFamily {
    Poly6,  // value kernel, W(0) finite, gradient vanishes at contact
    Spiky,  // gradient stays repulsive down to contact
};

struct KernelParams {
    double h = 0.1;                                   // smoothing radius, > 0
    KernelFamily value_family = KernelFamily::Poly6;  // used for W sums
    KernelFamily grad_family = KernelFamily::Spiky;   // used for grad-W sums

    bool valid() const { return h > 0.0; }
};

// W(r, h) for the given family. Zero outside the support ball.
double kernel_w(const Vec3& r, double h, KernelFamily family);

// grad W(r, h), the gradient with respect to r. Antisymmetric in r,
// zero at the origin and outside the support.
Vec3 kernel_grad(const Vec3& r, double h, KernelFamily family);

inline double kernel_w(const Vec3& r, const KernelParams& p) {
    return kernel_w(r, p.h, p.value_family);
}
inline Vec3 kernel_grad(const Vec3& r, const KernelParams& p) {
    return kernel_grad(r, p.h, p.grad_family);
}

// W(0, h) for the value family (the self contribution in density sums).
double kernel_w_origin(double h, KernelFamily family);

}  // namespace hemo
