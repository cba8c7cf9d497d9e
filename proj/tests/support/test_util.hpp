#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nrt/rng.hpp"
#include "nrt/tensor.hpp"

namespace nrt::test {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// Relative error with an absolute floor: comparisons stay relative for
// values of ordinary magnitude and become absolute (err/floor) below it,
// where central differences cannot support a pure relative comparison.
inline double rel_err(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                          double floor = 1e-3) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i], floor));
    return worst;
}

// Brute-force direct-sum convolution (cross-correlation) oracle. Written
// independently of the production kernel: iterates output coordinates and
// sums over the window with explicit bounds checks.
inline Tensor conv2d_reference(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                               std::size_t padding, std::size_t stride) {
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const std::size_t f = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
    const std::size_t ow = (w + 2 * padding - kw) / stride + 1;
    Tensor out({n, f, oh, ow});
    for (std::size_t in = 0; in < n; ++in)
        for (std::size_t jf = 0; jf < f; ++jf)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    double acc = bias[jf];
                    for (std::size_t jc = 0; jc < c; ++jc)
                        for (std::size_t ki = 0; ki < kh; ++ki)
                            for (std::size_t kj = 0; kj < kw; ++kj) {
                                const std::int64_t iy = static_cast<std::int64_t>(y * stride + ki) -
                                                        static_cast<std::int64_t>(padding);
                                const std::int64_t ix = static_cast<std::int64_t>(x * stride + kj) -
                                                        static_cast<std::int64_t>(padding);
                                if (iy < 0 || ix < 0 || iy >= static_cast<std::int64_t>(h) ||
                                    ix >= static_cast<std::int64_t>(w))
                                    continue;
                                acc += input.at(in, jc, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                                       kernels.at(jf, jc, ki, kj);
                            }
                    out.at(in, jf, y, x) = acc;
                }
    return out;
}

// Central finite difference of a scalar function with respect to one
// coordinate of `t`.
template <typename F>
double central_diff(Tensor& t, std::size_t index, F&& scalar_fn, double h = 1e-5) {
    const double saved = t[index];
    t[index] = saved + h;
    const double up = scalar_fn();
    t[index] = saved - h;
    const double down = scalar_fn();
    t[index] = saved;
    return (up - down) / (2.0 * h);
}

}  // namespace nrt::test
