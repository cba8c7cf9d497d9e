#include "nrt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "nrt/parallel.hpp"

namespace nrt {

namespace {

std::size_t checked_element_count(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_to_string(shape));
        n *= d;
    }
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
    }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) +
                         ", got shape " + shape_to_string(t.shape()));
    }
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(checked_element_count(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_element_count(shape_) != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::reshaped(Shape new_shape) const {
    if (checked_element_count(new_shape) != size()) {
        throw ShapeError("cannot reshape " + shape_to_string(shape_) + " (" + std::to_string(size()) +
                         " values) to " + shape_to_string(new_shape));
    }
    return Tensor(std::move(new_shape), data_);
}

void Tensor::ensure_finite(const char* context) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw TrainError(std::string("non-finite value in ") + context);
        }
    }
}

// ---- element-wise suite ----------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] + pb[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] - pb[i];
    return out;
}

Tensor scale(const Tensor& a, double factor) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * factor;
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * pb[i];
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    const double* px = x.data();
    double* po = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
    require_same_shape(x, grad_out, "relu_backward");
    Tensor out(x.shape());
    const double* px = x.data();
    const double* pg = grad_out.data();
    double* po = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] > 0.0 ? pg[i] : 0.0;
    return out;
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    return acc;
}

double mean(const Tensor& a) {
    if (a.size() == 0) throw ShapeError("mean of empty tensor");
    return sum(a) / static_cast<double>(a.size());
}

std::vector<std::size_t> argmax(const Tensor& a, std::size_t axis) {
    require_rank(a, 2, "argmax", "input");
    if (axis > 1) throw ShapeError("argmax: axis must be 0 or 1 for rank-2 input");
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<std::size_t> out;
    if (axis == 1) {
        out.resize(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            const double* row = a.data() + i * cols;
            std::size_t best = 0;
            for (std::size_t j = 1; j < cols; ++j)
                if (row[j] > row[best]) best = j;
            out[i] = best;
        }
    } else {
        out.assign(cols, 0);
        for (std::size_t i = 1; i < rows; ++i) {
            const double* row = a.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j)
                if (row[j] > a.at(out[j], j)) out[j] = i;
        }
    }
    return out;
}

// ---- matrix multiply -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul", "lhs");
    require_rank(b, 2, "matmul", "rhs");
    if (a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
    Tensor out({m, p});

    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();

    const std::size_t row_flops = 2 * k * p;
    const std::size_t grain = std::max<std::size_t>(1, 262144 / std::max<std::size_t>(row_flops, 1));

    parallel_for(m, grain, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* __restrict__ arow = pa + i * k;
            double* __restrict__ orow = po + i * p;
            for (std::size_t kk = 0; kk < k; ++kk) {
                const double av = arow[kk];
                const double* __restrict__ brow = pb + kk * p;
                for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
            }
        }
    });
    return out;
}

// ---- convolution -----------------------------------------------------------

namespace {

struct ConvDims {
    std::size_t n, c, h, w;       // input
    std::size_t f, kh, kw;        // kernels
    std::size_t oh, ow;           // output
    std::int64_t pad, stride;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernels, std::size_t padding, std::size_t stride,
                   const char* op) {
    require_rank(input, 4, op, "input");
    require_rank(kernels, 4, op, "kernels");
    if (stride == 0) throw ShapeError(std::string(op) + ": stride must be positive");
    if (input.dim(1) != kernels.dim(1)) {
        throw ShapeError(std::string(op) + ": input channels " + shape_to_string(input.shape()) +
                         " do not match kernel channels " + shape_to_string(kernels.shape()));
    }
    ConvDims d;
    d.n = input.dim(0);
    d.c = input.dim(1);
    d.h = input.dim(2);
    d.w = input.dim(3);
    d.f = kernels.dim(0);
    d.kh = kernels.dim(2);
    d.kw = kernels.dim(3);
    d.pad = static_cast<std::int64_t>(padding);
    d.stride = static_cast<std::int64_t>(stride);
    if (d.h + 2 * padding < d.kh || d.w + 2 * padding < d.kw) {
        throw ShapeError(std::string(op) + ": kernel " + shape_to_string(kernels.shape()) +
                         " larger than padded input " + shape_to_string(input.shape()));
    }
    d.oh = (d.h + 2 * padding - d.kh) / stride + 1;
    d.ow = (d.w + 2 * padding - d.kw) / stride + 1;
    if (d.oh == 0 || d.ow == 0) {
        throw ShapeError(std::string(op) + ": non-positive output dims for input " +
                         shape_to_string(input.shape()) + ", kernel " + shape_to_string(kernels.shape()) +
                         ", padding " + std::to_string(padding) + ", stride " + std::to_string(stride));
    }
    return d;
}

// Valid output range [lo, hi) along one axis for a given kernel offset:
// indices o with 0 <= o*stride + k - pad < extent.
inline void axis_range(std::int64_t k, std::int64_t pad, std::int64_t stride, std::int64_t extent,
                       std::int64_t out_extent, std::int64_t& lo, std::int64_t& hi) {
    std::int64_t first = pad - k;
    lo = first <= 0 ? 0 : (first + stride - 1) / stride;
    std::int64_t last = (extent - 1 + pad - k) / stride;  // inclusive
    hi = std::min(last + 1, out_extent);
    if (hi < lo) hi = lo;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      std::size_t padding, std::size_t stride) {
    const ConvDims d = conv_dims(input, kernels, padding, stride, "conv2d_forward");
    require_rank(bias, 1, "conv2d_forward", "bias");
    if (bias.dim(0) != d.f) {
        throw ShapeError("conv2d_forward: bias shape " + shape_to_string(bias.shape()) +
                         " does not match filter count " + std::to_string(d.f));
    }

    Tensor out({d.n, d.f, d.oh, d.ow});
    const double* pin = input.data();
    const double* pker = kernels.data();
    const double* pbias = bias.data();
    double* pout = out.data();

    const std::size_t plane_work = d.c * d.kh * d.kw * d.oh * d.ow;
    const std::size_t grain = std::max<std::size_t>(1, 65536 / std::max<std::size_t>(plane_work, 1));

    // One worker owns each (n, f) output plane; accumulation order over
    // (c, ki, kj) is fixed, so the result is independent of the worker count.
    parallel_for(d.n * d.f, grain, [&](std::size_t lo_idx, std::size_t hi_idx) {
        for (std::size_t idx = lo_idx; idx < hi_idx; ++idx) {
            const std::size_t n = idx / d.f;
            const std::size_t f = idx % d.f;
            double* __restrict__ plane = pout + idx * d.oh * d.ow;
            std::fill(plane, plane + d.oh * d.ow, pbias[f]);

            for (std::size_t c = 0; c < d.c; ++c) {
                const double* __restrict__ in_plane = pin + (n * d.c + c) * d.h * d.w;
                const double* kplane = pker + (f * d.c + c) * d.kh * d.kw;
                for (std::size_t ki = 0; ki < d.kh; ++ki) {
                    std::int64_t oh_lo, oh_hi;
                    axis_range(static_cast<std::int64_t>(ki), d.pad, d.stride,
                               static_cast<std::int64_t>(d.h), static_cast<std::int64_t>(d.oh), oh_lo, oh_hi);
                    for (std::size_t kj = 0; kj < d.kw; ++kj) {
                        const double wv = kplane[ki * d.kw + kj];
                        std::int64_t ow_lo, ow_hi;
                        axis_range(static_cast<std::int64_t>(kj), d.pad, d.stride,
                                   static_cast<std::int64_t>(d.w), static_cast<std::int64_t>(d.ow), ow_lo, ow_hi);
                        for (std::int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                            const std::int64_t ih = oh * d.stride + static_cast<std::int64_t>(ki) - d.pad;
                            const double* __restrict__ irow = in_plane + ih * static_cast<std::int64_t>(d.w);
                            double* __restrict__ orow = plane + oh * static_cast<std::int64_t>(d.ow);
                            if (d.stride == 1) {
                                const std::int64_t shift = static_cast<std::int64_t>(kj) - d.pad;
                                for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow)
                                    orow[ow] += wv * irow[ow + shift];
                            } else {
                                for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                                    const std::int64_t iw = ow * d.stride + static_cast<std::int64_t>(kj) - d.pad;
                                    orow[ow] += wv * irow[iw];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& kernels,
                            std::size_t padding, std::size_t stride) {
    const ConvDims d = conv_dims(input, kernels, padding, stride, "conv2d_backward");
    require_rank(grad_out, 4, "conv2d_backward", "grad_out");
    const Shape expected{d.n, d.f, d.oh, d.ow};
    if (grad_out.shape() != expected) {
        throw ShapeError("conv2d_backward: grad_out shape " + shape_to_string(grad_out.shape()) +
                         " does not match forward output " + shape_to_string(expected));
    }

    Conv2dGrads grads{Tensor(input.shape()), Tensor(kernels.shape()), Tensor({d.f})};
    const double* pgo = grad_out.data();
    const double* pin = input.data();
    const double* pker = kernels.data();

    // grad_bias: per-filter sum over (n, oh, ow), fixed order.
    {
        double* pgb = grads.bias.data();
        for (std::size_t f = 0; f < d.f; ++f) {
            double acc = 0.0;
            for (std::size_t n = 0; n < d.n; ++n) {
                const double* plane = pgo + (n * d.f + f) * d.oh * d.ow;
                for (std::size_t i = 0; i < d.oh * d.ow; ++i) acc += plane[i];
            }
            pgb[f] = acc;
        }
    }

    // grad_kernels: one worker per (f, c) kernel plane.
    {
        double* pgk = grads.kernels.data();
        const std::size_t work = d.n * d.oh * d.ow * d.kh * d.kw;
        const std::size_t grain = std::max<std::size_t>(1, 65536 / std::max<std::size_t>(work, 1));
        parallel_for(d.f * d.c, grain, [&](std::size_t lo_idx, std::size_t hi_idx) {
            for (std::size_t idx = lo_idx; idx < hi_idx; ++idx) {
                const std::size_t f = idx / d.c;
                const std::size_t c = idx % d.c;
                double* kacc = pgk + idx * d.kh * d.kw;
                for (std::size_t n = 0; n < d.n; ++n) {
                    const double* __restrict__ gplane = pgo + (n * d.f + f) * d.oh * d.ow;
                    const double* __restrict__ in_plane = pin + (n * d.c + c) * d.h * d.w;
                    for (std::size_t ki = 0; ki < d.kh; ++ki) {
                        std::int64_t oh_lo, oh_hi;
                        axis_range(static_cast<std::int64_t>(ki), d.pad, d.stride,
                                   static_cast<std::int64_t>(d.h), static_cast<std::int64_t>(d.oh), oh_lo, oh_hi);
                        for (std::size_t kj = 0; kj < d.kw; ++kj) {
                            std::int64_t ow_lo, ow_hi;
                            axis_range(static_cast<std::int64_t>(kj), d.pad, d.stride,
                                       static_cast<std::int64_t>(d.w), static_cast<std::int64_t>(d.ow), ow_lo, ow_hi);
                            double acc = 0.0;
                            for (std::int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                                const std::int64_t ih = oh * d.stride + static_cast<std::int64_t>(ki) - d.pad;
                                const double* __restrict__ irow = in_plane + ih * static_cast<std::int64_t>(d.w);
                                const double* __restrict__ grow = gplane + oh * static_cast<std::int64_t>(d.ow);
                                if (d.stride == 1) {
                                    const std::int64_t shift = static_cast<std::int64_t>(kj) - d.pad;
                                    for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow)
                                        acc += grow[ow] * irow[ow + shift];
                                } else {
                                    for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                                        const std::int64_t iw = ow * d.stride + static_cast<std::int64_t>(kj) - d.pad;
                                        acc += grow[ow] * irow[iw];
                                    }
                                }
                            }
                            kacc[ki * d.kw + kj] += acc;
                        }
                    }
                }
            }
        });
    }

    // grad_input: one worker per (n, c) input plane.
    {
        double* pgi = grads.input.data();
        const std::size_t work = d.f * d.oh * d.ow * d.kh * d.kw;
        const std::size_t grain = std::max<std::size_t>(1, 65536 / std::max<std::size_t>(work, 1));
        parallel_for(d.n * d.c, grain, [&](std::size_t lo_idx, std::size_t hi_idx) {
            for (std::size_t idx = lo_idx; idx < hi_idx; ++idx) {
                const std::size_t n = idx / d.c;
                const std::size_t c = idx % d.c;
                double* __restrict__ gi_plane = pgi + idx * d.h * d.w;
                for (std::size_t f = 0; f < d.f; ++f) {
                    const double* __restrict__ gplane = pgo + (n * d.f + f) * d.oh * d.ow;
                    const double* kplane = pker + (f * d.c + c) * d.kh * d.kw;
                    for (std::size_t ki = 0; ki < d.kh; ++ki) {
                        std::int64_t oh_lo, oh_hi;
                        axis_range(static_cast<std::int64_t>(ki), d.pad, d.stride,
                                   static_cast<std::int64_t>(d.h), static_cast<std::int64_t>(d.oh), oh_lo, oh_hi);
                        for (std::size_t kj = 0; kj < d.kw; ++kj) {
                            const double wv = kplane[ki * d.kw + kj];
                            std::int64_t ow_lo, ow_hi;
                            axis_range(static_cast<std::int64_t>(kj), d.pad, d.stride,
                                       static_cast<std::int64_t>(d.w), static_cast<std::int64_t>(d.ow), ow_lo, ow_hi);
                            for (std::int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                                const std::int64_t ih = oh * d.stride + static_cast<std::int64_t>(ki) - d.pad;
                                double* __restrict__ girow = gi_plane + ih * static_cast<std::int64_t>(d.w);
                                const double* __restrict__ grow = gplane + oh * static_cast<std::int64_t>(d.ow);
                                if (d.stride == 1) {
                                    const std::int64_t shift = static_cast<std::int64_t>(kj) - d.pad;
                                    for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow)
                                        girow[ow + shift] += wv * grow[ow];
                                } else {
                                    for (std::int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                                        const std::int64_t iw = ow * d.stride + static_cast<std::int64_t>(kj) - d.pad;
                                        girow[iw] += wv * grow[ow];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }

    return grads;
}

// ---- max pooling -----------------------------------------------------------

MaxPool2dResult maxpool2d_forward(const Tensor& input) {
    require_rank(input, 4, "maxpool2d_forward", "input");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2d_forward: spatial dims must be even, got " +
                         shape_to_string(input.shape()));
    }
    const std::size_t oh = h / 2, ow = w / 2;

    MaxPool2dResult result{Tensor({n, c, oh, ow}), std::vector<std::size_t>(n * c * oh * ow)};
    const double* pin = input.data();
    double* pout = result.output.data();
    std::size_t* parg = result.argmax.data();

    parallel_for(n * c, 8, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t plane = lo; plane < hi; ++plane) {
            const double* ip = pin + plane * h * w;
            double* op = pout + plane * oh * ow;
            std::size_t* ap = parg + plane * oh * ow;
            for (std::size_t i = 0; i < oh; ++i) {
                for (std::size_t j = 0; j < ow; ++j) {
                    const std::size_t base = (2 * i) * w + 2 * j;
                    // row-major scan; strict > keeps the first maximum
                    std::size_t best = base;
                    double best_v = ip[base];
                    const std::size_t candidates[3] = {base + 1, base + w, base + w + 1};
                    for (std::size_t cand : candidates) {
                        if (ip[cand] > best_v) {
                            best_v = ip[cand];
                            best = cand;
                        }
                    }
                    op[i * ow + j] = best_v;
                    ap[i * ow + j] = plane * h * w + best;
                }
            }
        }
    });
    return result;
}

Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                          const Shape& input_shape) {
    if (grad_out.size() != argmax.size()) {
        throw ShapeError("maxpool2d_backward: grad_out size " + std::to_string(grad_out.size()) +
                         " does not match argmax cache size " + std::to_string(argmax.size()));
    }
    Tensor grad_in(input_shape);
    double* pgi = grad_in.data();
    const double* pgo = grad_out.data();
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= grad_in.size())
            throw ShapeError("maxpool2d_backward: argmax cache inconsistent with input shape " +
                             shape_to_string(input_shape));
        pgi[argmax[i]] += pgo[i];
    }
    return grad_in;
}

}  // namespace nrt
