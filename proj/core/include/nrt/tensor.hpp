#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nrt/error.hpp"

namespace nrt {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

// Dense row-major array of 64-bit floats. The numeric lingua franca of the
// whole engine: images are [N,C,H,W], label matrices [N,K], kernels
// [F,C,kh,kw]. All operations below are pure (inputs never mutated) and keep
// a fixed accumulation order, so results are reproducible bitwise.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape);                             // zero-filled
    Tensor(Shape shape, std::vector<double> values);          // takes ownership

    static Tensor full(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Tensor reshaped(Shape new_shape) const;  // same element count required

    // Throws TrainError naming `context` if any value is NaN/Inf.
    void ensure_finite(const char* context) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

// ---- element-wise suite ----------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
// Gradient of relu at the cached input: passes grad through where x > 0.
// The subgradient at x == 0 is fixed to 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

double sum(const Tensor& a);
double mean(const Tensor& a);

// Index of the maximum along `axis` of a rank-2 tensor; ties break to the
// lowest index.
std::vector<std::size_t> argmax(const Tensor& a, std::size_t axis);

// ---- matrix multiply -------------------------------------------------------

// [m x k] * [k x p] -> [m x p].
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- 2-D convolution (cross-correlation convention) ------------------------
//
// "Convolution" everywhere in this engine means cross-correlation: the kernel
// is slid over the input without flipping. The backward pass below is the
// exact adjoint of this convention.

// input [N,C,H,W], kernels [F,C,kh,kw], bias [F] -> [N,F,H',W'] with
// H' = floor((H + 2*padding - kh)/stride) + 1, same for W'.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      std::size_t padding, std::size_t stride);

struct Conv2dGrads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
};

// Exact gradients of conv2d_forward given the upstream gradient and the
// cached forward input.
Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& kernels,
                            std::size_t padding, std::size_t stride);

// ---- 2x2/stride-2 max pooling ----------------------------------------------

struct MaxPool2dResult {
    Tensor output;                    // [N,C,H/2,W/2]
    std::vector<std::size_t> argmax;  // flat input index per output element
};

// Requires even H and W (pad-free pooling only). Window ties break to the
// first element in row-major scan order, which makes backward deterministic.
MaxPool2dResult maxpool2d_forward(const Tensor& input);

Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                          const Shape& input_shape);

}  // namespace nrt
