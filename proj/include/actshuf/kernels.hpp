#pragma once

// Dense inner loops used by the autodiff ops. Every kernel exists twice: a
// serial reference in `kernels::serial` and an OpenMP version in
// `kernels::parallel`. Both compute each output element with the same
// summation order, so their results are bit-identical; tests rely on that.

#include <cstddef>
#include <span>

namespace actshuf::kernels {

enum class Backend { kSerial, kOpenMP };

void set_backend(Backend backend);
Backend backend();
bool openmp_available();

/// Row-batched affine map: Y[r, o] = bias[o] + sum_i X[r, i] * W[o, i].
/// `bias` may be empty. Shapes: X rows x in, W out x in, Y rows x out.
struct LinearDims {
  std::size_t rows;
  std::size_t in;
  std::size_t out;
};

namespace serial {
void linear_forward(LinearDims dims, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);
// dX[r, i] += sum_o dY[r, o] * W[o, i]
void linear_backward_input(LinearDims dims, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx);
// dW[o, i] += sum_r dY[r, o] * X[r, i]
void linear_backward_weight(LinearDims dims, std::span<const double> dy,
                            std::span<const double> x, std::span<double> dw);
// P[r, :] = softmax(S[r, :]) with max subtraction.
void row_softmax(std::size_t rows, std::size_t cols, std::span<const double> s,
                 std::span<double> p);
// out[j] = sum_{t in [first, last]} w[t] * X[t, j]
void weighted_row_sum(std::size_t cols, std::size_t first, std::size_t last,
                      std::span<const double> x, std::span<const double> w,
                      std::span<double> out);
}  // namespace serial

namespace parallel {
void linear_forward(LinearDims dims, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);
void linear_backward_input(LinearDims dims, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx);
void linear_backward_weight(LinearDims dims, std::span<const double> dy,
                            std::span<const double> x, std::span<double> dw);
void row_softmax(std::size_t rows, std::size_t cols, std::span<const double> s,
                 std::span<double> p);
void weighted_row_sum(std::size_t cols, std::size_t first, std::size_t last,
                      std::span<const double> x, std::span<const double> w,
                      std::span<double> out);
}  // namespace parallel

// Dispatch on the active backend.
void linear_forward(LinearDims dims, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);
void linear_backward_input(LinearDims dims, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx);
void linear_backward_weight(LinearDims dims, std::span<const double> dy,
                            std::span<const double> x, std::span<double> dw);
void row_softmax(std::size_t rows, std::size_t cols, std::span<const double> s,
                 std::span<double> p);
void weighted_row_sum(std::size_t cols, std::size_t first, std::size_t last,
                      std::span<const double> x, std::span<const double> w,
                      std::span<double> out);

}  // namespace actshuf::kernels
