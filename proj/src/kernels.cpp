#include "actshuf/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#ifdef ACTSHUF_HAVE_OPENMP
#include <omp.h>
#endif

namespace actshuf::kernels {

namespace {

#ifdef ACTSHUF_HAVE_OPENMP
std::atomic<Backend> g_backend{Backend::kOpenMP};
#else
std::atomic<Backend> g_backend{Backend::kSerial};
#endif

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

inline double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline void softmax_row(const double* s, double* p, std::size_t n) {
  double mx = s[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, s[j]);
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = std::exp(s[j] - mx);
    z += p[j];
  }
  for (std::size_t j = 0; j < n; ++j) p[j] /= z;
}

}  // namespace

void set_backend(Backend backend) {
#ifndef ACTSHUF_HAVE_OPENMP
  backend = Backend::kSerial;
#endif
  g_backend.store(backend);
}

Backend backend() { return g_backend.load(); }

bool openmp_available() {
#ifdef ACTSHUF_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

namespace serial {

void linear_forward(LinearDims d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* xr = x.data() + r * d.in;
    for (std::size_t o = 0; o < d.out; ++o) {
      const double b = bias.empty() ? 0.0 : bias[o];
      y[r * d.out + o] = b + dot(xr, w.data() + o * d.in, d.in);
    }
  }
}

void linear_backward_input(LinearDims d, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx) {
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < d.out; ++o) acc += dy[r * d.out + o] * w[o * d.in + i];
      dx[r * d.in + i] += acc;
    }
  }
}

void linear_backward_weight(LinearDims d, std::span<const double> dy,
                            std::span<const double> x, std::span<double> dw) {
  for (std::size_t o = 0; o < d.out; ++o) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < d.rows; ++r) acc += dy[r * d.out + o] * x[r * d.in + i];
      dw[o * d.in + i] += acc;
    }
  }
}

void row_softmax(std::size_t rows, std::size_t cols, std::span<const double> s,
                 std::span<double> p) {
  for (std::size_t r = 0; r < rows; ++r) softmax_row(s.data() + r * cols, p.data() + r * cols, cols);
}

void weighted_row_sum(std::size_t cols, std::size_t first, std::size_t last,
                      std::span<const double> x, std::span<const double> w,
                      std::span<double> out) {
  for (std::size_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t t = first; t <= last; ++t) acc += w[t] * x[t * cols + j];
    out[j] = acc;
  }
}

}  // namespace serial

namespace parallel {

// Each output element keeps the serial summation order; only the loop over
// independent outputs is split across threads.

void linear_forward(LinearDims d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  const auto rows = static_cast<std::ptrdiff_t>(d.rows);
  const bool big = d.rows * d.in * d.out >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * d.in;
    for (std::size_t o = 0; o < d.out; ++o) {
      const double b = bias.empty() ? 0.0 : bias[o];
      y[r * d.out + o] = b + dot(xr, w.data() + o * d.in, d.in);
    }
  }
}

void linear_backward_input(LinearDims d, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx) {
  const auto rows = static_cast<std::ptrdiff_t>(d.rows);
  const bool big = d.rows * d.in * d.out >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < d.out; ++o) acc += dy[r * d.out + o] * w[o * d.in + i];
      dx[r * d.in + i] += acc;
    }
  }
}

void linear_backward_weight(LinearDims d, std::span<const double> dy,
                            std::span<const double> x, std::span<double> dw) {
  const auto outs = static_cast<std::ptrdiff_t>(d.out);
  const bool big = d.rows * d.in * d.out >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t o = 0; o < outs; ++o) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < d.rows; ++r) acc += dy[r * d.out + o] * x[r * d.in + i];
      dw[o * d.in + i] += acc;
    }
  }
}

void row_softmax(std::size_t rows, std::size_t cols, std::span<const double> s,
                 std::span<double> p) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
  const bool big = rows * cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t r = 0; r < n; ++r) softmax_row(s.data() + r * cols, p.data() + r * cols, cols);
}

void weighted_row_sum(std::size_t cols, std::size_t first, std::size_t last,
                      std::span<const double> x, std::span<const double> w,
                      std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(cols);
  const bool big = cols * (last - first + 1) >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t t = first; t <= last; ++t) acc += w[t] * x[t * cols + j];
    out[j] = acc;
  }
}

}  // namespace parallel

#define ACTSHUF_DISPATCH(name, ...)                                \
  if (backend() == Backend::kOpenMP) return parallel::name(__VA_ARGS__); \
  return serial::name(__VA_ARGS__)

void linear_forward(LinearDims dims, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  ACTSHUF_DISPATCH(linear_forward, dims, x, w, bias, y);
}

void linear_backward_input(LinearDims dims, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx) {
  ACTSHUF_DISPATCH(linear_backward_input, dims, dy, w, dx);
}

void linear_backward_weight(LinearDims dims, std::span<const double> dy,
                            std::span<const double> x, std::span<double> dw) {
  ACTSHUF_DISPATCH(linear_backward_weight, dims, dy, x, dw);
}

void row_softmax(std::size_t rows, std::size_t cols, std::span<const double> s,
                 std::span<double> p) {
  ACTSHUF_DISPATCH(row_softmax, rows, cols, s, p);
}

void weighted_row_sum(std::size_t cols, std::size_t first, std::size_t last,
                      std::span<const double> x, std::span<const double> w,
                      std::span<double> out) {
  ACTSHUF_DISPATCH(weighted_row_sum, cols, first, last, x, w, out);
}

#undef ACTSHUF_DISPATCH

}  // namespace actshuf::kernels
