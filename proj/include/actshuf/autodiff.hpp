#pragma once

// Tensor-granularity reverse-mode differentiation.
//
// A Tape owns every value computed during one forward pass. Ops append a node
// holding the output value and a closure that scatters the output gradient
// into the inputs. Nodes are appended in evaluation order, which is already a
// topological order, so backward() is a single reverse sweep.
//
// Stop-gradient values go through Tape::freeze(). A tape records everything it
// froze; another tape can replay that list so that re-evaluating the same
// objective at nearby parameters reuses the identical constants. The
// finite-difference checks depend on this.

#include <functional>
#include <span>
#include <vector>

#include "actshuf/tensor.hpp"

namespace actshuf {

class Tape;

class DegenerateWindowError : public Error {
 public:
  using Error::Error;
};

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is wanted (a parameter or a watched input).
  Var watch(Tensor value);
  /// Appends an op output. The node requires a gradient iff any input does;
  /// `fn` is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

  void backward(Var loss);

  /// Gradient of the last backward() loss with respect to `v`; zeros when no
  /// gradient reached it.
  Tensor grad(Var v) const;

  /// Accumulation target for backward closures. Allocates zeros on first use.
  Tensor& grad_buffer(Var v);

  /// Returns `value` as a stop-gradient constant, or the next replayed value
  /// when replay is active.
  Tensor freeze(Tensor value);
  const std::vector<Tensor>& frozen() const { return frozen_; }
  void replay(std::vector<Tensor> values);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> frozen_;
  std::vector<Tensor> replay_;
  std::size_t replay_cursor_ = 0;
  bool replaying_ = false;
  bool backward_done_ = false;
};

namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// 1 - a, elementwise.
Var one_minus(Var a);
Var abs(Var a);
Var clamp_min(Var a, double lo);
Var sum(Var a);
Var mean(Var a);

/// W x + b for W [m x n], x [n], b [m].
Var matvec_add(Var w, Var x, Var b);
Var matvec(Var w, Var x);
/// X W^T + b for X [rows x n], W [m x n], b [m] (b may be invalid for none).
Var linear(Var x, Var w, Var b = Var{});

Var relu(Var a);
Var sigmoid(Var a);
/// Softmax of a vector, computed with max subtraction.
Var softmax(Var a);

inline constexpr double kLogFloor = 1e-12;
/// -sum_c y_c log(max(p_c, kLogFloor)); `y` is a constant target distribution.
Var cross_entropy(Var p, const Tensor& y);

Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var reshape(Var a, Shape shape);

/// sum_t w_t x_t / (sum_t w_t + stabilizer) over rows first..last (0-based,
/// inclusive). Throws DegenerateWindowError when the denominator is zero.
Var weighted_mean_rows(Var x, Var w, std::size_t first, std::size_t last,
                       double stabilizer = 0.0);

Var gaussian_smooth(Var s, double sigma);

/// Stop-gradient copy of `a`, routed through Tape::freeze.
Var detach(Var a);

}  // namespace ad

// Tape-free numerics shared by the ops above.

inline constexpr double kMinSmoothingSigma = 0.25;

double sigmoid(double x);
Tensor softmax(const Tensor& v);
/// Normalized Gaussian taps for offsets -r..r, r = ceil(3 sigma); sigma is
/// clamped to kMinSmoothingSigma. Throws for sigma <= 0.
std::vector<double> gaussian_kernel(double sigma);
/// Index into [0, n) after mirror reflection about the end samples.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);
Tensor gaussian_smooth_1d(const Tensor& s, double sigma);

}  // namespace actshuf
