#include "actshuf/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "actshuf/kernels.hpp"

namespace actshuf {

const Tensor& Var::value() const { return tape_->nodes_[id_].value; }

bool Var::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::watch(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (!v.valid()) continue;
    if (v.tape_ != this) throw Error("op mixes variables from different tapes");
    needs = needs || v.requires_grad();
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw Error("backward() on a variable from another tape");
  if (loss.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     shape_to_string(loss.shape()));
  }
  if (backward_done_) throw Error("backward() already ran on this tape");
  backward_done_ = true;
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
    // Copy: the closure may grow other gradient buffers but never this one.
    const Tensor g = node.grad;
    node.backward(*this, g);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id_);
  if (node.grad.empty()) return Tensor::zeros_like(node.value);
  return node.grad;
}

Tensor& Tape::grad_buffer(Var v) {
  Node& node = nodes_.at(v.id_);
  if (node.grad.empty()) node.grad = Tensor::zeros_like(node.value);
  return node.grad;
}

Tensor Tape::freeze(Tensor value) {
  if (replaying_) {
    if (replay_cursor_ >= replay_.size()) {
      throw Error("replayed tape froze more values than were recorded");
    }
    Tensor v = replay_[replay_cursor_++];
    if (v.shape() != value.shape()) {
      throw ShapeError("replayed constant has shape " + shape_to_string(v.shape()) +
                       ", expected " + shape_to_string(value.shape()));
    }
    frozen_.push_back(v);
    return v;
  }
  frozen_.push_back(value);
  return value;
}

void Tape::replay(std::vector<Tensor> values) {
  replay_ = std::move(values);
  replay_cursor_ = 0;
  replaying_ = true;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor softmax(const Tensor& v) {
  if (v.empty()) throw ShapeError("softmax of an empty tensor");
  Tensor out = Tensor::zeros_like(v);
  kernels::serial::row_softmax(1, v.size(), v.values(), out.values());
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw Error("gaussian smoothing needs sigma > 0");
  sigma = std::max(sigma, kMinSmoothingSigma);
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = v;
    total += v;
  }
  for (double& t : taps) t /= total;
  return taps;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

Tensor gaussian_smooth_1d(const Tensor& s, double sigma) {
  if (s.rank() != 1 || s.empty()) {
    throw ShapeError("gaussian smoothing expects a non-empty vector, got " +
                     shape_to_string(s.shape()));
  }
  const std::vector<double> taps = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t n = s.size();
  Tensor out(Shape{n});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      acc += taps[static_cast<std::size_t>(k + radius)] *
             s[reflect_index(static_cast<std::ptrdiff_t>(i) + k, n)];
    }
    out[i] = acc;
  }
  return out;
}

namespace ad {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": operand shapes " + shape_to_string(a.shape()) +
                     " and " + shape_to_string(b.shape()) + " differ");
  }
}

void require_vector(const Var& a, const char* op, const char* operand) {
  if (a.value().rank() != 1) {
    throw ShapeError(std::string(op) + ": " + operand + " must be a vector, got " +
                     shape_to_string(a.shape()));
  }
}

template <typename F>
Tensor map_values(const Tensor& a, F f) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value()[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value()[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out = map_values(a.value(), [c](double v) { return c * v; });
  return a.tape().record(std::move(out), {a}, [a, c](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var one_minus(Var a) {
  Tensor out = map_values(a.value(), [](double v) { return 1.0 - v; });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

Var abs(Var a) {
  Tensor out = map_values(a.value(), [](double v) { return std::fabs(v); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = a.value()[i];
      ga[i] += v > 0 ? g[i] : (v < 0 ? -g[i] : 0.0);
    }
  });
}

Var clamp_min(Var a, double lo) {
  Tensor out = map_values(a.value(), [lo](double v) { return std::max(v, lo); });
  return a.tape().record(std::move(out), {a}, [a, lo](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (a.value()[i] >= lo) ga[i] += g[i];
    }
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  return a.tape().record(Tensor::scalar(acc), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
}

Var mean(Var a) {
  if (a.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var matvec_add(Var w, Var x, Var b) {
  const Tensor& wv = w.value();
  if (wv.rank() != 2) {
    throw ShapeError("matvec: W must be a matrix, got " + shape_to_string(wv.shape()));
  }
  require_vector(x, "matvec", "x");
  const std::size_t m = wv.rows();
  const std::size_t n = wv.cols();
  if (x.size() != n) {
    throw ShapeError("matvec: x has shape " + shape_to_string(x.shape()) + ", expected [" +
                     std::to_string(n) + "]");
  }
  if (b.valid() && b.shape() != Shape{m}) {
    throw ShapeError("matvec: b has shape " + shape_to_string(b.shape()) + ", expected [" +
                     std::to_string(m) + "]");
  }
  Tensor out(Shape{m});
  const kernels::LinearDims dims{1, n, m};
  kernels::linear_forward(dims, x.value().values(), wv.values(),
                          b.valid() ? b.value().values() : std::span<const double>{},
                          out.values());
  return w.tape().record(std::move(out), {w, x, b}, [w, x, b, dims](Tape& t, const Tensor& g) {
    if (w.requires_grad()) {
      kernels::linear_backward_weight(dims, g.values(), x.value().values(),
                                      t.grad_buffer(w).values());
    }
    if (x.requires_grad()) {
      kernels::linear_backward_input(dims, g.values(), w.value().values(),
                                     t.grad_buffer(x).values());
    }
    if (b.valid() && b.requires_grad()) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var matvec(Var w, Var x) { return matvec_add(w, x, Var{}); }

Var linear(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 2 || wv.rank() != 2) {
    throw ShapeError("linear: expected matrices, got X " + shape_to_string(xv.shape()) +
                     " and W " + shape_to_string(wv.shape()));
  }
  const kernels::LinearDims dims{xv.rows(), xv.cols(), wv.rows()};
  if (wv.cols() != dims.in) {
    throw ShapeError("linear: W has shape " + shape_to_string(wv.shape()) + ", expected [" +
                     std::to_string(dims.out) + "x" + std::to_string(dims.in) + "]");
  }
  if (b.valid() && b.shape() != Shape{dims.out}) {
    throw ShapeError("linear: b has shape " + shape_to_string(b.shape()) + ", expected [" +
                     std::to_string(dims.out) + "]");
  }
  Tensor out(Shape{dims.rows, dims.out});
  kernels::linear_forward(dims, xv.values(), wv.values(),
                          b.valid() ? b.value().values() : std::span<const double>{},
                          out.values());
  return x.tape().record(std::move(out), {x, w, b}, [x, w, b, dims](Tape& t, const Tensor& g) {
    if (w.requires_grad()) {
      kernels::linear_backward_weight(dims, g.values(), x.value().values(),
                                      t.grad_buffer(w).values());
    }
    if (x.requires_grad()) {
      kernels::linear_backward_input(dims, g.values(), w.value().values(),
                                     t.grad_buffer(x).values());
    }
    if (b.valid() && b.requires_grad()) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t r = 0; r < dims.rows; ++r) {
        for (std::size_t o = 0; o < dims.out; ++o) gb[o] += g[r * dims.out + o];
      }
    }
  });
}

Var relu(Var a) {
  if (a.size() == 0) throw ShapeError("relu of an empty tensor");
  Tensor out = map_values(a.value(), [](double v) { return v > 0 ? v : 0.0; });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (a.value()[i] > 0) ga[i] += g[i];
    }
  });
}

Var sigmoid(Var a) {
  if (a.size() == 0) throw ShapeError("sigmoid of an empty tensor");
  Tensor out = map_values(a.value(), [](double v) { return actshuf::sigmoid(v); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = actshuf::sigmoid(a.value()[i]);
      ga[i] += g[i] * y * (1.0 - y);
    }
  });
}

Var softmax(Var a) {
  require_vector(a, "softmax", "input");
  Tensor out = actshuf::softmax(a.value());
  Var p = a.tape().constant(out);
  return a.tape().record(std::move(out), {a}, [a, p](Tape& t, const Tensor& g) {
    const Tensor& pv = p.value();
    double gp = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gp += g[i] * pv[i];
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += pv[i] * (g[i] - gp);
  });
}

Var cross_entropy(Var p, const Tensor& y) {
  if (p.size() != y.size()) {
    throw ShapeError("cross_entropy: prediction has " + std::to_string(p.size()) +
                     " entries, target has " + std::to_string(y.size()));
  }
  if (p.size() == 0) throw ShapeError("cross_entropy of empty vectors");
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) loss -= y[i] * std::log(std::max(p.value()[i], kLogFloor));
  }
  return p.tape().record(Tensor::scalar(loss), {p}, [p, y](Tape& t, const Tensor& g) {
    Tensor& gp = t.grad_buffer(p);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double pi = p.value()[i];
      if (y[i] != 0.0 && pi > kLogFloor) gp[i] -= g[0] * y[i] / pi;
    }
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  std::vector<double> values;
  for (const Var& v : parts) {
    if (v.value().rank() > 1) {
      throw ShapeError("concat expects vectors, got " + shape_to_string(v.shape()));
    }
    values.insert(values.end(), v.value().values().begin(), v.value().values().end());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(
      Tensor::vector(std::move(values)), parts, [inputs](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (const Var& v : inputs) {
          const std::size_t n = v.size();
          if (v.requires_grad()) {
            Tensor& gv = t.grad_buffer(v);
            for (std::size_t i = 0; i < n; ++i) gv[i] += g[offset + i];
          }
          offset += n;
        }
      });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var weighted_mean_rows(Var x, Var w, std::size_t first, std::size_t last, double stabilizer) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) {
    throw ShapeError("weighted_mean_rows: X must be a matrix, got " +
                     shape_to_string(xv.shape()));
  }
  if (w.shape() != Shape{xv.rows()}) {
    throw ShapeError("weighted_mean_rows: weights have shape " + shape_to_string(w.shape()) +
                     ", expected [" + std::to_string(xv.rows()) + "]");
  }
  if (first > last || last >= xv.rows()) {
    throw ShapeError("weighted_mean_rows: window [" + std::to_string(first) + ", " +
                     std::to_string(last) + "] outside " + std::to_string(xv.rows()) + " rows");
  }
  const std::size_t d = xv.cols();
  double z = stabilizer;
  for (std::size_t t = first; t <= last; ++t) z += w.value()[t];
  if (z == 0.0) {
    throw DegenerateWindowError("pooling weights sum to zero over rows [" +
                                std::to_string(first) + ", " + std::to_string(last) + "]");
  }
  Tensor out(Shape{d});
  kernels::weighted_row_sum(d, first, last, xv.values(), w.value().values(), out.values());
  for (double& v : out.values()) v /= z;
  Var m = x.tape().constant(out);
  return x.tape().record(
      std::move(out), {x, w}, [x, w, m, first, last, z, d](Tape& t, const Tensor& g) {
        const Tensor& mv = m.value();
        if (x.requires_grad()) {
          Tensor& gx = t.grad_buffer(x);
          for (std::size_t r = first; r <= last; ++r) {
            const double s = w.value()[r] / z;
            for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += s * g[j];
          }
        }
        if (w.requires_grad()) {
          Tensor& gw = t.grad_buffer(w);
          for (std::size_t r = first; r <= last; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += g[j] * (x.value()[r * d + j] - mv[j]);
            gw[r] += acc / z;
          }
        }
      });
}

Var gaussian_smooth(Var s, double sigma) {
  Tensor out = gaussian_smooth_1d(s.value(), sigma);
  return s.tape().record(std::move(out), {s}, [s, sigma](Tape& t, const Tensor& g) {
    const std::vector<double> taps = gaussian_kernel(sigma);
    const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
    const std::size_t n = g.size();
    Tensor& gs = t.grad_buffer(s);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        gs[reflect_index(static_cast<std::ptrdiff_t>(i) + k, n)] +=
            taps[static_cast<std::size_t>(k + radius)] * g[i];
      }
    }
  });
}

Var detach(Var a) { return a.tape().constant(a.tape().freeze(a.value())); }

}  // namespace ad
}  // namespace actshuf
