#include "actshuf/model.hpp"

#include <cmath>
#include <random>

namespace actshuf {

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

namespace {

Tensor glorot(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor w(Shape{out, in});
  for (double& v : w.values()) v = u(rng);
  return w;
}

}  // namespace

Model Model::init(const ModelDims& dims, std::uint64_t seed) {
  if (dims.feature_dim < 1 || dims.num_classes < 1 || dims.attention_hidden < 1 ||
      dims.relation_hidden < 1 || dims.num_clips < 2) {
    throw Error("invalid model dimensions");
  }
  std::mt19937_64 rng(seed);
  const auto d = static_cast<std::size_t>(dims.feature_dim);
  const auto h = static_cast<std::size_t>(dims.attention_hidden);
  const auto hr = static_cast<std::size_t>(dims.relation_hidden);
  const auto n = dims.num_clips;
  const std::size_t pairs = static_cast<std::size_t>(n * (n - 1) / 2);
  const std::size_t orders = factorial(n);

  Model m;
  m.dims = dims;
  m.attention.w1 = glorot(h, d, rng);
  m.attention.b1 = Tensor(Shape{h});
  m.attention.w2 = glorot(1, h, rng);
  m.attention.b2 = Tensor(Shape{1});
  m.classifier.weights = Tensor(Shape{static_cast<std::size_t>(dims.num_classes + 1), d});
  m.order.num_clips = n;
  m.order.w1 = glorot(hr, 2 * d, rng);
  m.order.b1 = Tensor(Shape{hr});
  m.order.w2 = glorot(orders, pairs * hr, rng);
  m.order.b2 = Tensor(Shape{orders});
  return m;
}

std::vector<ParamRef> Model::params() {
  return {{"attention.w1", &attention.w1}, {"attention.b1", &attention.b1},
          {"attention.w2", &attention.w2}, {"attention.b2", &attention.b2},
          {"classifier.weights", &classifier.weights},
          {"order.w1", &order.w1},         {"order.b1", &order.b1},
          {"order.w2", &order.w2},         {"order.b2", &order.b2}};
}

std::vector<const Tensor*> Model::params() const {
  return {&attention.w1, &attention.b1, &attention.w2, &attention.b2, &classifier.weights,
          &order.w1,     &order.b1,     &order.w2,     &order.b2};
}

ModelVars bind(Tape& tape, const Model& model, bool watch) {
  auto leaf = [&](const Tensor& t) { return watch ? tape.watch(t) : tape.constant(t); };
  ModelVars v;
  v.attention = {leaf(model.attention.w1), leaf(model.attention.b1), leaf(model.attention.w2),
                 leaf(model.attention.b2)};
  v.classifier = {leaf(model.classifier.weights)};
  v.order = {model.order.num_clips, leaf(model.order.w1), leaf(model.order.b1),
             leaf(model.order.w2), leaf(model.order.b2)};
  v.all = {v.attention.w1, v.attention.b1, v.attention.w2, v.attention.b2, v.classifier.weights,
           v.order.w1,     v.order.b1,     v.order.w2,     v.order.b2};
  return v;
}

}  // namespace actshuf
