#include "doctest.h"

#include <cmath>
#include <map>

#include "actshuf/inter_shuffle.hpp"
#include "support.hpp"

using namespace actshuf;

namespace {

// Attention that is high exactly on the ground-truth frames.
std::vector<Tensor> oracle_attention(const Dataset& ds) {
  std::vector<Tensor> out;
  for (const Video& v : ds.videos) {
    Tensor lam(Shape{v.features.length()}, 0.1);
    for (const auto& g : v.ground_truth) {
      for (int f = g.start; f <= g.end; ++f) lam[static_cast<std::size_t>(f - 1)] = 0.9;
    }
    out.push_back(lam);
  }
  return out;
}

}  // namespace

TEST_CASE("inflation clamps to the video") {
  CHECK(inflate({5, 9}, 2, 20) == Interval{3, 11});
  CHECK(inflate({2, 9}, 3, 10) == Interval{1, 10});
  CHECK(inflate({4, 6}, 0, 10) == Interval{4, 6});
}

TEST_CASE("the pool holds inflated ground-truth segments under oracle attention") {
  const Dataset ds = generate_synthetic(SynthConfig{}, 21);
  const ActionPool pool = build_pool(ds, oracle_attention(ds), {2, 0.5, 3});
  std::size_t expected = 0;
  for (std::size_t i = 0; i < ds.videos.size(); ++i) {
    const Video& v = ds.videos[i];
    expected += v.ground_truth.size();
    const auto& entries = pool.by_class.at(v.label.classes[0]);
    for (const auto& g : v.ground_truth) {
      const Interval want = inflate(g.interval(), 2, static_cast<int>(v.features.length()));
      const bool found = std::any_of(entries.begin(), entries.end(), [&](const PoolEntry& e) {
        return e.video_index == i && e.interval == want;
      });
      CHECK(found);
    }
  }
  CHECK(pool.size() == expected);
  for (const auto& [cls, entries] : pool.by_class) {
    for (const PoolEntry& e : entries) {
      CHECK(e.interval.start >= 1);
      CHECK(e.interval.end <= static_cast<int>(ds.videos[e.video_index].features.length()));
      CHECK(ds.videos[e.video_index].label.classes[0] == cls);
    }
  }
  CHECK_THROWS(build_pool(ds, std::vector<Tensor>{}, PoolOptions{}));
}

TEST_CASE("multi-label videos do not feed the pool") {
  Dataset ds = testing::small_dataset(8, 3, 2, 30, 3);
  ds.videos[0].label.classes = {1, 2};
  const ActionPool pool = build_pool(ds, oracle_attention(ds), {});
  for (const auto& [cls, entries] : pool.by_class) {
    for (const PoolEntry& e : entries) CHECK(e.video_index == 1);
  }
}

TEST_CASE("generated videos copy source rows bit-exactly") {
  const Dataset ds = generate_synthetic(SynthConfig{}, 22);
  const ActionPool pool = build_pool(ds, oracle_attention(ds), {2, 0.5, 3});
  std::mt19937_64 rng(1);
  const auto gen = augment_training_set(ds, pool, {3, 2, 5}, rng);
  CHECK(gen.size() == 3 * ds.videos.size());
  std::map<std::string, const Video*> by_id;
  for (const Video& v : ds.videos) by_id[v.features.video_id] = &v;
  for (const GeneratedVideo& g : gen) {
    CHECK(g.provenance.size() >= 2);
    CHECK(g.provenance.size() <= 5);
    std::size_t row = 0;
    for (const Provenance& p : g.provenance) {
      const Video& src = *by_id.at(p.video_id);
      CHECK(src.label.classes[0] == g.class_id);
      for (int f = p.interval.start; f <= p.interval.end; ++f, ++row) {
        for (std::size_t j = 0; j < src.features.dim(); ++j) {
          CHECK(g.features.frames.at(row, j) == src.features.frames.at(static_cast<std::size_t>(f - 1), j));
        }
      }
    }
    CHECK(row == g.features.length());
  }
}

TEST_CASE("generated classes are balanced within one") {
  const Dataset ds = generate_synthetic(SynthConfig{}, 23);
  const ActionPool pool = build_pool(ds, oracle_attention(ds), {});
  for (int factor : {1, 2, 3}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(factor));
    const auto gen = augment_training_set(ds, pool, {factor, 2, 5}, rng);
    CHECK(gen.size() == static_cast<std::size_t>(factor) * ds.videos.size());
    std::map<int, int> hist;
    for (const GeneratedVideo& g : gen) ++hist[g.class_id];
    int lo = 1 << 30, hi = 0;
    for (const auto& [c, n] : hist) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hist.size() == pool.by_class.size());
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("augmentation edge cases") {
  const Dataset ds = testing::small_dataset(8, 3, 3, 30, 4);
  std::mt19937_64 rng(1);
  ActionPool empty;
  CHECK_THROWS(augment_training_set(ds, empty, {1, 2, 5}, rng));
  CHECK(augment_training_set(ds, empty, {0, 2, 5}, rng).empty());
  CHECK_THROWS(synthesize_video(empty, ds, 1, 2, rng, "x"));
  const ActionPool pool = build_pool(ds, oracle_attention(ds), {});
  CHECK_THROWS(augment_training_set(ds, pool, {1, 3, 2}, rng));
  const int cls = pool.by_class.begin()->first;
  const GeneratedVideo g = synthesize_video(pool, ds, cls, 4, rng, "gen");
  CHECK(g.provenance.size() == 4);
  int len = 0;
  for (const Provenance& p : g.provenance) len += p.interval.frames();
  CHECK(static_cast<int>(g.features.length()) == len);
  const Dataset as = as_dataset({g}, 3);
  CHECK(as.videos[0].label.classes == std::vector<int>{cls});
  CHECK(as.videos[0].provenance == g.provenance);
}

TEST_CASE("inter loss equals the classification loss with a one-hot label") {
  Model m = testing::small_model(8, 3, 2);
  std::mt19937_64 rng(3);
  const Tensor x = testing::random_tensor({20, 8}, rng);
  Tape t;
  const ModelVars v = bind(t, m, false);
  Var xv = t.constant(x);
  Var lam = compute_attention(xv, v.attention);
  const double direct = classification_loss(pool_action(xv, lam, {1, 20}), pool_background(xv, lam, {1, 20}),
                                            VideoLabel::one_hot(3, 2), 0.5, v.classifier.weights)
                            .value()
                            .item();
  CHECK(inter_loss(xv, v.attention, v.classifier.weights, 2, 3, 0.5).value().item() == direct);
  const double action_only = classification_loss(pool_action(xv, lam, {1, 20}), pool_background(xv, lam, {1, 20}),
                                                 VideoLabel::one_hot(3, 2), 0.0, v.classifier.weights)
                                 .value()
                                 .item();
  CHECK(inter_loss(xv, v.attention, v.classifier.weights, 2, 3, 0.0).value().item() == action_only);
}

TEST_CASE("inter loss passes finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Model m = testing::small_model(8, 3, seed);
    const Dataset ds = testing::small_dataset(8, 3, 4, 30, seed);
    const ActionPool pool = build_pool(ds, oracle_attention(ds), {});
    std::mt19937_64 rng(seed);
    const GeneratedVideo g = synthesize_video(pool, ds, pool.by_class.begin()->first, 3, rng, "g");
    const double err = testing::model_gradient_error(m, [&](Tape& t, const ModelVars& v) {
      return inter_loss(t.constant(g.features.frames), v.attention, v.classifier.weights, g.class_id, 3, 1.0);
    });
    CHECK(err < 1e-6);
  }
}
