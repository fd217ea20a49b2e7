#pragma once

#include <cstdint>
#include <vector>

#include "actshuf/adam.hpp"
#include "actshuf/autodiff.hpp"

namespace actshuf {

struct ModelDims {
  int feature_dim = 16;
  int num_classes = 5;
  int attention_hidden = 256;
  int relation_hidden = 256;
  int num_clips = 5;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Per-frame MLP d -> h -> 1 with ReLU, followed by a sigmoid.
struct AttentionNetParams {
  Tensor w1;  // h x d
  Tensor b1;  // h
  Tensor w2;  // 1 x h
  Tensor b2;  // 1
};

/// Bias-free linear classifier over C actions plus background.
struct ClassifierParams {
  Tensor weights;  // (C+1) x d
};

/// Pairwise relation layer and the order classifier over N! permutations.
struct OrderNetParams {
  int num_clips = 5;
  Tensor w1;  // h_rel x 2d
  Tensor b1;  // h_rel
  Tensor w2;  // N! x (C(N,2) h_rel)
  Tensor b2;  // N!
};

struct Model {
  ModelDims dims;
  AttentionNetParams attention;
  ClassifierParams classifier;
  OrderNetParams order;

  /// Glorot-uniform weights and zero biases. The classifier starts at zero:
  /// a random classifier on large-magnitude features biases the first
  /// attention updates toward whichever side it happens to favour.
  static Model init(const ModelDims& dims, std::uint64_t seed);

  /// Every parameter in a fixed order shared by ModelVars::all and AdamState.
  std::vector<ParamRef> params();
  std::vector<const Tensor*> params() const;
};

struct AttentionVars {
  Var w1, b1, w2, b2;
};
struct ClassifierVars {
  Var weights;
};
struct OrderVars {
  int num_clips = 5;
  Var w1, b1, w2, b2;
};

struct ModelVars {
  AttentionVars attention;
  ClassifierVars classifier;
  OrderVars order;
  std::vector<Var> all;  // same order as Model::params()
};

/// Puts the model's parameters on `tape`, as watched leaves when `watch`.
ModelVars bind(Tape& tape, const Model& model, bool watch);

std::uint64_t factorial(int n);

}  // namespace actshuf
