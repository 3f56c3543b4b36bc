#pragma once

#include <cstdint>
#include <vector>

#include "s2fgl/autodiff.hpp"
#include "s2fgl/graph.hpp"

namespace s2fgl {

enum class Backbone { kGcn, kAcm };

struct ModelDims {
  int in_dim = 0;
  int hidden = 64;
  int num_classes = 0;
};

// Flat ordered parameter bundle; aggregation relies on the fixed order.
// GCN: {W1, W2}. ACM: per layer {W_low, W_high, W_id, s_low, s_high, s_id}.
struct ModelParams {
  Backbone backbone = Backbone::kGcn;
  ModelDims dims;
  std::vector<ad::Parameter> weights;

  static ModelParams glorot_init(Backbone backbone, const ModelDims& dims, std::uint64_t seed);

  std::vector<ad::Parameter*> parameters();
  void zero_grads();
  // Copies parameter values (broadcast); shapes must match.
  void assign_from(const ModelParams& src);
  int scalar_count() const;
};

// Penultimate embeddings (the per-node feature vectors used by prototypes
// and both alignment losses) plus class logits.
struct ModelOutput {
  DenseMatrix hidden;
  DenseMatrix logits;
};

struct TapeForward {
  ad::Value hidden;
  ad::Value logits;
};

// I - A_hat, the high-pass channel operator of the ACM backbone.
DenseMatrix high_pass_operator(const DenseMatrix& a_hat);

// Training-path forwards; gradients flow into `params`. a_hat is the
// self-loop normalized adjacency; i_minus_a_hat the high-pass operator.
TapeForward gcn_forward(ad::Tape& tape, ModelParams& params, const DenseMatrix& features,
                        const DenseMatrix& a_hat);
TapeForward acm_forward(ad::Tape& tape, ModelParams& params, const DenseMatrix& features,
                        const DenseMatrix& a_hat, const DenseMatrix& i_minus_a_hat);
TapeForward model_forward(ad::Tape& tape, ModelParams& params, const Graph& g);

// Inference-path forwards (no gradients recorded).
ModelOutput gcn_forward(const ModelParams& params, const Graph& g);
ModelOutput acm_forward(const ModelParams& params, const Graph& g);
ModelOutput model_forward(const ModelParams& params, const Graph& g);
ModelOutput model_forward_cached(const ModelParams& params, const DenseMatrix& features,
                                 const DenseMatrix& a_hat, const DenseMatrix& i_minus_a_hat);

}  // namespace s2fgl
