#include "s2fgl/gnn.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "s2fgl/errors.hpp"
#include "s2fgl/rng.hpp"

namespace s2fgl {

namespace {

DenseMatrix glorot_uniform(int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix w(fan_in, fan_out);
  for (double& v : w.data()) v = rng.uniform_range(-a, a);
  return w;
}

struct LayerWeights {
  ad::Value w_low, w_high, w_id, s_low, s_high, s_id;
};

// One simplified adaptive-channel-mixing layer: low-pass A_hat X W_low,
// high-pass (I - A_hat) X W_high, identity X W_id, blended per node by a
// row-softmax over per-channel scores of the pre-propagation transforms.
ad::Value acm_layer(ad::Tape& t, ad::Value x, const LayerWeights& w, ad::Value a_hat,
                    ad::Value ia_hat) {
  const ad::Value base_low = t.matmul(x, w.w_low);
  const ad::Value base_high = t.matmul(x, w.w_high);
  const ad::Value base_id = t.matmul(x, w.w_id);

  const ad::Value chan_low = t.matmul(a_hat, base_low);
  const ad::Value chan_high = t.matmul(ia_hat, base_high);

  const ad::Value mix = t.softmax_rows(t.concat_cols(
      {t.matmul(base_low, w.s_low), t.matmul(base_high, w.s_high), t.matmul(base_id, w.s_id)}));

  return t.add(t.add(t.mul_col(chan_low, t.col(mix, 0)), t.mul_col(chan_high, t.col(mix, 1))),
               t.mul_col(base_id, t.col(mix, 2)));
}

TapeForward build_forward(ad::Tape& t, Backbone backbone, const std::vector<ad::Value>& w,
                          ad::Value x, ad::Value a_hat, ad::Value ia_hat) {
  if (backbone == Backbone::kGcn) {
    const ad::Value hidden = t.relu(t.matmul(t.matmul(a_hat, x), w[0]));
    const ad::Value logits = t.matmul(t.matmul(a_hat, hidden), w[1]);
    return {hidden, logits};
  }
  const LayerWeights l1{w[0], w[1], w[2], w[3], w[4], w[5]};
  const LayerWeights l2{w[6], w[7], w[8], w[9], w[10], w[11]};
  const ad::Value hidden = t.relu(acm_layer(t, x, l1, a_hat, ia_hat));
  const ad::Value logits = acm_layer(t, hidden, l2, a_hat, ia_hat);
  return {hidden, logits};
}

void check_feature_dim(const ModelParams& params, const DenseMatrix& features) {
  if (features.cols() != params.dims.in_dim) {
    throw DimensionError("forward: feature dim " + std::to_string(features.cols()) +
                         " does not match model in_dim " + std::to_string(params.dims.in_dim));
  }
}

}  // namespace

DenseMatrix high_pass_operator(const DenseMatrix& a_hat) {
  DenseMatrix ia = scale(a_hat, -1.0);
  for (int i = 0; i < ia.rows(); ++i) ia(i, i) += 1.0;
  return ia;
}

ModelParams ModelParams::glorot_init(Backbone backbone, const ModelDims& dims,
                                     std::uint64_t seed) {
  ModelParams p;
  p.backbone = backbone;
  p.dims = dims;
  Rng rng(seed);
  if (backbone == Backbone::kGcn) {
    p.weights.emplace_back(glorot_uniform(dims.in_dim, dims.hidden, rng));
    p.weights.emplace_back(glorot_uniform(dims.hidden, dims.num_classes, rng));
    return p;
  }
  for (const auto& [fan_in, fan_out] :
       {std::pair{dims.in_dim, dims.hidden}, std::pair{dims.hidden, dims.num_classes}}) {
    for (int c = 0; c < 3; ++c) p.weights.emplace_back(glorot_uniform(fan_in, fan_out, rng));
    for (int c = 0; c < 3; ++c) p.weights.emplace_back(glorot_uniform(fan_out, 1, rng));
  }
  return p;
}

std::vector<ad::Parameter*> ModelParams::parameters() {
  std::vector<ad::Parameter*> out;
  out.reserve(weights.size());
  for (auto& w : weights) out.push_back(&w);
  return out;
}

void ModelParams::zero_grads() {
  for (auto& w : weights) w.zero_grad();
}

void ModelParams::assign_from(const ModelParams& src) {
  if (src.weights.size() != weights.size()) throw DimensionError("assign_from: parameter count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].value.same_shape(src.weights[i].value)) {
      throw DimensionError("assign_from: parameter shape mismatch");
    }
    weights[i].value = src.weights[i].value;
  }
}

int ModelParams::scalar_count() const {
  int total = 0;
  for (const auto& w : weights) total += w.value.size();
  return total;
}

TapeForward gcn_forward(ad::Tape& tape, ModelParams& params, const DenseMatrix& features,
                        const DenseMatrix& a_hat) {
  check_feature_dim(params, features);
  std::vector<ad::Value> w;
  for (auto& p : params.weights) w.push_back(tape.leaf(p));
  return build_forward(tape, Backbone::kGcn, w, tape.constant(features), tape.constant(a_hat),
                       {});
}

TapeForward acm_forward(ad::Tape& tape, ModelParams& params, const DenseMatrix& features,
                        const DenseMatrix& a_hat, const DenseMatrix& i_minus_a_hat) {
  check_feature_dim(params, features);
  std::vector<ad::Value> w;
  for (auto& p : params.weights) w.push_back(tape.leaf(p));
  return build_forward(tape, Backbone::kAcm, w, tape.constant(features), tape.constant(a_hat),
                       tape.constant(i_minus_a_hat));
}

TapeForward model_forward(ad::Tape& tape, ModelParams& params, const Graph& g) {
  const DenseMatrix a_hat = normalized_adjacency(g, /*add_self_loops=*/true);
  if (params.backbone == Backbone::kGcn) return gcn_forward(tape, params, g.features(), a_hat);
  return acm_forward(tape, params, g.features(), a_hat, high_pass_operator(a_hat));
}

ModelOutput model_forward_cached(const ModelParams& params, const DenseMatrix& features,
                                 const DenseMatrix& a_hat, const DenseMatrix& i_minus_a_hat) {
  check_feature_dim(params, features);
  ad::Tape tape;
  std::vector<ad::Value> w;
  for (const auto& p : params.weights) w.push_back(tape.constant(p.value));
  const ad::Value x = tape.constant(features);
  const ad::Value ah = tape.constant(a_hat);
  const ad::Value iah =
      params.backbone == Backbone::kAcm ? tape.constant(i_minus_a_hat) : ad::Value{};
  const TapeForward fwd = build_forward(tape, params.backbone, w, x, ah, iah);
  return {tape.value(fwd.hidden), tape.value(fwd.logits)};
}

ModelOutput model_forward(const ModelParams& params, const Graph& g) {
  const DenseMatrix a_hat = normalized_adjacency(g, /*add_self_loops=*/true);
  const DenseMatrix ia =
      params.backbone == Backbone::kAcm ? high_pass_operator(a_hat) : DenseMatrix();
  return model_forward_cached(params, g.features(), a_hat, ia);
}

ModelOutput gcn_forward(const ModelParams& params, const Graph& g) {
  if (params.backbone != Backbone::kGcn) throw std::invalid_argument("gcn_forward: not a GCN model");
  return model_forward(params, g);
}

ModelOutput acm_forward(const ModelParams& params, const Graph& g) {
  if (params.backbone != Backbone::kAcm) throw std::invalid_argument("acm_forward: not an ACM model");
  return model_forward(params, g);
}

}  // namespace s2fgl
