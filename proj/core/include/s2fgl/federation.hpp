#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "s2fgl/gnn.hpp"
#include "s2fgl/graph.hpp"
#include "s2fgl/losses.hpp"

namespace s2fgl {

enum class Method { kFedAvg, kFedProx, kS2fgl, kNlirOnly, kFgmaOnly };

struct RunConfig {
  int num_clients = 10;
  Backbone backbone = Backbone::kGcn;
  Method method = Method::kS2fgl;
  double lambda1 = 10.0;
  double lambda2 = 0.5;
  double prox_mu = 0.01;
  double damping_alpha = 0.85;
  double k_fraction = 1.0 / 3.0;
  int k_sim = 10;
  int k_eig = 4;
  double proto_fraction = 0.5;
  int anchors_per_class = 4;
  int rounds = 100;
  int local_epochs = 3;
  double lr = 0.1;
  double weight_decay = 0.0;
  int hidden = 64;
  double fkd_temperature = 1.0;
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
  // Clients within a round run on separate threads; results are identical
  // bit for bit either way because aggregation reads per-client slots in
  // client_id order.
  bool parallel_clients = true;
};

struct ClientState {
  int client_id = 0;
  Graph subgraph;
  std::vector<int> parent_ids;       // local id -> whole-graph id
  SplitMasks masks;                  // local ids
  ModelParams model;
  std::vector<int> selected_nodes;   // SALC top-K, local ids
  std::uint64_t seed = 0;
  DenseMatrix a_hat;                 // cached propagation operator
  DenseMatrix i_minus_a_hat;         // cached high-pass operator (ACM only)
};

struct ServerState {
  ModelParams global_model;
  PrototypeRepository repository;  // empty until the first aggregation
  int round = 0;
};

struct ClientLossReport {
  int client_id = 0;
  double ce = 0.0;
  double fkd = 0.0;
  double fgma = 0.0;
};

struct RoundReport {
  int round = 0;
  std::vector<ClientLossReport> client_losses;
  double accuracy = 0.0;
  double sis_value = 0.0;
  double wall_ms = 0.0;  // timing-only field, excluded from determinism checks
};

struct Federation {
  ServerState server;
  std::vector<ClientState> clients;  // ordered by client_id
  PartitionPlan plan;
  SplitMasks masks;  // whole-graph ids
  double sis_value = 0.0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RoundReport> rounds;
  double final_accuracy = 0.0;  // mean accuracy over the last 5 rounds
};

struct TrainingResult {
  std::vector<SeedRun> seed_runs;
  double final_mean = 0.0;
  double final_std = 0.0;  // sample std over seeds (0 for a single seed)
};

// Parameterwise weighted mean, weights proportional to client node counts.
// Computed as v0 + sum_i w_i (v_i - v0) in client order, which keeps the
// aggregation bitwise idempotent on identical models.
ModelParams fedavg_aggregate(const std::vector<const ModelParams*>& models,
                             const std::vector<double>& weights);

// (mu/2) * sum over parameters of ||w_local - w_global||^2, on the tape.
ad::Value fedprox_regularizer(ad::Tape& tape, ModelParams& local, const ModelParams& global_ref,
                              double mu);

// Micro-accuracy of the server model over all clients' test nodes.
double evaluate(const ModelParams& server_model, const std::vector<ClientState>& clients);

// Louvain partition, per-client subgraphs and masks, SALC selection, model
// initialization, and the (static) partitioned SIS value.
Federation setup_federation(const Graph& g, const RunConfig& cfg, std::uint64_t seed);

// One communication round: broadcast, frozen global features, prototype
// upload, E local epochs on the weighted objective, FedAvg + prototype
// aggregation, evaluation.
RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const RunConfig& cfg, std::uint64_t experiment_seed, double sis_value);

SeedRun run_federated(const Graph& g, const RunConfig& cfg, std::uint64_t seed);

TrainingResult run_training(const std::function<Graph(std::uint64_t)>& dataset_for_seed,
                            const RunConfig& cfg, const std::vector<std::uint64_t>& seeds);
TrainingResult run_training(const Graph& g, const RunConfig& cfg,
                            const std::vector<std::uint64_t>& seeds);

}  // namespace s2fgl
