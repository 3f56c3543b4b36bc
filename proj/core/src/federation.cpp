#include "s2fgl/federation.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <cmath>
#include <stdexcept>
#include <string>

#include "s2fgl/errors.hpp"
#include "s2fgl/louvain.hpp"
#include "s2fgl/ppr.hpp"
#include "s2fgl/rng.hpp"
#include "s2fgl/warnings.hpp"

namespace s2fgl {

namespace {

struct EffectiveWeights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool prox = false;
};

EffectiveWeights effective_weights(const RunConfig& cfg) {
  switch (cfg.method) {
    case Method::kFedAvg:
      return {};
    case Method::kFedProx:
      return {0.0, 0.0, true};
    case Method::kS2fgl:
      return {cfg.lambda1, cfg.lambda2, false};
    case Method::kNlirOnly:
      return {cfg.lambda1, 0.0, false};
    case Method::kFgmaOnly:
      return {0.0, cfg.lambda2, false};
  }
  return {};
}

std::vector<int> restrict_mask(const std::vector<int>& global_mask,
                               const std::vector<int>& local_ids) {
  std::vector<int> out;
  for (int u : global_mask) {
    const int local = local_ids[static_cast<std::size_t>(u)];
    if (local >= 0) out.push_back(local);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

ModelParams fedavg_aggregate(const std::vector<const ModelParams*>& models,
                             const std::vector<double>& weights) {
  if (models.empty()) throw std::invalid_argument("fedavg_aggregate: no models");
  if (models.size() != weights.size()) {
    throw std::invalid_argument("fedavg_aggregate: weight count mismatch");
  }
  ModelParams out = *models.front();
  if (models.size() == 1) return out;

  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("fedavg_aggregate: nonpositive total weight");

  for (std::size_t p = 0; p < out.weights.size(); ++p) {
    DenseMatrix& acc = out.weights[p].value;
    const DenseMatrix& base = models.front()->weights[p].value;
    for (std::size_t i = 1; i < models.size(); ++i) {
      const DenseMatrix& v = models[i]->weights[p].value;
      if (!v.same_shape(base)) throw DimensionError("fedavg_aggregate: parameter shape mismatch");
      const double w = weights[i] / total;
      for (std::size_t j = 0; j < acc.data().size(); ++j) {
        acc.data()[j] += w * (v.data()[j] - base.data()[j]);
      }
    }
  }
  return out;
}

ad::Value fedprox_regularizer(ad::Tape& tape, ModelParams& local, const ModelParams& global_ref,
                              double mu) {
  if (local.weights.size() != global_ref.weights.size()) {
    throw DimensionError("fedprox_regularizer: parameter count mismatch");
  }
  ad::Value acc = tape.constant(DenseMatrix(1, 1));
  for (std::size_t i = 0; i < local.weights.size(); ++i) {
    const ad::Value diff = tape.sub(tape.leaf(local.weights[i]),
                                    tape.constant(global_ref.weights[i].value));
    acc = tape.add(acc, tape.sum_squares(diff));
  }
  return tape.scale(acc, 0.5 * mu);
}

double evaluate(const ModelParams& server_model, const std::vector<ClientState>& clients) {
  long long correct = 0;
  long long total = 0;
  for (const ClientState& c : clients) {
    if (c.masks.test.empty()) continue;
    const ModelOutput out =
        model_forward_cached(server_model, c.subgraph.features(), c.a_hat, c.i_minus_a_hat);
    for (int u : c.masks.test) {
      int arg = 0;
      for (int j = 1; j < out.logits.cols(); ++j) {
        if (out.logits(u, j) > out.logits(u, arg)) arg = j;
      }
      if (arg == c.subgraph.labels()[static_cast<std::size_t>(u)]) ++correct;
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("evaluate: no test nodes across clients");
  return static_cast<double>(correct) / static_cast<double>(total);
}

Federation setup_federation(const Graph& g, const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.num_clients < 1) throw std::invalid_argument("setup_federation: num_clients < 1");
  if (cfg.rounds < 1 || cfg.local_epochs < 1) {
    throw std::invalid_argument("setup_federation: rounds and local_epochs must be >= 1");
  }
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("setup_federation: lr must be positive");

  Federation fed;
  fed.masks = stratified_split(g, cfg.split_ratios, derive_seed(seed, seed_stream::kSplit));
  fed.plan = louvain_partition(g, cfg.num_clients, derive_seed(seed, seed_stream::kLouvain));
  fed.sis_value = sis_partitioned(g, fed.plan, fed.masks, cfg.damping_alpha);

  const ModelDims dims{g.feature_dim(), cfg.hidden, g.num_classes()};
  const EffectiveWeights w = effective_weights(cfg);

  const auto client_nodes = fed.plan.client_nodes();
  for (int c = 0; c < fed.plan.num_clients; ++c) {
    InducedSubgraph sub = induced_subgraph(g, client_nodes[static_cast<std::size_t>(c)]);

    ClientState state;
    state.client_id = c;
    state.seed = derive_seed(seed, seed_stream::kClientInit, static_cast<std::uint64_t>(c));
    state.masks.train = restrict_mask(fed.masks.train, sub.local_ids);
    state.masks.val = restrict_mask(fed.masks.val, sub.local_ids);
    state.masks.test = restrict_mask(fed.masks.test, sub.local_ids);
    state.subgraph = std::move(sub.graph);
    state.parent_ids = std::move(sub.parent_ids);
    state.model = ModelParams::glorot_init(cfg.backbone, dims, state.seed);
    state.a_hat = normalized_adjacency(state.subgraph, /*add_self_loops=*/true);
    if (cfg.backbone == Backbone::kAcm) state.i_minus_a_hat = high_pass_operator(state.a_hat);

    // SALC node selection is static (structure + labels only): once per run.
    const std::vector<double> tau(static_cast<std::size_t>(state.subgraph.num_nodes()), 1.0);
    const CentralityScores scores =
        salc(state.subgraph, state.masks.train, cfg.damping_alpha, tau);
    state.selected_nodes = select_top_k(scores, cfg.k_fraction);

    if (state.masks.train.empty()) {
      warn("setup_federation: client " + std::to_string(c) +
           " has no train nodes; it will not train locally");
    }
    if (w.lambda2 > 0.0 && state.subgraph.num_nodes() < 2 * cfg.k_eig) {
      warn("setup_federation: client " + std::to_string(c) +
           " is smaller than 2*k_eig; its frequency-alignment loss is skipped");
    }
    fed.clients.push_back(std::move(state));
  }

  fed.server.global_model =
      ModelParams::glorot_init(cfg.backbone, dims, derive_seed(seed, seed_stream::kServerInit));
  return fed;
}

RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const RunConfig& cfg, std::uint64_t experiment_seed, double sis_value) {
  const auto t0 = std::chrono::steady_clock::now();
  server.round += 1;
  const int round = server.round;
  const EffectiveWeights w = effective_weights(cfg);
  const bool need_fkd = w.lambda1 > 0.0;
  const bool need_fgma = w.lambda2 > 0.0;

  RoundReport report;
  report.round = round;
  report.sis_value = sis_value;

  // Clients are independent within a round: results land in per-client slots
  // and every aggregate below reads them in client_id order, so scheduling
  // cannot change any output bit.
  std::vector<ClientLossReport> loss_reports(clients.size());
  std::vector<LocalPrototypes> uploads(clients.size());
  std::vector<std::exception_ptr> errors(clients.size());

  auto process_client = [&](std::size_t slot) {
    ClientState& client = clients[slot];
    client.model.assign_from(server.global_model);  // broadcast

    ModelOutput frozen_global;
    if (need_fkd || need_fgma) {
      frozen_global = model_forward_cached(server.global_model, client.subgraph.features(),
                                           client.a_hat, client.i_minus_a_hat);
    }

    if (need_fkd) {
      // Prototypes come from the just-received global model on the
      // SALC-selected set; only train labels count as known.
      std::vector<int> train_labels(static_cast<std::size_t>(client.subgraph.num_nodes()), -1);
      for (int u : client.masks.train) {
        train_labels[static_cast<std::size_t>(u)] =
            client.subgraph.labels()[static_cast<std::size_t>(u)];
      }
      uploads[slot] = local_prototypes(frozen_global.hidden, train_labels,
                                       client.selected_nodes, client.subgraph.num_classes());
    }

    const int n = client.subgraph.num_nodes();
    const bool fgma_active = need_fgma && n >= 2 * cfg.k_eig;
    const int k_sim_eff = std::min(cfg.k_sim, n - 1);

    SpectralBasis global_basis;
    if (fgma_active) {
      global_basis = extreme_eigenpairs(
          laplacian(sparse_self_similarity(frozen_global.hidden, k_sim_eff)), cfg.k_eig);
    }

    std::vector<int> all_nodes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all_nodes[static_cast<std::size_t>(i)] = i;

    ClientLossReport& loss_report = loss_reports[slot];
    loss_report.client_id = client.client_id;

    if (!client.masks.train.empty()) {
      try {
        for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
          ad::Tape tape;
          client.model.zero_grads();
          const TapeForward fwd =
              cfg.backbone == Backbone::kGcn
                  ? gcn_forward(tape, client.model, client.subgraph.features(), client.a_hat)
                  : acm_forward(tape, client.model, client.subgraph.features(), client.a_hat,
                                client.i_minus_a_hat);

          ad::Value objective =
              tape.cross_entropy(fwd.logits, client.subgraph.labels(), client.masks.train);
          loss_report.ce = tape.scalar(objective);

          if (need_fkd && server.repository.any_present()) {
            const ad::Value fkd = fkd_loss(tape, fwd.hidden, frozen_global.hidden,
                                           server.repository, all_nodes, cfg.fkd_temperature);
            loss_report.fkd = tape.scalar(fkd);
            objective = tape.add(objective, tape.scale(fkd, w.lambda1));
          }
          if (fgma_active) {
            const SpectralBasis local_basis = extreme_eigenpairs(
                laplacian(sparse_self_similarity(tape.value(fwd.hidden), k_sim_eff)), cfg.k_eig);
            const ad::Value fgma = fgma_loss_with_bases(tape, fwd.hidden, local_basis,
                                                        frozen_global.hidden, global_basis);
            loss_report.fgma = tape.scalar(fgma);
            objective = tape.add(objective, tape.scale(fgma, w.lambda2));
          }
          if (w.prox) {
            objective = tape.add(
                objective, fedprox_regularizer(tape, client.model, server.global_model,
                                               cfg.prox_mu));
          }
          if (!std::isfinite(tape.scalar(objective))) {
            throw std::runtime_error("non-finite training loss");
          }
          tape.backward(objective);
          const auto params = client.model.parameters();
          ad::sgd_step(std::span<ad::Parameter* const>(params.data(), params.size()), cfg.lr,
                       cfg.weight_decay);
        }
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("round " + std::to_string(round) + ", client " +
                                 std::to_string(client.client_id) +
                                 ": training diverged: " + e.what());
      }
    }
  };

  if (cfg.parallel_clients && clients.size() > 1) {
    std::vector<std::future<void>> futures;
    futures.reserve(clients.size());
    for (std::size_t slot = 0; slot < clients.size(); ++slot) {
      futures.push_back(std::async(std::launch::async, [&, slot] {
        try {
          process_client(slot);
        } catch (...) {
          errors[slot] = std::current_exception();
        }
      }));
    }
    for (auto& f : futures) f.wait();
  } else {
    for (std::size_t slot = 0; slot < clients.size(); ++slot) {
      try {
        process_client(slot);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    }
  }
  // Surface the lowest-id failure deterministically.
  for (const std::exception_ptr& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  report.client_losses = std::move(loss_reports);

  std::vector<const ModelParams*> models;
  std::vector<double> weights;
  for (const ClientState& client : clients) {
    models.push_back(&client.model);
    weights.push_back(static_cast<double>(client.subgraph.num_nodes()));
  }
  server.global_model = fedavg_aggregate(models, weights);

  if (need_fkd) {
    Rng anchor_rng(derive_seed(experiment_seed, seed_stream::kAnchors,
                               static_cast<std::uint64_t>(round)));
    server.repository =
        aggregate_global_repository(uploads, cfg.proto_fraction, anchor_rng,
                                    cfg.anchors_per_class);
  }

  report.accuracy = evaluate(server.global_model, clients);
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                       .count();
  return report;
}

SeedRun run_federated(const Graph& g, const RunConfig& cfg, std::uint64_t seed) {
  Federation fed = setup_federation(g, cfg, seed);
  SeedRun run;
  run.seed = seed;
  for (int r = 0; r < cfg.rounds; ++r) {
    run.rounds.push_back(run_round(fed.server, fed.clients, cfg, seed, fed.sis_value));
  }
  const int window = std::min(5, cfg.rounds);
  double acc = 0.0;
  for (int r = cfg.rounds - window; r < cfg.rounds; ++r) {
    acc += run.rounds[static_cast<std::size_t>(r)].accuracy;
  }
  run.final_accuracy = acc / static_cast<double>(window);
  return run;
}

TrainingResult run_training(const std::function<Graph(std::uint64_t)>& dataset_for_seed,
                            const RunConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("run_training: no seeds");
  TrainingResult result;
  for (std::uint64_t seed : seeds) {
    const Graph g = dataset_for_seed(seed);
    result.seed_runs.push_back(run_federated(g, cfg, seed));
  }
  double mean = 0.0;
  for (const SeedRun& r : result.seed_runs) mean += r.final_accuracy;
  mean /= static_cast<double>(result.seed_runs.size());
  double var = 0.0;
  for (const SeedRun& r : result.seed_runs) {
    const double d = r.final_accuracy - mean;
    var += d * d;
  }
  result.final_mean = mean;
  result.final_std = result.seed_runs.size() > 1
                         ? std::sqrt(var / static_cast<double>(result.seed_runs.size() - 1))
                         : 0.0;
  return result;
}

TrainingResult run_training(const Graph& g, const RunConfig& cfg,
                            const std::vector<std::uint64_t>& seeds) {
  return run_training([&g](std::uint64_t) { return g; }, cfg, seeds);
}

}  // namespace s2fgl
