#include "s2fgl/ppr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "s2fgl/errors.hpp"
#include "s2fgl/warnings.hpp"

namespace s2fgl {

namespace {

// Row-stochastic random-walk matrix W = D^-1 A, optionally on A' = A + I.
// Degree-0 rows stay zero.
DenseMatrix walk_matrix(const Graph& g, bool self_loops) {
  const int n = g.num_nodes();
  DenseMatrix w(n, n);
  for (auto [u, v] : g.edges()) {
    w(u, v) = 1.0;
    w(v, u) = 1.0;
  }
  if (self_loops) {
    for (int i = 0; i < n; ++i) w(i, i) = 1.0;
  }
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += w(i, j);
    if (deg > 0.0) {
      for (int j = 0; j < n; ++j) w(i, j) /= deg;
    }
  }
  return w;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("ppr: damping alpha must be in (0,1]");
  }
}

}  // namespace

PprMatrix ppr(const Graph& g, double damping_alpha, bool self_loops) {
  check_alpha(damping_alpha);
  const int n = g.num_nodes();
  if (damping_alpha == 1.0) return {DenseMatrix::identity(n), damping_alpha};

  DenseMatrix system = walk_matrix(g, self_loops);
  for (double& v : system.data()) v *= -(1.0 - damping_alpha);
  for (int i = 0; i < n; ++i) system(i, i) += 1.0;

  DenseMatrix rhs(n, n);
  for (int i = 0; i < n; ++i) rhs(i, i) = damping_alpha;

  DenseMatrix p;
  try {
    p = solve_linear(std::move(system), std::move(rhs));
  } catch (const SingularMatrixError&) {
    throw std::runtime_error("ppr: singular system (internal error)");
  }
  // The Neumann series is entrywise nonnegative; the solver may leave
  // sub-epsilon negatives behind.
  for (double& v : p.data()) {
    if (v < 0.0) v = 0.0;
  }
  return {std::move(p), damping_alpha};
}

PprMatrix ppr_iterative(const Graph& g, double damping_alpha, bool self_loops, double tol,
                        int max_iterations) {
  check_alpha(damping_alpha);
  if (!(tol > 0.0)) throw std::invalid_argument("ppr_iterative: tol must be positive");
  const int n = g.num_nodes();
  const DenseMatrix w = walk_matrix(g, self_loops);

  DenseMatrix x(n, n);
  for (int i = 0; i < n; ++i) x(i, i) = damping_alpha;

  const double retain = 1.0 - damping_alpha;
  double residual = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    DenseMatrix next = multiply(w, x);
    for (double& v : next.data()) v *= retain;
    for (int i = 0; i < n; ++i) next(i, i) += damping_alpha;
    residual = max_abs_diff(next, x);
    x = std::move(next);
    if (residual < tol) return {std::move(x), damping_alpha};
  }
  throw ConvergenceError("ppr_iterative: no convergence after " +
                             std::to_string(max_iterations) + " iterations (residual " +
                             std::to_string(residual) + ")",
                         residual);
}

PprMatrix ppr_auto(const Graph& g, double damping_alpha, bool self_loops, int direct_threshold,
                   double tol) {
  if (g.num_nodes() <= direct_threshold) return ppr(g, damping_alpha, self_loops);
  return ppr_iterative(g, damping_alpha, self_loops, tol);
}

double sis(const PprMatrix& p, const std::vector<int>& train_mask) {
  if (train_mask.empty()) throw std::invalid_argument("sis: empty train mask");
  const DenseMatrix& m = p.values;
  for (int j : train_mask) {
    if (j < 0 || j >= m.cols()) throw std::invalid_argument("sis: mask index out of range");
  }
  double total = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    double best = 0.0;
    for (int j : train_mask) best = std::max(best, m(i, j));
    total += best;
  }
  return total;
}

double sis_partitioned(const Graph& g, const PartitionPlan& plan, const SplitMasks& masks,
                       double damping_alpha) {
  std::vector<char> is_train(static_cast<std::size_t>(g.num_nodes()), 0);
  for (int u : masks.train) is_train[static_cast<std::size_t>(u)] = 1;

  double total = 0.0;
  for (const auto& nodes : plan.client_nodes()) {
    InducedSubgraph sub = induced_subgraph(g, nodes);
    std::vector<int> local_train;
    for (int i = 0; i < static_cast<int>(sub.parent_ids.size()); ++i) {
      if (is_train[static_cast<std::size_t>(sub.parent_ids[static_cast<std::size_t>(i)])]) {
        local_train.push_back(i);
      }
    }
    if (local_train.empty()) {
      warn("sis_partitioned: a client has no train nodes; it contributes 0");
      continue;
    }
    total += sis(ppr_auto(sub.graph, damping_alpha, /*self_loops=*/false), local_train);
  }
  return total;
}

CentralityScores salc(const Graph& g, const std::vector<int>& train_mask, double damping_alpha,
                      const std::vector<double>& tau) {
  const int n = g.num_nodes();
  if (static_cast<int>(tau.size()) != n) throw DimensionError("salc: tau size mismatch");
  for (double t : tau) {
    if (t < 0.0) throw std::invalid_argument("salc: tau entries must be nonnegative");
  }

  const PprMatrix standard = ppr_auto(g, damping_alpha, /*self_loops=*/false);
  const PprMatrix labeled = ppr_auto(g, damping_alpha, /*self_loops=*/true);

  CentralityScores out;
  out.prior_tau = tau;
  out.structural.assign(static_cast<std::size_t>(n), 0.0);
  out.label_influence.assign(static_cast<std::size_t>(n), 0.0);
  out.salc.assign(static_cast<std::size_t>(n), 0.0);

  for (int u = 0; u < n; ++u) {
    double best = 0.0;
    for (int v = 0; v < n; ++v) {
      best = std::max(best, standard.values(u, v) * tau[static_cast<std::size_t>(v)]);
    }
    out.structural[static_cast<std::size_t>(u)] = best;
  }
  for (int v : train_mask) {
    if (v < 0 || v >= n) throw std::invalid_argument("salc: train mask index out of range");
    for (int u = 0; u < n; ++u) {
      out.label_influence[static_cast<std::size_t>(u)] += labeled.values(v, u);
    }
  }
  for (int u = 0; u < n; ++u) {
    out.salc[static_cast<std::size_t>(u)] = out.structural[static_cast<std::size_t>(u)] +
                                            out.label_influence[static_cast<std::size_t>(u)];
  }
  return out;
}

std::vector<int> select_top_k(const CentralityScores& scores, double k_fraction) {
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) {
    throw std::invalid_argument("select_top_k: k_fraction must be in (0,1]");
  }
  const int n = static_cast<int>(scores.salc.size());
  const int k = std::max(1, static_cast<int>(std::floor(k_fraction * n)));

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = scores.salc[static_cast<std::size_t>(a)];
    const double sb = scores.salc[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace s2fgl
