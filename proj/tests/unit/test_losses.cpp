#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "s2fgl/errors.hpp"
#include "s2fgl/gnn.hpp"
#include "s2fgl/graph.hpp"
#include "s2fgl/losses.hpp"
#include "s2fgl/warnings.hpp"
#include "test_helpers.hpp"

using s2fgl::DenseMatrix;
using s2fgl::LocalPrototypes;
using s2fgl::PrototypeRepository;
using s2fgl::ad::Tape;
using s2fgl::ad::Value;

TEST_CASE("local_prototypes closed cases") {
  {
    const DenseMatrix hidden = DenseMatrix::from_rows({{1.0, 2.0}, {5.0, 6.0}});
    const LocalPrototypes lp = s2fgl::local_prototypes(hidden, {2, 0}, {0}, 3);
    CHECK(lp.present == std::vector<bool>{false, false, true});
    CHECK(lp.prototypes(2, 0) == 1.0);
    CHECK(lp.prototypes(2, 1) == 2.0);
    CHECK(lp.counts[2] == 1);
  }
  {
    const DenseMatrix hidden = DenseMatrix::from_rows({{1.0, -3.0}, {-1.0, 3.0}});
    const LocalPrototypes lp = s2fgl::local_prototypes(hidden, {0, 0}, {0, 1}, 1);
    CHECK(lp.prototypes(0, 0) == 0.0);  // symmetric embeddings average out
    CHECK(lp.prototypes(0, 1) == 0.0);
  }
  {
    // Unlabeled selected nodes are skipped.
    const DenseMatrix hidden = DenseMatrix::from_rows({{1.0}, {9.0}});
    const LocalPrototypes lp = s2fgl::local_prototypes(hidden, {0, -1}, {0, 1}, 1);
    CHECK(lp.counts[0] == 1);
    CHECK(lp.prototypes(0, 0) == 1.0);
  }
  CHECK_THROWS_AS(s2fgl::local_prototypes(DenseMatrix(2, 2), {0, 0}, {}, 1),
                  std::invalid_argument);
}

TEST_CASE("local_prototypes equals a brute-force groupby mean") {
  s2fgl::Rng rng(81);
  const DenseMatrix hidden = testutil::random_matrix(12, 5, rng);
  std::vector<int> labels(12);
  for (int& y : labels) y = rng.uniform_int(4) - 1;  // -1..2, some unlabeled
  std::vector<int> selected;
  for (int u = 0; u < 12; ++u) {
    if (rng.bernoulli(0.7)) selected.push_back(u);
  }
  if (selected.empty()) selected.push_back(0);

  const LocalPrototypes lp = s2fgl::local_prototypes(hidden, labels, selected, 3);
  for (int c = 0; c < 3; ++c) {
    DenseMatrix mean(1, 5);
    int count = 0;
    for (int u : selected) {
      if (labels[static_cast<std::size_t>(u)] != c) continue;
      for (int j = 0; j < 5; ++j) mean(0, j) += hidden(u, j);
      ++count;
    }
    CHECK(lp.counts[static_cast<std::size_t>(c)] == count);
    CHECK(lp.present[static_cast<std::size_t>(c)] == (count > 0));
    for (int j = 0; j < 5 && count > 0; ++j) {
      CHECK(lp.prototypes(c, j) == doctest::Approx(mean(0, j) / count).epsilon(1e-12));
    }
  }
}

namespace {

LocalPrototypes scalar_client(double value, int count, int num_classes = 1) {
  LocalPrototypes lp;
  lp.num_classes = num_classes;
  lp.dim = 1;
  lp.present.assign(static_cast<std::size_t>(num_classes), true);
  lp.counts.assign(static_cast<std::size_t>(num_classes), count);
  lp.prototypes = DenseMatrix(num_classes, 1);
  for (int c = 0; c < num_classes; ++c) lp.prototypes(c, 0) = value;
  return lp;
}

}  // namespace

TEST_CASE("aggregate_global_repository") {
  {
    s2fgl::Rng rng(1);
    const PrototypeRepository repo =
        s2fgl::aggregate_global_repository({scalar_client(3.5, 2)}, 0.5, rng);
    CHECK(repo.anchors.rows() == 4);
    for (int k = 0; k < 4; ++k) {
      CHECK(repo.present[static_cast<std::size_t>(k)]);
      CHECK(repo.anchors(k, 0) == 3.5);  // single client: every anchor equals it
    }
  }
  {
    // Count-weighted mean: counts 1 and 3, values 0 and 4 -> 3.
    s2fgl::Rng rng(2);
    const PrototypeRepository repo = s2fgl::aggregate_global_repository(
        {scalar_client(0.0, 1), scalar_client(4.0, 3)}, 1.0, rng);
    for (int k = 0; k < 4; ++k) CHECK(repo.anchors(k, 0) == doctest::Approx(3.0));
  }
  {
    // fraction 1: sampling covers everyone, so the seed cannot matter.
    const std::vector<LocalPrototypes> locals = {scalar_client(1.0, 2), scalar_client(5.0, 1),
                                                 scalar_client(-2.0, 4)};
    s2fgl::Rng rng_a(123);
    s2fgl::Rng rng_b(45678);
    const PrototypeRepository a = s2fgl::aggregate_global_repository(locals, 1.0, rng_a);
    const PrototypeRepository b = s2fgl::aggregate_global_repository(locals, 1.0, rng_b);
    CHECK(a.anchors == b.anchors);
    for (int k = 1; k < 4; ++k) CHECK(a.anchors(k, 0) == a.anchors(0, 0));
  }
  {
    // A class absent everywhere stays absent, with a warning.
    LocalPrototypes lp = scalar_client(1.0, 1, 2);
    lp.present[1] = false;
    lp.counts[1] = 0;
    int warnings = 0;
    auto previous = s2fgl::set_warning_handler([&](const std::string&) { ++warnings; });
    s2fgl::Rng rng(3);
    const PrototypeRepository repo = s2fgl::aggregate_global_repository({lp}, 0.5, rng);
    s2fgl::set_warning_handler(previous);
    CHECK(warnings == 1);
    // Row order is class-major, anchor-minor.
    for (int k = 0; k < 4; ++k) {
      CHECK(repo.present[static_cast<std::size_t>(0 * 4 + k)]);
      CHECK(!repo.present[static_cast<std::size_t>(1 * 4 + k)]);
    }
    CHECK(repo.any_present());
  }
  s2fgl::Rng rng(4);
  CHECK_THROWS_AS(s2fgl::aggregate_global_repository({scalar_client(1.0, 1)}, 0.0, rng),
                  std::invalid_argument);
}

TEST_CASE("prototype repository csv round trip") {
  s2fgl::Rng rng(91);
  PrototypeRepository repo;
  repo.num_classes = 3;
  repo.anchors_per_class = 4;
  repo.dim = 5;
  repo.present.assign(12, true);
  repo.present[7] = false;
  repo.anchors = testutil::random_matrix(12, 5, rng);

  const auto path = (std::filesystem::temp_directory_path() / "s2fgl_repo.csv").string();
  repo.save_csv(path);
  const PrototypeRepository loaded = PrototypeRepository::load_csv(path);
  CHECK(loaded.num_classes == repo.num_classes);
  CHECK(loaded.anchors_per_class == repo.anchors_per_class);
  CHECK(loaded.present == repo.present);
  CHECK(loaded.anchors == repo.anchors);  // shortest round-trip formatting is exact
}

namespace {

PrototypeRepository random_repo(int num_classes, int dim, std::uint64_t seed) {
  s2fgl::Rng rng(seed);
  PrototypeRepository repo;
  repo.num_classes = num_classes;
  repo.anchors_per_class = 4;
  repo.dim = dim;
  repo.present.assign(static_cast<std::size_t>(4 * num_classes), true);
  repo.anchors = testutil::random_matrix(4 * num_classes, dim, rng);
  return repo;
}

}  // namespace

TEST_CASE("fkd_loss closed cases") {
  s2fgl::Rng rng(93);
  const PrototypeRepository repo = random_repo(2, 4, 11);
  const DenseMatrix hidden = testutil::random_matrix(6, 4, rng);
  std::vector<int> all_nodes = {0, 1, 2, 3, 4, 5};

  {
    Tape t;
    const Value local = t.constant(hidden);
    const Value loss = s2fgl::fkd_loss(t, local, hidden, repo, all_nodes);
    CHECK(t.scalar(loss) == doctest::Approx(0.0));  // local == global
  }
  {
    // A single present anchor makes both profiles the constant [1].
    PrototypeRepository single = random_repo(1, 4, 13);
    for (std::size_t k = 1; k < 4; ++k) single.present[k] = false;
    Tape t;
    const Value local = t.constant(hidden);
    const DenseMatrix other = testutil::random_matrix(6, 4, rng);
    const Value loss = s2fgl::fkd_loss(t, local, other, single, all_nodes);
    CHECK(t.scalar(loss) == doctest::Approx(0.0));
  }
  {
    PrototypeRepository empty;
    empty.num_classes = 2;
    empty.anchors_per_class = 4;
    empty.dim = 4;
    empty.present.assign(8, false);
    empty.anchors = DenseMatrix(8, 4);
    Tape t;
    const Value local = t.constant(hidden);
    CHECK_THROWS_AS(s2fgl::fkd_loss(t, local, hidden, empty, all_nodes), std::invalid_argument);
  }
}

TEST_CASE("fkd_loss gradient w.r.t. local hidden features") {
  s2fgl::Rng rng(97);
  const PrototypeRepository repo = random_repo(3, 4, 17);
  s2fgl::ad::Parameter local(testutil::random_matrix(5, 4, rng));
  const DenseMatrix global = testutil::random_matrix(5, 4, rng);
  const std::vector<int> nodes = {0, 1, 2, 3, 4};

  const auto build = [&](Tape& t) {
    return s2fgl::fkd_loss(t, t.leaf(local), global, repo, nodes);
  };
  CHECK(testutil::gradient_rel_error(build, {&local}) < 1e-4);

  // Subset evaluation only sees the chosen rows.
  const auto subset_build = [&](Tape& t) {
    return s2fgl::fkd_loss(t, t.leaf(local), global, repo, {1, 3});
  };
  CHECK(testutil::gradient_rel_error(subset_build, {&local}) < 1e-4);
}

TEST_CASE("fgma_loss closed cases") {
  s2fgl::Rng rng(101);
  const DenseMatrix hidden = testutil::random_matrix(10, 6, rng);
  {
    Tape t;
    const Value local = t.constant(hidden);
    const Value loss = s2fgl::fgma_loss(t, local, hidden, 3, 2);
    CHECK(t.scalar(loss) == doctest::Approx(0.0));  // identical graphs and projections
  }
  {
    // Too few nodes: skipped with a warning, constant zero.
    int warnings = 0;
    auto previous = s2fgl::set_warning_handler([&](const std::string&) { ++warnings; });
    Tape t;
    const DenseMatrix tiny = testutil::random_matrix(3, 6, rng);
    const Value local = t.constant(tiny);
    const Value loss = s2fgl::fgma_loss(t, local, tiny, 2, 2);
    s2fgl::set_warning_handler(previous);
    CHECK(warnings == 1);
    CHECK(t.scalar(loss) == 0.0);
  }
}

TEST_CASE("fgma_loss is bitwise invariant under eigenvector sign flips") {
  s2fgl::Rng rng(103);
  const DenseMatrix local_hidden = testutil::random_matrix(9, 5, rng);
  const DenseMatrix global_hidden = testutil::random_matrix(9, 5, rng);

  const s2fgl::SpectralBasis local_basis = s2fgl::extreme_eigenpairs(
      s2fgl::laplacian(s2fgl::sparse_self_similarity(local_hidden, 3)), 2);
  const s2fgl::SpectralBasis global_basis = s2fgl::extreme_eigenpairs(
      s2fgl::laplacian(s2fgl::sparse_self_similarity(global_hidden, 3)), 2);

  s2fgl::SpectralBasis flipped_local = local_basis;
  for (double& x : flipped_local.low_vecs[0]) x = -x;
  for (double& x : flipped_local.high_vecs[1]) x = -x;
  s2fgl::SpectralBasis flipped_global = global_basis;
  for (double& x : flipped_global.high_vecs[0]) x = -x;

  Tape t1, t2;
  const double base = t1.scalar(s2fgl::fgma_loss_with_bases(
      t1, t1.constant(local_hidden), local_basis, global_hidden, global_basis));
  const double flipped = t2.scalar(s2fgl::fgma_loss_with_bases(
      t2, t2.constant(local_hidden), flipped_local, global_hidden, flipped_global));
  CHECK(base == flipped);  // bitwise
  CHECK(base > 0.0);
}

TEST_CASE("fgma_loss is invariant under a consistent node permutation") {
  s2fgl::Rng rng(107);
  const int n = 8;
  const DenseMatrix local_hidden = testutil::random_matrix(n, 4, rng);
  const DenseMatrix global_hidden = testutil::random_matrix(n, 4, rng);

  DenseMatrix local_perm(n, 4), global_perm(n, 4);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) {
      local_perm(n - 1 - i, j) = local_hidden(i, j);
      global_perm(n - 1 - i, j) = global_hidden(i, j);
    }
  }

  Tape t1, t2;
  const double base =
      t1.scalar(s2fgl::fgma_loss(t1, t1.constant(local_hidden), global_hidden, 3, 2));
  const double permuted =
      t2.scalar(s2fgl::fgma_loss(t2, t2.constant(local_perm), global_perm, 3, 2));
  CHECK(base == doctest::Approx(permuted).epsilon(1e-9));
}

TEST_CASE("fgma_loss gradient with frozen bases") {
  s2fgl::Rng rng(109);
  s2fgl::ad::Parameter local(testutil::random_matrix(8, 4, rng));
  const DenseMatrix global = testutil::random_matrix(8, 4, rng);

  // Bases frozen at the unperturbed point, as the loss definition requires.
  const s2fgl::SpectralBasis local_basis = s2fgl::extreme_eigenpairs(
      s2fgl::laplacian(s2fgl::sparse_self_similarity(local.value, 3)), 2);
  const s2fgl::SpectralBasis global_basis = s2fgl::extreme_eigenpairs(
      s2fgl::laplacian(s2fgl::sparse_self_similarity(global, 3)), 2);

  const auto build = [&](Tape& t) {
    return s2fgl::fgma_loss_with_bases(t, t.leaf(local), local_basis, global, global_basis);
  };
  CHECK(testutil::gradient_rel_error(build, {&local}) < 1e-4);
}

TEST_CASE("total_loss composition") {
  {
    Tape t;
    const Value ce = t.constant(DenseMatrix::from_rows({{1.0}}));
    const Value fkd = t.constant(DenseMatrix::from_rows({{2.0}}));
    const Value fgma = t.constant(DenseMatrix::from_rows({{3.0}}));
    CHECK(t.scalar(s2fgl::total_loss(t, ce, fkd, fgma, {10.0, 0.5})) == doctest::Approx(22.5));
    CHECK(t.scalar(s2fgl::total_loss(t, ce, fkd, fgma, {0.0, 0.0})) == doctest::Approx(1.0));
    CHECK_THROWS_AS(s2fgl::total_loss(t, ce, fkd, fgma, {-1.0, 0.0}), std::invalid_argument);
  }

  // Gradient of the weighted sum equals the weighted sum of gradients.
  s2fgl::Rng rng(113);
  s2fgl::ad::Parameter w(testutil::random_matrix(3, 3, rng));
  const DenseMatrix target = testutil::random_matrix(3, 3, rng);
  const s2fgl::LossWeights weights{2.0, 0.25};
  const auto build = [&](Tape& t) {
    const Value leaf = t.leaf(w);
    const Value ce = t.sum_squares(leaf);
    const Value fkd = t.mse(leaf, t.constant(target));
    const Value fgma = t.sum(leaf);
    return s2fgl::total_loss(t, ce, fkd, fgma, weights);
  };
  CHECK(testutil::gradient_rel_error(build, {&w}) < 1e-6);
}

TEST_CASE("composed objective gradient on a random graph") {
  // Full pipeline: forward -> CE + FKD + FGMA, finite differences over all
  // model parameters.
  const s2fgl::Graph g = s2fgl::sbm_generate({5, 5}, 0.5, 0.2, 4, 211);
  s2fgl::ModelParams params = s2fgl::ModelParams::glorot_init(
      s2fgl::Backbone::kGcn, {g.feature_dim(), 5, g.num_classes()}, 213);
  const DenseMatrix a_hat = s2fgl::normalized_adjacency(g, true);
  const std::vector<int> train_mask = {0, 2, 5, 7};
  std::vector<int> all_nodes(static_cast<std::size_t>(g.num_nodes()));
  for (int i = 0; i < g.num_nodes(); ++i) all_nodes[static_cast<std::size_t>(i)] = i;

  const PrototypeRepository repo = random_repo(g.num_classes(), 5, 215);
  const DenseMatrix global_hidden = [&] {
    const s2fgl::ModelParams global = s2fgl::ModelParams::glorot_init(
        s2fgl::Backbone::kGcn, {g.feature_dim(), 5, g.num_classes()}, 999);
    return s2fgl::model_forward_cached(global, g.features(), a_hat, DenseMatrix()).hidden;
  }();

  // FGMA bases frozen at the unperturbed parameters.
  const DenseMatrix hidden0 = [&] {
    Tape t;
    return DenseMatrix(
        t.value(s2fgl::gcn_forward(t, params, g.features(), a_hat).hidden));
  }();
  const s2fgl::SpectralBasis local_basis =
      s2fgl::extreme_eigenpairs(s2fgl::laplacian(s2fgl::sparse_self_similarity(hidden0, 3)), 2);
  const s2fgl::SpectralBasis global_basis = s2fgl::extreme_eigenpairs(
      s2fgl::laplacian(s2fgl::sparse_self_similarity(global_hidden, 3)), 2);

  const auto build = [&](Tape& t) {
    const s2fgl::TapeForward fwd = s2fgl::gcn_forward(t, params, g.features(), a_hat);
    const Value ce = t.cross_entropy(fwd.logits, g.labels(), train_mask);
    const Value fkd = s2fgl::fkd_loss(t, fwd.hidden, global_hidden, repo, all_nodes);
    const Value fgma =
        s2fgl::fgma_loss_with_bases(t, fwd.hidden, local_basis, global_hidden, global_basis);
    return s2fgl::total_loss(t, ce, fkd, fgma, {0.7, 0.3});
  };
  CHECK(testutil::gradient_rel_error(build, params.parameters()) < 1e-4);
}
