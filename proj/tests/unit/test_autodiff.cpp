#include <cmath>

#include "doctest.h"
#include "s2fgl/autodiff.hpp"
#include "s2fgl/errors.hpp"
#include "test_helpers.hpp"

using s2fgl::DenseMatrix;
using s2fgl::ad::Parameter;
using s2fgl::ad::Tape;
using s2fgl::ad::Value;

TEST_CASE("matmul forward") {
  Tape t;
  const Value i2 = t.constant(DenseMatrix::identity(2));
  const Value m = t.constant(DenseMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}}));
  const DenseMatrix prod = t.value(t.matmul(i2, m));
  CHECK(prod == t.value(m));

  const Value a = t.constant(DenseMatrix::from_rows({{1.0, 2.0}}));
  const Value b = t.constant(DenseMatrix::from_rows({{3.0}, {4.0}}));
  CHECK(t.value(t.matmul(a, b))(0, 0) == doctest::Approx(11.0));

  CHECK_THROWS_AS(t.matmul(a, a), s2fgl::DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
  s2fgl::Rng rng(7);
  Parameter a(testutil::random_matrix(4, 5, rng));
  Parameter b(testutil::random_matrix(5, 3, rng));
  const auto build = [&](Tape& t) { return t.sum(t.matmul(t.leaf(a), t.leaf(b))); };
  CHECK(testutil::gradient_rel_error(build, {&a, &b}) < 1e-6);
}

TEST_CASE("softmax_rows forward") {
  Tape t;
  const Value even = t.softmax_rows(t.constant(DenseMatrix::from_rows({{0.0, 0.0}})));
  CHECK(t.value(even)(0, 0) == doctest::Approx(0.5));
  CHECK(t.value(even)(0, 1) == doctest::Approx(0.5));

  // Max-shift keeps huge logits finite.
  const Value shifted = t.softmax_rows(t.constant(DenseMatrix::from_rows({{1000.0, 0.0}})));
  CHECK(t.value(shifted)(0, 0) == doctest::Approx(1.0));
  CHECK(t.value(shifted)(0, 1) == doctest::Approx(0.0));
  CHECK(t.value(shifted).all_finite());
}

TEST_CASE("softmax_rows rows sum to one") {
  s2fgl::Rng rng(11);
  Tape t;
  const Value y = t.softmax_rows(t.constant(testutil::random_matrix(20, 7, rng, 3.0)));
  for (int i = 0; i < 20; ++i) {
    double s = 0.0;
    for (int j = 0; j < 7; ++j) s += t.value(y)(i, j);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax_rows Jacobian-vector product vs finite differences") {
  s2fgl::Rng rng(13);
  Parameter x(testutil::random_matrix(5, 4, rng));
  const DenseMatrix direction = testutil::random_matrix(5, 4, rng);
  const auto build = [&](Tape& t) {
    return t.sum(t.mul_elem(t.softmax_rows(t.leaf(x)), t.constant(direction)));
  };
  CHECK(testutil::gradient_rel_error(build, {&x}) < 1e-5);
}

TEST_CASE("kl_rows forward") {
  Tape t;
  const Value p = t.constant(DenseMatrix::from_rows({{0.3, 0.7}, {0.9, 0.1}}));
  CHECK(t.scalar(t.kl_rows(p, p)) == doctest::Approx(0.0));

  const Value point = t.constant(DenseMatrix::from_rows({{1.0, 0.0}}));
  const Value uniform = t.constant(DenseMatrix::from_rows({{0.5, 0.5}}));
  CHECK(t.scalar(t.kl_rows(point, uniform)) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  CHECK_THROWS_AS(t.kl_rows(point, p), s2fgl::DimensionError);
}

TEST_CASE("kl_rows is nonnegative on random distributions") {
  s2fgl::Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t;
    const Value p = t.softmax_rows(t.constant(testutil::random_matrix(6, 5, rng, 2.0)));
    const Value q = t.softmax_rows(t.constant(testutil::random_matrix(6, 5, rng, 2.0)));
    CHECK(t.scalar(t.kl_rows(p, q)) >= -1e-12);
    CHECK(t.scalar(t.kl_rows(p, p)) == doctest::Approx(0.0));
  }
}

TEST_CASE("kl_rows gradient w.r.t. logits feeding p") {
  s2fgl::Rng rng(19);
  Parameter logits(testutil::random_matrix(4, 5, rng));
  const DenseMatrix q_logits = testutil::random_matrix(4, 5, rng);
  const auto build = [&](Tape& t) {
    const Value p = t.softmax_rows(t.leaf(logits));
    const Value q = t.softmax_rows(t.constant(q_logits));
    return t.kl_rows(p, q);
  };
  CHECK(testutil::gradient_rel_error(build, {&logits}) < 1e-4);
}

TEST_CASE("mse") {
  Tape t;
  const Value a = t.constant(DenseMatrix::from_rows({{1.0, 2.0}}));
  CHECK(t.scalar(t.mse(a, a)) == doctest::Approx(0.0));
  const Value two = t.constant(DenseMatrix::from_rows({{2.0}}));
  const Value zero = t.constant(DenseMatrix::from_rows({{0.0}}));
  CHECK(t.scalar(t.mse(two, zero)) == doctest::Approx(4.0));

  s2fgl::Rng rng(23);
  Parameter x(testutil::random_matrix(3, 4, rng));
  const DenseMatrix target = testutil::random_matrix(3, 4, rng);
  const auto build = [&](Tape& tt) { return tt.mse(tt.leaf(x), tt.constant(target)); };
  CHECK(testutil::gradient_rel_error(build, {&x}) < 1e-6);
}

TEST_CASE("cross_entropy forward") {
  Tape t;
  const Value zeros = t.constant(DenseMatrix(3, 7));
  const std::vector<int> labels = {0, 3, 6};
  const std::vector<int> mask = {0, 1, 2};
  CHECK(t.scalar(t.cross_entropy(zeros, labels, mask)) ==
        doctest::Approx(std::log(7.0)).epsilon(1e-12));

  DenseMatrix confident(1, 4);
  confident(0, 2) = 1000.0;
  const Value big = t.constant(confident);
  CHECK(t.scalar(t.cross_entropy(big, {2}, {0})) == doctest::Approx(0.0));

  CHECK_THROWS_AS(t.cross_entropy(zeros, labels, {}), std::invalid_argument);
  CHECK_THROWS_AS(t.cross_entropy(zeros, {0, 9, 1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(t.cross_entropy(zeros, {0, -1, 1}, {1}), std::invalid_argument);
}

TEST_CASE("cross_entropy gradient on random logits") {
  s2fgl::Rng rng(29);
  Parameter logits(testutil::random_matrix(6, 4, rng));
  const std::vector<int> labels = {1, 0, 3, 2, 2, 1};
  const std::vector<int> mask = {0, 2, 3, 5};
  const auto build = [&](Tape& t) { return t.cross_entropy(t.leaf(logits), labels, mask); };
  CHECK(testutil::gradient_rel_error(build, {&logits}) < 1e-6);
}

TEST_CASE("cosine_sim_rows conventions") {
  Tape t;
  const DenseMatrix b = DenseMatrix::from_rows({{1.0, 2.0, 0.0}, {0.0, 0.0, 5.0}});
  const Value a =
      t.constant(DenseMatrix::from_rows({{1.0, 2.0, 0.0}, {0.0, 0.0, 0.0}, {-2.0, 1.0, 0.0}}));
  const Value sim = t.cosine_sim_rows(a, b);
  CHECK(t.value(sim)(0, 0) == doctest::Approx(1.0));          // self similarity
  CHECK(t.value(sim)(0, 1) == doctest::Approx(0.0));          // orthogonal
  CHECK(t.value(sim)(2, 0) == doctest::Approx(0.0));          // orthogonal
  CHECK(t.value(sim)(1, 0) == 0.0);                           // zero-norm row convention
  CHECK(t.value(sim)(1, 1) == 0.0);
}

TEST_CASE("cosine_sim_rows gradient") {
  s2fgl::Rng rng(31);
  Parameter a(testutil::random_matrix(4, 6, rng));
  const DenseMatrix b = testutil::random_matrix(3, 6, rng);
  const DenseMatrix dir = testutil::random_matrix(4, 3, rng);
  const auto build = [&](Tape& t) {
    return t.sum(t.mul_elem(t.cosine_sim_rows(t.leaf(a), b), t.constant(dir)));
  };
  CHECK(testutil::gradient_rel_error(build, {&a}) < 1e-5);
}

TEST_CASE("backward basics") {
  s2fgl::Rng rng(37);
  Parameter w(testutil::random_matrix(3, 4, rng));

  w.zero_grad();
  {
    Tape t;
    t.backward(t.sum(t.leaf(w)));
  }
  for (double g : w.grad.data()) CHECK(g == 1.0);

  w.zero_grad();
  {
    Tape t;
    t.backward(t.sum_squares(t.leaf(w)));
  }
  for (std::size_t i = 0; i < w.grad.data().size(); ++i) {
    CHECK(w.grad.data()[i] == doctest::Approx(2.0 * w.value.data()[i]));
  }

  Tape t;
  CHECK_THROWS_AS(t.backward(t.leaf(w)), std::invalid_argument);
}

TEST_CASE("backward accumulates across repeated leaves and calls") {
  Parameter w(DenseMatrix::from_rows({{2.0}}));
  w.zero_grad();
  Tape t;
  const Value loss = t.add(t.sum(t.leaf(w)), t.sum(t.leaf(w)));
  t.backward(loss);
  CHECK(w.grad(0, 0) == 2.0);  // both leaves reach the same parameter
  t.backward(loss);
  CHECK(w.grad(0, 0) == 4.0);  // second backward accumulates
}

TEST_CASE("gather_rows, concat_cols, col, mul_col gradients") {
  s2fgl::Rng rng(41);
  Parameter x(testutil::random_matrix(5, 3, rng));
  Parameter w(testutil::random_matrix(5, 1, rng));
  const DenseMatrix dir = testutil::random_matrix(3, 3, rng);
  const auto gather_build = [&](Tape& t) {
    return t.sum(t.mul_elem(t.gather_rows(t.leaf(x), {4, 0, 4}), t.constant(dir)));
  };
  CHECK(testutil::gradient_rel_error(gather_build, {&x}) < 1e-6);

  const auto mix_build = [&](Tape& t) {
    const Value cols = t.concat_cols({t.col(t.leaf(x), 2), t.col(t.leaf(x), 0)});
    return t.sum(t.mul_col(cols, t.leaf(w)));
  };
  CHECK(testutil::gradient_rel_error(mix_build, {&x, &w}) < 1e-6);
}

TEST_CASE("sgd_step") {
  Parameter p(DenseMatrix::from_rows({{1.0}}));
  std::vector<Parameter*> params = {&p};

  p.zero_grad();
  s2fgl::ad::sgd_step(params, 0.1, 0.0);
  CHECK(p.value(0, 0) == 1.0);  // zero gradient, zero decay: unchanged

  p.grad(0, 0) = 1.0;
  s2fgl::ad::sgd_step(params, 0.1, 0.0);
  CHECK(p.value(0, 0) == doctest::Approx(0.9));

  CHECK_THROWS_AS(s2fgl::ad::sgd_step(params, -0.1, 0.0), std::invalid_argument);
}

TEST_CASE("sgd on a quadratic follows the closed form") {
  // loss = ||w||^2 has gradient 2w, so each step multiplies w by (1 - 2*lr).
  const double lr = 0.1;
  Parameter w(DenseMatrix::from_rows({{3.0, -2.0}}));
  const DenseMatrix start = w.value;
  std::vector<Parameter*> params = {&w};
  for (int step = 0; step < 2; ++step) {
    w.zero_grad();
    Tape t;
    t.backward(t.sum_squares(t.leaf(w)));
    s2fgl::ad::sgd_step(params, lr, 0.0);
  }
  const double factor = (1.0 - 2.0 * lr) * (1.0 - 2.0 * lr);
  CHECK(w.value(0, 0) == doctest::Approx(factor * start(0, 0)));
  CHECK(w.value(0, 1) == doctest::Approx(factor * start(0, 1)));
}

TEST_CASE("gradients are deterministic under identical inputs") {
  const auto run = [] {
    s2fgl::Rng rng(99);
    Parameter a(testutil::random_matrix(6, 5, rng));
    Parameter b(testutil::random_matrix(5, 4, rng));
    Tape t;
    const Value loss =
        t.kl_rows(t.softmax_rows(t.matmul(t.leaf(a), t.leaf(b))),
                  t.softmax_rows(t.constant(testutil::random_matrix(6, 4, rng))));
    a.zero_grad();
    b.zero_grad();
    t.backward(loss);
    std::vector<double> flat = a.grad.data();
    flat.insert(flat.end(), b.grad.data().begin(), b.grad.data().end());
    return flat;
  };
  CHECK(run() == run());  // bitwise
}

TEST_CASE("frozen constants receive no gradient and stop flow") {
  Parameter w(DenseMatrix::from_rows({{1.0, 2.0}}));
  w.zero_grad();
  Tape t;
  // Constant copy of w's value: the path through it must contribute nothing.
  const Value frozen = t.constant(w.value);
  const Value loss = t.add(t.sum_squares(t.leaf(w)), t.sum_squares(frozen));
  t.backward(loss);
  CHECK(w.grad(0, 0) == doctest::Approx(2.0));
  CHECK(w.grad(0, 1) == doctest::Approx(4.0));
}
