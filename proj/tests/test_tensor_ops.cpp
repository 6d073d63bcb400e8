#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctal/ops.hpp"
#include "testing.hpp"

using namespace ctal;
using testing_util::random_tensor;

namespace {

Tensor<double> mat2(std::initializer_list<std::initializer_list<double>> rows) {
  Index r = rows.size(), c = rows.begin()->size();
  Tensor<double> t({r, c});
  Index i = 0;
  for (auto& row : rows)
    for (double v : row) t[i++] = v;
  return t;
}

}  // namespace

TEST_CASE("matmul identity and hand-checked product") {
  Graph<double> g;
  auto a = g.input(mat2({{1, 2}, {3, 4}}));
  auto eye = g.input(mat2({{1, 0}, {0, 1}}));
  auto ia = matmul(eye, a);
  CHECK(ia.value().mat() == a.value().mat());

  auto b = g.input(mat2({{5}, {6}}));
  auto ab = matmul(a, b);
  CHECK(ab.value().at(0, 0) == doctest::Approx(17));
  CHECK(ab.value().at(1, 0) == doctest::Approx(39));
}

TEST_CASE("matmul reports both shapes on mismatch") {
  Graph<double> g;
  auto a = g.input(Tensor<double>({2, 3}));
  auto b = g.input(Tensor<double>({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("x [2x3]") != std::string::npos);
  }
}

TEST_CASE("softmax: symmetry, stability, direct-evaluation oracle") {
  Graph<double> g;
  auto x = g.input(mat2({{0, 0, 0}, {1000, 0, -1000}, {1, 2, 3}}));
  auto y = softmax_rows(x);
  CHECK(y.value().at(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(y.value().at(0, 2) == doctest::Approx(1.0 / 3));
  CHECK(y.value().at(1, 0) == doctest::Approx(1.0));
  CHECK(y.value().at(1, 1) == doctest::Approx(0.0));
  CHECK(std::isfinite(y.value().at(1, 0)));

  // independent evaluation of exp/sum for the third row
  double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
  double z = e1 + e2 + e3;
  CHECK(y.value().at(2, 0) == doctest::Approx(e1 / z).epsilon(1e-12));
  CHECK(y.value().at(2, 1) == doctest::Approx(e2 / z).epsilon(1e-12));
  CHECK(y.value().at(2, 2) == doctest::Approx(e3 / z).epsilon(1e-12));
  CHECK(y.value().at(2, 0) == doctest::Approx(0.09003057));
  CHECK(y.value().at(2, 1) == doctest::Approx(0.24472847));
  CHECK(y.value().at(2, 2) == doctest::Approx(0.66524096));
}

TEST_CASE("softmax rows sum to one under random masks; masked entries exactly zero") {
  Rng rng(7);
  Graph<double> g;
  auto x = g.input(random_tensor({6, 9}, rng, 3.0));
  std::vector<uint8_t> mask(6 * 9);
  for (auto& m : mask) m = bernoulli(rng, 0.7);
  for (int i = 0; i < 6; ++i) mask[i * 9 + (i % 9)] = 1;  // keep every row alive
  auto y = softmax_rows(x, &mask);
  for (int i = 0; i < 6; ++i) {
    double s = 0;
    for (int j = 0; j < 9; ++j) {
      double v = y.value().at(i, j);
      CHECK(v >= 0.0);
      if (!mask[i * 9 + j]) CHECK(v == 0.0);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("softmax fully-masked row raises degenerate attention") {
  Graph<double> g;
  auto x = g.input(Tensor<double>({2, 3}));
  std::vector<uint8_t> mask = {1, 1, 1, 0, 0, 0};
  CHECK_THROWS_AS(softmax_rows(x, &mask), DegenerateAttentionError);
}

TEST_CASE("layer_norm: zero-variance row, closed-form row, mean tracks beta") {
  Graph<double> g;
  auto gamma = g.input(Tensor<double>::full({3}, 1.0));
  auto beta = g.input(Tensor<double>({3}));

  auto c = g.input(Tensor<double>::full({1, 3}, 5.0));
  auto yc = layer_norm(c, gamma, beta, 1e-5);
  for (int j = 0; j < 3; ++j) CHECK(yc.value().at(0, j) == doctest::Approx(0.0));

  auto x = g.input(mat2({{1, 2, 3}}));
  auto y = layer_norm(x, gamma, beta, 0.0);
  // (x - mean) / sqrt(population variance)
  double sigma = std::sqrt(2.0 / 3.0);
  CHECK(y.value().at(0, 0) == doctest::Approx(-1.0 / sigma));
  CHECK(y.value().at(0, 0) == doctest::Approx(-1.2247448));
  CHECK(y.value().at(0, 1) == doctest::Approx(0.0));
  CHECK(y.value().at(0, 2) == doctest::Approx(1.2247448));

  Rng rng(3);
  auto b2 = g.input(random_tensor({4}, rng));
  auto x2 = g.input(random_tensor({5, 4}, rng));
  auto y2 = layer_norm(x2, g.input(Tensor<double>::full({4}, 1.0)), b2, 1e-5);
  double beta_mean = b2.value().flat().mean();
  for (int i = 0; i < 5; ++i)
    CHECK(y2.value().mat().row(i).mean() == doctest::Approx(beta_mean).epsilon(1e-4));
}

TEST_CASE("max_rows ignores masked rows") {
  Graph<double> g;
  Rng rng(11);
  auto t = random_tensor({4, 5}, rng);
  std::vector<uint8_t> valid = {1, 1, 0, 1};
  auto base = max_rows(g.input(t), valid);
  t.mat().row(2).setConstant(1e9);
  auto spiked = max_rows(g.input(t), valid);
  CHECK(base.value().mat() == spiked.value().mat());

  std::vector<uint8_t> none = {0, 0, 0, 0};
  CHECK_THROWS_AS(max_rows(g.input(t), none), DegenerateAttentionError);
}

TEST_CASE("cross entropy: uniform logits give ln V, confident logits approach zero") {
  Graph<double> g;
  const int v = 23;
  auto uniform = g.input(Tensor<double>({2, v}));
  auto l1 = cross_entropy_mean(uniform, {0, 7});
  CHECK(l1.value()[0] == doctest::Approx(std::log(double(v))).epsilon(1e-12));

  Tensor<double> confident({1, v});
  confident.at(0, 4) = 50.0;
  auto l2 = cross_entropy_mean(g.input(confident), {4});
  CHECK(l2.value()[0] < 1e-12);

  // random case equals a naive per-position loop
  Rng rng(5);
  auto logits = random_tensor({6, v}, rng, 2.0);
  std::vector<int> targets;
  for (int i = 0; i < 6; ++i) targets.push_back(uniform_int(rng, 0, v - 1));
  auto l3 = cross_entropy_mean(g.input(logits), targets);
  double ref = 0;
  for (int i = 0; i < 6; ++i) {
    double mx = logits.mat().row(i).maxCoeff();
    double z = 0;
    for (int j = 0; j < v; ++j) z += std::exp(logits.at(i, j) - mx);
    ref += std::log(z) + mx - logits.at(i, targets[i]);
  }
  ref /= 6;
  CHECK(l3.value()[0] == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("l1 loss: exact match is zero, unit offset is one") {
  Graph<double> g;
  Rng rng(9);
  auto target = random_tensor({3, 4}, rng);
  auto same = l1_mean(g.input(target), target);
  CHECK(same.value()[0] == doctest::Approx(0.0));

  Tensor<double> shifted = target;
  shifted.flat() += 1.0;
  auto off = l1_mean(g.input(shifted), target);
  CHECK(off.value()[0] == doctest::Approx(1.0));
}

TEST_CASE("slice / concat / select round trips") {
  Graph<double> g;
  Rng rng(2);
  auto x = g.input(random_tensor({4, 6}, rng));
  auto left = slice_cols(x, 0, 2);
  auto mid = slice_cols(x, 2, 3);
  auto right = slice_cols(x, 5, 1);
  auto back = concat_cols<double>({left, mid, right});
  CHECK(back.value().mat() == x.value().mat());

  auto sel = select_rows(x, {3, 0});
  CHECK(sel.value().mat().row(0) == x.value().mat().row(3));
  CHECK(sel.value().mat().row(1) == x.value().mat().row(0));

  CHECK_THROWS_AS(slice_cols(x, 5, 2), DimensionError);
}

TEST_CASE("rows_lookup gathers table rows") {
  Graph<double> g;
  Rng rng(4);
  auto table = g.input(random_tensor({10, 3}, rng));
  auto e = rows_lookup(table, {7, 7, 1});
  CHECK(e.value().mat().row(0) == table.value().mat().row(7));
  CHECK(e.value().mat().row(1) == table.value().mat().row(7));
  CHECK(e.value().mat().row(2) == table.value().mat().row(1));
  CHECK_THROWS_AS(rows_lookup(table, {10}), DimensionError);
}

TEST_CASE("tensor invariants: shape/product check and NaN detection") {
  CHECK_THROWS_AS(Tensor<double>({2, 2}, VecX<double>::Zero(3)), DimensionError);
  Tensor<double> t({2, 2});
  CHECK(t.all_finite());
  t[1] = std::nan("");
  CHECK(!t.all_finite());
  t[1] = 0.0;
  t[2] = std::numeric_limits<double>::infinity();
  CHECK(!t.all_finite());
}

TEST_CASE("dropout: identity in eval mode, inverted scaling in train mode") {
  Graph<double> g;
  Rng rng(21);
  auto x = g.input(Tensor<double>::full({50, 10}, 1.0));
  auto eval_y = dropout(x, 0.5, rng, false);
  CHECK(eval_y.id == x.id);  // passthrough, no node added

  auto train_y = dropout(x, 0.5, rng, true);
  long zeros = 0, scaled = 0;
  for (Index i = 0; i < train_y.value().numel(); ++i) {
    double v = train_y.value()[i];
    if (v == 0.0) ++zeros;
    else {
      CHECK(v == doctest::Approx(2.0));
      ++scaled;
    }
  }
  CHECK(zeros > 100);
  CHECK(scaled > 100);
}
