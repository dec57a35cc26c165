#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fd_check.hpp"
#include "gmt/tensor.hpp"

#include <cmath>
#include <random>

using namespace gmt;
using testutil::fd_check_op;
using testutil::random_matrix;

TEST_CASE("matmul matches triple-loop oracle") {
  std::mt19937_64 rng(1);
  Matrix a = random_matrix(4, 3, rng);
  Matrix b = random_matrix(3, 5, rng);
  Matrix expect = Matrix::Zero(4, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j)
      for (int l = 0; l < 3; ++l) expect(i, j) += a(i, l) * b(l, j);
  Matrix got = matmul(Tensor(a), Tensor(b)).value();
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(matmul(Tensor(Matrix::Zero(2, 3)), Tensor(Matrix::Zero(2, 3))),
                  std::invalid_argument);
}

TEST_CASE("elementwise ops and transpose") {
  std::mt19937_64 rng(2);
  Matrix a = random_matrix(3, 4, rng);
  Matrix b = random_matrix(3, 4, rng);
  CHECK((add(Tensor(a), Tensor(b)).value() - (a + b)).norm() == 0.0);
  CHECK((sub(Tensor(a), Tensor(b)).value() - (a - b)).norm() == 0.0);
  CHECK((mul(Tensor(a), Tensor(b)).value() - a.cwiseProduct(b)).norm() == 0.0);
  CHECK((scale(Tensor(a), -2.5).value() - (-2.5 * a)).norm() == 0.0);
  CHECK((transpose(Tensor(a)).value() - a.transpose()).norm() == 0.0);
}

TEST_CASE("softmax rows and columns sum to one and match direct formula") {
  std::mt19937_64 rng(3);
  Matrix x = random_matrix(5, 7, rng, 3.0);
  Matrix r = softmax(Tensor(x), 1).value();
  Matrix c = softmax(Tensor(x), 0).value();
  for (int i = 0; i < 5; ++i) CHECK(r.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int j = 0; j < 7; ++j) CHECK(c.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
  // direct (unstabilized) oracle on moderate inputs
  for (int i = 0; i < 5; ++i) {
    double z = x.row(i).array().exp().sum();
    for (int j = 0; j < 7; ++j)
      CHECK(r(i, j) == doctest::Approx(std::exp(x(i, j)) / z).epsilon(1e-12));
  }
}

TEST_CASE("softmax is stable under large logits") {
  Matrix x(1, 3);
  x << 1000.0, 1000.0, 999.0;
  Matrix y = softmax(Tensor(x), 1).value();
  CHECK(std::isfinite(y.sum()));
  CHECK(y.sum() == doctest::Approx(1.0));
  CHECK(y(0, 0) == doctest::Approx(y(0, 1)));
}

TEST_CASE("layer_norm output rows have zero mean and unit variance") {
  std::mt19937_64 rng(4);
  // rows with variance well above the epsilon floor
  Matrix x = random_matrix(6, 16, rng, 5.0);
  Tensor gamma(Matrix::Ones(1, 16));
  Tensor beta(Matrix::Zero(1, 16));
  Matrix y = layer_norm(Tensor(x), gamma, beta).value();
  for (int i = 0; i < 6; ++i) {
    double mean = y.row(i).mean();
    double var = (y.row(i).array() - mean).square().sum() / 16.0;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("layer_norm applies the affine parameters") {
  Matrix x(1, 4);
  x << 10.0, 20.0, 30.0, 40.0;
  Matrix g(1, 4), b(1, 4);
  g << 2, 2, 2, 2;
  b << 1, 1, 1, 1;
  Matrix y0 = layer_norm(Tensor(x), Tensor(Matrix::Ones(1, 4)),
                         Tensor(Matrix::Zero(1, 4))).value();
  Matrix y1 = layer_norm(Tensor(x), Tensor(g), Tensor(b)).value();
  CHECK((y1 - (2.0 * y0.array() + 1.0).matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("shape manipulation ops") {
  std::mt19937_64 rng(5);
  Matrix a = random_matrix(3, 2, rng), b = random_matrix(3, 4, rng);
  Matrix cc = concat_cols({Tensor(a), Tensor(b)}).value();
  CHECK(cc.rows() == 3);
  CHECK(cc.cols() == 6);
  CHECK((cc.leftCols(2) - a).norm() == 0.0);
  CHECK((cc.rightCols(4) - b).norm() == 0.0);

  Matrix c = random_matrix(2, 2, rng);
  Matrix cr = concat_rows({Tensor(a), Tensor(c)}).value();
  CHECK(cr.rows() == 5);
  CHECK((cr.topRows(3) - a).norm() == 0.0);

  Matrix s = row_slice(Tensor(b), 1, 2).value();
  CHECK((s - b.middleRows(1, 2)).norm() == 0.0);

  Matrix sel = select_rows(Tensor(b), {2, 0}).value();
  CHECK((sel.row(0) - b.row(2)).norm() == 0.0);
  CHECK((sel.row(1) - b.row(0)).norm() == 0.0);

  Matrix sc = scatter_rows(Tensor(sel), {2, 0}, 3).value();
  CHECK((sc.row(2) - b.row(2)).norm() == 0.0);
  CHECK((sc.row(0) - b.row(0)).norm() == 0.0);
  CHECK(sc.row(1).norm() == 0.0);
}

TEST_CASE("reductions") {
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(sum_all(Tensor(x)).value()(0, 0) == 21.0);
  CHECK(mean_all(Tensor(x)).value()(0, 0) == doctest::Approx(3.5));
  CHECK((sum_rows(Tensor(x)).value() - (Matrix(1, 3) << 5, 7, 9).finished()).norm() == 0.0);
  CHECK((mean_rows(Tensor(x)).value() - (Matrix(1, 3) << 2.5, 3.5, 4.5).finished()).norm() == 0.0);
  CHECK(l2_norm(Tensor(x)).value()(0, 0) == doctest::Approx(x.norm()));
}

TEST_CASE("cross entropy matches log-sum-exp oracle") {
  Matrix logits(2, 3);
  logits << 1.0, 2.0, 0.5, -1.0, 0.0, 3.0;
  std::vector<int> labels{1, 2};
  double expect = 0.0;
  for (int i = 0; i < 2; ++i) {
    double lse = std::log(logits.row(i).array().exp().sum());
    expect += lse - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  expect /= 2.0;
  CHECK(cross_entropy_with_logits(Tensor(logits), labels).value()(0, 0) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("mse matches mean of squared differences") {
  Matrix p(2, 2), t(2, 2);
  p << 1, 2, 3, 4;
  t << 0, 2, 5, 4;
  CHECK(mse_loss(Tensor(p), t).value()(0, 0) == doctest::Approx((1.0 + 4.0) / 4.0));
}

TEST_CASE("backward handles reused intermediates (diamond graph)") {
  Parameter x(Matrix::Constant(1, 1, 3.0), "x");
  Tensor y = mul(x.tensor, x.tensor);     // x^2
  Tensor z = add(y, y);                   // 2 x^2
  backward(sum_all(z));
  CHECK(x.tensor.grad()(0, 0) == doctest::Approx(12.0));  // d/dx 2x^2 = 4x
}

TEST_CASE("no-grad mode records nothing") {
  Parameter x(Matrix::Ones(2, 2), "x");
  NoGradGuard ng;
  Tensor y = sum_all(mul(x.tensor, x.tensor));
  CHECK_THROWS(backward(y));
}

TEST_CASE("finite differences: core binary and unary ops") {
  std::mt19937_64 rng(10);
  auto m = [&](int r, int c, double s = 1.0) { return random_matrix(r, c, rng, s); };

  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return matmul(t[0], t[1]); },
                    {m(3, 4), m(4, 2)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return transpose(t[0]); },
                    {m(3, 4)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return add(t[0], t[1]); },
                    {m(3, 3), m(3, 3)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return sub(t[0], t[1]); },
                    {m(3, 3), m(3, 3)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return mul(t[0], t[1]); },
                    {m(3, 3), m(3, 3)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return scale(t[0], -1.7); },
                    {m(2, 5)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return add_rowvec(t[0], t[1]); },
                    {m(4, 3), m(1, 3)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return mul_colvec(t[0], t[1]); },
                    {m(4, 3), m(4, 1)}) < 1e-4);
  // keep the divisor away from zero
  Matrix s = Matrix::Constant(1, 1, 2.3);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return div_scalar(t[0], t[1]); },
                    {m(3, 3), s}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return l2_norm(t[0]); },
                    {m(3, 3).array().abs().matrix() + Matrix::Constant(3, 3, 0.5)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return tanh_t(t[0]); },
                    {m(3, 4)}) < 1e-4);
  // relu checked away from the kink
  Matrix r = m(3, 4);
  for (int i = 0; i < r.size(); ++i)
    if (std::abs(r(i)) < 0.1) r(i) = 0.5;
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return relu(t[0]); }, {r}) < 1e-4);
}

TEST_CASE("finite differences: softmax, layer_norm, losses, reshapes") {
  std::mt19937_64 rng(11);
  auto m = [&](int r, int c, double s = 1.0) { return random_matrix(r, c, rng, s); };

  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return softmax(t[0], 1); },
                    {m(4, 5)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return softmax(t[0], 0); },
                    {m(4, 5)}) < 1e-4);
  CHECK(fd_check_op(
            [](const std::vector<Tensor>& t) { return layer_norm(t[0], t[1], t[2]); },
            {m(4, 8, 3.0), m(1, 8), m(1, 8)}) < 1e-4);
  CHECK(fd_check_op(
            [](const std::vector<Tensor>& t) { return concat_cols({t[0], t[1]}); },
            {m(3, 2), m(3, 4)}) < 1e-4);
  CHECK(fd_check_op(
            [](const std::vector<Tensor>& t) { return concat_rows({t[0], t[1]}); },
            {m(2, 3), m(4, 3)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return row_slice(t[0], 1, 2); },
                    {m(5, 3)}) < 1e-4);
  CHECK(fd_check_op(
            [](const std::vector<Tensor>& t) { return select_rows(t[0], {3, 0, 3}); },
            {m(5, 3)}) < 1e-4);
  CHECK(fd_check_op(
            [](const std::vector<Tensor>& t) { return scatter_rows(t[0], {4, 1}, 6); },
            {m(2, 3)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return mean_rows(t[0]); },
                    {m(4, 3)}) < 1e-4);
  CHECK(fd_check_op([](const std::vector<Tensor>& t) { return sum_rows(t[0]); },
                    {m(4, 3)}) < 1e-4);
  Matrix target = m(3, 3);
  CHECK(fd_check_op(
            [&](const std::vector<Tensor>& t) { return mse_loss(t[0], target); },
            {m(3, 3)}) < 1e-4);
  std::vector<int> labels{0, 2, 1};
  CHECK(fd_check_op(
            [&](const std::vector<Tensor>& t) {
              return cross_entropy_with_logits(t[0], labels);
            },
            {m(3, 3)}) < 1e-4);
  std::mt19937_64 drng(1);
  CHECK(fd_check_op(
            [&](const std::vector<Tensor>& t) {
              std::mt19937_64 local(9);  // same mask every call
              return dropout(t[0], 0.5, local, true);
            },
            {m(4, 4)}) < 1e-4);
}

TEST_CASE("allocation accounting returns to baseline") {
  std::int64_t before = AllocStats::current();
  {
    Tensor a(Matrix::Ones(10, 10));
    Tensor b = matmul(a, a);
    CHECK(AllocStats::current() >= before + 200);
  }
  CHECK(AllocStats::current() == before);
}

TEST_CASE("allocation accounting includes gradients") {
  std::int64_t before = AllocStats::current();
  {
    Parameter p(Matrix::Ones(8, 8), "p");
    backward(sum_all(mul(p.tensor, p.tensor)));
    CHECK(AllocStats::current() >= before + 2 * 64);
  }
  CHECK(AllocStats::current() == before);
}
