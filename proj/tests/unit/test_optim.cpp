#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "omnikit/error.hpp"
#include "omnikit/hungarian.hpp"
#include "omnikit/one_euro.hpp"
#include "omnikit/optim.hpp"
#include "omnikit/rng.hpp"

using namespace omnikit;

namespace {

// y = exp(a x) + b sampled on a grid; residual blocks of one sample each
class ExpFitProblem : public LeastSquaresProblem {
 public:
  ExpFitProblem(Eigen::VectorXd xs, Eigen::VectorXd ys) : xs_(std::move(xs)), ys_(std::move(ys)) {}
  int num_params() const override { return 2; }
  int num_residuals() const override { return static_cast<int>(xs_.size()); }
  int num_blocks() const override { return static_cast<int>(xs_.size()); }
  Block block(int b) const override { return {b, 1, {0, 1}}; }
  void eval_block(int b, const Eigen::VectorXd& p, double* out) const override {
    out[0] = std::exp(p[0] * xs_[b]) + p[1] - ys_[b];
  }

 private:
  Eigen::VectorXd xs_, ys_;
};

std::vector<int> brute_force_assignment(const Eigen::MatrixXd& cost, double* best_total) {
  const int r = static_cast<int>(cost.rows());
  const int c = static_cast<int>(cost.cols());
  std::vector<int> cols(static_cast<size_t>(c));
  for (int j = 0; j < c; ++j) cols[static_cast<size_t>(j)] = j;
  std::vector<int> best;
  double best_cost = 1e300;
  // r <= c assumed by callers
  std::vector<int> perm = cols;
  std::sort(perm.begin(), perm.end());
  do {
    double total = 0;
    for (int i = 0; i < r; ++i) total += cost(i, perm[static_cast<size_t>(i)]);
    if (total < best_cost) {
      best_cost = total;
      best.assign(perm.begin(), perm.begin() + r);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  *best_total = best_cost;
  return best;
}

}  // namespace

TEST_SUITE("optim") {
  TEST_CASE("recovers exponential parameters from clean data") {
    SplitRng rng(101);
    Eigen::VectorXd xs(40), ys(40);
    for (int i = 0; i < 40; ++i) {
      xs[i] = rng.uniform(-1, 1);
      ys[i] = std::exp(0.7 * xs[i]) + 2.5;
    }
    ExpFitProblem problem(xs, ys);
    Eigen::VectorXd p(2);
    p << 0.0, 0.0;
    LmResult res = lm_solve(problem, p);
    CHECK(res.converged);
    CHECK(res.final_cost <= res.initial_cost);
    CHECK(p[0] == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(p[1] == doctest::Approx(2.5).epsilon(1e-8));
  }

  TEST_CASE("huber loss shrugs off a gross outlier") {
    SplitRng rng(102);
    Eigen::VectorXd xs(60), ys(60);
    for (int i = 0; i < 60; ++i) {
      xs[i] = rng.uniform(-1, 1);
      ys[i] = std::exp(0.7 * xs[i]) + 2.5;
    }
    ys[17] += 50.0;
    Eigen::VectorXd plain(2), robust(2);
    plain << 0.2, 1.0;
    robust << 0.2, 1.0;
    {
      ExpFitProblem problem(xs, ys);
      lm_solve(problem, plain);
    }
    {
      ExpFitProblem problem(xs, ys);
      LmOptions opts;
      opts.loss = RobustLoss::huber(0.5);
      lm_solve(problem, robust, opts);
    }
    const double plain_err = std::abs(plain[0] - 0.7) + std::abs(plain[1] - 2.5);
    const double robust_err = std::abs(robust[0] - 0.7) + std::abs(robust[1] - 2.5);
    CHECK(robust_err < 0.1 * plain_err);
    CHECK(std::abs(robust[0] - 0.7) < 0.05);
    CHECK(std::abs(robust[1] - 2.5) < 0.05);
  }

  TEST_CASE("robust losses have the right shape") {
    RobustLoss h = RobustLoss::huber(1.0);
    CHECK(h.rho(0.25) == doctest::Approx(0.25));
    CHECK(h.rho(4.0) == doctest::Approx(2 * 2.0 - 1.0));
    RobustLoss c = RobustLoss::cauchy(2.0);
    CHECK(c.rho(0.0) == 0.0);
    CHECK(c.rho(4.0) == doctest::Approx(4.0 * std::log(2.0)));
    // weights decrease with residual size
    CHECK(h.weight(0.25) == 1.0);
    CHECK(h.weight(100.0) < h.weight(4.0));
    CHECK(c.weight(100.0) < c.weight(1.0));
  }
}

TEST_SUITE("hungarian") {
  TEST_CASE("matches brute force optimum on random matrices") {
    SplitRng rng(111);
    for (int trial = 0; trial < 200; ++trial) {
      const int r = rng.uniform_int(1, 6);
      const int c = rng.uniform_int(r, 7);
      Eigen::MatrixXd cost(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) cost(i, j) = rng.uniform(0, 100);
      double best_total = 0;
      brute_force_assignment(cost, &best_total);
      auto got = hungarian(cost);
      double total = 0;
      std::vector<char> used(static_cast<size_t>(c), 0);
      for (int i = 0; i < r; ++i) {
        REQUIRE(got[static_cast<size_t>(i)] >= 0);
        CHECK(!used[static_cast<size_t>(got[static_cast<size_t>(i)])]);
        used[static_cast<size_t>(got[static_cast<size_t>(i)])] = 1;
        total += cost(i, got[static_cast<size_t>(i)]);
      }
      CHECK(total == doctest::Approx(best_total).epsilon(1e-9));
    }
  }

  TEST_CASE("forbidden entries produce unmatched rows") {
    Eigen::MatrixXd cost(2, 2);
    cost << 1.0, kForbiddenCost, kForbiddenCost, kForbiddenCost;
    auto got = hungarian(cost);
    CHECK(got[0] == 0);
    CHECK(got[1] == -1);
  }

  TEST_CASE("more rows than columns leaves someone out") {
    Eigen::MatrixXd cost(3, 2);
    cost << 1, 10, 2, 1, 5, 5;
    auto got = hungarian(cost);
    int matched = 0;
    for (int v : got) matched += (v >= 0);
    CHECK(matched == 2);
    CHECK(got[0] == 0);
    CHECK(got[1] == 1);
    CHECK(got[2] == -1);
  }
}

TEST_SUITE("one_euro") {
  TEST_CASE("constant input passes through exactly") {
    OneEuroState st;
    for (int i = 0; i < 50; ++i) CHECK(one_euro_step(st, 3.25, 1.0 / 30) == 3.25);
  }

  TEST_CASE("first sample after reset is identity") {
    OneEuroState st;
    one_euro_step(st, 5.0, 1.0 / 30);
    one_euro_step(st, 6.0, 1.0 / 30);
    st.reset();
    CHECK(one_euro_step(st, -2.0, 1.0 / 30) == -2.0);
  }

  TEST_CASE("step response matches frozen golden sequence") {
    // golden values from evaluating the recursion independently at 30 Hz
    const double golden[6] = {0.0,
                              0.178345091828760,
                              0.327611945891120,
                              0.451085824553186,
                              0.552432271988701,
                              0.635205414951810};
    OneEuroState st;
    CHECK(one_euro_step(st, 0.0, 1.0 / 30) == doctest::Approx(golden[0]).epsilon(1e-12));
    double prev = 0.0;
    for (int i = 1; i < 6; ++i) {
      double y = one_euro_step(st, 1.0, 1.0 / 30);
      CHECK(y == doctest::Approx(golden[i]).epsilon(1e-12));
      CHECK(y > prev);
      CHECK(y < 1.0);
      prev = y;
    }
  }
}
