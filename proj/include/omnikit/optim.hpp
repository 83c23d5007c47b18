#pragma once

#include <Eigen/Core>
#include <vector>

namespace omnikit {

// rho acts on s = squared block residual norm.
struct RobustLoss {
  enum class Kind { none, huber, cauchy };
  Kind kind = Kind::none;
  double scale = 1.0;

  double rho(double s) const;
  double weight(double s) const;  // sqrt(drho/ds), IRLS row scaling

  static RobustLoss none_loss() { return {}; }
  static RobustLoss huber(double scale) { return {Kind::huber, scale}; }
  static RobustLoss cauchy(double scale) { return {Kind::cauchy, scale}; }
};

// Residuals come in blocks; a block touches only the parameters it lists,
// which keeps the numeric Jacobian and the normal equations sparse.
class LeastSquaresProblem {
 public:
  struct Block {
    int r_begin = 0;
    int r_count = 0;
    std::vector<int> params;
  };

  virtual ~LeastSquaresProblem() = default;
  virtual int num_params() const = 0;
  virtual int num_residuals() const = 0;
  virtual int num_blocks() const = 0;
  virtual Block block(int b) const = 0;
  virtual void eval_block(int b, const Eigen::VectorXd& p, double* out) const = 0;

  // Fold an accepted step into internal state; must leave residuals of the
  // (possibly rewritten) parameter vector unchanged. Default keeps p global.
  virtual void retract(Eigen::VectorXd&) {}

  void evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& r) const;
};

struct LmOptions {
  double init_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double max_lambda = 1e14;
  int max_iters = 200;
  double rel_tol = 1e-10;
  RobustLoss loss{};
  double diff_step = 1e-6;
};

struct LmResult {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt over a block-sparse problem. Steps are accepted only
// when the exact robust cost decreases, so the objective is monotone.
// Throws Diverged / RankDeficient on non-finite state.
LmResult lm_solve(LeastSquaresProblem& problem, Eigen::VectorXd& params, const LmOptions& opts = {});

double robust_cost(const LeastSquaresProblem& problem, const Eigen::VectorXd& r,
                   const RobustLoss& loss);

}  // namespace omnikit
