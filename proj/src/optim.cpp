#include "omnikit/optim.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "omnikit/error.hpp"

namespace omnikit {

double RobustLoss::rho(double s) const {
  switch (kind) {
    case Kind::none:
      return s;
    case Kind::huber: {
      const double d2 = scale * scale;
      return s <= d2 ? s : 2.0 * scale * std::sqrt(s) - d2;
    }
    case Kind::cauchy: {
      const double d2 = scale * scale;
      return d2 * std::log1p(s / d2);
    }
  }
  return s;
}

double RobustLoss::weight(double s) const {
  switch (kind) {
    case Kind::none:
      return 1.0;
    case Kind::huber: {
      const double d2 = scale * scale;
      return s <= d2 ? 1.0 : std::sqrt(scale / std::sqrt(s));
    }
    case Kind::cauchy: {
      const double d2 = scale * scale;
      return std::sqrt(1.0 / (1.0 + s / d2));
    }
  }
  return 1.0;
}

void LeastSquaresProblem::evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
  r.resize(num_residuals());
  for (int b = 0; b < num_blocks(); ++b) {
    const Block blk = block(b);
    eval_block(b, p, r.data() + blk.r_begin);
  }
}

double robust_cost(const LeastSquaresProblem& problem, const Eigen::VectorXd& r,
                   const RobustLoss& loss) {
  double cost = 0.0;
  for (int b = 0; b < problem.num_blocks(); ++b) {
    const auto blk = problem.block(b);
    cost += loss.rho(r.segment(blk.r_begin, blk.r_count).squaredNorm());
  }
  return cost;
}

namespace {

// Accumulate the weighted normal equations block by block; J is never formed.
void assemble(LeastSquaresProblem& problem, const std::vector<LeastSquaresProblem::Block>& blocks,
              const Eigen::VectorXd& p, const Eigen::VectorXd& r, const LmOptions& opts,
              Eigen::MatrixXd& H, Eigen::VectorXd& g) {
  const int n = problem.num_params();
  H.setZero(n, n);
  g.setZero(n);
  Eigen::VectorXd pw = p;
  for (size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    const int m = blk.r_count;
    const int k = static_cast<int>(blk.params.size());
    Eigen::MatrixXd Jb(m, k);
    Eigen::VectorXd lo(m), hi(m);
    for (int c = 0; c < k; ++c) {
      const int pi = blk.params[static_cast<size_t>(c)];
      const double h = opts.diff_step * std::max(1.0, std::abs(pw[pi]));
      const double saved = pw[pi];
      pw[pi] = saved + h;
      problem.eval_block(static_cast<int>(b), pw, hi.data());
      pw[pi] = saved - h;
      problem.eval_block(static_cast<int>(b), pw, lo.data());
      pw[pi] = saved;
      Jb.col(c) = (hi - lo) / (2.0 * h);
    }
    Eigen::VectorXd rb = r.segment(blk.r_begin, m);
    const double w = opts.loss.weight(rb.squaredNorm());
    if (w != 1.0) {
      Jb *= w;
      rb *= w;
    }
    const Eigen::MatrixXd HtH = Jb.transpose() * Jb;
    const Eigen::VectorXd Jtr = Jb.transpose() * rb;
    for (int c = 0; c < k; ++c) {
      const int pc = blk.params[static_cast<size_t>(c)];
      g[pc] += Jtr[c];
      for (int c2 = 0; c2 < k; ++c2) H(pc, blk.params[static_cast<size_t>(c2)]) += HtH(c, c2);
    }
  }
}

}  // namespace

LmResult lm_solve(LeastSquaresProblem& problem, Eigen::VectorXd& params, const LmOptions& opts) {
  std::vector<LeastSquaresProblem::Block> blocks;
  blocks.reserve(static_cast<size_t>(problem.num_blocks()));
  for (int b = 0; b < problem.num_blocks(); ++b) blocks.push_back(problem.block(b));

  Eigen::VectorXd r;
  problem.evaluate(params, r);
  double cost = robust_cost(problem, r, opts.loss);
  if (!std::isfinite(cost)) fail("Diverged", "initial cost is not finite");

  LmResult result;
  result.initial_cost = cost;

  const int n = problem.num_params();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd g(n);
  double lambda = opts.init_lambda;

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    assemble(problem, blocks, params, r, opts, H, g);
    if (!H.allFinite() || !g.allFinite()) fail("Diverged", "non-finite normal equations");

    bool accepted = false;
    while (lambda <= opts.max_lambda) {
      Eigen::MatrixXd A = H;
      for (int i = 0; i < n; ++i) A(i, i) += lambda * std::max(H(i, i), 1e-12);
      Eigen::VectorXd step = A.ldlt().solve(-g);
      if (!step.allFinite()) fail("RankDeficient", "normal equation solve failed");

      Eigen::VectorXd candidate = params + step;
      Eigen::VectorXd r_new;
      problem.evaluate(candidate, r_new);
      const double cost_new = robust_cost(problem, r_new, opts.loss);
      if (std::isfinite(cost_new) && cost_new < cost) {
        const double rel = (cost - cost_new) / std::max(cost, 1e-300);
        params = candidate;
        problem.retract(params);
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / opts.lambda_down, 1e-12);
        accepted = true;
        if (rel < opts.rel_tol) {
          result.converged = true;
          ++iter;
        }
        break;
      }
      lambda *= opts.lambda_up;
    }
    if (!accepted || result.converged) {
      result.converged = true;  // stalled at max damping counts as converged
      break;
    }
  }

  result.final_cost = cost;
  result.iterations = iter;
  return result;
}

}  // namespace omnikit
