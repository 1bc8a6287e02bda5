#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdds/distribution.hpp"
#include "sdds/params.hpp"
#include "sdds/solver.hpp"

namespace sdds {

/// Holding-time family for the transfer/refresh delays of states S3/S4.
/// `deterministic` is the real system (delays of exactly D and delta4);
/// `exponential` swaps in exponentials of equal mean, a test-only override
/// that must make the reference coincide with the four-state generator model.
enum class HoldingKind { deterministic, exponential };

/// The jump chain of the four-state semi-Markov process: visit-transition
/// probabilities P (self-transitions allowed) and mean holding time per state,
/// ordered [S1, S2, S3, S4].
struct EmbeddedChain {
  Eigen::Matrix4d transition = Eigen::Matrix4d::Zero();
  std::array<double, 4> mean_holding{};
};

/// Derives the embedded chain.  With an interrupt stream of total rate
/// Lambda = lambda_u + lambda_d racing against a deterministic delay delta,
/// the delay completes first with probability exp(-Lambda delta) and the mean
/// sojourn is
/// (1 - exp(-Lambda delta))/Lambda; interrupted sojourns split between the
/// update (to S3's entry, restarting the transfer) and the removal (to S1)
/// in proportion lambda_u : lambda_d.
inline EmbeddedChain embedded_chain(const SddsParams& params,
                                    HoldingKind holding = HoldingKind::deterministic) {
  params.validate();
  const double lu = params.lambda_u, ld = params.lambda_d, lf = params.lambda_f;
  const double q = std::pow(1.0 - params.p_loss, params.n_receivers);
  const double p6 = std::pow(1.0 - params.p_loss, params.n_receivers * params.p_loss);
  const double delta3 = params.transfer_delay;
  const double delta4 = params.reliable ? 2.0 * params.transfer_delay : params.refresh_period;
  const double big_lambda = lu + ld;

  // Completion probability and mean sojourn of a delay of mean `delta`
  // raced against the interrupt stream of rate Lambda.
  auto race = [&](double delta) -> std::pair<double, double> {
    if (holding == HoldingKind::exponential) {
      const double total = 1.0 / delta + big_lambda;
      return {(1.0 / delta) / total, 1.0 / total};
    }
    const double complete = std::exp(-big_lambda * delta);
    const double hold = -std::expm1(-big_lambda * delta) / big_lambda;  // -> delta as Lambda -> 0
    return {complete, hold};
  };
  const auto [c3, h3] = race(delta3);
  const auto [c4, h4] = race(delta4);
  const double sigma2 = lu + ld + lf;

  EmbeddedChain chain;
  chain.mean_holding = {1.0 / lu, 1.0 / sigma2, h3, h4};
  auto& P = chain.transition;
  P(0, 2) = 1.0;
  P(1, 0) = ld / sigma2;
  P(1, 2) = lu / sigma2;
  P(1, 3) = lf / sigma2;
  P(2, 1) = c3 * q;
  P(2, 3) = c3 * (1.0 - q);
  P(2, 2) = (lu / big_lambda) * (1.0 - c3);
  P(2, 0) = (ld / big_lambda) * (1.0 - c3);
  P(3, 1) = c4 * p6;
  P(3, 3) = c4 * (1.0 - p6);
  P(3, 2) = (lu / big_lambda) * (1.0 - c4);
  P(3, 0) = (ld / big_lambda) * (1.0 - c4);
  return chain;
}

/// Stationary distribution of the semi-Markov process: solves nu P = nu,
/// sum(nu) = 1 for the visit frequencies (restricted to states the chain can
/// actually reach from S1), then weights by mean holding time:
/// pi_i = nu_i h_i / sum_j nu_j h_j.
inline Distribution reference_steady_state(const SddsParams& params,
                                           HoldingKind holding = HoldingKind::deterministic) {
  const EmbeddedChain chain = embedded_chain(params, holding);
  const Eigen::Matrix4d& P = chain.transition;

  // Reachability from S1 through positive-probability jumps (S4 is never
  // entered when p_loss = 0 and lambda_f = 0; its visit frequency must then
  // be exactly 0, not solver noise).
  std::array<bool, 4> seen{true, false, false, false};
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < 4; ++j)
      if (P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
  }
  std::vector<std::size_t> reach;
  for (std::size_t i = 0; i < 4; ++i)
    if (seen[i]) reach.push_back(i);
  const auto m = static_cast<Eigen::Index>(reach.size());

  Eigen::MatrixXd M(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c)
      M(r, c) = P(static_cast<Eigen::Index>(reach[static_cast<std::size_t>(c)]),
                  static_cast<Eigen::Index>(reach[static_cast<std::size_t>(r)])) -
                (r == c ? 1.0 : 0.0);
  M.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu_fac(M);
  Eigen::VectorXd nu = lu_fac.solve(b);
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd r = b - M * nu;
    nu += lu_fac.solve(r);
  }
  if (!nu.allFinite())
    throw SolverError("reference_steady_state: visit-frequency solve failed");

  std::vector<double> weighted(4, 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double w = nu(i) * chain.mean_holding[reach[static_cast<std::size_t>(i)]];
    if (w < 0.0 && w > -1e-12) w = 0.0;
    weighted[reach[static_cast<std::size_t>(i)]] = w;
    total += w;
  }
  if (!(total > 0.0))
    throw SolverError("reference_steady_state: non-positive total holding weight");
  for (double& w : weighted) w /= total;
  try {
    return Distribution(std::move(weighted));
  } catch (const std::invalid_argument& e) {
    throw SolverError(std::string("reference_steady_state: ") + e.what());
  }
}

}  // namespace sdds
