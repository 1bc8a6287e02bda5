#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdds/distribution.hpp"
#include "sdds/generator.hpp"
#include "sdds/params.hpp"
#include "sdds/state_space.hpp"

namespace sdds {

/// Raised when a linear solve or an iteration fails to meet its accuracy
/// contract.  Solvers never return unverified numbers.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// States reachable from state 0 along positive-rate transitions, in index
/// order.  Restricting the stationary solve to this set keeps structurally
/// unreachable states at probability exactly 0 and the reduced system
/// nonsingular in corner cases (e.g. p_loss = 0 leaves chain 4 unreachable).
inline std::vector<std::size_t> reachable_from_start(const Generator& gen) {
  std::vector<char> seen(gen.dim(), 0);
  seen[0] = 1;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (const Generator::Transition& t : gen.transitions())
      if (t.from == i && !seen[t.to]) {
        seen[t.to] = 1;
        stack.push_back(t.to);
      }
  }
  std::vector<std::size_t> r;
  for (std::size_t i = 0; i < gen.dim(); ++i)
    if (seen[i]) r.push_back(i);
  return r;
}

}  // namespace detail

/// Stationary distribution of the generator: solves pi A = 0 with sum(pi) = 1
/// on the subsystem reachable from the first state, by LU factorization plus
/// iterative refinement.  The residual ‖pi A‖∞ is verified to be ≤ 1e-10;
/// violations raise SolverError instead of returning garbage.
inline Distribution steady_state(const Generator& gen) {
  const std::vector<std::size_t> reach = detail::reachable_from_start(gen);
  const auto m = static_cast<Eigen::Index>(reach.size());

  // Reduced system: rows are balance equations A^T pi = 0 for the reachable
  // states, with the last row replaced by the normalization sum(pi) = 1.
  Eigen::MatrixXd M(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c)
      M(r, c) = gen.matrix()(static_cast<Eigen::Index>(reach[static_cast<std::size_t>(c)]),
                             static_cast<Eigen::Index>(reach[static_cast<std::size_t>(r)]));
  M.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  Eigen::VectorXd x = lu.solve(b);
  for (int pass = 0; pass < 2; ++pass) {  // refinement recovers ~full precision
    const Eigen::VectorXd r = b - M * x;
    x += lu.solve(r);
  }
  if (!x.allFinite()) throw SolverError("steady_state: linear solve produced non-finite values");

  std::vector<double> pi(gen.dim(), 0.0);
  for (std::size_t i = 0; i < reach.size(); ++i)
    pi[reach[i]] = x(static_cast<Eigen::Index>(i));

  Eigen::Map<const Eigen::RowVectorXd> pi_row(pi.data(), static_cast<Eigen::Index>(pi.size()));
  const double residual = (pi_row * gen.matrix()).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10))
    throw SolverError("steady_state: residual " + std::to_string(residual) + " exceeds 1e-10");
  try {
    return Distribution(std::move(pi));
  } catch (const std::invalid_argument& e) {
    throw SolverError(std::string("steady_state: invalid stationary vector: ") + e.what());
  }
}

/// Transient distributions at the requested times, starting from pi0, by
/// uniformization: pi(t) = sum_n Poisson(Lambda t; n) pi0 P^n with
/// P = I + A/Lambda.  Long horizons are split into segments of Lambda*dt
/// ≤ 256 so the Poisson weights never underflow; each segment truncates at
/// cumulative weight 1 - 1e-13, keeping the total mass defect per time point
/// well under the 1e-10 contract.
inline std::vector<Distribution> transient(const Generator& gen, const Distribution& pi0,
                                           const std::vector<double>& times) {
  if (pi0.size() != gen.dim())
    throw std::invalid_argument("transient: initial distribution dimension mismatch");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0)
      throw std::invalid_argument("transient: times must be finite and >= 0");
    if (i > 0 && times[i] < times[i - 1])
      throw std::invalid_argument("transient: times must be sorted ascending");
  }
  std::vector<Distribution> out;
  out.reserve(times.size());
  if (times.empty()) return out;

  const double big_lambda = gen.max_exit_rate();
  const auto n = static_cast<Eigen::Index>(gen.dim());
  Eigen::RowVectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = pi0[static_cast<std::size_t>(i)];

  if (big_lambda == 0.0) {  // no transitions at all: constant trajectory
    for (std::size_t i = 0; i < times.size(); ++i) out.push_back(pi0);
    return out;
  }

  const Eigen::MatrixXd P =
      Eigen::MatrixXd::Identity(n, n) + gen.matrix() / big_lambda;
  constexpr double kMaxSegmentJumps = 256.0;
  constexpr double kSegmentTailMass = 1e-14;

  double t_now = 0.0;
  for (double target : times) {
    while (true) {
      const double dt = target - t_now;
      if (dt <= 0.0) break;
      const double step = std::min(dt, kMaxSegmentJumps / big_lambda);
      const double a = big_lambda * step;
      // Poisson(a) mixture of v P^n, accumulated until the tail is negligible.
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
      Eigen::RowVectorXd term = v;
      double weight = std::exp(-a);
      double cumulative = weight;
      acc += weight * term;
      for (int j = 1; cumulative < 1.0 - kSegmentTailMass; ++j) {
        term *= P;
        weight *= a / j;
        cumulative += weight;
        acc += weight * term;
        if (j > static_cast<int>(a) && weight < 1e-18) break;  // tail past the mode
        if (j > static_cast<int>(16 * kMaxSegmentJumps))       // guards a rounding stall
          throw SolverError("transient: uniformization series failed to converge");
      }
      v = acc;
      const double t_next = t_now + step;
      if (step == dt || t_next == t_now) {
        t_now = target;  // land exactly; a sub-resolution remainder carries no mass
        break;
      }
      t_now = t_next;
    }
    std::vector<double> probs(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) probs[static_cast<std::size_t>(i)] = v(i);
    try {
      out.emplace_back(std::move(probs));
    } catch (const std::invalid_argument& e) {
      throw SolverError(std::string("transient: invalid distribution at t=") +
                        std::to_string(target) + ": " + e.what());
    }
  }
  return out;
}

struct SweepPoint {
  int k;
  Distribution macro;  // over {S1, S2, S3, S4}
};

struct SweepResult {
  ModelKind kind = ModelKind::markov;
  std::vector<SweepPoint> points;
};

/// Steady-state macro distributions for each k in ks (strictly increasing).
inline SweepResult sweep_k(const SddsParams& params, ModelKind kind,
                           const std::vector<int>& ks) {
  if (ks.empty()) throw std::invalid_argument("sweep_k: ks must be non-empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw std::invalid_argument("sweep_k: every k must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1])
      throw std::invalid_argument("sweep_k: ks must be strictly increasing");
  }
  SweepResult result;
  result.kind = kind;
  result.points.reserve(ks.size());
  for (int k : ks) {
    try {
      const Generator gen = build_generator(params, kind, k);
      const StateSpace space = build_state_space(kind, k);
      result.points.push_back({k, aggregate(steady_state(gen), space)});
    } catch (const SolverError& e) {
      throw SolverError("sweep_k: k=" + std::to_string(k) + ": " + e.what());
    }
  }
  return result;
}

struct ConvergedConsistency {
  int k;       ///< the doubled phase count at which the stopping rule fired
  double pi2;  ///< consistency probability pi(S2) at that k
};

/// Doubles k from 1 until |pi2(2k) - pi2(k)| < tol, reporting pi2(2k).
/// Raises SolverError if the rule has not fired by k_max.
inline ConvergedConsistency find_converged_consistency(const SddsParams& params, ModelKind kind,
                                                       double tol = 1e-4, int k_max = 1024) {
  auto pi2_at = [&](int k) {
    const Generator gen = build_generator(params, kind, k);
    const StateSpace space = build_state_space(kind, k);
    return aggregate(steady_state(gen), space)[static_cast<std::size_t>(MacroState::s2)];
  };
  double prev = pi2_at(1);
  for (int k = 1; 2 * k <= k_max; k *= 2) {
    const double cur = pi2_at(2 * k);
    if (std::abs(cur - prev) < tol) return {2 * k, cur};
    prev = cur;
  }
  throw SolverError("find_converged_consistency: no convergence by k_max=" +
                    std::to_string(k_max));
}

}  // namespace sdds
