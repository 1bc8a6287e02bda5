#pragma once

#include <cmath>
#include <stdexcept>

#include "sdds/params.hpp"

namespace sdds {

/// Rate of completing an update broadcast with every receiver reached:
/// (1 - p)^N / D.  The broadcast occupies the full transfer window D and
/// succeeds only if none of the N per-receiver copies is lost.
inline double rate_update_success(const SddsParams& params) {
  return std::pow(1.0 - params.p_loss, params.n_receivers) / params.transfer_delay;
}

/// Rate of completing an update broadcast with at least one receiver missed:
/// (1 - (1 - p)^N) / D.  Computed as the exact complement of
/// rate_update_success against the total completion rate 1/D, so the two
/// always partition 1/D without rounding drift.
inline double rate_update_loss(const SddsParams& params) {
  return 1.0 / params.transfer_delay - rate_update_success(params);
}

/// Rate at which a refresh round repairs all straggling receivers:
/// (1 - p)^(N p) / T.  On average N*p receivers miss any given broadcast, so
/// a refresh must reach that many stragglers; one refresh is sent per period T.
inline double rate_refresh_success(const SddsParams& params) {
  return std::pow(1.0 - params.p_loss, params.n_receivers * params.p_loss) /
         params.refresh_period;
}

/// Reliable-mode variant of rate_refresh_success: retransmissions are paced by
/// the acknowledgement round-trip 2D instead of the refresh period T, giving
/// (1 - p)^(N p) / (2 D).
inline double rate_refresh_success_reliable(const SddsParams& params) {
  return std::pow(1.0 - params.p_loss, params.n_receivers * params.p_loss) /
         (2.0 * params.transfer_delay);
}

/// Rate at which some receiver discards a report that is still valid, i.e.
/// every refresh opportunity within its validity timeout X was lost:
///
///   lambda_f = (1/X) * prod_{i=0}^{floor(X/T)} (1 - (1 - p)^(N p^i))
///
/// Factor i is the probability that refresh round i fails to complete
/// delivery; the exponent N p^i is the expected straggler population left
/// after i consecutive failed rounds (evaluated as a real power).
inline double rate_erroneous_removal(double p_loss, int n_receivers, double refresh_period,
                                     double receiver_timeout) {
  if (!(refresh_period > 0.0)) throw std::invalid_argument("refresh_period must be > 0");
  if (receiver_timeout < refresh_period)
    throw std::invalid_argument("receiver_timeout must be >= refresh_period");
  if (!(p_loss >= 0.0 && p_loss <= 1.0)) throw std::invalid_argument("p_loss must lie in [0, 1]");
  if (n_receivers < 1) throw std::invalid_argument("n_receivers must be >= 1");

  const int rounds = static_cast<int>(std::floor(receiver_timeout / refresh_period));
  double product = 1.0;
  for (int i = 0; i <= rounds; ++i) {
    // 1 - (1-p)^E evaluated as -expm1(E log1p(-p)): the direct pow form loses
    // most of its digits to cancellation once E p is far below 1
    const double exponent = n_receivers * std::pow(p_loss, static_cast<double>(i));
    product *= -std::expm1(exponent * std::log1p(-p_loss));
  }
  return product / receiver_timeout;
}

/// Probability that an Erlang-k random delay of mean `delta` sees no event of
/// an independent Poisson stream of rate `lambda`: (1 + lambda delta / k)^-k.
/// Increasing k sharpens the delay towards deterministic `delta` and the
/// value towards exp(-lambda delta) from below.
inline double erlang_no_event_prob(double lambda, double delta, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return std::pow(1.0 + lambda * delta / k, -static_cast<double>(k));
}

/// Same survival probability but for the simplified chain whose interior
/// phases cannot be interrupted: only the entry phase (mean delta/k) is
/// exposed, giving (1 + lambda delta / k)^-1.  Increases towards 1 with k
/// instead of converging to exp(-lambda delta).
inline double simplified_no_event_prob(double lambda, double delta, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return 1.0 / (1.0 + lambda * delta / k);
}

/// Moment generating function E[e^{-s Y}] of an Erlang-k delay Y with mean
/// `delta`: (1 + delta s / k)^-k.  Defined for s > -k/delta; outside that
/// domain the transform diverges and std::domain_error is thrown.
inline double erlang_mgf(double delta, int k, double s) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const double base = 1.0 + delta * s / k;
  if (!(base > 0.0)) throw std::domain_error("erlang_mgf: s outside the convergence region");
  return std::pow(base, -static_cast<double>(k));
}

/// The four exogenous rates plus the three broadcast-outcome rates that drive
/// the analytic models, bundled per scenario.
struct TransitionRates {
  double e2 = 0.0;  ///< update broadcast fully delivered, (1-p)^N / D
  double e4 = 0.0;  ///< update broadcast missed someone, 1/D - e2
  double e6 = 0.0;  ///< straggler repair rate; uses T (unreliable) or 2D (reliable)
  double lambda_u = 0.0;
  double lambda_d = 0.0;
  double lambda_f = 0.0;

  static TransitionRates from(const SddsParams& params) {
    params.validate();
    TransitionRates r;
    r.e2 = rate_update_success(params);
    r.e4 = rate_update_loss(params);
    r.e6 = params.reliable ? rate_refresh_success_reliable(params) : rate_refresh_success(params);
    r.lambda_u = params.lambda_u;
    r.lambda_d = params.lambda_d;
    r.lambda_f = params.lambda_f;
    return r;
  }
};

}  // namespace sdds
