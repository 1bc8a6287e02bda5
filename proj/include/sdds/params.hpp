#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace sdds {

/// Model parameters for one sensor-data distribution scenario.
///
/// A sender pushes information reports to `n_receivers` subscribers over an
/// unreliable broadcast channel.  Reports are regenerated at rate `lambda_u`,
/// removed at rate `lambda_d`, and erroneously discarded by receivers at rate
/// `lambda_f`.  Every message delivery takes at most `transfer_delay` seconds
/// and is lost per receiver with probability `p_loss`.  In unreliable mode
/// the sender re-broadcasts the current report every `refresh_period` seconds;
/// in reliable mode it instead retransmits until every receiver has
/// acknowledged.  Rates are per second, durations in seconds.
struct SddsParams {
  double lambda_u = 0.0;  ///< update (re-generation) rate, > 0
  double lambda_d = 0.0;  ///< removal rate, >= 0
  double lambda_f = 0.0;  ///< erroneous-removal rate, >= 0
  double p_loss = 0.0;    ///< per-receiver message loss probability, in [0, 1]
  int n_receivers = 1;    ///< number of receivers, >= 1
  double transfer_delay = 0.0;  ///< D: worst-case end-to-end delay, > 0
  double refresh_period = 0.0;  ///< T: refresh broadcast period, > 0
  /// Receiver-side validity timeout X (>= refresh_period).  Only needed by
  /// the packet-level simulator and the erroneous-removal rate formula.
  std::optional<double> receiver_timeout;
  bool reliable = false;  ///< reliable (ack + retransmit) delivery mode

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    auto non_negative = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!positive(lambda_u)) throw std::invalid_argument("lambda_u must be finite and > 0");
    if (!non_negative(lambda_d)) throw std::invalid_argument("lambda_d must be finite and >= 0");
    if (!non_negative(lambda_f)) throw std::invalid_argument("lambda_f must be finite and >= 0");
    if (!(std::isfinite(p_loss) && p_loss >= 0.0 && p_loss <= 1.0))
      throw std::invalid_argument("p_loss must lie in [0, 1]");
    if (n_receivers < 1) throw std::invalid_argument("n_receivers must be >= 1");
    if (!positive(transfer_delay)) throw std::invalid_argument("transfer_delay must be finite and > 0");
    if (!positive(refresh_period)) throw std::invalid_argument("refresh_period must be finite and > 0");
    if (receiver_timeout) {
      if (!std::isfinite(*receiver_timeout) || *receiver_timeout < refresh_period)
        throw std::invalid_argument("receiver_timeout must be finite and >= refresh_period");
    }
  }

  bool operator==(const SddsParams&) const = default;
};

/// Reference scenario 1: fast updates (mean lifetime between updates 1 s),
/// tight delay bound, 5 s refresh period.
inline SddsParams case1_params(bool reliable = false) {
  SddsParams p;
  p.lambda_u = 1.0;
  p.lambda_d = 5e-3;
  p.lambda_f = 2e-8;
  p.p_loss = 1e-3;
  p.n_receivers = 100;
  p.transfer_delay = 0.01;
  p.refresh_period = 5.0;
  p.reliable = reliable;
  return p;
}

/// Reference scenario 2: slow updates, loose delay bound, 10 s refresh period.
inline SddsParams case2_params(bool reliable = false) {
  SddsParams p;
  p.lambda_u = 0.1;
  p.lambda_d = 5e-3;
  p.lambda_f = 2e-8;
  p.p_loss = 1e-3;
  p.n_receivers = 100;
  p.transfer_delay = 1.0;
  p.refresh_period = 10.0;
  p.reliable = reliable;
  return p;
}

}  // namespace sdds
