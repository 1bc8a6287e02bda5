#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdds/params.hpp"
#include "sdds/state_space.hpp"

namespace sdds {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SimMode { state_level, packet_level };

struct SimConfig {
  SddsParams params;
  double horizon = 0.0;  ///< seconds of simulated time
  /// Measurement starts after warmup; when unset, defaults to five times the
  /// slowest relevant timescale, 5 / min(lambda_d, 1/refresh_period).
  std::optional<double> warmup;
  std::uint64_t seed = 0;
  SimMode mode = SimMode::state_level;
  int batches = 20;  ///< batch count for the batch-means confidence interval

  double effective_warmup() const {
    if (warmup) return *warmup;
    double slowest = 1.0 / params.refresh_period;
    if (params.lambda_d > 0.0) slowest = std::min(slowest, params.lambda_d);
    return 5.0 / slowest;
  }

  void validate() const {
    params.validate();
    if (batches < 2) throw std::invalid_argument("SimConfig: batches must be >= 2");
    const double w = effective_warmup();
    if (!(std::isfinite(w) && w >= 0.0))
      throw std::invalid_argument("SimConfig: warmup must be finite and >= 0");
    if (!(std::isfinite(horizon) && horizon > w))
      throw std::invalid_argument("SimConfig: horizon must be finite and exceed warmup");
  }
};

struct MacroEstimate {
  double occupancy = 0.0;
  double ci_halfwidth = 0.0;  ///< 95% confidence half-width via batch means
  bool operator==(const MacroEstimate&) const = default;
};

struct SimReport {
  std::array<MacroEstimate, 4> macro{};  // S1, S2, S3, S4
  std::uint64_t updates = 0;             ///< application update/creation events
  std::uint64_t deletions = 0;           ///< lifetime expirations at the sender
  std::uint64_t losses = 0;              ///< packet mode: per-receiver lost messages;
                                         ///< state mode: broadcast rounds that missed someone
  std::uint64_t erroneous_removals = 0;  ///< receivers dropping a still-valid report
  double effective_time = 0.0;           ///< horizon - warmup
  int batches = 0;
  bool operator==(const SimReport&) const = default;
};

namespace detail {

/// Two-sided 97.5% Student-t quantile; exact table for small df, a
/// Cornish-Fisher expansion beyond it (error < 1e-3 there).
inline double student_t_975(int df) {
  if (df < 1) throw std::invalid_argument("student_t_975: df must be >= 1");
  static constexpr double table[] = {
      12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281,
      2.2010,  2.1788, 2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860,
      2.0796,  2.0739, 2.0687, 2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423};
  if (df <= 30) return table[df - 1];
  const double z = 1.959963984540054;  // Phi^-1(0.975)
  const double v = df;
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
  return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v) +
         (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * v * v * v);
}

/// Deterministic, portable random stream: mt19937_64 (bit-exact engine per
/// the C++ standard) with explicit hand-rolled variate transforms, so results
/// do not depend on any library's distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() {  // in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double exponential(double rate) {
    double u = uniform();
    if (u == 0.0) u = 0x1.0p-53;  // keep log1p off the removable 0/0 at rate = 0
    return -std::log1p(-u) / rate;
  }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Accumulates per-macro-state occupancy over [warmup, horizon] sliced into
/// equal batches.  Long-double sums keep the slicing drift far below the
/// 1e-9 mass tolerance of SimReport.
class OccupancyTracker {
 public:
  OccupancyTracker(double warmup, double horizon, int batches)
      : warmup_(warmup),
        horizon_(horizon),
        batch_count_(batches),
        batch_length_((horizon - warmup) / batches),
        time_(static_cast<std::size_t>(batches)),
        events_(static_cast<std::size_t>(batches), 0) {}

  void record(double t0, double t1, MacroState m) {
    double a = std::max(t0, warmup_);
    const double end = std::min(t1, horizon_);
    while (a < end) {
      const std::size_t bi = batch_index(a);
      const double boundary = warmup_ + batch_length_ * static_cast<double>(bi + 1);
      double upto = std::min(end, boundary);
      if (!(upto > a)) upto = end;  // sub-ulp sliver on a batch boundary: close it out
      time_[bi][static_cast<std::size_t>(m)] += static_cast<long double>(upto - a);
      a = upto;
    }
  }

  void count_event(double t) {
    if (t >= warmup_ && t < horizon_) ++events_[batch_index(t)];
  }

  std::array<MacroEstimate, 4> estimates() const {
    std::size_t nonempty = 0;
    for (std::uint64_t e : events_)
      if (e > 0) ++nonempty;
    if (nonempty < static_cast<std::size_t>(batch_count_))
      throw SimulationError("horizon too short: only " + std::to_string(nonempty) + " of " +
                            std::to_string(batch_count_) + " batches saw any transition");
    const double t_mult = student_t_975(batch_count_ - 1);
    std::array<MacroEstimate, 4> out{};
    for (std::size_t m = 0; m < 4; ++m) {
      long double total = 0.0L;
      for (const auto& batch : time_) total += batch[m];
      const double mean = static_cast<double>(total / (horizon_ - warmup_));
      double mean_of_batches = 0.0, ss = 0.0;
      for (const auto& batch : time_)
        mean_of_batches += static_cast<double>(batch[m]) / batch_length_;
      mean_of_batches /= batch_count_;
      for (const auto& batch : time_) {
        const double d = static_cast<double>(batch[m]) / batch_length_ - mean_of_batches;
        ss += d * d;
      }
      const double stderr_mean =
          std::sqrt(ss / (batch_count_ - 1) / static_cast<double>(batch_count_));
      out[m] = {mean, t_mult * stderr_mean};
    }
    return out;
  }

 private:
  std::size_t batch_index(double t) const {
    const auto bi = static_cast<long>((t - warmup_) / batch_length_);
    return static_cast<std::size_t>(std::clamp(bi, 0L, static_cast<long>(batch_count_ - 1)));
  }

  double warmup_, horizon_;
  int batch_count_;
  double batch_length_;
  std::vector<std::array<long double, 4>> time_;
  std::vector<std::uint64_t> events_;
};

}  // namespace detail

/// Direct event realization of the four-state semi-Markov system:
/// exponential update/removal/erroneous-removal streams, deterministic
/// transfer (D) and recovery-cycle (T or 2D) delays, Bernoulli broadcast
/// outcomes with success probabilities (1-p)^N and (1-p)^(N p).
inline SimReport simulate_state_level(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.mode != SimMode::state_level)
    throw std::invalid_argument("simulate_state_level: cfg.mode must be state_level");
  const SddsParams& prm = cfg.params;
  const double q = std::pow(1.0 - prm.p_loss, prm.n_receivers);
  const double p6 = std::pow(1.0 - prm.p_loss, prm.n_receivers * prm.p_loss);
  const double delta4 = prm.reliable ? 2.0 * prm.transfer_delay : prm.refresh_period;
  const double big_lambda = prm.lambda_u + prm.lambda_d;
  const double sigma2 = prm.lambda_u + prm.lambda_d + prm.lambda_f;
  const double warmup = cfg.effective_warmup();

  detail::Rng rng(cfg.seed);
  detail::OccupancyTracker occ(warmup, cfg.horizon, cfg.batches);
  SimReport rep;
  rep.effective_time = cfg.horizon - warmup;
  rep.batches = cfg.batches;

  double t = 0.0;
  MacroState state = MacroState::s1;
  while (t < cfg.horizon) {
    double dt = 0.0;
    MacroState next = state;
    switch (state) {
      case MacroState::s1: {
        dt = rng.exponential(prm.lambda_u);
        next = MacroState::s3;
        break;
      }
      case MacroState::s2: {
        dt = rng.exponential(sigma2);
        const double u = rng.uniform();
        if (u < prm.lambda_u / sigma2) {
          next = MacroState::s3;
        } else if (u >= 1.0 - prm.lambda_f / sigma2) {  // exact: never taken when lambda_f = 0
          next = MacroState::s4;
        } else {
          next = MacroState::s1;
        }
        break;
      }
      case MacroState::s3:
      case MacroState::s4: {
        const double delay = state == MacroState::s3 ? prm.transfer_delay : delta4;
        const double success = state == MacroState::s3 ? q : p6;
        const double interrupt = rng.exponential(big_lambda);
        const double u = rng.uniform();
        if (interrupt < delay) {
          dt = interrupt;
          next = u < prm.lambda_u / big_lambda ? MacroState::s3 : MacroState::s1;
        } else {
          dt = delay;
          next = u < success ? MacroState::s2 : MacroState::s4;
        }
        break;
      }
    }
    const double t_end = t + dt;
    occ.record(t, t_end, state);
    if (t_end >= cfg.horizon) break;
    // Event bookkeeping mirrors the transition cause.
    if (next == MacroState::s3)
      ++rep.updates;  // creation, update, or transfer restart
    else if (next == MacroState::s1)
      ++rep.deletions;
    else if (state == MacroState::s2 && next == MacroState::s4)
      ++rep.erroneous_removals;
    else if (next == MacroState::s4)
      ++rep.losses;  // a broadcast round that missed at least one receiver
    occ.count_event(t_end);
    t = t_end;
    state = next;
  }
  rep.macro = occ.estimates();
  return rep;
}

/// Packet-level protocol simulation: N receivers, independent per-receiver
/// Bernoulli(p_loss) losses, explicit update/refresh/retransmission messages
/// with fixed transfer time D, receiver validity timeout X (unreliable mode),
/// lossless acknowledgements with retransmission every 2D to unacknowledged
/// receivers (reliable mode).  None of the closed-form rates are assumed;
/// macro-state occupancy emerges from the protocol.
inline SimReport simulate_packet_level(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.mode != SimMode::packet_level)
    throw std::invalid_argument("simulate_packet_level: cfg.mode must be packet_level");
  if (!cfg.params.receiver_timeout)
    throw std::invalid_argument("simulate_packet_level: receiver_timeout must be set");
  const SddsParams& prm = cfg.params;
  const double D = prm.transfer_delay;
  const double X = *prm.receiver_timeout;
  const auto N = static_cast<std::size_t>(prm.n_receivers);
  const double warmup = cfg.effective_warmup();

  enum class Ev : std::uint8_t { app_update, ir_expiry, refresh_due, arrival, retransmit_due, rx_timeout };
  struct Event {
    double t;
    std::uint64_t seq;  // FIFO tie-break keeps processing order total
    Ev kind;
    std::uint64_t stamp = 0;       // validity/broadcast epoch or version
    std::uint64_t version = 0;     // payload version for arrivals
    std::size_t receiver = 0;      // rx_timeout target
    std::vector<std::size_t> targets;  // retransmission recipients; empty = all
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> queue;
  std::uint64_t seq = 0;
  auto push = [&](Event e) {
    e.seq = seq++;
    queue.push(std::move(e));
  };

  detail::Rng rng(cfg.seed);
  detail::OccupancyTracker occ(warmup, cfg.horizon, cfg.batches);
  SimReport rep;
  rep.effective_time = cfg.horizon - warmup;
  rep.batches = cfg.batches;

  // Sender state.
  bool valid = false;
  std::uint64_t version = 0;         // strictly increasing across re-creations
  std::uint64_t validity_epoch = 0;  // bumped on removal; guards ir_expiry
  std::uint64_t broadcast_epoch = 0; // bumped on every send; guards refresh_due
  double current_sent_at = 0.0;      // send time of the current version

  // Receiver state.
  constexpr std::uint64_t kNoVersion = 0;  // versions start at 1
  std::vector<std::uint64_t> held(N, kNoVersion);
  std::vector<std::uint64_t> timeout_stamp(N, 0);  // guards rx_timeout
  std::size_t holding_current = 0;

  auto classify = [&](double now) {
    if (!valid) return MacroState::s1;
    if (now < current_sent_at + D) return MacroState::s3;  // initial broadcast in flight
    if (holding_current == N) return MacroState::s2;
    return MacroState::s4;
  };

  // A send of `ver` to `targets` (empty = everyone): one arrival event after D.
  auto send_broadcast = [&](double now, std::uint64_t ver, std::vector<std::size_t> targets) {
    ++broadcast_epoch;
    push({now + D, 0, Ev::arrival, 0, ver, 0, std::move(targets)});
    if (!prm.reliable)
      push({now + prm.refresh_period, 0, Ev::refresh_due, broadcast_epoch, 0, 0, {}});
    else
      push({now + 2.0 * D, 0, Ev::retransmit_due, 0, ver, 0, {}});
  };

  push({rng.exponential(prm.lambda_u), 0, Ev::app_update, 0, 0, 0, {}});

  double prev_t = 0.0;
  MacroState macro = MacroState::s1;
  while (!queue.empty()) {
    Event ev = queue.top();
    if (ev.t >= cfg.horizon) break;
    queue.pop();
    const double now = ev.t;

    switch (ev.kind) {
      case Ev::app_update: {
        ++rep.updates;
        if (!valid) {
          valid = true;
          push({now + rng.exponential(prm.lambda_d), 0, Ev::ir_expiry, validity_epoch, 0, 0, {}});
        }
        ++version;
        current_sent_at = now;
        holding_current = 0;
        send_broadcast(now, version, {});
        push({now + rng.exponential(prm.lambda_u), 0, Ev::app_update, 0, 0, 0, {}});
        break;
      }
      case Ev::ir_expiry: {
        if (!valid || ev.stamp != validity_epoch) break;  // superseded by an earlier removal
        valid = false;
        ++validity_epoch;
        holding_current = 0;
        ++rep.deletions;
        break;
      }
      case Ev::refresh_due: {
        if (!valid || ev.stamp != broadcast_epoch) break;  // a later send reset the timer
        send_broadcast(now, version, {});
        break;
      }
      case Ev::retransmit_due: {
        if (!valid || ev.version != version) break;  // superseded
        std::vector<std::size_t> missing;
        for (std::size_t r = 0; r < N; ++r)
          if (held[r] != version) missing.push_back(r);
        if (!missing.empty()) send_broadcast(now, version, std::move(missing));
        break;
      }
      case Ev::arrival: {
        const bool to_all = ev.targets.empty();
        const std::size_t count = to_all ? N : ev.targets.size();
        for (std::size_t i = 0; i < count; ++i) {
          const std::size_t r = to_all ? i : ev.targets[i];
          if (rng.bernoulli(prm.p_loss)) {
            ++rep.losses;
            continue;
          }
          if (held[r] < ev.version) {
            held[r] = ev.version;
            if (valid && ev.version == version) ++holding_current;
          }
          if (!prm.reliable && held[r] == ev.version) {  // any reception rearms the timeout
            ++timeout_stamp[r];
            push({now + X, 0, Ev::rx_timeout, timeout_stamp[r], 0, r, {}});
          }
        }
        break;
      }
      case Ev::rx_timeout: {
        const std::size_t r = ev.receiver;
        if (ev.stamp != timeout_stamp[r] || held[r] == kNoVersion) break;
        if (valid && held[r] == version) {
          --holding_current;
          ++rep.erroneous_removals;  // dropped a copy that was still the live version
        }
        held[r] = kNoVersion;
        ++timeout_stamp[r];
        break;
      }
    }

    occ.record(prev_t, now, macro);
    const MacroState after = classify(now);
    if (after != macro) occ.count_event(now);
    prev_t = now;
    macro = after;
  }
  occ.record(prev_t, cfg.horizon, macro);
  rep.macro = occ.estimates();
  return rep;
}

}  // namespace sdds
