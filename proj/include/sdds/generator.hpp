#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdds/params.hpp"
#include "sdds/state_space.hpp"

namespace sdds {

class Generator;

/// Accumulates off-diagonal rates, then freezes them into a Generator.
/// Zero rates and self-loops are dropped; duplicate cells accumulate.
class GeneratorBuilder {
 public:
  explicit GeneratorBuilder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("GeneratorBuilder: dimension must be > 0");
  }

  GeneratorBuilder& add(std::size_t from, std::size_t to, double rate) {
    if (from >= dim_ || to >= dim_) throw std::out_of_range("GeneratorBuilder: state index");
    if (!std::isfinite(rate) || rate < 0.0)
      throw std::invalid_argument("GeneratorBuilder: rate must be finite and >= 0");
    if (from != to && rate > 0.0) entries_.push_back({from, to, rate});
    return *this;
  }

  Generator build() &&;

 private:
  friend class Generator;
  struct Cell {
    std::size_t from, to;
    double rate;
  };
  std::size_t dim_;
  std::vector<Cell> entries_;
};

/// Immutable infinitesimal generator: dense matrix plus a sparse list of the
/// off-diagonal transitions in canonical (row, then column) order.  Each
/// diagonal entry is defined as minus the canonical-order sum of its row's
/// off-diagonals, so row_sum() reproduces exactly 0.0 rather than merely
/// something small.
class Generator {
 public:
  struct Transition {
    std::size_t from, to;
    double rate;
    bool operator==(const Transition&) const = default;
  };

  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::vector<Transition>& transitions() const { return transitions_; }

  /// Off-diagonals in canonical order plus the diagonal; exactly 0.0 by the
  /// diagonal's construction.
  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (const Transition& t : transitions_)
      if (t.from == i) s += t.rate;
    return s + matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  }

  /// Largest total exit rate max_i(-A_ii); the uniformization constant.
  double max_exit_rate() const {
    double m = 0.0;
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) m = std::max(m, -matrix_(i, i));
    return m;
  }

 private:
  friend class GeneratorBuilder;
  Generator(std::size_t dim, std::vector<Transition> transitions)
      : transitions_(std::move(transitions)),
        matrix_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                      static_cast<Eigen::Index>(dim))) {
    for (const Transition& t : transitions_)
      matrix_(static_cast<Eigen::Index>(t.from), static_cast<Eigen::Index>(t.to)) = t.rate;
    for (std::size_t i = 0; i < dim; ++i) {
      double s = 0.0;
      for (const Transition& t : transitions_)
        if (t.from == i) s += t.rate;
      matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = -s;
    }
  }

  std::vector<Transition> transitions_;
  Eigen::MatrixXd matrix_;
};

inline Generator GeneratorBuilder::build() && {
  std::sort(entries_.begin(), entries_.end(), [](const Cell& a, const Cell& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
  std::vector<Generator::Transition> merged;
  merged.reserve(entries_.size());
  for (const Cell& c : entries_) {
    if (!merged.empty() && merged.back().from == c.from && merged.back().to == c.to)
      merged.back().rate += c.rate;
    else
      merged.push_back({c.from, c.to, c.rate});
  }
  return Generator(dim_, std::move(merged));
}

/// Builds the generator of the chosen model.  All three kinds share one code
/// path: the Markov model is the k=1 chain structure, which keeps the k=1
/// triangle equivalence exact down to the last bit.
///
/// Structure (states [S1, S2, 3_1..3_k, 4_1..4_k]):
///   S1 → 3_1 at λ_u;  S2 → {S1, 3_1, 4_1} at {λ_d, λ_u, λ_f}.
///   Chain 3 advances at μ3 = k/D; completing 3_k splits μ3 between S2
///   (success, probability (1-p)^N) and 4_1 (missed someone).
///   Chain 4 advances at μ4 = k/T (unreliable) or k/(2D) (reliable);
///   completing 4_k splits μ4 between S2 (probability (1-p)^(N p)) and a
///   retry via 4_1.
///   Interrupts λ_u → 3_1 and λ_d → S1 leave every phase in the full model
///   but only the entry phases 3_1/4_1 in the simplified model.
inline Generator build_generator(const SddsParams& params, ModelKind kind, int k) {
  params.validate();
  if (k < 1) throw std::invalid_argument("build_generator: k must be >= 1");
  if (kind == ModelKind::markov) k = 1;
  const StateSpace space = build_state_space(kind, k);

  const double q = std::pow(1.0 - params.p_loss, params.n_receivers);
  const double p6 = std::pow(1.0 - params.p_loss, params.n_receivers * params.p_loss);
  const double delta4 = params.reliable ? 2.0 * params.transfer_delay : params.refresh_period;
  const double mu3 = k / params.transfer_delay;
  const double mu4 = k / delta4;
  const bool full_exits = kind != ModelKind::erlang_simplified;

  const std::size_t s1 = 0, s2 = 1;
  auto c3 = [&](int j) { return static_cast<std::size_t>(1 + j); };      // 3_j, j=1..k
  auto c4 = [&](int j) { return static_cast<std::size_t>(1 + k + j); };  // 4_j, j=1..k

  GeneratorBuilder b(space.size());
  b.add(s1, c3(1), params.lambda_u);
  b.add(s2, s1, params.lambda_d);
  b.add(s2, c3(1), params.lambda_u);
  b.add(s2, c4(1), params.lambda_f);
  for (int j = 1; j <= k; ++j) {
    if (j < k) {
      b.add(c3(j), c3(j + 1), mu3);
    } else {
      const double success = mu3 * q;
      b.add(c3(k), s2, success);
      b.add(c3(k), c4(1), mu3 - success);  // exact complement: split conserves mu3
    }
    if (full_exits || j == 1) {
      b.add(c3(j), s1, params.lambda_d);
      b.add(c3(j), c3(1), params.lambda_u);  // self-loop at 3_1, dropped by add
    }
    if (j < k) {
      b.add(c4(j), c4(j + 1), mu4);
    } else {
      const double success = mu4 * p6;
      b.add(c4(k), s2, success);
      b.add(c4(k), c4(1), mu4 - success);  // retry cycle; self-loop when k=1
    }
    if (full_exits || j == 1) {
      b.add(c4(j), s1, params.lambda_d);
      b.add(c4(j), c3(1), params.lambda_u);
    }
  }
  return std::move(b).build();
}

}  // namespace sdds
