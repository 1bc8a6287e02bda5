#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdds/distribution.hpp"

namespace sdds {

/// The four macro-conditions of the sender/receiver system.
///   S1: no valid report anywhere.       S2: sender and all receivers agree.
///   S3: update broadcast in transfer.   S4: some receivers hold a stale copy.
enum class MacroState { s1 = 0, s2 = 1, s3 = 2, s4 = 3 };

/// Which analytical model to build.
///   markov:             four exponential states.
///   erlang_full:        k-phase Erlang delays; update/removal interrupts can
///                       strike any phase.
///   erlang_simplified:  interrupts only strike the first phase of each chain;
///                       interior phases are uninterruptible.
enum class ModelKind { markov, erlang_full, erlang_simplified };

inline const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::markov: return "markov";
    case ModelKind::erlang_full: return "erlang-full";
    case ModelKind::erlang_simplified: return "erlang-simplified";
  }
  throw std::invalid_argument("unknown ModelKind");
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "markov") return ModelKind::markov;
  if (s == "erlang-full") return ModelKind::erlang_full;
  if (s == "erlang-simplified") return ModelKind::erlang_simplified;
  throw std::invalid_argument("unknown model kind '" + s +
                              "' (expected markov, erlang-full or erlang-simplified)");
}

/// Micro-state indexing for one model instance.  Ordering is fixed:
/// [S1, S2, 3_1..3_k, 4_1..4_k] for the Erlang models (2k+2 states),
/// [S1, S2, S3, S4] for the Markov model.
struct StateSpace {
  ModelKind kind = ModelKind::markov;
  int k = 1;
  std::vector<std::string> micro_states;
  std::vector<MacroState> macro_of;
  std::array<std::size_t, 4> entry_of{};  // macro index -> entry micro index

  std::size_t size() const { return micro_states.size(); }
  std::size_t entry(MacroState m) const { return entry_of[static_cast<std::size_t>(m)]; }
};

inline StateSpace build_state_space(ModelKind kind, int k) {
  if (k < 1) throw std::invalid_argument("build_state_space: k must be >= 1");
  StateSpace space;
  space.kind = kind;
  if (kind == ModelKind::markov) k = 1;  // Markov ignores k
  space.k = k;
  if (kind == ModelKind::markov) {
    space.micro_states = {"S1", "S2", "S3", "S4"};
    space.macro_of = {MacroState::s1, MacroState::s2, MacroState::s3, MacroState::s4};
    space.entry_of = {0, 1, 2, 3};
    return space;
  }
  space.micro_states.reserve(2 * static_cast<std::size_t>(k) + 2);
  space.micro_states.emplace_back("S1");
  space.micro_states.emplace_back("S2");
  space.macro_of = {MacroState::s1, MacroState::s2};
  for (int j = 1; j <= k; ++j) {
    space.micro_states.push_back("3_" + std::to_string(j));
    space.macro_of.push_back(MacroState::s3);
  }
  for (int j = 1; j <= k; ++j) {
    space.micro_states.push_back("4_" + std::to_string(j));
    space.macro_of.push_back(MacroState::s4);
  }
  space.entry_of = {0, 1, 2, 2 + static_cast<std::size_t>(k)};
  return space;
}

/// Sums micro-state probabilities into the four macro-states.
inline Distribution aggregate(const Distribution& dist, const StateSpace& space) {
  if (dist.size() != space.size())
    throw std::invalid_argument("aggregate: distribution/state-space dimension mismatch");
  std::vector<double> macro(4, 0.0);
  for (std::size_t i = 0; i < dist.size(); ++i)
    macro[static_cast<std::size_t>(space.macro_of[i])] += dist[i];
  return Distribution(std::move(macro));
}

}  // namespace sdds
