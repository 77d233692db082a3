#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ligs/rng.hpp"

namespace ligs {

struct PropertyResult {
  std::string name;
  bool passed = false;
  // Smallest distance to the failure boundary seen over all instances;
  // negative means violated.
  double margin = 0.0;
  std::string detail;
};

// ||T V1 - T V2|| <= gamma ||V1 - V2|| + slack over random games (up to
// max_states states) and random value pairs. Slack never drops below 1e-12.
PropertyResult check_contraction(Rng& rng, int games, int max_states, double slack);

// ||T V* - V*|| < residual_tol from two different starts, the two fixed points
// within 2 tol / (1 - gamma), and the iteration count within its bound.
PropertyResult check_fixed_point(Rng& rng, int games, int max_states, double residual_tol);

// Simulated switch times land exactly where the intervention branch attains
// the value.
PropertyResult check_switching(Rng& rng, int games, int max_states);

// Exhaustive policy audits on games with at most 4 states: optimal set and
// best value unchanged by telescoping shaping for random Generator tables.
PropertyResult check_invariance(Rng& rng, int games, double tol);

// Best environment return with a Generator is at least the best without.
PropertyResult check_weak_improvement(Rng& rng, int games, double tol);

struct LinearFaStats {
  double worst_residual = 0.0;
  double worst_bound_gap = 0.0;  // max of lhs - rhs; <= bound_slack passes
};
// Rank-2 random bases: projected residual below residual_tol and the
// (1 - gamma^2)^(-1/2) error bound within bound_slack.
PropertyResult check_linear_fa_bound(Rng& rng, int games, double residual_tol, double bound_slack,
                              std::uint64_t steps, LinearFaStats* stats = nullptr);

struct SuiteOptions {
  double slack = 1e-12;
  std::uint64_t seed = 20210;
  std::optional<std::string> fixture;
  bool quick = false;  // fewer games and learning steps
};

struct SuiteReport {
  std::vector<PropertyResult> results;
  bool passed() const;
};

// Runs every property; a fixture path is validated first and a bad fixture
// throws PreconditionError.
SuiteReport run_theory_suite(const SuiteOptions& options);
void print_report(const SuiteReport& report, std::ostream& out);

}  // namespace ligs
