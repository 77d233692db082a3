#include "ligs/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "ligs/theory.hpp"

namespace ligs {

using theory::AugmentedValue;
using theory::Matrix;
using theory::TabularGame;
using theory::Vector;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int draw_states(Rng& rng, int max_states) {
  return 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_states)));
}

TabularGame draw_game(Rng& rng, int max_states, int max_actions = 3, int max_channels = 3) {
  const int S = draw_states(rng, max_states);
  const int A = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_actions)));
  const int m = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_channels)));
  theory::RandomGameOptions opt;
  opt.with_novelty = rng.bernoulli(0.5);
  return theory::random_game(rng, S, A, m, opt);
}

AugmentedValue random_values(Rng& rng, int S, double scale) {
  AugmentedValue V(S, 2);
  for (int s = 0; s < S; ++s) {
    V(s, 0) = rng.uniform(-scale, scale);
    V(s, 1) = rng.uniform(-scale, scale);
  }
  return V;
}

theory::GeneratorTable random_table(Rng& rng, const TabularGame& gm) {
  theory::GeneratorTable g;
  for (int s = 0; s < gm.n_states(); ++s) {
    g.switch_on.push_back(rng.bernoulli(0.5) ? 1 : 0);
    g.theta.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(gm.m()))));
  }
  g.terminate_prob = rng.uniform();
  return g;
}

std::string describe(const char* what, double value) {
  std::ostringstream os;
  os << what << " " << std::setprecision(3) << value;
  return os.str();
}

}  // namespace

PropertyResult check_contraction(Rng& rng, int games, int max_states, double slack) {
  slack = std::max(slack, 1e-12);
  PropertyResult res{"contraction", true, kInf, ""};
  for (int i = 0; i < games; ++i) {
    const TabularGame gm = draw_game(rng, max_states);
    const AugmentedValue v1 = random_values(rng, gm.n_states(), 10.0);
    const AugmentedValue v2 = random_values(rng, gm.n_states(), 10.0);
    const double lhs = (theory::bellman_op(gm, v1) - theory::bellman_op(gm, v2)).cwiseAbs().maxCoeff();
    const double rhs = gm.gamma * (v1 - v2).cwiseAbs().maxCoeff() + slack;
    res.margin = std::min(res.margin, rhs - lhs);
    if (lhs > rhs) res.passed = false;
  }
  res.detail = describe("games", games);
  return res;
}

PropertyResult check_fixed_point(Rng& rng, int games, int max_states, double residual_tol) {
  PropertyResult res{"fixed_point", true, kInf, ""};
  const double tol = residual_tol / 10.0;
  double worst_residual = 0.0;
  for (int i = 0; i < games; ++i) {
    const TabularGame gm = draw_game(rng, max_states);
    const AugmentedValue start = random_values(rng, gm.n_states(), 50.0);
    const auto a = theory::value_iterate(gm, tol);
    const auto b = theory::value_iterate(gm, tol, start);
    const double residual = (theory::bellman_op(gm, a.V) - a.V).cwiseAbs().maxCoeff();
    const double spread = (a.V - b.V).cwiseAbs().maxCoeff();
    const double spread_cap = 2.0 * tol / (1.0 - gm.gamma);
    const int bound = theory::iteration_bound(gm, tol, start);
    worst_residual = std::max(worst_residual, residual);
    res.margin = std::min({res.margin, residual_tol - residual, spread_cap - spread,
                           static_cast<double>(bound - b.iterations)});
    if (!a.converged || !b.converged || residual >= residual_tol || spread > spread_cap ||
        b.iterations > bound) {
      res.passed = false;
    }
  }
  res.detail = describe("worst residual", worst_residual);
  return res;
}

PropertyResult check_switching(Rng& rng, int games, int max_states) {
  PropertyResult res{"switching_rule", true, kInf, ""};
  int switches = 0;
  for (int i = 0; i < games; ++i) {
    const TabularGame gm = draw_game(rng, max_states);
    const auto vi = theory::value_iterate(gm, 1e-11);
    const theory::BitTable rule = theory::switch_rule(gm, vi.V, 1e-8);
    const AugmentedValue gap = theory::greedy_intervention(gm, vi.V) - vi.V;
    const int s0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(gm.n_states())));
    const theory::SwitchTrace trace = theory::simulate_switching(gm, vi.V, rule, s0, 0, 50, rng);
    // Each switch time must be the first visit after the previous one where
    // the intervention branch attains V.
    std::size_t k = 0;
    for (std::size_t t = 0; t < trace.states.size(); ++t) {
      const double g = gap(trace.states[t], trace.modes[t]);
      const bool attained = g >= -1e-8;
      const bool switched = k < trace.switch_times.size() && trace.switch_times[k] == static_cast<int>(t);
      if (attained != switched) res.passed = false;
      if (switched) ++k;
      if (!attained) res.margin = std::min(res.margin, -g - 1e-8);
    }
    switches += static_cast<int>(trace.switch_times.size());
  }
  if (res.margin == kInf) res.margin = 0.0;
  res.detail = describe("switch events", switches);
  return res;
}

PropertyResult check_invariance(Rng& rng, int games, double tol) {
  PropertyResult res{"policy_invariance", true, kInf, ""};
  double worst_gap = 0.0;
  for (int i = 0; i < games; ++i) {
    const TabularGame gm = draw_game(rng, 4, 3, 2);
    for (int k = 0; k < 4; ++k) {
      const auto g = k == 0 ? theory::generator_off(gm) : random_table(rng, gm);
      const auto rep = theory::invariance_audit(gm, g, tol);
      worst_gap = std::max(worst_gap, rep.max_value_gap);
      res.margin = std::min(res.margin, tol - std::abs(rep.best_plain - rep.best_shaped));
      if (!rep.passed) res.passed = false;
    }
  }
  res.detail = describe("worst per-policy value gap", worst_gap);
  return res;
}

PropertyResult check_weak_improvement(Rng& rng, int games, double tol) {
  PropertyResult res{"weak_improvement", true, kInf, ""};
  for (int i = 0; i < games; ++i) {
    const TabularGame gm = draw_game(rng, 4, 3, 2);
    const auto rep = theory::weak_improvement(gm, {0.0, 0.5, 0.9}, tol);
    res.margin = std::min(res.margin, rep.with_generator - rep.without_generator + tol);
    if (!rep.passed) res.passed = false;
  }
  res.detail = describe("games", games);
  return res;
}

PropertyResult check_linear_fa_bound(Rng& rng, int games, double residual_tol, double bound_slack,
                              std::uint64_t steps, LinearFaStats* stats) {
  PropertyResult res{"linear_fa_bound", true, kInf, ""};
  LinearFaStats local{0.0, -kInf};
  for (int i = 0; i < games; ++i) {
    const int S = 2 + static_cast<int>(rng.uniform_int(5));
    const int A = 2 + static_cast<int>(rng.uniform_int(2));
    const TabularGame gm = theory::random_game(rng, S, A, 2);
    const Matrix phi = theory::random_basis(rng, gm.q_rows(), 2);
    const auto vi = theory::value_iterate(gm, 1e-12);
    const Vector q_star = theory::q_from_values(gm, vi.V);
    theory::LinearFaOptions opt;
    opt.steps = steps;
    opt.seed = rng.next_u64();
    const auto learned = theory::linear_fa_qlearn(gm, phi, opt);
    const double residual = theory::projected_residual(gm, phi, learned.r);
    const double lhs = theory::weighted_norm(phi * learned.r - q_star);
    const double rhs = theory::weighted_norm(theory::projection(phi) * q_star - q_star) /
                       std::sqrt(1.0 - gm.gamma * gm.gamma);
    local.worst_residual = std::max(local.worst_residual, residual);
    local.worst_bound_gap = std::max(local.worst_bound_gap, lhs - rhs);
    res.margin = std::min({res.margin, residual_tol - residual, rhs + bound_slack - lhs});
    if (residual >= residual_tol || lhs > rhs + bound_slack) res.passed = false;
  }
  std::ostringstream os;
  os << "worst residual " << std::setprecision(3) << local.worst_residual << ", worst bound gap "
     << local.worst_bound_gap;
  res.detail = os.str();
  if (stats != nullptr) *stats = local;
  return res;
}

bool SuiteReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const PropertyResult& r) { return r.passed; });
}

SuiteReport run_theory_suite(const SuiteOptions& options) {
  SuiteReport report;
  if (options.fixture) {
    const TabularGame gm = theory::load_game(*options.fixture);
    const auto vi = theory::value_iterate(gm, 1e-10);
    const double residual = (theory::bellman_op(gm, vi.V) - vi.V).cwiseAbs().maxCoeff();
    report.results.push_back({"fixture_fixed_point", residual < 1e-8, 1e-8 - residual, *options.fixture});
  }
  Rng root(options.seed);
  const int scale = options.quick ? 5 : 1;
  Rng r1 = root.fork(1);
  Rng r2 = root.fork(2);
  Rng r3 = root.fork(3);
  Rng r4 = root.fork(4);
  Rng r5 = root.fork(5);
  Rng r6 = root.fork(6);
  report.results.push_back(check_contraction(r1, 100, 20, options.slack));
  report.results.push_back(check_fixed_point(r2, 20 / scale, 20, 1e-8));
  report.results.push_back(check_switching(r3, 20 / scale, 8));
  report.results.push_back(check_invariance(r4, 20 / scale, 1e-9));
  report.results.push_back(check_weak_improvement(r5, 20 / scale, 1e-9));
  report.results.push_back(
      check_linear_fa_bound(r6, 20 / scale, 1e-3, 1e-6, options.quick ? 400000 : 2000000));
  return report;
}

void print_report(const SuiteReport& report, std::ostream& out) {
  for (const auto& r : report.results) {
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(22) << r.name
        << " margin=" << std::setprecision(4) << r.margin << "  " << r.detail << "\n";
  }
  out << (report.passed() ? "all properties hold" : "property failure") << "\n";
}

}  // namespace ligs
