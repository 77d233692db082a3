#include "ligs/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "ligs/errors.hpp"

namespace ligs::theory {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

void check_shapes(const TabularGame& gm, const AugmentedValue& V) {
  if (V.rows() != gm.n_states() || V.cols() != 2) {
    throw PreconditionError("value table must be n_states x 2");
  }
}

// sum_s' P(s'|s,a) V(s', mode) for every (s, a).
Matrix expected_next(const TabularGame& gm, const AugmentedValue& V, int mode) {
  Matrix out(gm.n_states(), gm.n_actions());
  for (int a = 0; a < gm.n_actions(); ++a) out.col(a) = gm.P[static_cast<std::size_t>(a)] * V.col(mode);
  return out;
}

std::size_t power(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

std::vector<int> decode(std::size_t index, int digits, int base) {
  std::vector<int> out(static_cast<std::size_t>(digits));
  for (int i = 0; i < digits; ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(base));
    index /= static_cast<std::size_t>(base);
  }
  return out;
}

}  // namespace

void validate_game(const TabularGame& gm) {
  const int S = gm.n_states();
  const int A = gm.n_actions();
  if (S < 1 || A < 1) throw PreconditionError("game needs at least one state and one action");
  if (static_cast<int>(gm.P.size()) != A) throw PreconditionError("P must have one table per action");
  if (!(gm.gamma > 0.0 && gm.gamma < 1.0)) throw PreconditionError("gamma must lie in (0, 1)");
  if (gm.F.rows() != S || gm.F.cols() < 1) throw PreconditionError("F must be n_states x m with m >= 1");
  if (gm.L.rows() != S || gm.L.cols() != A) throw PreconditionError("L must be n_states x n_actions");
  if (!gm.R.allFinite() || !gm.F.allFinite() || !gm.L.allFinite() || !std::isfinite(gm.switch_cost)) {
    throw PreconditionError("rewards must be finite");
  }
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const Matrix& Pa = gm.P[static_cast<std::size_t>(a)];
      if (Pa.rows() != S || Pa.cols() != S) throw PreconditionError("P tables must be n_states x n_states");
      const std::string where = "P[" + std::to_string(s) + "][" + std::to_string(a) + "]";
      if ((Pa.row(s).array() < 0.0).any() || !Pa.row(s).allFinite()) {
        throw PreconditionError(where + " has a negative or non-finite entry");
      }
      const double sum = Pa.row(s).sum();
      if (std::abs(sum - 1.0) > 1e-12) throw PreconditionError(where + " sums to " + fmt(sum));
    }
  }
}

TabularGame parse_game(std::string_view json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("game fixture is not valid JSON: ") + e.what());
  }
  try {
    TabularGame gm;
    const auto& P = j.at("P");
    const auto& R = j.at("R");
    const int S = static_cast<int>(R.size());
    if (S == 0 || static_cast<int>(P.size()) != S) throw PreconditionError("P and R must list the same states");
    const int A = static_cast<int>(R.at(0).size());
    gm.R = Matrix::Zero(S, A);
    gm.L = Matrix::Zero(S, A);
    gm.P.assign(static_cast<std::size_t>(A), Matrix::Zero(S, S));
    for (int s = 0; s < S; ++s) {
      if (static_cast<int>(R.at(s).size()) != A || static_cast<int>(P.at(s).size()) != A) {
        throw PreconditionError("row " + std::to_string(s) + " has the wrong action count");
      }
      for (int a = 0; a < A; ++a) {
        gm.R(s, a) = R.at(s).at(a).get<double>();
        const auto& row = P.at(s).at(a);
        if (static_cast<int>(row.size()) != S) {
          throw PreconditionError("P[" + std::to_string(s) + "][" + std::to_string(a) + "] has the wrong length");
        }
        for (int t = 0; t < S; ++t) gm.P[static_cast<std::size_t>(a)](s, t) = row.at(t).get<double>();
      }
    }
    gm.gamma = j.at("gamma").get<double>();
    gm.switch_cost = j.value("switch_cost", 0.0);
    if (j.contains("F")) {
      const auto& F = j.at("F");
      const int m = F.at(0).size() > 0 ? static_cast<int>(F.at(0).size()) : 1;
      if (static_cast<int>(F.size()) != S) throw PreconditionError("F must list every state");
      gm.F = Matrix::Zero(S, m);
      for (int s = 0; s < S; ++s) {
        if (static_cast<int>(F.at(s).size()) != m) throw PreconditionError("F rows must share one width");
        for (int k = 0; k < m; ++k) gm.F(s, k) = F.at(s).at(k).get<double>();
      }
    } else {
      gm.F = Matrix::Zero(S, j.value("m", 1));
    }
    if (j.contains("m") && j.at("m").get<int>() != gm.m()) throw PreconditionError("m does not match F");
    if (j.contains("L")) {
      const auto& L = j.at("L");
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) gm.L(s, a) = L.at(s).at(a).get<double>();
      }
    }
    validate_game(gm);
    return gm;
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed game fixture: ") + e.what());
  }
}

TabularGame load_game(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open game fixture " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_game(ss.str());
}

std::string game_to_json(const TabularGame& gm) {
  using nlohmann::json;
  json j;
  const int S = gm.n_states();
  const int A = gm.n_actions();
  json P = json::array();
  json R = json::array();
  json L = json::array();
  json F = json::array();
  for (int s = 0; s < S; ++s) {
    json ps = json::array();
    json rs = json::array();
    json ls = json::array();
    json fs = json::array();
    for (int a = 0; a < A; ++a) {
      json row = json::array();
      for (int t = 0; t < S; ++t) row.push_back(gm.P[static_cast<std::size_t>(a)](s, t));
      ps.push_back(row);
      rs.push_back(gm.R(s, a));
      ls.push_back(gm.L(s, a));
    }
    for (int k = 0; k < gm.m(); ++k) fs.push_back(gm.F(s, k));
    P.push_back(ps);
    R.push_back(rs);
    L.push_back(ls);
    F.push_back(fs);
  }
  j["P"] = P;
  j["R"] = R;
  j["L"] = L;
  j["F"] = F;
  j["gamma"] = gm.gamma;
  j["switch_cost"] = gm.switch_cost;
  j["m"] = gm.m();
  return j.dump(2);
}

TabularGame random_game(Rng& rng, int n_states, int n_actions, int m, const RandomGameOptions& options) {
  TabularGame gm;
  gm.P.assign(static_cast<std::size_t>(n_actions), Matrix::Zero(n_states, n_states));
  gm.R = Matrix::Zero(n_states, n_actions);
  gm.L = Matrix::Zero(n_states, n_actions);
  gm.F = Matrix::Zero(n_states, m);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      Matrix& Pa = gm.P[static_cast<std::size_t>(a)];
      for (int t = 0; t < n_states; ++t) {
        const double u = rng.uniform();
        Pa(s, t) = u * u;
      }
      Pa.row(s) /= Pa.row(s).sum();
      gm.R(s, a) = rng.uniform(-1.0, 1.0);
      if (options.with_novelty) gm.L(s, a) = rng.uniform(0.0, 0.2);
    }
    for (int k = 0; k < m; ++k) gm.F(s, k) = rng.uniform(0.0, 1.0);
  }
  gm.gamma = rng.uniform(options.gamma_lo, options.gamma_hi);
  gm.switch_cost = rng.uniform(0.0, options.cost_hi);
  return gm;
}

AugmentedValue intervention_op(const TabularGame& gm, const AugmentedValue& V, const Matrix& pi,
                               const Matrix& g) {
  check_shapes(gm, V);
  if (pi.rows() != gm.n_states() || pi.cols() != gm.n_actions() || g.rows() != gm.n_states() ||
      g.cols() != gm.m()) {
    throw PreconditionError("intervention_op: policy table shape mismatch");
  }
  AugmentedValue out(gm.n_states(), 2);
  for (int mode = 0; mode < 2; ++mode) {
    const Matrix next = expected_next(gm, V, 1 - mode);
    for (int s = 0; s < gm.n_states(); ++s) {
      double v = g.row(s).dot(gm.F.row(s)) - gm.switch_cost;
      for (int a = 0; a < gm.n_actions(); ++a) {
        v += pi(s, a) * (gm.R(s, a) + gm.L(s, a) + gm.gamma * next(s, a));
      }
      out(s, mode) = v;
    }
  }
  return out;
}

AugmentedValue greedy_intervention(const TabularGame& gm, const AugmentedValue& V) {
  check_shapes(gm, V);
  AugmentedValue out(gm.n_states(), 2);
  for (int mode = 0; mode < 2; ++mode) {
    const Matrix next = expected_next(gm, V, 1 - mode);
    for (int s = 0; s < gm.n_states(); ++s) {
      const double best = (gm.R.row(s) + gm.L.row(s) + gm.gamma * next.row(s)).maxCoeff();
      out(s, mode) = best + gm.F.row(s).maxCoeff() - gm.switch_cost;
    }
  }
  return out;
}

AugmentedValue bellman_op(const TabularGame& gm, const AugmentedValue& V) {
  AugmentedValue out = greedy_intervention(gm, V);
  for (int mode = 0; mode < 2; ++mode) {
    const Matrix next = expected_next(gm, V, mode);
    for (int s = 0; s < gm.n_states(); ++s) {
      out(s, mode) = std::max(out(s, mode), (gm.R.row(s) + gm.gamma * next.row(s)).maxCoeff());
    }
  }
  return out;
}

ValueIteration value_iterate(const TabularGame& gm, double tol, const AugmentedValue& V0,
                             int max_iterations) {
  if (!(tol > 0.0)) throw PreconditionError("value_iterate: tol must be positive");
  ValueIteration out;
  out.V = V0.size() == 0 ? AugmentedValue::Zero(gm.n_states(), 2) : V0;
  check_shapes(gm, out.V);
  while (out.iterations < max_iterations) {
    AugmentedValue next = bellman_op(gm, out.V);
    ++out.iterations;
    const double step = (next - out.V).cwiseAbs().maxCoeff();
    out.V = std::move(next);
    if (step < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

int iteration_bound(const TabularGame& gm, double tol, const AugmentedValue& V0) {
  const double d = (bellman_op(gm, V0) - V0).cwiseAbs().maxCoeff();
  if (d < tol) return 1;
  const double k = std::ceil(std::log(tol * (1.0 - gm.gamma) / d) / std::log(gm.gamma));
  return static_cast<int>(std::max(k, 0.0)) + 1;
}

BitTable switch_rule(const TabularGame& gm, const AugmentedValue& V, double slack) {
  const AugmentedValue gap = greedy_intervention(gm, V) - V;
  return (gap.array() >= -slack).cast<int>();
}

SwitchTrace simulate_switching(const TabularGame& gm, const AugmentedValue& V, const BitTable& rule,
                               int s0, int mode0, int steps, Rng& rng) {
  SwitchTrace trace;
  int s = s0;
  int mode = mode0;
  for (int t = 0; t < steps; ++t) {
    trace.states.push_back(s);
    trace.modes.push_back(mode);
    const bool intervene = rule(s, mode) == 1;
    const int next_mode = intervene ? 1 - mode : mode;
    const Matrix next = expected_next(gm, V, next_mode);
    Eigen::Index a = 0;
    if (intervene) {
      trace.switch_times.push_back(t);
      (gm.R.row(s) + gm.L.row(s) + gm.gamma * next.row(s)).maxCoeff(&a);
    } else {
      (gm.R.row(s) + gm.gamma * next.row(s)).maxCoeff(&a);
    }
    const Matrix& Pa = gm.P[static_cast<std::size_t>(a)];
    std::vector<double> probs(static_cast<std::size_t>(gm.n_states()));
    for (int k = 0; k < gm.n_states(); ++k) probs[static_cast<std::size_t>(k)] = Pa(s, k);
    s = rng.categorical(probs);
    mode = next_mode;
  }
  return trace;
}

Vector q_from_values(const TabularGame& gm, const AugmentedValue& V) {
  Vector Q(gm.q_rows());
  for (int mode = 0; mode < 2; ++mode) {
    const Matrix next = expected_next(gm, V, mode);
    for (int s = 0; s < gm.n_states(); ++s) {
      for (int a = 0; a < gm.n_actions(); ++a) Q[gm.q_row(s, mode, a)] = gm.R(s, a) + gm.gamma * next(s, a);
    }
  }
  return Q;
}

namespace {

// max{MQ(s,I), max_a Q(s,I,a)} for every (s, I).
AugmentedValue continuation_values(const TabularGame& gm, const Vector& Q) {
  AugmentedValue W(gm.n_states(), 2);
  for (int s = 0; s < gm.n_states(); ++s) {
    const double fmax = gm.F.row(s).maxCoeff();
    for (int mode = 0; mode < 2; ++mode) {
      double stay = -std::numeric_limits<double>::infinity();
      double intervene = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < gm.n_actions(); ++a) {
        stay = std::max(stay, Q[gm.q_row(s, mode, a)]);
        intervene = std::max(intervene, Q[gm.q_row(s, 1 - mode, a)] + gm.L(s, a));
      }
      W(s, mode) = std::max(stay, intervene + fmax - gm.switch_cost);
    }
  }
  return W;
}

}  // namespace

Vector q_backup(const TabularGame& gm, const Vector& Q) {
  if (Q.size() != gm.q_rows()) throw PreconditionError("q_backup: Q has the wrong length");
  return q_from_values(gm, continuation_values(gm, Q));
}

GeneratorTable generator_off(const TabularGame& gm) {
  GeneratorTable g;
  g.switch_on.assign(static_cast<std::size_t>(gm.n_states()), 0);
  g.theta.assign(static_cast<std::size_t>(gm.n_states()), 0);
  return g;
}

Vector evaluate_policy(const TabularGame& gm, const std::vector<int>& policy) {
  const int S = gm.n_states();
  Matrix M(S, S);
  Vector r(S);
  for (int s = 0; s < S; ++s) {
    const int a = policy[static_cast<std::size_t>(s)];
    M.row(s) = gm.P[static_cast<std::size_t>(a)].row(s);
    r[s] = gm.R(s, a);
  }
  const Matrix lhs = Matrix::Identity(S, S) - gm.gamma * M;
  return lhs.partialPivLu().solve(r);
}

Vector evaluate_shaped(const TabularGame& gm, const std::vector<int>& policy, const GeneratorTable& g) {
  const int S = gm.n_states();
  const double keep = 1.0 - g.terminate_prob;
  // Chain over (s, c): c = 0 stream off at step start, c = 1 stream continuing.
  Matrix M = Matrix::Zero(2 * S, 2 * S);
  Vector r = Vector::Zero(2 * S);
  auto pot = [&](int s) { return gm.F(s, g.theta[static_cast<std::size_t>(s)]); };
  for (int s = 0; s < S; ++s) {
    const int a = policy[static_cast<std::size_t>(s)];
    const auto& row = gm.P[static_cast<std::size_t>(a)];
    for (int c = 0; c < 2; ++c) {
      const int x = 2 * s + c;
      const bool on = c == 1 || g.switch_on[static_cast<std::size_t>(s)] == 1;
      r[x] = gm.R(s, a);
      if (!on) {
        for (int t = 0; t < S; ++t) M(x, 2 * t) += row(s, t);
        continue;
      }
      // u_t is 0 on the switch-on step and pot(s) while continuing.
      if (c == 1) r[x] -= pot(s);
      for (int t = 0; t < S; ++t) {
        r[x] += row(s, t) * keep * gm.gamma * pot(t);
        M(x, 2 * t + 1) += row(s, t) * keep;
        M(x, 2 * t) += row(s, t) * g.terminate_prob;
      }
    }
  }
  const Matrix lhs = Matrix::Identity(2 * S, 2 * S) - gm.gamma * M;
  const Vector v = lhs.partialPivLu().solve(r);
  Vector out(S);
  for (int s = 0; s < S; ++s) out[s] = v[2 * s];
  return out;
}

namespace {

constexpr int kMaxAuditStates = 4;
constexpr int kMaxAuditActions = 3;

void check_enumerable(const TabularGame& gm) {
  if (gm.n_states() > kMaxAuditStates || gm.n_actions() > kMaxAuditActions) {
    throw PreconditionError("enumeration size cap exceeded (at most 4 states and 3 joint actions)");
  }
}

std::vector<std::size_t> optimal_set(const std::vector<Vector>& values, double tol) {
  Vector best = values.front();
  for (const Vector& v : values) best = best.cwiseMax(v);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if ((best - values[i]).maxCoeff() <= tol) out.push_back(i);
  }
  return out;
}

}  // namespace

InvarianceReport invariance_audit(const TabularGame& gm, const GeneratorTable& g, double tol) {
  validate_game(gm);
  check_enumerable(gm);
  const int S = gm.n_states();
  const std::size_t count = power(static_cast<std::size_t>(gm.n_actions()), S);
  std::vector<Vector> plain;
  std::vector<Vector> shaped;
  InvarianceReport rep;
  rep.policies = count;
  rep.best_plain = -std::numeric_limits<double>::infinity();
  rep.best_shaped = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    const std::vector<int> policy = decode(i, S, gm.n_actions());
    plain.push_back(evaluate_policy(gm, policy));
    shaped.push_back(evaluate_shaped(gm, policy, g));
    rep.max_value_gap = std::max(rep.max_value_gap, (plain.back() - shaped.back()).cwiseAbs().maxCoeff());
    rep.best_plain = std::max(rep.best_plain, plain.back().mean());
    rep.best_shaped = std::max(rep.best_shaped, shaped.back().mean());
  }
  rep.plain_optimal = optimal_set(plain, tol);
  rep.shaped_optimal = optimal_set(shaped, tol);
  rep.sets_equal = rep.plain_optimal == rep.shaped_optimal;
  rep.passed = rep.sets_equal && std::abs(rep.best_plain - rep.best_shaped) <= tol;
  return rep;
}

ImprovementReport weak_improvement(const TabularGame& gm, const std::vector<double>& terminate_probs,
                                   double tol) {
  validate_game(gm);
  check_enumerable(gm);
  const int S = gm.n_states();
  const std::size_t count = power(static_cast<std::size_t>(gm.n_actions()), S);
  std::vector<Vector> plain;
  ImprovementReport rep;
  rep.without_generator = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    plain.push_back(evaluate_policy(gm, decode(i, S, gm.n_actions())));
    rep.without_generator = std::max(rep.without_generator, plain.back().mean());
  }
  rep.with_generator = -std::numeric_limits<double>::infinity();
  const std::size_t switch_tables = power(2, S);
  const std::size_t channel_tables = power(static_cast<std::size_t>(gm.m()), S);
  for (double p : terminate_probs) {
    for (std::size_t sw = 0; sw < switch_tables; ++sw) {
      for (std::size_t ch = 0; ch < channel_tables; ++ch) {
        GeneratorTable g{decode(sw, S, 2), decode(ch, S, gm.m()), p};
        std::vector<Vector> shaped;
        for (std::size_t i = 0; i < count; ++i) shaped.push_back(evaluate_shaped(gm, decode(i, S, gm.n_actions()), g));
        const std::size_t chosen = optimal_set(shaped, tol).front();
        rep.with_generator = std::max(rep.with_generator, plain[chosen].mean());
        ++rep.tables;
      }
    }
  }
  rep.passed = rep.with_generator >= rep.without_generator - tol;
  return rep;
}

Matrix projection(const Matrix& phi) {
  const Matrix gram = phi.transpose() * phi;
  return phi * gram.ldlt().solve(phi.transpose());
}

double weighted_norm(const Vector& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

double projected_residual(const TabularGame& gm, const Matrix& phi, const Vector& r) {
  const Vector q = phi * r;
  return weighted_norm(projection(phi) * q_backup(gm, q) - q);
}

ProjectedFixedPoint projected_fixed_point(const TabularGame& gm, const Matrix& phi, double tol,
                                          int max_iterations) {
  const Matrix solver = (phi.transpose() * phi).ldlt().solve(phi.transpose());
  ProjectedFixedPoint out;
  out.r = Vector::Zero(phi.cols());
  while (out.iterations < max_iterations) {
    const Vector next = solver * q_backup(gm, phi * out.r);
    ++out.iterations;
    const double step = (phi * (next - out.r)).cwiseAbs().maxCoeff();
    out.r = next;
    if (!out.r.allFinite()) break;
    if (step < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

LinearFaResult linear_fa_qlearn(const TabularGame& gm, const Matrix& phi, const LinearFaOptions& options) {
  validate_game(gm);
  const int N = gm.q_rows();
  if (phi.rows() != N) throw PreconditionError("basis must have one row per (s, I, a)");
  Eigen::ColPivHouseholderQR<Matrix> qr(phi);
  if (qr.rank() != phi.cols()) throw PreconditionError("basis columns are linearly dependent");

  const double lr0 = options.lr0 > 0.0 ? options.lr0 : 1.0 / phi.rowwise().squaredNorm().maxCoeff();
  Rng rng(options.seed);
  Vector r = Vector::Zero(phi.cols());
  Vector avg = Vector::Zero(phi.cols());
  std::uint64_t averaged = 0;
  const auto tail_start = static_cast<std::uint64_t>(
      static_cast<double>(options.steps) * (1.0 - options.average_fraction));
  const int A = gm.n_actions();
  const int S = gm.n_states();

  std::vector<int> order(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
  std::vector<double> probs(static_cast<std::size_t>(S));

  for (std::uint64_t t = 0; t < options.steps; ++t) {
    const auto pos = static_cast<std::size_t>(t % static_cast<std::uint64_t>(N));
    if (pos == 0) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    const int x = order[pos];
    const int a = x % A;
    const int mode = (x / A) % 2;
    const int s = x / (2 * A);

    const Vector Q = phi * r;
    const AugmentedValue W = continuation_values(gm, Q);
    const Matrix& Pa = gm.P[static_cast<std::size_t>(a)];
    double cont = 0.0;
    if (options.expected_backup) {
      cont = Pa.row(s).dot(W.col(mode));
    } else {
      for (int k = 0; k < S; ++k) probs[static_cast<std::size_t>(k)] = Pa(s, k);
      cont = W(rng.categorical(probs), mode);
    }
    const double target = gm.R(s, a) + gm.gamma * cont;
    const double alpha = lr0 / (1.0 + static_cast<double>(t) / options.lr_horizon);
    r += alpha * (target - Q[x]) * phi.row(x).transpose();
    if (!r.allFinite() || r.norm() > 1e6) {
      throw NumericError("linear_fa_qlearn diverged at step " + std::to_string(t) + " (||r|| = " +
                         fmt(r.norm()) + ")");
    }
    if (t >= tail_start) {
      ++averaged;
      avg += (r - avg) / static_cast<double>(averaged);
    }
  }
  return {averaged > 0 ? avg : r, r};
}

Matrix random_basis(Rng& rng, int rows, int cols) {
  for (;;) {
    Matrix phi(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) phi(i, j) = rng.normal();
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(phi);
    if (qr.rank() == cols) return phi;
  }
}

}  // namespace ligs::theory
