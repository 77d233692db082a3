#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ligs/rng.hpp"

namespace ligs::theory {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BitTable = Eigen::MatrixXi;

// Finite joint-action game with a Generator layer. P[a](s, s') are transition
// probabilities, R and L are state x joint-action tables, F is state x channel.
struct TabularGame {
  std::vector<Matrix> P;
  Matrix R;
  Matrix F;
  Matrix L;
  double gamma = 0.9;
  double switch_cost = 0.0;

  int n_states() const { return static_cast<int>(R.rows()); }
  int n_actions() const { return static_cast<int>(R.cols()); }
  int m() const { return static_cast<int>(F.cols()); }
  // Row index of (s, I, a) in Q vectors and feature matrices.
  int q_row(int s, int mode, int a) const { return (s * 2 + mode) * n_actions() + a; }
  int q_rows() const { return n_states() * 2 * n_actions(); }
};

// Throws PreconditionError naming the first bad entry, e.g. "P[2][1] sums to 0.9".
void validate_game(const TabularGame& gm);

// JSON object with P ([s][a][s']), R ([s][a]), gamma, F ([s][theta]),
// switch_cost and optionally m and L. The result is validated.
TabularGame parse_game(std::string_view json_text);
TabularGame load_game(const std::filesystem::path& path);
std::string game_to_json(const TabularGame& gm);

struct RandomGameOptions {
  double gamma_lo = 0.5;
  double gamma_hi = 0.95;
  double cost_hi = 0.5;
  bool with_novelty = false;
};
TabularGame random_game(Rng& rng, int n_states, int n_actions, int m,
                        const RandomGameOptions& options = {});

// Values over (s, I): n_states x 2.
using AugmentedValue = Matrix;

// Intervention backup under stochastic tables pi (state x action) and g
// (state x channel):
//   (MV)(s,I) = sum_a pi [R + L] + sum_theta g F - cost + gamma sum_a pi sum_s' P V(s', 1-I).
AugmentedValue intervention_op(const TabularGame& gm, const AugmentedValue& V, const Matrix& pi,
                               const Matrix& g);

// Same backup with greedy choices: max_a[R + L + gamma P V(., 1-I)] + max_theta F - cost.
AugmentedValue greedy_intervention(const TabularGame& gm, const AugmentedValue& V);

// TV = max(greedy intervention, max_a [R + gamma P V(., I)]).
AugmentedValue bellman_op(const TabularGame& gm, const AugmentedValue& V);

struct ValueIteration {
  AugmentedValue V;
  int iterations = 0;
  bool converged = false;
};
// Iterates T from V0 (zeros when empty) until the sup-norm step is below tol.
ValueIteration value_iterate(const TabularGame& gm, double tol, const AugmentedValue& V0 = {},
                             int max_iterations = 1000000);

// ceil(log(tol (1 - gamma) / ||V1 - V0||) / log gamma) + 1, with V1 = T V0.
int iteration_bound(const TabularGame& gm, double tol, const AugmentedValue& V0);

// 1 where greedy_intervention(V) - V >= -slack.
BitTable switch_rule(const TabularGame& gm, const AugmentedValue& V, double slack = 1e-8);

struct SwitchTrace {
  std::vector<int> states;
  std::vector<int> modes;
  std::vector<int> switch_times;
};
// Rolls the greedy joint policy and the switching rule forward from (s0, I0).
// A switch at t toggles I for t+1 and uses the intervention branch's action.
SwitchTrace simulate_switching(const TabularGame& gm, const AugmentedValue& V, const BitTable& rule,
                               int s0, int mode0, int steps, Rng& rng);

// Q(s,I,a) = R + gamma sum P V(s', I) as a q_rows() vector.
Vector q_from_values(const TabularGame& gm, const AugmentedValue& V);

// Q-form backup: R + gamma sum_s' P max{MQ(s',I), max_a' Q(s',I,a')} with
// MQ(s,I) = max_theta F - cost + max_a [Q(s, 1-I, a) + L].
Vector q_backup(const TabularGame& gm, const Vector& Q);

// Deterministic Generator table for exact audits: where it switches on, the
// channel held in each state, and the per-step stream termination chance.
struct GeneratorTable {
  std::vector<int> switch_on;
  std::vector<int> theta;
  double terminate_prob = 0.5;
};
GeneratorTable generator_off(const TabularGame& gm);

// Exact discounted values of a deterministic joint policy.
Vector evaluate_policy(const TabularGame& gm, const std::vector<int>& policy);
// Same policy with the telescoping shaping reward of table g added while the
// stream is on; potentials are F(s, theta(s)), pinned to 0 at switch-on and
// after termination. Values at stream-off states.
Vector evaluate_shaped(const TabularGame& gm, const std::vector<int>& policy, const GeneratorTable& g);

struct InvarianceReport {
  std::size_t policies = 0;
  std::vector<std::size_t> plain_optimal;
  std::vector<std::size_t> shaped_optimal;
  double max_value_gap = 0.0;  // max over policies and states of |v_shaped - v_plain|
  double best_plain = 0.0;
  double best_shaped = 0.0;
  bool sets_equal = false;
  bool passed = false;
};
// Enumerates all deterministic joint policies (at most 4 states, 3 actions).
InvarianceReport invariance_audit(const TabularGame& gm, const GeneratorTable& g, double tol);

struct ImprovementReport {
  double with_generator = 0.0;     // best environment return when agents answer each table optimally
  double without_generator = 0.0;  // best environment return over policies alone
  std::size_t tables = 0;
  bool passed = false;
};
// Enumerates switch/channel tables with the given termination chances.
ImprovementReport weak_improvement(const TabularGame& gm, const std::vector<double>& terminate_probs,
                                   double tol);

// Uniform-weight least-squares projection Phi (Phi^T Phi)^-1 Phi^T.
Matrix projection(const Matrix& phi);
// Root-mean-square norm (uniform weights).
double weighted_norm(const Vector& v);
// ||Pi F(Phi r) - Phi r|| in the uniform-weight norm.
double projected_residual(const TabularGame& gm, const Matrix& phi, const Vector& r);

struct ProjectedFixedPoint {
  Vector r;
  int iterations = 0;
  bool converged = false;
};
// Iterates r <- argmin ||Phi r' - F(Phi r)|| until the step is below tol.
ProjectedFixedPoint projected_fixed_point(const TabularGame& gm, const Matrix& phi, double tol,
                                          int max_iterations = 100000);

struct LinearFaOptions {
  std::uint64_t steps = 2000000;
  double lr_horizon = 1000.0;  // alpha_t = lr0 / (1 + t / lr_horizon)
  double lr0 = 0.0;            // 0 picks 1 / max row ||phi||^2
  bool expected_backup = true;
  double average_fraction = 0.5;  // Polyak average over this trailing share
  std::uint64_t seed = 0;
};
struct LinearFaResult {
  Vector r;       // tail average
  Vector r_last;  // final iterate
};
// Q-learning in feature space: visits every (s, I, a) once per sweep in a fresh
// random order and moves r along phi(x) toward the backup target. Throws
// NumericError when ||r|| exceeds 1e6.
LinearFaResult linear_fa_qlearn(const TabularGame& gm, const Matrix& phi, const LinearFaOptions& options);

// Gaussian basis with full column rank.
Matrix random_basis(Rng& rng, int rows, int cols);

}  // namespace ligs::theory
