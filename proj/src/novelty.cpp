#include "ligs/novelty.hpp"

#include <cmath>

#include "ligs/errors.hpp"

namespace ligs {

RndPair make_rnd(int input_dim, int output_dim, const std::vector<int>& hidden, Rng& init_rng) {
  RndPair pair;
  pair.target = make_mlp(input_dim, hidden, output_dim, init_rng);
  pair.predictor = make_mlp(input_dim, hidden, output_dim, init_rng);
  return pair;
}

Vector rnd_input(const Vector& state, std::span<const int> joint_action, int num_actions) {
  const auto n = static_cast<Eigen::Index>(joint_action.size());
  Vector x = Vector::Zero(state.size() + n * num_actions);
  x.head(state.size()) = state;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = joint_action[static_cast<std::size_t>(i)];
    if (a < 0 || a >= num_actions) throw PreconditionError("rnd_input: action out of range");
    x[state.size() + i * num_actions + a] = 1.0;
  }
  return x;
}

double novelty_rnd(const RndPair& pair, const Vector& x) {
  return (predict_row(pair.predictor, x) - predict_row(pair.target, x)).squaredNorm();
}

double rnd_update(RndPair& pair, const Matrix& batch, double lr, double grad_clip_norm) {
  if (batch.rows() == 0) throw PreconditionError("rnd_update: empty batch");
  const Matrix target = predict(pair.target, batch);
  auto [pred, tape] = forward(pair.predictor, batch);
  const Matrix diff = pred - target;
  const double n = static_cast<double>(batch.rows());
  const double loss = diff.rowwise().squaredNorm().sum() / n;
  if (!std::isfinite(loss)) throw NumericError("non-finite distillation loss");
  backward(pair.predictor, tape, diff * (2.0 / n));
  adam_step(pair.predictor, lr, grad_clip_norm);
  return loss;
}

void RunningStats::push(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStats::stddev() const { return std::sqrt(variance()); }

double normalize_novelty(RunningStats& stats, double raw) {
  stats.push(raw);
  if (stats.count() < 2) return raw;
  return raw / (stats.stddev() + 1e-8);
}

std::uint64_t VisitCounter::count(const std::vector<int>& key) const {
  const auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

double novelty_count(VisitCounter& counter, const std::vector<int>& key) {
  const double value = 1.0 / (static_cast<double>(counter.count(key)) + 1.0);
  counter.increment(key);
  return value;
}

}  // namespace ligs
