#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ligs/mlp.hpp"
#include "ligs/rng.hpp"

namespace ligs {

// Distillation pair over (state, joint action) encodings. The target is frozen
// at construction; only the predictor learns.
struct RndPair {
  ParamStore target;
  ParamStore predictor;
};

RndPair make_rnd(int input_dim, int output_dim, const std::vector<int>& hidden, Rng& init_rng);

// concat(state, one-hot action block per agent).
Vector rnd_input(const Vector& state, std::span<const int> joint_action, int num_actions);

// ||predictor(x) - target(x)||^2.
double novelty_rnd(const RndPair& pair, const Vector& x);

// One Adam step on the predictor for the mean squared distance over the batch
// rows. Returns the loss before the step.
double rnd_update(RndPair& pair, const Matrix& batch, double lr, double grad_clip_norm = 1.0);

// Welford running mean/variance.
class RunningStats {
 public:
  void push(double x);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_) : 0.0; }
  double stddev() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Raw novelty divided by the running std of everything seen so far (the value
// itself included). Returns raw until two values have been seen.
double normalize_novelty(RunningStats& stats, double raw);

class VisitCounter {
 public:
  std::uint64_t count(const std::vector<int>& key) const;
  void increment(const std::vector<int>& key) { ++counts_[key]; }
  std::size_t distinct() const { return counts_.size(); }

 private:
  std::map<std::vector<int>, std::uint64_t> counts_;
};

// 1 / (count(key) + 1), then count(key) += 1.
double novelty_count(VisitCounter& counter, const std::vector<int>& key);

}  // namespace ligs
