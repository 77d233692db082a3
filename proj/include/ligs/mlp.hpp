#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "ligs/rng.hpp"

namespace ligs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LayerShape {
  int in = 0;
  int out = 0;
  bool operator==(const LayerShape&) const = default;
};

// Flat parameter storage for a ReLU MLP. Layer l owns an in x out weight block
// (column-major) followed by its out biases. grads and both Adam moments share
// the same layout.
struct ParamStore {
  std::vector<LayerShape> layer_shapes;
  Vector params;
  Vector grads;
  Vector moment1;
  Vector moment2;
  std::uint64_t step_count = 0;

  int input_dim() const { return layer_shapes.front().in; }
  int output_dim() const { return layer_shapes.back().out; }
  Eigen::Index size() const { return params.size(); }
  void zero_grad() { grads.setZero(); }
};

// Layer shapes in -> hidden... -> out.
std::vector<LayerShape> mlp_shapes(int in, const std::vector<int>& hidden, int out);

// Zero parameters, gradients and moments.
ParamStore make_params(std::vector<LayerShape> shapes);

// Weights ~ U(-sqrt(1/in), +sqrt(1/in)), biases 0.
ParamStore make_mlp(int in, const std::vector<int>& hidden, int out, Rng& rng);

// Activations entering each layer and the pre-activations it produced.
struct ForwardTape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
};

// y = affine(relu(affine(... x))) with a linear final layer; x is batch x in.
std::pair<Matrix, ForwardTape> forward(const ParamStore& p, const Matrix& x);
// Convenience when no gradient is needed.
Matrix predict(const ParamStore& p, const Matrix& x);
Vector predict_row(const ParamStore& p, const Vector& x);

// Accumulates d(loss)/d(params) into p.grads given d(loss)/dy.
void backward(ParamStore& p, const ForwardTape& tape, const Matrix& dloss_dy);

// Scales grads so their global L2 norm is at most clip_norm; returns the
// norm before clipping.
double clip_grad_norm(ParamStore& p, double clip_norm);

// Clip, then Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias corrected); zeroes
// grads. Throws NumericError naming the first non-finite gradient index.
void adam_step(ParamStore& p, double lr, double clip_norm);

// FNV-1a over the raw parameter bytes.
std::uint64_t param_hash(const ParamStore& p);

// Little-endian layout: u64 layer count, (u64 in, u64 out) per layer, then
// the flat f64 parameters.
void save_checkpoint(const ParamStore& p, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace ligs
