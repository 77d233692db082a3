#include "ligs/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ligs/errors.hpp"

namespace ligs {
namespace {

using ConstMapMatrix = Eigen::Map<const Matrix>;
using MapMatrix = Eigen::Map<Matrix>;

Eigen::Index layer_offset(const std::vector<LayerShape>& shapes, std::size_t layer) {
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += static_cast<Eigen::Index>(shapes[l].in + 1) * shapes[l].out;
  return off;
}

template <typename T>
void write_le(std::ofstream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return value;
}

}  // namespace

std::vector<LayerShape> mlp_shapes(int in, const std::vector<int>& hidden, int out) {
  std::vector<LayerShape> shapes;
  int prev = in;
  for (int h : hidden) {
    shapes.push_back({prev, h});
    prev = h;
  }
  shapes.push_back({prev, out});
  return shapes;
}

ParamStore make_params(std::vector<LayerShape> shapes) {
  if (shapes.empty()) throw PreconditionError("an MLP needs at least one layer");
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (shapes[l].in < 1 || shapes[l].out < 1) throw PreconditionError("layer dims must be positive");
    if (l > 0 && shapes[l].in != shapes[l - 1].out) throw PreconditionError("layer dims do not chain");
  }
  ParamStore p;
  p.layer_shapes = std::move(shapes);
  const Eigen::Index n = layer_offset(p.layer_shapes, p.layer_shapes.size());
  p.params = Vector::Zero(n);
  p.grads = Vector::Zero(n);
  p.moment1 = Vector::Zero(n);
  p.moment2 = Vector::Zero(n);
  return p;
}

ParamStore make_mlp(int in, const std::vector<int>& hidden, int out, Rng& rng) {
  ParamStore p = make_params(mlp_shapes(in, hidden, out));
  for (std::size_t l = 0; l < p.layer_shapes.size(); ++l) {
    const auto [lin, lout] = p.layer_shapes[l];
    const double bound = std::sqrt(1.0 / lin);
    const Eigen::Index off = layer_offset(p.layer_shapes, l);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(lin) * lout; ++k) {
      p.params[off + k] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

std::pair<Matrix, ForwardTape> forward(const ParamStore& p, const Matrix& x) {
  if (x.cols() != p.input_dim()) {
    throw PreconditionError("forward: input has " + std::to_string(x.cols()) + " columns, expected " +
                            std::to_string(p.input_dim()));
  }
  ForwardTape tape;
  tape.inputs.reserve(p.layer_shapes.size());
  tape.pre_activations.reserve(p.layer_shapes.size());
  Matrix a = x;
  for (std::size_t l = 0; l < p.layer_shapes.size(); ++l) {
    const auto [in, out] = p.layer_shapes[l];
    const Eigen::Index off = layer_offset(p.layer_shapes, l);
    ConstMapMatrix w(p.params.data() + off, in, out);
    Eigen::Map<const Eigen::RowVectorXd> b(p.params.data() + off + static_cast<Eigen::Index>(in) * out, out);
    Matrix z = a * w;
    z.rowwise() += b;
    tape.inputs.push_back(std::move(a));
    if (l + 1 < p.layer_shapes.size()) {
      a = z.cwiseMax(0.0);
    } else {
      a = z;
    }
    tape.pre_activations.push_back(std::move(z));
  }
  return {std::move(a), std::move(tape)};
}

Matrix predict(const ParamStore& p, const Matrix& x) {
  if (x.cols() != p.input_dim()) throw PreconditionError("predict: input dimension mismatch");
  Matrix a = x;
  for (std::size_t l = 0; l < p.layer_shapes.size(); ++l) {
    const auto [in, out] = p.layer_shapes[l];
    const Eigen::Index off = layer_offset(p.layer_shapes, l);
    ConstMapMatrix w(p.params.data() + off, in, out);
    Eigen::Map<const Eigen::RowVectorXd> b(p.params.data() + off + static_cast<Eigen::Index>(in) * out, out);
    Matrix z = a * w;
    z.rowwise() += b;
    a = (l + 1 < p.layer_shapes.size()) ? Matrix(z.cwiseMax(0.0)) : z;
  }
  return a;
}

Vector predict_row(const ParamStore& p, const Vector& x) {
  return predict(p, x.transpose()).row(0).transpose();
}

void backward(ParamStore& p, const ForwardTape& tape, const Matrix& dloss_dy) {
  const std::size_t layers = p.layer_shapes.size();
  if (tape.inputs.size() != layers || tape.pre_activations.size() != layers) {
    throw PreconditionError("backward: tape does not match the parameter store");
  }
  const Eigen::Index batch = tape.inputs.front().rows();
  if (dloss_dy.rows() != batch || dloss_dy.cols() != p.output_dim()) {
    throw PreconditionError("backward: dloss/dy has the wrong shape");
  }
  Matrix delta = dloss_dy;
  for (std::size_t l = layers; l-- > 0;) {
    const auto [in, out] = p.layer_shapes[l];
    const Eigen::Index off = layer_offset(p.layer_shapes, l);
    MapMatrix gw(p.grads.data() + off, in, out);
    Eigen::Map<Eigen::RowVectorXd> gb(p.grads.data() + off + static_cast<Eigen::Index>(in) * out, out);
    gw.noalias() += tape.inputs[l].transpose() * delta;
    gb += delta.colwise().sum();
    if (l == 0) break;
    ConstMapMatrix w(p.params.data() + off, in, out);
    Matrix upstream = delta * w.transpose();
    const Matrix& z_prev = tape.pre_activations[l - 1];
    delta = upstream.cwiseProduct((z_prev.array() > 0.0).cast<double>().matrix());
  }
}

double clip_grad_norm(ParamStore& p, double clip_norm) {
  const double norm = p.grads.norm();
  if (norm > clip_norm && norm > 0.0) p.grads *= clip_norm / norm;
  return norm;
}

void adam_step(ParamStore& p, double lr, double clip_norm) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  for (Eigen::Index i = 0; i < p.grads.size(); ++i) {
    if (!std::isfinite(p.grads[i])) {
      throw NumericError("non-finite gradient at parameter index " + std::to_string(i));
    }
  }
  clip_grad_norm(p, clip_norm);
  ++p.step_count;
  const double t = static_cast<double>(p.step_count);
  const double c1 = 1.0 - std::pow(kBeta1, t);
  const double c2 = 1.0 - std::pow(kBeta2, t);
  p.moment1 = kBeta1 * p.moment1 + (1.0 - kBeta1) * p.grads;
  p.moment2 = kBeta2 * p.moment2 + (1.0 - kBeta2) * p.grads.cwiseAbs2();
  p.params.array() -= lr * (p.moment1.array() / c1) / ((p.moment2.array() / c2).sqrt() + kEps);
  p.zero_grad();
}

std::uint64_t param_hash(const ParamStore& p) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(p.params.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(p.params.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

void save_checkpoint(const ParamStore& p, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  write_le<std::uint64_t>(out, p.layer_shapes.size());
  for (const LayerShape& s : p.layer_shapes) {
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.in));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.out));
  }
  for (Eigen::Index i = 0; i < p.params.size(); ++i) write_le<double>(out, p.params[i]);
  if (!out) throw std::runtime_error("checkpoint write failed for '" + path.string() + "'");
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  const auto layers = read_le<std::uint64_t>(in);
  if (layers == 0 || layers > 64) throw std::runtime_error("implausible layer count in checkpoint");
  std::vector<LayerShape> shapes;
  for (std::uint64_t l = 0; l < layers; ++l) {
    const auto lin = read_le<std::uint64_t>(in);
    const auto lout = read_le<std::uint64_t>(in);
    shapes.push_back({static_cast<int>(lin), static_cast<int>(lout)});
  }
  ParamStore p = make_params(std::move(shapes));
  for (Eigen::Index i = 0; i < p.params.size(); ++i) p.params[i] = read_le<double>(in);
  return p;
}

}  // namespace ligs
