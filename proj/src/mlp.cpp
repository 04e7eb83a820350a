#include "gaitbench/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "gaitbench/kernels.hpp"

namespace gaitbench {

bool is_supported_width(int width) {
  for (int w : {1, 2, 4, 8, 16, 32, 64, 128}) {
    if (w == width) return true;
  }
  return false;
}

void MlpArchitecture::validate() const {
  if (depth < 0 || depth > 2) {
    throw std::invalid_argument("MLP depth must be 0, 1 or 2, got " +
                                std::to_string(depth));
  }
  if (depth > 0 && !is_supported_width(width)) {
    throw std::invalid_argument("MLP width must be a power of two in [1, 128], got " +
                                std::to_string(width));
  }
  if (inputs == 0 || outputs == 0) {
    throw std::invalid_argument("MLP needs at least one input and one output");
  }
}

std::vector<std::size_t> MlpArchitecture::actor_sizes() const {
  std::vector<std::size_t> s{inputs};
  for (int i = 0; i < depth; ++i) s.push_back(static_cast<std::size_t>(width));
  s.push_back(outputs);
  return s;
}

std::vector<std::size_t> MlpArchitecture::critic_sizes() const {
  auto s = actor_sizes();
  s.back() = 1;
  return s;
}

std::string MlpArchitecture::label() const {
  if (depth == 0) return "m0";
  return "m" + std::to_string(depth) + "_" + std::to_string(width);
}

std::size_t dense_param_count(std::span<const std::size_t> sizes) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) n += sizes[l - 1] * sizes[l] + sizes[l];
  return n;
}

MlpLayout mlp_layout(const MlpArchitecture& arch) {
  arch.validate();
  MlpLayout layout;
  layout.actor_size = dense_param_count(arch.actor_sizes());
  layout.log_std_offset = layout.actor_size;
  if (arch.actor_critic) {
    layout.critic_offset = layout.log_std_offset + arch.outputs;
    layout.critic_size = dense_param_count(arch.critic_sizes());
  } else {
    layout.critic_offset = layout.actor_size;
  }
  layout.total = layout.critic_offset + layout.critic_size;
  return layout;
}

std::size_t param_count(const MlpArchitecture& arch) {
  return mlp_layout(arch).total;
}

MlpGenome::MlpGenome(MlpArchitecture arch, std::vector<double> params)
    : arch_(arch), layout_(mlp_layout(arch)), params_(std::move(params)) {
  if (params_.size() != layout_.total) {
    throw std::invalid_argument("MLP genome " + arch_.label() + " needs " +
                                std::to_string(layout_.total) +
                                " parameters, got " +
                                std::to_string(params_.size()));
  }
  for (double p : params_) {
    if (!std::isfinite(p)) throw std::invalid_argument("non-finite MLP parameter");
  }
}

MlpGenome MlpGenome::zeros(const MlpArchitecture& arch) {
  return MlpGenome(arch, std::vector<double>(param_count(arch), 0.0));
}

namespace {

// Fills an out x in row-major block with a scaled (semi-)orthogonal matrix.
void orthogonal_block(std::span<double> w, std::size_t out, std::size_t in,
                      double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t rows = std::max(out, in);
  const std::size_t cols = std::min(out, in);
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  // q has orthonormal columns; transpose when the layer is wider than tall.
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) {
      const double v = out >= in ? q(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i))
                                 : q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o));
      w[o * in + i] = gain * v;
    }
  }
}

void init_dense(std::span<double> params, std::span<const std::size_t> sizes,
                double output_gain, std::mt19937_64& rng) {
  std::size_t off = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const std::size_t in = sizes[l - 1];
    const std::size_t out = sizes[l];
    const double gain = l + 1 == sizes.size() ? output_gain : std::sqrt(2.0);
    orthogonal_block(params.subspan(off, in * out), out, in, gain, rng);
    off += in * out;
    std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(off), out, 0.0);
    off += out;
  }
}

}  // namespace

MlpGenome MlpGenome::orthogonal_init(const MlpArchitecture& arch,
                                     std::mt19937_64& rng) {
  MlpGenome g = zeros(arch);
  const auto p = g.mutable_params();
  init_dense(p.subspan(0, g.layout_.actor_size), arch.actor_sizes(), 0.01, rng);
  if (arch.actor_critic) {
    init_dense(p.subspan(g.layout_.critic_offset, g.layout_.critic_size),
               arch.critic_sizes(), 1.0, rng);
  }
  return g;
}

std::span<const double> MlpGenome::actor_params() const {
  return std::span(params_).subspan(0, layout_.actor_size);
}

std::span<const double> MlpGenome::log_std() const {
  if (!arch_.actor_critic) return {};
  return std::span(params_).subspan(layout_.log_std_offset, arch_.outputs);
}

std::span<const double> MlpGenome::critic_params() const {
  return std::span(params_).subspan(layout_.critic_offset, layout_.critic_size);
}

nlohmann::json MlpGenome::to_json() const {
  nlohmann::json j = {{"type", "mlp"},
                      {"depth", arch_.depth},
                      {"width", arch_.depth == 0 ? 0 : arch_.width},
                      {"actor_critic", arch_.actor_critic},
                      {"params", params_}};
  if (arch_.inputs != 8) j["inputs"] = arch_.inputs;
  if (arch_.outputs != 8) j["outputs"] = arch_.outputs;
  return j;
}

MlpGenome MlpGenome::from_json(const nlohmann::json& j) {
  if (j.at("type").get<std::string>() != "mlp") {
    throw std::invalid_argument("genome is not an MLP");
  }
  MlpArchitecture arch;
  arch.depth = j.at("depth").get<int>();
  arch.width = j.at("width").get<int>();
  arch.actor_critic = j.at("actor_critic").get<bool>();
  arch.inputs = j.value("inputs", std::size_t{8});
  arch.outputs = j.value("outputs", std::size_t{8});
  return MlpGenome(arch, j.at("params").get<std::vector<double>>());
}

void dense_forward(std::span<const double> params,
                   std::span<const std::size_t> sizes,
                   std::span<const double> input, ForwardCache& cache) {
  if (input.size() != sizes.front()) {
    throw std::invalid_argument("MLP expects " + std::to_string(sizes.front()) +
                                " inputs, got " + std::to_string(input.size()));
  }
  cache.acts.resize(sizes.size());
  cache.acts[0].assign(input.begin(), input.end());
  std::size_t off = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const std::size_t in = sizes[l - 1];
    const std::size_t out = sizes[l];
    auto& y = cache.acts[l];
    y.resize(out);
    kernels::affine(params.subspan(off, out * in), params.data() + off + out * in,
                    cache.acts[l - 1], y);
    off += out * in + out;
    if (l + 1 < sizes.size()) {
      for (double& v : y) v = std::tanh(v);
    }
  }
}

void dense_backward(std::span<const double> params,
                    std::span<const std::size_t> sizes,
                    const ForwardCache& cache, std::span<const double> d_out,
                    std::span<double> grad) {
  std::vector<std::size_t> offsets(sizes.size(), 0);
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    offsets[l] = offsets[l - 1] + (l > 1 ? sizes[l - 2] * sizes[l - 1] + sizes[l - 1] : 0);
  }
  std::vector<double> delta(d_out.begin(), d_out.end());
  std::vector<double> prev;
  for (std::size_t l = sizes.size() - 1; l >= 1; --l) {
    const std::size_t in = sizes[l - 1];
    const std::size_t out = sizes[l];
    const std::size_t off = offsets[l];
    const auto& a_in = cache.acts[l - 1];
    kernels::rank1(grad.subspan(off, out * in), 1.0, delta, a_in);
    kernels::axpy(1.0, delta, grad.subspan(off + out * in, out));
    if (l == 1) break;
    prev.assign(in, 0.0);
    kernels::gemv_t_acc(params.subspan(off, out * in), delta, prev);
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a_in[i] * a_in[i];
    delta.swap(prev);
  }
}

std::vector<double> mlp_mean(const MlpGenome& genome,
                             std::span<const double> obs) {
  thread_local ForwardCache cache;
  dense_forward(genome.actor_params(), genome.arch().actor_sizes(), obs, cache);
  return cache.acts.back();
}

std::vector<double> mlp_act(const MlpGenome& genome,
                            std::span<const double> obs, ActionMode mode,
                            std::mt19937_64* rng) {
  std::vector<double> a = mlp_mean(genome, obs);
  if (mode == ActionMode::kStochastic) {
    if (!genome.arch().actor_critic) {
      throw std::invalid_argument("stochastic actions need an actor-critic genome");
    }
    if (rng == nullptr) throw std::invalid_argument("stochastic actions need an rng");
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto log_std = genome.log_std();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += std::exp(log_std[i]) * normal(*rng);
  }
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  return a;
}

double value(const MlpGenome& genome, std::span<const double> obs) {
  if (!genome.arch().actor_critic) {
    throw std::invalid_argument("value() needs an actor-critic genome");
  }
  thread_local ForwardCache cache;
  dense_forward(genome.critic_params(), genome.arch().critic_sizes(), obs, cache);
  return cache.acts.back()[0];
}

}  // namespace gaitbench
