#pragma once

// Feed-forward controllers m^d_w.
//
// Hidden layers use tanh, the output layer is linear and its result is
// clamped to [-1, 1] before being sent to the hinges. The plain variant is a
// single network; the actor-critic variant adds a state-independent log-std
// vector for the Gaussian policy head and an independent value network with
// the same hidden shape and a scalar output.
//
// Flat parameter layout, per layer: weights (out x in, row-major) then
// biases. Actor layers come first, then the log-std vector, then the critic
// layers.

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gaitbench {

struct MlpArchitecture {
  int depth = 0;
  int width = 0;
  bool actor_critic = false;
  std::size_t inputs = 8;
  std::size_t outputs = 8;

  // Throws std::invalid_argument for unsupported depth or width.
  void validate() const;
  // Neuron counts from input to output, e.g. {8, w, w, 8} for depth 2.
  std::vector<std::size_t> actor_sizes() const;
  std::vector<std::size_t> critic_sizes() const;
  // "m0", "m1_8", "m2_64"
  std::string label() const;

  bool operator==(const MlpArchitecture&) const = default;
};

bool is_supported_width(int width);

std::size_t dense_param_count(std::span<const std::size_t> sizes);
std::size_t param_count(const MlpArchitecture& arch);

// Offsets of the three blocks inside an actor-critic parameter vector.
struct MlpLayout {
  std::size_t actor_offset = 0;
  std::size_t actor_size = 0;
  std::size_t log_std_offset = 0;
  std::size_t critic_offset = 0;
  std::size_t critic_size = 0;
  std::size_t total = 0;
};

MlpLayout mlp_layout(const MlpArchitecture& arch);

class MlpGenome {
 public:
  // Throws std::invalid_argument when the vector length does not match the
  // architecture or a parameter is not finite.
  MlpGenome(MlpArchitecture arch, std::vector<double> params);

  static MlpGenome zeros(const MlpArchitecture& arch);
  // Orthogonal weights scaled by sqrt(2) on hidden layers, 0.01 on the
  // policy output and 1 on the value output; zero biases and log-std.
  static MlpGenome orthogonal_init(const MlpArchitecture& arch,
                                   std::mt19937_64& rng);

  const MlpArchitecture& arch() const { return arch_; }
  const MlpLayout& layout() const { return layout_; }
  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }

  std::span<const double> actor_params() const;
  std::span<const double> log_std() const;
  std::span<const double> critic_params() const;

  nlohmann::json to_json() const;
  static MlpGenome from_json(const nlohmann::json& j);

 private:
  MlpArchitecture arch_;
  MlpLayout layout_;
  std::vector<double> params_;
};

// Activations of every layer of one forward pass. acts[0] is the input,
// acts.back() the linear output.
struct ForwardCache {
  std::vector<std::vector<double>> acts;
};

void dense_forward(std::span<const double> params,
                   std::span<const std::size_t> sizes,
                   std::span<const double> input, ForwardCache& cache);

// Reverse pass through a network evaluated by dense_forward. Adds
// d(loss)/d(params) to grad given d(loss)/d(output).
void dense_backward(std::span<const double> params,
                    std::span<const std::size_t> sizes,
                    const ForwardCache& cache, std::span<const double> d_out,
                    std::span<double> grad);

enum class ActionMode { kDeterministic, kStochastic };

// Policy mean (unclamped linear output of the actor).
std::vector<double> mlp_mean(const MlpGenome& genome,
                             std::span<const double> obs);

// Deterministic mode: clamp(mean). Stochastic mode (actor-critic only):
// clamp(mean + exp(log_std) * eps), eps ~ N(0, I).
std::vector<double> mlp_act(const MlpGenome& genome,
                            std::span<const double> obs, ActionMode mode,
                            std::mt19937_64* rng = nullptr);

// Critic output. Throws std::invalid_argument on a plain genome.
double value(const MlpGenome& genome, std::span<const double> obs);

}  // namespace gaitbench
