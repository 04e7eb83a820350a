#pragma once

// Controllers as seen by the environment, and the genome sum type shared by
// trainers, run records and analysis.

#include <array>
#include <memory>
#include <span>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "gaitbench/cpg.hpp"
#include "gaitbench/mlp.hpp"

namespace gaitbench {

class Controller {
 public:
  virtual ~Controller() = default;
  // Called at the start of every episode.
  virtual void reset() = 0;
  // Writes one action per hinge, in [-1, 1].
  virtual void act(std::span<const double> obs, std::span<double> action) = 0;
};

// Open loop; observations are ignored.
class CpgController final : public Controller {
 public:
  explicit CpgController(const CpgGenome& genome, double dt);
  void reset() override;
  void act(std::span<const double> obs, std::span<double> action) override;

 private:
  CpgSystem system_;
  CpgState state_;
  double dt_;
};

class MlpController final : public Controller {
 public:
  explicit MlpController(MlpGenome genome);
  void reset() override {}
  void act(std::span<const double> obs, std::span<double> action) override;

 private:
  MlpGenome genome_;
};

using Genome = std::variant<CpgGenome, MlpGenome>;

std::unique_ptr<Controller> make_controller(const Genome& genome, double dt);
std::size_t genome_size(const Genome& genome);
std::span<const double> genome_params(const Genome& genome);

nlohmann::json genome_to_json(const Genome& genome);
// Dispatches on the "type" field.
Genome genome_from_json(const nlohmann::json& j);

// Architecture descriptor parsed from labels such as "c6", "m0", "m2_8".
struct ControllerSpec {
  enum class Family { kCpg, kMlp };
  Family family = Family::kCpg;
  int range = 0;    // CPG only
  int depth = 0;    // MLP only
  int width = 0;    // MLP only, 0 for depth 0

  static ControllerSpec parse(const std::string& label);
  std::string label() const;
  MlpArchitecture mlp(bool actor_critic) const;
  std::size_t param_count(bool actor_critic) const;
  // Builds a genome from an optimizer search vector.
  Genome decode(std::span<const double> v, bool actor_critic) const;
  // Large plain MLPs left out of the CMA-ES campaign for memory reasons.
  bool excluded_from_cmaes() const;
};

}  // namespace gaitbench
