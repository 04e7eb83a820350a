#include "gaitbench/controller.hpp"

#include <algorithm>
#include <regex>
#include <stdexcept>

namespace gaitbench {

CpgController::CpgController(const CpgGenome& genome, double dt)
    : system_(build_system(genome, hinge_distance(spider()))),
      state_(CpgState::initial()),
      dt_(dt) {}

void CpgController::reset() { state_ = CpgState::initial(); }

void CpgController::act(std::span<const double> /*obs*/, std::span<double> action) {
  const auto a = cpg_act(state_);
  std::copy(a.begin(), a.end(), action.begin());
  state_ = step(state_, system_, dt_);
}

MlpController::MlpController(MlpGenome genome) : genome_(std::move(genome)) {}

void MlpController::act(std::span<const double> obs, std::span<double> action) {
  const auto a = mlp_act(genome_, obs, ActionMode::kDeterministic);
  if (a.size() != action.size()) {
    throw std::invalid_argument("MLP output size does not match the action size");
  }
  std::copy(a.begin(), a.end(), action.begin());
}

std::unique_ptr<Controller> make_controller(const Genome& genome, double dt) {
  if (const auto* cpg = std::get_if<CpgGenome>(&genome)) {
    return std::make_unique<CpgController>(*cpg, dt);
  }
  return std::make_unique<MlpController>(std::get<MlpGenome>(genome));
}

std::span<const double> genome_params(const Genome& genome) {
  if (const auto* cpg = std::get_if<CpgGenome>(&genome)) return cpg->weights();
  return std::get<MlpGenome>(genome).params();
}

std::size_t genome_size(const Genome& genome) { return genome_params(genome).size(); }

nlohmann::json genome_to_json(const Genome& genome) {
  return std::visit([](const auto& g) { return g.to_json(); }, genome);
}

Genome genome_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "cpg") return CpgGenome::from_json(j);
  if (type == "mlp") return MlpGenome::from_json(j);
  throw std::invalid_argument("unknown genome type '" + type + "'");
}

ControllerSpec ControllerSpec::parse(const std::string& label) {
  static const std::regex cpg_re("c([0-9]+)");
  static const std::regex mlp_re("m([0-9]+)(?:_([0-9]+))?");
  std::smatch m;
  ControllerSpec spec;
  if (std::regex_match(label, m, cpg_re)) {
    spec.family = Family::kCpg;
    spec.range = std::stoi(m[1]);
    CpgGenome::param_count(spec.range);  // validates
    return spec;
  }
  if (std::regex_match(label, m, mlp_re)) {
    spec.family = Family::kMlp;
    spec.depth = std::stoi(m[1]);
    spec.width = m[2].matched ? std::stoi(m[2]) : 0;
    if (spec.depth == 0) {
      if (spec.width != 0) throw std::invalid_argument("m0 takes no width: '" + label + "'");
    } else if (!m[2].matched) {
      throw std::invalid_argument("MLP label '" + label + "' needs a width, e.g. m1_8");
    }
    spec.mlp(false).validate();
    return spec;
  }
  throw std::invalid_argument("unknown controller '" + label +
                              "' (expected c0/c2/c4/c6 or m0, m1_<w>, m2_<w>)");
}

std::string ControllerSpec::label() const {
  if (family == Family::kCpg) return "c" + std::to_string(range);
  return mlp(false).label();
}

MlpArchitecture ControllerSpec::mlp(bool actor_critic) const {
  MlpArchitecture arch;
  arch.depth = depth;
  arch.width = depth == 0 ? 0 : width;
  arch.actor_critic = actor_critic;
  return arch;
}

std::size_t ControllerSpec::param_count(bool actor_critic) const {
  if (family == Family::kCpg) return CpgGenome::param_count(range);
  return gaitbench::param_count(mlp(actor_critic));
}

Genome ControllerSpec::decode(std::span<const double> v, bool actor_critic) const {
  if (family == Family::kCpg) return CpgGenome::from_search_vector(range, v);
  return MlpGenome(mlp(actor_critic), std::vector<double>(v.begin(), v.end()));
}

bool ControllerSpec::excluded_from_cmaes() const {
  if (family != Family::kMlp) return false;
  return (depth == 1 && width == 128) || (depth == 2 && width >= 64);
}

}  // namespace gaitbench
