#include "gaitbench/morphology.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gaitbench {

const SpiderModel& spider() {
  static const SpiderModel model = [] {
    SpiderModel m{};
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
      m.hinges[hip_index(leg)] = {leg, HingeRole::kHip};
      m.hinges[knee_index(leg)] = {leg, HingeRole::kKnee};
      m.depth[hip_index(leg)] = 1;
      // knee hangs off the brick attached to the hip
      m.depth[knee_index(leg)] = 3;
    }
    return m;
  }();
  return model;
}

DistanceMatrix hinge_distance(const SpiderModel& model) {
  DistanceMatrix d{};
  for (std::size_t i = 0; i < kNumHinges; ++i) {
    for (std::size_t j = 0; j < kNumHinges; ++j) {
      if (i == j) {
        d[i][j] = 0;
      } else if (model.hinges[i].leg == model.hinges[j].leg) {
        // same branch: the path stays below the hip
        d[i][j] = std::abs(model.depth[i] - model.depth[j]);
      } else {
        d[i][j] = model.depth[i] + model.depth[j];
      }
    }
  }
  return d;
}

bool is_supported_range(int range) {
  return range == 0 || range == 1 || range == 2 || range == 4 || range == 6;
}

std::vector<HingePair> neighbourhood_pairs(const DistanceMatrix& dm,
                                           int range) {
  if (!is_supported_range(range)) {
    throw std::invalid_argument("unsupported neighbourhood range " +
                                std::to_string(range) +
                                " (expected 0, 2, 4 or 6)");
  }
  std::vector<HingePair> pairs;
  for (std::size_t i = 0; i < kNumHinges; ++i) {
    for (std::size_t j = i + 1; j < kNumHinges; ++j) {
      if (dm[i][j] > 0 && dm[i][j] <= range) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

std::string_view role_name(HingeRole role) {
  return role == HingeRole::kHip ? "hip" : "knee";
}

nlohmann::json morphology_to_json(const SpiderModel& model) {
  nlohmann::json hinges = nlohmann::json::array();
  for (std::size_t i = 0; i < kNumHinges; ++i) {
    hinges.push_back({{"index", i},
                      {"leg", model.hinges[i].leg},
                      {"role", role_name(model.hinges[i].role)},
                      {"depth", model.depth[i]}});
  }
  const DistanceMatrix d = hinge_distance(model);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : d) rows.push_back(row);
  return {{"hinges", hinges}, {"distance", rows}};
}

}  // namespace gaitbench
