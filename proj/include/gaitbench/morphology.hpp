#pragma once

// The fixed eight-hinge "spider" body.
//
// Body tree: core -> (hip -> brick -> knee) for each of the four legs. Hinge
// indices are leg-major: 2*leg is the hip, 2*leg+1 is the knee. Leg k points
// at 45 + 90k degrees in the body frame (x forward, y left).

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace gaitbench {

inline constexpr std::size_t kNumLegs = 4;
inline constexpr std::size_t kNumHinges = 8;

enum class HingeRole { kHip, kKnee };

struct Hinge {
  std::size_t leg;
  HingeRole role;
};

struct SpiderModel {
  std::array<Hinge, kNumHinges> hinges;
  // Tree depth of each hinge below the core.
  std::array<int, kNumHinges> depth;
};

const SpiderModel& spider();

inline constexpr std::size_t hip_index(std::size_t leg) { return 2 * leg; }
inline constexpr std::size_t knee_index(std::size_t leg) { return 2 * leg + 1; }

using DistanceMatrix = std::array<std::array<int, kNumHinges>, kNumHinges>;
using HingePair = std::pair<std::size_t, std::size_t>;

// Tree-edge distance between every pair of hinges.
DistanceMatrix hinge_distance(const SpiderModel& model);

// All pairs (i, j), i < j, with 0 < d[i][j] <= range, ordered by (i, j).
// Accepted ranges are 0, 2, 4 and 6; 1 is accepted as well and is
// equivalent to 0 since no two hinges are adjacent.
std::vector<HingePair> neighbourhood_pairs(const DistanceMatrix& dm, int range);

bool is_supported_range(int range);

nlohmann::json morphology_to_json(const SpiderModel& model);

std::string_view role_name(HingeRole role);

}  // namespace gaitbench
