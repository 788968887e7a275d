#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vrd/scene/types.hpp"

namespace vrd::data {

enum class Archetype { Straight, ProtectedLeft, UnprotectedLeft, PedestrianYield };
inline constexpr std::size_t kArchetypeCount = 4;

std::string_view to_string(Archetype a);
Archetype parse_archetype(std::string_view s);

/// Relative weights per archetype, in enum order.
struct ArchetypeMix {
  std::array<double, kArchetypeCount> weights{1.0, 1.0, 1.0, 1.0};

  /// "straight:2,yield:1" style; unnamed archetypes get weight 0.
  static ArchetypeMix parse(std::string_view spec);
  std::string to_string() const;
};

struct SyntheticOptions {
  std::size_t observation_len = 40;
  std::size_t horizon_len = 60;
  /// Amplitude multiplier for the smooth command perturbations of non-ego agents.
  double noise = 1.0;
  /// Place each scene at a random global pose.
  bool random_pose = true;
};

/// Deterministic in (seed, count, mix, options). Archetypes are assigned in
/// contiguous blocks proportional to the weights; scenario ids embed the seed.
std::vector<scene::Scenario> generate_synthetic(std::uint64_t seed, std::size_t count, const ArchetypeMix& mix = {},
                                                const SyntheticOptions& opt = {});

scene::Scenario generate_scenario(std::uint64_t seed, std::size_t index, Archetype a, const SyntheticOptions& opt = {});

/// Archetype recorded in a synthetic scenario id, if any.
bool archetype_of(const scene::Scenario& s, Archetype& out);

}  // namespace vrd::data
