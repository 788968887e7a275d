#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrd/scene/types.hpp"

namespace vrd::data {

inline constexpr int kSchemaVersion = 1;

/// Malformed input; the message carries the file and line.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  /// Drop records that fail validation instead of throwing.
  bool skip_invalid = false;
};

struct LoadResult {
  std::vector<scene::Scenario> scenarios;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const scene::Scenario& s);
/// Parses and validates one record.
scene::Scenario from_json(const nlohmann::json& j);

/// One scenario per line. Blank lines are ignored; an empty file yields no
/// scenarios and a warning.
LoadResult load(const std::filesystem::path& path, const LoadOptions& opt = {});
void save(const std::filesystem::path& path, const std::vector<scene::Scenario>& scenarios);

/// Sliding windows of obs_len + horizon_len steps. Windows where the ego is not
/// valid throughout are dropped; tracks with no valid step in a window are removed.
/// A scenario shorter than one window yields nothing and a warning.
std::vector<scene::Scenario> segment(const scene::Scenario& s, std::size_t obs_len, std::size_t horizon_len,
                                     std::size_t stride, std::vector<std::string>* warnings = nullptr);

}  // namespace vrd::data
