#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "vrd/scene/types.hpp"
#include "vrd/training/dream.hpp"

namespace vrd::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 bad flags.
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// One per run, written to <out>/manifest.json. Timestamps are the only
/// fields that differ between reruns of the same command.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string git_describe;
  std::filesystem::path out_dir;
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const;
};

std::string git_describe();
std::string utc_now();

/// Dreamed and ground-truth positions in the t0 ego frame over the scene's polylines.
std::string render_svg(const training::DreamRollout& r, const training::Sample& s, const scene::Scenario& scenario);
nlohmann::json rollout_json(const training::DreamRollout& r, const training::Sample& s);

/// Parses argv and runs one subcommand. Errors go to `err` as a single line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vrd::cli
