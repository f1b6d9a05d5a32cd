#ifndef PCM_CLI_MANIFEST_HPP_
#define PCM_CLI_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pcm::cli {

inline constexpr const char* kManifestName = "manifest.json";

enum class StageStatus { kPending, kRunning, kCompleted, kFailed, kSkipped };

std::string to_string(StageStatus status);
StageStatus parse_stage_status(const std::string& text);

struct Artifact {
  std::string name;
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct StageRecord {
  std::string name;
  StageStatus status = StageStatus::kPending;
  std::string started_at;
  std::string finished_at;
  std::optional<std::string> message;
  std::vector<std::string> artifacts;  // artifact names
};

struct RunManifest {
  std::string tool = "pcmask";
  std::string version;
  std::string command;
  std::string config;  // effective configuration text
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<StageRecord> stages;
  std::vector<Artifact> artifacts;

  StageRecord& stage(const std::string& name);  // created pending if absent
  const StageRecord* find_stage(const std::string& name) const;
  const Artifact* find_artifact(const std::string& name) const;

  // Hashes `file` (inside `root`) and records it, replacing any previous
  // entry of the same name, and lists it under `stage_name`.
  void add_artifact(const std::filesystem::path& root, const std::string& stage_name,
                    const std::string& name, const std::filesystem::path& file);

  // True when every artifact of the stage exists with the recorded checksum.
  bool stage_intact(const std::filesystem::path& root, const std::string& name) const;
};

std::string utc_timestamp();

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& path);

}  // namespace pcm::cli

#endif  // PCM_CLI_MANIFEST_HPP_
