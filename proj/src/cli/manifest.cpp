#include "pcm/cli/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include "json.hpp"

#include "pcm/cli/checksum.hpp"
#include "pcm/error.hpp"

namespace pcm::cli {
namespace {

using Json = nlohmann::ordered_json;

Json stage_json(const StageRecord& s) {
  Json j;
  j["name"] = s.name;
  j["status"] = to_string(s.status);
  j["started_at"] = s.started_at;
  j["finished_at"] = s.finished_at;
  if (s.message) j["message"] = *s.message;
  j["artifacts"] = s.artifacts;
  return j;
}

}  // namespace

std::string to_string(StageStatus status) {
  switch (status) {
    case StageStatus::kPending: return "pending";
    case StageStatus::kRunning: return "running";
    case StageStatus::kCompleted: return "completed";
    case StageStatus::kFailed: return "failed";
    case StageStatus::kSkipped: return "skipped";
  }
  return "pending";
}

StageStatus parse_stage_status(const std::string& text) {
  for (auto s : {StageStatus::kPending, StageStatus::kRunning, StageStatus::kCompleted,
                 StageStatus::kFailed, StageStatus::kSkipped}) {
    if (to_string(s) == text) return s;
  }
  throw ParseError("unknown stage status '" + text + "'");
}

StageRecord& RunManifest::stage(const std::string& name) {
  for (auto& s : stages) {
    if (s.name == name) return s;
  }
  stages.push_back(StageRecord{name});
  return stages.back();
}

const StageRecord* RunManifest::find_stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Artifact* RunManifest::find_artifact(const std::string& name) const {
  for (const auto& a : artifacts) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void RunManifest::add_artifact(const std::filesystem::path& root, const std::string& stage_name,
                               const std::string& name, const std::filesystem::path& file) {
  Artifact art;
  art.name = name;
  art.path = std::filesystem::relative(file, root).generic_string();
  art.sha256 = sha256_file(file);
  art.bytes = std::filesystem::file_size(file);
  bool replaced = false;
  for (auto& a : artifacts) {
    if (a.name == name) {
      a = art;
      replaced = true;
    }
  }
  if (!replaced) artifacts.push_back(art);
  auto& names = stage(stage_name).artifacts;
  if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
}

bool RunManifest::stage_intact(const std::filesystem::path& root, const std::string& name) const {
  const auto* s = find_stage(name);
  if (s == nullptr || s->status != StageStatus::kCompleted) return false;
  for (const auto& n : s->artifacts) {
    const auto* a = find_artifact(n);
    if (a == nullptr) return false;
    const auto file = root / a->path;
    if (!std::filesystem::exists(file) || sha256_file(file) != a->sha256) return false;
  }
  return true;
}

std::string utc_timestamp() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
  Json j;
  j["tool"] = m.tool;
  j["version"] = m.version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["config"] = m.config;
  j["stages"] = Json::array();
  for (const auto& s : m.stages) j["stages"].push_back(stage_json(s));
  j["artifacts"] = Json::array();
  for (const auto& a : m.artifacts) {
    j["artifacts"].push_back(
        {{"name", a.name}, {"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  // Written beside the target then renamed, so an interrupted run never
  // leaves a truncated manifest behind.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Json j;
  try {
    j = Json::parse(in);
    RunManifest m;
    m.tool = j.at("tool").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.config = j.at("config").get<std::string>();
    for (const auto& s : j.at("stages")) {
      StageRecord rec;
      rec.name = s.at("name").get<std::string>();
      rec.status = parse_stage_status(s.at("status").get<std::string>());
      rec.started_at = s.at("started_at").get<std::string>();
      rec.finished_at = s.at("finished_at").get<std::string>();
      if (s.contains("message")) rec.message = s.at("message").get<std::string>();
      rec.artifacts = s.at("artifacts").get<std::vector<std::string>>();
      m.stages.push_back(rec);
    }
    for (const auto& a : j.at("artifacts")) {
      m.artifacts.push_back(Artifact{a.at("name").get<std::string>(), a.at("path").get<std::string>(),
                                     a.at("sha256").get<std::string>(),
                                     a.at("bytes").get<std::uint64_t>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace pcm::cli
