#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gcs/capture.hpp"
#include "gcs/pipeline.hpp"

namespace gcs {

struct Snapshot {
  std::string id;
  std::uint64_t seq = 0;
  std::int64_t timestamp_ms = 0;
  std::string mission = "manual";
  std::vector<LineageEntry> lineage;  // empty for raw captures
  std::optional<std::string> source;  // id this was processed from
  int width = 0;
  int height = 0;
  std::filesystem::path path;
};

nlohmann::json to_json(const Snapshot& s);
Snapshot snapshot_from_json(const nlohmann::json& j, const std::filesystem::path& dir);

/// Snapshots on disk: <data-dir>/snapshots/<id>.ppm plus <id>.json metadata.
/// Ids continue from what is already in the directory, so a restarted store
/// lists and extends the same snapshots.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::filesystem::path data_dir);

  /// Persists the latest frame. Throws Error(NoFrameYet) if none.
  Snapshot snap(const FrameBuffer& frames, const std::string& mission = "manual");

  Snapshot store(const Frame& frame, const std::string& mission,
                 std::vector<LineageEntry> lineage = {},
                 std::optional<std::string> source = std::nullopt);

  /// All snapshots in the order they were taken.
  std::vector<Snapshot> list() const;

  /// Throws Error(NotFound).
  Snapshot get(const std::string& id) const;
  RgbImage image(const std::string& id) const;

  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::uint64_t next_index_ = 1;
};

}  // namespace gcs
