#include "gcs/snapshot_store.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "gcs/error.hpp"
#include "gcs/ppm.hpp"

namespace gcs {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kPrefix = "snap-";

std::optional<std::uint64_t> index_of(std::string_view id) {
  if (!id.starts_with(kPrefix)) return std::nullopt;
  id.remove_prefix(kPrefix.size());
  std::uint64_t n = 0;
  auto [p, ec] = std::from_chars(id.data(), id.data() + id.size(), n);
  if (ec != std::errc{} || p != id.data() + id.size()) return std::nullopt;
  return n;
}

std::string make_id(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap-%06llu", static_cast<unsigned long long>(index));
  return buf;
}

// id must look like one we issued; keeps lookups inside the directory
bool valid_id(const std::string& id) { return index_of(id).has_value(); }

void write_atomically(const fs::path& path, std::span<const std::uint8_t> bytes) {
  const auto tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoFailure, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoFailure, "rename failed: " + ec.message());
}

}  // namespace

nlohmann::json to_json(const Snapshot& s) {
  nlohmann::json lineage = nlohmann::json::array();
  for (const auto& e : s.lineage) lineage.push_back(to_json(e));
  nlohmann::json j{{"id", s.id},          {"seq", s.seq},        {"timestamp", s.timestamp_ms},
                   {"mission", s.mission}, {"lineage", lineage},  {"width", s.width},
                   {"height", s.height}};
  if (s.source) j["source"] = *s.source;
  return j;
}

Snapshot snapshot_from_json(const nlohmann::json& j, const fs::path& dir) {
  Snapshot s;
  s.id = j.at("id").get<std::string>();
  s.seq = j.at("seq").get<std::uint64_t>();
  s.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  s.mission = j.at("mission").get<std::string>();
  s.width = j.value("width", 0);
  s.height = j.value("height", 0);
  if (j.contains("source")) s.source = j.at("source").get<std::string>();
  for (const auto& e : j.at("lineage")) {
    LineageEntry entry{op_from_json(e), std::nullopt};
    if (e.contains("bins")) entry.bins = Histogram256{e.at("bins").get<std::array<std::uint64_t, 256>>()};
    s.lineage.push_back(std::move(entry));
  }
  s.path = dir / (s.id + ".ppm");
  return s;
}

SnapshotStore::SnapshotStore(fs::path data_dir) : dir_(std::move(data_dir) / "snapshots") {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir_.string() + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    if (auto n = index_of(entry.path().stem().string())) next_index_ = std::max(next_index_, *n + 1);
  }
}

Snapshot SnapshotStore::snap(const FrameBuffer& frames, const std::string& mission) {
  const auto frame = frames.latest();
  if (!frame) throw Error(Errc::NoFrameYet, "no frame received yet");
  return store(*frame, mission);
}

Snapshot SnapshotStore::store(const Frame& frame, const std::string& mission,
                              std::vector<LineageEntry> lineage,
                              std::optional<std::string> source) {
  std::lock_guard lock(mu_);
  Snapshot s;
  s.id = make_id(next_index_++);
  s.seq = frame.seq;
  s.timestamp_ms = frame.timestamp.count();
  s.mission = mission;
  s.lineage = std::move(lineage);
  s.source = std::move(source);
  s.width = frame.image.width();
  s.height = frame.image.height();
  s.path = dir_ / (s.id + ".ppm");

  write_atomically(s.path, encode_ppm(frame.image));
  const auto meta = to_json(s).dump(2);
  write_atomically(dir_ / (s.id + ".json"),
                   std::span(reinterpret_cast<const std::uint8_t*>(meta.data()), meta.size()));
  return s;
}

std::vector<Snapshot> SnapshotStore::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::pair<std::uint64_t, Snapshot>> found;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    const auto idx = index_of(entry.path().stem().string());
    if (!idx) continue;
    std::ifstream in(entry.path());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) continue;
    found.emplace_back(*idx, snapshot_from_json(j, dir_));
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Snapshot> out;
  out.reserve(found.size());
  for (auto& [idx, s] : found) out.push_back(std::move(s));
  return out;
}

Snapshot SnapshotStore::get(const std::string& id) const {
  const auto meta = dir_ / (id + ".json");
  if (!valid_id(id) || !fs::exists(meta)) throw Error(Errc::NotFound, "no snapshot " + id);
  std::ifstream in(meta);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::IoFailure, "corrupt metadata for " + id);
  return snapshot_from_json(j, dir_);
}

RgbImage SnapshotStore::image(const std::string& id) const { return load_image(get(id).path); }

}  // namespace gcs
