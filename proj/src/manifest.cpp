#include "riskpipe/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "riskpipe/common.hpp"

namespace riskpipe::manifest {

namespace fs = std::filesystem;

OutputDir::OutputDir(std::string dir) : dir_(std::move(dir)) {
  if (dir_.empty()) throw DataError("output directory not set");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw DataError("cannot create output directory '" + dir_ + "': " + ec.message());
}

std::string OutputDir::path_of(const std::string& name) const {
  return (fs::path(dir_) / name).string();
}

void OutputDir::write_file(const std::string& name, const std::string& content) {
  fs::path final_path = fs::path(dir_) / name;
  fs::path tmp_path = final_path;
  tmp_path += ".tmp";
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp_path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write to " + tmp_path.string());
  }
  std::error_code ec;
  fs::rename(tmp_path, final_path, ec);
  if (ec) throw DataError("cannot move " + tmp_path.string() + " into place: " + ec.message());
  inventory_.emplace_back(name, to_hex(fnv1a64(content.data(), content.size())));
}

void OutputDir::write_file(const std::string& name,
                           const std::function<void(std::ostream&)>& fill) {
  std::ostringstream buffer;
  fill(buffer);
  write_file(name, buffer.str());
}

void OutputDir::finalize(const RunManifest& manifest) {
  nlohmann::json doc;
  doc["command"] = manifest.command;
  doc["version"] = manifest.version;
  auto inputs = nlohmann::json::array();
  for (const auto& [path, digest] : manifest.inputs)
    inputs.push_back({{"path", path}, {"digest", digest}});
  doc["inputs"] = inputs;
  doc["parameters"] = manifest.parameters;
  doc["notes"] = manifest.notes;

  auto sorted = inventory_;
  std::sort(sorted.begin(), sorted.end());
  auto outputs = nlohmann::json::array();
  for (const auto& [name, digest] : sorted)
    outputs.push_back({{"file", name}, {"digest", digest}});
  doc["outputs"] = outputs;

  write_file("manifest.json", doc.dump(2) + "\n");
}

std::string digest_of_file(const std::string& path) { return to_hex(fnv1a64_file(path)); }

}  // namespace riskpipe::manifest
