#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace riskpipe::manifest {

inline constexpr const char* kToolVersion = "riskpipe 0.1.0";

// Every CLI run records what it read, the parameters it ran with, and a
// digest inventory of what it wrote. Input paths are kept exactly as given
// on the command line so identical invocations produce identical manifests.
struct RunManifest {
  std::string command;
  std::string version = kToolVersion;
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
  std::map<std::string, std::string> parameters;
  std::vector<std::string> notes;
};

// Output directory with atomic file writes (temp file + rename) and a
// running digest inventory.
class OutputDir {
 public:
  explicit OutputDir(std::string dir);

  void write_file(const std::string& name, const std::string& content);
  void write_file(const std::string& name, const std::function<void(std::ostream&)>& fill);

  std::string path_of(const std::string& name) const;
  const std::string& dir() const { return dir_; }
  const std::vector<std::pair<std::string, std::string>>& inventory() const {
    return inventory_;
  }

  // Serializes the manifest plus the output inventory to manifest.json.
  void finalize(const RunManifest& manifest);

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> inventory_;  // (name, digest)
};

std::string digest_of_file(const std::string& path);

}  // namespace riskpipe::manifest
