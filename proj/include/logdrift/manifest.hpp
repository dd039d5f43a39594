#pragma once

#include <string>
#include <utility>
#include <vector>

namespace logdrift {

constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

// Reproducibility record written next to every output: what produced it,
// from which inputs. created_at honors SOURCE_DATE_EPOCH so byte-identical
// reruns are possible.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  std::string config_sha256;
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, sha256)
  std::string created_at;
};

RunManifest make_manifest(std::string command, std::string config_sha256,
                          std::vector<std::pair<std::string, std::string>> inputs);

std::string manifest_to_json(const RunManifest& m);
void write_manifest_file(const std::string& path, const RunManifest& m);

}  // namespace logdrift
