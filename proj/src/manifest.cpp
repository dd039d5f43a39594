#include "logdrift/manifest.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "logdrift/timeutil.hpp"

namespace logdrift {

std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (!EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr)) {
    throw std::runtime_error("sha256 failed");
  }
  static const char hex[] = "0123456789abcdef";
  std::string out(digest_len * 2, '0');
  for (unsigned int i = 0; i < digest_len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_hex(const std::string& data) {
  return sha256_hex(data.data(), data.size());
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for hashing: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("sha256 context allocation failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    if (!in) break;
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_DigestFinal_ex(ctx, digest, &digest_len);
  EVP_MD_CTX_free(ctx);
  static const char hex[] = "0123456789abcdef";
  std::string out(digest_len * 2, '0');
  for (unsigned int i = 0; i < digest_len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

RunManifest make_manifest(std::string command, std::string config_sha256,
                          std::vector<std::pair<std::string, std::string>> inputs) {
  RunManifest m;
  m.command = std::move(command);
  m.config_sha256 = std::move(config_sha256);
  m.inputs = std::move(inputs);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    m.created_at = format_rfc3339_utc(std::strtoll(epoch, nullptr, 10));
  } else {
    m.created_at = format_rfc3339_utc(static_cast<UnixSeconds>(std::time(nullptr)));
  }
  return m;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json doc;
  doc["tool_version"] = m.tool_version;
  doc["command"] = m.command;
  doc["config_sha256"] = m.config_sha256;
  doc["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : m.inputs) {
    doc["inputs"].push_back({{"path", path}, {"sha256", digest}});
  }
  doc["created_at"] = m.created_at;
  return doc.dump(2) + "\n";
}

void write_manifest_file(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << manifest_to_json(m);
}

}  // namespace logdrift
