#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace crackforge::cli {

/// Lowercase hex SHA-256 of a byte range / of a file's contents.
[[nodiscard]] std::string sha256_hex(std::span<const unsigned char> bytes);
[[nodiscard]] std::string sha256_file(const std::filesystem::path& p);

/// {"path": p, "sha256": ...}; `p` is stored as given. Raw volumes also carry the
/// hash of their sidecar, so dims and dtype are pinned too.
[[nodiscard]] nlohmann::json file_ref(const std::filesystem::path& p);

/// `<file>.manifest.json` for a single output file; `dir/manifest.json` for a
/// directory of outputs.
[[nodiscard]] std::filesystem::path manifest_path_for(const std::filesystem::path& out);

/// Run record: the effective configuration (re-usable as `--config`), the
/// inputs and the produced artifacts, each pinned by content hash. Inputs are
/// recorded by absolute path, artifacts relative to the manifest's directory.
class Manifest {
 public:
  Manifest(std::string command, std::filesystem::path base);

  void set_config(nlohmann::json cfg);
  void add_input(const std::string& role, const std::filesystem::path& p);
  void add_input_ref(const std::string& role, nlohmann::json ref);
  /// Artifact entry: file_ref(p) merged with `extra`.
  void add_artifact(const std::filesystem::path& p, const nlohmann::json& extra = nlohmann::json::object());
  nlohmann::json& extra() { return j_["results"]; }

  [[nodiscard]] const nlohmann::json& json() const { return j_; }
  void write(const std::filesystem::path& p) const;

 private:
  std::string command_;
  std::filesystem::path base_;
  nlohmann::json j_;
};

[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& p);

/// Artifact path of a manifest entry, resolved against the manifest's directory.
[[nodiscard]] std::filesystem::path resolve_artifact(const std::filesystem::path& manifest,
                                                     const nlohmann::json& entry,
                                                     const char* key = "path");

}  // namespace crackforge::cli
