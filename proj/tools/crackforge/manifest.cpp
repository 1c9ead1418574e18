#include "manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <vector>

#include "crackforge/volcore/grid.hpp"
#include "crackforge/volcore/io.hpp"

namespace crackforge::cli {

namespace {

struct DigestCtx {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};
  DigestCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw Error("sha256: update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw Error("sha256: final failed");
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(digits[md[i] >> 4]);
      out.push_back(digits[md[i] & 15]);
    }
    return out;
  }
};

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
  DigestCtx d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  DigestCtx d;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

nlohmann::json file_ref(const std::filesystem::path& p) {
  nlohmann::json j{{"path", p.string()}, {"sha256", sha256_file(p)}};
  if (p.extension() == ".raw" && std::filesystem::exists(sidecar_path(p))) {
    j["sidecar_sha256"] = sha256_file(sidecar_path(p));
  }
  return j;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& out) {
  if (std::filesystem::is_directory(out)) return out / "manifest.json";
  return std::filesystem::path(out.string() + ".manifest.json");
}

Manifest::Manifest(std::string command, std::filesystem::path base)
    : command_(std::move(command)),
      base_(base.empty() ? std::filesystem::current_path() : std::filesystem::absolute(base)) {
  j_["tool"] = "crackforge";
  j_["format"] = 1;
  j_["command"] = command_;
  j_["config"] = nlohmann::json::object();
  j_["inputs"] = nlohmann::json::array();
  j_["artifacts"] = nlohmann::json::array();
  j_["results"] = nlohmann::json::object();
}

void Manifest::set_config(nlohmann::json cfg) { j_["config"] = {{command_, std::move(cfg)}}; }

void Manifest::add_input(const std::string& role, const std::filesystem::path& p) {
  auto r = file_ref(std::filesystem::absolute(p).lexically_normal());
  r["role"] = role;
  j_["inputs"].push_back(std::move(r));
}

void Manifest::add_input_ref(const std::string& role, nlohmann::json ref) {
  ref["role"] = role;
  j_["inputs"].push_back(std::move(ref));
}

void Manifest::add_artifact(const std::filesystem::path& p, const nlohmann::json& extra) {
  auto r = file_ref(p);
  r["path"] = std::filesystem::absolute(p).lexically_normal().lexically_relative(base_).string();
  for (const auto& [k, v] : extra.items()) r[k] = v;
  j_["artifacts"].push_back(std::move(r));
}

void Manifest::write(const std::filesystem::path& p) const {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << j_.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_artifact(const std::filesystem::path& manifest, const nlohmann::json& entry,
                                       const char* key) {
  if (!entry.contains(key)) throw ConfigError(manifest.string() + ": artifact without \"" + key + "\"");
  const std::filesystem::path p = entry.at(key).get<std::string>();
  return p.is_absolute() ? p : manifest.parent_path() / p;
}

}  // namespace crackforge::cli
