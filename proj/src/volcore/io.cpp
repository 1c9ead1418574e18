#include "crackforge/volcore/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace crackforge {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "raw volume I/O assumes a little-endian host");

std::string to_string(Dtype t) {
  switch (t) {
    case Dtype::f32: return "f32";
    case Dtype::u8: return "u8";
    case Dtype::u16: return "u16";
  }
  return "?";
}

Dtype parse_dtype(const std::string& s) {
  if (s == "f32") return Dtype::f32;
  if (s == "u8") return Dtype::u8;
  if (s == "u16") return Dtype::u16;
  throw Error("unsupported dtype '" + s + "'");
}

std::size_t dtype_size(Dtype t) {
  switch (t) {
    case Dtype::f32: return 4;
    case Dtype::u8: return 1;
    case Dtype::u16: return 2;
  }
  return 0;
}

fs::path sidecar_path(const fs::path& raw) {
  fs::path p = raw;
  p.replace_extension(".json");
  return p;
}

Sidecar read_sidecar(const fs::path& raw) {
  const fs::path side = sidecar_path(raw);
  std::ifstream in(side);
  if (!in) throw Error("missing sidecar " + side.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed sidecar " + side.string() + ": " + e.what());
  }
  Sidecar s;
  try {
    const auto& d = j.at("dims");
    if (!d.is_array() || d.size() != 3) throw Error("sidecar dims must have 3 entries");
    s.dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
    s.dtype = parse_dtype(j.at("dtype").get<std::string>());
    s.spacing_um = j.value("spacing_um", 1.0);
    if (j.contains("order") && j["order"].get<std::string>() != "zyx") {
      throw Error("unsupported voxel order '" + j["order"].get<std::string>() + "'");
    }
  } catch (const json::exception& e) {
    throw Error("malformed sidecar " + side.string() + ": " + e.what());
  }
  if (!s.dims.valid()) throw Error("sidecar dims must be positive");
  if (!(s.spacing_um > 0.0)) throw Error("sidecar spacing_um must be positive");
  return s;
}

namespace {

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const void* data, std::size_t n) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw Error("I/O failure writing " + p.string());
}

void write_sidecar(const fs::path& raw, const Dims& d, Dtype t, double spacing) {
  json j = {{"dims", {d.nx, d.ny, d.nz}},
            {"dtype", to_string(t)},
            {"spacing_um", spacing},
            {"order", "zyx"}};
  const std::string text = j.dump(2) + "\n";
  write_file(sidecar_path(raw), text.data(), text.size());
}

template <typename T>
T saturate(float v) {
  const double lo = 0.0;
  const double hi = static_cast<double>(std::numeric_limits<T>::max());
  return static_cast<T>(std::clamp(std::round(static_cast<double>(v)), lo, hi));
}

}  // namespace

VoxelVolume load_volume(const fs::path& raw) {
  const Sidecar s = read_sidecar(raw);
  const std::vector<char> bytes = read_bytes(raw);
  const std::size_t n = s.dims.voxels();
  if (bytes.size() != n * dtype_size(s.dtype)) {
    throw Error("size mismatch: " + raw.string() + " has " + std::to_string(bytes.size()) +
                " bytes, sidecar implies " + std::to_string(n * dtype_size(s.dtype)));
  }
  std::vector<float> data(n);
  switch (s.dtype) {
    case Dtype::f32:
      std::memcpy(data.data(), bytes.data(), bytes.size());
      break;
    case Dtype::u8:
      for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<std::uint8_t>(bytes[i]);
      break;
    case Dtype::u16:
      for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t v;
        std::memcpy(&v, bytes.data() + 2 * i, 2);
        data[i] = v;
      }
      break;
  }
  VoxelVolume v(s.dims, std::move(data), s.spacing_um);
  ensure_finite(v, "load_volume");
  return v;
}

BinaryMask load_mask(const fs::path& raw) {
  const Sidecar s = read_sidecar(raw);
  if (s.dtype != Dtype::u8) throw Error("mask " + raw.string() + " must have dtype u8");
  std::vector<char> bytes = read_bytes(raw);
  if (bytes.size() != s.dims.voxels()) {
    throw Error("size mismatch: " + raw.string() + " has " + std::to_string(bytes.size()) +
                " bytes, sidecar implies " + std::to_string(s.dims.voxels()));
  }
  std::vector<std::uint8_t> bits(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto b = static_cast<std::uint8_t>(bytes[i]);
    if (b > 1) throw Error("mask " + raw.string() + " contains values other than 0/1");
    bits[i] = b;
  }
  return BinaryMask(s.dims, std::move(bits), s.spacing_um);
}

void save_volume(const VoxelVolume& v, const fs::path& raw, Dtype dtype) {
  const std::size_t n = v.size();
  switch (dtype) {
    case Dtype::f32:
      write_file(raw, v.data().data(), n * sizeof(float));
      break;
    case Dtype::u8: {
      std::vector<std::uint8_t> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = saturate<std::uint8_t>(v[i]);
      write_file(raw, out.data(), n);
      break;
    }
    case Dtype::u16: {
      std::vector<std::uint16_t> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = saturate<std::uint16_t>(v[i]);
      write_file(raw, out.data(), 2 * n);
      break;
    }
  }
  write_sidecar(raw, v.dims(), dtype, v.spacing_um());
}

void save_mask(const BinaryMask& m, const fs::path& raw) {
  std::vector<std::uint8_t> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1 : 0;
  write_file(raw, out.data(), out.size());
  write_sidecar(raw, m.dims(), Dtype::u8, m.spacing_um());
}

}  // namespace crackforge
