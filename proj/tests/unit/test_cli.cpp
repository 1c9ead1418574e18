#include <gtest/gtest.h>

#include <fstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "crackforge/riesz/train.hpp"
#include "crackforge/volcore/io.hpp"
#include "manifest.hpp"
#include "png.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

namespace crackforge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "crackforge");
  args.push_back("-q");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

constexpr const char* kSpec =
    R"({"model":"fbm","dims":[32,32,32],"hurst":0.8,"amplitude":3,"dilation":{"fixed_width":[1,3,5]},"count":2,"seed":5})";

TEST(Sha256, KnownVectors) {
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex({reinterpret_cast<const unsigned char*>(abc.data()), abc.size()}),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto dir = testing::temp_dir("sha");
  write_text(dir / "f.txt", "abc");
  EXPECT_EQ(sha256_file(dir / "f.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_args({"--help"}), kExitOk);
  EXPECT_EQ(run_args({}), kExitConfig);
  EXPECT_EQ(run_args({"bogus"}), kExitConfig);
  EXPECT_EQ(run_args({"eval", "--pred", "missing.raw"}), kExitConfig);
  const auto dir = testing::temp_dir("codes");
  write_text(dir / "bad.rnet", "not a model");
  save_volume(VoxelVolume({8, 8, 8}), dir / "v.raw");
  EXPECT_EQ(run_args({"segment", "--model", (dir / "bad.rnet").string(), "--input", (dir / "v.raw").string(),
                      "--out", (dir / "m.raw").string()}),
            kExitRuntime);
  EXPECT_EQ(run_args({"segment", "--input", (dir / "v.raw").string(), "--out", (dir / "m.raw").string()}),
            kExitConfig);
}

TEST(Cli, GenerateWritesManifestAndIsReproducible) {
  const auto dir = testing::temp_dir("gen");
  write_text(dir / "spec.json", kSpec);
  ASSERT_EQ(run_args({"generate", "--spec", (dir / "spec.json").string(), "--out", (dir / "a").string()}), kExitOk);
  ASSERT_EQ(run_args({"generate", "--spec", (dir / "spec.json").string(), "--out", (dir / "b").string()}), kExitOk);
  const json man = read_json(dir / "a" / "manifest.json");
  ASSERT_EQ(man.at("artifacts").size(), 6u);
  std::vector<int> widths;
  for (const auto& e : man.at("artifacts")) {
    widths.push_back(e.at("width"));
    EXPECT_TRUE(e.contains("seed"));
    const fs::path p = resolve_artifact(dir / "a" / "manifest.json", e);
    EXPECT_EQ(sha256_file(p), e.at("sha256"));
    EXPECT_EQ(read_bytes(p), read_bytes(dir / "b" / p.filename()));
  }
  EXPECT_EQ(widths, (std::vector<int>{1, 1, 3, 3, 5, 5}));
  // The manifest is itself a valid config that reproduces the run.
  ASSERT_EQ(run_args({"--config", (dir / "a" / "manifest.json").string(), "generate", "--out", (dir / "c").string()}),
            kExitOk);
  for (const auto& e : man.at("artifacts")) {
    const std::string f = e.at("path");
    EXPECT_EQ(read_bytes(dir / "a" / f), read_bytes(dir / "c" / f));
  }
  EXPECT_EQ(run_args({"generate", "--spec", (dir / "spec.json").string(), "--out", (dir / "d").string(),
                      "--widths", "0"}),
            kExitConfig);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = testing::temp_dir("cfg");
  write_text(dir / "spec.json", kSpec);
  write_text(dir / "run.json", R"({"generate":{"spec":")" + (dir / "spec.json").string() +
                                   R"(","out":")" + (dir / "cfgout").string() + R"(","count":1,"widths":[3]}})");
  ASSERT_EQ(run_args({"--config", (dir / "run.json").string(), "generate", "--widths", "1,5"}), kExitOk);
  const json man = read_json(dir / "cfgout" / "manifest.json");
  ASSERT_EQ(man.at("artifacts").size(), 2u);
  EXPECT_EQ(man["artifacts"][0]["width"], 1);
  EXPECT_EQ(man["artifacts"][1]["width"], 5);
  write_text(dir / "broken.json", "{ not json");
  EXPECT_EQ(run_args({"--config", (dir / "broken.json").string(), "generate"}), kExitConfig);
}

TEST(Cli, EvalIdenticalMasksScoresOne) {
  const auto dir = testing::temp_dir("eval");
  const BinaryMask m = testing::random_mask({16, 16, 8}, 3, 0.05);
  save_mask(m, dir / "m.raw");
  ASSERT_EQ(run_args({"eval", "--pred", (dir / "m.raw").string(), "--gt", (dir / "m.raw").string(), "--json",
                      (dir / "r.json").string()}),
            kExitOk);
  const json r = read_json(dir / "r.json");
  for (const auto& t : r["reports"][0]["tolerances"]) {
    EXPECT_EQ(t["precision"], 1.0);
    EXPECT_EQ(t["recall"], 1.0);
    EXPECT_EQ(t["f1"], 1.0);
  }
  EXPECT_EQ(r["reports"][0]["pred"]["sha256"], sha256_file(dir / "m.raw"));
  EXPECT_EQ(run_args({"eval", "--pred", (dir / "m.raw").string(), "--gt", (dir / "m.raw").string(), "--tol", "-1"}),
            kExitConfig);
}

TEST(Cli, ExportSlices) {
  const auto dir = testing::temp_dir("png");
  save_volume(VoxelVolume({12, 10, 6}, 0.5f), dir / "c.raw");
  ASSERT_EQ(run_args({"export-slices", "--volume", (dir / "c.raw").string(), "--axis", "z", "--index", "2",
                      "--out", (dir / "c").string()}),
            kExitOk);
  const Image8 c = read_png(dir / "c" / "slice_z0002.png");
  EXPECT_EQ(c.width, 12);
  EXPECT_EQ(c.height, 10);
  for (auto px : c.pixels) EXPECT_EQ(px, 128);

  const VoxelVolume v = testing::random_volume({12, 10, 6}, 4);
  save_volume(v, dir / "v.raw");
  save_mask(BinaryMask(v.dims(), 0), dir / "empty.raw");
  ASSERT_EQ(run_args({"export-slices", "--volume", (dir / "v.raw").string(), "--axis", "z", "--index", "3,5",
                      "--out", (dir / "plain").string()}),
            kExitOk);
  ASSERT_EQ(run_args({"export-slices", "--volume", (dir / "v.raw").string(), "--mask", (dir / "empty.raw").string(),
                      "--axis", "z", "--index", "3", "--out", (dir / "ov").string()}),
            kExitOk);
  const Image8 plain = read_png(dir / "plain" / "slice_z0003.png");
  const Image8 ov = read_png(dir / "ov" / "slice_z0003.png");
  ASSERT_EQ(ov.channels, 3);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 12; ++x) {
      const std::size_t i = static_cast<std::size_t>(y * 12 + x);
      ASSERT_EQ(plain.pixels[i], quantize(v(x, y, 3), 0.0, 1.0));
      for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(ov.pixels[3 * i + static_cast<std::size_t>(ch)], plain.pixels[i]);
    }
  }
  EXPECT_EQ(run_args({"export-slices", "--volume", (dir / "v.raw").string(), "--axis", "z", "--index", "6",
                      "--out", (dir / "x").string()}),
            kExitConfig);
}

// generate -> embed -> train -> segment -> eval at 64^3, with the manifest chain
// checked link by link.
TEST(Cli, PipelineSmokeRun) {
  const auto dir = testing::temp_dir("pipe");
  write_text(dir / "spec.json",
             R"({"model":"fbm","dims":[64,64,64],"hurst":0.8,"amplitude":4,"dilation":{"fixed_width":[3]},"count":2,"seed":9})");
  const auto p = [&](const char* f) { return (dir / f).string(); };
  ASSERT_EQ(run_args({"generate", "--spec", p("spec.json"), "--out", p("gen")}), kExitOk);
  ASSERT_EQ(run_args({"embed", "--masks", p("gen/manifest.json"), "--out", p("emb"), "--seed", "2"}), kExitOk);
  ASSERT_EQ(run_args({"train", "--data", p("emb/manifest.json"), "--d", "2", "--channels", "1,4,1", "--epochs", "2",
                      "--slice-step", "4", "--out", p("model.rnet")}),
            kExitOk);
  ASSERT_EQ(run_args({"segment", "--model", p("model.rnet"), "--input", p("emb/image_000.raw"), "--levels", "3",
                      "--out", p("seg.raw"), "--prob", p("prob.raw")}),
            kExitOk);
  ASSERT_EQ(run_args({"eval", "--pred", p("seg.raw"), "--gt", p("emb/mask_000.raw"), "--json", p("report.json")}),
            kExitOk);

  const json gen = read_json(dir / "gen" / "manifest.json");
  const json emb = read_json(dir / "emb" / "manifest.json");
  const json trn = read_json(dir / "model.rnet.manifest.json");
  const json seg = read_json(dir / "seg.raw.manifest.json");
  const json rep = read_json(dir / "report.json");
  // embed consumed the generated masks
  std::vector<std::string> gen_hashes, emb_mask_inputs;
  for (const auto& e : gen["artifacts"]) gen_hashes.push_back(e["sha256"]);
  for (const auto& e : emb["inputs"]) {
    if (e["role"] == "mask") emb_mask_inputs.push_back(e["sha256"]);
  }
  EXPECT_EQ(gen_hashes, emb_mask_inputs);
  // train consumed the embedded images
  std::vector<std::string> emb_images, trn_images;
  for (const auto& e : emb["artifacts"]) emb_images.push_back(e["sha256"]);
  for (const auto& e : trn["inputs"]) {
    if (e["role"] == "image") trn_images.push_back(e["sha256"]);
  }
  EXPECT_EQ(emb_images, trn_images);
  // segment used the trained model; eval points at both by hash
  const std::string model_hash = sha256_file(dir / "model.rnet");
  EXPECT_EQ(trn["artifacts"][0]["sha256"], model_hash);
  EXPECT_EQ(seg["inputs"][0]["sha256"], model_hash);
  EXPECT_EQ(rep["reports"][0]["model"]["sha256"], model_hash);
  EXPECT_EQ(rep["reports"][0]["pred"]["sha256"], seg["artifacts"][0]["sha256"]);
  EXPECT_EQ(rep["reports"][0]["gt"]["sha256"], emb["artifacts"][0]["mask"]["sha256"]);

  // Single-level segmentation equals plain prediction + threshold, slice by slice.
  ASSERT_EQ(run_args({"segment", "--model", p("model.rnet"), "--input", p("emb/image_001.raw"), "--levels", "1",
                      "--slice-axis", "y", "--out", p("one.raw")}),
            kExitOk);
  const auto model = riesz::load_model(dir / "model.rnet");
  const VoxelVolume img = load_volume(dir / "emb" / "image_001.raw");
  const BinaryMask one = load_mask(dir / "one.raw");
  for (std::int64_t y = 0; y < 64; y += 9) {
    const auto pr = riesz::predict(model.net, extract_slice(img, 1, y), 0.5);
    const BinaryMask got = extract_slice(one, 1, y);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i], pr.mask[i]) << "slice " << y;
  }

  // Re-running the training manifest reproduces the model bit for bit.
  ASSERT_EQ(run_args({"--config", p("model.rnet.manifest.json"), "train", "--out", p("again.rnet")}), kExitOk);
  EXPECT_EQ(read_bytes(dir / "model.rnet"), read_bytes(dir / "again.rnet"));
  // Warm start continues from the saved model.
  ASSERT_EQ(run_args({"train", "--data", p("emb/manifest.json"), "--warm-start", p("model.rnet"), "--epochs", "1",
                      "--slice-step", "8", "--out", p("tuned.rnet")}),
            kExitOk);
  EXPECT_EQ(riesz::load_model(dir / "tuned.rnet").net.config().channels, (std::vector<int>{1, 4, 1}));
  EXPECT_EQ(run_args({"train", "--data", p("emb/manifest.json"), "--warm-start", p("model.rnet"), "--channels",
                      "1,8,1", "--out", p("bad.rnet")}),
            kExitConfig);
}

}  // namespace
}  // namespace crackforge::cli
