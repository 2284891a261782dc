#include <gtest/gtest.h>

#include <functional>
#include <string>
#include <vector>

#include "ebe/manifest.hpp"
#include "ebe/synthetic.hpp"
#include "test_util.hpp"

namespace {

using json = nlohmann::json;
using testutil::TempDir;

std::filesystem::path make_dataset(const TempDir& dir, std::size_t layers = 3) {
  std::vector<ebe::SyntheticLayer> specs;
  for (std::size_t i = 1; i <= layers; ++i) {
    specs.push_back({static_cast<ebe::LayerId>(i), 4 + i, 0.1, 100 + i});
  }
  return ebe::write_synthetic_dataset(dir.path(), "toy", 3, 4, specs, 0.9);
}

json read_json(const std::filesystem::path& p) { return json::parse(testutil::read_file(p)); }

void write_json(const std::filesystem::path& p, const json& j) { testutil::write_file(p, j.dump()); }

TEST(Manifest, LoadsValidManifest) {
  TempDir dir;
  const auto m = ebe::load_manifest(make_dataset(dir));
  EXPECT_EQ(m.dataset_name, "toy");
  EXPECT_EQ(m.num_classes, 3);
  ASSERT_TRUE(m.baseline_accuracy);
  EXPECT_DOUBLE_EQ(*m.baseline_accuracy, 0.9);
  ASSERT_EQ(m.layers.size(), 3u);
  EXPECT_EQ(m.layers[2].dims, 7u);
  EXPECT_EQ(m.train_rows, 12u);
  EXPECT_EQ(m.test_rows, 12u);
  EXPECT_EQ(m.max_layer(), 3);
}

TEST(Manifest, TwentyLayers) {
  TempDir dir;
  const auto m = ebe::load_manifest(make_dataset(dir, 20));
  ASSERT_EQ(m.layers.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(m.layers[i].layer_id, static_cast<ebe::LayerId>(i + 1));
}

TEST(Manifest, DimsMismatchNamesLayer) {
  TempDir dir;
  const auto path = make_dataset(dir);
  auto j = read_json(path);
  j["layers"][1]["dims"] = 128;
  write_json(path, j);
  try {
    ebe::load_manifest(path);
    FAIL() << "expected ManifestError";
  } catch (const ebe::ManifestError& e) {
    ASSERT_TRUE(e.layer_id());
    EXPECT_EQ(*e.layer_id(), 2);
    EXPECT_NE(std::string(e.what()).find("128"), std::string::npos);
  }
}

TEST(Manifest, MissingFileNamesPath) {
  TempDir dir;
  const auto path = make_dataset(dir);
  std::filesystem::remove(dir / "layer3_test.npy");
  try {
    ebe::load_manifest(path);
    FAIL() << "expected ManifestError";
  } catch (const ebe::ManifestError& e) {
    EXPECT_NE(e.path().find("layer3_test.npy"), std::string::npos);
  }
}

TEST(Manifest, UnknownKeysRejectedUnlessLax) {
  TempDir dir;
  const auto path = make_dataset(dir);
  auto j = read_json(path);
  j["layer_catalog"] = "conv1";
  j["layers"][0]["module"] = "layer1.0.conv1";
  write_json(path, j);
  EXPECT_THROW(ebe::load_manifest(path), ebe::ManifestError);
  EXPECT_NO_THROW(ebe::load_manifest(path, /*lax=*/true));
}

TEST(Manifest, MissingManifestFile) {
  EXPECT_THROW(ebe::load_manifest("/nonexistent/manifest.json"), ebe::ManifestError);
}

TEST(Manifest, RoundTripsThroughJson) {
  TempDir dir;
  const auto m = ebe::load_manifest(make_dataset(dir));
  write_json(dir / "copy.json", ebe::to_json(m));
  const auto again = ebe::load_manifest(dir / "copy.json");
  EXPECT_EQ(ebe::to_json(again), ebe::to_json(m));
}

// Every mutation breaks one invariant; validation must reject each of them.
TEST(Manifest, RejectsEveryInvariantViolation) {
  using Mutation = std::function<void(json&, const TempDir&)>;
  const std::vector<std::pair<std::string, Mutation>> mutations = {
      {"empty layers", [](json& j, const TempDir&) { j["layers"] = json::array(); }},
      {"duplicate layer id", [](json& j, const TempDir&) { j["layers"][1]["layer_id"] = 1; }},
      {"decreasing layer ids",
       [](json& j, const TempDir&) {
         std::swap(j["layers"][0], j["layers"][2]);
       }},
      {"layer id zero", [](json& j, const TempDir&) { j["layers"][0]["layer_id"] = 0; }},
      {"dims zero", [](json& j, const TempDir&) { j["layers"][0]["dims"] = 0; }},
      {"wrong dims", [](json& j, const TempDir&) { j["layers"][2]["dims"] = 6; }},
      {"num_classes zero", [](json& j, const TempDir&) { j["num_classes"] = 0; }},
      {"labels exceed num_classes", [](json& j, const TempDir&) { j["num_classes"] = 2; }},
      {"baseline above one", [](json& j, const TempDir&) { j["baseline_accuracy"] = 1.5; }},
      {"baseline negative", [](json& j, const TempDir&) { j["baseline_accuracy"] = -0.1; }},
      {"missing dataset_name", [](json& j, const TempDir&) { j.erase("dataset_name"); }},
      {"wrong type", [](json& j, const TempDir&) { j["num_classes"] = "three"; }},
      {"unknown key", [](json& j, const TempDir&) { j["extra"] = 1; }},
      {"missing train file",
       [](json& j, const TempDir&) { j["layers"][0]["train_path"] = "nope.npy"; }},
      {"missing labels", [](json& j, const TempDir&) { j["test_labels_path"] = "nope.npy"; }},
      {"row count mismatch across layers",
       [](json& j, const TempDir& d) {
         ebe::npy::write_matrix(ebe::EmbeddingMatrix(5, 6, std::vector<float>(30, 1.0f)),
                                d / "short.npy");
         j["layers"][1]["train_path"] = "short.npy";
       }},
      {"label count mismatch",
       [](json& j, const TempDir& d) {
         const std::vector<ebe::ClassId> y = {0, 1};
         ebe::npy::write_labels(y, d / "y2.npy");
         j["train_labels_path"] = "y2.npy";
       }},
      {"labels file has wrong dtype",
       [](json& j, const TempDir&) { j["train_labels_path"] = "layer1_train.npy"; }},
      {"embedding file has wrong dtype",
       [](json& j, const TempDir&) { j["layers"][0]["train_path"] = "train_labels.npy"; }},
      {"missing image dir", [](json& j, const TempDir&) { j["image_dir"] = "no_images"; }},
      {"not an object", [](json& j, const TempDir&) { j = json::array(); }},
  };
  for (const auto& [name, mutate] : mutations) {
    TempDir dir;
    const auto path = make_dataset(dir);
    auto j = read_json(path);
    mutate(j, dir);
    write_json(path, j);
    EXPECT_THROW(ebe::load_manifest(path), ebe::ManifestError) << name;
  }
}

TEST(Manifest, InvalidJson) {
  TempDir dir;
  testutil::write_file(dir / "m.json", "{ not json");
  EXPECT_THROW(ebe::load_manifest(dir / "m.json"), ebe::ManifestError);
}

TEST(Manifest, UnknownLayerLookup) {
  TempDir dir;
  const auto m = ebe::load_manifest(make_dataset(dir));
  EXPECT_THROW(m.layer(9), ebe::ManifestError);
  EXPECT_EQ(m.find_layer(9), nullptr);
}

}  // namespace
