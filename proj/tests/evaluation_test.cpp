#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "ebe/evaluation.hpp"
#include "ebe/synthetic.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

namespace {

using ebe::EmbeddingMatrix;
using ebe::LabelVector;
using testutil::TempDir;

std::vector<float> raw(const EmbeddingMatrix& m) { return {m.values().begin(), m.values().end()}; }
std::vector<std::int64_t> raw(const LabelVector& l) { return {l.values().begin(), l.values().end()}; }

TEST(EvaluateLayer, CountsCorrectPredictions) {
  // Three training rows along the axes; queries land on classes 1, 2, 3 while
  // the truth is 1, 2, 4 -> 2 of 3 correct.
  const EmbeddingMatrix train(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const LabelVector train_labels({1, 2, 3}, 5);
  const EmbeddingMatrix test(3, 3, {1, 0.1f, 0, 0.1f, 1, 0, 0, 0.1f, 1});
  const LabelVector test_labels({1, 2, 4}, 5);
  const auto cells = ebe::evaluate_layer(ebe::normalize(train, train_labels), ebe::QueryBatch(test),
                                         test_labels, {1});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].correct, 2u);
  EXPECT_EQ(cells[0].total, 3u);
  EXPECT_DOUBLE_EQ(cells[0].accuracy, 2.0 / 3.0);
}

TEST(EvaluateLayer, KOneHasFullPurity) {
  std::mt19937_64 rng(1);
  const auto train = testutil::random_matrix(rng, 60, 5);
  const LabelVector train_labels(testutil::random_labels(rng, 60, 4), 4);
  const auto test = testutil::random_matrix(rng, 25, 5);
  const LabelVector test_labels(testutil::random_labels(rng, 25, 4), 4);
  const auto cells = ebe::evaluate_layer(ebe::normalize(train, train_labels), ebe::QueryBatch(test),
                                         test_labels, {1, 3, 7});
  EXPECT_EQ(cells[0].mean_purity, 1.0);
  for (const auto& c : cells) {
    EXPECT_GE(c.accuracy, 0.0);
    EXPECT_LE(c.accuracy, 1.0);
    EXPECT_GT(c.mean_purity, 0.0);
    EXPECT_LE(c.mean_purity, 1.0);
  }
}

TEST(EvaluateLayer, ClusteredAccuracy) {
  // Oracle run (naive KNN in oracle.hpp) gives 1.000000 on this instance.
  const auto d = ebe::generate_synthetic({3, 100, 16, 0.1, 42});
  const auto cells = ebe::evaluate_layer(ebe::normalize(d.train, d.train_labels),
                                         ebe::QueryBatch(d.test), d.test_labels, {10});
  EXPECT_GE(cells[0].accuracy, 0.95);
}

TEST(EvaluateLayer, MatchesNaiveOracleExactly) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> rows(5, 200), dims(1, 32);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = rows(rng), m = rows(rng), d = dims(rng);
    const auto train = testutil::random_matrix(rng, n, d);
    const LabelVector train_labels(testutil::random_labels(rng, n, 3), 3);
    const auto test = testutil::random_matrix(rng, m, d);
    const LabelVector test_labels(testutil::random_labels(rng, m, 3), 3);
    std::vector<std::size_t> ks = {1, 3};
    if (n >= 10) ks.push_back(10);
    if (n > 10) ks.push_back(n);
    const auto cells = ebe::evaluate_layer(ebe::normalize(train, train_labels),
                                           ebe::QueryBatch(test), test_labels, ks);
    for (const auto& c : cells) {
      const double want = oracle::accuracy(raw(train), raw(train_labels), raw(test), raw(test_labels), d, c.k);
      EXPECT_EQ(c.accuracy, want) << "n=" << n << " d=" << d << " k=" << c.k;
    }
  }
}

TEST(EvaluateLayer, PrefixConsistency) {
  std::mt19937_64 rng(78);
  const auto train = testutil::random_matrix(rng, 150, 12);
  const LabelVector labels(testutil::random_labels(rng, 150, 3), 3);
  const auto idx = ebe::normalize(train, labels);
  const ebe::QueryBatch batch(testutil::random_matrix(rng, 30, 12));
  const auto big = ebe::batch_top_k(batch, idx, 40);
  for (std::size_t k : {1u, 5u, 17u, 39u}) {
    const auto small = ebe::batch_top_k(batch, idx, k);
    for (std::size_t q = 0; q < 30; ++q) {
      ASSERT_EQ(small[q].size(), k);
      for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(small[q][i], big[q][i]);
    }
  }
}

TEST(EvaluateLayer, Errors) {
  std::mt19937_64 rng(79);
  const auto train = testutil::random_matrix(rng, 10, 3);
  const LabelVector labels(testutil::random_labels(rng, 10, 2), 2);
  const auto idx = ebe::normalize(train, labels);
  const auto test = testutil::random_matrix(rng, 4, 3);
  const LabelVector tl(testutil::random_labels(rng, 4, 2), 2);
  EXPECT_THROW(ebe::evaluate_layer(idx, ebe::QueryBatch(test), tl, {11}), ebe::ParamError);
  EXPECT_THROW(ebe::evaluate_layer(idx, ebe::QueryBatch(test), tl, {0}), ebe::ParamError);
  EXPECT_THROW(ebe::evaluate_layer(idx, ebe::QueryBatch(test), tl, {}), ebe::ParamError);
  EXPECT_THROW(ebe::evaluate_layer(idx, ebe::QueryBatch(test, {}), tl, {1}), ebe::ParamError);
}

std::filesystem::path trend_dataset(const TempDir& dir, std::optional<double> baseline) {
  return ebe::write_synthetic_dataset(dir.path(), "trend", 3, 100,
                                      {{1, 16, 0.05, 43}, {2, 16, 5.0, 44}}, baseline);
}

TEST(RunSweep, GridSizeAndOrder) {
  TempDir dir;
  const auto m = ebe::load_manifest(trend_dataset(dir, 0.8));
  const auto r = ebe::run_sweep(m, {{2, 1}, {10, 1, 5}});
  ASSERT_EQ(r.cells.size(), 6u);
  EXPECT_EQ(r.test_count, 300u);
  std::vector<std::pair<ebe::LayerId, std::size_t>> order;
  for (const auto& c : r.cells) order.emplace_back(c.layer_id, c.k);
  const std::vector<std::pair<ebe::LayerId, std::size_t>> want = {{1, 1}, {1, 5}, {1, 10},
                                                                  {2, 1}, {2, 5}, {2, 10}};
  EXPECT_EQ(order, want);
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.baseline_delta);
    EXPECT_NEAR(*c.baseline_delta, c.accuracy - 0.8, 1e-12);
  }
}

TEST(RunSweep, Deterministic) {
  TempDir dir;
  const auto m = ebe::load_manifest(trend_dataset(dir, std::nullopt));
  const ebe::SweepConfig cfg{{1, 2}, {1, 5, 10, 20}};
  const auto a = ebe::run_sweep(m, cfg, {{1, 64, 256}, 1});
  const auto b = ebe::run_sweep(m, cfg, {{4, 8, 100}, 2});
  EXPECT_EQ(a, b);
  EXPECT_EQ(ebe::format_sweep_csv(a), ebe::format_sweep_csv(b));
}

TEST(RunSweep, TightLayerBeatsDiffuseLayer) {
  // Oracle run: tight layer 1.000000 for k in {1,5,10,20}; diffuse layer
  // 0.296667, 0.313333, 0.286667, 0.286667.
  TempDir dir;
  const auto m = ebe::load_manifest(trend_dataset(dir, std::nullopt));
  const auto r = ebe::run_sweep(m, {{1, 2}, {1, 5, 10, 20}});
  for (std::size_t k : {1u, 5u, 10u, 20u}) {
    EXPECT_GT(r.find(1, k)->accuracy, r.find(2, k)->accuracy) << "k=" << k;
  }
  EXPECT_NEAR(r.find(2, 5)->accuracy, 0.313333, 1e-6);
  EXPECT_EQ(r.find(1, 20)->accuracy, 1.0);
}

TEST(RunSweep, MatchesOracleAccuracy) {
  TempDir dir;
  const auto m = ebe::load_manifest(trend_dataset(dir, std::nullopt));
  const auto r = ebe::run_sweep(m, {{1, 2}, {1, 3, 10}});
  const auto ytr = raw(ebe::load_labels(m, ebe::Split::Train));
  const auto yte = raw(ebe::load_labels(m, ebe::Split::Test));
  for (const auto& c : r.cells) {
    const auto tr = ebe::load_matrix(m, c.layer_id, ebe::Split::Train);
    const auto te = ebe::load_matrix(m, c.layer_id, ebe::Split::Test);
    EXPECT_EQ(c.accuracy, oracle::accuracy(raw(tr), ytr, raw(te), yte, tr.dims(), c.k));
  }
}

TEST(RunSweep, ConfigErrors) {
  TempDir dir;
  const auto m = ebe::load_manifest(trend_dataset(dir, std::nullopt));
  EXPECT_THROW(ebe::run_sweep(m, {{3}, {1}}), ebe::ManifestError);
  EXPECT_THROW(ebe::run_sweep(m, {{}, {1}}), ebe::ParamError);
  EXPECT_THROW(ebe::run_sweep(m, {{1}, {}}), ebe::ParamError);
  EXPECT_THROW(ebe::run_sweep(m, {{1}, {301}}), ebe::ParamError);
  EXPECT_THROW(ebe::run_sweep(m, {{1, 1}, {1}}), ebe::ParamError);
}

TEST(RunSweep, LoadErrorsAreTaggedWithLayer) {
  TempDir dir;
  const auto m = ebe::load_manifest(trend_dataset(dir, std::nullopt));
  // Corrupt the payload after validation (header stays intact).
  std::vector<float> v(300 * 16, 1.0f);
  v[5] = std::numeric_limits<float>::quiet_NaN();
  std::string bytes = testutil::read_file(dir / "layer2_train.npy");
  std::memcpy(bytes.data() + 128, v.data(), v.size() * sizeof(float));
  testutil::write_file(dir / "layer2_train.npy", bytes);
  try {
    ebe::run_sweep(m, {{1, 2}, {1}});
    FAIL() << "expected DataError";
  } catch (const ebe::DataError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("layer 2: ", 0), 0u) << e.what();
    EXPECT_EQ(*e.row(), 0u);
    EXPECT_EQ(*e.col(), 5u);
  }
}

TEST(SweepCsv, Format) {
  ebe::SweepResult r;
  r.dataset_name = "mnist";
  r.baseline_accuracy = 0.99;
  r.cells = {{1, 5, 1, 3, 1.0 / 3.0, 0.8, 1.0 / 3.0 - 0.99}, {2, 5, 3, 3, 1.0, 1.0, 0.01}};
  EXPECT_EQ(ebe::format_sweep_csv(r),
            "dataset,layer_id,k,accuracy,mean_purity,baseline_accuracy,baseline_delta\n"
            "mnist,1,5,0.333333,0.800000,0.990000,-0.656667\n"
            "mnist,2,5,1.000000,1.000000,0.990000,0.010000\n");
  r.baseline_accuracy.reset();
  r.cells = {{3, 1, 1, 2, 0.5, 1.0, std::nullopt}};
  EXPECT_EQ(ebe::format_sweep_csv(r),
            "dataset,layer_id,k,accuracy,mean_purity,baseline_accuracy,baseline_delta\n"
            "mnist,3,1,0.500000,1.000000,,\n");
}

}  // namespace
