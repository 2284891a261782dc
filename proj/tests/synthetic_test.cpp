#include <gtest/gtest.h>

#include <cmath>

#include "ebe/evaluation.hpp"
#include "ebe/synthetic.hpp"

namespace {

TEST(Synthetic, SameSeedIsBitIdentical) {
  const ebe::SyntheticSpec spec{4, 20, 9, 0.3, 1234};
  const auto a = ebe::generate_synthetic(spec);
  const auto b = ebe::generate_synthetic(spec);
  EXPECT_TRUE(ebe::bit_equal(a.train, b.train));
  EXPECT_TRUE(ebe::bit_equal(a.test, b.test));
  EXPECT_EQ(a.train_labels, b.train_labels);
  const auto c = ebe::generate_synthetic({4, 20, 9, 0.3, 1235});
  EXPECT_FALSE(ebe::bit_equal(a.train, c.train));
}

TEST(Synthetic, ShapesAndLabels) {
  const auto d = ebe::generate_synthetic({3, 5, 4, 0.1, 1});
  EXPECT_EQ(d.train.rows(), 15u);
  EXPECT_EQ(d.test.rows(), 15u);
  EXPECT_EQ(d.train.dims(), 4u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(d.train_labels[i], static_cast<ebe::ClassId>(i % 3));
  EXPECT_EQ(d.train_labels.num_classes(), 3);
}

TEST(Synthetic, SplitsShareNoSample) {
  const auto d = ebe::generate_synthetic({2, 30, 6, 0.2, 5});
  for (std::size_t i = 0; i < d.train.rows(); ++i) {
    for (std::size_t j = 0; j < d.test.rows(); ++j) {
      EXPECT_FALSE(std::equal(d.train.row(i).begin(), d.train.row(i).end(), d.test.row(j).begin()));
    }
  }
}

TEST(Synthetic, ZeroSpreadCollapsesToUnitMeans) {
  const auto d = ebe::generate_synthetic({5, 10, 8, 0.0, 99});
  for (std::size_t i = 0; i < d.train.rows(); ++i) {
    const std::size_t c = i % 5;
    EXPECT_TRUE(std::equal(d.train.row(i).begin(), d.train.row(i).end(), d.train.row(c).begin()));
    EXPECT_TRUE(std::equal(d.test.row(i).begin(), d.test.row(i).end(), d.train.row(c).begin()));
    double s = 0;
    for (float v : d.train.row(i)) s += double(v) * v;
    EXPECT_NEAR(std::sqrt(s), 1.0, 1e-6);
  }
  const auto cells = ebe::evaluate_layer(ebe::normalize(d.train, d.train_labels),
                                         ebe::QueryBatch(d.test), d.test_labels, {1});
  EXPECT_EQ(cells[0].accuracy, 1.0);
}

TEST(Synthetic, TenClassesKOne) {
  // Oracle run gives 1.000000.
  const auto d = ebe::generate_synthetic({10, 100, 32, 0.1, 42});
  const auto cells = ebe::evaluate_layer(ebe::normalize(d.train, d.train_labels),
                                         ebe::QueryBatch(d.test), d.test_labels, {1});
  EXPECT_GE(cells[0].accuracy, 0.9);
}

TEST(Synthetic, GaussianStreamMoments) {
  ebe::GaussianStream g(7);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = g.next();
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Synthetic, InvalidSpec) {
  EXPECT_THROW(ebe::generate_synthetic({0, 1, 1, 0.1, 1}), ebe::ParamError);
  EXPECT_THROW(ebe::generate_synthetic({1, 0, 1, 0.1, 1}), ebe::ParamError);
  EXPECT_THROW(ebe::generate_synthetic({1, 1, 0, 0.1, 1}), ebe::ParamError);
  EXPECT_THROW(ebe::generate_synthetic({1, 1, 1, -1.0, 1}), ebe::ParamError);
}

}  // namespace
