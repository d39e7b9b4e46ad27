#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cbml/trees.hpp"
#include "cbml/util.hpp"

using namespace cbml;

namespace {

std::vector<Column> columns(std::size_t n) {
  std::vector<Column> c;
  for (std::size_t j = 0; j < n; ++j) c.push_back({"x" + std::to_string(j), "-"});
  return c;
}

Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  return x;
}

Eigen::MatrixXd scaled_copy(const RegressionTree& t, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd s(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) s(i, j) = t.scale(static_cast<std::size_t>(j), x(i, j));
  }
  return s;
}

}  // namespace

TEST(Cart, StepFunctionSplitsBetweenNeighbours) {
  Rng rng(1);
  const Eigen::MatrixXd x = uniform_matrix(rng, 200, 1);
  Eigen::VectorXd y(200);
  for (Eigen::Index i = 0; i < 200; ++i) y[i] = x(i, 0) > 0.5 ? 1.0 : 0.0;
  const auto t = fit_cart(x, y, columns(1), {"y", "-"}, {1, 1});
  ASSERT_FALSE(t.nodes[0].leaf);
  double below = 0.0, above = 1.0;
  for (Eigen::Index i = 0; i < 200; ++i) {
    if (x(i, 0) <= 0.5) below = std::max(below, x(i, 0));
    else above = std::min(above, x(i, 0));
  }
  EXPECT_GE(t.nodes[0].threshold, below);
  EXPECT_LE(t.nodes[0].threshold, above);
  EXPECT_LE(std::abs(t.nodes[0].threshold - 0.5), above - below);
}

TEST(Cart, RootSplitEqualsBruteForce) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = static_cast<Eigen::Index>(20 + rng.index(181));
    const auto cols = static_cast<Eigen::Index>(1 + rng.index(4));
    Eigen::MatrixXd x = uniform_matrix(rng, rows, cols);
    // Coarse columns exercise duplicate values and tie breaking.
    if (trial % 3 == 0) x.col(0) = (x.col(0) * 4).array().floor();
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) y[i] = std::sin(5 * x(i, 0)) + (cols > 1 ? x(i, 1) * x(i, 1) : 0.0) + 0.1 * rng.normal();
    const std::size_t min_leaf = 1 + rng.index(10);
    const auto t = fit_cart(x, y, columns(static_cast<std::size_t>(cols)), {"y", "-"}, {1, min_leaf});
    const auto brute = brute_force_split(scaled_copy(t, x), y, min_leaf);
    if (!brute) {
      EXPECT_TRUE(t.nodes[0].leaf) << "trial " << trial;
      continue;
    }
    ASSERT_FALSE(t.nodes[0].leaf) << "trial " << trial;
    EXPECT_EQ(t.nodes[0].feature, brute->feature) << "trial " << trial;
    EXPECT_EQ(t.nodes[0].threshold_scaled, brute->threshold_scaled) << "trial " << trial;
  }
}

TEST(Cart, DepthZeroIsTheMean) {
  Rng rng(3);
  const Eigen::MatrixXd x = uniform_matrix(rng, 50, 2);
  Eigen::VectorXd y = x.col(0) * 3.0;
  const auto t = fit_cart(x, y, columns(2), {"y", "W"}, {0, 5});
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_NEAR(t.nodes[0].value, y.mean(), 1e-12);
  const double probe[] = {0.3, 0.9};
  EXPECT_NEAR(t.predict(probe), y.mean(), 1e-12);
}

TEST(Cart, PureTargetNeverSplits) {
  Rng rng(4);
  const Eigen::MatrixXd x = uniform_matrix(rng, 60, 3);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(60, 7.5);
  const auto t = fit_cart(x, y, columns(3), {"y", "-"}, {3, 2});
  EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.depth(), 0);
}

TEST(Cart, DepthOneGivesTwoSingleConditionRules) {
  Rng rng(5);
  const Eigen::MatrixXd x = uniform_matrix(rng, 80, 2);
  const Eigen::VectorXd y = x.col(1) * 10.0;
  const auto t = fit_cart(x, y, columns(2), {"y", "-"}, {1, 5});
  const auto rules = extract_rules(t);
  ASSERT_EQ(rules.rules.size(), 2u);
  for (const auto& r : rules.rules) EXPECT_EQ(r.conditions.size(), 1u);
  EXPECT_TRUE(rules.dependences.empty());
}

TEST(Cart, RuleThresholdsRoundTrip) {
  Rng rng(6);
  Eigen::MatrixXd x = uniform_matrix(rng, 150, 3);
  x.col(0) = (x.col(0) * 300.0).array() + 100.0;
  x.col(2) = (x.col(2) * 0.1).array() + 0.15;
  Eigen::VectorXd y(150);
  for (Eigen::Index i = 0; i < 150; ++i) y[i] = x(i, 0) / 100 + 40 * x(i, 2) + std::cos(4 * x(i, 1));
  const auto t = fit_cart(x, y, {{"area", "m2"}, {"g_value", "-"}, {"u_wall", "W/m2K"}}, {"eui", "kWh/m2a"}, {3, 5});
  for (const auto& n : t.nodes) {
    if (n.leaf) continue;
    const auto f = static_cast<std::size_t>(n.feature);
    EXPECT_NEAR(t.unscale(f, n.threshold_scaled), n.threshold, 1e-9);
    EXPECT_NEAR(t.scale(f, n.threshold), n.threshold_scaled, 1e-9);
  }
  for (const auto& r : extract_rules(t).rules) {
    for (const auto& c : r.conditions) {
      bool found = false;
      for (const auto& n : t.nodes) found = found || (!n.leaf && n.threshold == c.threshold);
      EXPECT_TRUE(found) << c.to_string();
    }
    EXPECT_FALSE(r.to_string("eui").empty());
  }
}

TEST(Cart, DifferentChildFeaturesRaiseADependenceFlag) {
  // Large area: the u-value matters. Small area: the g-value matters.
  Rng rng(7);
  const Eigen::MatrixXd x = uniform_matrix(rng, 400, 3);
  Eigen::VectorXd y(400);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const bool large = x(i, 0) > 0.5;
    y[i] = 100.0 * large + 10.0 * (large ? x(i, 2) > 0.5 : x(i, 1) > 0.5);
  }
  const auto t = fit_cart(x, y, {{"area", "m2"}, {"g_value", "-"}, {"u_value", "W/m2K"}}, {"y", "-"}, {2, 10});
  const auto rules = extract_rules(t);
  ASSERT_EQ(rules.dependences.size(), 1u);
  EXPECT_EQ(rules.dependences[0].feature, "area");
  EXPECT_EQ(rules.dependences[0].left_feature, "g_value");
  EXPECT_EQ(rules.dependences[0].right_feature, "u_value");
  EXPECT_NE(rules.to_text(t).find("area"), std::string::npos);
}

TEST(Cart, AffineRescalingDoesNotChangePredictions) {
  Rng rng(8);
  const Eigen::MatrixXd x = uniform_matrix(rng, 120, 2);
  Eigen::VectorXd y(120);
  for (Eigen::Index i = 0; i < 120; ++i) y[i] = std::sin(6 * x(i, 0)) + x(i, 1);
  Eigen::MatrixXd xr = x;
  xr.col(0) = x.col(0) * 10.0 + Eigen::VectorXd::Constant(120, 3.0);
  const auto a = fit_cart(x, y, columns(2), {"y", "-"}, {3, 4});
  const auto b = fit_cart(xr, y, columns(2), {"y", "-"}, {3, 4});
  for (int k = 0; k < 50; ++k) {
    const double u = rng.uniform(), v = rng.uniform();
    const double pa[] = {u, v};
    const double pb[] = {10 * u + 3, v};
    EXPECT_EQ(a.predict(pa), b.predict(pb));
  }
}

TEST(Cart, RejectsTooFewRows) {
  Eigen::MatrixXd x(5, 1);
  x << 1, 2, 3, 4, 5;
  EXPECT_THROW(fit_cart(x, x.col(0), columns(1), {"y", "-"}, {2, 10}), ValidationError);
}

TEST(LeafModel, ExactLinearRecovery) {
  Rng rng(9);
  Dataset d({{"area", "m2"}, {"g_value", "-"}, {"noise", "-"}}, {{"eui", "kWh/m2a"}});
  for (int i = 0; i < 60; ++i) {
    const double a = rng.uniform(100, 400), g = rng.uniform(0.3, 0.6), z = rng.uniform();
    const double xs[] = {a, g, z};
    const double ys[] = {3 * a + 100 * g + 5};
    d.append(xs, ys);
  }
  const auto t = fit_cart(d, {0, 5});
  const auto m = leaf_linear_model(t, 0, d, {"area", "g_value"});
  ASSERT_EQ(m.coefficients.size(), 2u);
  EXPECT_NEAR(m.coefficients[0], 3.0, 1e-9);
  EXPECT_NEAR(m.coefficients[1], 100.0, 1e-9);
  EXPECT_NEAR(m.intercept, 5.0, 1e-9);
  EXPECT_EQ(m.units[0], "kWh/m2a/m2");
}

TEST(LeafModel, ConstantFeatureHasZeroSlope) {
  Rng rng(10);
  Dataset d({{"a", "-"}, {"b", "-"}}, {{"y", "-"}});
  for (int i = 0; i < 30; ++i) {
    const double a = rng.uniform();
    const double xs[] = {a, 0.4};
    const double ys[] = {2 * a};
    d.append(xs, ys);
  }
  const auto t = fit_cart(d, {0, 5});
  const auto single = leaf_linear_model(t, 0, d, {"b"});
  EXPECT_EQ(single.coefficients[0], 0.0);
  const auto both = leaf_linear_model(t, 0, d, {"a", "b"});
  EXPECT_NEAR(both.coefficients[0], 2.0, 1e-9);
  EXPECT_EQ(both.coefficients[1], 0.0);
}

TEST(LeafModel, CollinearFeaturesAreNamed) {
  Rng rng(11);
  Dataset d({{"a", "-"}, {"twice_a", "-"}, {"c", "-"}}, {{"y", "-"}});
  for (int i = 0; i < 40; ++i) {
    const double a = rng.uniform(), c = rng.uniform();
    const double xs[] = {a, 2 * a, c};
    const double ys[] = {a + c};
    d.append(xs, ys);
  }
  const auto t = fit_cart(d, {0, 5});
  try {
    leaf_linear_model(t, 0, d, {"a", "twice_a", "c"});
    FAIL() << "expected a collinearity error";
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("collinear"), std::string::npos);
    EXPECT_TRUE(what.find("twice_a") != std::string::npos || what.find(" a") != std::string::npos) << what;
  }
  EXPECT_THROW(leaf_linear_model(t, 0, d, {"missing"}), ValidationError);
}

TEST(LeafModel, SmallLeafRejected) {
  Dataset d({{"a", "-"}, {"b", "-"}}, {{"y", "-"}});
  for (int i = 0; i < 5; ++i) {
    const double xs[] = {double(i), double(i * i)};
    const double ys[] = {double(i)};
    d.append(xs, ys);
  }
  const auto t = fit_cart(d, {0, 2});
  EXPECT_THROW(leaf_linear_model(t, 0, d, {"a", "b"}), ValidationError);
}

TEST(Gbdt, ZeroStagesPredictTheMean) {
  Rng rng(12);
  const Eigen::MatrixXd x = uniform_matrix(rng, 120, 2);
  const Eigen::VectorXd y = x.col(0) * 5.0;
  GbdtOptions o;
  o.stages = 0;
  const auto m = fit_gbdt(x, y, columns(2), {"y", "-"}, o);
  const double probe[] = {0.1, 0.2};
  EXPECT_NEAR(m.predict(probe), y.mean(), 1e-12);
  ASSERT_EQ(m.train_loss.size(), 1u);
}

TEST(Gbdt, OneFullStepEqualsASingleTree) {
  Rng rng(13);
  const Eigen::MatrixXd x = uniform_matrix(rng, 150, 3);
  Eigen::VectorXd y(150);
  for (Eigen::Index i = 0; i < 150; ++i) y[i] = std::exp(x(i, 0)) + 3 * x(i, 2);
  GbdtOptions o;
  o.stages = 1;
  o.learning_rate = 1.0;
  o.max_depth = 3;
  o.min_leaf = 5;
  const auto boosted = fit_gbdt(x, y, columns(3), {"y", "-"}, o);
  const auto tree = fit_cart(x, y, columns(3), {"y", "-"}, {3, 5});
  ASSERT_EQ(boosted.trees.size(), 1u);
  EXPECT_EQ(boosted.trees[0].depth(), tree.depth());
  const Eigen::VectorXd a = boosted.predict(x);
  const Eigen::VectorXd b = tree.predict(x);
  for (Eigen::Index i = 0; i < 150; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Gbdt, TrainingLossNeverIncreases) {
  Rng rng(14);
  const Eigen::MatrixXd x = uniform_matrix(rng, 300, 4);
  Eigen::VectorXd y(300);
  for (Eigen::Index i = 0; i < 300; ++i) y[i] = std::sin(7 * x(i, 0)) * x(i, 1) + 0.2 * rng.normal();
  GbdtOptions o;
  o.stages = 80;
  const auto m = fit_gbdt(x, y, columns(4), {"y", "-"}, o);
  ASSERT_EQ(m.train_loss.size(), 81u);
  for (std::size_t k = 1; k < m.train_loss.size(); ++k) EXPECT_LE(m.train_loss[k], m.train_loss[k - 1] + 1e-12) << k;
  EXPECT_LT(m.train_loss.back(), 0.5 * m.train_loss.front());
}

TEST(Gbdt, NeedsOneHundredRows) {
  Rng rng(15);
  const Eigen::MatrixXd x = uniform_matrix(rng, 99, 1);
  EXPECT_THROW(fit_gbdt(x, x.col(0), columns(1), {"y", "-"}, {}), ValidationError);
}
