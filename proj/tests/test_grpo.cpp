#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "clickscale/grpo.hpp"
#include "oracles.hpp"

using namespace clickscale;

namespace {

const std::filesystem::path kFixtures = CLICKSCALE_FIXTURES;

struct Fixture {
  GridPolicy policy;
  RolloutGroup group;
};

// Random policy, features and rollout group; `drift` perturbs the policy
// after sampling so ratios move away from 1.
Fixture random_fixture(std::uint64_t seed, int f, int g, double drift) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Fixture fx{GridPolicy(g, f), {}};
  for (double& w : fx.policy.weights()) w = 0.5 * n01(rng);
  fx.group.features.resize(static_cast<std::size_t>(f));
  for (double& x : fx.group.features) x = n01(rng);
  fx.group.resolution = {280, 280};
  fx.group.target = {0, 0, 140, 140};
  fx.group.samples = sample_responses(fx.policy, fx.group.features, fx.group.resolution, 8, 1.0, seed + 1);
  std::vector<double> rewards;
  for (auto& s : fx.group.samples) {
    s.reward = click_reward(s.point, fx.group.target);
    rewards.push_back(s.reward);
  }
  const auto adv = normalize_advantages(rewards);
  for (std::size_t i = 0; i < adv.size(); ++i) fx.group.samples[i].advantage = adv[i];
  for (double& w : fx.policy.weights()) w += drift * n01(rng);
  return fx;
}

std::vector<oracle::Sample> oracle_samples(const RolloutGroup& g) {
  std::vector<oracle::Sample> out;
  for (const auto& s : g.samples) out.push_back({s.cell, s.old_logp, s.advantage});
  return out;
}

}  // namespace

TEST(Advantages, HandExample) {
  const std::vector<double> r{1, 0, 0, 0};
  const auto a = normalize_advantages(r);
  EXPECT_NEAR(a[0], std::sqrt(3.0), 1e-12);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(a[i], -1.0 / std::sqrt(3.0), 1e-12);
}

TEST(Advantages, ConstantGroupGivesZeros) {
  for (double v : {0.0, 1.0, 0.37}) {
    const std::vector<double> r(8, v);
    for (double a : normalize_advantages(r)) EXPECT_EQ(a, 0.0);
  }
}

TEST(Advantages, RejectsSingleton) {
  const std::vector<double> r{1.0};
  EXPECT_THROW(normalize_advantages(r), ContractError);
}

TEST(Advantages, MatchesLongDoubleOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> r(2 + t % 15);
    for (double& v : r) v = u(rng);
    const auto a = normalize_advantages(r);
    const auto o = oracle::advantages(r);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(a[i], static_cast<double>(o[i]), 1e-9);
  }
}

TEST(Reward, BinaryContainment) {
  const BoundingBox b{10, 10, 20, 20};
  EXPECT_EQ(click_reward({10, 10}, b), 1.0);
  EXPECT_EQ(click_reward({20, 15}, b), 1.0);
  EXPECT_EQ(click_reward({20.0001, 15}, b), 0.0);
}

TEST(Policy, UniformAtZeroWeights) {
  GridPolicy p(3, 2);
  const std::vector<double> x{1.0, -2.0};
  for (double lp : p.log_probs(x)) EXPECT_NEAR(lp, -std::log(9.0), 1e-12);
}

TEST(Policy, CellCentres) {
  GridPolicy p(4, 1);
  const Point c = p.cell_center(6, {1000, 700});  // row 1, col 2
  EXPECT_DOUBLE_EQ(c.x, 625.0);
  EXPECT_DOUBLE_EQ(c.y, 262.5);
}

TEST(Policy, FeatureLengthMismatchThrows) {
  GridPolicy p(2, 3);
  const std::vector<double> x{1.0};
  EXPECT_THROW(p.logits(x), ContractError);
}

TEST(Sampling, DeterministicUnderSeed) {
  const Fixture fx = random_fixture(4, 5, 3, 0.0);
  const auto a = sample_responses(fx.policy, fx.group.features, {100, 100}, 16, 1.0, 77);
  const auto b = sample_responses(fx.policy, fx.group.features, {100, 100}, 16, 1.0, 77);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].cell, b[i].cell);
}

TEST(Sampling, FrequenciesFollowPolicy) {
  GridPolicy p(2, 1);
  p.weight(0, 0) = std::log(3.0);  // cell 0 has weight 3 vs 1,1,1
  const std::vector<double> x{1.0};
  const auto s = sample_responses(p, x, {10, 10}, 60000, 1.0, 1);
  double c0 = 0;
  for (const auto& r : s) c0 += r.cell == 0;
  EXPECT_NEAR(c0 / 60000.0, 0.5, 0.01);
}

TEST(Loss, AtOnPolicyEqualsMinusMeanAdvantage) {
  const Fixture fx = random_fixture(12, 4, 3, 0.0);
  const LossGrad lg = grpo_loss_and_grad(fx.policy, fx.group, 0.2);
  double mean_adv = 0.0;
  for (const auto& s : fx.group.samples) mean_adv += s.advantage;
  mean_adv /= static_cast<double>(fx.group.samples.size());
  EXPECT_NEAR(lg.loss, -mean_adv, 1e-12);
  EXPECT_EQ(lg.clipped, 0u);
}

TEST(Loss, MatchesIndependentOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Fixture fx = random_fixture(seed, 1 + seed % 6, 1 + seed % 4, 0.4);
    for (double T : {1.0, 0.7}) {
      const double lib = surrogate_loss(fx.policy, fx.group, 0.2, T);
      const std::vector<double> w(fx.policy.weights().begin(), fx.policy.weights().end());
      const long double ref = oracle::surrogate(w, fx.policy.cells(), fx.group.features,
                                                oracle_samples(fx.group), 0.2, T);
      EXPECT_NEAR(lib, static_cast<double>(ref), 1e-10);
      EXPECT_NEAR(grpo_loss_and_grad(fx.policy, fx.group, 0.2, T).loss, lib, 1e-12);
    }
  }
}

TEST(Gradient, FiniteDifferencesAgree) {
  int checked = 0;
  for (std::uint64_t seed = 100; checked < 20; ++seed) {
    const Fixture fx = random_fixture(seed, 2 + seed % 7, 2 + seed % 3, 0.3);
    if (clip_margin(fx.policy, fx.group, 0.2) < 1e-3) continue;
    const auto rep = finite_diff_check(fx.policy, fx.group, 0.2, 1e-6);
    EXPECT_LE(rep.max_rel_error, 1e-4) << "seed " << seed;
    ++checked;
  }
}

TEST(Gradient, ClippedSamplesContributeNothing) {
  // one sample, positive advantage, ratio far above 1 + eps
  GridPolicy p(2, 1);
  p.weight(0, 1) = 3.0;
  RolloutGroup g;
  g.features = {1.0};
  g.resolution = {10, 10};
  g.target = {0, 0, 10, 10};
  g.samples.push_back({1, p.cell_center(1, g.resolution), std::log(0.25), 1.0, 1.0});
  const LossGrad lg = grpo_loss_and_grad(p, g, 0.2);
  EXPECT_EQ(lg.clipped, 1u);
  for (double v : lg.grad) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(lg.loss, -1.2, 1e-12);
}

TEST(Gradient, NegativeAdvantageBelowRangeIsClipped) {
  GridPolicy p(2, 1);
  p.weight(0, 1) = -3.0;
  RolloutGroup g;
  g.features = {1.0};
  g.samples.push_back({1, {}, std::log(0.25), 0.0, -1.0});
  const LossGrad lg = grpo_loss_and_grad(p, g, 0.2);
  EXPECT_EQ(lg.clipped, 1u);
  for (double v : lg.grad) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, StepSizeStability) {
  const Fixture fx = random_fixture(7, 4, 3, 0.2);
  ASSERT_GT(clip_margin(fx.policy, fx.group, 0.2), 1e-3);
  for (double h : {1e-4, 1e-5, 1e-6}) {
    EXPECT_LE(finite_diff_check(fx.policy, fx.group, 0.2, h).max_rel_error, 1e-4) << h;
  }
}

TEST(Train, ZeroIterationsReturnsInit) {
  const auto data = load_training_fixture(kFixtures / "separable_train.jsonl");
  TrainConfig cfg;
  cfg.iterations = 0;
  const auto res = train(cfg, data);
  for (double w : res.policy.weights()) EXPECT_EQ(w, 0.0);
  EXPECT_TRUE(res.metrics.empty());
}

TEST(Train, LearnsSeparableFixture) {
  const auto data = load_training_fixture(kFixtures / "separable_train.jsonl");
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.iterations = 150;
  const auto res = train(cfg, data);
  EXPECT_GE(res.metrics.back().greedy_accuracy, 0.95);
  EXPECT_GT(res.metrics.back().mean_reward, res.metrics.front().mean_reward);
}

TEST(Train, DeterministicUnderSeed) {
  const auto data = load_training_fixture(kFixtures / "separable_train.jsonl");
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.iterations = 20;
  const auto a = train(cfg, data);
  const auto b = train(cfg, data);
  EXPECT_TRUE(std::equal(a.policy.weights().begin(), a.policy.weights().end(), b.policy.weights().begin()));
  EXPECT_EQ(metrics_csv(a.metrics), metrics_csv(b.metrics));
}

TEST(Train, InnerEpochsEngageClipping) {
  const auto data = load_training_fixture(kFixtures / "separable_train.jsonl");
  TrainConfig cfg;
  cfg.iterations = 10;
  cfg.inner_epochs = 4;
  cfg.learning_rate = 2.0;
  std::size_t clipped = 0;
  for (const auto& m : train(cfg, data).metrics) clipped += m.clipped;
  EXPECT_GT(clipped, 0u);
}

TEST(Train, AdamWAndGradClipRun) {
  const auto data = load_training_fixture(kFixtures / "separable_train.jsonl");
  TrainConfig cfg;
  cfg.iterations = 60;
  cfg.optimizer = Optimizer::adamw;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  cfg.max_grad_norm = 1.0;
  const auto res = train(cfg, data);
  EXPECT_GT(res.metrics.back().greedy_accuracy, 0.5);
}

TEST(Train, UnreachableTargetRejected) {
  auto data = load_training_fixture(kFixtures / "separable_train.jsonl");
  data[3].bbox = {0, 0, 5, 5};
  EXPECT_THROW(train(TrainConfig{}, data), ValidationError);
}

TEST(Train, DivergenceIsNumericError) {
  const auto data = load_training_fixture(kFixtures / "separable_train.jsonl");
  TrainConfig cfg;
  cfg.iterations = 5;
  GridPolicy init(cfg.grid_size, static_cast<int>(data[0].features.size()));
  init.weights()[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train(cfg, data, init), NumericError);
}

TEST(Train, BadConfigRejected) {
  TrainConfig cfg;
  cfg.rollouts = 1;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = {};
  cfg.epsilon = 1.5;
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(Checkpoint, RoundTrip) {
  GridPolicy p(3, 2);
  for (std::size_t i = 0; i < p.weights().size(); ++i) p.weights()[i] = 0.1 * static_cast<double>(i) - 0.3;
  const GridPolicy q = checkpoint_from_json(checkpoint_to_json(p, 9, 100));
  EXPECT_TRUE(std::equal(p.weights().begin(), p.weights().end(), q.weights().begin()));
  json bad = checkpoint_to_json(p, 9, 100);
  bad["weights"].erase(0);
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
}

TEST(Metrics, CsvHeader) {
  const std::vector<IterationMetrics> m{{0, 0.5, -0.1, 0.0, 0}};
  EXPECT_EQ(metrics_csv(m).substr(0, 26), "iteration,mean_reward,loss");
}
