#pragma once

// Group-relative policy optimization of a toy grounding policy.
//
// The policy is a categorical distribution over a G x G grid of screen cells
// with a linear logit head. A rollout draws N cells for one input, each cell
// is mapped to its centre in pixel space, and the point earns reward 1 iff it
// lies inside the (resized) target box. Rewards are Z-scored within the group
// and the clipped importance-ratio surrogate is minimised by gradient descent.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clickscale/error.hpp"
#include "clickscale/geometry.hpp"
#include "clickscale/json_io.hpp"
#include "clickscale/rng.hpp"

namespace clickscale {

class GridPolicy {
 public:
  GridPolicy() = default;
  GridPolicy(int grid_size, int feature_dim)
      : grid_size_(grid_size),
        feature_dim_(feature_dim),
        weights_(checked_size(grid_size, feature_dim), 0.0) {}

  int grid_size() const noexcept { return grid_size_; }
  int feature_dim() const noexcept { return feature_dim_; }
  std::size_t cells() const noexcept {
    return static_cast<std::size_t>(grid_size_) * static_cast<std::size_t>(grid_size_);
  }

  // Row-major F x G^2: weights()[f * cells() + cell].
  std::span<double> weights() noexcept { return weights_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double& weight(std::size_t f, std::size_t cell) { return weights_[f * cells() + cell]; }

  std::vector<double> logits(std::span<const double> features) const {
    if (features.size() != static_cast<std::size_t>(feature_dim_)) {
      throw ContractError("feature length " + std::to_string(features.size()) +
                          " != policy feature_dim " + std::to_string(feature_dim_));
    }
    std::vector<double> z(cells(), 0.0);
    for (std::size_t f = 0; f < features.size(); ++f) {
      const double x = features[f];
      if (x == 0.0) continue;
      const double* row = weights_.data() + f * cells();
      for (std::size_t c = 0; c < z.size(); ++c) z[c] += x * row[c];
    }
    return z;
  }

  // Log-probabilities of softmax(logits / temperature).
  std::vector<double> log_probs(std::span<const double> features,
                                double temperature = 1.0) const {
    if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
    std::vector<double> z = logits(features);
    double mx = -std::numeric_limits<double>::infinity();
    for (double& v : z) {
      if (!std::isfinite(v)) throw NumericError("non-finite policy logit");
      v /= temperature;
      mx = std::max(mx, v);
    }
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (double& v : z) v -= lse;
    return z;
  }

  std::size_t greedy_cell(std::span<const double> features) const {
    const std::vector<double> z = logits(features);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  }

  Point cell_center(std::size_t cell, const Resolution& res) const {
    const auto g = static_cast<std::size_t>(grid_size_);
    const double col = static_cast<double>(cell % g);
    const double row = static_cast<double>(cell / g);
    return {(col + 0.5) * static_cast<double>(res.width) / grid_size_,
            (row + 0.5) * static_cast<double>(res.height) / grid_size_};
  }

 private:
  static std::size_t checked_size(int g, int f) {
    if (g < 1 || f < 1) throw ContractError("grid_size and feature_dim must be >= 1");
    return static_cast<std::size_t>(f) * static_cast<std::size_t>(g) *
           static_cast<std::size_t>(g);
  }

  int grid_size_ = 1;
  int feature_dim_ = 1;
  std::vector<double> weights_ = std::vector<double>(1, 0.0);
};

// ---------------------------------------------------------------------------

struct RolloutSample {
  std::size_t cell = 0;
  Point point;
  double old_logp = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
};

// One input's group of N responses. `target` and `resolution` are in the
// resized space the policy predicts in.
struct RolloutGroup {
  std::vector<double> features;
  BoundingBox target;
  Resolution resolution;
  std::vector<RolloutSample> samples;
};

inline std::vector<RolloutSample> sample_responses(const GridPolicy& policy,
                                                   std::span<const double> features,
                                                   const Resolution& res, int n,
                                                   double temperature,
                                                   std::uint64_t seed) {
  if (n < 2) throw ContractError("sample_responses: N must be >= 2");
  if (!(temperature > 0.0)) throw ContractError("sample_responses: temperature must be > 0");
  const std::vector<double> logp = policy.log_probs(features, temperature);
  std::vector<double> cdf(logp.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < logp.size(); ++c) {
    acc += std::exp(logp[c]);
    cdf[c] = acc;
  }
  std::mt19937_64 rng(seed);
  std::vector<RolloutSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t cell = static_cast<std::size_t>(it - cdf.begin());
    if (cell >= cdf.size()) cell = cdf.size() - 1;
    out.push_back({cell, policy.cell_center(cell, res), logp[cell], 0.0, 0.0});
  }
  return out;
}

// Binary click reward: 1 iff the point is inside the box, edges included.
inline double click_reward(const Point& p, const BoundingBox& bbox) noexcept {
  return contains(bbox, p) ? 1.0 : 0.0;
}

// Z-score with population standard deviation. Groups whose rewards are all
// equal get zero advantages.
inline std::vector<double> normalize_advantages(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  if (n < 2) throw ContractError("normalize_advantages: need at least 2 rewards");
  std::vector<double> out(n, 0.0);
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards[0]; })) {
    return out;
  }
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) return out;
  for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as GridPolicy::weights()
  std::size_t clipped = 0;   // samples whose clipped branch won the min
};

inline void check_group(const RolloutGroup& g, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ContractError("epsilon must be in (0,1)");
  if (g.samples.empty()) throw ContractError("rollout group is empty");
}

// Value of the clipped surrogate, computed term by term.
inline double surrogate_loss(const GridPolicy& policy, const RolloutGroup& g,
                             double epsilon, double temperature = 1.0) {
  check_group(g, epsilon);
  const std::vector<double> logp = policy.log_probs(g.features, temperature);
  double sum = 0.0;
  for (const auto& s : g.samples) {
    const double ratio = std::exp(logp[s.cell] - s.old_logp);
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    sum += std::min(ratio * s.advantage, clipped * s.advantage);
  }
  return -sum / static_cast<double>(g.samples.size());
}

inline LossGrad grpo_loss_and_grad(const GridPolicy& policy, const RolloutGroup& g,
                                   double epsilon, double temperature = 1.0) {
  check_group(g, epsilon);
  const std::size_t cells = policy.cells();
  const std::vector<double> logp = policy.log_probs(g.features, temperature);
  std::vector<double> prob(cells);
  for (std::size_t c = 0; c < cells; ++c) prob[c] = std::exp(logp[c]);

  const double inv_n = 1.0 / static_cast<double>(g.samples.size());
  LossGrad out;
  out.grad.assign(policy.weights().size(), 0.0);
  std::vector<double> dlogits(cells, 0.0);
  double sum = 0.0;
  for (const auto& s : g.samples) {
    if (s.cell >= cells) throw ContractError("sample cell index out of range");
    const double ratio = std::exp(logp[s.cell] - s.old_logp);
    const double unclipped = ratio * s.advantage;
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * s.advantage;
    if (unclipped <= clipped) {
      sum += unclipped;
      // d(ratio * A)/dz = A * ratio * dlogp/dz, dlogp_c/dz_j = (1[j=c] - p_j) / T
      const double w = -inv_n * s.advantage * ratio / temperature;
      if (w != 0.0) {
        for (std::size_t j = 0; j < cells; ++j) dlogits[j] -= w * prob[j];
        dlogits[s.cell] += w;
      }
    } else {
      sum += clipped;
      ++out.clipped;
    }
  }
  out.loss = -sum * inv_n;
  for (std::size_t f = 0; f < g.features.size(); ++f) {
    const double x = g.features[f];
    if (x == 0.0) continue;
    double* row = out.grad.data() + f * cells;
    for (std::size_t j = 0; j < cells; ++j) row[j] = x * dlogits[j];
  }
  return out;
}

// ---------------------------------------------------------------------------

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

// Central differences of surrogate_loss against grpo_loss_and_grad.
inline FiniteDiffReport finite_diff_check(const GridPolicy& policy, const RolloutGroup& g,
                                          double epsilon, double h,
                                          double temperature = 1.0) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: h must be positive");
  FiniteDiffReport rep;
  rep.analytic = grpo_loss_and_grad(policy, g, epsilon, temperature).grad;
  rep.numeric.resize(rep.analytic.size());
  GridPolicy probe = policy;
  for (std::size_t i = 0; i < rep.analytic.size(); ++i) {
    const double w0 = probe.weights()[i];
    probe.weights()[i] = w0 + h;
    const double up = surrogate_loss(probe, g, epsilon, temperature);
    probe.weights()[i] = w0 - h;
    const double down = surrogate_loss(probe, g, epsilon, temperature);
    probe.weights()[i] = w0;
    rep.numeric[i] = (up - down) / (2.0 * h);
    const double rel = std::abs(rep.analytic[i] - rep.numeric[i]) /
                       std::max(1.0, std::abs(rep.analytic[i]));
    rep.max_rel_error = std::max(rep.max_rel_error, rel);
  }
  return rep;
}

// Smallest |ratio - (1 +/- epsilon)| over a group; finite differences are only
// meaningful when this is well above the step size.
inline double clip_margin(const GridPolicy& policy, const RolloutGroup& g,
                          double epsilon, double temperature = 1.0) {
  const std::vector<double> logp = policy.log_probs(g.features, temperature);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : g.samples) {
    const double ratio = std::exp(logp[s.cell] - s.old_logp);
    m = std::min({m, std::abs(ratio - (1.0 + epsilon)), std::abs(ratio - (1.0 - epsilon))});
  }
  return m;
}

// ---------------------------------------------------------------------------
// Training

struct TrainingExample {
  std::vector<double> features;
  BoundingBox bbox;
  Resolution resolution;
  std::optional<std::string> category;
};

enum class Optimizer { sgd, adamw };

struct TrainConfig {
  int rollouts = 8;  // N
  double epsilon = 0.2;
  double learning_rate = 0.5;
  int iterations = 250;
  int batch_size = 32;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int grid_size = 4;
  // >1 reuses each rollout batch for several updates, so ratios move off 1
  // and clipping can engage
  int inner_epochs = 1;
  std::int64_t resize_multiple = 28;
  Optimizer optimizer = Optimizer::sgd;
  double weight_decay = 0.0;  // adamw only
  double max_grad_norm = 0.0; // 0 disables

  void validate() const {
    if (rollouts < 2) throw ContractError("rollouts (N) must be >= 2");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ContractError("epsilon must be in (0,1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ContractError("learning_rate must be finite and non-negative");
    }
    if (iterations < 0) throw ContractError("iterations must be >= 0");
    if (batch_size < 1) throw ContractError("batch_size must be >= 1");
    if (!(temperature > 0.0)) throw ContractError("temperature must be > 0");
    if (grid_size < 1) throw ContractError("grid_size must be >= 1");
    if (inner_epochs < 1) throw ContractError("inner_epochs must be >= 1");
    if (resize_multiple < 1) throw ContractError("resize_multiple must be >= 1");
  }
};

struct IterationMetrics {
  int iteration = 0;
  double mean_reward = 0.0;
  double loss = 0.0;
  double greedy_accuracy = 0.0;
  std::size_t clipped = 0;
};

struct TrainResult {
  GridPolicy policy;
  std::vector<IterationMetrics> metrics;
};

// Input mapped into the resized space used for rollouts and reward.
struct PreparedExample {
  const TrainingExample* source = nullptr;
  Resolution resolution;
  BoundingBox target;
};

inline PreparedExample prepare(const TrainingExample& ex, std::int64_t multiple) {
  const ResizeResult rs = smart_resize(ex.resolution, multiple);
  return {&ex, rs.resolution, rescale_box(ex.bbox, rs.scale_x, rs.scale_y)};
}

inline double greedy_accuracy(const GridPolicy& policy,
                              std::span<const TrainingExample> data,
                              std::int64_t multiple) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : data) {
    const PreparedExample p = prepare(ex, multiple);
    const Point pt = policy.cell_center(policy.greedy_cell(ex.features), p.resolution);
    if (contains(p.target, pt)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Every target must contain at least one cell centre, otherwise it can never
// earn reward.
inline void validate_dataset(std::span<const TrainingExample> data, int grid_size,
                             std::int64_t multiple) {
  if (data.empty()) throw ContractError("training dataset is empty");
  const std::size_t f = data.front().features.size();
  GridPolicy probe(grid_size, 1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    if (ex.features.size() != f || f == 0) {
      throw ValidationError("example " + std::to_string(i) + ": inconsistent feature length");
    }
    const PreparedExample p = prepare(ex, multiple);
    bool reachable = false;
    for (std::size_t c = 0; c < probe.cells() && !reachable; ++c) {
      reachable = contains(p.target, probe.cell_center(c, p.resolution));
    }
    if (!reachable) {
      throw ValidationError("example " + std::to_string(i) +
                            ": target box contains no cell centre at grid size " +
                            std::to_string(grid_size));
    }
  }
}

namespace detail {

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
};

inline void apply_update(GridPolicy& policy, std::vector<double>& grad,
                         const TrainConfig& cfg, AdamState& adam) {
  if (cfg.max_grad_norm > 0.0) {
    double n2 = 0.0;
    for (double g : grad) n2 += g * g;
    const double n = std::sqrt(n2);
    if (n > cfg.max_grad_norm) {
      for (double& g : grad) g *= cfg.max_grad_norm / n;
    }
  }
  auto w = policy.weights();
  if (cfg.optimizer == Optimizer::sgd) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * grad[i];
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (adam.m.empty()) {
    adam.m.assign(w.size(), 0.0);
    adam.v.assign(w.size(), 0.0);
  }
  ++adam.t;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    adam.m[i] = b1 * adam.m[i] + (1.0 - b1) * grad[i];
    adam.v[i] = b2 * adam.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = adam.m[i] / c1;
    const double vhat = adam.v[i] / c2;
    w[i] -= cfg.learning_rate * (mhat / (std::sqrt(vhat) + eps) + cfg.weight_decay * w[i]);
  }
}

}  // namespace detail

// Draws the rollout groups for one iteration. Each input gets its own seeded
// stream, so the result does not depend on evaluation order.
inline std::vector<RolloutGroup> collect_rollouts(const GridPolicy& policy,
                                                  std::span<const PreparedExample> batch,
                                                  const TrainConfig& cfg, int iteration) {
  std::vector<RolloutGroup> groups;
  groups.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const PreparedExample& p = batch[b];
    RolloutGroup g;
    g.features = p.source->features;
    g.target = p.target;
    g.resolution = p.resolution;
    const std::uint64_t s =
        derive_seed(cfg.seed, {static_cast<std::uint64_t>(iteration), b, 0x5a});
    g.samples = sample_responses(policy, g.features, g.resolution, cfg.rollouts,
                                 cfg.temperature, s);
    std::vector<double> rewards;
    rewards.reserve(g.samples.size());
    for (auto& smp : g.samples) {
      smp.reward = click_reward(smp.point, g.target);
      rewards.push_back(smp.reward);
    }
    const std::vector<double> adv = normalize_advantages(rewards);
    for (std::size_t i = 0; i < adv.size(); ++i) g.samples[i].advantage = adv[i];
    groups.push_back(std::move(g));
  }
  return groups;
}

// Batch loss and gradient: mean over groups.
inline LossGrad batch_loss_and_grad(const GridPolicy& policy,
                                    std::span<const RolloutGroup> groups,
                                    double epsilon, double temperature) {
  LossGrad total;
  total.grad.assign(policy.weights().size(), 0.0);
  for (const auto& g : groups) {
    LossGrad lg = grpo_loss_and_grad(policy, g, epsilon, temperature);
    total.loss += lg.loss;
    total.clipped += lg.clipped;
    for (std::size_t i = 0; i < lg.grad.size(); ++i) total.grad[i] += lg.grad[i];
  }
  const double inv = 1.0 / static_cast<double>(groups.size());
  total.loss *= inv;
  for (double& v : total.grad) v *= inv;
  return total;
}

inline TrainResult train(const TrainConfig& cfg, std::span<const TrainingExample> data,
                         std::optional<GridPolicy> init = std::nullopt) {
  cfg.validate();
  validate_dataset(data, cfg.grid_size, cfg.resize_multiple);
  const int feature_dim = static_cast<int>(data.front().features.size());

  TrainResult out;
  out.policy = init ? *init : GridPolicy(cfg.grid_size, feature_dim);
  if (out.policy.grid_size() != cfg.grid_size || out.policy.feature_dim() != feature_dim) {
    throw ContractError("initial policy shape does not match config/dataset");
  }

  std::vector<PreparedExample> prepared;
  prepared.reserve(data.size());
  for (const auto& ex : data) prepared.push_back(prepare(ex, cfg.resize_multiple));

  // Batches walk a seeded permutation of the dataset, reshuffled per pass.
  std::mt19937_64 order_rng(derive_seed(cfg.seed, {0x0bd3}));
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), order_rng);
  std::size_t cursor = 0;

  detail::AdamState adam;
  std::vector<PreparedExample> batch;
  for (int it = 0; it < cfg.iterations; ++it) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch.push_back(prepared[order[cursor++]]);
    }
    const std::vector<RolloutGroup> groups = collect_rollouts(out.policy, batch, cfg, it);

    IterationMetrics m;
    m.iteration = it;
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    for (const auto& g : groups) {
      for (const auto& s : g.samples) {
        reward_sum += s.reward;
        ++reward_count;
      }
    }
    m.mean_reward = reward_sum / static_cast<double>(reward_count);

    for (int e = 0; e < cfg.inner_epochs; ++e) {
      LossGrad lg = batch_loss_and_grad(out.policy, groups, cfg.epsilon, cfg.temperature);
      if (!std::isfinite(lg.loss)) {
        throw NumericError("non-finite loss at iteration " + std::to_string(it) +
                           ", inner epoch " + std::to_string(e));
      }
      if (e == 0) m.loss = lg.loss;
      m.clipped += lg.clipped;
      detail::apply_update(out.policy, lg.grad, cfg, adam);
    }
    for (double w : out.policy.weights()) {
      if (!std::isfinite(w)) {
        throw NumericError("non-finite weight after iteration " + std::to_string(it));
      }
    }
    m.greedy_accuracy = greedy_accuracy(out.policy, data, cfg.resize_multiple);
    out.metrics.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// File formats

inline std::vector<TrainingExample> load_training_fixture(const std::filesystem::path& path) {
  std::vector<TrainingExample> out;
  jsonio::for_each_line(path, [&](const json& obj, std::size_t line) {
    TrainingExample ex;
    const json& f = jsonio::require(obj, "features", line);
    if (!f.is_array() || f.empty()) throw FormatError(line, "features must be a non-empty array");
    for (const auto& v : f) ex.features.push_back(jsonio::as_number(v, "feature", line));
    ex.bbox = jsonio::box_from_json(jsonio::require(obj, "bbox", line), "bbox", line);
    ex.resolution = jsonio::resolution_from_json(jsonio::require(obj, "resolution", line), line);
    if (!within(ex.resolution, ex.bbox)) throw FormatError(line, "bbox lies outside the resolution");
    if (auto it = obj.find("category"); it != obj.end() && it->is_string()) {
      ex.category = it->get<std::string>();
    }
    out.push_back(std::move(ex));
  });
  return out;
}

inline std::string metrics_csv(std::span<const IterationMetrics> metrics) {
  std::string out = "iteration,mean_reward,loss\n";
  char buf[96];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", m.iteration, m.mean_reward, m.loss);
    out += buf;
  }
  return out;
}

inline json checkpoint_to_json(const GridPolicy& p, std::uint64_t seed, int iteration) {
  json w = json::array();
  for (double v : p.weights()) w.push_back(v);
  return json{{"grid_size", p.grid_size()},
              {"feature_dim", p.feature_dim()},
              {"weights", w},
              {"seed", seed},
              {"iteration", iteration}};
}

inline GridPolicy checkpoint_from_json(const json& j) {
  if (!j.is_object()) throw FormatError(0, "checkpoint must be a JSON object");
  const json& g = jsonio::require(j, "grid_size", 0);
  const json& f = jsonio::require(j, "feature_dim", 0);
  const json& w = jsonio::require(j, "weights", 0);
  if (!g.is_number_integer() || !f.is_number_integer() || !w.is_array()) {
    throw FormatError(0, "checkpoint fields have wrong types");
  }
  GridPolicy p(g.get<int>(), f.get<int>());
  if (w.size() != p.weights().size()) {
    throw FormatError(0, "checkpoint weights length " + std::to_string(w.size()) +
                             " != " + std::to_string(p.weights().size()));
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    p.weights()[i] = jsonio::as_number(w[i], "weight", 0);
    if (!std::isfinite(p.weights()[i])) throw FormatError(0, "non-finite weight");
  }
  return p;
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  if (!j.is_object()) throw FormatError(0, "train config must be a JSON object");
  c.rollouts = j.value("rollouts", c.rollouts);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.temperature = j.value("temperature", c.temperature);
  c.seed = j.value("seed", c.seed);
  c.grid_size = j.value("grid_size", c.grid_size);
  c.inner_epochs = j.value("inner_epochs", c.inner_epochs);
  c.resize_multiple = j.value("resize_multiple", c.resize_multiple);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  const std::string opt = j.value("optimizer", std::string{"sgd"});
  if (opt == "sgd") {
    c.optimizer = Optimizer::sgd;
  } else if (opt == "adamw") {
    c.optimizer = Optimizer::adamw;
  } else {
    throw FormatError(0, "unknown optimizer \"" + opt + "\"");
  }
  c.validate();
  return c;
}

}  // namespace clickscale
