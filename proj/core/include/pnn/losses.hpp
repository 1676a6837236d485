#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/matrix.hpp"
#include "pnn/model.hpp"
#include "pnn/sampling.hpp"

namespace pnn {

enum class LambdaMode {
  kAdaptive,  // attention gate, trained jointly
  kFixed,     // constant lambda_fixed, attention parameters untouched
};

enum class NegSampler {
  kDns,      // in-batch dynamic negative sampling
  kUniform,  // classic BPR: uniform item outside u's positives
};

struct LossConfig {
  double alpha = 0.5;                   // weight of the constrain term
  double beta = 0.25;                   // weight of the uniformity term
  LambdaMode lambda_mode = LambdaMode::kAdaptive;
  double lambda_fixed = 0.5;
  bool use_rank = true;
  bool use_uniform = true;
  bool use_constrain = true;
  bool bpr_only = false;                // baseline: lambda == 0, no PNN machinery
  NegSampler sampler = NegSampler::kDns;
  int attn_cap = 20;                    // M: positives sampled for the gate
  std::int64_t pair_budget = 4096;      // uniformity pairs per example
  int k_neg_override = 0;               // 0: |batch items in u's positives|, floored at 1
};

struct LossBreakdown {
  double l_bpr = 0.0;
  double l_rank = 0.0;
  double l_uniform = 0.0;
  double l_constrain = 0.0;
  double l_pnn = 0.0;
  double lambda = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  bool bpr_fallback = false;   // pool too small; lambda forced to 0
  bool clamp_dropped = false;  // degenerate centroid direction
  bool kneg_clamped = false;
  bool skipped = false;        // no negative item exists for this user at all
};

// Noise for the clamp mechanism: per-coordinate U(0, 0.1) magnitudes times
// the unit directions of the positive/negative centroids.
struct ClampNoise {
  std::vector<double> delta_pos;
  std::vector<double> delta_neg;
  std::vector<double> mag_pos;
  std::vector<double> mag_neg;
};

// ---------------------------------------------------------------------------
// Scalar loss terms
// ---------------------------------------------------------------------------

// ln(1 + e^x), stable for all finite x.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -ln sigma(s_pos - s_neg)
inline double bpr_loss(double s_pos, double s_neg) {
  return softplus(-(s_pos - s_neg));
}

// -ln sigma(s_pos_c - s_neu_c) - ln sigma(s_neu_c - s_neg_c)
inline double rank_loss(double s_pos_c, double s_neu_c, double s_neg_c) {
  return softplus(-(s_pos_c - s_neu_c)) + softplus(-(s_neu_c - s_neg_c));
}

inline double pnn_loss(double l_rank, double l_uniform, double l_constrain,
                       double alpha, double beta) {
  return alpha * l_constrain + beta * l_uniform + l_rank;
}

struct AttentionResult {
  double lambda = 0.0;
  double z = 0.0;                   // w1 . aggregated
  std::vector<double> weights;      // softmax over pos_items, sums to 1
  std::vector<double> aggregated;   // sum_i alpha_i e_i
};

// User-aware attention gate: beta_i = e_u^T tanh(W2 e_i + b), alpha =
// softmax(beta), lambda = sigma(w1 . sum alpha_i e_i).
AttentionResult attention_lambda(const ModelParams& p, UserId u,
                                 std::span<const ItemId> pos_items);

// log mean over sampled unordered pairs of exp(-2 ||e_i - e_i'||^2),
// via log-sum-exp. Uses all pairs when they fit the budget. Throws
// ConfigError with fewer than two embeddings.
double uniform_loss(const ModelParams& p, std::span<const ItemId> items,
                    std::int64_t pair_budget, std::mt19937_64& rng);

// Draw clamp noise for the given centroids. Throws DataError on a
// zero-norm centroid (callers drop the term for the batch instead).
ClampNoise clamp_noise(std::span<const double> pos_centroid,
                       std::span<const double> neg_centroid,
                       std::mt19937_64& rng);

// ||delta_pos - delta_neg||^2; the neutral centroid cancels out of the
// clamp-embedding form.
double constrain_loss(const ClampNoise& noise);

// ---------------------------------------------------------------------------
// Per-example loss with gradients
// ---------------------------------------------------------------------------

// Every discrete or random decision of one training example, frozen so the
// loss is a pure function of the parameters given the context. Finite
// differencing perturbs the parameters and replays the same context.
struct ExampleContext {
  UserId user = -1;
  ItemId pos_item = -1;
  ItemId neg_item = -1;         // DNS pick (or uniform fallback draw)
  bool dns_fallback = false;
  bool bpr_only = false;        // no PNN terms for this example
  bool pool_skip = false;       // reason: pool too small (lambda forced to 0)
  bool skipped = false;         // no negative exists at all
  bool kneg_clamped = false;
  ClassPartition part;
  std::vector<ItemId> attn_items;                        // <= M of u's positives
  std::vector<std::pair<std::int32_t, std::int32_t>> uniform_pairs;  // pool indices
  std::vector<double> mag_pos;  // clamp magnitude draws, U(0, 0.1)
  std::vector<double> mag_neg;
};

struct BatchView {
  std::span<const ItemId> items;
  const std::unordered_set<ItemId>* item_set = nullptr;  // same contents
  // Optional precomputed scores of this example's user against `items`
  // (aligned index-for-index). Saves the per-example scoring pass when the
  // trainer batches the dot products.
  std::span<const double> user_scores{};
};

// Runs DNS, pool construction, greedy classification, attention subsampling,
// uniformity-pair sampling and clamp-noise draws under a no-gradient snapshot
// of the scores.
ExampleContext build_context(const ModelParams& p, UserId u, ItemId pos_item,
                             const BatchView& batch,
                             std::span<const ItemId> user_positives,
                             std::int64_t num_items, const LossConfig& cfg,
                             std::mt19937_64& rng);

// Forward-only evaluation of Eq.-style composite loss for a frozen context.
LossBreakdown example_forward(const ModelParams& p, const ExampleContext& ctx,
                              const LossConfig& cfg);

// Dense per-batch gradient accumulators plus touched-row bookkeeping.
struct GradBuffers {
  Matrix d_user;             // num_users x d
  Matrix d_item;             // num_items x d
  std::vector<double> d_w1;  // d
  Matrix d_w2;               // d x d
  std::vector<double> d_b;   // d

  std::vector<UserId> touched_users;
  std::vector<ItemId> touched_items;

  GradBuffers() = default;
  GradBuffers(std::int64_t num_users, std::int64_t num_items, std::int64_t d);
  void touch_user(UserId u);
  void touch_item(ItemId i);
  std::span<double> user_row(UserId u) { return d_user.row(static_cast<std::size_t>(u)); }
  std::span<double> item_row(ItemId i) { return d_item.row(static_cast<std::size_t>(i)); }
  // Zero only what was touched; cheaper than clearing whole tables.
  void clear();
  void add_scaled(const GradBuffers& other, double scale);
  bool all_finite() const;

 private:
  std::vector<char> user_touched_;
  std::vector<char> item_touched_;
};

// Forward pass plus analytic gradients accumulated (summed) into `grads`.
// Gradients flow through lambda and every loss term; discrete selections and
// the clamp magnitudes are constants of the step.
LossBreakdown example_loss(const ModelParams& p, const ExampleContext& ctx,
                           const LossConfig& cfg, GradBuffers& grads);

}  // namespace pnn
