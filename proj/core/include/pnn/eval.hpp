#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/model.hpp"

namespace pnn {

struct EvalConfig {
  std::vector<int> ks = {10, 20};
  int mrr_k = 10;
  std::vector<double> deltas = {0.5, 1.0};
};

struct TopKMetrics {
  double recall = 0.0;
  double hit = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::vector<int> ks;
  int mrr_k = 10;
  // "recall@10", "hit@10", "ndcg@10", ..., "mrr@10", "opauc@0.5", ...
  std::map<std::string, double> means;
  std::map<std::string, std::vector<double>> per_user;  // retained for t-tests
  std::vector<UserId> evaluated_users;
  std::int64_t num_evaluated_users = 0;
  std::int64_t opauc_skipped_users = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  std::string to_json(bool include_timing = false) const;
  static EvalReport from_json(const std::string& text);
};

// All non-excluded items sorted by score descending, ties to the lowest id.
std::vector<ItemId> rank_items(const ModelParams& p, UserId u,
                               std::span<const ItemId> exclude);

// Standard binary-relevance top-K metrics; IDCG normalizes over
// min(K, |test_items|). test_items must be sorted.
TopKMetrics topk_metrics(std::span<const ItemId> ranked,
                         std::span<const ItemId> test_items, int K);

// 1/rank of the first relevant item within the top K, else 0.
double mrr(std::span<const ItemId> ranked, std::span<const ItemId> test_items,
           int K);

// One-way partial AUC at FPR range [0, delta]: S holds the ceil(|neg|*delta)
// highest-scoring candidate negatives; pairs with equal scores count 0.
double opauc(const ModelParams& p, UserId u, std::span<const ItemId> test_pos,
             std::span<const ItemId> candidate_negatives, double delta);

// Full evaluation over test users with at least one test item. Ranking
// excludes train+validation positives; OPAUC candidate negatives are all
// items outside train/validation/test positives.
EvalReport evaluate(const ModelParams& p, const InteractionDataset& ds,
                    const EvalConfig& cfg = EvalConfig{});

// Fast validation-time metric: mean NDCG@K over users with validation items,
// ranking all items outside u's train positives.
double validation_ndcg(const ModelParams& p, const InteractionDataset& ds,
                       int K);

// ---------------------------------------------------------------------------
// Seedwise aggregation
// ---------------------------------------------------------------------------

struct MetricAggregate {
  double mean_system = 0.0;
  double std_system = 0.0;
  double mean_baseline = 0.0;
  double std_baseline = 0.0;
  double mean_diff = 0.0;    // system - baseline
  double t_stat = 0.0;
  double p_one_sided = 1.0;  // H1: system > baseline
  double p_two_sided = 1.0;
  bool zero_variance = false;
};

struct AggregateSummary {
  int runs = 0;
  std::map<std::string, MetricAggregate> metrics;

  std::string to_json() const;
  // rows = metrics, columns = systems (mean, std) plus p-values.
  std::string to_csv(const std::string& system_name,
                     const std::string& baseline_name) const;
};

// Paired one- and two-sided t-tests over per-seed means. Requires equal
// counts and matched seeds; throws ConfigError otherwise. With zero variance
// of the differences, p collapses to 0 (positive mean diff) or 1, flagged.
AggregateSummary aggregate_runs(std::span<const EvalReport> system,
                                std::span<const EvalReport> baseline);

}  // namespace pnn
