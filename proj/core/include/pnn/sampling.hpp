#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/model.hpp"

namespace pnn {

struct TrainBatch {
  std::vector<std::pair<UserId, ItemId>> pairs;
  std::vector<ItemId> batch_items;  // deduplicated positives, batch order
};

TrainBatch make_batch(std::span<const std::pair<UserId, ItemId>> pairs);

// Per-example assignment of the in-batch unlabeled pool into negative and
// neutral classes. neg holds the k_neg lowest-scoring pool items, neu the
// rest; both are stored sorted by item id.
struct ClassPartition {
  std::vector<ItemId> pool;
  std::vector<ItemId> neg;
  std::vector<ItemId> neu;
  int k_neg = 0;
};

// Batch-style dynamic negative sampling: the highest-scoring batch item
// outside u's train positives (ties to the lowest id). nullopt means the
// candidate set was empty and the caller must resample uniformly.
std::optional<ItemId> dns_select(const ModelParams& p, UserId u, ItemId pos_item,
                                 std::span<const ItemId> batch_items,
                                 std::span<const ItemId> user_positives);

// batch_items minus u's train positives, batch order preserved.
std::vector<ItemId> build_pool(std::span<const ItemId> batch_items,
                               std::span<const ItemId> user_positives);

// Greedy split of the pool by current score. Requires 1 <= k_neg <= |pool|-1
// (the neutral class must stay non-empty); throws ConfigError otherwise.
ClassPartition classify(const ModelParams& p, UserId u,
                        std::vector<ItemId> pool, int k_neg);

// Same split given precomputed pool scores (scores[k] belongs to pool[k]).
ClassPartition classify_with_scores(std::vector<ItemId> pool,
                                    std::span<const double> scores, int k_neg);

// Full-catalog greedy negative selection: iteratively take the lowest-scoring
// unlabeled item, `count` times. Offline diagnostic only; training always
// uses the in-batch pool.
std::vector<ItemId> greedy_negatives_full(const ModelParams& p, UserId u,
                                          std::span<const ItemId> user_positives,
                                          int count);

}  // namespace pnn
