#include "pnn/sampling.hpp"

#include <algorithm>
#include <unordered_set>

#include "pnn/errors.hpp"

namespace pnn {

TrainBatch make_batch(std::span<const std::pair<UserId, ItemId>> pairs) {
  TrainBatch batch;
  batch.pairs.assign(pairs.begin(), pairs.end());
  std::unordered_set<ItemId> seen;
  seen.reserve(pairs.size());
  for (const auto& [u, i] : pairs) {
    (void)u;
    if (seen.insert(i).second) batch.batch_items.push_back(i);
  }
  return batch;
}

std::optional<ItemId> dns_select(const ModelParams& p, UserId u, ItemId pos_item,
                                 std::span<const ItemId> batch_items,
                                 std::span<const ItemId> user_positives) {
  bool found = false;
  double best_score = 0.0;
  ItemId best = -1;
  const auto e_u = p.user(u);
  for (ItemId n : batch_items) {
    if (n == pos_item) continue;
    // Excluding all of u's known positives, not just the current one,
    // avoids labeling an observed positive as the negative sample.
    if (std::binary_search(user_positives.begin(), user_positives.end(), n)) {
      continue;
    }
    const double s = dot(e_u, p.item(n));
    if (!found || s > best_score || (s == best_score && n < best)) {
      found = true;
      best_score = s;
      best = n;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

std::vector<ItemId> build_pool(std::span<const ItemId> batch_items,
                               std::span<const ItemId> user_positives) {
  std::vector<ItemId> pool;
  pool.reserve(batch_items.size());
  for (ItemId i : batch_items) {
    if (!std::binary_search(user_positives.begin(), user_positives.end(), i)) {
      pool.push_back(i);
    }
  }
  return pool;
}

ClassPartition classify_with_scores(std::vector<ItemId> pool,
                                    std::span<const double> scores, int k_neg) {
  const auto n = pool.size();
  if (k_neg < 1 || static_cast<std::size_t>(k_neg) > n - 1 || n < 2) {
    throw ConfigError("classify: k_neg must satisfy 1 <= k_neg <= |pool|-1");
  }

  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  auto lower = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return pool[a] < pool[b];
  };
  std::nth_element(order.begin(), order.begin() + (k_neg - 1), order.end(),
                   lower);

  ClassPartition part;
  part.k_neg = k_neg;
  part.neg.reserve(static_cast<std::size_t>(k_neg));
  part.neu.reserve(n - static_cast<std::size_t>(k_neg));
  for (std::size_t k = 0; k < n; ++k) {
    if (k < static_cast<std::size_t>(k_neg)) {
      part.neg.push_back(pool[order[k]]);
    } else {
      part.neu.push_back(pool[order[k]]);
    }
  }
  std::sort(part.neg.begin(), part.neg.end());
  std::sort(part.neu.begin(), part.neu.end());
  part.pool = std::move(pool);
  return part;
}

ClassPartition classify(const ModelParams& p, UserId u,
                        std::vector<ItemId> pool, int k_neg) {
  std::vector<double> scores(pool.size());
  const auto e_u = p.user(u);
  for (std::size_t k = 0; k < pool.size(); ++k) {
    scores[k] = dot(e_u, p.item(pool[k]));
  }
  return classify_with_scores(std::move(pool), scores, k_neg);
}

std::vector<ItemId> greedy_negatives_full(const ModelParams& p, UserId u,
                                          std::span<const ItemId> user_positives,
                                          int count) {
  std::vector<ItemId> unlabeled;
  unlabeled.reserve(static_cast<std::size_t>(p.num_items));
  for (ItemId i = 0; i < static_cast<ItemId>(p.num_items); ++i) {
    if (!std::binary_search(user_positives.begin(), user_positives.end(), i)) {
      unlabeled.push_back(i);
    }
  }
  if (count < 0 || static_cast<std::size_t>(count) > unlabeled.size()) {
    throw ConfigError("greedy_negatives_full: count exceeds unlabeled items");
  }

  std::vector<double> scores(unlabeled.size());
  const auto e_u = p.user(u);
  for (std::size_t k = 0; k < unlabeled.size(); ++k) {
    scores[k] = dot(e_u, p.item(unlabeled[k]));
  }
  std::vector<std::size_t> order(unlabeled.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  auto lower = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return unlabeled[a] < unlabeled[b];
  };
  std::partial_sort(order.begin(), order.begin() + count, order.end(), lower);

  std::vector<ItemId> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(unlabeled[order[static_cast<std::size_t>(k)]]);
  return out;
}

}  // namespace pnn
