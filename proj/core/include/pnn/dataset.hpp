#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pnn {

using UserId = std::int32_t;
using ItemId = std::int32_t;

constexpr std::int64_t kNoTimestamp = -1;

struct Interaction {
  UserId user = -1;
  ItemId item = -1;
  std::int64_t timestamp = kNoTimestamp;  // provenance only, unused by the model

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Raw string id <-> dense contiguous id, assigned in first-appearance order.
struct IdMaps {
  std::vector<std::string> user_raw;  // dense -> raw
  std::vector<std::string> item_raw;
  std::unordered_map<std::string, UserId> user_dense;  // raw -> dense
  std::unordered_map<std::string, ItemId> item_dense;
};

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

// Indexed interaction log with train/validation/test partitions. Immutable
// once built; safe to share read-only across threads.
struct InteractionDataset {
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  // Per-user sorted list of train-positive item ids; size is N_u.
  std::vector<std::vector<ItemId>> user_pos_index;
  IdMaps ids;

  bool is_split = false;
  SplitRatios ratios;
  std::uint64_t split_seed = 0;

  const std::vector<ItemId>& positives(UserId u) const {
    return user_pos_index[static_cast<std::size_t>(u)];
  }
  bool is_train_positive(UserId u, ItemId i) const;
  void rebuild_user_pos_index();
};

// Column layout of a delimited interaction file. Descriptor characters:
// 'u' user, 'i' item, 't' timestamp, 'x' skip. "uixt" reads the classic
// MovieLens u.data layout (user, item, rating ignored, timestamp).
struct ColumnFormat {
  int user_col = 0;
  int item_col = 1;
  int time_col = 2;  // -1 when absent; may be missing on short lines

  static ColumnFormat parse(const std::string& descriptor);  // throws ConfigError
};

struct NoiseLedger {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::pair<UserId, ItemId>> flipped;  // removed train positives

  std::string to_json() const;
  static NoiseLedger from_json(const std::string& text);
};

// Read a delimited interaction log. '#' lines are comments; duplicate
// (user,item) pairs collapse to one interaction keeping the earliest
// timestamp. The result is unsplit: everything sits in `train`.
InteractionDataset ingest(const std::string& path,
                          const ColumnFormat& fmt = ColumnFormat{});

// Per-user seeded shuffle followed by proportional assignment. Validation
// and test sizes round down; the remainder stays in train, so every user
// keeps at least one train item. Partitions are stored sorted by
// (user, item) so snapshots are canonical.
InteractionDataset split(InteractionDataset ds, const SplitRatios& ratios,
                         std::uint64_t seed);

// Remove round(fraction * |train|) uniformly sampled train interactions;
// they re-enter the unlabeled pool. Validation and test are untouched.
std::pair<InteractionDataset, NoiseLedger> inject_noise(InteractionDataset ds,
                                                        double fraction,
                                                        std::uint64_t seed);

// Versioned text snapshot. Writing the same dataset twice produces
// byte-identical files.
void save_dataset(const InteractionDataset& ds, const std::string& path);
InteractionDataset load_dataset(const std::string& path);

}  // namespace pnn
