#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/matrix.hpp"

namespace pnn {

// All trainable state: embedding tables plus the attention gate parameters.
// w1 and w2 stay elementwise non-negative outside an optimizer step (the
// trainer projects them back after each update).
struct ModelParams {
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;
  std::int64_t d = 0;
  std::uint64_t seed = 0;

  Matrix user_emb;          // num_users x d
  Matrix item_emb;          // num_items x d
  std::vector<double> w1;   // 1 x d, non-negative
  Matrix w2;                // d x d, non-negative
  std::vector<double> b;    // d

  std::span<const double> user(UserId u) const {
    return user_emb.row(static_cast<std::size_t>(u));
  }
  std::span<const double> item(ItemId i) const {
    return item_emb.row(static_cast<std::size_t>(i));
  }
  bool all_finite() const;
};

// Embeddings ~ N(0, 0.1^2); w1, w2 = |N(0, 0.1^2)|; b = 0. Deterministic
// per seed.
ModelParams init_params(std::int64_t num_users, std::int64_t num_items,
                        std::int64_t d, std::uint64_t seed);

// Inner product of e_u with an arbitrary d-vector.
inline double score(const ModelParams& p, UserId u, std::span<const double> v) {
  return dot(p.user(u), v);
}

inline double score_item(const ModelParams& p, UserId u, ItemId i) {
  return dot(p.user(u), p.item(i));
}

// Arithmetic mean of the member embeddings. Throws on an empty set.
std::vector<double> centroid(std::span<const ItemId> items,
                             const ModelParams& p);

// Binary checkpoint: magic, version, shapes, seed, then the five tensors as
// row-major little-endian doubles (layout documented in the README).
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace pnn
