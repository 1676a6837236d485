#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pnn/dataset.hpp"

namespace pnn::testsupport {

// Latent-factor generative corpus at a chosen scale: per-user interaction
// counts follow min + Exp(mean_extra), items are drawn without replacement
// via Gumbel-top-k over (z_u . w_i + b_i)/temperature. Deterministic per
// seed. Defaults mimic the MovieLens-100K shape (943 users, 1682 items,
// ~100k interactions, >= 20 per user).
struct SynthSpec {
  int users = 943;
  int items = 1682;
  int latent_d = 12;
  double popularity_sd = 0.9;
  double temperature = 0.55;
  int min_per_user = 20;
  double mean_extra = 86.0;
  int max_per_user = 400;
  std::uint64_t seed = 20240901;
};

std::vector<std::pair<int, int>> synth_interactions(const SynthSpec& spec);

// Write rows as "user<TAB>item" lines suitable for ingest().
void write_interactions(const std::string& path,
                        const std::vector<std::pair<int, int>>& rows);

// Convenience: generate, write to a temp file, ingest and split 8:1:1.
InteractionDataset synth_dataset(const SynthSpec& spec, std::uint64_t split_seed);

// Tiny random dataset for trainer unit tests: every user gets
// [min_items, max_items] distinct items uniformly.
InteractionDataset micro_dataset(int users, int items, int min_items,
                                 int max_items, std::uint64_t seed,
                                 bool do_split = true);

}  // namespace pnn::testsupport
