#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "pnn/errors.hpp"
#include "pnn/rng.hpp"

namespace pnn::testsupport {

std::vector<std::pair<int, int>> synth_interactions(const SynthSpec& spec) {
  auto rng = make_rng(spec.seed, 0x73796e74ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(1e-12, 1.0);
  std::exponential_distribution<double> expo(1.0 / spec.mean_extra);

  const double factor_sd = std::pow(static_cast<double>(spec.latent_d), -0.25);
  std::vector<double> user_f(static_cast<std::size_t>(spec.users) * spec.latent_d);
  std::vector<double> item_f(static_cast<std::size_t>(spec.items) * spec.latent_d);
  std::vector<double> item_pop(static_cast<std::size_t>(spec.items));
  for (auto& x : user_f) x = factor_sd * normal(rng);
  for (auto& x : item_f) x = factor_sd * normal(rng);
  for (auto& x : item_pop) x = spec.popularity_sd * normal(rng);

  std::vector<std::pair<int, int>> rows;
  std::vector<std::pair<double, int>> utilities(
      static_cast<std::size_t>(spec.items));
  for (int u = 0; u < spec.users; ++u) {
    const int extra = static_cast<int>(expo(rng));
    const int n_u = std::min(spec.max_per_user,
                             std::min(spec.items, spec.min_per_user + extra));
    const double* zu = &user_f[static_cast<std::size_t>(u) * spec.latent_d];
    for (int i = 0; i < spec.items; ++i) {
      const double* wi = &item_f[static_cast<std::size_t>(i) * spec.latent_d];
      double s = item_pop[static_cast<std::size_t>(i)];
      for (int k = 0; k < spec.latent_d; ++k) s += zu[k] * wi[k];
      const double gumbel = -std::log(-std::log(unif(rng)));
      utilities[static_cast<std::size_t>(i)] = {s / spec.temperature + gumbel, i};
    }
    std::partial_sort(utilities.begin(), utilities.begin() + n_u,
                      utilities.end(), std::greater<>());
    for (int k = 0; k < n_u; ++k) {
      rows.emplace_back(u, utilities[static_cast<std::size_t>(k)].second);
    }
  }
  return rows;
}

void write_interactions(const std::string& path,
                        const std::vector<std::pair<int, int>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& [u, i] : rows) out << u << '\t' << i << '\n';
}

InteractionDataset synth_dataset(const SynthSpec& spec,
                                 std::uint64_t split_seed) {
  const std::string path =
      "/tmp/pnn_synth_" + std::to_string(spec.seed) + "_" +
      std::to_string(spec.users) + "x" + std::to_string(spec.items) + ".tsv";
  write_interactions(path, synth_interactions(spec));
  return split(ingest(path), SplitRatios{}, split_seed);
}

InteractionDataset micro_dataset(int users, int items, int min_items,
                                 int max_items, std::uint64_t seed,
                                 bool do_split) {
  auto rng = make_rng(seed, 0x6d696372ULL);
  std::vector<std::pair<int, int>> rows;
  std::vector<int> all(static_cast<std::size_t>(items));
  for (int i = 0; i < items; ++i) all[static_cast<std::size_t>(i)] = i;
  for (int u = 0; u < users; ++u) {
    std::shuffle(all.begin(), all.end(), rng);
    std::uniform_int_distribution<int> cnt(min_items, max_items);
    const int n = std::min(items, cnt(rng));
    for (int k = 0; k < n; ++k) rows.emplace_back(u, all[static_cast<std::size_t>(k)]);
  }

  const std::string path = "/tmp/pnn_micro_" + std::to_string(seed) + ".tsv";
  write_interactions(path, rows);
  auto ds = ingest(path);
  if (do_split) ds = split(std::move(ds), SplitRatios{}, seed);
  return ds;
}

}  // namespace pnn::testsupport
