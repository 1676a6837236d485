#include "pnn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "pnn/errors.hpp"

namespace pnn {

namespace {

std::string metric_key(const char* name, int k) {
  return std::string(name) + "@" + std::to_string(k);
}

std::string opauc_key(double delta) {
  // Trim trailing zeros for stable, readable keys ("opauc@0.5").
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", delta);
  return std::string("opauc@") + buf;
}

// ceil(n * delta) with a guard against floating fuzz on exact multiples.
std::int64_t top_subset_size(std::int64_t n, double delta) {
  return static_cast<std::int64_t>(
      std::ceil(static_cast<double>(n) * delta - 1e-9));
}

}  // namespace

std::vector<ItemId> rank_items(const ModelParams& p, UserId u,
                               std::span<const ItemId> exclude) {
  std::vector<char> excluded(static_cast<std::size_t>(p.num_items), 0);
  for (ItemId i : exclude) excluded[static_cast<std::size_t>(i)] = 1;

  std::vector<ItemId> out;
  out.reserve(static_cast<std::size_t>(p.num_items) - exclude.size());
  std::vector<double> scores(static_cast<std::size_t>(p.num_items));
  const auto e_u = p.user(u);
  for (ItemId i = 0; i < static_cast<ItemId>(p.num_items); ++i) {
    if (excluded[static_cast<std::size_t>(i)]) continue;
    scores[static_cast<std::size_t>(i)] = dot(e_u, p.item(i));
    out.push_back(i);
  }
  std::sort(out.begin(), out.end(), [&](ItemId a, ItemId b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return out;
}

TopKMetrics topk_metrics(std::span<const ItemId> ranked,
                         std::span<const ItemId> test_items, int K) {
  if (test_items.empty()) {
    throw ConfigError("topk_metrics: empty test set must be skipped upstream");
  }
  TopKMetrics m;
  const auto k_end = std::min<std::size_t>(static_cast<std::size_t>(K), ranked.size());
  double dcg = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k_end; ++r) {
    if (std::binary_search(test_items.begin(), test_items.end(), ranked[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);  // rank r+1
    }
  }
  double idcg = 0.0;
  const auto ideal = std::min<std::size_t>(static_cast<std::size_t>(K), test_items.size());
  for (std::size_t r = 0; r < ideal; ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  m.recall = static_cast<double>(hits) / static_cast<double>(test_items.size());
  m.hit = hits > 0 ? 1.0 : 0.0;
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  return m;
}

double mrr(std::span<const ItemId> ranked, std::span<const ItemId> test_items,
           int K) {
  const auto k_end = std::min<std::size_t>(static_cast<std::size_t>(K), ranked.size());
  for (std::size_t r = 0; r < k_end; ++r) {
    if (std::binary_search(test_items.begin(), test_items.end(), ranked[r])) {
      return 1.0 / (static_cast<double>(r) + 1.0);
    }
  }
  return 0.0;
}

namespace {

// Estimator core on raw scores. Ties in the top-subset selection break by
// item id; indicator pairs with equal scores count zero.
double opauc_from_scores(std::span<const double> pos_scores,
                         std::vector<std::pair<double, ItemId>> neg,
                         double delta) {
  const auto s = top_subset_size(static_cast<std::int64_t>(neg.size()), delta);
  std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  neg.resize(static_cast<std::size_t>(s));
  std::vector<double> top_scores(neg.size());
  for (std::size_t k = 0; k < neg.size(); ++k) top_scores[k] = neg[k].first;
  std::sort(top_scores.begin(), top_scores.end());

  std::int64_t wins = 0;
  for (double sp : pos_scores) {
    wins += std::lower_bound(top_scores.begin(), top_scores.end(), sp) -
            top_scores.begin();
  }
  return static_cast<double>(wins) /
         (static_cast<double>(pos_scores.size()) * static_cast<double>(s));
}

}  // namespace

double opauc(const ModelParams& p, UserId u, std::span<const ItemId> test_pos,
             std::span<const ItemId> candidate_negatives, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw ConfigError("opauc: delta must lie in (0, 1]");
  }
  if (test_pos.empty() || candidate_negatives.empty()) {
    throw ConfigError("opauc: positive and negative sets must be non-empty");
  }
  const auto e_u = p.user(u);
  std::vector<double> pos_scores;
  pos_scores.reserve(test_pos.size());
  for (ItemId i : test_pos) pos_scores.push_back(dot(e_u, p.item(i)));
  std::vector<std::pair<double, ItemId>> neg;
  neg.reserve(candidate_negatives.size());
  for (ItemId j : candidate_negatives) neg.emplace_back(dot(e_u, p.item(j)), j);
  return opauc_from_scores(pos_scores, std::move(neg), delta);
}

EvalReport evaluate(const ModelParams& p, const InteractionDataset& ds,
                    const EvalConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::vector<ItemId>> val_items(
      static_cast<std::size_t>(ds.num_users));
  std::vector<std::vector<ItemId>> test_items(
      static_cast<std::size_t>(ds.num_users));
  for (const auto& x : ds.validation) {
    val_items[static_cast<std::size_t>(x.user)].push_back(x.item);
  }
  for (const auto& x : ds.test) {
    test_items[static_cast<std::size_t>(x.user)].push_back(x.item);
  }
  for (auto& v : val_items) std::sort(v.begin(), v.end());
  for (auto& v : test_items) std::sort(v.begin(), v.end());

  EvalReport report;
  report.ks = cfg.ks;
  report.mrr_k = cfg.mrr_k;
  report.seed = p.seed;
  for (int K : cfg.ks) {
    report.per_user[metric_key("recall", K)] = {};
    report.per_user[metric_key("hit", K)] = {};
    report.per_user[metric_key("ndcg", K)] = {};
  }
  report.per_user[metric_key("mrr", cfg.mrr_k)] = {};
  for (double delta : cfg.deltas) report.per_user[opauc_key(delta)] = {};

  const auto n_items = static_cast<std::size_t>(ds.num_items);
  std::vector<double> scores(n_items);
  std::vector<char> excluded(n_items);
  std::vector<char> known(n_items);  // train + val + test positives

  for (UserId u = 0; u < static_cast<UserId>(ds.num_users); ++u) {
    const auto& test = test_items[static_cast<std::size_t>(u)];
    if (test.empty()) continue;

    const auto e_u = p.user(u);
    for (std::size_t i = 0; i < n_items; ++i) {
      scores[i] = dot(e_u, p.item(static_cast<ItemId>(i)));
      excluded[i] = 0;
      known[i] = 0;
    }
    for (ItemId i : ds.positives(u)) {
      excluded[static_cast<std::size_t>(i)] = 1;
      known[static_cast<std::size_t>(i)] = 1;
    }
    for (ItemId i : val_items[static_cast<std::size_t>(u)]) {
      excluded[static_cast<std::size_t>(i)] = 1;
      known[static_cast<std::size_t>(i)] = 1;
    }
    for (ItemId i : test) known[static_cast<std::size_t>(i)] = 1;

    std::vector<ItemId> ranked;
    ranked.reserve(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
      if (!excluded[i]) ranked.push_back(static_cast<ItemId>(i));
    }
    std::sort(ranked.begin(), ranked.end(), [&](ItemId a, ItemId b) {
      const double sa = scores[static_cast<std::size_t>(a)];
      const double sb = scores[static_cast<std::size_t>(b)];
      if (sa != sb) return sa > sb;
      return a < b;
    });

    for (int K : cfg.ks) {
      const auto m = topk_metrics(ranked, test, K);
      report.per_user[metric_key("recall", K)].push_back(m.recall);
      report.per_user[metric_key("hit", K)].push_back(m.hit);
      report.per_user[metric_key("ndcg", K)].push_back(m.ndcg);
    }
    report.per_user[metric_key("mrr", cfg.mrr_k)].push_back(
        mrr(ranked, test, cfg.mrr_k));

    // OPAUC: positives are the test items, candidate negatives everything
    // the user never touched in any partition.
    std::vector<double> pos_scores;
    pos_scores.reserve(test.size());
    for (ItemId i : test) pos_scores.push_back(scores[static_cast<std::size_t>(i)]);
    std::vector<std::pair<double, ItemId>> neg;
    for (std::size_t i = 0; i < n_items; ++i) {
      if (!known[i]) neg.emplace_back(scores[i], static_cast<ItemId>(i));
    }
    if (neg.empty()) {
      ++report.opauc_skipped_users;
      for (double delta : cfg.deltas) {
        report.per_user[opauc_key(delta)].push_back(
            std::numeric_limits<double>::quiet_NaN());
      }
    } else {
      for (double delta : cfg.deltas) {
        report.per_user[opauc_key(delta)].push_back(
            opauc_from_scores(pos_scores, neg, delta));
      }
    }

    report.evaluated_users.push_back(u);
  }

  report.num_evaluated_users =
      static_cast<std::int64_t>(report.evaluated_users.size());
  for (auto& [key, values] : report.per_user) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (double v : values) {
      if (std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    report.means[key] = n > 0 ? sum / static_cast<double>(n) : 0.0;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

double validation_ndcg(const ModelParams& p, const InteractionDataset& ds,
                       int K) {
  std::vector<std::vector<ItemId>> val_items(
      static_cast<std::size_t>(ds.num_users));
  for (const auto& x : ds.validation) {
    val_items[static_cast<std::size_t>(x.user)].push_back(x.item);
  }

  const auto n_items = static_cast<std::size_t>(ds.num_items);
  std::vector<double> scores(n_items);
  std::vector<ItemId> cands;
  std::vector<ItemId> topk;
  double sum = 0.0;
  std::int64_t users = 0;

  for (UserId u = 0; u < static_cast<UserId>(ds.num_users); ++u) {
    auto& val = val_items[static_cast<std::size_t>(u)];
    if (val.empty()) continue;
    std::sort(val.begin(), val.end());

    const auto e_u = p.user(u);
    for (std::size_t i = 0; i < n_items; ++i) {
      scores[i] = dot(e_u, p.item(static_cast<ItemId>(i)));
    }
    cands.clear();
    const auto& pos = ds.positives(u);
    for (ItemId i = 0; i < static_cast<ItemId>(n_items); ++i) {
      if (!std::binary_search(pos.begin(), pos.end(), i)) cands.push_back(i);
    }
    auto better = [&](ItemId a, ItemId b) {
      const double sa = scores[static_cast<std::size_t>(a)];
      const double sb = scores[static_cast<std::size_t>(b)];
      if (sa != sb) return sa > sb;
      return a < b;
    };
    const auto k_end = std::min<std::size_t>(static_cast<std::size_t>(K), cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k_end),
                      cands.end(), better);
    topk.assign(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k_end));
    sum += topk_metrics(topk, val, K).ndcg;
    ++users;
  }
  return users > 0 ? sum / static_cast<double>(users) : 0.0;
}

// ---------------------------------------------------------------------------
// Report serialization and seedwise aggregation
// ---------------------------------------------------------------------------

std::string EvalReport::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  j["ks"] = ks;
  j["mrr_k"] = mrr_k;
  j["seed"] = seed;
  j["num_evaluated_users"] = num_evaluated_users;
  j["opauc_skipped_users"] = opauc_skipped_users;
  j["means"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : means) j["means"][k] = v;
  j["per_user"] = nlohmann::ordered_json::object();
  for (const auto& [k, values] : per_user) {
    auto arr = nlohmann::ordered_json::array();
    for (double v : values) {
      if (std::isnan(v)) {
        arr.push_back(nullptr);
      } else {
        arr.push_back(v);
      }
    }
    j["per_user"][k] = std::move(arr);
  }
  j["users"] = evaluated_users;
  if (include_timing) j["wall_seconds"] = wall_seconds;
  return j.dump();
}

EvalReport EvalReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EvalReport r;
  r.ks = j.at("ks").get<std::vector<int>>();
  r.mrr_k = j.at("mrr_k").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.num_evaluated_users = j.at("num_evaluated_users").get<std::int64_t>();
  r.opauc_skipped_users = j.at("opauc_skipped_users").get<std::int64_t>();
  for (const auto& [k, v] : j.at("means").items()) r.means[k] = v.get<double>();
  for (const auto& [k, arr] : j.at("per_user").items()) {
    std::vector<double> values;
    values.reserve(arr.size());
    for (const auto& v : arr) {
      values.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                   : v.get<double>());
    }
    r.per_user[k] = std::move(values);
  }
  r.evaluated_users = j.at("users").get<std::vector<UserId>>();
  if (j.contains("wall_seconds")) r.wall_seconds = j["wall_seconds"].get<double>();
  return r;
}

namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace

AggregateSummary aggregate_runs(std::span<const EvalReport> system,
                                std::span<const EvalReport> baseline) {
  if (system.empty() || system.size() != baseline.size()) {
    throw ConfigError("aggregate_runs: need equal non-empty run counts");
  }
  const auto n = system.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (system[k].seed != baseline[k].seed) {
      throw ConfigError("aggregate_runs: seeds of paired runs must match");
    }
  }

  AggregateSummary summary;
  summary.runs = static_cast<int>(n);
  for (const auto& [key, value] : system[0].means) {
    (void)value;
    std::vector<double> xs(n), ys(n), diff(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto xit = system[k].means.find(key);
      const auto yit = baseline[k].means.find(key);
      if (xit == system[k].means.end() || yit == baseline[k].means.end()) {
        throw ConfigError("aggregate_runs: metric '" + key +
                          "' missing from a run");
      }
      xs[k] = xit->second;
      ys[k] = yit->second;
      diff[k] = xs[k] - ys[k];
    }

    MetricAggregate agg;
    agg.mean_system = mean_of(xs);
    agg.std_system = sample_std(xs, agg.mean_system);
    agg.mean_baseline = mean_of(ys);
    agg.std_baseline = sample_std(ys, agg.mean_baseline);
    agg.mean_diff = mean_of(diff);
    const double sd = sample_std(diff, agg.mean_diff);

    if (sd == 0.0 || n < 2) {
      agg.zero_variance = true;
      agg.t_stat = agg.mean_diff == 0.0 ? 0.0
                   : (agg.mean_diff > 0.0 ? 1e300 : -1e300);
      agg.p_one_sided = agg.mean_diff > 0.0 ? 0.0 : 1.0;
      agg.p_two_sided = agg.mean_diff == 0.0 ? 1.0 : 0.0;
    } else {
      agg.t_stat = agg.mean_diff /
                   (sd / std::sqrt(static_cast<double>(n)));
      const boost::math::students_t dist(static_cast<double>(n - 1));
      agg.p_one_sided = boost::math::cdf(boost::math::complement(dist, agg.t_stat));
      agg.p_two_sided =
          2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(agg.t_stat)));
    }
    summary.metrics.emplace(key, agg);
  }
  return summary;
}

std::string AggregateSummary::to_json() const {
  nlohmann::ordered_json j;
  j["runs"] = runs;
  auto m = nlohmann::ordered_json::object();
  for (const auto& [key, agg] : metrics) {
    m[key] = {{"mean_system", agg.mean_system},
              {"std_system", agg.std_system},
              {"mean_baseline", agg.mean_baseline},
              {"std_baseline", agg.std_baseline},
              {"mean_diff", agg.mean_diff},
              {"t", agg.t_stat},
              {"p_one_sided", agg.p_one_sided},
              {"p_two_sided", agg.p_two_sided},
              {"zero_variance", agg.zero_variance}};
  }
  j["metrics"] = std::move(m);
  return j.dump(2);
}

std::string AggregateSummary::to_csv(const std::string& system_name,
                                     const std::string& baseline_name) const {
  std::string out = "metric," + system_name + "_mean," + system_name + "_std," +
                    baseline_name + "_mean," + baseline_name +
                    "_std,diff,p_one_sided,p_two_sided\n";
  char buf[256];
  for (const auto& [key, agg] : metrics) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6g,%.6g\n",
                  key.c_str(), agg.mean_system, agg.std_system,
                  agg.mean_baseline, agg.std_baseline, agg.mean_diff,
                  agg.p_one_sided, agg.p_two_sided);
    out += buf;
  }
  return out;
}

}  // namespace pnn
