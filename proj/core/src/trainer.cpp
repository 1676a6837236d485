#include "pnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pnn/errors.hpp"
#include "pnn/eval.hpp"
#include "pnn/rng.hpp"

namespace pnn {

namespace {

constexpr std::uint64_t kShuffleTag = 0x65707368ULL;  // "epsh"
constexpr std::uint64_t kExampleTag = 0x6578616dULL;  // "exam"

void adam_tensor(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, double lr,
                 double beta1, double beta2, double eps, double bc1,
                 double bc2) {
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad[k];
    m[k] = beta1 * m[k] + (1.0 - beta1) * g;
    v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
    param[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
  }
}

struct BatchCounters {
  double l_bpr = 0, l_rank = 0, l_uniform = 0, l_constrain = 0, lambda = 0,
         total = 0;
  std::int64_t processed = 0, fallbacks = 0, clamp_drops = 0, kneg_clamps = 0,
               skipped = 0;

  void add(const LossBreakdown& bd) {
    if (bd.skipped) {
      ++skipped;
      return;
    }
    l_bpr += bd.l_bpr;
    l_rank += bd.l_rank;
    l_uniform += bd.l_uniform;
    l_constrain += bd.l_constrain;
    lambda += bd.lambda;
    total += bd.total;
    ++processed;
    if (bd.bpr_fallback) ++fallbacks;
    if (bd.clamp_dropped) ++clamp_drops;
    if (bd.kneg_clamped) ++kneg_clamps;
  }
  void merge(const BatchCounters& o) {
    l_bpr += o.l_bpr;
    l_rank += o.l_rank;
    l_uniform += o.l_uniform;
    l_constrain += o.l_constrain;
    lambda += o.lambda;
    total += o.total;
    processed += o.processed;
    fallbacks += o.fallbacks;
    clamp_drops += o.clamp_drops;
    kneg_clamps += o.kneg_clamps;
    skipped += o.skipped;
  }
};

std::string batch_diagnostic(int epoch, std::size_t batch_index,
                             std::span<const std::pair<UserId, ItemId>> batch) {
  std::ostringstream os;
  os << "non-finite loss or gradient at epoch " << epoch << ", batch "
     << batch_index << "; first pairs:";
  const std::size_t show = std::min<std::size_t>(8, batch.size());
  for (std::size_t k = 0; k < show; ++k) {
    os << " (" << batch[k].first << "," << batch[k].second << ")";
  }
  return os.str();
}

}  // namespace

AdamState AdamState::like(const ModelParams& p) {
  AdamState s;
  s.m_user = Matrix(p.user_emb.rows(), p.user_emb.cols());
  s.v_user = Matrix(p.user_emb.rows(), p.user_emb.cols());
  s.m_item = Matrix(p.item_emb.rows(), p.item_emb.cols());
  s.v_item = Matrix(p.item_emb.rows(), p.item_emb.cols());
  s.m_w1.assign(p.w1.size(), 0.0);
  s.v_w1.assign(p.w1.size(), 0.0);
  s.m_w2 = Matrix(p.w2.rows(), p.w2.cols());
  s.v_w2 = Matrix(p.w2.rows(), p.w2.cols());
  s.m_b.assign(p.b.size(), 0.0);
  s.v_b.assign(p.b.size(), 0.0);
  return s;
}

EpochSummary train_epoch(ModelParams& p, AdamState& opt,
                         const InteractionDataset& ds, const TrainConfig& cfg,
                         int epoch_index, TrainObserver* observer) {
  if (!p.all_finite()) throw NumericError("parameters non-finite before epoch");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::pair<UserId, ItemId>> pairs;
  pairs.reserve(ds.train.size());
  for (const auto& x : ds.train) pairs.emplace_back(x.user, x.item);
  {
    auto rng = make_rng(cfg.seed, kShuffleTag,
                        static_cast<std::uint64_t>(epoch_index));
    std::shuffle(pairs.begin(), pairs.end(), rng);
  }

  // Observer callbacks are inherently ordered; run them single-threaded.
  const int threads = observer ? 1 : std::max(1, cfg.threads);
  std::vector<GradBuffers> grads;
  grads.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    grads.emplace_back(p.num_users, p.num_items, p.d);
  }

  BatchCounters epoch_counters;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  std::size_t batch_index = 0;

  for (std::size_t start = 0; start < pairs.size();
       start += batch_size, ++batch_index) {
    const auto end = std::min(start + batch_size, pairs.size());
    const std::span<const std::pair<UserId, ItemId>> batch_pairs(
        pairs.data() + start, end - start);
    const TrainBatch batch = make_batch(batch_pairs);
    std::unordered_set<ItemId> batch_set(batch.batch_items.begin(),
                                         batch.batch_items.end());

    // Score every distinct batch user against every batch item once, in user
    // tiles so each item row streams through cache once per tile. DNS and
    // classification reuse these instead of per-example dot passes.
    std::vector<UserId> batch_users;
    std::unordered_map<UserId, std::size_t> user_row;
    batch_users.reserve(batch_pairs.size());
    for (const auto& [u, i] : batch_pairs) {
      (void)i;
      if (user_row.emplace(u, batch_users.size()).second) batch_users.push_back(u);
    }
    Matrix batch_scores(batch_users.size(), batch.batch_items.size());
    constexpr std::size_t kUserTile = 8;
    for (std::size_t ub = 0; ub < batch_users.size(); ub += kUserTile) {
      const std::size_t ue = std::min(batch_users.size(), ub + kUserTile);
      for (std::size_t c = 0; c < batch.batch_items.size(); ++c) {
        const auto irow = p.item(batch.batch_items[c]);
        for (std::size_t r = ub; r < ue; ++r) {
          batch_scores(r, c) = dot(p.user(batch_users[r]), irow);
        }
      }
    }

    std::vector<BatchCounters> counters(static_cast<std::size_t>(threads));
    auto run_range = [&](int tid, std::size_t lo, std::size_t hi) {
      auto& buf = grads[static_cast<std::size_t>(tid)];
      auto& ctr = counters[static_cast<std::size_t>(tid)];
      for (std::size_t k = lo; k < hi; ++k) {
        const auto [u, i] = batch_pairs[k];
        auto rng = make_rng(cfg.seed, kExampleTag,
                            static_cast<std::uint64_t>(epoch_index),
                            static_cast<std::uint64_t>(start + k));
        const BatchView view{batch.batch_items, &batch_set,
                             batch_scores.row(user_row.at(u))};
        const ExampleContext ctx =
            build_context(p, u, i, view, ds.positives(u), ds.num_items,
                          cfg.loss, rng);
        const LossBreakdown bd = example_loss(p, ctx, cfg.loss, buf);
        ctr.add(bd);
        if (observer && !bd.skipped) observer->on_example(p, ctx, bd);
      }
    };

    if (threads == 1) {
      run_range(0, 0, batch_pairs.size());
    } else {
      std::vector<std::thread> workers;
      const std::size_t chunk =
          (batch_pairs.size() + static_cast<std::size_t>(threads) - 1) /
          static_cast<std::size_t>(threads);
      for (int t = 0; t < threads; ++t) {
        const std::size_t lo = std::min(batch_pairs.size(),
                                        static_cast<std::size_t>(t) * chunk);
        const std::size_t hi =
            std::min(batch_pairs.size(), lo + chunk);
        workers.emplace_back(run_range, t, lo, hi);
      }
      for (auto& w : workers) w.join();
      // Deterministic reduction order: thread 0 absorbs the rest in index order.
      for (int t = 1; t < threads; ++t) {
        grads[0].add_scaled(grads[static_cast<std::size_t>(t)], 1.0);
        grads[static_cast<std::size_t>(t)].clear();
      }
    }
    BatchCounters batch_counters;
    for (const auto& c : counters) batch_counters.merge(c);
    epoch_counters.merge(batch_counters);

    GradBuffers& g = grads[0];
    if (batch_counters.processed == 0) {
      g.clear();
      continue;
    }
    if (!std::isfinite(batch_counters.total) || !g.all_finite()) {
      throw NumericError(batch_diagnostic(epoch_index, batch_index, batch_pairs));
    }

    // Mean over processed examples, then L2 on everything the batch touched
    // (attention parameters always count as touched).
    const double inv = 1.0 / static_cast<double>(batch_counters.processed);
    for (UserId u : g.touched_users) {
      auto row = g.user_row(u);
      const auto prow = p.user(u);
      for (std::size_t k = 0; k < row.size(); ++k) {
        row[k] = row[k] * inv + cfg.l2 * prow[k];
      }
    }
    for (ItemId i : g.touched_items) {
      auto row = g.item_row(i);
      const auto prow = p.item(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        row[k] = row[k] * inv + cfg.l2 * prow[k];
      }
    }
    for (std::size_t k = 0; k < g.d_w1.size(); ++k) {
      g.d_w1[k] = g.d_w1[k] * inv + cfg.l2 * p.w1[k];
    }
    for (std::size_t k = 0; k < g.d_w2.size(); ++k) {
      g.d_w2.data()[k] = g.d_w2.data()[k] * inv + cfg.l2 * p.w2.data()[k];
    }
    for (std::size_t k = 0; k < g.d_b.size(); ++k) {
      g.d_b[k] = g.d_b[k] * inv + cfg.l2 * p.b[k];
    }

    ++opt.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    adam_tensor({p.user_emb.data(), p.user_emb.size()},
                {g.d_user.data(), g.d_user.size()},
                {opt.m_user.data(), opt.m_user.size()},
                {opt.v_user.data(), opt.v_user.size()}, cfg.lr, opt.beta1,
                opt.beta2, opt.eps, bc1, bc2);
    adam_tensor({p.item_emb.data(), p.item_emb.size()},
                {g.d_item.data(), g.d_item.size()},
                {opt.m_item.data(), opt.m_item.size()},
                {opt.v_item.data(), opt.v_item.size()}, cfg.lr, opt.beta1,
                opt.beta2, opt.eps, bc1, bc2);
    adam_tensor(p.w1, g.d_w1, opt.m_w1, opt.v_w1, cfg.lr, opt.beta1, opt.beta2,
                opt.eps, bc1, bc2);
    adam_tensor({p.w2.data(), p.w2.size()}, {g.d_w2.data(), g.d_w2.size()},
                {opt.m_w2.data(), opt.m_w2.size()},
                {opt.v_w2.data(), opt.v_w2.size()}, cfg.lr, opt.beta1,
                opt.beta2, opt.eps, bc1, bc2);
    adam_tensor(p.b, g.d_b, opt.m_b, opt.v_b, cfg.lr, opt.beta1, opt.beta2,
                opt.eps, bc1, bc2);

    // Projection keeps the attention gate weights in the non-negative cone.
    for (auto& w : p.w1) w = std::max(0.0, w);
    for (std::size_t k = 0; k < p.w2.size(); ++k) {
      p.w2.data()[k] = std::max(0.0, p.w2.data()[k]);
    }

    g.clear();
  }

  EpochSummary summary;
  summary.epoch = epoch_index;
  const double n = std::max<double>(1.0, static_cast<double>(epoch_counters.processed));
  summary.l_bpr = epoch_counters.l_bpr / n;
  summary.l_rank = epoch_counters.l_rank / n;
  summary.l_uniform = epoch_counters.l_uniform / n;
  summary.l_constrain = epoch_counters.l_constrain / n;
  summary.lambda_mean = epoch_counters.lambda / n;
  summary.total = epoch_counters.total / n;
  summary.examples = epoch_counters.processed;
  summary.bpr_fallbacks = epoch_counters.fallbacks;
  summary.clamp_drops = epoch_counters.clamp_drops;
  summary.kneg_clamps = epoch_counters.kneg_clamps;
  summary.skipped = epoch_counters.skipped;
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return summary;
}

std::string EpochSummary::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["l_bpr"] = l_bpr;
  j["l_rank"] = l_rank;
  j["l_uniform"] = l_uniform;
  j["l_constrain"] = l_constrain;
  j["lambda_mean"] = lambda_mean;
  j["total"] = total;
  j["val_ndcg20"] = val_ndcg20;
  if (include_timing) j["seconds"] = seconds;
  j["examples"] = examples;
  j["bpr_fallbacks"] = bpr_fallbacks;
  j["clamp_drops"] = clamp_drops;
  j["kneg_clamps"] = kneg_clamps;
  j["skipped"] = skipped;
  return j.dump();
}

FitResult fit(const InteractionDataset& ds, const TrainConfig& cfg,
              const EpochCallback& on_epoch,
              const ValidationFn& validation_override,
              TrainObserver* observer) {
  FitResult result;
  ModelParams params = init_params(ds.num_users, ds.num_items, cfg.d, cfg.seed);
  AdamState opt = AdamState::like(params);
  result.best = params;

  const bool have_validation =
      static_cast<bool>(validation_override) || !ds.validation.empty();
  double best_val = -std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochSummary summary = train_epoch(params, opt, ds, cfg, epoch, observer);
    const double val = validation_override
                           ? validation_override(params, epoch)
                           : (have_validation
                                  ? validation_ndcg(params, ds, cfg.eval_k)
                                  : 0.0);
    summary.val_ndcg20 = val;
    result.log.push_back(summary);
    if (on_epoch) on_epoch(summary);

    if (!have_validation) {
      // No stopping signal: keep the latest parameters.
      result.best = params;
      result.best_epoch = epoch;
      continue;
    }
    if (val > best_val) {
      best_val = val;
      result.best = params;
      result.best_epoch = epoch;
      result.best_val_ndcg = val;
      stale = 0;
    } else {
      ++stale;
      if (stale >= cfg.patience) break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient audit
// ---------------------------------------------------------------------------

namespace {

double fd_gradient(const ModelParams& p, const ExampleContext& ctx,
                   const LossConfig& cfg, double* slot, double eps) {
  ModelParams& mut = const_cast<ModelParams&>(p);
  const double saved = *slot;
  *slot = saved + eps;
  const double up = example_forward(mut, ctx, cfg).total;
  *slot = saved - eps;
  const double down = example_forward(mut, ctx, cfg).total;
  *slot = saved;
  return (up - down) / (2.0 * eps);
}

double rel_err(double analytic, double fd) {
  const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-3});
  return std::fabs(analytic - fd) / denom;
}

}  // namespace

GradAuditReport grad_audit(std::uint64_t seed, int instances, int d_max) {
  GradAuditReport report;
  report.instances = instances;
  const double eps = report.eps;

  for (int inst = 0; inst < instances; ++inst) {
    auto rng = make_rng(seed, 0x61756474ULL, static_cast<std::uint64_t>(inst));
    const auto d = static_cast<std::int64_t>(
        2 + std::uniform_int_distribution<int>(0, d_max - 2)(rng));
    const std::int64_t num_items = 8 + std::uniform_int_distribution<int>(0, 4)(rng);
    const std::int64_t num_users = 3;

    ModelParams p = init_params(num_users, num_items, d, splitmix64(seed + inst));
    // Spread the parameters so the losses sit away from their stationary
    // points; init scale alone makes every gradient nearly zero.
    std::normal_distribution<double> wide(0.0, 0.6);
    for (std::size_t k = 0; k < p.user_emb.size(); ++k) p.user_emb.data()[k] = wide(rng);
    for (std::size_t k = 0; k < p.item_emb.size(); ++k) p.item_emb.data()[k] = wide(rng);
    for (auto& w : p.w1) w = std::fabs(wide(rng));
    for (std::size_t k = 0; k < p.w2.size(); ++k) p.w2.data()[k] = std::fabs(wide(rng));
    for (auto& x : p.b) x = wide(rng);

    const UserId u = 0;
    const int n_pos = 2 + std::uniform_int_distribution<int>(0, 2)(rng);
    std::vector<ItemId> all_items(static_cast<std::size_t>(num_items));
    for (ItemId i = 0; i < static_cast<ItemId>(num_items); ++i) {
      all_items[static_cast<std::size_t>(i)] = i;
    }
    std::shuffle(all_items.begin(), all_items.end(), rng);
    std::vector<ItemId> user_pos(all_items.begin(), all_items.begin() + n_pos);
    std::sort(user_pos.begin(), user_pos.end());

    const int pool_target =
        3 + std::uniform_int_distribution<int>(0, 3)(rng);  // 3..6
    std::vector<ItemId> batch_items;
    for (ItemId i : all_items) {
      if (static_cast<int>(batch_items.size()) >= pool_target) break;
      if (!std::binary_search(user_pos.begin(), user_pos.end(), i)) {
        batch_items.push_back(i);
      }
    }
    const ItemId pos_item = user_pos[0];
    batch_items.push_back(pos_item);  // DNS must skip it

    LossConfig cfg;
    cfg.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    cfg.beta = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    cfg.lambda_mode = LambdaMode::kAdaptive;
    cfg.pair_budget = 1 << 20;  // every pool pair, exact term

    std::unordered_set<ItemId> batch_set(batch_items.begin(), batch_items.end());
    const BatchView view{batch_items, &batch_set};
    auto ctx_rng = make_rng(seed, 0x63747874ULL, static_cast<std::uint64_t>(inst));
    const ExampleContext ctx = build_context(p, u, pos_item, view, user_pos,
                                             num_items, cfg, ctx_rng);

    GradBuffers grads(num_users, num_items, d);
    example_loss(p, ctx, cfg, grads);

    int checked = 0;
    auto check_span = [&](std::span<double> param, std::span<const double> grad) {
      for (std::size_t k = 0; k < param.size(); ++k) {
        const double fd = fd_gradient(p, ctx, cfg, &param[k], eps);
        report.max_rel_err = std::max(report.max_rel_err, rel_err(grad[k], fd));
        ++checked;
      }
    };
    check_span({p.user_emb.data(), p.user_emb.size()},
               {grads.d_user.data(), grads.d_user.size()});
    check_span({p.item_emb.data(), p.item_emb.size()},
               {grads.d_item.data(), grads.d_item.size()});
    check_span(p.w1, grads.d_w1);
    check_span({p.w2.data(), p.w2.size()}, {grads.d_w2.data(), grads.d_w2.size()});
    check_span(p.b, grads.d_b);
    report.parameters_checked += checked;

    // Structural check: attention gradients vanish exactly when lambda is a
    // fixed constant, and not when it is the trained gate.
    auto linf_attn = [](const GradBuffers& g) {
      double m = 0.0;
      for (double x : g.d_w1) m = std::max(m, std::fabs(x));
      for (std::size_t k = 0; k < g.d_w2.size(); ++k) {
        m = std::max(m, std::fabs(g.d_w2.data()[k]));
      }
      for (double x : g.d_b) m = std::max(m, std::fabs(x));
      return m;
    };
    report.attn_grad_linf_adaptive =
        std::max(report.attn_grad_linf_adaptive, linf_attn(grads));

    LossConfig fixed0 = cfg;
    fixed0.lambda_mode = LambdaMode::kFixed;
    fixed0.lambda_fixed = 0.0;
    GradBuffers grads0(num_users, num_items, d);
    example_loss(p, ctx, fixed0, grads0);
    report.attn_grad_linf_fixed0 =
        std::max(report.attn_grad_linf_fixed0, linf_attn(grads0));
  }
  return report;
}

}  // namespace pnn
