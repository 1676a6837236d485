#include "pnn/losses.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "pnn/errors.hpp"
#include "pnn/rng.hpp"

namespace pnn {

namespace {

// A centroid direction shorter than this cannot be normalized reliably;
// the clamp term is dropped for the example instead.
constexpr double kDegenerateNorm = 1e-12;

// ---------------------------------------------------------------------------
// Attention forward pass with the caches the backward pass needs.
// ---------------------------------------------------------------------------

struct AttentionCache {
  Matrix h;            // M x d: tanh(W2 e_a + b)
  Matrix dtanh;        // M x d: 1 - h^2
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> agg;  // sum_a alpha_a e_a
  double z = 0.0;
  double lambda = 0.0;
};

void attention_forward(const ModelParams& p, UserId u,
                       std::span<const ItemId> items, AttentionCache& att) {
  assert(!items.empty());
  const auto d = static_cast<std::size_t>(p.d);
  const auto m = items.size();
  const auto e_u = p.user(u);

  att.h = Matrix(m, d);
  att.dtanh = Matrix(m, d);
  att.beta.assign(m, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    const auto e_a = p.item(items[t]);
    auto h_row = att.h.row(t);
    auto dt_row = att.dtanh.row(t);
    double beta_t = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      const double pre = dot(p.w2.row(r), e_a) + p.b[r];
      const double h = std::tanh(pre);
      h_row[r] = h;
      dt_row[r] = 1.0 - h * h;
      beta_t += e_u[r] * h;
    }
    att.beta[t] = beta_t;
  }

  // Max-subtracted softmax.
  const double mx = *std::max_element(att.beta.begin(), att.beta.end());
  att.alpha.assign(m, 0.0);
  double denom = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    att.alpha[t] = std::exp(att.beta[t] - mx);
    denom += att.alpha[t];
  }
  for (auto& a : att.alpha) a /= denom;

  att.agg.assign(d, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    axpy(att.alpha[t], p.item(items[t]), att.agg);
  }
  att.z = dot(std::span<const double>(p.w1), att.agg);
  att.lambda = sigmoid(att.z);
}

// ---------------------------------------------------------------------------
// Uniformity term over sampled pool pairs
// ---------------------------------------------------------------------------

// Decode the t-th unordered pair (i < j) of n elements in lexicographic
// order. cum(i) = i*n - i*(i+1)/2 pairs precede row i.
std::pair<std::int32_t, std::int32_t> decode_pair(std::int64_t n,
                                                  std::int64_t t) {
  auto cum = [n](std::int64_t i) { return i * n - i * (i + 1) / 2; };
  const double nn = static_cast<double>(n);
  auto i = static_cast<std::int64_t>(
      std::floor(nn - 0.5 - std::sqrt((nn - 0.5) * (nn - 0.5) - 2.0 * static_cast<double>(t))));
  if (i < 0) i = 0;
  while (i + 1 < n && cum(i + 1) <= t) ++i;
  while (i > 0 && cum(i) > t) --i;
  const std::int64_t j = t - cum(i) + i + 1;
  return {static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)};
}

std::vector<std::pair<std::int32_t, std::int32_t>> sample_pairs(
    std::int64_t n, std::int64_t budget, std::mt19937_64& rng) {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  if (n < 2 || budget < 1) return pairs;
  const std::int64_t total = n * (n - 1) / 2;
  if (total <= budget) {
    pairs.reserve(static_cast<std::size_t>(total));
    for (std::int32_t i = 0; i + 1 < n; ++i) {
      for (std::int32_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
  }
  // Floyd's sampling of `budget` distinct pair indices.
  pairs.reserve(static_cast<std::size_t>(budget));
  std::unordered_set<std::int64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(budget) * 2);
  for (std::int64_t t = total - budget; t < total; ++t) {
    std::uniform_int_distribution<std::int64_t> dist(0, t);
    const std::int64_t r = dist(rng);
    const std::int64_t pick = chosen.insert(r).second ? r : (chosen.insert(t), t);
    pairs.push_back(decode_pair(n, pick));
  }
  return pairs;
}

struct UniformTerm {
  double value = 0.0;
  std::vector<double> d2;      // squared distances per pair
  std::vector<double> weight;  // softmax weights p_k (only when requested)
};

UniformTerm uniform_term(const ModelParams& p, std::span<const ItemId> items,
                         std::span<const std::pair<std::int32_t, std::int32_t>> pairs,
                         bool want_weights) {
  UniformTerm term;
  const auto m = pairs.size();
  assert(m > 0);
  term.d2.resize(m);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    const auto [a, b] = pairs[k];
    term.d2[k] = squared_distance(p.item(items[static_cast<std::size_t>(a)]),
                                  p.item(items[static_cast<std::size_t>(b)]));
    mx = std::max(mx, -2.0 * term.d2[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) sum += std::exp(-2.0 * term.d2[k] - mx);
  const double lse = mx + std::log(sum);
  term.value = lse - std::log(static_cast<double>(m));
  if (want_weights) {
    term.weight.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      term.weight[k] = std::exp(-2.0 * term.d2[k] - lse);
    }
  }
  return term;
}

}  // namespace

AttentionResult attention_lambda(const ModelParams& p, UserId u,
                                 std::span<const ItemId> pos_items) {
  if (pos_items.empty()) {
    throw ConfigError("attention_lambda: positive item list is empty");
  }
  AttentionCache att;
  attention_forward(p, u, pos_items, att);
  AttentionResult res;
  res.lambda = att.lambda;
  res.z = att.z;
  res.weights = std::move(att.alpha);
  res.aggregated = std::move(att.agg);
  return res;
}

double uniform_loss(const ModelParams& p, std::span<const ItemId> items,
                    std::int64_t pair_budget, std::mt19937_64& rng) {
  if (items.size() < 2) {
    throw ConfigError("uniform_loss: need at least two embeddings");
  }
  if (pair_budget < 1) throw ConfigError("uniform_loss: pair budget must be >= 1");
  const auto pairs =
      sample_pairs(static_cast<std::int64_t>(items.size()), pair_budget, rng);
  return uniform_term(p, items, pairs, /*want_weights=*/false).value;
}

ClampNoise clamp_noise(std::span<const double> pos_centroid,
                       std::span<const double> neg_centroid,
                       std::mt19937_64& rng) {
  const double rp = norm2(pos_centroid);
  const double rn = norm2(neg_centroid);
  if (rp < kDegenerateNorm || rn < kDegenerateNorm) {
    throw DataError("clamp_noise: zero-norm centroid has no direction");
  }
  const auto d = pos_centroid.size();
  ClampNoise noise;
  noise.mag_pos.resize(d);
  noise.mag_neg.resize(d);
  std::uniform_real_distribution<double> mag(0.0, 0.1);
  for (auto& x : noise.mag_pos) x = mag(rng);
  for (auto& x : noise.mag_neg) x = mag(rng);
  noise.delta_pos.resize(d);
  noise.delta_neg.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    noise.delta_pos[k] = noise.mag_pos[k] * pos_centroid[k] / rp;
    noise.delta_neg[k] = noise.mag_neg[k] * neg_centroid[k] / rn;
  }
  return noise;
}

double constrain_loss(const ClampNoise& noise) {
  return squared_distance(noise.delta_pos, noise.delta_neg);
}

// ---------------------------------------------------------------------------
// GradBuffers
// ---------------------------------------------------------------------------

GradBuffers::GradBuffers(std::int64_t num_users, std::int64_t num_items,
                         std::int64_t d)
    : d_user(static_cast<std::size_t>(num_users), static_cast<std::size_t>(d)),
      d_item(static_cast<std::size_t>(num_items), static_cast<std::size_t>(d)),
      d_w1(static_cast<std::size_t>(d), 0.0),
      d_w2(static_cast<std::size_t>(d), static_cast<std::size_t>(d)),
      d_b(static_cast<std::size_t>(d), 0.0),
      user_touched_(static_cast<std::size_t>(num_users), 0),
      item_touched_(static_cast<std::size_t>(num_items), 0) {}

void GradBuffers::touch_user(UserId u) {
  auto& flag = user_touched_[static_cast<std::size_t>(u)];
  if (!flag) {
    flag = 1;
    touched_users.push_back(u);
  }
}

void GradBuffers::touch_item(ItemId i) {
  auto& flag = item_touched_[static_cast<std::size_t>(i)];
  if (!flag) {
    flag = 1;
    touched_items.push_back(i);
  }
}

void GradBuffers::clear() {
  for (UserId u : touched_users) {
    auto row = d_user.row(static_cast<std::size_t>(u));
    std::fill(row.begin(), row.end(), 0.0);
    user_touched_[static_cast<std::size_t>(u)] = 0;
  }
  for (ItemId i : touched_items) {
    auto row = d_item.row(static_cast<std::size_t>(i));
    std::fill(row.begin(), row.end(), 0.0);
    item_touched_[static_cast<std::size_t>(i)] = 0;
  }
  touched_users.clear();
  touched_items.clear();
  std::fill(d_w1.begin(), d_w1.end(), 0.0);
  d_w2.fill(0.0);
  std::fill(d_b.begin(), d_b.end(), 0.0);
}

void GradBuffers::add_scaled(const GradBuffers& other, double scale) {
  for (UserId u : other.touched_users) {
    touch_user(u);
    axpy(scale, other.d_user.row(static_cast<std::size_t>(u)), user_row(u));
  }
  for (ItemId i : other.touched_items) {
    touch_item(i);
    axpy(scale, other.d_item.row(static_cast<std::size_t>(i)), item_row(i));
  }
  axpy(scale, other.d_w1, d_w1);
  axpy(scale, std::span<const double>(other.d_w2.data(), other.d_w2.size()),
       std::span<double>(d_w2.data(), d_w2.size()));
  axpy(scale, other.d_b, d_b);
}

bool GradBuffers::all_finite() const {
  auto finite_row = [](std::span<const double> row) {
    for (double x : row) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  for (UserId u : touched_users) {
    if (!finite_row(d_user.row(static_cast<std::size_t>(u)))) return false;
  }
  for (ItemId i : touched_items) {
    if (!finite_row(d_item.row(static_cast<std::size_t>(i)))) return false;
  }
  return finite_row(d_w1) &&
         finite_row(std::span<const double>(d_w2.data(), d_w2.size())) &&
         finite_row(d_b);
}

// ---------------------------------------------------------------------------
// Context construction: every discrete/random decision of one example.
// ---------------------------------------------------------------------------

namespace {

ItemId draw_uniform_negative(std::span<const ItemId> user_positives,
                             std::int64_t num_items, std::mt19937_64& rng) {
  std::uniform_int_distribution<ItemId> dist(
      0, static_cast<ItemId>(num_items - 1));
  while (true) {
    const ItemId cand = dist(rng);
    if (!std::binary_search(user_positives.begin(), user_positives.end(),
                            cand)) {
      return cand;
    }
  }
}

}  // namespace

ExampleContext build_context(const ModelParams& p, UserId u, ItemId pos_item,
                             const BatchView& batch,
                             std::span<const ItemId> user_positives,
                             std::int64_t num_items, const LossConfig& cfg,
                             std::mt19937_64& rng) {
  ExampleContext ctx;
  ctx.user = u;
  ctx.pos_item = pos_item;

  if (static_cast<std::int64_t>(user_positives.size()) >= num_items) {
    // Nothing outside u's positives exists; no pairwise term is computable.
    ctx.skipped = true;
    return ctx;
  }

  const bool need_pool = cfg.sampler == NegSampler::kDns || !cfg.bpr_only;
  std::vector<ItemId> pool;
  std::vector<double> pool_scores;
  if (need_pool) {
    pool.reserve(batch.items.size());
    pool_scores.reserve(batch.items.size());
    if (batch.user_scores.empty()) {
      const auto e_u = p.user(u);
      for (ItemId i : batch.items) {
        if (!std::binary_search(user_positives.begin(), user_positives.end(), i)) {
          pool.push_back(i);
          pool_scores.push_back(dot(e_u, p.item(i)));
        }
      }
    } else {
      for (std::size_t k = 0; k < batch.items.size(); ++k) {
        const ItemId i = batch.items[k];
        if (!std::binary_search(user_positives.begin(), user_positives.end(), i)) {
          pool.push_back(i);
          pool_scores.push_back(batch.user_scores[k]);
        }
      }
    }
  }

  // Negative sample. DNS candidates coincide with the pool: the batch minus
  // all of u's positives (which include pos_item).
  if (cfg.sampler == NegSampler::kDns && !pool.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < pool.size(); ++k) {
      if (pool_scores[k] > pool_scores[best] ||
          (pool_scores[k] == pool_scores[best] && pool[k] < pool[best])) {
        best = k;
      }
    }
    ctx.neg_item = pool[best];
  } else {
    ctx.neg_item = draw_uniform_negative(user_positives, num_items, rng);
    ctx.dns_fallback = cfg.sampler == NegSampler::kDns;
  }

  if (cfg.bpr_only) {
    ctx.bpr_only = true;
    return ctx;
  }
  if (pool.size() < 2) {
    ctx.bpr_only = true;
    ctx.pool_skip = true;
    return ctx;
  }

  int k_neg = cfg.k_neg_override;
  if (k_neg <= 0) {
    // Batch-scale mirror of the |Sigma_neg| = N_u size rule: how many of
    // u's positives appear in this batch, floored at 1.
    int present = 0;
    for (ItemId i : user_positives) {
      if (batch.item_set->contains(i)) ++present;
    }
    k_neg = std::max(1, present);
  }
  const int k_max = static_cast<int>(pool.size()) - 1;
  if (k_neg > k_max) {
    k_neg = k_max;
    ctx.kneg_clamped = true;
  }
  ctx.part = classify_with_scores(std::move(pool), pool_scores, k_neg);

  if (cfg.lambda_mode == LambdaMode::kAdaptive) {
    const auto n_u = user_positives.size();
    const auto m = std::min<std::size_t>(static_cast<std::size_t>(cfg.attn_cap), n_u);
    if (m == n_u) {
      ctx.attn_items.assign(user_positives.begin(), user_positives.end());
    } else {
      std::vector<ItemId> copy(user_positives.begin(), user_positives.end());
      for (std::size_t k = 0; k < m; ++k) {
        std::uniform_int_distribution<std::size_t> dist(k, copy.size() - 1);
        std::swap(copy[k], copy[dist(rng)]);
      }
      copy.resize(m);
      ctx.attn_items = std::move(copy);
    }
  }

  if (cfg.use_uniform) {
    ctx.uniform_pairs = sample_pairs(
        static_cast<std::int64_t>(ctx.part.pool.size()), cfg.pair_budget, rng);
  }

  if (cfg.use_constrain) {
    const auto d = static_cast<std::size_t>(p.d);
    ctx.mag_pos.resize(d);
    ctx.mag_neg.resize(d);
    std::uniform_real_distribution<double> mag(0.0, 0.1);
    for (auto& x : ctx.mag_pos) x = mag(rng);
    for (auto& x : ctx.mag_neg) x = mag(rng);
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Loss forward + analytic gradients
// ---------------------------------------------------------------------------

namespace {

LossBreakdown compute_example(const ModelParams& p, const ExampleContext& ctx,
                              const LossConfig& cfg, GradBuffers* g) {
  LossBreakdown out;
  out.alpha = cfg.alpha;
  out.beta = cfg.beta;
  out.bpr_fallback = ctx.pool_skip;
  out.kneg_clamped = ctx.kneg_clamped;
  out.skipped = ctx.skipped;
  if (ctx.skipped) return out;

  const auto d = static_cast<std::size_t>(p.d);
  const UserId u = ctx.user;
  const auto e_u = p.user(u);
  const auto e_i = p.item(ctx.pos_item);
  const auto e_j = p.item(ctx.neg_item);

  // Gate. Pool-skipped examples force lambda to 0; the baseline runs with
  // lambda identically 0; otherwise fixed constant or the attention gate.
  const bool adaptive = !ctx.bpr_only && cfg.lambda_mode == LambdaMode::kAdaptive;
  AttentionCache att;
  double lambda = 0.0;
  if (adaptive) {
    attention_forward(p, u, ctx.attn_items, att);
    lambda = att.lambda;
  } else if (!ctx.bpr_only) {
    lambda = cfg.lambda_fixed;
  }
  out.lambda = lambda;

  const double x = dot(e_u, e_i) - dot(e_u, e_j);
  out.l_bpr = softplus(-x);

  std::vector<double> c_neu, c_neg;
  double g1 = 0.0, g2 = 0.0;
  UniformTerm uni;
  std::vector<double> unit_pos, unit_neg, clamp_v;
  double rp = 0.0, rn = 0.0;
  if (!ctx.bpr_only) {
    // In-batch relaxation: the positive class of the example is {pos_item},
    // so the positive centroid is e_i itself.
    c_neu = centroid(ctx.part.neu, p);
    c_neg = centroid(ctx.part.neg, p);

    if (cfg.use_rank) {
      const double sp = dot(e_u, std::span<const double>(e_i));
      const double sm = dot(e_u, std::span<const double>(c_neu));
      const double sn = dot(e_u, std::span<const double>(c_neg));
      out.l_rank = rank_loss(sp, sm, sn);
      g1 = -sigmoid(-(sp - sm));
      g2 = -sigmoid(-(sm - sn));
    }

    if (cfg.use_uniform && !ctx.uniform_pairs.empty()) {
      uni = uniform_term(p, ctx.part.pool, ctx.uniform_pairs, g != nullptr);
      out.l_uniform = uni.value;
    }

    if (cfg.use_constrain) {
      rp = norm2(std::span<const double>(e_i));
      rn = norm2(c_neg);
      if (rp < kDegenerateNorm || rn < kDegenerateNorm) {
        out.clamp_dropped = true;
      } else {
        unit_pos.resize(d);
        unit_neg.resize(d);
        clamp_v.resize(d);
        double l_con = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          unit_pos[k] = e_i[k] / rp;
          unit_neg[k] = c_neg[k] / rn;
          clamp_v[k] = ctx.mag_pos[k] * unit_pos[k] - ctx.mag_neg[k] * unit_neg[k];
          l_con += clamp_v[k] * clamp_v[k];
        }
        out.l_constrain = l_con;
      }
    }
  }

  out.l_pnn = pnn_loss(out.l_rank, out.l_uniform, out.l_constrain, cfg.alpha,
                       cfg.beta);
  out.total = (1.0 - lambda) * out.l_bpr + lambda * out.l_pnn;
  if (!g) return out;

  // ----- gradients -----
  const double cb = 1.0 - lambda;  // BPR branch coefficient
  const double cp = lambda;        // PNN branch coefficient

  g->touch_user(u);
  g->touch_item(ctx.pos_item);
  g->touch_item(ctx.neg_item);
  auto du = g->user_row(u);

  // BPR: d l_bpr / d x = -sigma(-x)
  const double gb = -sigmoid(-x);
  if (cb != 0.0) {
    axpy(cb * gb, e_i, du);
    axpy(-cb * gb, e_j, du);
    axpy(cb * gb, e_u, g->item_row(ctx.pos_item));
    axpy(-cb * gb, e_u, g->item_row(ctx.neg_item));
  }

  if (!ctx.bpr_only && cp != 0.0) {
    const double inv_neu = 1.0 / static_cast<double>(ctx.part.neu.size());
    const double inv_neg = 1.0 / static_cast<double>(ctx.part.neg.size());

    if (cfg.use_rank) {
      axpy(cp * g1, e_i, du);
      axpy(cp * (-g1 + g2), c_neu, du);
      axpy(cp * (-g2), c_neg, du);
      axpy(cp * g1, e_u, g->item_row(ctx.pos_item));
      const double w_neu = cp * (-g1 + g2) * inv_neu;
      for (ItemId mitem : ctx.part.neu) {
        g->touch_item(mitem);
        axpy(w_neu, e_u, g->item_row(mitem));
      }
      const double w_neg = cp * (-g2) * inv_neg;
      for (ItemId nitem : ctx.part.neg) {
        g->touch_item(nitem);
        axpy(w_neg, e_u, g->item_row(nitem));
      }
    }

    if (cfg.use_uniform && !ctx.uniform_pairs.empty()) {
      // d l_uni / d d2_k = -2 p_k; d d2 / d e_a = 2 (e_a - e_b).
      for (std::size_t k = 0; k < ctx.uniform_pairs.size(); ++k) {
        const auto [ai, bi] = ctx.uniform_pairs[k];
        const ItemId a = ctx.part.pool[static_cast<std::size_t>(ai)];
        const ItemId bitem = ctx.part.pool[static_cast<std::size_t>(bi)];
        const double coef = cp * cfg.beta * (-4.0) * uni.weight[k];
        if (coef == 0.0) continue;
        g->touch_item(a);
        g->touch_item(bitem);
        const auto e_a = p.item(a);
        const auto e_b = p.item(bitem);
        auto ga = g->item_row(a);
        auto gbrow = g->item_row(bitem);
        for (std::size_t kk = 0; kk < d; ++kk) {
          const double diff = e_a[kk] - e_b[kk];
          ga[kk] += coef * diff;
          gbrow[kk] -= coef * diff;
        }
      }
    }

    if (cfg.use_constrain && !out.clamp_dropped) {
      // v = mag_pos . unit_pos - mag_neg . unit_neg, l = ||v||^2.
      // Through a unit vector: d(c/r)/dc = (I - uu^T)/r.
      std::vector<double> gp(d), gn(d);
      for (std::size_t k = 0; k < d; ++k) {
        gp[k] = 2.0 * clamp_v[k] * ctx.mag_pos[k];
        gn[k] = -2.0 * clamp_v[k] * ctx.mag_neg[k];
      }
      const double proj_p = dot(unit_pos, gp);
      const double proj_n = dot(unit_neg, gn);
      const double coef = cp * cfg.alpha;
      auto gi = g->item_row(ctx.pos_item);
      for (std::size_t k = 0; k < d; ++k) {
        gi[k] += coef * (gp[k] - proj_p * unit_pos[k]) / rp;
      }
      const double inv_rn_neg = 1.0 / (rn * static_cast<double>(ctx.part.neg.size()));
      for (ItemId nitem : ctx.part.neg) {
        g->touch_item(nitem);
        auto gnrow = g->item_row(nitem);
        for (std::size_t k = 0; k < d; ++k) {
          gnrow[k] += coef * (gn[k] - proj_n * unit_neg[k]) * inv_rn_neg;
        }
      }
    }
  }

  if (adaptive) {
    // lambda multiplies both branches: dL/dz = (l_pnn - l_bpr) l (1-l).
    const double glam = (out.l_pnn - out.l_bpr) * lambda * (1.0 - lambda);
    if (glam != 0.0) {
      axpy(glam, att.agg, std::span<double>(g->d_w1));

      const auto m = ctx.attn_items.size();
      std::vector<double> q(m);
      double qbar = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        q[t] = dot(std::span<const double>(p.w1), p.item(ctx.attn_items[t]));
        qbar += att.alpha[t] * q[t];
      }
      std::vector<double> eut(d), wtv(d);
      for (std::size_t t = 0; t < m; ++t) {
        const ItemId a = ctx.attn_items[t];
        const double gamma = att.alpha[t] * (q[t] - qbar);
        const auto e_a = p.item(a);
        const auto dt = att.dtanh.row(t);

        axpy(glam * gamma, att.h.row(t), du);

        for (std::size_t r = 0; r < d; ++r) eut[r] = e_u[r] * dt[r];
        for (std::size_t r = 0; r < d; ++r) {
          g->d_b[r] += glam * gamma * eut[r];
          const double c_r = glam * gamma * eut[r];
          if (c_r != 0.0) axpy(c_r, e_a, g->d_w2.row(r));
        }
        // W2^T (e_u . dtanh)
        std::fill(wtv.begin(), wtv.end(), 0.0);
        for (std::size_t r = 0; r < d; ++r) {
          if (eut[r] != 0.0) axpy(eut[r], p.w2.row(r), wtv);
        }
        g->touch_item(a);
        auto garow = g->item_row(a);
        for (std::size_t c = 0; c < d; ++c) {
          garow[c] += glam * (att.alpha[t] * p.w1[c] + gamma * wtv[c]);
        }
      }
    }
  }

  return out;
}

}  // namespace

LossBreakdown example_forward(const ModelParams& p, const ExampleContext& ctx,
                              const LossConfig& cfg) {
  return compute_example(p, ctx, cfg, nullptr);
}

LossBreakdown example_loss(const ModelParams& p, const ExampleContext& ctx,
                           const LossConfig& cfg, GradBuffers& grads) {
  return compute_example(p, ctx, cfg, &grads);
}

}  // namespace pnn
