#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "pnn/errors.hpp"
#include "pnn/losses.hpp"
#include "pnn/rng.hpp"

using namespace pnn;

namespace {

// Frozen with an extended-precision scalar oracle (mpmath, 40 digits).
constexpr double kLn2 = 0.6931471805599453;
constexpr double kSoftplusNeg20 = 2.0611536203143807e-9;   // ln(1+e^-20)
constexpr double kSoftplusPos1 = 1.3132616875182228;       // ln(1+e^1)
constexpr double kTwoLn2 = 1.3862943611198906;
constexpr double kRankGaps2020 = 4.1223072406287614e-9;    // 2 ln(1+e^-20)
constexpr double kRankGaps0Neg1 = 2.0064088680781681;      // ln2 + ln(1+e)
constexpr double kUniformThree = -2.3399886129885962;      // log[(2e^-2+e^-4)/3]
constexpr double kAlphaA = 0.6816997421945262;             // softmax(tanh 1, 0)
constexpr double kSigma1 = 0.7310585786300049;

ModelParams worked_model() {
  auto p = init_params(1, 5, 2, 1);
  p.user_emb(0, 0) = 1.0;  p.user_emb(0, 1) = 0.0;
  p.item_emb(0, 0) = 1.0;  p.item_emb(0, 1) = 0.0;   // a: positive / attention
  p.item_emb(1, 0) = 0.0;  p.item_emb(1, 1) = 1.0;   // b: attention
  p.item_emb(2, 0) = 0.2;  p.item_emb(2, 1) = -0.3;  // c: pool -> neutral
  p.item_emb(3, 0) = -0.5; p.item_emb(3, 1) = 0.1;   // d: pool -> negative
  p.item_emb(4, 0) = 0.0;  p.item_emb(4, 1) = 0.0;
  p.w1 = {1.0, 1.0};
  p.w2.fill(0.0);
  p.w2(0, 0) = 1.0;
  p.w2(1, 1) = 1.0;
  p.b = {0.0, 0.0};
  return p;
}

ExampleContext worked_context() {
  ExampleContext ctx;
  ctx.user = 0;
  ctx.pos_item = 0;
  ctx.neg_item = 2;
  ctx.part.pool = {2, 3};
  ctx.part.neg = {3};
  ctx.part.neu = {2};
  ctx.part.k_neg = 1;
  ctx.attn_items = {0, 1};
  ctx.uniform_pairs = {{0, 1}};
  ctx.mag_pos = {0.06, 0.02};
  ctx.mag_neg = {0.03, 0.08};
  return ctx;
}

LossConfig worked_config() {
  LossConfig cfg;
  cfg.alpha = 0.4;
  cfg.beta = 0.3;
  cfg.lambda_mode = LambdaMode::kAdaptive;
  return cfg;
}

// Central finite difference of example_forward's total w.r.t. one slot.
double fd_total(ModelParams& p, const ExampleContext& ctx, const LossConfig& cfg,
                double* slot, double eps = 1e-5) {
  const double saved = *slot;
  *slot = saved + eps;
  const double up = example_forward(p, ctx, cfg).total;
  *slot = saved - eps;
  const double down = example_forward(p, ctx, cfg).total;
  *slot = saved;
  return (up - down) / (2.0 * eps);
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-3});
}

double worst_grad_error(ModelParams& p, const ExampleContext& ctx,
                        const LossConfig& cfg, const GradBuffers& grads) {
  double worst = 0.0;
  for (std::size_t k = 0; k < p.user_emb.size(); ++k) {
    worst = std::max(worst, rel_err(grads.d_user.data()[k],
                                    fd_total(p, ctx, cfg, &p.user_emb.data()[k])));
  }
  for (std::size_t k = 0; k < p.item_emb.size(); ++k) {
    worst = std::max(worst, rel_err(grads.d_item.data()[k],
                                    fd_total(p, ctx, cfg, &p.item_emb.data()[k])));
  }
  for (std::size_t k = 0; k < p.w1.size(); ++k) {
    worst = std::max(worst, rel_err(grads.d_w1[k], fd_total(p, ctx, cfg, &p.w1[k])));
  }
  for (std::size_t k = 0; k < p.w2.size(); ++k) {
    worst = std::max(worst, rel_err(grads.d_w2.data()[k],
                                    fd_total(p, ctx, cfg, &p.w2.data()[k])));
  }
  for (std::size_t k = 0; k < p.b.size(); ++k) {
    worst = std::max(worst, rel_err(grads.d_b[k], fd_total(p, ctx, cfg, &p.b[k])));
  }
  return worst;
}

}  // namespace

TEST_CASE("bpr_loss matches the scalar oracle") {
  CHECK(std::fabs(bpr_loss(0.7, 0.7) - kLn2) < 1e-12);
  CHECK(std::fabs(bpr_loss(20.0, 0.0) - kSoftplusNeg20) < 1e-21);
  CHECK(std::fabs(bpr_loss(0.0, 1.0) - kSoftplusPos1) < 1e-12);
  // Stable far into both tails.
  CHECK(bpr_loss(1000.0, 0.0) >= 0.0);
  CHECK(std::isfinite(bpr_loss(-1000.0, 0.0)));
}

TEST_CASE("rank_loss values and translation invariance") {
  CHECK(std::fabs(rank_loss(0.3, 0.3, 0.3) - kTwoLn2) < 1e-12);
  CHECK(std::fabs(rank_loss(40.0, 20.0, 0.0) - kRankGaps2020) < 1e-21);
  CHECK(std::fabs(rank_loss(0.0, 0.0, 1.0) - kRankGaps0Neg1) < 1e-12);

  auto rng = make_rng(42);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = normal(rng), b = normal(rng), c = normal(rng);
    const double shift = normal(rng);
    CHECK(std::fabs(rank_loss(a + shift, b + shift, c + shift) -
                    rank_loss(a, b, c)) <= 1e-12);
  }
}

TEST_CASE("attention gate: zero w1, singleton softmax, worked example") {
  auto p = worked_model();

  SUBCASE("w1 = 0 gives lambda exactly one half") {
    p.w1 = {0.0, 0.0};
    const std::vector<ItemId> items{0, 1, 2};
    const auto res = attention_lambda(p, 0, items);
    CHECK(res.lambda == 0.5);
  }

  SUBCASE("single positive item gets weight 1") {
    const std::vector<ItemId> items{3};
    const auto res = attention_lambda(p, 0, items);
    REQUIRE(res.weights.size() == 1);
    CHECK(res.weights[0] == 1.0);
  }

  SUBCASE("d=2 worked example") {
    const std::vector<ItemId> items{0, 1};
    const auto res = attention_lambda(p, 0, items);
    CHECK(std::fabs(res.weights[0] - kAlphaA) < 1e-12);
    CHECK(std::fabs(res.weights[1] - (1.0 - kAlphaA)) < 1e-12);
    CHECK(std::fabs(res.aggregated[0] - kAlphaA) < 1e-12);
    CHECK(std::fabs(res.z - 1.0) < 1e-12);
    CHECK(std::fabs(res.lambda - kSigma1) < 1e-12);
  }

  SUBCASE("weights sum to one and lambda stays inside (0,1)") {
    auto rng = make_rng(99);
    std::normal_distribution<double> normal(0.0, 1.5);
    for (int rep = 0; rep < 50; ++rep) {
      auto q = init_params(2, 8, 4, rng());
      for (std::size_t k = 0; k < q.user_emb.size(); ++k) q.user_emb.data()[k] = normal(rng);
      for (std::size_t k = 0; k < q.item_emb.size(); ++k) q.item_emb.data()[k] = normal(rng);
      std::vector<ItemId> items{0, 1, 2, 3, 4};
      const auto res = attention_lambda(q, 0, items);
      double sum = 0.0;
      for (double w : res.weights) sum += w;
      CHECK(std::fabs(sum - 1.0) < 1e-12);
      CHECK(res.lambda > 0.0);
      CHECK(res.lambda < 1.0);
    }
  }

  SUBCASE("empty positive list is rejected") {
    CHECK_THROWS_AS(attention_lambda(p, 0, std::vector<ItemId>{}), ConfigError);
  }
}

TEST_CASE("uniform_loss: exact values, sampling, stability, sign") {
  auto p = init_params(1, 6, 2, 1);
  auto rng = make_rng(4);

  SUBCASE("identical embeddings give 0") {
    p.item_emb.fill(0.25);
    const std::vector<ItemId> items{0, 1, 2, 3};
    CHECK(std::fabs(uniform_loss(p, items, 1024, rng)) < 1e-12);
  }

  SUBCASE("two vectors at squared distance 1 give -2") {
    p.item_emb(0, 0) = 0.0; p.item_emb(0, 1) = 0.0;
    p.item_emb(1, 0) = 1.0; p.item_emb(1, 1) = 0.0;
    const std::vector<ItemId> items{0, 1};
    CHECK(std::fabs(uniform_loss(p, items, 16, rng) - (-2.0)) < 1e-12);
  }

  SUBCASE("three-vector example matches the brute-force oracle") {
    p.item_emb(0, 0) = 0.0; p.item_emb(0, 1) = 0.0;
    p.item_emb(1, 0) = 1.0; p.item_emb(1, 1) = 0.0;
    p.item_emb(2, 0) = 0.0; p.item_emb(2, 1) = 1.0;
    const std::vector<ItemId> items{0, 1, 2};
    const double got = uniform_loss(p, items, 16, rng);
    CHECK(std::fabs(got - kUniformThree) < 1e-12);
    // Recompute from scratch over all three pairs.
    const double oracle = std::log((std::exp(-2.0 * 1.0) + std::exp(-2.0 * 1.0) +
                                    std::exp(-2.0 * 2.0)) / 3.0);
    CHECK(std::fabs(got - oracle) < 1e-12);
  }

  SUBCASE("log-sum-exp keeps far-apart embeddings finite") {
    p.item_emb.fill(0.0);
    p.item_emb(1, 0) = 100.0;  // squared distance 1e4
    const std::vector<ItemId> items{0, 1};
    CHECK(std::fabs(uniform_loss(p, items, 16, rng) - (-2e4)) < 1e-8);
  }

  SUBCASE("budget sampling is deterministic and value is non-positive") {
    auto q = init_params(1, 40, 3, 9);
    std::vector<ItemId> items;
    for (ItemId i = 0; i < 40; ++i) items.push_back(i);
    auto r1 = make_rng(123);
    auto r2 = make_rng(123);
    const double v1 = uniform_loss(q, items, 50, r1);  // 780 pairs, sampled
    const double v2 = uniform_loss(q, items, 50, r2);
    CHECK(v1 == v2);
    CHECK(v1 <= 0.0);
  }

  SUBCASE("fewer than two embeddings is an error") {
    const std::vector<ItemId> one{0};
    CHECK_THROWS_AS(uniform_loss(p, one, 16, rng), ConfigError);
  }
}

TEST_CASE("clamp noise construction and constrain loss") {
  SUBCASE("deltas are magnitudes times unit directions") {
    const std::vector<double> pos{1.0, 0.0};
    const std::vector<double> neg{0.0, 1.0};
    auto rng = make_rng(8);
    const auto noise = clamp_noise(pos, neg, rng);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(noise.mag_pos[k] >= 0.0);
      CHECK(noise.mag_pos[k] <= 0.1);
      CHECK(noise.mag_neg[k] >= 0.0);
      CHECK(noise.mag_neg[k] <= 0.1);
    }
    CHECK(noise.delta_pos[0] == noise.mag_pos[0]);
    CHECK(noise.delta_pos[1] == 0.0);
    CHECK(noise.delta_neg[0] == 0.0);
    CHECK(noise.delta_neg[1] == noise.mag_neg[1]);
  }

  SUBCASE("worked direction example") {
    ClampNoise noise;
    noise.mag_pos = {0.1, 0.1};
    noise.mag_neg = {0.1, 0.1};
    noise.delta_pos = {0.1, 0.0};  // pos = (1,0)
    noise.delta_neg = {0.0, 0.1};  // neg = (0,1)
    CHECK(std::fabs(constrain_loss(noise) - 0.02) < 1e-12);
  }

  SUBCASE("zero noise and identical deltas give exactly zero") {
    ClampNoise zero;
    zero.delta_pos = {0.0, 0.0, 0.0};
    zero.delta_neg = {0.0, 0.0, 0.0};
    CHECK(constrain_loss(zero) == 0.0);

    ClampNoise same;
    same.delta_pos = {0.03, -0.01, 0.2};
    same.delta_neg = same.delta_pos;
    CHECK(constrain_loss(same) == 0.0);
  }

  SUBCASE("zero-norm centroid is rejected") {
    const std::vector<double> zero{0.0, 0.0};
    const std::vector<double> ok{1.0, 0.0};
    auto rng = make_rng(3);
    CHECK_THROWS_AS(clamp_noise(zero, ok, rng), DataError);
    CHECK_THROWS_AS(clamp_noise(ok, zero, rng), DataError);
  }

  SUBCASE("clamp-embedding form equals the delta-difference form") {
    auto rng = make_rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t d = 2 + rng() % 7;
      std::vector<double> pos(d), neg(d), neu(d);
      for (auto& x : pos) x = normal(rng);
      for (auto& x : neg) x = normal(rng);
      for (auto& x : neu) x = normal(rng);
      const auto noise = clamp_noise(pos, neg, rng);
      // Explicit clamp embeddings around the neutral centroid.
      double via_clamp = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double cp = neu[k] + noise.delta_pos[k];
        const double cn = neu[k] + noise.delta_neg[k];
        via_clamp += (cp - cn) * (cp - cn);
      }
      CHECK(std::fabs(via_clamp - constrain_loss(noise)) < 1e-12);
    }
  }
}

TEST_CASE("pnn_loss arithmetic") {
  CHECK(pnn_loss(1.7, -0.4, 0.3, 0.0, 0.0) == 1.7);
  CHECK(std::fabs(pnn_loss(1.0, -2.0, 0.02, 0.5, 0.25) - 0.51) < 1e-12);
  CHECK(pnn_loss(0.0, 0.0, 0.0, 0.7, 0.9) == 0.0);
}

TEST_CASE("example_loss worked d=2 instance matches a scalar recomputation") {
  auto p = worked_model();
  const auto ctx = worked_context();
  const auto cfg = worked_config();
  const auto bd = example_forward(p, ctx, cfg);

  // Independent recomputation with raw scalars.
  const double l_bpr = std::log(1.0 + std::exp(-0.8));
  const double lambda = 1.0 / (1.0 + std::exp(-1.0));  // z = alpha_a + alpha_b
  const double l_rank = std::log(1.0 + std::exp(-0.8)) + std::log(1.0 + std::exp(-0.7));
  const double l_uni = -2.0 * 0.65;
  const double rn = std::sqrt(0.26);
  const double v0 = 0.06 * 1.0 - 0.03 * (-0.5 / rn);
  const double v1 = 0.02 * 0.0 - 0.08 * (0.1 / rn);
  const double l_con = v0 * v0 + v1 * v1;
  const double l_pnn = 0.4 * l_con + 0.3 * l_uni + l_rank;
  const double total = (1.0 - lambda) * l_bpr + lambda * l_pnn;

  CHECK(std::fabs(bd.l_bpr - l_bpr) < 1e-12);
  CHECK(std::fabs(bd.lambda - lambda) < 1e-12);
  CHECK(std::fabs(bd.lambda - kSigma1) < 1e-12);
  CHECK(std::fabs(bd.l_rank - l_rank) < 1e-12);
  CHECK(std::fabs(bd.l_uniform - l_uni) < 1e-12);
  CHECK(std::fabs(bd.l_constrain - l_con) < 1e-12);
  CHECK(std::fabs(bd.l_pnn - l_pnn) < 1e-12);
  CHECK(std::fabs(bd.total - total) < 1e-12);
}

TEST_CASE("breakdown identities hold in the same floating regime") {
  auto p = worked_model();
  const auto ctx = worked_context();
  const auto cfg = worked_config();
  const auto bd = example_forward(p, ctx, cfg);
  CHECK(bd.l_pnn == bd.alpha * bd.l_constrain + bd.beta * bd.l_uniform + bd.l_rank);
  CHECK(bd.total == (1.0 - bd.lambda) * bd.l_bpr + bd.lambda * bd.l_pnn);
  CHECK(bd.l_uniform <= 0.0);
  CHECK(bd.l_constrain >= 0.0);
  CHECK(bd.l_bpr > 0.0);
  CHECK(bd.l_rank > 0.0);
}

TEST_CASE("lambda boundaries collapse the blend") {
  auto p = worked_model();
  const auto ctx = worked_context();
  auto cfg = worked_config();

  cfg.lambda_mode = LambdaMode::kFixed;
  cfg.lambda_fixed = 0.0;
  const auto at0 = example_forward(p, ctx, cfg);
  CHECK(at0.total == at0.l_bpr);

  cfg.lambda_fixed = 1.0;
  const auto at1 = example_forward(p, ctx, cfg);
  CHECK(at1.total == at1.l_pnn);
}

TEST_CASE("pool-skip fallback forces lambda to zero") {
  auto p = worked_model();
  ExampleContext ctx;
  ctx.user = 0;
  ctx.pos_item = 0;
  ctx.neg_item = 2;
  ctx.bpr_only = true;
  ctx.pool_skip = true;
  const auto bd = example_forward(p, ctx, worked_config());
  CHECK(bd.lambda == 0.0);
  CHECK(bd.total == bd.l_bpr);
  CHECK(bd.l_pnn == 0.0);
  CHECK(bd.bpr_fallback);
}

TEST_CASE("build_context wires DNS, pool, partition and flags together") {
  auto p = worked_model();
  LossConfig cfg = worked_config();
  const std::vector<ItemId> user_pos{0, 1};

  SUBCASE("full pipeline on the worked instance") {
    const std::vector<ItemId> batch{0, 2, 3};
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    auto rng = make_rng(5);
    const auto ctx = build_context(p, 0, 0, {batch, &set}, user_pos, 5, cfg, rng);
    CHECK(ctx.neg_item == 2);  // DNS argmax over the pool
    CHECK_FALSE(ctx.dns_fallback);
    CHECK(ctx.part.pool == std::vector<ItemId>{2, 3});
    CHECK(ctx.part.neg == std::vector<ItemId>{3});
    CHECK(ctx.part.neu == std::vector<ItemId>{2});
    CHECK(ctx.part.k_neg == 1);  // one of u's positives sits in the batch
    CHECK(ctx.attn_items.size() == 2);
    CHECK(ctx.uniform_pairs.size() == 1);
    CHECK(ctx.mag_pos.size() == 2);
    for (double m : ctx.mag_pos) {
      CHECK(m >= 0.0);
      CHECK(m <= 0.1);
    }
  }

  SUBCASE("k_neg clamps to pool-1 when both positives are in the batch") {
    const std::vector<ItemId> batch{0, 1, 2, 3};
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    auto rng = make_rng(5);
    const auto ctx = build_context(p, 0, 0, {batch, &set}, user_pos, 5, cfg, rng);
    CHECK(ctx.part.k_neg == 1);  // wanted 2, pool has 2 items
    CHECK(ctx.kneg_clamped);
  }

  SUBCASE("pool below two items falls back to BPR") {
    const std::vector<ItemId> batch{0, 2};
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    auto rng = make_rng(5);
    const auto ctx = build_context(p, 0, 0, {batch, &set}, user_pos, 5, cfg, rng);
    CHECK(ctx.bpr_only);
    CHECK(ctx.pool_skip);
    CHECK(ctx.neg_item == 2);
  }

  SUBCASE("empty DNS candidates resample uniformly outside the positives") {
    const std::vector<ItemId> batch{0, 1};
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    auto rng = make_rng(5);
    const auto ctx = build_context(p, 0, 0, {batch, &set}, user_pos, 5, cfg, rng);
    CHECK(ctx.dns_fallback);
    CHECK(ctx.neg_item >= 2);  // anything but the positives {0,1}
  }

  SUBCASE("a user holding every item is skipped") {
    const std::vector<ItemId> everything{0, 1, 2, 3, 4};
    std::unordered_set<ItemId> set(everything.begin(), everything.end());
    auto rng = make_rng(5);
    const auto ctx =
        build_context(p, 0, 0, {everything, &set}, everything, 5, cfg, rng);
    CHECK(ctx.skipped);
    const auto bd = example_forward(p, ctx, cfg);
    CHECK(bd.skipped);
    CHECK(bd.total == 0.0);
  }

  SUBCASE("uniform sampler mode never consults the batch") {
    cfg.sampler = NegSampler::kUniform;
    cfg.bpr_only = true;
    const std::vector<ItemId> batch{0};
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    auto rng = make_rng(5);
    const auto ctx = build_context(p, 0, 0, {batch, &set}, user_pos, 5, cfg, rng);
    CHECK(ctx.neg_item >= 2);
    CHECK_FALSE(ctx.dns_fallback);
    CHECK(ctx.bpr_only);
    CHECK_FALSE(ctx.pool_skip);
  }

  SUBCASE("attention subset respects the cap") {
    cfg.attn_cap = 1;
    const std::vector<ItemId> batch{0, 2, 3};
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    auto rng = make_rng(5);
    const auto ctx = build_context(p, 0, 0, {batch, &set}, user_pos, 5, cfg, rng);
    CHECK(ctx.attn_items.size() == 1);
    CHECK((ctx.attn_items[0] == 0 || ctx.attn_items[0] == 1));
  }

  SUBCASE("uniform pair sample is distinct and within budget") {
    auto q = init_params(1, 64, 2, 3);
    std::vector<ItemId> batch;
    for (ItemId i = 1; i < 64; ++i) batch.push_back(i);
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    const std::vector<ItemId> pos{0};
    cfg.pair_budget = 100;
    auto rng = make_rng(5);
    const auto ctx = build_context(q, 0, 0, {batch, &set}, pos, 64, cfg, rng);
    CHECK(ctx.uniform_pairs.size() == 100);  // C(63,2) = 1953 > 100
    std::set<std::pair<int, int>> uniq;
    for (const auto& [a, b] : ctx.uniform_pairs) {
      CHECK(a >= 0);
      CHECK(b > a);
      CHECK(b < static_cast<int>(ctx.part.pool.size()));
      uniq.insert({a, b});
    }
    CHECK(uniq.size() == ctx.uniform_pairs.size());
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  // The worked instance first, ...
  {
    auto p = worked_model();
    const auto ctx = worked_context();
    const auto cfg = worked_config();
    GradBuffers grads(p.num_users, p.num_items, p.d);
    example_loss(p, ctx, cfg, grads);
    CHECK(worst_grad_error(p, ctx, cfg, grads) < 1e-4);
  }

  // ... then randomized instances across lambda modes and term switches.
  auto rng = make_rng(2024);
  std::normal_distribution<double> wide(0.0, 0.7);
  for (int rep = 0; rep < 12; ++rep) {
    const std::int64_t d = 2 + static_cast<std::int64_t>(rng() % 5);
    auto p = init_params(2, 10, d, rng());
    for (std::size_t k = 0; k < p.user_emb.size(); ++k) p.user_emb.data()[k] = wide(rng);
    for (std::size_t k = 0; k < p.item_emb.size(); ++k) p.item_emb.data()[k] = wide(rng);
    for (auto& w : p.w1) w = std::fabs(wide(rng));
    for (std::size_t k = 0; k < p.w2.size(); ++k) p.w2.data()[k] = std::fabs(wide(rng));
    for (auto& x : p.b) x = wide(rng);

    LossConfig cfg;
    cfg.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    cfg.beta = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    cfg.lambda_mode = rep % 3 == 2 ? LambdaMode::kFixed : LambdaMode::kAdaptive;
    cfg.lambda_fixed = 0.5;
    cfg.use_rank = rep % 4 != 3;
    cfg.use_uniform = rep % 5 != 4;
    cfg.use_constrain = rep % 6 != 5;

    const std::vector<ItemId> user_pos{0, 1, 2};
    std::vector<ItemId> batch{0, 3, 4, 5, 6, 7};
    std::unordered_set<ItemId> set(batch.begin(), batch.end());
    auto ctx_rng = make_rng(rng());
    const auto ctx =
        build_context(p, 0, 0, {batch, &set}, user_pos, 10, cfg, ctx_rng);
    REQUIRE_FALSE(ctx.bpr_only);

    GradBuffers grads(p.num_users, p.num_items, p.d);
    example_loss(p, ctx, cfg, grads);
    CHECK(worst_grad_error(p, ctx, cfg, grads) < 1e-4);
  }
}

TEST_CASE("uniform term stays strictly negative for generic embeddings") {
  auto rng = make_rng(606);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (int rep = 0; rep < 30; ++rep) {
    auto p = init_params(1, 12, 3, rng());
    for (std::size_t k = 0; k < p.item_emb.size(); ++k) p.item_emb.data()[k] = normal(rng);
    std::vector<ItemId> items{0, 1, 2, 3, 4, 5};
    auto r = make_rng(rep);
    const double v = uniform_loss(p, items, 1 << 20, r);
    CHECK(v < 0.0);  // equality needs coincident points
  }
}
