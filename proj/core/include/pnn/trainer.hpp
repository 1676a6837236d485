#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/losses.hpp"
#include "pnn/model.hpp"

namespace pnn {

struct TrainConfig {
  std::int64_t d = 64;
  double lr = 0.001;
  int batch_size = 2048;
  double l2 = 1e-4;
  int epochs = 100;
  int patience = 10;        // early stop on validation NDCG@20
  std::uint64_t seed = 1;
  int threads = 1;
  int eval_k = 20;
  LossConfig loss;
};

struct EpochSummary {
  int epoch = 0;
  double l_bpr = 0.0;
  double l_rank = 0.0;
  double l_uniform = 0.0;
  double l_constrain = 0.0;
  double lambda_mean = 0.0;
  double total = 0.0;
  double val_ndcg20 = 0.0;
  double seconds = 0.0;
  std::int64_t examples = 0;
  std::int64_t bpr_fallbacks = 0;
  std::int64_t clamp_drops = 0;
  std::int64_t kneg_clamps = 0;
  std::int64_t skipped = 0;

  // One JSON object per epoch. Timing is volatile, so it is only embedded
  // when asked for; default logs are byte-stable across identical runs.
  std::string to_json(bool include_timing) const;
};

// Observation hook for tests and diagnostics: called per example with the
// frozen context and its loss breakdown, against the pre-update snapshot.
struct TrainObserver {
  virtual ~TrainObserver() = default;
  virtual void on_example(const ModelParams& snapshot, const ExampleContext& ctx,
                          const LossBreakdown& breakdown) = 0;
};

// One pass over the shuffled train pairs: per example DNS/pool/classify and
// loss gradients, then mean-gradient + L2 on touched parameters, one Adam
// step per batch, and a non-negativity projection of w1/w2.
// Throws NumericError (with a batch diagnostic) on non-finite loss/gradient.
struct AdamState {
  Matrix m_user, v_user;
  Matrix m_item, v_item;
  std::vector<double> m_w1, v_w1;
  Matrix m_w2, v_w2;
  std::vector<double> m_b, v_b;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const ModelParams& p);
};

EpochSummary train_epoch(ModelParams& p, AdamState& opt,
                         const InteractionDataset& ds, const TrainConfig& cfg,
                         int epoch_index, TrainObserver* observer = nullptr);

struct FitResult {
  ModelParams best;
  std::vector<EpochSummary> log;
  int best_epoch = -1;        // -1: no epoch ran
  double best_val_ndcg = 0.0;
};

// Validation metric seam; tests inject synthetic curves, production uses
// NDCG@eval_k on the validation partition.
using ValidationFn = std::function<double(const ModelParams&, int epoch)>;
using EpochCallback = std::function<void(const EpochSummary&)>;

FitResult fit(const InteractionDataset& ds, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {},
              const ValidationFn& validation_override = {},
              TrainObserver* observer = nullptr);

// ---------------------------------------------------------------------------
// Finite-difference gradient audit
// ---------------------------------------------------------------------------

struct GradAuditReport {
  double max_rel_err = 0.0;       // worst over all instances and parameters
  double eps = 1e-5;
  int instances = 0;
  int parameters_checked = 0;
  // Structural check: with a fixed lambda the attention parameters are
  // detached and their gradients must vanish; adaptively they must not.
  double attn_grad_linf_fixed0 = 0.0;
  double attn_grad_linf_adaptive = 0.0;
};

// Random micro-instances (d <= d_max, pools of 3..6 items): analytic
// gradients of example_loss vs central finite differences of
// example_forward, every touched parameter.
GradAuditReport grad_audit(std::uint64_t seed, int instances, int d_max = 8);

}  // namespace pnn
