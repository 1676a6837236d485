// pnn: dataset ingestion, PNN/BPR training, evaluation and experiment
// orchestration for the implicit-feedback matrix-factorization engine.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/errors.hpp"
#include "pnn/eval.hpp"
#include "pnn/model.hpp"
#include "pnn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kBuildId = "pnn 0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pnn::ConfigError("cannot hash missing file: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 15];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pnn::ConfigError("cannot write " + path);
  out << content;
}

// Flat "key = value" config file; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pnn::ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw pnn::ParseError("config line is not 'key = value'", line_no);
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw pnn::ParseError("empty config key", line_no);
    kv[key] = value;
  }
  return kv;
}

// ---------------------------------------------------------------------------
// Training options shared by `train` and `ablate`
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config_file;
  std::string loss = "pnn";          // pnn | bpr
  std::string sampler;               // dns | uniform (default depends on loss)
  std::string variant = "full";
  double alpha = 0.5;
  double beta = 0.25;
  double lambda_const = 0.5;
  double lr = 0.001;
  int batch_size = 2048;
  double l2 = 1e-4;
  int d = 64;
  int epochs = 100;
  int patience = 10;
  std::uint64_t seed = 1;
  std::int64_t pair_budget = 4096;
  int attn_cap = 20;
  int k_neg = 0;
  int threads = 1;
  bool log_timing = false;

  std::map<std::string, CLI::Option*> bound;
};

void bind_train_options(CLI::App* cmd, TrainArgs& args, bool with_loss_switch) {
  args.bound["loss"] = with_loss_switch
      ? cmd->add_option("--loss", args.loss, "Objective: pnn or bpr")
            ->check(CLI::IsMember({"pnn", "bpr"}))
      : nullptr;
  args.bound["sampler"] =
      cmd->add_option("--sampler", args.sampler, "Negative sampler: dns or uniform")
          ->check(CLI::IsMember({"dns", "uniform"}));
  args.bound["alpha"] = cmd->add_option("--alpha", args.alpha,
                                        "Constrain-loss weight in [0,1]");
  args.bound["beta"] = cmd->add_option("--beta", args.beta,
                                       "Uniform-loss weight in [0,1]");
  args.bound["lambda_const"] = cmd->add_option(
      "--lambda-const", args.lambda_const, "Fixed lambda for the no-ada variant");
  args.bound["lr"] = cmd->add_option("--lr", args.lr, "Adam learning rate");
  args.bound["batch_size"] =
      cmd->add_option("--batch-size", args.batch_size, "Mini-batch size");
  args.bound["l2"] = cmd->add_option("--l2", args.l2, "L2 coefficient");
  args.bound["d"] = cmd->add_option("--d", args.d, "Embedding dimension");
  args.bound["epochs"] = cmd->add_option("--epochs", args.epochs, "Epoch budget");
  args.bound["patience"] = cmd->add_option("--patience", args.patience,
                                           "Early-stop patience (validation NDCG@20)");
  args.bound["seed"] = cmd->add_option("--seed", args.seed, "Run seed");
  args.bound["pair_budget"] = cmd->add_option("--pair-budget", args.pair_budget,
                                              "Uniformity pairs per example");
  args.bound["attn_cap"] = cmd->add_option("--attn-cap", args.attn_cap,
                                           "Attention positives cap M");
  args.bound["k_neg"] = cmd->add_option(
      "--k-neg", args.k_neg, "Negative-class size override (0 = batch rule)");
  args.bound["threads"] = cmd->add_option("--threads", args.threads,
                                          "Intra-batch worker threads");
  cmd->add_flag("--log-timing", args.log_timing,
                "Embed wall-clock seconds in log files (breaks byte-stability)");
  cmd->add_option("--config", args.config_file,
                  "Flat key=value config file (flags win over file values)");
}

// CLI > config file > defaults.
void apply_config_file(TrainArgs& args) {
  if (args.config_file.empty()) return;
  const auto kv = read_config_file(args.config_file);
  auto unset = [&](const char* key) {
    const auto it = args.bound.find(key);
    return kv.count(key) > 0 &&
           (it == args.bound.end() || !it->second || it->second->count() == 0);
  };
  auto geti = [&](const char* key) { return std::stoll(kv.at(key)); };
  auto getd = [&](const char* key) { return std::stod(kv.at(key)); };
  try {
    if (unset("loss")) args.loss = kv.at("loss");
    if (unset("sampler")) args.sampler = kv.at("sampler");
    if (unset("variant")) args.variant = kv.at("variant");
    if (unset("alpha")) args.alpha = getd("alpha");
    if (unset("beta")) args.beta = getd("beta");
    if (unset("lambda_const")) args.lambda_const = getd("lambda_const");
    if (unset("lr")) args.lr = getd("lr");
    if (unset("batch_size")) args.batch_size = static_cast<int>(geti("batch_size"));
    if (unset("l2")) args.l2 = getd("l2");
    if (unset("d")) args.d = static_cast<int>(geti("d"));
    if (unset("epochs")) args.epochs = static_cast<int>(geti("epochs"));
    if (unset("patience")) args.patience = static_cast<int>(geti("patience"));
    if (unset("seed")) args.seed = static_cast<std::uint64_t>(geti("seed"));
    if (unset("pair_budget")) args.pair_budget = geti("pair_budget");
    if (unset("attn_cap")) args.attn_cap = static_cast<int>(geti("attn_cap"));
    if (unset("k_neg")) args.k_neg = static_cast<int>(geti("k_neg"));
    if (unset("threads")) args.threads = static_cast<int>(geti("threads"));
  } catch (const std::invalid_argument&) {
    throw pnn::ConfigError("malformed numeric value in " + args.config_file);
  }
}

pnn::TrainConfig to_train_config(const TrainArgs& args) {
  if (args.alpha < 0.0 || args.alpha > 1.0 || args.beta < 0.0 || args.beta > 1.0) {
    throw pnn::ConfigError("alpha and beta must lie in [0, 1]");
  }
  if (args.epochs < 0 || args.batch_size < 1 || args.d < 1 || args.patience < 1 ||
      args.threads < 1 || args.lr < 0.0) {
    throw pnn::ConfigError("invalid training hyperparameters");
  }
  pnn::TrainConfig cfg;
  cfg.d = args.d;
  cfg.lr = args.lr;
  cfg.batch_size = args.batch_size;
  cfg.l2 = args.l2;
  cfg.epochs = args.epochs;
  cfg.patience = args.patience;
  cfg.seed = args.seed;
  cfg.threads = args.threads;
  cfg.loss.alpha = args.alpha;
  cfg.loss.beta = args.beta;
  cfg.loss.pair_budget = args.pair_budget;
  cfg.loss.attn_cap = args.attn_cap;
  cfg.loss.k_neg_override = args.k_neg;

  if (args.loss == "bpr") {
    cfg.loss.bpr_only = true;
    cfg.loss.sampler =
        args.sampler == "dns" ? pnn::NegSampler::kDns : pnn::NegSampler::kUniform;
  } else {
    cfg.loss.sampler =
        args.sampler == "uniform" ? pnn::NegSampler::kUniform : pnn::NegSampler::kDns;
  }

  if (args.variant == "full") {
  } else if (args.variant == "no-constrain") {
    cfg.loss.use_constrain = false;
  } else if (args.variant == "no-uniform") {
    cfg.loss.use_uniform = false;
  } else if (args.variant == "no-rank") {
    cfg.loss.use_rank = false;
  } else if (args.variant == "no-ada") {
    cfg.loss.lambda_mode = pnn::LambdaMode::kFixed;
    cfg.loss.lambda_fixed = args.lambda_const;
  } else if (args.variant == "no-sem") {
    cfg.loss.lambda_mode = pnn::LambdaMode::kFixed;
    cfg.loss.lambda_fixed = 1.0;
  } else {
    throw pnn::ConfigError("unknown variant: " + args.variant);
  }
  return cfg;
}

ordered_json config_json(const TrainArgs& args) {
  ordered_json j;
  j["loss"] = args.loss;
  j["variant"] = args.variant;
  j["sampler"] = args.sampler.empty()
                     ? (args.loss == "bpr" ? "uniform" : "dns")
                     : args.sampler;
  j["alpha"] = args.alpha;
  j["beta"] = args.beta;
  j["lambda_const"] = args.lambda_const;
  j["lr"] = args.lr;
  j["batch_size"] = args.batch_size;
  j["l2"] = args.l2;
  j["d"] = args.d;
  j["epochs"] = args.epochs;
  j["patience"] = args.patience;
  j["seed"] = args.seed;
  j["pair_budget"] = args.pair_budget;
  j["attn_cap"] = args.attn_cap;
  j["k_neg"] = args.k_neg;
  j["threads"] = args.threads;
  return j;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const ordered_json& config, const std::string& dataset_hash,
                    const std::vector<std::uint64_t>& seeds,
                    const ordered_json& outputs) {
  ordered_json j;
  j["command"] = command;
  j["build"] = kBuildId;
  j["dataset_hash"] = dataset_hash;
  j["seeds"] = seeds;
  j["config"] = config;
  j["outputs"] = outputs;
  write_file(out_dir + "/manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& out_dir,
               const std::string& format, std::vector<double> ratios,
               std::uint64_t seed) {
  fs::create_directories(out_dir);
  if (ratios.size() != 3) throw pnn::ConfigError("--ratios needs three values");
  const pnn::SplitRatios split_ratios{ratios[0], ratios[1], ratios[2]};

  auto ds = pnn::split(pnn::ingest(input, pnn::ColumnFormat::parse(format)),
                       split_ratios, seed);
  const std::string snapshot = out_dir + "/dataset.pnnds";
  pnn::save_dataset(ds, snapshot);

  ordered_json config;
  config["input"] = input;
  config["format"] = format;
  config["ratios"] = ratios;
  config["seed"] = seed;
  ordered_json outputs;
  outputs["snapshot"] = snapshot;
  write_manifest(out_dir, "ingest", config, fnv1a_file(snapshot), {seed}, outputs);

  std::cout << "ingested " << ds.train.size() + ds.validation.size() + ds.test.size()
            << " interactions: " << ds.num_users << " users, " << ds.num_items
            << " items -> " << snapshot << "\n";
  return kExitOk;
}

int cmd_train(TrainArgs& args) {
  apply_config_file(args);
  const auto cfg = to_train_config(args);
  fs::create_directories(args.out);

  const std::string ckpt_path = args.out + "/checkpoint.pnnckpt";
  const std::string log_path = args.out + "/train_log.jsonl";
  ordered_json outputs;
  outputs["checkpoint"] = ckpt_path;
  outputs["train_log"] = log_path;
  write_manifest(args.out, "train", config_json(args), fnv1a_file(args.data),
                 {args.seed}, outputs);

  const auto ds = pnn::load_dataset(args.data);
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw pnn::ConfigError("cannot write " + log_path);

  const auto result = pnn::fit(ds, cfg, [&](const pnn::EpochSummary& s) {
    log << s.to_json(args.log_timing) << "\n";
    std::cerr << "epoch " << s.epoch << ": total=" << s.total
              << " val_ndcg20=" << s.val_ndcg20 << " lambda=" << s.lambda_mean
              << " (" << s.seconds << "s)\n";
  });
  log.close();

  pnn::save_checkpoint(result.best, ckpt_path);
  std::cout << "trained " << result.log.size() << " epochs; best epoch "
            << result.best_epoch << " (val NDCG@" << cfg.eval_k << " = "
            << result.best_val_ndcg << ") -> " << ckpt_path << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& data, const std::string& checkpoint,
             const std::string& out_dir, std::vector<int> ks,
             std::vector<double> deltas, bool csv, bool log_timing) {
  fs::create_directories(out_dir);
  const auto ds = pnn::load_dataset(data);
  const auto params = pnn::load_checkpoint(checkpoint);
  if (params.num_users != ds.num_users || params.num_items != ds.num_items) {
    throw pnn::DataError("checkpoint and dataset shapes disagree");
  }

  pnn::EvalConfig cfg;
  if (!ks.empty()) cfg.ks = ks;
  if (!deltas.empty()) cfg.deltas = deltas;
  const auto report = pnn::evaluate(params, ds, cfg);

  const std::string report_path = out_dir + "/eval_report.json";
  write_file(report_path, report.to_json(log_timing) + "\n");
  ordered_json outputs;
  outputs["report"] = report_path;
  if (csv) {
    std::string table = "metric,value\n";
    char buf[128];
    for (const auto& [key, value] : report.means) {
      std::snprintf(buf, sizeof(buf), "%s,%.6f\n", key.c_str(), value);
      table += buf;
    }
    write_file(out_dir + "/eval_report.csv", table);
    outputs["csv"] = out_dir + "/eval_report.csv";
  }

  ordered_json config;
  config["data"] = data;
  config["checkpoint"] = checkpoint;
  config["ks"] = cfg.ks;
  config["deltas"] = cfg.deltas;
  write_manifest(out_dir, "eval", config, fnv1a_file(data), {report.seed},
                 outputs);

  for (const auto& [key, value] : report.means) {
    std::cout << key << " = " << value << "\n";
  }
  std::cout << "evaluated " << report.num_evaluated_users << " users in "
            << report.wall_seconds << "s -> " << report_path << "\n";
  return kExitOk;
}

int cmd_noise(const std::string& data, const std::string& out_dir,
              double fraction, std::uint64_t seed) {
  fs::create_directories(out_dir);
  auto [noisy, ledger] = pnn::inject_noise(pnn::load_dataset(data), fraction, seed);
  const std::string snapshot = out_dir + "/dataset.pnnds";
  const std::string ledger_path = out_dir + "/noise_ledger.json";
  pnn::save_dataset(noisy, snapshot);
  write_file(ledger_path, ledger.to_json() + "\n");

  ordered_json config;
  config["data"] = data;
  config["fraction"] = fraction;
  config["seed"] = seed;
  ordered_json outputs;
  outputs["snapshot"] = snapshot;
  outputs["ledger"] = ledger_path;
  write_manifest(out_dir, "noise", config, fnv1a_file(snapshot), {seed}, outputs);

  std::cout << "removed " << ledger.flipped.size() << " train interactions -> "
            << snapshot << "\n";
  return kExitOk;
}

int cmd_ablate(TrainArgs& args, const std::vector<std::string>& variants,
               const std::vector<std::uint64_t>& seeds, bool csv) {
  apply_config_file(args);
  fs::create_directories(args.out);
  if (variants.empty() || seeds.empty()) {
    throw pnn::ConfigError("ablate needs at least one variant and one seed");
  }

  const auto ds = pnn::load_dataset(args.data);
  ordered_json outputs;
  std::map<std::string, std::vector<pnn::EvalReport>> reports;

  for (const auto& variant : variants) {
    for (const auto seed : seeds) {
      TrainArgs run = args;
      run.variant = variant;
      run.seed = seed;
      const auto cfg = to_train_config(run);

      const std::string run_dir =
          args.out + "/" + variant + "/seed" + std::to_string(seed);
      fs::create_directories(run_dir);
      const std::string ckpt_path = run_dir + "/checkpoint.pnnckpt";
      const std::string log_path = run_dir + "/train_log.jsonl";
      const std::string report_path = run_dir + "/eval_report.json";
      ordered_json run_outputs;
      run_outputs["checkpoint"] = ckpt_path;
      run_outputs["train_log"] = log_path;
      run_outputs["report"] = report_path;
      write_manifest(run_dir, "ablate-run", config_json(run),
                     fnv1a_file(args.data), {seed}, run_outputs);

      std::ofstream log(log_path, std::ios::binary);
      const auto result = pnn::fit(ds, cfg, [&](const pnn::EpochSummary& s) {
        log << s.to_json(args.log_timing) << "\n";
      });
      log.close();
      pnn::save_checkpoint(result.best, ckpt_path);

      const auto report = pnn::evaluate(result.best, ds);
      write_file(report_path, report.to_json(args.log_timing) + "\n");
      reports[variant].push_back(report);
      outputs[variant + "/seed" + std::to_string(seed)] = run_dir;
      std::cerr << "ablate " << variant << " seed " << seed << ": ndcg@20="
                << report.means.at("ndcg@20") << "\n";
    }
  }

  if (csv) {
    // rows = metrics, columns = variants (seed means).
    std::string table = "metric";
    for (const auto& v : variants) table += "," + v;
    table += "\n";
    for (const auto& [metric, value] : reports.begin()->second.front().means) {
      (void)value;
      table += metric;
      for (const auto& v : variants) {
        double sum = 0.0;
        for (const auto& r : reports.at(v)) sum += r.means.at(metric);
        char buf[32];
        std::snprintf(buf, sizeof(buf), ",%.6f",
                      sum / static_cast<double>(reports.at(v).size()));
        table += buf;
      }
      table += "\n";
    }
    write_file(args.out + "/ablation_table.csv", table);
    outputs["table"] = args.out + "/ablation_table.csv";
  }

  std::vector<std::uint64_t> seed_list(seeds.begin(), seeds.end());
  write_manifest(args.out, "ablate", config_json(args), fnv1a_file(args.data),
                 seed_list, outputs);
  std::cout << "ablation grid complete: " << variants.size() << " variants x "
            << seeds.size() << " seeds -> " << args.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Positive-neutral-negative learning for implicit-feedback "
               "collaborative filtering"};
  app.require_subcommand(1);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Index, split and snapshot a raw interaction log");
  std::string in_input, in_out, in_format = "uit";
  std::vector<double> in_ratios{0.8, 0.1, 0.1};
  std::uint64_t in_seed = 7;
  ingest_cmd->add_option("--input", in_input, "Delimited interaction file")->required();
  ingest_cmd->add_option("--out", in_out, "Output directory")->required();
  ingest_cmd->add_option("--format", in_format,
                         "Column roles: u=user, i=item, t=timestamp, x=skip");
  ingest_cmd->add_option("--ratios", in_ratios, "Train/validation/test ratios")
      ->expected(3);
  ingest_cmd->add_option("--seed", in_seed, "Split seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train MF with the PNN or BPR objective");
  TrainArgs train_args;
  train_cmd->add_option("--data", train_args.data, "Dataset snapshot")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--variant", train_args.variant,
                        "full | no-constrain | no-uniform | no-rank | no-ada | no-sem");
  bind_train_options(train_cmd, train_args, /*with_loss_switch=*/true);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Full-catalog top-K and OPAUC evaluation");
  std::string ev_data, ev_ckpt, ev_out;
  std::vector<int> ev_ks;
  std::vector<double> ev_deltas;
  bool ev_csv = false, ev_timing = false;
  eval_cmd->add_option("--data", ev_data, "Dataset snapshot")->required();
  eval_cmd->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->required();
  eval_cmd->add_option("--out", ev_out, "Output directory")->required();
  eval_cmd->add_option("--ks", ev_ks, "Cutoffs, e.g. --ks 10 20");
  eval_cmd->add_option("--deltas", ev_deltas, "OPAUC FPR caps, e.g. --deltas 0.5 1.0");
  eval_cmd->add_flag("--csv", ev_csv, "Also write eval_report.csv");
  eval_cmd->add_flag("--log-timing", ev_timing, "Embed wall seconds in the report");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the variant grid and tabulate it");
  TrainArgs ablate_args;
  std::vector<std::string> ab_variants{"full",       "no-constrain", "no-uniform",
                                       "no-rank",    "no-ada",       "no-sem"};
  std::vector<std::uint64_t> ab_seeds{1};
  bool ab_csv = true;
  ablate_cmd->add_option("--data", ablate_args.data, "Dataset snapshot")->required();
  ablate_cmd->add_option("--out", ablate_args.out, "Output directory")->required();
  ablate_cmd->add_option("--variants", ab_variants, "Variant list");
  ablate_cmd->add_option("--seeds", ab_seeds, "Seed list");
  ablate_cmd->add_flag("--table,!--no-table", ab_csv, "Write ablation_table.csv");
  bind_train_options(ablate_cmd, ablate_args, /*with_loss_switch=*/false);

  // noise
  auto* noise_cmd = app.add_subcommand("noise", "Inject false-negative noise into train");
  std::string no_data, no_out;
  double no_fraction = 0.1;
  std::uint64_t no_seed = 7;
  noise_cmd->add_option("--data", no_data, "Dataset snapshot")->required();
  noise_cmd->add_option("--out", no_out, "Output directory")->required();
  noise_cmd->add_option("--fraction", no_fraction, "Fraction of train to remove");
  noise_cmd->add_option("--seed", no_seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(ingest_cmd)) {
      return cmd_ingest(in_input, in_out, in_format, in_ratios, in_seed);
    }
    if (app.got_subcommand(train_cmd)) {
      return cmd_train(train_args);
    }
    if (app.got_subcommand(eval_cmd)) {
      return cmd_eval(ev_data, ev_ckpt, ev_out, ev_ks, ev_deltas, ev_csv, ev_timing);
    }
    if (app.got_subcommand(ablate_cmd)) {
      return cmd_ablate(ablate_args, ab_variants, ab_seeds, ab_csv);
    }
    if (app.got_subcommand(noise_cmd)) {
      return cmd_noise(no_data, no_out, no_fraction, no_seed);
    }
  } catch (const pnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pnn::NumericError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const pnn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
