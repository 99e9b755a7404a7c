#include "stcal/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "stcal/cli/manifest.hpp"
#include "stcal/cli/options.hpp"
#include "stcal/common/errors.hpp"
#include "stcal/common/hash.hpp"
#include "stcal/common/rng.hpp"
#include "stcal/gsc/gsc.hpp"
#include "stcal/optimize/config.hpp"
#include "stcal/optimize/evaluate.hpp"
#include "stcal/optimize/optimizer.hpp"
#include "stcal/optimize/report.hpp"
#include "stcal/probe/dataset.hpp"
#include "stcal/probe/sampling.hpp"
#include "stcal/qsim/config.hpp"
#include "stcal/surrogate/checkpoint.hpp"
#include "stcal/surrogate/metrics.hpp"
#include "stcal/surrogate/train.hpp"

namespace stcal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Substream labels under the master seed.
enum : std::uint64_t { kSplitStream = 1, kInitStream = 2, kTrainStream = 3, kEvalStream = 4, kLengthStream = 5 };

std::uint64_t sub_seed(std::uint64_t master, std::uint64_t label) { return Rng::derive(master, {label}).next_key(); }

int workers_of(const Common& c) {
  if (c.workers > 0) return c.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

json load_config(const std::string& name, const std::vector<std::string>& sets) {
  json j = read_json(resolve_config(name));
  apply_overrides(j, sets);
  return j;
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

RunManifest start_manifest(const std::string& command, const Common& c) {
  RunManifest m;
  m.command = command;
  m.args = c.argv;
  m.seed = c.seed;
  return m;
}

// Qubit config stored by cmd_train in the checkpoint, unless one is given explicitly.
json qubit_json_for(const std::string& explicit_name, const json& training, const std::vector<std::string>& sets) {
  json j;
  if (!explicit_name.empty()) {
    j = read_json(resolve_config(explicit_name));
  } else if (training.contains("qubit")) {
    j = training.at("qubit");
  } else {
    throw ConfigError("checkpoint carries no qubit config; pass --qubit");
  }
  apply_overrides(j, sets);
  return j;
}

}  // namespace

void cmd_gen_data(const GenDataOptions& o) {
  if (o.count == 0) throw ConfigError("--count must be >= 1");
  if (o.common.out.empty()) throw ConfigError("--out is required");
  const json qj = load_config(o.common.config, o.common.sets);
  const auto cfg = qsim::qubit_config_from_json(qj);
  if (!qj.contains("probe")) throw ConfigError("config has no probe block");
  const auto strategy = probe::strategy_from_config(qj.at("probe"), cfg);

  const auto records = probe::generate_dataset(strategy, cfg, o.count, o.common.seed, workers_of(o.common));
  ensure_parent(o.common.out);
  probe::write_dataset(o.common.out, records);

  auto m = start_manifest("gen-data", o.common);
  m.add_config("qubit", qj);
  m.configs["strategy"] = probe::to_json(strategy);
  m.configs["count"] = o.count;
  m.artifacts.push_back(o.common.out);
  m.write(o.common.out.string() + ".manifest.json");
  std::clog << "wrote " << records.size() << " records to " << o.common.out << '\n';
}

void cmd_train(const TrainOptions& o) {
  if (o.common.out.empty()) throw ConfigError("--out is required");
  const json tj = load_config(o.common.config, o.common.sets);
  json qj;
  surrogate::NetworkSpec spec;
  int l_max = 0;
  surrogate::InitOptions init_opts;
  surrogate::TrainConfig tc;
  try {
    qj = read_json(resolve_config(tj.at("qubit").get<std::string>()));
    spec = surrogate::network_spec_from_json(tj.at("network"));
    l_max = tj.at("l_max").get<int>();
    init_opts.forget_bias = tj.value("forget_bias", init_opts.forget_bias);
    const auto base = tj.value("preset", std::string("general")) == "specific" ? surrogate::TrainConfig::specific()
                                                                               : surrogate::TrainConfig::general();
    tc = surrogate::train_config_from_json(tj.value("train", json::object()), base);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad train config: ") + e.what());
  }
  tc.seed = sub_seed(o.common.seed, kTrainStream);
  tc.validate();
  const auto qubit = qsim::qubit_config_from_json(qj);

  const auto records = probe::read_dataset(o.data);
  int len_lo = l_max + 1, len_hi = 0;
  for (const auto& r : records) {
    const int len = static_cast<int>(r.pulse.length());
    if (len > l_max) throw ConfigError("dataset record longer than l_max");
    len_lo = std::min(len_lo, len);
    len_hi = std::max(len_hi, len);
  }
  const auto split = probe::split_dataset(records.size(), {}, sub_seed(o.common.seed, kSplitStream));
  auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<probe::ProbeRecord> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(records[i]);
    return out;
  };
  const auto train_set = pick(split.train);
  const auto val_set = pick(split.validation);
  const auto test_set = pick(split.test);
  std::vector<double> weights;
  if (tc.weighted) weights = probe::sample_weights(train_set);

  const auto init = surrogate::init_model(spec, surrogate::default_normalization(qubit, l_max),
                                          sub_seed(o.common.seed, kInitStream), init_opts);
  std::clog << "training " << spec.name << " (" << init.params.size() << " parameter tensors) on "
            << train_set.size() << " records\n";
  const auto result = surrogate::train(init, train_set, weights, val_set, tc, [](const surrogate::EpochRecord& e) {
    if (e.epoch % 10 == 0) {
      std::clog << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.validation_loss << " lr " << e.lr
                << '\n';
    }
    return true;
  });
  if (result.best_epoch < 0) throw NumericError("training diverged before the first validated epoch");

  const auto test_metrics = surrogate::evaluate(result.model, test_set);
  const auto val_metrics = surrogate::evaluate(result.model, val_set);

  ensure_parent(o.common.out);
  const fs::path manifest_path = sibling(o.common.out, ".manifest.json");
  json training = {{"qubit", qj},
                   {"train_config", surrogate::to_json(tc)},
                   {"best_epoch", result.best_epoch},
                   {"best_validation_loss", result.best_validation_loss},
                   {"epochs_run", result.history.size()},
                   {"diverged", result.diverged},
                   {"length_window", {len_lo, len_hi}},
                   {"dataset_sha256", sha256_file(o.data)},
                   {"seed", o.common.seed},
                   {"manifest", manifest_path.filename().string()}};
  surrogate::save_checkpoint(o.common.out, result.model, training);

  const fs::path history_path = sibling(o.common.out, ".history.csv");
  {
    std::ofstream out(history_path);
    if (!out) throw ConfigError("cannot write " + history_path.string());
    out.precision(17);
    out << "epoch,train_loss,validation_loss,lr\n";
    for (const auto& e : result.history)
      out << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << ',' << e.lr << '\n';
  }
  const fs::path metrics_path = sibling(o.common.out, ".metrics.json");
  {
    std::ofstream out(metrics_path);
    if (!out) throw ConfigError("cannot write " + metrics_path.string());
    out << json{{"test", surrogate::to_json(test_metrics)}, {"validation", surrogate::to_json(val_metrics)}}.dump(2)
        << '\n';
  }

  auto m = start_manifest("train", o.common);
  m.add_config("train", tj);
  m.add_config("qubit", qj);
  m.configs["dataset"] = {{"path", o.data.string()}, {"sha256", training["dataset_sha256"]}};
  m.artifacts = {o.common.out, history_path, metrics_path};
  m.write(manifest_path);
  std::clog << "best epoch " << result.best_epoch << ", test MAE(p) " << test_metrics.mae[0] << ", A_0.05 "
            << test_metrics.a005 << '\n';
}

void cmd_optimize(const OptimizeOptions& o) {
  if (o.common.out.empty()) throw ConfigError("--out is required");
  json training;
  const auto model = surrogate::load_checkpoint(o.checkpoint, &training);
  const json qj = qubit_json_for(o.qubit, training, {});
  const auto qubit = qsim::qubit_config_from_json(qj);
  json oj = load_config(o.common.config, o.common.sets);
  oj["seed"] = o.common.seed;
  const auto cfg = optimize::optimize_config_from_json(oj);

  int max_len = 1;
  for (const auto& s : cfg.stages) max_len = std::max(max_len, s.max_len);
  const auto syndromes = gsc::SyndromeSet::build(max_len);

  std::clog << "schedule (K = " << cfg.n_gatesets << ", " << syndromes.size() << " sequences):\n";
  for (const auto& s : cfg.stages) {
    std::clog << "  " << s.iterations << " it, lr " << s.lr << ", L_S " << s.max_len << ", exponent " << s.exponent
              << ", K_b " << s.kb << ", gamma " << s.gamma << ", delta " << s.delta << '\n';
  }
  const int total = cfg.total_iterations();
  auto candidates = optimize::optimize_gatesets(model, syndromes, cfg, qubit, {},
                                                [total](int it, const optimize::Stage&, double med) {
                                                  if ((it + 1) % 500 == 0 || it + 1 == total)
                                                    std::clog << "iteration " << it + 1 << "/" << total
                                                              << " median stage loss " << med << '\n';
                                                });
  optimize::evaluate_candidates(candidates, qubit, cfg.n_noise, sub_seed(o.common.seed, kEvalStream));

  const auto files = optimize::write_report(o.common.out, candidates, cfg.top_k, cfg.history_stride);

  // Summary of the run.
  std::vector<double> l0, l1, c0, c1;
  for (const auto& c : candidates) {
    if (c.failed || !c.final_eval || !c.initial_eval) continue;
    l0.push_back(c.initial_loss);
    l1.push_back(c.final_loss);
    c0.push_back(c.initial_eval->coherent_mean());
    c1.push_back(c.final_eval->coherent_mean());
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const auto top = optimize::select_top(candidates, std::min<int>(cfg.top_k, static_cast<int>(candidates.size())));
  double top_mean = 0, best = 1;
  int top_n = 0;
  for (int i : top) {
    if (!candidates[i].final_eval) continue;
    top_mean += candidates[i].final_eval->coherent_mean();
    best = std::min(best, candidates[i].final_eval->coherent_mean());
    ++top_n;
  }
  int failed = 0;
  for (const auto& c : candidates) failed += c.failed;
  json summary = {{"n_gatesets", candidates.size()},
                  {"failed", failed},
                  {"median_initial_loss", median(l0)},
                  {"median_final_loss", median(l1)},
                  {"loss_reduction", median(l0) / median(l1)},
                  {"top_k", top},
                  {"top_k_mean_coherent_infidelity", top_n ? top_mean / top_n : std::nan("")},
                  {"best_top_k_coherent_infidelity", best},
                  {"pearson_initial_final_infidelity", c0.size() >= 2 ? optimize::pearson(c0, c1) : std::nan("")}};
  const fs::path summary_path = o.common.out / "summary.json";
  {
    std::ofstream out(summary_path);
    if (!out) throw ConfigError("cannot write " + summary_path.string());
    out << summary.dump(2) << '\n';
  }

  auto m = start_manifest("optimize", o.common);
  m.add_config("optimize", optimize::to_json(cfg));
  m.add_config("qubit", qj);
  m.configs["checkpoint"] = {{"path", o.checkpoint.string()}, {"sha256", sha256_file(o.checkpoint)}};
  m.artifacts = files.paths;
  m.artifacts.push_back(summary_path);
  m.write(o.common.out / "manifest.json");
  std::clog << "median L_GSC " << median(l0) << " -> " << median(l1) << ", best top-" << top_n
            << " coherent infidelity " << best << '\n';
}

void cmd_eval(const EvalOptions& o) {
  if (o.common.out.empty()) throw ConfigError("--out is required");
  json training;
  const auto model = surrogate::load_checkpoint(o.checkpoint, &training);
  const json qj = qubit_json_for(o.common.config, training, o.common.sets);
  const auto qubit = qsim::qubit_config_from_json(qj);
  if (!qj.contains("probe")) throw ConfigError("qubit config has no probe block");
  auto strategy = probe::strategy_from_config(qj.at("probe"), qubit);
  const int l_max = model.norm.l_max;
  for (int len : o.lengths) {
    if (len < 1 || len > l_max) {
      throw ConfigError("length " + std::to_string(len) + " outside [1, " + std::to_string(l_max) + "]");
    }
  }
  int win_lo = strategy.length_min, win_hi = strategy.length_max;
  if (training.contains("length_window")) {
    win_lo = training["length_window"][0].get<int>();
    win_hi = training["length_window"][1].get<int>();
  }

  std::vector<probe::ProbeRecord> records;
  if (o.data) {
    records = probe::read_dataset(*o.data);
  } else {
    auto s = strategy;
    s.length_min = win_lo;
    s.length_max = win_hi;
    records = probe::generate_dataset(s, qubit, o.count, sub_seed(o.common.seed, kEvalStream), workers_of(o.common));
  }
  for (const auto& r : records) {
    if (static_cast<int>(r.pulse.length()) > l_max) throw ConfigError("evaluation record longer than l_max");
  }
  const auto metrics = surrogate::evaluate(model, records);
  const auto rows = surrogate::length_generalization_report(model, qubit, strategy, o.lengths, o.count,
                                                            sub_seed(o.common.seed, kLengthStream), win_lo, win_hi,
                                                            workers_of(o.common));

  fs::create_directories(o.common.out);
  const fs::path metrics_path = o.common.out / "metrics.json";
  {
    std::ofstream out(metrics_path);
    if (!out) throw ConfigError("cannot write " + metrics_path.string());
    out << surrogate::to_json(metrics).dump(2) << '\n';
  }
  const fs::path csv_path = o.common.out / "length_generalization.csv";
  {
    std::ofstream out(csv_path);
    if (!out) throw ConfigError("cannot write " + csv_path.string());
    out.precision(17);
    out << "length,count,mae_p,mae_dp,rmse_p,rmse_dp,in_window\n";
    for (const auto& r : rows) {
      out << r.length << ',' << r.count << ',' << r.mae[0] << ',' << r.mae[1] << ',' << r.rmse[0] << ',' << r.rmse[1]
          << ',' << (r.in_window ? 1 : 0) << '\n';
    }
  }
  auto m = start_manifest("eval", o.common);
  m.add_config("qubit", qj);
  m.configs["checkpoint"] = {{"path", o.checkpoint.string()}, {"sha256", sha256_file(o.checkpoint)}};
  m.artifacts = {metrics_path, csv_path};
  m.write(o.common.out / "manifest.json");
  std::clog << "MAE(p) " << metrics.mae[0] << ", A_0.05 " << metrics.a005 << ", A_0.01 " << metrics.a001 << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Surrogate-based pulse calibration for singlet-triplet qubits"};
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  auto add_common = [](CLI::App* sub, Common& c, bool config_required) {
    auto* opt = sub->add_option("--config", c.config, "config file or name in the config directory");
    if (config_required) opt->required();
    sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
    sub->add_option("--out", c.out, "output path")->required();
    sub->add_option("--workers", c.workers, "worker threads (0 = all cores)")->capture_default_str();
    sub->add_option("--set", c.sets, "override a config value, key.path=value (repeatable)");
  };

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "simulate a probe-pulse dataset (JSONL)");
  add_common(gen_cmd, gen.common, true);
  gen_cmd->add_option("--count", gen.count, "number of records")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "train a surrogate on a dataset");
  add_common(train_cmd, tr.common, true);
  train_cmd->add_option("--data", tr.data, "dataset JSONL")->required();

  OptimizeOptions opt;
  auto* opt_cmd = app.add_subcommand("optimize", "optimize gate sets through a trained surrogate");
  add_common(opt_cmd, opt.common, true);
  opt_cmd->add_option("--checkpoint", opt.checkpoint, "surrogate checkpoint")->required();
  opt_cmd->add_option("--qubit", opt.qubit, "qubit config (default: the one stored in the checkpoint)");

  EvalOptions ev;
  std::string lengths = "10,20,30,40,48";
  std::string data;
  auto* eval_cmd = app.add_subcommand("eval", "score a surrogate and its length generalization");
  add_common(eval_cmd, ev.common, false);
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "surrogate checkpoint")->required();
  eval_cmd->add_option("--lengths", lengths, "comma-separated pulse lengths")->capture_default_str();
  eval_cmd->add_option("--count", ev.count, "records per length")->capture_default_str();
  eval_cmd->add_option("--data", data, "score this dataset instead of fresh records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) {
      gen.common.argv = args;
      cmd_gen_data(gen);
    } else if (*train_cmd) {
      tr.common.argv = args;
      cmd_train(tr);
    } else if (*opt_cmd) {
      opt.common.argv = args;
      cmd_optimize(opt);
    } else if (*eval_cmd) {
      ev.common.argv = args;
      ev.lengths = parse_int_list(lengths);
      if (!data.empty()) ev.data = data;
      cmd_eval(ev);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}

}  // namespace stcal::cli
