#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "d2d/cascade.hpp"
#include "d2d/digest.hpp"
#include "d2d/metrics.hpp"
#include "d2d/pipeline.hpp"
#include "d2d/predictor.hpp"
#include "d2d/redundancy.hpp"
#include "d2d/synthgen.hpp"

namespace fs = std::filesystem;
using namespace d2d;

namespace {

// Exit codes: 0 success, 1 usage, 2 input/format error, 3 internal error.

struct StageTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RelationshipIndex load_tiers_opt(const std::string& path) {
  if (path.empty()) return RelationshipIndex{};
  return RelationshipIndex::load_file(path);
}

void finalize_manifest(RunManifest& manifest, const std::string& primary_out, double seconds,
                       const std::string& stage) {
  manifest.add_stage_seconds(stage, seconds);
  manifest.add_output(primary_out);
  manifest.write(primary_out + ".manifest.json");
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> read_histogram_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open histogram file: " + path);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line.rfind("size,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected size,count");
    }
    try {
      rows.emplace_back(std::stoull(line.substr(0, comma)), std::stoull(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw InputError(path + ":" + std::to_string(line_no) + ": bad integer");
    }
  }
  return rows;
}

int run(int argc, char** argv) {
  CLI::App app{"d2dtrace: trace analytics and propagation simulation for D2D sharing"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (output is identical for any value)")
      ->capture_default_str();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Generate a synthetic trace");
  std::string gen_config, gen_out = "trace.log", gen_ledger = "ledger.json",
              gen_tiers;
  gen_cmd->add_option("--config", gen_config, "Generator config JSON (defaults when omitted)");
  gen_cmd->add_option("--out", gen_out, "Trace output path")->capture_default_str();
  gen_cmd->add_option("--ledger", gen_ledger, "Ground-truth ledger output path")
      ->capture_default_str();
  gen_cmd->add_option("--tiers", gen_tiers, "Also write the relationship file here");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse and summarize a trace");
  std::string ingest_trace, ingest_out = "summary.json";
  bool ingest_strict = false;
  ingest_cmd->add_option("--trace", ingest_trace, "Trace file")->required();
  ingest_cmd->add_flag("--strict", ingest_strict, "Abort on the first malformed line");
  ingest_cmd->add_option("--out", ingest_out, "Summary JSON output")->capture_default_str();

  // groups
  auto* groups_cmd = app.add_subcommand("groups", "Partition users into encounter groups");
  std::string groups_trace, groups_out = "groups.json", groups_hist;
  groups_cmd->add_option("--trace", groups_trace, "Trace file")->required();
  groups_cmd->add_option("--out", groups_out, "Groups JSON output")->capture_default_str();
  groups_cmd->add_option("--hist", groups_hist, "Group-size histogram CSV output");

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Per-group complex-network metrics");
  std::string metrics_trace, metrics_out = "metrics.csv";
  metrics_cmd->add_option("--trace", metrics_trace, "Trace file")->required();
  metrics_cmd->add_option("--out", metrics_out, "Metrics CSV output")->capture_default_str();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Power-law MLE over a size histogram");
  std::string fit_hist, fit_out = "fit.json";
  std::uint64_t fit_xmin = 2;
  bool fit_scan = false;
  fit_cmd->add_option("--histogram", fit_hist, "size,count CSV")->required();
  fit_cmd->add_option("--xmin", fit_xmin, "Fit xmin")->capture_default_str();
  fit_cmd->add_flag("--scan", fit_scan, "Scan candidate xmin values by KS statistic");
  fit_cmd->add_option("--out", fit_out, "Fit JSON output")->capture_default_str();

  // redundancy
  auto* red_cmd = app.add_subcommand("redundancy", "Reduplicate-traffic time series");
  std::string red_trace, red_out = "redundancy.csv";
  Timestamp red_window = kSecondsPerDay;
  red_cmd->add_option("--trace", red_trace, "Trace file")->required();
  red_cmd->add_option("--window", red_window, "Window seconds")->capture_default_str();
  red_cmd->add_option("--out", red_out, "Redundancy CSV output")->capture_default_str();

  // seed
  auto* seed_cmd = app.add_subcommand("seed", "Select one seed user per group");
  std::string seed_trace, seed_out = "seeds.json", seed_strategy = "tree_root";
  double seed_split = 0.5;
  std::uint64_t seed_rng = 1;
  seed_cmd->add_option("--trace", seed_trace, "Trace file")->required();
  seed_cmd->add_option("--split", seed_split, "Forest window fraction")->capture_default_str();
  seed_cmd->add_option("--strategy", seed_strategy, "tree_root|max_degree|max_strength|random")
      ->capture_default_str();
  seed_cmd->add_option("--seed", seed_rng, "RNG seed for the random strategy")
      ->capture_default_str();
  seed_cmd->add_option("--out", seed_out, "Seeds JSON output")->capture_default_str();

  // propagate
  auto* prop_cmd = app.add_subcommand("propagate", "Replay propagation over sampled groups");
  std::string prop_trace, prop_out = "coverage.csv", prop_summary, prop_strategy = "tree_root",
              prop_tiers, prop_permission = "stranger";
  std::size_t prop_sample = 100, prop_min_size = 5;
  double prop_p = 1.0;
  std::uint64_t prop_seed = 1;
  prop_cmd->add_option("--trace", prop_trace, "Trace file")->required();
  prop_cmd->add_option("--strategy", prop_strategy,
                       "tree_root|max_degree|max_strength|random|exhaustive")
      ->capture_default_str();
  prop_cmd->add_option("--sample", prop_sample, "Groups to sample")->capture_default_str();
  prop_cmd->add_option("--min-size", prop_min_size, "Minimum group size")
      ->capture_default_str();
  prop_cmd->add_option("--p", prop_p, "Transmission probability")->capture_default_str();
  prop_cmd->add_option("--seed", prop_seed, "Sampling/replay RNG seed")->capture_default_str();
  prop_cmd->add_option("--tiers", prop_tiers, "Relationship file for permission gating");
  prop_cmd->add_option("--permission", prop_permission, "stranger|friend|family")
      ->capture_default_str();
  prop_cmd->add_option("--out", prop_out, "Coverage CSV output")->capture_default_str();
  prop_cmd->add_option("--summary", prop_summary,
                       "Coverage summary JSON (default: coverage_summary.json beside --out)");

  // dataset
  auto* data_cmd = app.add_subcommand("dataset", "Emit the pairwise feature dataset");
  std::string data_trace, data_out = "pairs.csv", data_tiers, data_which = "train";
  std::uint64_t data_train_weeks = 6, data_test_weeks = 7;
  data_cmd->add_option("--trace", data_trace, "Trace file")->required();
  data_cmd->add_option("--out", data_out, "Dataset CSV output")->capture_default_str();
  data_cmd->add_option("--which", data_which, "train|test")->capture_default_str();
  data_cmd->add_option("--train-weeks", data_train_weeks, "Training block weeks")
      ->capture_default_str();
  data_cmd->add_option("--test-weeks", data_test_weeks, "Test block weeks")
      ->capture_default_str();
  data_cmd->add_option("--tiers", data_tiers, "Relationship file");

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "Train models and sweep feature subsets");
  std::string pred_trace, pred_out = "predict_report.json", pred_tiers, pred_loss = "logistic";
  std::uint64_t pred_train_weeks = 6, pred_test_weeks = 7;
  std::size_t pred_epochs = 500;
  double pred_lr = 0.5, pred_lambda = 1e-4;
  pred_cmd->add_option("--trace", pred_trace, "Trace file")->required();
  pred_cmd->add_option("--out", pred_out, "Report JSON output")->capture_default_str();
  pred_cmd->add_option("--tiers", pred_tiers, "Relationship file");
  pred_cmd->add_option("--train-weeks", pred_train_weeks, "Training block weeks")
      ->capture_default_str();
  pred_cmd->add_option("--test-weeks", pred_test_weeks, "Test block weeks")
      ->capture_default_str();
  pred_cmd->add_option("--epochs", pred_epochs, "Training epochs")->capture_default_str();
  pred_cmd->add_option("--lr", pred_lr, "Learning rate")->capture_default_str();
  pred_cmd->add_option("--lambda", pred_lambda, "L2 regularization")->capture_default_str();
  pred_cmd->add_option("--loss", pred_loss, "logistic|hinge")->capture_default_str();

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage into an output directory");
  std::string pipe_config, pipe_out_dir;
  pipe_cmd->add_option("--config", pipe_config, "Pipeline config JSON")->required();
  pipe_cmd->add_option("--out-dir", pipe_out_dir, "Override the config's out_dir");

  // report
  auto* report_cmd = app.add_subcommand("report", "Bundle plot-ready CSVs from stage outputs");
  std::string report_dir;
  Timestamp report_window = kSecondsPerDay;
  report_cmd->add_option("--dir", report_dir, "Directory holding stage outputs")->required();
  report_cmd->add_option("--window", report_window, "Redundancy window seconds")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (gen_cmd->parsed()) {
    StageTimer timer;
    GeneratorConfig config;
    std::string config_hash = sha256_hex("default");
    if (!gen_config.empty()) {
      const auto text = read_text_file(gen_config);
      config = GeneratorConfig::from_json_text(text);
      config_hash = sha256_hex(text);
    }
    const auto generated = generate_trace(config, threads);
    std::ostringstream buf;
    write_event_log(buf, generated.trace);
    write_file_atomic(gen_out, buf.str());
    write_file_atomic(gen_ledger, generated.ledger.to_json_text());
    if (!gen_tiers.empty()) {
      RelationshipIndex tiers;
      for (const auto& r : generated.ledger.tiers) tiers.set(r.user_a, r.user_b, r.tier);
      std::ostringstream tbuf;
      tiers.save(tbuf);
      write_file_atomic(gen_tiers, tbuf.str());
    }
    RunManifest manifest(config_hash, config.rng_seed);
    if (!gen_config.empty()) manifest.add_input(gen_config);
    manifest.add_output(gen_ledger);
    if (!gen_tiers.empty()) manifest.add_output(gen_tiers);
    finalize_manifest(manifest, gen_out, timer.seconds(), "generate");
    std::cerr << "generated " << generated.trace.events.size() << " events\n";
    return 0;
  }

  if (ingest_cmd->parsed()) {
    StageTimer timer;
    std::size_t dropped = 0;
    const Trace trace = load_trace(ingest_trace, ingest_strict, &dropped);
    if (dropped > 0) std::cerr << "dropped " << dropped << " malformed lines\n";
    write_file_atomic(ingest_out, summary_to_json(summarize(trace.events)));
    RunManifest manifest(sha256_hex("ingest"));
    manifest.add_input(ingest_trace);
    finalize_manifest(manifest, ingest_out, timer.seconds(), "ingest");
    return 0;
  }

  if (groups_cmd->parsed()) {
    StageTimer timer;
    const Trace trace = load_trace(groups_trace, false);
    const auto graph = EncounterGraph::from_events(trace.events);
    const auto partition = compute_groups(graph);
    write_file_atomic(groups_out, groups_to_json(partition));
    if (!groups_hist.empty()) {
      write_file_atomic(groups_hist, histogram_to_csv(group_size_histogram(partition)));
    }
    RunManifest manifest(sha256_hex("groups"));
    manifest.add_input(groups_trace);
    if (!groups_hist.empty()) manifest.add_output(groups_hist);
    finalize_manifest(manifest, groups_out, timer.seconds(), "groups");
    return 0;
  }

  if (metrics_cmd->parsed()) {
    StageTimer timer;
    const Trace trace = load_trace(metrics_trace, false);
    const auto graph = EncounterGraph::from_events(trace.events);
    const auto partition = compute_groups(graph);
    const auto metrics = compute_group_metrics(graph, partition, threads);
    write_file_atomic(metrics_out, metrics_to_csv(metrics));
    RunManifest manifest(sha256_hex("metrics"));
    manifest.add_input(metrics_trace);
    finalize_manifest(manifest, metrics_out, timer.seconds(), "metrics");
    return 0;
  }

  if (fit_cmd->parsed()) {
    StageTimer timer;
    const auto rows = read_histogram_csv(fit_hist);
    std::vector<std::uint64_t> samples;
    for (const auto& [size, count] : rows) {
      for (std::uint64_t i = 0; i < count; ++i) samples.push_back(size);
    }
    const auto fit = fit_scan ? fit_powerlaw_scan(samples) : fit_powerlaw_mle(samples, fit_xmin);
    write_file_atomic(fit_out, powerlaw_fit_to_json(fit));
    RunManifest manifest(sha256_hex("fit"));
    manifest.add_input(fit_hist);
    finalize_manifest(manifest, fit_out, timer.seconds(), "fit");
    return 0;
  }

  if (red_cmd->parsed()) {
    StageTimer timer;
    const Trace trace = load_trace(red_trace, false);
    const auto report = redundancy_timeseries(trace.events, red_window);
    write_file_atomic(red_out, redundancy_to_csv(report));
    RunManifest manifest(sha256_hex("redundancy"));
    manifest.add_input(red_trace);
    finalize_manifest(manifest, red_out, timer.seconds(), "redundancy");
    return 0;
  }

  if (seed_cmd->parsed()) {
    StageTimer timer;
    const auto strategy = seed_strategy_from_name(seed_strategy);
    if (!strategy || *strategy == SeedStrategy::exhaustive) {
      throw InputError("seed: strategy must be tree_root|max_degree|max_strength|random");
    }
    const Trace trace = load_trace(seed_trace, false);
    const auto graph = EncounterGraph::from_events(trace.events);
    const auto partition = compute_groups(graph);
    const auto split = split_by_fraction(trace.events, seed_split);
    std::unordered_map<GroupId, std::vector<SharingEvent>> group_events;
    for (const auto& ev : split.first) {
      group_events[partition.group_of.at(ev.sender)].push_back(ev);
    }
    std::vector<SeedChoice> seeds(partition.groups.size());
    static const std::vector<SharingEvent> kEmpty;
    for (std::size_t i = 0; i < partition.groups.size(); ++i) {
      const auto& group = partition.groups[i];
      const auto it = group_events.find(group.id);
      const auto forest =
          build_sharing_forest(it == group_events.end() ? kEmpty : it->second, group);
      Rng rng(Rng::mix(seed_rng, group.id));
      seeds[i] = select_seed(forest, *strategy, graph, group, rng);
    }
    write_file_atomic(seed_out, seeds_to_json(seeds));
    RunManifest manifest(sha256_hex("seed"), seed_rng);
    manifest.add_input(seed_trace);
    finalize_manifest(manifest, seed_out, timer.seconds(), "seed");
    return 0;
  }

  if (prop_cmd->parsed()) {
    StageTimer timer;
    const auto strategy = seed_strategy_from_name(prop_strategy);
    if (!strategy) throw InputError("propagate: unknown strategy " + prop_strategy);
    const auto permission = tier_from_name(prop_permission);
    if (!permission) throw InputError("propagate: unknown permission tier " + prop_permission);
    const Trace trace = load_trace(prop_trace, false);
    const auto graph = EncounterGraph::from_events(trace.events);
    const auto partition = compute_groups(graph);
    const auto tiers = load_tiers_opt(prop_tiers);
    CascadeParams params;
    params.transmission_prob = prop_p;
    params.permission_threshold = *permission;
    params.rng_seed = prop_seed;
    const auto study = evaluate_coverage(trace.events, partition, *strategy, params,
                                         prop_sample, prop_min_size, prop_seed, tiers, threads);
    write_file_atomic(prop_out, coverage_to_csv(study));
    const std::string summary_path =
        prop_summary.empty()
            ? (fs::path(prop_out).parent_path() / "coverage_summary.json").string()
            : prop_summary;
    write_file_atomic(summary_path, coverage_summary_to_json(study));
    RunManifest manifest(sha256_hex("propagate"), prop_seed);
    manifest.add_input(prop_trace);
    if (!prop_tiers.empty()) manifest.add_input(prop_tiers);
    manifest.add_output(summary_path);
    finalize_manifest(manifest, prop_out, timer.seconds(), "propagate");
    std::cerr << "mean coverage " << study.mean << "\n";
    return 0;
  }

  if (data_cmd->parsed()) {
    StageTimer timer;
    if (data_which != "train" && data_which != "test") {
      throw InputError("dataset: --which must be train or test");
    }
    const Trace trace = load_trace(data_trace, false);
    const auto tiers = load_tiers_opt(data_tiers);
    DatasetSplitConfig config;
    config.train_weeks = data_train_weeks;
    config.test_weeks = data_test_weeks;
    const auto datasets = build_dataset(trace, config, tiers, threads);
    write_file_atomic(data_out,
                      dataset_to_csv(data_which == "train" ? datasets.train : datasets.test));
    RunManifest manifest(sha256_hex("dataset"));
    manifest.add_input(data_trace);
    if (!data_tiers.empty()) manifest.add_input(data_tiers);
    finalize_manifest(manifest, data_out, timer.seconds(), "dataset");
    return 0;
  }

  if (pred_cmd->parsed()) {
    StageTimer timer;
    const Trace trace = load_trace(pred_trace, false);
    const auto tiers = load_tiers_opt(pred_tiers);
    DatasetSplitConfig config;
    config.train_weeks = pred_train_weeks;
    config.test_weeks = pred_test_weeks;
    const auto datasets = build_dataset(trace, config, tiers, threads);
    TrainConfig tc;
    tc.epochs = pred_epochs;
    tc.learning_rate = pred_lr;
    tc.l2_lambda = pred_lambda;
    if (pred_loss == "hinge") {
      tc.loss = Loss::hinge;
    } else if (pred_loss != "logistic") {
      throw InputError("predict: --loss must be logistic or hinge");
    }
    const auto sweep = feature_subset_sweep(datasets.train, datasets.test, {2, 3}, tc, threads);
    write_file_atomic(pred_out, sweep_to_json(sweep));
    RunManifest manifest(sha256_hex("predict"));
    manifest.add_input(pred_trace);
    if (!pred_tiers.empty()) manifest.add_input(pred_tiers);
    finalize_manifest(manifest, pred_out, timer.seconds(), "predict");
    return 0;
  }

  if (pipe_cmd->parsed()) {
    const auto text = read_text_file(pipe_config);
    auto config = PipelineConfig::from_json_text(text);
    if (!pipe_out_dir.empty()) config.out_dir = pipe_out_dir;
    config.threads = threads;
    run_pipeline(config, sha256_hex(text), std::cerr);
    return 0;
  }

  if (report_cmd->parsed()) {
    StageTimer timer;
    // Rebuild plot-ready CSVs from existing stage outputs.
    const auto trace_path = (fs::path(report_dir) / "trace.log").string();
    const Trace trace = load_trace(trace_path, false);
    const auto graph = EncounterGraph::from_events(trace.events);
    const auto partition = compute_groups(graph);
    const auto hist = group_size_histogram(partition);
    const auto redundancy = redundancy_timeseries(trace.events, report_window);
    write_file_atomic((fs::path(report_dir) / "fig6a_redundancy.csv").string(),
                      fig_redundancy_csv(redundancy));
    write_file_atomic((fs::path(report_dir) / "fig6b_group_sizes.csv").string(),
                      fig_group_sizes_csv(hist));
    const std::string cov_path = (fs::path(report_dir) / "coverage_summary.json").string();
    std::string fig6c = "coverage,cdf\n";
    if (fs::exists(cov_path)) {
      const auto j = nlohmann::json::parse(read_text_file(cov_path));
      char buf[96];
      for (const auto& point : j.at("cdf")) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", point.at(0).get<double>(),
                      point.at(1).get<double>());
        fig6c += buf;
      }
    }
    const std::string fig6c_path = (fs::path(report_dir) / "fig6c_coverage_cdf.csv").string();
    write_file_atomic(fig6c_path, fig6c);
    RunManifest manifest(sha256_hex("report"));
    manifest.add_input(trace_path);
    manifest.add_output((fs::path(report_dir) / "fig6a_redundancy.csv").string());
    manifest.add_output((fs::path(report_dir) / "fig6b_group_sizes.csv").string());
    finalize_manifest(manifest, fig6c_path, timer.seconds(), "report");
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
