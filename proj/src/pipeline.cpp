#include "d2d/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "d2d/digest.hpp"
#include "d2d/metrics.hpp"
#include "d2d/redundancy.hpp"

namespace d2d {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void write_file_atomic(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open output file: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InputError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw InputError("rename failed for " + path + ": " + ec.message());
}

void RunManifest::add_input(const std::string& path) {
  inputs_.emplace_back(path, sha256_file_hex(path));
}

void RunManifest::add_output(const std::string& path) {
  outputs_.emplace_back(path, sha256_file_hex(path));
}

void RunManifest::add_stage_seconds(const std::string& stage, double seconds) {
  stages_.emplace_back(stage, seconds);
}

std::string RunManifest::to_json_text() const {
  ordered_json j;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = config_hash_;
  j["rng_seed"] = rng_seed_;
  ordered_json in = ordered_json::object();
  for (const auto& [path, digest] : inputs_) in[fs::path(path).filename().string()] = digest;
  j["input_digests"] = in;
  ordered_json st = ordered_json::object();
  for (const auto& [stage, secs] : stages_) st[stage] = secs;
  j["stage_seconds"] = st;
  ordered_json out = ordered_json::object();
  for (const auto& [path, digest] : outputs_) out[fs::path(path).filename().string()] = digest;
  j["output_digests"] = out;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
  write_file_atomic(path, to_json_text());
}

Trace load_trace(const std::string& path, bool strict, std::size_t* dropped) {
  auto result = parse_event_log_file(path, strict);
  if (strict && !result.errors.empty()) {
    const auto& e = result.errors.front();
    throw InputError(path + ":" + std::to_string(e.line_no) + ": " + e.reason);
  }
  if (dropped) *dropped = result.errors.size();
  return std::move(result.trace);
}

std::string groups_to_json(const GroupPartition& partition) {
  ordered_json j = ordered_json::object();
  for (const auto& group : partition.groups) {
    j[std::to_string(group.id)] = group.members;
  }
  return j.dump(2) + "\n";
}

std::string histogram_to_csv(const std::map<std::size_t, std::size_t>& hist) {
  std::ostringstream out;
  out << "size,count\n";
  for (const auto& [size, count] : hist) out << size << ',' << count << '\n';
  return out.str();
}

std::string metrics_to_csv(const std::vector<GroupMetrics>& metrics) {
  std::ostringstream out;
  // approximate=1 marks groups large enough that sampled BFS sources were
  // used: avg_path_length is then an estimate and diameter a lower bound.
  out << "group_id,size,global_clustering,mean_local_clustering,avg_path_length,diameter,"
         "approximate\n";
  char buf[64];
  for (const auto& m : metrics) {
    out << m.group_id << ',' << m.size << ',';
    std::snprintf(buf, sizeof buf, "%.6f", m.global_clustering);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6f", m.mean_local_clustering);
    out << buf << ',';
    if (m.avg_path_length) {
      std::snprintf(buf, sizeof buf, "%.6f", *m.avg_path_length);
      out << buf;
    }
    out << ',' << m.diameter << ',' << (m.approximate ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string powerlaw_fit_to_json(const PowerLawFit& fit) {
  ordered_json j;
  j["alpha_hat"] = fit.alpha_hat;
  j["xmin"] = fit.xmin;
  j["n_tail"] = fit.n_tail;
  j["ks_stat"] = fit.ks_stat;
  return j.dump(2) + "\n";
}

std::string seeds_to_json(const std::vector<SeedChoice>& seeds) {
  ordered_json j = ordered_json::array();
  for (const auto& s : seeds) {
    ordered_json row;
    row["group_id"] = s.group_id;
    row["seed"] = s.seed;
    row["strategy"] = std::string(seed_strategy_name(s.strategy));
    j.push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string coverage_to_csv(const CoverageStudy& study) {
  std::ostringstream out;
  out << "group_id,size,seed,coverage,coverage_active\n";
  char buf[32];
  for (std::size_t i = 0; i < study.outcomes.size(); ++i) {
    const auto& o = study.outcomes[i];
    out << o.group_id << ',' << study.group_sizes[i] << ',' << o.seed << ',';
    std::snprintf(buf, sizeof buf, "%.6f", o.coverage);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6f", o.coverage_active);
    out << buf << '\n';
  }
  return out.str();
}

std::string coverage_summary_to_json(const CoverageStudy& study) {
  ordered_json j;
  j["mean"] = study.mean;
  j["median"] = study.median;
  ordered_json cdf = ordered_json::array();
  for (const auto& [x, fx] : study.cdf) cdf.push_back({x, fx});
  j["cdf"] = cdf;
  return j.dump(2) + "\n";
}

std::string fig_redundancy_csv(const RedundancyReport& report) {
  // Wide per-category redundant-byte time series, one row per window.
  std::map<Timestamp, std::array<std::uint64_t, kNumCategories>> rows;
  for (const auto& row : report.rows) {
    rows[row.window_start_ts][static_cast<int>(row.category)] += row.redundant_bytes;
  }
  std::ostringstream out;
  out << "window_start_ts";
  for (int c = 0; c < kNumCategories; ++c) {
    out << ',' << category_name(static_cast<Category>(c)) << "_redundant_bytes";
  }
  out << ",total_redundant_bytes\n";
  for (const auto& [window, cells] : rows) {
    out << window;
    std::uint64_t total = 0;
    for (int c = 0; c < kNumCategories; ++c) {
      out << ',' << cells[c];
      total += cells[c];
    }
    out << ',' << total << '\n';
  }
  return out.str();
}

std::string fig_group_sizes_csv(const std::map<std::size_t, std::size_t>& hist) {
  std::ostringstream out;
  out << "size,count,log10_size,log10_count\n";
  char buf[32];
  for (const auto& [size, count] : hist) {
    out << size << ',' << count << ',';
    std::snprintf(buf, sizeof buf, "%.6f", std::log10(static_cast<double>(size)));
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6f", std::log10(static_cast<double>(count)));
    out << buf << '\n';
  }
  return out.str();
}

std::string fig_coverage_cdf_csv(const CoverageStudy& study) {
  std::ostringstream out;
  out << "coverage,cdf\n";
  char buf[32];
  for (const auto& [x, fx] : study.cdf) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6f", fx);
    out << buf << '\n';
  }
  return out.str();
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad pipeline config JSON: ") + e.what());
  }
  PipelineConfig c;
  if (j.contains("generator")) {
    c.generator = GeneratorConfig::from_json_text(j.at("generator").dump());
  }
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("window_seconds")) c.window_seconds = j.at("window_seconds").get<Timestamp>();
  if (j.contains("strategy")) {
    const auto s = seed_strategy_from_name(j.at("strategy").get<std::string>());
    if (!s) throw InputError("unknown strategy in pipeline config");
    c.strategy = *s;
  }
  if (j.contains("sample_size")) c.sample_size = j.at("sample_size").get<std::size_t>();
  if (j.contains("min_group_size"))
    c.min_group_size = j.at("min_group_size").get<std::size_t>();
  if (j.contains("transmission_prob"))
    c.transmission_prob = j.at("transmission_prob").get<double>();
  if (j.contains("permission_threshold")) {
    const auto t = tier_from_name(j.at("permission_threshold").get<std::string>());
    if (!t) throw InputError("unknown permission_threshold in pipeline config");
    c.permission_threshold = *t;
  }
  if (j.contains("coverage_seed")) c.coverage_seed = j.at("coverage_seed").get<std::uint64_t>();
  if (j.contains("train_weeks")) c.train_weeks = j.at("train_weeks").get<std::uint64_t>();
  if (j.contains("test_weeks")) c.test_weeks = j.at("test_weeks").get<std::uint64_t>();
  if (j.contains("fit_xmin")) c.fit_xmin = j.at("fit_xmin").get<std::uint64_t>();
  if (j.contains("epochs")) c.train_config.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("learning_rate"))
    c.train_config.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("l2_lambda")) c.train_config.l2_lambda = j.at("l2_lambda").get<double>();
  if (j.contains("loss")) {
    const auto name = j.at("loss").get<std::string>();
    if (name == "logistic") {
      c.train_config.loss = Loss::logistic;
    } else if (name == "hinge") {
      c.train_config.loss = Loss::hinge;
    } else {
      throw InputError("unknown loss in pipeline config: " + name);
    }
  }
  if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  return c;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open pipeline config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

RunManifest run_pipeline(const PipelineConfig& config, const std::string& config_hash,
                         std::ostream& log) {
  fs::create_directories(config.out_dir);
  const auto path_in = [&](const char* name) {
    return (fs::path(config.out_dir) / name).string();
  };

  RunManifest manifest(config_hash, config.generator.rng_seed);
  using clock = std::chrono::steady_clock;
  auto stage_start = clock::now();
  auto finish_stage = [&](const char* name) {
    const auto now = clock::now();
    manifest.add_stage_seconds(name, std::chrono::duration<double>(now - stage_start).count());
    stage_start = now;
    log << "stage " << name << " done\n";
  };

  // generate
  const auto generated = generate_trace(config.generator, config.threads);
  const std::string trace_path = path_in("trace.log");
  {
    std::ostringstream buf;
    write_event_log(buf, generated.trace);
    write_file_atomic(trace_path, buf.str());
  }
  write_file_atomic(path_in("ledger.json"), generated.ledger.to_json_text());
  RelationshipIndex tiers;
  for (const auto& r : generated.ledger.tiers) tiers.set(r.user_a, r.user_b, r.tier);
  {
    std::ostringstream buf;
    tiers.save(buf);
    write_file_atomic(path_in("tiers.csv"), buf.str());
  }
  finish_stage("generate");

  // ingest (re-parse what we just wrote: exercises the format end to end)
  const Trace trace = load_trace(trace_path, /*strict=*/true);
  write_file_atomic(path_in("summary.json"), summary_to_json(summarize(trace.events)));
  finish_stage("ingest");

  // groups
  const auto graph = EncounterGraph::from_events(trace.events);
  const auto partition = compute_groups(graph);
  write_file_atomic(path_in("groups.json"), groups_to_json(partition));
  const auto hist = group_size_histogram(partition);
  write_file_atomic(path_in("group_sizes.csv"), histogram_to_csv(hist));
  finish_stage("groups");

  // metrics
  const auto metrics = compute_group_metrics(graph, partition, config.threads);
  write_file_atomic(path_in("metrics.csv"), metrics_to_csv(metrics));
  finish_stage("metrics");

  // fit
  std::vector<std::uint64_t> sizes;
  sizes.reserve(partition.groups.size());
  for (const auto& g : partition.groups) sizes.push_back(g.members.size());
  const auto fit = fit_powerlaw_mle(sizes, config.fit_xmin);
  write_file_atomic(path_in("fit.json"), powerlaw_fit_to_json(fit));
  finish_stage("fit");

  // redundancy
  const auto redundancy = redundancy_timeseries(trace.events, config.window_seconds);
  write_file_atomic(path_in("redundancy.csv"), redundancy_to_csv(redundancy));
  finish_stage("redundancy");

  // seed: one choice per group from the first-half forest
  {
    const auto split = split_by_fraction(trace.events, 0.5);
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
      Rng rng(Rng::mix(config.coverage_seed, group.id));
      seeds[i] = select_seed(forest,
                             config.strategy == SeedStrategy::exhaustive ? SeedStrategy::tree_root
                                                                         : config.strategy,
                             graph, group, rng);
    }
    write_file_atomic(path_in("seeds.json"), seeds_to_json(seeds));
  }
  finish_stage("seed");

  // propagate
  CascadeParams params;
  params.transmission_prob = config.transmission_prob;
  params.permission_threshold = config.permission_threshold;
  params.rng_seed = config.coverage_seed;
  const auto study =
      evaluate_coverage(trace.events, partition, config.strategy, params, config.sample_size,
                        config.min_group_size, config.coverage_seed, tiers, config.threads);
  write_file_atomic(path_in("coverage.csv"), coverage_to_csv(study));
  write_file_atomic(path_in("coverage_summary.json"), coverage_summary_to_json(study));
  finish_stage("propagate");

  // dataset + predict
  DatasetSplitConfig split_config;
  split_config.train_weeks = config.train_weeks;
  split_config.test_weeks = config.test_weeks;
  split_config.features.gps_cell_deg = config.generator.gps_cell_deg;
  const auto datasets = build_dataset(trace, split_config, tiers, config.threads);
  write_file_atomic(path_in("pairs_train.csv"), dataset_to_csv(datasets.train));
  write_file_atomic(path_in("pairs_test.csv"), dataset_to_csv(datasets.test));
  finish_stage("dataset");

  const auto sweep =
      feature_subset_sweep(datasets.train, datasets.test, {2, 3}, config.train_config,
                           config.threads);
  write_file_atomic(path_in("predict_report.json"), sweep_to_json(sweep));
  finish_stage("predict");

  // report
  write_file_atomic(path_in("fig6a_redundancy.csv"), fig_redundancy_csv(redundancy));
  write_file_atomic(path_in("fig6b_group_sizes.csv"), fig_group_sizes_csv(hist));
  write_file_atomic(path_in("fig6c_coverage_cdf.csv"), fig_coverage_cdf_csv(study));
  finish_stage("report");

  for (const char* name :
       {"trace.log", "ledger.json", "tiers.csv", "summary.json", "groups.json",
        "group_sizes.csv", "metrics.csv", "fit.json", "redundancy.csv", "seeds.json",
        "coverage.csv", "coverage_summary.json", "pairs_train.csv", "pairs_test.csv",
        "predict_report.json", "fig6a_redundancy.csv", "fig6b_group_sizes.csv",
        "fig6c_coverage_cdf.csv"}) {
    manifest.add_output(path_in(name));
  }
  manifest.write(path_in("manifest.json"));
  return manifest;
}

}  // namespace d2d
