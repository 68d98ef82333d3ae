#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "d2d/cascade.hpp"
#include "d2d/metrics.hpp"
#include "d2d/predictor.hpp"
#include "d2d/redundancy.hpp"
#include "d2d/synthgen.hpp"

namespace d2d {

inline constexpr const char* kToolVersion = "0.1.0";

// All outputs go through temp-file-plus-rename so a crash never leaves a
// truncated artifact behind.
void write_file_atomic(const std::string& path, std::string_view content);

// Reproducibility record written next to every command's primary output.
// Wall-clock timings vary between runs; the digests must not.
class RunManifest {
 public:
  explicit RunManifest(std::string config_hash, std::uint64_t rng_seed = 0)
      : config_hash_(std::move(config_hash)), rng_seed_(rng_seed) {}

  void add_input(const std::string& path);
  void add_output(const std::string& path);  // digests the already-written file
  void add_stage_seconds(const std::string& stage, double seconds);
  std::string to_json_text() const;
  void write(const std::string& path) const;

  const std::vector<std::pair<std::string, std::string>>& outputs() const { return outputs_; }

 private:
  std::string config_hash_;
  std::uint64_t rng_seed_ = 0;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::pair<std::string, double>> stages_;
};

// Loads a trace file; with strict=true any malformed line raises InputError,
// otherwise malformed lines are dropped and counted.
Trace load_trace(const std::string& path, bool strict, std::size_t* dropped = nullptr);

std::string groups_to_json(const GroupPartition& partition);
std::string histogram_to_csv(const std::map<std::size_t, std::size_t>& hist);
std::string metrics_to_csv(const std::vector<GroupMetrics>& metrics);
std::string powerlaw_fit_to_json(const PowerLawFit& fit);
std::string seeds_to_json(const std::vector<SeedChoice>& seeds);
std::string coverage_to_csv(const CoverageStudy& study);
std::string coverage_summary_to_json(const CoverageStudy& study);

// Plot-ready bundles.
std::string fig_redundancy_csv(const RedundancyReport& report);
std::string fig_group_sizes_csv(const std::map<std::size_t, std::size_t>& hist);
std::string fig_coverage_cdf_csv(const CoverageStudy& study);

struct PipelineConfig {
  GeneratorConfig generator;
  std::string out_dir = "pipeline_out";
  Timestamp window_seconds = kSecondsPerDay;
  SeedStrategy strategy = SeedStrategy::tree_root;
  std::size_t sample_size = 100;
  std::size_t min_group_size = 5;
  double transmission_prob = 1.0;
  Tier permission_threshold = Tier::stranger;
  std::uint64_t coverage_seed = 1;
  std::uint64_t train_weeks = 6;
  std::uint64_t test_weeks = 7;
  std::uint64_t fit_xmin = 2;
  TrainConfig train_config;
  unsigned threads = 1;

  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text);
};

// Runs generate -> ingest -> groups -> metrics -> fit -> redundancy -> seed ->
// propagate -> dataset -> predict -> report into config.out_dir and writes
// manifest.json. Returns the manifest.
RunManifest run_pipeline(const PipelineConfig& config, const std::string& config_hash,
                         std::ostream& log);

}  // namespace d2d
