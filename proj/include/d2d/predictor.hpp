#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "d2d/trace.hpp"
#include "d2d/types.hpp"

namespace d2d {

inline constexpr std::size_t kNumFeatures = 14;
inline constexpr std::size_t kNumFeatureFamilies = 7;

// Column layout of a feature vector. Families group related columns and are
// the unit of the subset sweep.
//   f1   behavior_similarity      cosine of 24-bin hour-of-day histograms
//   f2a  pref_entropy_u           entropy (bits) of u's category distribution
//   f2b  pref_entropy_v
//   f2c  pref_similarity          cosine of the two category distributions
//   f3a  encounter_count          pair encounters in the feature window
//   f3b  mean_gap_hours           mean gap between consecutive encounters
//   f3c  gap_cv                   coefficient of variation of gaps
//   f4   trajectory_jaccard       Jaccard of visited GPS cell sets
//   f4m  trajectory_missing       1 when either user has no GPS in window
//   f5a  log_group_size           ln of the pair's group size
//   f5b  pair_local_clustering    mean local clustering of the two users
//   f6a  tree_distance            hop distance in the sharing forest, capped
//   f6b  common_ancestor_depth    depth of the lowest common ancestor
//   f7   permission_tier          ordinal relationship tier 0/1/2
extern const std::array<const char*, kNumFeatures> kFeatureColumnNames;
extern const std::array<int, kNumFeatures> kFeatureFamilyOfColumn;  // 0..6
extern const std::array<const char*, kNumFeatureFamilies> kFeatureFamilyNames;

inline constexpr double kTreeDistanceCap = 16.0;

// Shannon entropy in bits of a distribution that sums to 1 within 1e-9.
double shannon_entropy(std::span<const double> distribution);

struct FeatureParams {
  double gps_cell_deg = 0.01;
};

struct PairRow {
  UserId user_a = 0;  // < user_b
  UserId user_b = 0;
  std::array<double, kNumFeatures> features{};
  int label = 0;
};

struct WindowRange {
  Timestamp lo = 0;  // inclusive
  Timestamp hi = 0;  // exclusive
};

struct PairDataset {
  std::vector<PairRow> rows;  // ordered by (user_a, user_b)
  WindowRange feature_window;
  WindowRange label_window;
  // Per-feature standardization fit on training rows; applied to both sides.
  std::array<double, kNumFeatures> feature_mean{};
  std::array<double, kNumFeatures> feature_std{};
};

// Feature state for one window: per-user aggregates, the window encounter
// graph, its partition and per-group sharing forests. Candidate pairs are the
// window graph's edges.
class FeatureWindowContext {
 public:
  FeatureWindowContext(std::span<const SharingEvent> window_events, WindowRange window,
                       const FeatureParams& params);
  ~FeatureWindowContext();
  FeatureWindowContext(FeatureWindowContext&&) noexcept;
  FeatureWindowContext& operator=(FeatureWindowContext&&) noexcept;

  std::vector<UserPair> candidate_pairs() const;  // sorted
  std::array<double, kNumFeatures> extract(UserPair pair,
                                           const RelationshipIndex& tiers) const;
  WindowRange window() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct DatasetSplitConfig {
  std::uint64_t train_weeks = 6;  // features weeks 1..5, labels week 6
  std::uint64_t test_weeks = 7;   // features weeks 7..12, labels week 13
  FeatureParams features;
};

struct DatasetPair {
  PairDataset train;
  PairDataset test;
};

// Builds temporally split datasets. Candidates come from feature-window data
// only; the label is 1 iff the pair shares at least once in the label window.
// Standardization is fit on train and copied onto test.
DatasetPair build_dataset(const Trace& trace, const DatasetSplitConfig& config,
                          const RelationshipIndex& tiers, unsigned threads = 1);

std::string dataset_to_csv(const PairDataset& dataset);

enum class Loss { logistic, hinge };

struct TrainConfig {
  Loss loss = Loss::logistic;
  double l2_lambda = 1e-4;
  std::size_t epochs = 500;
  double learning_rate = 0.5;
};

struct LinearModel {
  std::vector<double> weights;  // one per active column
  double bias = 0.0;
  Loss loss = Loss::logistic;
  double l2_lambda = 0.0;
  std::vector<std::size_t> columns;  // active feature columns
};

// Loss and gradient of the regularized objective on standardized rows;
// exposed for the finite-difference checks.
double model_loss(const PairDataset& dataset, const LinearModel& model);
void model_gradient(const PairDataset& dataset, const LinearModel& model,
                    std::vector<double>& grad_w, double& grad_b);

// Full-batch gradient descent from zero weights with halving backtracking, so
// the recorded loss sequence is nonincreasing. Throws on single-class data.
LinearModel train(const PairDataset& dataset, const TrainConfig& config,
                  std::vector<std::size_t> columns = {});

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double auc = 0.0;
};

Metrics evaluate(const LinearModel& model, const PairDataset& dataset);

// AUC by rank statistic with midrank tie handling.
double auc_from_scores(std::span<const double> scores, std::span<const int> labels);

struct SweepRow {
  std::vector<int> families;  // ascending family indices; empty = full set
  std::string label;          // e.g. "f1+f3" or "full"
  Metrics train_metrics;
  Metrics test_metrics;
};

// One model per family subset of size in k_set, plus the full set last.
// Ordering: ascending k, then lexicographic family indices.
std::vector<SweepRow> feature_subset_sweep(const PairDataset& train, const PairDataset& test,
                                           const std::vector<std::size_t>& k_set,
                                           const TrainConfig& config, unsigned threads = 1);

std::string sweep_to_json(const std::vector<SweepRow>& rows);

}  // namespace d2d
