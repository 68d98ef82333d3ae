#include "d2d/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "d2d/graph.hpp"
#include "d2d/influence.hpp"
#include "d2d/metrics.hpp"
#include "d2d/parallel.hpp"

namespace d2d {

const std::array<const char*, kNumFeatures> kFeatureColumnNames = {
    "f1", "f2a", "f2b", "f2c", "f3a", "f3b", "f3c",
    "f4", "f4m", "f5a", "f5b", "f6a", "f6b", "f7"};

const std::array<int, kNumFeatures> kFeatureFamilyOfColumn = {0, 1, 1, 1, 2, 2, 2,
                                                              3, 3, 4, 4, 5, 5, 6};

const std::array<const char*, kNumFeatureFamilies> kFeatureFamilyNames = {
    "f1", "f2", "f3", "f4", "f5", "f6", "f7"};

double shannon_entropy(std::span<const double> distribution) {
  double sum = 0.0;
  for (const double p : distribution) {
    if (p < 0.0) throw InputError("shannon_entropy: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("shannon_entropy: distribution must sum to 1");
  double h = 0.0;
  for (const double p : distribution) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::uint64_t pack_cell(double lat, double lon, double cell_deg) {
  const auto qa = static_cast<std::int64_t>(std::floor(lat / cell_deg));
  const auto qo = static_cast<std::int64_t>(std::floor(lon / cell_deg));
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(qa)) << 32) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(qo));
}

}  // namespace

struct FeatureWindowContext::Impl {
  WindowRange window;
  FeatureParams params;
  std::unordered_map<UserId, std::array<double, 24>> hour_hist;
  std::unordered_map<UserId, std::array<double, kNumCategories>> cat_counts;
  std::unordered_map<UserId, std::unordered_set<std::uint64_t>> cells;
  std::unordered_map<UserPair, std::vector<Timestamp>, UserPairHash> pair_ts;
  EncounterGraph graph;
  GroupPartition partition;
  std::unordered_map<GroupId, std::size_t> group_size;
  std::unordered_map<GroupId, SharingForest> forests;
  std::unordered_map<UserId, double> local_cc;
};

FeatureWindowContext::FeatureWindowContext(std::span<const SharingEvent> window_events,
                                           WindowRange window, const FeatureParams& params)
    : impl_(std::make_unique<Impl>()) {
  impl_->window = window;
  impl_->params = params;
  for (const auto& ev : window_events) {
    if (ev.ts < window.lo || ev.ts >= window.hi) {
      throw InputError("feature window context: event outside window");
    }
    const int hour = static_cast<int>(((ev.ts % kSecondsPerDay) + kSecondsPerDay) %
                                      kSecondsPerDay / 3600);
    for (const UserId u : {ev.sender, ev.receiver}) {
      impl_->hour_hist[u][hour] += 1.0;
      impl_->cat_counts[u][static_cast<int>(ev.category)] += 1.0;
      if (ev.geo) {
        impl_->cells[u].insert(pack_cell(ev.geo->lat, ev.geo->lon, params.gps_cell_deg));
      }
    }
    impl_->pair_ts[UserPair(ev.sender, ev.receiver)].push_back(ev.ts);
  }
  for (auto& [pair, ts] : impl_->pair_ts) std::sort(ts.begin(), ts.end());

  impl_->graph = EncounterGraph::from_events(window_events);
  impl_->partition = compute_groups(impl_->graph);
  for (const auto& group : impl_->partition.groups) {
    impl_->group_size[group.id] = group.members.size();
  }

  // Per-group forests from the window's events.
  std::unordered_map<GroupId, std::vector<SharingEvent>> group_events;
  for (const auto& ev : window_events) {
    group_events[impl_->partition.group_of.at(ev.sender)].push_back(ev);
  }
  for (const auto& group : impl_->partition.groups) {
    const auto it = group_events.find(group.id);
    static const std::vector<SharingEvent> kEmpty;
    impl_->forests.emplace(group.id,
                           build_sharing_forest(it == group_events.end() ? kEmpty : it->second,
                                                group));
  }
  for (const UserId u : impl_->graph.user_ids()) {
    impl_->local_cc[u] = local_clustering(impl_->graph, u);
  }
}

FeatureWindowContext::~FeatureWindowContext() = default;
FeatureWindowContext::FeatureWindowContext(FeatureWindowContext&&) noexcept = default;
FeatureWindowContext& FeatureWindowContext::operator=(FeatureWindowContext&&) noexcept = default;

WindowRange FeatureWindowContext::window() const { return impl_->window; }

std::vector<UserPair> FeatureWindowContext::candidate_pairs() const {
  std::vector<UserPair> pairs;
  pairs.reserve(impl_->pair_ts.size());
  for (const auto& [pair, ts] : impl_->pair_ts) pairs.push_back(pair);
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::array<double, kNumFeatures> FeatureWindowContext::extract(
    UserPair pair, const RelationshipIndex& tiers) const {
  const Impl& ctx = *impl_;
  const auto hu = ctx.hour_hist.find(pair.a);
  const auto hv = ctx.hour_hist.find(pair.b);
  if (hu == ctx.hour_hist.end() || hv == ctx.hour_hist.end()) {
    throw InputError("extract: user not active in feature window");
  }
  std::array<double, kNumFeatures> f{};

  f[0] = cosine(hu->second, hv->second);

  const auto& cu = ctx.cat_counts.at(pair.a);
  const auto& cv = ctx.cat_counts.at(pair.b);
  auto entropy_of_counts = [](const std::array<double, kNumCategories>& counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total == 0.0) return 0.0;
    std::array<double, kNumCategories> dist;
    for (int i = 0; i < kNumCategories; ++i) dist[i] = counts[i] / total;
    return shannon_entropy(dist);
  };
  f[1] = entropy_of_counts(cu);
  f[2] = entropy_of_counts(cv);
  f[3] = cosine(cu, cv);

  const auto& ts = ctx.pair_ts.at(pair);
  f[4] = static_cast<double>(ts.size());
  if (ts.size() >= 2) {
    std::vector<double> gaps(ts.size() - 1);
    for (std::size_t i = 1; i < ts.size(); ++i) {
      gaps[i - 1] = static_cast<double>(ts[i] - ts[i - 1]) / 3600.0;
    }
    const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) /
                        static_cast<double>(gaps.size());
    f[5] = mean;
    if (mean > 0.0) {
      double var = 0.0;
      for (const double g : gaps) var += (g - mean) * (g - mean);
      var /= static_cast<double>(gaps.size());
      f[6] = std::sqrt(var) / mean;
    }
  }

  const auto cells_u = ctx.cells.find(pair.a);
  const auto cells_v = ctx.cells.find(pair.b);
  if (cells_u == ctx.cells.end() || cells_v == ctx.cells.end() ||
      cells_u->second.empty() || cells_v->second.empty()) {
    f[7] = 0.0;
    f[8] = 1.0;
  } else {
    std::size_t inter = 0;
    const auto& small = cells_u->second.size() <= cells_v->second.size() ? cells_u->second
                                                                         : cells_v->second;
    const auto& large = cells_u->second.size() <= cells_v->second.size() ? cells_v->second
                                                                         : cells_u->second;
    for (const auto c : small) inter += large.count(c);
    const std::size_t uni = cells_u->second.size() + cells_v->second.size() - inter;
    f[7] = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    f[8] = 0.0;
  }

  const GroupId gid = ctx.partition.group_of.at(pair.a);
  f[9] = std::log(static_cast<double>(ctx.group_size.at(gid)));
  f[10] = 0.5 * (ctx.local_cc.at(pair.a) + ctx.local_cc.at(pair.b));

  const auto& forest = ctx.forests.at(gid);
  const auto dist = forest.tree_distance(pair.a, pair.b);
  f[11] = dist ? std::min(static_cast<double>(*dist), kTreeDistanceCap) : kTreeDistanceCap;
  const auto lca = forest.common_ancestor_depth(pair.a, pair.b);
  f[12] = lca ? static_cast<double>(*lca) : 0.0;

  f[13] = static_cast<double>(static_cast<int>(tiers.tier_of(pair.a, pair.b)));
  return f;
}

namespace {

std::vector<SharingEvent> events_in(const std::vector<SharingEvent>& events, WindowRange w) {
  std::vector<SharingEvent> out;
  for (const auto& ev : events) {
    if (ev.ts >= w.lo && ev.ts < w.hi) out.push_back(ev);
  }
  return out;
}

PairDataset build_side(const std::vector<SharingEvent>& events, WindowRange feature_w,
                       WindowRange label_w, const FeatureParams& params,
                       const RelationshipIndex& tiers, unsigned threads) {
  PairDataset ds;
  ds.feature_window = feature_w;
  ds.label_window = label_w;

  const auto feature_events = events_in(events, feature_w);
  const FeatureWindowContext ctx(feature_events, feature_w, params);

  std::unordered_set<UserPair, UserPairHash> label_pairs;
  for (const auto& ev : events) {
    if (ev.ts >= label_w.lo && ev.ts < label_w.hi) {
      label_pairs.insert(UserPair(ev.sender, ev.receiver));
    }
  }

  const auto pairs = ctx.candidate_pairs();
  ds.rows.resize(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    PairRow row;
    row.user_a = pairs[i].a;
    row.user_b = pairs[i].b;
    row.features = ctx.extract(pairs[i], tiers);
    row.label = label_pairs.count(pairs[i]) ? 1 : 0;
    ds.rows[i] = row;
  });
  return ds;
}

void fit_standardization(PairDataset& train) {
  const double n = static_cast<double>(train.rows.size());
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    double mean = 0.0;
    for (const auto& row : train.rows) mean += row.features[c];
    mean = n > 0 ? mean / n : 0.0;
    double var = 0.0;
    for (const auto& row : train.rows) {
      const double d = row.features[c] - mean;
      var += d * d;
    }
    var = n > 0 ? var / n : 0.0;
    train.feature_mean[c] = mean;
    train.feature_std[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

}  // namespace

DatasetPair build_dataset(const Trace& trace, const DatasetSplitConfig& config,
                          const RelationshipIndex& tiers, unsigned threads) {
  const std::uint64_t total_weeks = config.train_weeks + config.test_weeks;
  if (config.train_weeks < 2 || config.test_weeks < 2) {
    throw InputError("build_dataset: train_weeks and test_weeks must each be >= 2");
  }
  if (trace.max_ts - trace.min_ts + 1 < static_cast<Timestamp>(total_weeks) * kSecondsPerWeek) {
    throw InputError("build_dataset: trace span shorter than train_weeks + test_weeks");
  }
  auto week_start = [&](std::uint64_t week_index) {  // 1-based
    return trace.min_ts + static_cast<Timestamp>(week_index - 1) * kSecondsPerWeek;
  };

  DatasetPair out;
  const WindowRange train_features{week_start(1), week_start(config.train_weeks)};
  const WindowRange train_labels{week_start(config.train_weeks),
                                 week_start(config.train_weeks + 1)};
  const WindowRange test_features{week_start(config.train_weeks + 1), week_start(total_weeks)};
  const WindowRange test_labels{week_start(total_weeks), week_start(total_weeks + 1)};

  out.train = build_side(trace.events, train_features, train_labels, config.features, tiers,
                         threads);
  out.test = build_side(trace.events, test_features, test_labels, config.features, tiers,
                        threads);
  if (out.train.rows.empty()) throw InputError("build_dataset: empty train candidate set");
  if (out.test.rows.empty()) throw InputError("build_dataset: empty test candidate set");
  fit_standardization(out.train);
  out.test.feature_mean = out.train.feature_mean;
  out.test.feature_std = out.train.feature_std;
  return out;
}

std::string dataset_to_csv(const PairDataset& dataset) {
  std::ostringstream out;
  out << "user_a,user_b";
  for (const auto* name : kFeatureColumnNames) out << ',' << name;
  out << ",label\n";
  char buf[32];
  for (const auto& row : dataset.rows) {
    out << row.user_a << ',' << row.user_b;
    for (const double v : row.features) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << ',' << buf;
    }
    out << ',' << row.label << '\n';
  }
  return out.str();
}

namespace {

double standardized(const PairDataset& ds, const PairRow& row, std::size_t col) {
  return (row.features[col] - ds.feature_mean[col]) / ds.feature_std[col];
}

double margin(const PairDataset& ds, const PairRow& row, const LinearModel& m) {
  double z = m.bias;
  for (std::size_t j = 0; j < m.columns.size(); ++j) {
    z += m.weights[j] * standardized(ds, row, m.columns[j]);
  }
  return z;
}

double softplus(double t) {
  if (t > 35.0) return t;
  if (t < -35.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double model_loss(const PairDataset& dataset, const LinearModel& model) {
  const double n = static_cast<double>(dataset.rows.size());
  double loss = 0.0;
  for (const auto& row : dataset.rows) {
    const double y = row.label == 1 ? 1.0 : -1.0;
    const double z = margin(dataset, row, model);
    loss += model.loss == Loss::logistic ? softplus(-y * z) : std::max(0.0, 1.0 - y * z);
  }
  loss /= n;
  double reg = 0.0;
  for (const double w : model.weights) reg += w * w;
  return loss + 0.5 * model.l2_lambda * reg;
}

void model_gradient(const PairDataset& dataset, const LinearModel& model,
                    std::vector<double>& grad_w, double& grad_b) {
  const std::size_t k = model.columns.size();
  grad_w.assign(k, 0.0);
  grad_b = 0.0;
  const double n = static_cast<double>(dataset.rows.size());
  for (const auto& row : dataset.rows) {
    const double y = row.label == 1 ? 1.0 : -1.0;
    const double z = margin(dataset, row, model);
    double coef = 0.0;
    if (model.loss == Loss::logistic) {
      coef = -y * sigmoid(-y * z);
    } else {
      coef = (1.0 - y * z) > 0.0 ? -y : 0.0;
    }
    for (std::size_t j = 0; j < k; ++j) {
      grad_w[j] += coef * standardized(dataset, row, model.columns[j]);
    }
    grad_b += coef;
  }
  for (std::size_t j = 0; j < k; ++j) grad_w[j] = grad_w[j] / n + model.l2_lambda * model.weights[j];
  grad_b /= n;
}

LinearModel train(const PairDataset& dataset, const TrainConfig& config,
                  std::vector<std::size_t> columns) {
  if (columns.empty()) {
    columns.resize(kNumFeatures);
    std::iota(columns.begin(), columns.end(), std::size_t{0});
  }
  bool has_pos = false, has_neg = false;
  for (const auto& row : dataset.rows) {
    (row.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw InputError("train: need at least one row of each class");

  LinearModel model;
  model.loss = config.loss;
  model.l2_lambda = config.l2_lambda;
  model.columns = std::move(columns);
  model.weights.assign(model.columns.size(), 0.0);
  model.bias = 0.0;

  double lr = config.learning_rate;
  double loss = model_loss(dataset, model);
  std::vector<double> grad_w;
  double grad_b = 0.0;
  LinearModel candidate = model;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    model_gradient(dataset, model, grad_w, grad_b);
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      for (std::size_t j = 0; j < model.weights.size(); ++j) {
        candidate.weights[j] = model.weights[j] - lr * grad_w[j];
      }
      candidate.bias = model.bias - lr * grad_b;
      const double candidate_loss = model_loss(dataset, candidate);
      if (candidate_loss <= loss + 1e-15) {
        model.weights = candidate.weights;
        model.bias = candidate.bias;
        loss = candidate_loss;
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;  // step size exhausted, converged
  }
  return model;
}

Metrics evaluate(const LinearModel& model, const PairDataset& dataset) {
  Metrics m;
  if (dataset.rows.empty()) return m;
  std::vector<double> scores(dataset.rows.size());
  std::vector<int> labels(dataset.rows.size());
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const auto& row = dataset.rows[i];
    const double z = margin(dataset, row, model);
    scores[i] = z;
    labels[i] = row.label;
    const bool pred = z >= 0.0;  // probability threshold 0.5
    const bool actual = row.label == 1;
    if (pred == actual) ++correct;
    if (pred && actual) ++tp;
    if (pred && !actual) ++fp;
    if (!pred && actual) ++fn;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.rows.size());
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.auc = auc_from_scores(scores, labels);
  return m;
}

double auc_from_scores(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::size_t n_pos = 0;
  for (const int y : labels) n_pos += y == 1;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<SweepRow> feature_subset_sweep(const PairDataset& train_ds,
                                           const PairDataset& test_ds,
                                           const std::vector<std::size_t>& k_set,
                                           const TrainConfig& config, unsigned threads) {
  std::vector<std::vector<int>> subsets;
  std::vector<std::size_t> ks(k_set);
  std::sort(ks.begin(), ks.end());
  for (const std::size_t k : ks) {
    if (k == 0 || k > kNumFeatureFamilies) {
      throw InputError("feature_subset_sweep: subset size out of range");
    }
    std::vector<int> combo(k);
    std::iota(combo.begin(), combo.end(), 0);
    for (;;) {
      subsets.push_back(combo);
      int pos = static_cast<int>(k) - 1;
      while (pos >= 0 && combo[pos] == static_cast<int>(kNumFeatureFamilies - k + pos)) --pos;
      if (pos < 0) break;
      ++combo[pos];
      for (std::size_t q = pos + 1; q < k; ++q) combo[q] = combo[q - 1] + 1;
    }
  }
  subsets.push_back({});  // full set, last

  std::vector<SweepRow> rows(subsets.size());
  parallel_for(subsets.size(), threads, [&](std::size_t i) {
    SweepRow row;
    row.families = subsets[i];
    std::vector<std::size_t> columns;
    if (row.families.empty()) {
      row.label = "full";
    } else {
      std::string label;
      for (const int fam : row.families) {
        if (!label.empty()) label += '+';
        label += kFeatureFamilyNames[fam];
      }
      row.label = label;
      for (std::size_t c = 0; c < kNumFeatures; ++c) {
        if (std::find(row.families.begin(), row.families.end(), kFeatureFamilyOfColumn[c]) !=
            row.families.end()) {
          columns.push_back(c);
        }
      }
    }
    const auto model = train(train_ds, config, columns);
    row.train_metrics = evaluate(model, train_ds);
    row.test_metrics = evaluate(model, test_ds);
    rows[i] = row;
  });
  return rows;
}

std::string sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  auto metrics_json = [](const Metrics& m) {
    nlohmann::ordered_json mj;
    mj["accuracy"] = m.accuracy;
    mj["precision"] = m.precision;
    mj["recall"] = m.recall;
    mj["auc"] = m.auc;
    return mj;
  };
  for (const auto& row : rows) {
    nlohmann::ordered_json rj;
    rj["families"] = row.label;
    rj["k"] = row.families.empty() ? kNumFeatureFamilies : row.families.size();
    rj["train"] = metrics_json(row.train_metrics);
    rj["test"] = metrics_json(row.test_metrics);
    j.push_back(rj);
  }
  return j.dump(2) + "\n";
}

}  // namespace d2d
