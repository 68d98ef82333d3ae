#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "d2d/cascade.hpp"
#include "d2d/digest.hpp"
#include "d2d/metrics.hpp"
#include "d2d/pipeline.hpp"
#include "d2d/predictor.hpp"
#include "d2d/redundancy.hpp"
#include "d2d/synthgen.hpp"

namespace py = pybind11;
using namespace d2d;

namespace {

RelationshipIndex tiers_from_ledger(const GroundTruthLedger& ledger) {
  RelationshipIndex tiers;
  for (const auto& r : ledger.tiers) tiers.set(r.user_a, r.user_b, r.tier);
  return tiers;
}

SeedStrategy strategy_or_throw(const std::string& name) {
  const auto s = seed_strategy_from_name(name);
  if (!s) throw InputError("unknown strategy: " + name);
  return *s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trace analytics and propagation simulation for D2D sharing";
  m.attr("__version__") = kToolVersion;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<Trace>(m, "Trace")
      .def_readonly("min_ts", &Trace::min_ts)
      .def_readonly("max_ts", &Trace::max_ts)
      .def("num_events", [](const Trace& t) { return t.events.size(); })
      .def("__len__", [](const Trace& t) { return t.events.size(); });

  m.def("default_generator_config_json",
        []() { return GeneratorConfig{}.to_json_text(); });

  m.def(
      "generate_trace",
      [](const std::string& config_json, const std::string& trace_path,
         const std::string& ledger_path, unsigned threads) {
        const auto config = GeneratorConfig::from_json_text(config_json);
        const auto generated = generate_trace(config, threads);
        std::ostringstream buf;
        write_event_log(buf, generated.trace);
        write_file_atomic(trace_path, buf.str());
        if (!ledger_path.empty()) {
          write_file_atomic(ledger_path, generated.ledger.to_json_text());
        }
        return generated.trace.events.size();
      },
      py::arg("config_json"), py::arg("trace_path"), py::arg("ledger_path") = "",
      py::arg("threads") = 1);

  m.def(
      "load_trace",
      [](const std::string& path, bool strict) { return load_trace(path, strict); },
      py::arg("path"), py::arg("strict") = false);

  m.def("summary_json",
        [](const Trace& t) { return summary_to_json(summarize(t.events)); });

  m.def("groups_json", [](const Trace& t) {
    const auto graph = EncounterGraph::from_events(t.events);
    return groups_to_json(compute_groups(graph));
  });

  m.def("group_size_histogram", [](const Trace& t) {
    const auto graph = EncounterGraph::from_events(t.events);
    const auto hist = group_size_histogram(compute_groups(graph));
    std::vector<std::pair<std::size_t, std::size_t>> rows(hist.begin(), hist.end());
    return rows;
  });

  m.def(
      "metrics_csv",
      [](const Trace& t, unsigned threads) {
        const auto graph = EncounterGraph::from_events(t.events);
        const auto partition = compute_groups(graph);
        return metrics_to_csv(compute_group_metrics(graph, partition, threads));
      },
      py::arg("trace"), py::arg("threads") = 1);

  m.def(
      "sample_powerlaw_sizes",
      [](std::size_t n, double alpha, std::uint64_t xmin, std::uint64_t seed) {
        Rng rng(seed);
        return sample_powerlaw_sizes(n, alpha, xmin, rng);
      },
      py::arg("n"), py::arg("alpha"), py::arg("xmin"), py::arg("seed"));

  m.def(
      "fit_powerlaw",
      [](const std::vector<std::uint64_t>& sizes, std::uint64_t xmin) {
        const auto fit = fit_powerlaw_mle(sizes, xmin);
        py::dict d;
        d["alpha_hat"] = fit.alpha_hat;
        d["xmin"] = fit.xmin;
        d["n_tail"] = fit.n_tail;
        d["ks_stat"] = fit.ks_stat;
        return d;
      },
      py::arg("sizes"), py::arg("xmin") = 2);

  m.def(
      "redundancy_csv",
      [](const Trace& t, Timestamp window_seconds) {
        return redundancy_to_csv(redundancy_timeseries(t.events, window_seconds));
      },
      py::arg("trace"), py::arg("window_seconds") = kSecondsPerDay);

  m.def(
      "category_redundancy_ranking",
      [](const Trace& t, Timestamp window_seconds) {
        const auto ranking =
            category_redundancy_ranking(redundancy_timeseries(t.events, window_seconds));
        std::vector<std::pair<std::string, double>> rows;
        for (const auto& r : ranking) {
          rows.emplace_back(std::string(category_name(r.category)), r.redundant_ratio);
        }
        return rows;
      },
      py::arg("trace"), py::arg("window_seconds") = kSecondsPerDay);

  m.def(
      "seeds_json",
      [](const Trace& t, double split, const std::string& strategy, std::uint64_t seed) {
        const auto strat = strategy_or_throw(strategy);
        const auto graph = EncounterGraph::from_events(t.events);
        const auto partition = compute_groups(graph);
        const auto halves = split_by_fraction(t.events, split);
        std::unordered_map<GroupId, std::vector<SharingEvent>> group_events;
        for (const auto& ev : halves.first) {
          group_events[partition.group_of.at(ev.sender)].push_back(ev);
        }
        std::vector<SeedChoice> seeds(partition.groups.size());
        static const std::vector<SharingEvent> kEmpty;
        for (std::size_t i = 0; i < partition.groups.size(); ++i) {
          const auto& group = partition.groups[i];
          const auto it = group_events.find(group.id);
          const auto forest =
              build_sharing_forest(it == group_events.end() ? kEmpty : it->second, group);
          Rng rng(Rng::mix(seed, group.id));
          seeds[i] = select_seed(forest, strat, graph, group, rng);
        }
        return seeds_to_json(seeds);
      },
      py::arg("trace"), py::arg("split") = 0.5, py::arg("strategy") = "tree_root",
      py::arg("seed") = 1);

  m.def(
      "coverage",
      [](const Trace& t, const std::string& strategy, std::size_t sample_size,
         std::size_t min_group_size, double p, std::uint64_t seed, unsigned threads) {
        const auto graph = EncounterGraph::from_events(t.events);
        const auto partition = compute_groups(graph);
        CascadeParams params;
        params.transmission_prob = p;
        params.rng_seed = seed;
        RelationshipIndex tiers;
        const auto study = evaluate_coverage(t.events, partition, strategy_or_throw(strategy),
                                             params, sample_size, min_group_size, seed, tiers,
                                             threads);
        py::dict d;
        d["mean"] = study.mean;
        d["median"] = study.median;
        std::vector<double> coverages;
        for (const auto& o : study.outcomes) coverages.push_back(o.coverage);
        d["coverages"] = coverages;
        return d;
      },
      py::arg("trace"), py::arg("strategy") = "tree_root", py::arg("sample_size") = 100,
      py::arg("min_group_size") = 5, py::arg("p") = 1.0, py::arg("seed") = 1,
      py::arg("threads") = 1);

  m.def("shannon_entropy", [](const std::vector<double>& dist) {
    return shannon_entropy(dist);
  });

  m.def("auc_from_scores",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
          return auc_from_scores(scores, labels);
        });

  m.def(
      "dataset_csv",
      [](const Trace& t, std::uint64_t train_weeks, std::uint64_t test_weeks,
         const std::string& which, unsigned threads) {
        DatasetSplitConfig config;
        config.train_weeks = train_weeks;
        config.test_weeks = test_weeks;
        RelationshipIndex tiers;
        const auto datasets = build_dataset(t, config, tiers, threads);
        if (which == "train") return dataset_to_csv(datasets.train);
        if (which == "test") return dataset_to_csv(datasets.test);
        throw InputError("which must be train or test");
      },
      py::arg("trace"), py::arg("train_weeks") = 6, py::arg("test_weeks") = 7,
      py::arg("which") = "train", py::arg("threads") = 1);

  m.def(
      "feature_sweep_json",
      [](const Trace& t, std::uint64_t train_weeks, std::uint64_t test_weeks,
         const std::vector<std::size_t>& k_set, std::size_t epochs, double learning_rate,
         double l2_lambda, const std::string& loss, unsigned threads) {
        DatasetSplitConfig config;
        config.train_weeks = train_weeks;
        config.test_weeks = test_weeks;
        RelationshipIndex tiers;
        const auto datasets = build_dataset(t, config, tiers, threads);
        TrainConfig tc;
        tc.epochs = epochs;
        tc.learning_rate = learning_rate;
        tc.l2_lambda = l2_lambda;
        if (loss == "hinge") {
          tc.loss = Loss::hinge;
        } else if (loss != "logistic") {
          throw InputError("loss must be logistic or hinge");
        }
        return sweep_to_json(
            feature_subset_sweep(datasets.train, datasets.test, k_set, tc, threads));
      },
      py::arg("trace"), py::arg("train_weeks") = 6, py::arg("test_weeks") = 7,
      py::arg("k_set") = std::vector<std::size_t>{2, 3}, py::arg("epochs") = 500,
      py::arg("learning_rate") = 0.5, py::arg("l2_lambda") = 1e-4,
      py::arg("loss") = "logistic", py::arg("threads") = 1);

  m.def(
      "run_pipeline",
      [](const std::string& config_json, const std::string& out_dir, unsigned threads) {
        auto config = PipelineConfig::from_json_text(config_json);
        if (!out_dir.empty()) config.out_dir = out_dir;
        config.threads = threads;
        std::ostringstream log;
        const auto manifest = run_pipeline(config, sha256_hex(config_json), log);
        return manifest.to_json_text();
      },
      py::arg("config_json"), py::arg("out_dir") = "", py::arg("threads") = 1);

  m.def("sha256_hex", [](const std::string& data) { return sha256_hex(data); });
}
