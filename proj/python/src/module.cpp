#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "consensus_dx/analyzer.hpp"
#include "consensus_dx/config_space.hpp"
#include "consensus_dx/corpus.hpp"
#include "consensus_dx/evaluator.hpp"
#include "consensus_dx/pipeline.hpp"
#include "consensus_dx/synthetic.hpp"

namespace py = pybind11;
using namespace consensus_dx;

namespace {

// Runs a pipeline stage and returns (exit status, captured output).
template <typename Fn>
py::tuple run_stage(Fn&& fn) {
  std::ostringstream out;
  std::ostringstream err;
  int status = 0;
  {
    py::gil_scoped_release release;
    status = guarded(err, [&] { return fn(out); });
  }
  return py::make_tuple(status, out.str() + err.str());
}

std::optional<std::vector<int>> optional_turns(const std::optional<std::vector<int>>& turns) { return turns; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Configuration-ensemble diagnosis prediction core";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<UpstreamError>(m, "UpstreamError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<TurnConfig>(m, "TurnConfig")
      .def_readonly("turn_id", &TurnConfig::turn_id)
      .def_readonly("temperature", &TurnConfig::temperature)
      .def_readonly("top_p", &TurnConfig::top_p)
      .def_readonly("summary_length", &TurnConfig::summary_length)
      .def_property_readonly("strategy", [](const TurnConfig& c) { return to_string(strategy_of(c)); })
      .def("__repr__", [](const TurnConfig& c) {
        std::ostringstream s;
        s << "TurnConfig(turn_id=" << c.turn_id << ", temperature=" << c.temperature << ", top_p=" << c.top_p
          << ", summary_length=" << c.summary_length << ")";
        return s.str();
      });

  m.def("full_grid", &full_grid, "The 18-turn default grid");
  m.def("grid_hash", &grid_hash, py::arg("grid"));
  m.def("character_budget", [](int length, const std::string& unit) {
    return character_budget(length, parse_summary_unit(unit));
  }, py::arg("summary_length"), py::arg("unit") = "characters");

  m.def("levenshtein", &levenshtein, py::arg("a"), py::arg("b"));
  m.def("similarity", &similarity, py::arg("a"), py::arg("b"));
  m.def("normalize", [](const std::string& text, bool strict_removal) {
    return normalize(text, ExpansionMap::defaults(), strict_removal);
  }, py::arg("text"), py::arg("strict_removal") = false);
  m.def("is_match", &is_match, py::arg("prediction"), py::arg("truths"),
        py::arg("threshold") = kDefaultMatchThreshold);
  m.def("majority_vote", [](const std::map<int, std::optional<std::string>>& votes, double threshold, bool exact) {
    const auto o = majority_vote(votes, VoteOptions{threshold, exact});
    py::dict d;
    d["winner"] = o.abstained ? py::object(py::none()) : py::object(py::str(o.winner));
    d["founder"] = o.winner_founder;
    d["clusters"] = o.cluster_sizes;
    d["tie_broken"] = o.tie_broken;
    return d;
  }, py::arg("votes"), py::arg("threshold") = kDefaultMatchThreshold, py::arg("exact") = false,
     "Fuzzy plurality vote over {turn_id: normalized prediction or None}");

  m.def("combination_count", &combination_count, py::arg("n"), py::arg("k"));
  m.def("k_subsets", &k_subsets, py::arg("items"), py::arg("k"));
  m.def("partition", [](const std::vector<std::pair<std::vector<int>, double>>& scored, double threshold) {
    std::vector<CombinationScore> scores;
    for (const auto& [turns, acc] : scored) scores.push_back(CombinationScore{turns, SplitSide::train, acc, 0, 0});
    const auto p = partition(scores, threshold);
    auto turns_of = [](const std::vector<CombinationScore>& v) {
      std::vector<std::vector<int>> out;
      for (const auto& s : v) out.push_back(s.turns);
      return out;
    };
    return py::make_tuple(turns_of(p.high), turns_of(p.low));
  }, py::arg("scores"), py::arg("threshold") = 0.60, "Split (turns, accuracy) pairs into (high, low)");

  m.def("split_corpus", [](const std::filesystem::path& corpus_path, double train_fraction, std::uint64_t seed,
                           const std::string& granularity) {
    const auto s = split_corpus(load_corpus(corpus_path), train_fraction, seed, parse_granularity(granularity));
    auto pairs = [](const std::set<PairKey>& side) {
      std::vector<std::pair<std::string, std::string>> out;
      for (const auto& k : side) out.emplace_back(k.note_id, k.medication);
      return out;
    };
    return py::make_tuple(pairs(s.train_keys), pairs(s.test_keys));
  }, py::arg("corpus"), py::arg("train_fraction") = 0.6, py::arg("seed") = 42, py::arg("granularity") = "pair");

  m.def("write_synthetic_corpus", [](const std::filesystem::path& out, int notes, int meds,
                                     int note_chars, std::uint64_t seed) {
    const auto corpus = make_synthetic_corpus(SyntheticCorpusOptions{notes, meds, note_chars, seed});
    save_corpus(corpus, out);
    return corpus.pairs().size();
  }, py::arg("path"), py::arg("notes") = 40, py::arg("medications_per_note") = 6, py::arg("note_chars") = 4600,
     py::arg("seed") = 7);

  // Pipeline stages on a config file. Each returns (exit_status, output).
  m.def("summarize", [](const std::filesystem::path& config) {
    return run_stage([&](std::ostream& out) { return cmd_summarize(RunConfig::load(config), out); });
  }, py::arg("config"));
  m.def("predict", [](const std::filesystem::path& config, const std::optional<std::vector<int>>& turns) {
    return run_stage([&](std::ostream& out) { return cmd_predict(RunConfig::load(config), optional_turns(turns), out); });
  }, py::arg("config"), py::arg("turns") = py::none());
  m.def("sweep", [](const std::filesystem::path& config) {
    return run_stage([&](std::ostream& out) { return cmd_sweep(RunConfig::load(config), out); });
  }, py::arg("config"));
  m.def("vote", [](const std::filesystem::path& config, const std::vector<int>& turns, const std::string& side) {
    return run_stage([&](std::ostream& out) {
      return cmd_vote(RunConfig::load(config), turns, parse_split_side(side), out);
    });
  }, py::arg("config"), py::arg("turns"), py::arg("split") = "train");
  m.def("analyze", [](const std::filesystem::path& config, const std::optional<std::vector<int>>& ensemble) {
    return run_stage([&](std::ostream& out) { return cmd_analyze(RunConfig::load(config), optional_turns(ensemble), out); });
  }, py::arg("config"), py::arg("ensemble") = py::none());
  m.def("report", [](const std::filesystem::path& config) {
    return run_stage([&](std::ostream& out) { return cmd_report(RunConfig::load(config), out); });
  }, py::arg("config"));
}
