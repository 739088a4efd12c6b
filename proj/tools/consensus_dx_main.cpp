// consensus-dx: staged configuration-ensemble pipeline.
//
//   summarize -> predict -> sweep -> analyze -> report
//
// plus `vote` for inspecting one turn tuple item by item.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "consensus_dx/pipeline.hpp"

using namespace consensus_dx;

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> corpus;
  std::optional<std::string> output_dir;
  std::optional<std::string> cache_dir;
  std::optional<std::string> grid;
  std::optional<std::string> summary_unit;
  std::optional<std::string> provider;
  std::optional<std::string> base_url;
  std::optional<std::string> model;
  std::optional<std::string> replay_dir;
  std::optional<double> rate_limit;
  std::optional<unsigned> workers;
  std::optional<double> train_fraction;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> granularity;
  std::optional<double> threshold;
  std::optional<double> partition_threshold;
  std::optional<std::size_t> k;
  std::optional<std::size_t> top_n;
  std::optional<std::string> expansion_map;
  bool strict_removal = false;
  bool exact_vote = false;
  bool allow_partial = false;
};

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config ? RunConfig::load(*o.config) : RunConfig{};
  if (o.corpus) c.corpus = *o.corpus;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.cache_dir) c.cache_dir = *o.cache_dir;
  if (o.grid) c.grid = *o.grid;
  if (o.summary_unit) c.summary_unit = parse_summary_unit(*o.summary_unit);
  if (o.provider) c.provider.kind = parse_provider_kind(*o.provider);
  if (o.base_url) c.provider.base_url = *o.base_url;
  if (o.model) c.provider.model = *o.model;
  if (o.replay_dir) c.provider.replay_dir = *o.replay_dir;
  if (o.rate_limit) c.provider.rate_limit_per_minute = *o.rate_limit;
  if (o.workers) c.workers = *o.workers;
  if (o.train_fraction) c.split.train_fraction = *o.train_fraction;
  if (o.seed) c.split.seed = *o.seed;
  if (o.granularity) c.split.granularity = parse_granularity(*o.granularity);
  if (o.threshold) c.evaluation.threshold = *o.threshold;
  if (o.partition_threshold) c.evaluation.partition_threshold = *o.partition_threshold;
  if (o.k) c.evaluation.k = *o.k;
  if (o.top_n) c.evaluation.top_n = *o.top_n;
  if (o.expansion_map) c.evaluation.expansion_map = *o.expansion_map;
  if (o.strict_removal) c.evaluation.strict_removal = true;
  if (o.exact_vote) c.evaluation.exact_vote = true;
  if (o.allow_partial) c.allow_partial = true;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("consensus-dx"));

  CLI::App app{"Configuration-ensemble diagnosis prediction over a decoding-parameter grid", "consensus-dx"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "Run configuration (JSON)");
  app.add_option("--corpus", o.corpus, "Annotated corpus (JSON lines)");
  app.add_option("--output-dir", o.output_dir, "Directory for all stage outputs");
  app.add_option("--cache-dir", o.cache_dir, "Response cache directory");
  app.add_option("--grid", o.grid, "Grid override file (JSON)");
  app.add_option("--summary-unit", o.summary_unit, "characters | tokens");
  app.add_option("--provider", o.provider, "http | replay | synthetic");
  app.add_option("--base-url", o.base_url, "Chat-completions base URL");
  app.add_option("--model", o.model, "Model name");
  app.add_option("--replay-dir", o.replay_dir, "Recorded responses for the replay provider");
  app.add_option("--rate-limit", o.rate_limit, "Requests per minute (remote providers)");
  app.add_option("--workers", o.workers, "Concurrent requests");
  app.add_option("--train-fraction", o.train_fraction, "Train share of the split");
  app.add_option("--seed", o.seed, "Split seed");
  app.add_option("--granularity", o.granularity, "pair | note");
  app.add_option("--threshold", o.threshold, "Fuzzy match threshold");
  app.add_option("--partition-threshold", o.partition_threshold, "High/low accuracy boundary");
  app.add_option("--k", o.k, "Combination size");
  app.add_option("--top-n", o.top_n, "Combinations in the intersection matrix");
  app.add_option("--expansion-map", o.expansion_map, "Shorthand expansion map (JSON)");
  app.add_flag("--strict-removal", o.strict_removal, "Delete non-alphanumerics instead of spacing them");
  app.add_flag("--exact-vote", o.exact_vote, "Count identical strings only when voting");
  app.add_flag("--allow-partial", o.allow_partial, "Continue past failed cells");

  auto* summarize = app.add_subcommand("summarize", "Summarize every note at every grid summary length");
  auto* predict = app.add_subcommand("predict", "Run the diagnosis prompt over turns x ground-truth pairs");
  std::string predict_turns;
  predict->add_option("--turns", predict_turns, "Comma-separated turn ids (default: whole grid)");
  auto* sweep = app.add_subcommand("sweep", "Score every k-subset of turns on the train split");
  auto* vote = app.add_subcommand("vote", "Majority vote of one turn tuple, item by item");
  std::string vote_turns;
  std::string vote_split = "train";
  vote->add_option("--turns", vote_turns, "Comma-separated turn ids")->required();
  vote->add_option("--split", vote_split, "train | test | all");
  auto* analyze = app.add_subcommand("analyze", "Partition, turn frequencies, intersections, held-out test");
  std::string ensemble;
  analyze->add_option("--ensemble", ensemble, "Evaluate this turn tuple instead of the selected one");
  auto* report = app.add_subcommand("report", "Print accuracy tables from report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  return guarded(std::cerr, [&]() -> int {
    const auto config = build_config(o);
    if (summarize->parsed()) return cmd_summarize(config, std::cout);
    if (predict->parsed()) {
      std::optional<std::vector<int>> turns;
      if (!predict_turns.empty()) turns = parse_turn_list(predict_turns);
      return cmd_predict(config, turns, std::cout);
    }
    if (sweep->parsed()) return cmd_sweep(config, std::cout);
    if (vote->parsed()) return cmd_vote(config, parse_turn_list(vote_turns), parse_split_side(vote_split), std::cout);
    if (analyze->parsed()) {
      std::optional<std::vector<int>> turns;
      if (!ensemble.empty()) turns = parse_turn_list(ensemble);
      return cmd_analyze(config, turns, std::cout);
    }
    if (report->parsed()) return cmd_report(config, std::cout);
    return kExitUsage;
  });
}
