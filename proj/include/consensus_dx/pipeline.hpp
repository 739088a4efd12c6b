#pragma once

#include <cstdint>
#include <filesystem>
#include <exception>
#include <ostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "consensus_dx/config_space.hpp"
#include "consensus_dx/corpus.hpp"
#include "consensus_dx/errors.hpp"
#include "consensus_dx/evaluator.hpp"
#include "consensus_dx/llm_gateway.hpp"
#include "consensus_dx/synthetic.hpp"

namespace consensus_dx {

/// Exit statuses of every command.
enum ExitStatus : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct ProviderSettings {
  ProviderKind kind = ProviderKind::http;
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  double rate_limit_per_minute = 60.0;
  int max_attempts = 5;
  int backoff_base_ms = 500;
  int timeout_s = 60;
  std::optional<std::filesystem::path> replay_dir;  // defaults to cache_dir
  SyntheticVoterModel synthetic;
  std::optional<double> synthetic_default_accuracy;  // applied to turns missing from the map
};

struct SplitSettings {
  double train_fraction = 0.6;
  std::uint64_t seed = 42;
  SplitGranularity granularity = SplitGranularity::pair;
};

struct EvaluationSettings {
  double threshold = kDefaultMatchThreshold;
  double partition_threshold = 0.60;
  std::size_t k = 5;
  std::size_t top_n = 10;
  std::optional<std::filesystem::path> expansion_map;
  bool strict_removal = false;
  bool exact_vote = false;
};

/// Everything a pipeline stage needs. Loaded from JSON (relative paths are
/// resolved against the config file's directory) and overridable by flags.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> grid;
  SummaryUnit summary_unit = SummaryUnit::characters;
  ProviderSettings provider;
  unsigned workers = 4;
  bool allow_partial = false;
  int summary_max_tokens = 1024;
  int prediction_max_tokens = 64;
  SplitSettings split;
  EvaluationSettings evaluation;

  static RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  std::string to_json() const;

  /// Throws ValidationError for out-of-range settings or unresolvable paths.
  void validate() const;

  std::filesystem::path summaries_path() const { return output_dir / "summaries.jsonl"; }
  std::filesystem::path predictions_dir() const { return output_dir / "predictions"; }
  std::filesystem::path split_path() const { return output_dir / "split.json"; }
  std::filesystem::path scores_path() const { return output_dir / "scores.csv"; }
};

std::vector<TurnConfig> grid_of(const RunConfig& config);
EvaluationOptions evaluation_options(const RunConfig& config);
std::unique_ptr<Gateway> make_gateway(const RunConfig& config, const Corpus& corpus,
                                      const std::vector<TurnConfig>& grid);

/// Parses "2,7,10" into turn ids.
std::vector<int> parse_turn_list(const std::string& text);

// Stages. Each returns an ExitStatus and writes a human-readable summary to `out`.
int cmd_summarize(const RunConfig& config, std::ostream& out);
int cmd_predict(const RunConfig& config, const std::optional<std::vector<int>>& turns, std::ostream& out);
int cmd_sweep(const RunConfig& config, std::ostream& out);
int cmd_vote(const RunConfig& config, const std::vector<int>& turns, SplitSide side, std::ostream& out);
int cmd_analyze(const RunConfig& config, const std::optional<std::vector<int>>& ensemble, std::ostream& out);
int cmd_report(const RunConfig& config, std::ostream& out);

/// Runs `fn`, mapping ValidationError to exit 2 and other errors to exit 1
/// (message on `err`).
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace consensus_dx
