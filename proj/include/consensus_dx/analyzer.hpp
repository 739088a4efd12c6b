#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "consensus_dx/evaluator.hpp"

namespace consensus_dx {

inline constexpr double kDefaultPartitionThreshold = 0.60;

struct Partition {
  double threshold = kDefaultPartitionThreshold;
  std::vector<CombinationScore> high;  // accuracy >= threshold
  std::vector<CombinationScore> low;
};

/// Splits scores at `threshold`; a score equal to the threshold is high.
/// Input order is preserved within each side.
Partition partition(const std::vector<CombinationScore>& scores, double threshold = kDefaultPartitionThreshold);

enum class PartitionSide { high, low };

std::string to_string(PartitionSide s);

struct TurnFrequency {
  PartitionSide side = PartitionSide::high;
  std::map<int, std::size_t> counts;
  std::size_t combinations = 0;
};

/// Membership count of each turn across one side. Turns in `universe` that
/// never appear are reported with count 0.
TurnFrequency turn_frequency(const Partition& p, PartitionSide side, const std::vector<int>& universe = {});

/// Same counting over an arbitrary score list.
std::map<int, std::size_t> membership_counts(const std::vector<CombinationScore>& scores);

struct IntersectionMatrix {
  std::vector<CombinationScore> combos;
  std::vector<std::vector<int>> cells;  // |turns_i ∩ turns_j|
};

/// Pairwise overlap of the first top_n scores (in the order given, which
/// for sweep output is best first).
IntersectionMatrix intersection_matrix(const std::vector<CombinationScore>& scores, std::size_t top_n = 10);

/// The k turns with the highest membership across `top_scores`, ties to the
/// smaller turn id, returned ascending.
std::vector<int> agreed_turns(const std::vector<CombinationScore>& top_scores, std::size_t k = 5);

/// Top-k turns by frequency, ties to the smaller turn id, returned
/// ascending. Throws ValidationError when fewer than k turns have a nonzero count.
std::vector<int> select_ensemble(const TurnFrequency& frequency, std::size_t k = 5);

struct TestEvaluation {
  std::vector<CombinationScore> singles;  // ascending turn id
  CombinationScore best_single;
  CombinationScore ensemble;
};

TestEvaluation evaluate_on_test(const ScoringTable& table, const std::vector<int>& ensemble);

struct AnalyzeOptions {
  double partition_threshold = kDefaultPartitionThreshold;
  std::size_t top_n = 10;
  std::size_t ensemble_size = 5;
  std::optional<std::vector<int>> ensemble_override;
};

struct AnalysisReport {
  double match_threshold = kDefaultMatchThreshold;
  double partition_threshold = kDefaultPartitionThreshold;
  std::size_t combination_size = 0;
  std::size_t top_n = 0;

  std::size_t train_items = 0;
  std::vector<CombinationScore> train_singles;
  CombinationScore best_single_train;
  CombinationScore best_combo_train;
  CombinationScore worst_combo_train;
  std::size_t combination_count = 0;

  std::size_t high_count = 0;
  std::size_t low_count = 0;
  TurnFrequency high_frequency;
  TurnFrequency low_frequency;
  IntersectionMatrix intersection;
  std::vector<int> agreed;

  std::vector<int> ensemble;
  std::string ensemble_source;  // high_frequency | overall_frequency_fallback | override
  bool ensemble_fallback = false;

  std::optional<TestEvaluation> test;
  std::size_t test_items = 0;
  std::vector<std::string> warnings;
};

/// Post-hoc analysis of a train-side sweep plus held-out evaluation.
/// `train_scores` must be sweep output (sorted by score_order). Pass a null
/// test table when the test side is empty.
AnalysisReport analyze(const std::vector<CombinationScore>& train_scores, const ScoringTable& train_table,
                       const ScoringTable* test_table, double match_threshold, const AnalyzeOptions& options = {});

std::string report_to_json(const AnalysisReport& report);
/// side,turn_id,count
std::string frequency_to_csv(const TurnFrequency& high, const TurnFrequency& low);
/// row,col,value
std::string intersection_to_csv(const IntersectionMatrix& m);

}  // namespace consensus_dx
