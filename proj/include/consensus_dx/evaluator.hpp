#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "consensus_dx/corpus.hpp"
#include "consensus_dx/predictor.hpp"

namespace consensus_dx {

/// Shorthand -> expansion, matched on whole words after lowercasing.
class ExpansionMap {
 public:
  ExpansionMap() = default;
  /// Throws ValidationError when a key is not a lowercase alphanumeric phrase
  /// or an expansion contains a key as a whole word (expansion must be final).
  explicit ExpansionMap(std::map<std::string, std::string> entries);

  /// chf -> congestive heart failure, gerd -> gastroesophageal reflux disease.
  static ExpansionMap defaults();
  static ExpansionMap load(const std::filesystem::path& path);
  static ExpansionMap parse(const std::string& json_text);

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  /// Expansion of the longest key that matches `text` at `pos` as a whole
  /// word, with the key's length; nullptr when none does.
  std::pair<const std::string*, std::size_t> match_at(std::string_view text, std::size_t pos) const;

 private:
  std::map<std::string, std::string> entries_;
};

/// lowercase -> whole-word expansion -> non-alphanumerics to spaces (or
/// deleted, with strict_removal) -> collapse whitespace -> trim.
std::string normalize(std::string_view text, const ExpansionMap& map, bool strict_removal = false);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein(a, b) / max(|a|, |b|); 1 for two empty strings.
double similarity(std::string_view a, std::string_view b);

inline constexpr double kDefaultMatchThreshold = 0.60;

/// True iff some truth is at least `threshold` similar. Throws
/// ValidationError on an empty truth list.
bool is_match(std::string_view prediction, const std::vector<std::string>& truths,
              double threshold = kDefaultMatchThreshold);

struct VoteOptions {
  double threshold = kDefaultMatchThreshold;
  /// Count identical strings only instead of fuzzy clusters.
  bool exact = false;
};

/// turn_id -> normalized prediction; nullopt marks an error-status cell.
using VoteMap = std::map<int, std::optional<std::string>>;

struct VoteOutcome {
  PairKey item;
  std::string winner;  // empty when abstained
  int winner_founder = 0;
  std::map<std::string, int> cluster_sizes;  // representative -> votes
  bool tie_broken = false;
  bool abstained = false;
  bool correct = false;
};

/// Plurality vote over fuzzy clusters. Votes are visited in ascending turn
/// id; each joins the first cluster whose representative (its founding vote)
/// it matches, or founds a new one. The largest cluster wins; ties go to the
/// cluster founded by the smallest turn id. With no ok votes the outcome
/// abstains.
VoteOutcome majority_vote(const VoteMap& votes, const VoteOptions& options = {});

/// As above, and scores the winner against the normalized truths.
VoteOutcome majority_vote(const VoteMap& votes, const std::vector<std::string>& normalized_truths,
                          const VoteOptions& options = {});

enum class SplitSide { train, test, all };

std::string to_string(SplitSide s);
SplitSide parse_split_side(const std::string& s);

struct CombinationScore {
  std::vector<int> turns;  // strictly increasing
  SplitSide split_side = SplitSide::train;
  double accuracy = 0.0;
  std::size_t correct_count = 0;
  std::size_t total = 0;

  bool operator==(const CombinationScore&) const = default;
};

/// Descending accuracy (compared exactly as fractions), then ascending turn tuple.
bool score_order(const CombinationScore& a, const CombinationScore& b);

struct EvaluationOptions {
  double threshold = kDefaultMatchThreshold;
  bool exact_vote = false;
  bool strict_removal = false;
  ExpansionMap expansions = ExpansionMap::defaults();
};

/// Normalized predictions and pairwise match decisions for a set of items,
/// computed once so that scoring thousands of subsets only counts clusters.
class ScoringTable {
 public:
  /// Throws ValidationError when `keys` is empty or a (turn, key) cell is
  /// absent from the matrix.
  ScoringTable(const PredictionMatrix& matrix, const Corpus& corpus, std::vector<PairKey> keys,
               const EvaluationOptions& options = {}, SplitSide side = SplitSide::train);

  const std::vector<int>& turns() const noexcept { return turns_; }
  const std::vector<PairKey>& keys() const noexcept { return keys_; }
  std::size_t item_count() const noexcept { return keys_.size(); }
  SplitSide side() const noexcept { return side_; }

  CombinationScore single(int turn_id) const;
  CombinationScore combo(std::span<const int> turn_ids) const;
  VoteOutcome vote(std::size_t item, std::span<const int> turn_ids) const;

  /// Normalized votes of the given turns for one item.
  VoteMap votes(std::size_t item, std::span<const int> turn_ids) const;
  const std::vector<std::string>& truths(std::size_t item) const { return truths_[item]; }

 private:
  std::size_t column(int turn_id) const;
  std::vector<std::size_t> columns(std::span<const int> turn_ids) const;

  std::vector<int> turns_;
  std::vector<PairKey> keys_;
  SplitSide side_;
  std::size_t width_ = 0;
  std::vector<std::vector<std::string>> truths_;
  std::vector<std::optional<std::string>> text_;  // item * width + column
  std::vector<unsigned char> correct_;            // item * width + column
  std::vector<unsigned char> match_;              // (item * width + a) * width + b
};

CombinationScore single_accuracy(const PredictionMatrix& matrix, const Corpus& corpus, int turn_id,
                                 const std::vector<PairKey>& keys, const EvaluationOptions& options = {});

CombinationScore combo_accuracy(const PredictionMatrix& matrix, const Corpus& corpus, std::span<const int> turns,
                                const std::vector<PairKey>& keys, const EvaluationOptions& options = {});

std::size_t combination_count(std::size_t n, std::size_t k);

/// Every k-subset of `items` in lexicographic order.
std::vector<std::vector<int>> k_subsets(const std::vector<int>& items, std::size_t k);

/// Scores every k-subset of the table's turns, sorted by score_order.
std::vector<CombinationScore> sweep_combinations(const ScoringTable& table, std::size_t k, unsigned workers = 0);

std::vector<CombinationScore> sweep_combinations(const PredictionMatrix& matrix, const Corpus& corpus, std::size_t k,
                                                 const std::vector<PairKey>& keys,
                                                 const EvaluationOptions& options = {});

/// CSV with header `turns,split,correct,total,accuracy`; turns joined by ';'.
std::string scores_to_csv(const std::vector<CombinationScore>& scores);
std::vector<CombinationScore> scores_from_csv(const std::string& csv);

}  // namespace consensus_dx
