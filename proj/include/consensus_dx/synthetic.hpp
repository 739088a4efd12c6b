#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "consensus_dx/config_space.hpp"
#include "consensus_dx/corpus.hpp"
#include "consensus_dx/llm_gateway.hpp"

namespace consensus_dx {

enum class ConfuserMode {
  binary,    // every wrong answer is "WRONG"
  distinct,  // voter t answers "WRONG-<t>"
};

std::string to_string(ConfuserMode m);
ConfuserMode parse_confuser_mode(const std::string& s);

/// Offline stand-in for a model: voter `turn_id` is right with probability
/// per_turn_accuracy[turn_id], independently per item.
struct SyntheticVoterModel {
  std::map<int, double> per_turn_accuracy;
  ConfuserMode confuser_mode = ConfuserMode::binary;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Pure function of (seed, turn_id, item_key). Throws ValidationError for a
/// turn the model does not know.
std::string synth_answer(const SyntheticVoterModel& model, int turn_id, const std::string& item_key,
                         const std::string& truth);

/// Item key used by the synthetic provider for a ground-truth pair.
std::string synthetic_item_key(const PairKey& key);

/// The summary the synthetic provider returns: the note verbatim when it
/// fits the budget, otherwise its longest sentence-aligned prefix that does.
std::string synthetic_summary(const std::string& note_text, int char_budget);

/// Answers summarization prompts with synthetic_summary and prediction
/// prompts with synth_answer. The turn is recovered from the request's
/// decoding parameters plus the summary length that produced the clinical
/// note in the prompt; when several lengths produce the same text (short
/// notes) the lowest turn id wins, since the requests are then identical.
class SyntheticProvider : public Provider {
 public:
  SyntheticProvider(SyntheticVoterModel model, Corpus corpus, std::vector<TurnConfig> grid,
                    SummaryUnit unit = SummaryUnit::characters);

  ProviderKind kind() const override { return ProviderKind::synthetic; }
  std::string complete(const CompletionRequest& request) override;

 private:
  SyntheticVoterModel model_;
  Corpus corpus_;
  std::vector<TurnConfig> grid_;
  SummaryUnit unit_;
  // summary text -> (note_id, summary_length)
  std::unordered_multimap<std::string, std::pair<std::string, int>> summary_index_;
};

struct SyntheticCorpusOptions {
  int notes = 20;
  int medications_per_note = 12;
  int note_chars = 4600;
  std::uint64_t seed = 1;
};

/// Deterministic toy corpus whose diagnoses are mutually dissimilar and far
/// from the confuser strings.
Corpus make_synthetic_corpus(const SyntheticCorpusOptions& options);

/// Diagnosis vocabulary used by make_synthetic_corpus.
const std::vector<std::pair<std::string, std::string>>& synthetic_drug_table();

}  // namespace consensus_dx
