#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "consensus_dx/config_space.hpp"
#include "consensus_dx/corpus.hpp"
#include "consensus_dx/llm_gateway.hpp"

namespace consensus_dx {

struct Summary {
  std::string note_id;
  int target_length = 0;
  std::string text;
  bool passthrough = false;

  bool operator==(const Summary&) const = default;
};

/// Keyed by (note_id, target_length).
using SummaryMap = std::map<std::pair<std::string, int>, Summary>;

struct SummarizerOptions {
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.1;
  double top_p = 0.1;
  int max_output_tokens = 1024;
  double tolerance = 1.2;
  SummaryUnit unit = SummaryUnit::characters;
  unsigned workers = 4;
};

/// ceil(tolerance * budget), in bytes of UTF-8 text.
std::size_t summary_length_bound(int target_length, const SummarizerOptions& options);

/// Longest prefix of at most `bound` bytes ending at a sentence terminator
/// (. ! ?). Falls back to the last whitespace, then to a hard cut on a UTF-8
/// character boundary.
std::string truncate_at_sentence(const std::string& text, std::size_t bound);

/// Summarizes one note. Notes already within budget pass through verbatim
/// with no model call. An over-long response is re-summarized once, then
/// truncated at a sentence boundary.
Summary summarize(Gateway& gateway, const ClinicalNote& note, int target_length,
                  const SummarizerOptions& options = {});

struct SummaryFailure {
  std::string note_id;
  int target_length = 0;
  std::string message;
};

struct SummaryRun {
  SummaryMap summaries;
  std::vector<SummaryFailure> failures;
  std::uint64_t upstream_calls = 0;

  bool complete() const { return failures.empty(); }
};

SummaryRun summarize_corpus(Gateway& gateway, const Corpus& corpus, const std::vector<int>& lengths,
                            const SummarizerOptions& options = {});

/// Line-delimited JSON sorted by (note_id, target_length).
std::string serialize_summaries(const SummaryMap& summaries);
SummaryMap parse_summaries(const std::string& content, const std::string& source_name = "<memory>");
void save_summaries(const SummaryMap& summaries, const std::filesystem::path& path);
SummaryMap load_summaries(const std::filesystem::path& path);

}  // namespace consensus_dx
