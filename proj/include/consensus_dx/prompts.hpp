#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace consensus_dx::prompts {

// Both templates are reproduced character-for-character; only the marked
// slots are substituted.

inline constexpr std::string_view kSummarizePrefix = "Summarize the clinical note, and make its length < ";

inline constexpr std::string_view kPredictionTemplate =
    "Given a patient's clinical note: '{clinical_note}', and the medication: {medication}, what "
    "diagnosis is the most likely indication for this medication in this specific patient? In other "
    "words, what diagnosis is the medication treating in this context? Return the name of the "
    "diagnosis only.";

/// Length bound followed directly by the note text, with no separator.
std::string summarization_prompt(const std::string& note_text, int summary_length);

std::string prediction_prompt(const std::string& clinical_note, const std::string& medication);

struct SummarizationSlots {
  int summary_length = 0;
  std::string note_text;
};

struct PredictionSlots {
  std::string clinical_note;
  std::string medication;
};

std::optional<SummarizationSlots> parse_summarization_prompt(std::string_view prompt);
std::optional<PredictionSlots> parse_prediction_prompt(std::string_view prompt);

}  // namespace consensus_dx::prompts
