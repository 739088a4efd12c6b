#include "consensus_dx/prompts.hpp"

#include <cctype>

namespace consensus_dx::prompts {

namespace {

constexpr std::string_view kNoteSlot = "{clinical_note}";
constexpr std::string_view kMedSlot = "{medication}";

}  // namespace

std::string summarization_prompt(const std::string& note_text, int summary_length) {
  std::string out(kSummarizePrefix);
  out += std::to_string(summary_length);
  out += note_text;
  return out;
}

std::string prediction_prompt(const std::string& clinical_note, const std::string& medication) {
  std::string out(kPredictionTemplate);
  out.replace(out.find(kNoteSlot), kNoteSlot.size(), clinical_note);
  // The note may itself contain "{medication}", so search past it.
  const auto note_end = kPredictionTemplate.find(kNoteSlot) + clinical_note.size();
  out.replace(out.find(kMedSlot, note_end), kMedSlot.size(), medication);
  return out;
}

std::optional<SummarizationSlots> parse_summarization_prompt(std::string_view prompt) {
  if (prompt.substr(0, kSummarizePrefix.size()) != kSummarizePrefix) return std::nullopt;
  auto rest = prompt.substr(kSummarizePrefix.size());
  std::size_t digits = 0;
  while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) ++digits;
  if (digits == 0 || digits > 9) return std::nullopt;
  // Notes that begin with a digit are ambiguous; the recorded length is
  // taken greedily, which is exact for every prompt this tool generates
  // from a note whose text does not start with a digit.
  return SummarizationSlots{std::stoi(std::string(rest.substr(0, digits))),
                            std::string(rest.substr(digits))};
}

std::optional<PredictionSlots> parse_prediction_prompt(std::string_view prompt) {
  const auto tpl = kPredictionTemplate;
  const auto note_at = tpl.find(kNoteSlot);
  const auto med_at = tpl.find(kMedSlot);
  const auto head = tpl.substr(0, note_at);
  const auto middle = tpl.substr(note_at + kNoteSlot.size(), med_at - note_at - kNoteSlot.size());
  const auto tail = tpl.substr(med_at + kMedSlot.size());
  if (prompt.size() < head.size() + middle.size() + tail.size()) return std::nullopt;
  if (prompt.substr(0, head.size()) != head) return std::nullopt;
  if (prompt.substr(prompt.size() - tail.size()) != tail) return std::nullopt;
  const auto body = prompt.substr(head.size(), prompt.size() - head.size() - tail.size());
  // The medication never contains the separator, so split at its last occurrence.
  const auto sep = body.rfind(middle);
  if (sep == std::string_view::npos) return std::nullopt;
  return PredictionSlots{std::string(body.substr(0, sep)), std::string(body.substr(sep + middle.size()))};
}

}  // namespace consensus_dx::prompts
