#include "consensus_dx/synthetic.hpp"

#include <random>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/hashing.hpp"
#include "consensus_dx/prompts.hpp"
#include "consensus_dx/summarizer.hpp"

namespace consensus_dx {

std::string to_string(ConfuserMode m) { return m == ConfuserMode::binary ? "binary" : "distinct"; }

ConfuserMode parse_confuser_mode(const std::string& s) {
  if (s == "binary") return ConfuserMode::binary;
  if (s == "distinct") return ConfuserMode::distinct;
  throw ValidationError("unknown confuser mode '" + s + "' (expected binary or distinct)");
}

void SyntheticVoterModel::validate() const {
  for (const auto& [turn, p] : per_turn_accuracy)
    if (!(p >= 0.0 && p <= 1.0))
      throw ValidationError("synthetic accuracy for turn " + std::to_string(turn) + " outside [0, 1]");
}

std::string synth_answer(const SyntheticVoterModel& model, int turn_id, const std::string& item_key,
                         const std::string& truth) {
  auto it = model.per_turn_accuracy.find(turn_id);
  if (it == model.per_turn_accuracy.end())
    throw ValidationError("synthetic model has no accuracy for turn " + std::to_string(turn_id));
  const std::uint64_t h = splitmix64(splitmix64(model.seed) ^
                                     splitmix64(static_cast<std::uint64_t>(turn_id) * 0x9e3779b97f4a7c15ULL) ^
                                     fnv1a64(item_key));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u < it->second) return truth;
  return model.confuser_mode == ConfuserMode::binary ? std::string("WRONG")
                                                     : "WRONG-" + std::to_string(turn_id);
}

std::string synthetic_item_key(const PairKey& key) { return key.note_id + '\x1f' + key.medication; }

std::string synthetic_summary(const std::string& note_text, int char_budget) {
  if (static_cast<int>(note_text.size()) <= char_budget) return note_text;
  return truncate_at_sentence(note_text, static_cast<std::size_t>(char_budget));
}

SyntheticProvider::SyntheticProvider(SyntheticVoterModel model, Corpus corpus, std::vector<TurnConfig> grid,
                                     SummaryUnit unit)
    : model_(std::move(model)), corpus_(std::move(corpus)), grid_(std::move(grid)), unit_(unit) {
  model_.validate();
  for (const auto& note : corpus_.notes())
    for (int len : summary_lengths_of(grid_))
      summary_index_.emplace(synthetic_summary(note.text, character_budget(len, unit_)),
                             std::pair{note.note_id, len});
}

std::string SyntheticProvider::complete(const CompletionRequest& request) {
  if (auto s = prompts::parse_summarization_prompt(request.prompt))
    return synthetic_summary(s->note_text, character_budget(s->summary_length, unit_));

  auto slots = prompts::parse_prediction_prompt(request.prompt);
  if (!slots) throw UpstreamError("synthetic provider: unrecognized prompt");

  std::optional<int> best_turn;
  std::optional<PairKey> key;
  auto [lo, hi] = summary_index_.equal_range(slots->clinical_note);
  for (auto it = lo; it != hi; ++it) {
    const auto& [note_id, len] = it->second;
    PairKey candidate{note_id, slots->medication};
    if (!corpus_.contains(candidate)) continue;
    auto turn = turn_for(grid_, request.temperature, request.top_p, len);
    if (turn && (!best_turn || *turn < *best_turn)) {
      best_turn = turn;
      key = candidate;
    }
  }
  if (!best_turn)
    throw UpstreamError("synthetic provider: cannot attribute prompt to a (turn, note, medication) cell");
  const auto& truth = corpus_.pair(*key).accepted_diagnoses.front();
  return synth_answer(model_, *best_turn, synthetic_item_key(*key), truth);
}

const std::vector<std::pair<std::string, std::string>>& synthetic_drug_table() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"Lisinopril", "Hypertension"},
      {"Metformin", "Type 2 diabetes mellitus"},
      {"Atorvastatin", "Hyperlipidemia"},
      {"Levothyroxine", "Hypothyroidism"},
      {"Omeprazole", "Gastroesophageal reflux disease"},
      {"Albuterol", "Asthma"},
      {"Furosemide", "Congestive heart failure"},
      {"Warfarin", "Atrial fibrillation"},
      {"Sertraline", "Major depressive disorder"},
      {"Gabapentin", "Neuropathic pain"},
      {"Allopurinol", "Gout"},
      {"Ondansetron", "Nausea"},
      {"Tamsulosin", "Benign prostatic hyperplasia"},
      {"Alendronate", "Osteoporosis"},
      {"Donepezil", "Dementia"},
      {"Levetiracetam", "Seizure disorder"},
      {"Ferrous sulfate", "Iron deficiency anemia"},
      {"Nitrofurantoin", "Urinary tract infection"},
      {"Prednisone", "COPD exacerbation"},
      {"Acetaminophen", "Fever"},
      {"Heparin", "Deep vein thrombosis"},
      {"Haloperidol", "Delirium"},
      {"Sucralfate", "Peptic ulcer disease"},
      {"Zolpidem", "Insomnia"},
  };
  return table;
}

namespace {

const char* const kFiller[] = {
    "Vital signs were stable overnight and the patient tolerated a regular diet.",
    "Labs were notable for a mild leukocytosis that resolved without intervention.",
    "Physical therapy evaluated the patient and recommended discharge home with services.",
    "The patient denied chest pain, shortness of breath, or abdominal pain on review of systems.",
    "Imaging of the chest showed no acute cardiopulmonary process.",
    "Family was updated at the bedside and agreed with the plan of care.",
    "The patient ambulated in the hallway without assistance prior to discharge.",
    "Follow-up was arranged with the primary care physician within two weeks.",
};

}  // namespace

Corpus make_synthetic_corpus(const SyntheticCorpusOptions& options) {
  const auto& table = synthetic_drug_table();
  if (options.notes < 1) throw ValidationError("synthetic corpus needs at least one note");
  if (options.medications_per_note < 1 || options.medications_per_note > static_cast<int>(table.size()))
    throw ValidationError("medications_per_note must lie in [1, " + std::to_string(table.size()) + "]");

  std::mt19937_64 rng(options.seed);
  std::vector<ClinicalNote> notes;
  std::vector<GroundTruthPair> pairs;
  for (int n = 0; n < options.notes; ++n) {
    std::vector<std::size_t> idx(table.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);

    ClinicalNote note;
    char id[32];
    std::snprintf(id, sizeof id, "note-%04d", n + 1);
    note.note_id = id;
    std::string text = "Hospital course for " + note.note_id + ".";
    for (int m = 0; m < options.medications_per_note; ++m) {
      const auto& [drug, dx] = table[idx[static_cast<std::size_t>(m)]];
      note.medications.push_back(drug);
      pairs.push_back(GroundTruthPair{note.note_id, drug, {dx}});
      text += " The patient has a history of " + dx + " and was continued on " + drug + ".";
    }
    std::size_t f = rng() % std::size(kFiller);
    while (static_cast<int>(text.size()) < options.note_chars) {
      text += ' ';
      text += kFiller[f];
      f = (f + 1) % std::size(kFiller);
    }
    note.text = std::move(text);
    notes.push_back(std::move(note));
  }
  return Corpus(std::move(notes), std::move(pairs));
}

}  // namespace consensus_dx
