#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "consensus_dx/config_space.hpp"
#include "consensus_dx/corpus.hpp"
#include "consensus_dx/llm_gateway.hpp"
#include "consensus_dx/summarizer.hpp"

namespace consensus_dx {

struct RawPrediction {
  int turn_id = 0;
  std::string note_id;
  std::string medication;
  std::string text;
  bool ok = false;
  std::string error;  // set when !ok

  bool operator==(const RawPrediction&) const = default;
};

struct CellKey {
  int turn_id = 0;
  std::string note_id;
  std::string medication;

  auto operator<=>(const CellKey&) const = default;
};

struct PredictionMatrix {
  std::map<CellKey, RawPrediction> entries;
  std::vector<int> turns;  // ascending
  std::string provenance;

  const RawPrediction* find(int turn_id, const PairKey& key) const;
  void insert(RawPrediction p);
  /// Cells of turns x keys that are absent or carry an error status.
  std::size_t missing_or_failed(const std::vector<int>& turns, const std::vector<PairKey>& keys) const;
};

/// Strips surrounding whitespace and one trailing period.
std::string clean_model_output(const std::string& text);

struct PredictorOptions {
  std::string model_name = "gpt-3.5-turbo";
  int max_output_tokens = 64;
  unsigned workers = 4;
  /// Recorded in the run manifest; defaults to the hash of the configs run.
  std::string grid_hash;
};

/// One zero-shot prediction. Gateway failures come back as error status.
RawPrediction predict_one(Gateway& gateway, const Summary& summary, const std::string& medication,
                          const TurnConfig& config, const PredictorOptions& options = {});

struct TurnReport {
  int turn_id = 0;
  std::size_t ok = 0;
  std::size_t errors = 0;
  std::size_t issued = 0;   // cells sent to the gateway this run
  std::size_t resumed = 0;  // ok cells reused from disk
};

struct MatrixRun {
  PredictionMatrix matrix;
  std::vector<TurnReport> report;

  bool complete() const;
};

/// Fills predictions/turn_<id>.jsonl for every config over every ground-truth
/// pair. Cells already stored with ok status are not re-issued. Lines are
/// appended as cells finish; each file is then rewritten sorted by
/// (note_id, medication) so the result does not depend on completion order.
MatrixRun run_matrix(Gateway& gateway, const Corpus& corpus, const SummaryMap& summaries,
                     const std::vector<TurnConfig>& configs, const std::filesystem::path& predictions_dir,
                     const PredictorOptions& options = {});

std::filesystem::path turn_file(const std::filesystem::path& predictions_dir, int turn_id);

/// Loads the given turns (all turn files present when `turns` is empty).
/// Later lines for the same cell replace earlier ones.
PredictionMatrix load_matrix(const std::filesystem::path& predictions_dir, const std::vector<int>& turns = {});

std::string serialize_prediction(const RawPrediction& p);
RawPrediction parse_prediction(const std::string& line);

}  // namespace consensus_dx
