#include "consensus_dx/predictor.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/hashing.hpp"
#include "consensus_dx/io.hpp"
#include "consensus_dx/parallel.hpp"
#include "consensus_dx/prompts.hpp"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;

const RawPrediction* PredictionMatrix::find(int turn_id, const PairKey& key) const {
  auto it = entries.find(CellKey{turn_id, key.note_id, key.medication});
  return it == entries.end() ? nullptr : &it->second;
}

void PredictionMatrix::insert(RawPrediction p) {
  if (!std::binary_search(turns.begin(), turns.end(), p.turn_id))
    turns.insert(std::upper_bound(turns.begin(), turns.end(), p.turn_id), p.turn_id);
  CellKey key{p.turn_id, p.note_id, p.medication};
  entries.insert_or_assign(std::move(key), std::move(p));
}

std::size_t PredictionMatrix::missing_or_failed(const std::vector<int>& want_turns,
                                                const std::vector<PairKey>& keys) const {
  std::size_t n = 0;
  for (int t : want_turns)
    for (const auto& k : keys) {
      const auto* p = find(t, k);
      if (p == nullptr || !p->ok) ++n;
    }
  return n;
}

std::string clean_model_output(const std::string& text) {
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = text.find_last_not_of(" \t\r\n");
  std::string out = text.substr(b, e - b + 1);
  if (!out.empty() && out.back() == '.') {
    out.pop_back();
    const auto e2 = out.find_last_not_of(" \t\r\n");
    out.erase(e2 == std::string::npos ? 0 : e2 + 1);
  }
  return out;
}

RawPrediction predict_one(Gateway& gateway, const Summary& summary, const std::string& medication,
                          const TurnConfig& config, const PredictorOptions& options) {
  if (medication.empty()) throw ValidationError("predict_one: empty medication");
  if (summary.target_length != config.summary_length)
    throw ValidationError("predict_one: summary length " + std::to_string(summary.target_length) +
                          " does not match turn " + std::to_string(config.turn_id));
  RawPrediction out{config.turn_id, summary.note_id, medication, {}, false, {}};
  CompletionRequest request{options.model_name, prompts::prediction_prompt(summary.text, medication),
                            config.temperature, config.top_p, options.max_output_tokens};
  try {
    out.text = clean_model_output(gateway.complete(request).text);
    if (out.text.empty()) {
      out.error = "empty model output";
    } else {
      out.ok = true;
    }
  } catch (const UpstreamError& e) {
    out.error = e.what();
  }
  return out;
}

bool MatrixRun::complete() const {
  return std::all_of(report.begin(), report.end(), [](const TurnReport& r) { return r.errors == 0; });
}

std::filesystem::path turn_file(const std::filesystem::path& predictions_dir, int turn_id) {
  return predictions_dir / ("turn_" + std::to_string(turn_id) + ".jsonl");
}

std::string serialize_prediction(const RawPrediction& p) {
  json j = {{"turn_id", p.turn_id},
            {"note_id", p.note_id},
            {"medication", p.medication},
            {"text", p.text},
            {"status", p.ok ? std::string("ok") : "error: " + p.error}};
  return j.dump();
}

RawPrediction parse_prediction(const std::string& line) {
  const auto j = json::parse(line);
  RawPrediction p;
  p.turn_id = j.at("turn_id").get<int>();
  p.note_id = j.at("note_id").get<std::string>();
  p.medication = j.at("medication").get<std::string>();
  p.text = j.at("text").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  if (status == "ok") {
    p.ok = true;
  } else if (status.rfind("error", 0) == 0) {
    p.error = status.size() > 7 ? status.substr(7) : "unknown error";
  } else {
    throw ValidationError("unknown prediction status '" + status + "'");
  }
  if (p.ok && p.text.empty()) throw ValidationError("ok prediction with empty text");
  return p;
}

namespace {

void load_turn_file(const std::filesystem::path& path, PredictionMatrix& m) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.insert(parse_prediction(line));
    } catch (const nlohmann::json::exception& e) {
      // A torn final line from an interrupted append is tolerated.
      if (in.peek() == EOF) break;
      throw ParseError(path.string(), lineno, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
}

}  // namespace

PredictionMatrix load_matrix(const std::filesystem::path& predictions_dir, const std::vector<int>& turns) {
  PredictionMatrix m;
  std::vector<int> want = turns;
  if (want.empty() && std::filesystem::exists(predictions_dir)) {
    static const std::regex pattern(R"(turn_(\d+)\.jsonl)");
    for (const auto& entry : std::filesystem::directory_iterator(predictions_dir)) {
      std::smatch mt;
      const auto name = entry.path().filename().string();
      if (std::regex_match(name, mt, pattern)) want.push_back(std::stoi(mt[1]));
    }
    std::sort(want.begin(), want.end());
  }
  for (int t : want) {
    const auto path = turn_file(predictions_dir, t);
    if (!std::filesystem::exists(path))
      throw ValidationError("missing prediction file " + path.string());
    load_turn_file(path, m);
    if (!std::binary_search(m.turns.begin(), m.turns.end(), t))
      m.turns.insert(std::upper_bound(m.turns.begin(), m.turns.end(), t), t);
  }
  const auto manifest = predictions_dir / "manifest.json";
  if (std::filesystem::exists(manifest)) {
    try {
      const auto j = json::parse(read_file(manifest));
      m.provenance = j.value("provider", "") + ":" + j.value("model_name", "");
    } catch (const json::exception&) {
      m.provenance = "unknown";
    }
  }
  return m;
}

MatrixRun run_matrix(Gateway& gateway, const Corpus& corpus, const SummaryMap& summaries,
                     const std::vector<TurnConfig>& configs, const std::filesystem::path& predictions_dir,
                     const PredictorOptions& options) {
  if (configs.empty()) throw ValidationError("run_matrix needs at least one turn");
  const auto keys = corpus.keys();
  for (const auto& c : configs)
    for (const auto& k : keys)
      if (!summaries.count({k.note_id, c.summary_length}))
        throw ValidationError("no summary of note " + k.note_id + " at length " +
                              std::to_string(c.summary_length));
  std::filesystem::create_directories(predictions_dir);

  std::set<PairKey> key_set(keys.begin(), keys.end());
  PredictionMatrix existing;
  for (const auto& c : configs) {
    const auto path = turn_file(predictions_dir, c.turn_id);
    if (!std::filesystem::exists(path)) continue;
    load_turn_file(path, existing);
    // Terminate a torn last line so appended records start on a fresh line.
    const auto content = read_file(path);
    if (!content.empty() && content.back() != '\n') std::ofstream(path, std::ios::app | std::ios::binary) << '\n';
  }

  struct Job {
    const TurnConfig* config;
    const PairKey* key;
  };
  std::vector<Job> jobs;
  std::map<int, TurnReport> reports;
  for (const auto& c : configs) {
    auto& r = reports[c.turn_id];
    r.turn_id = c.turn_id;
    for (const auto& k : keys) {
      const auto* p = existing.find(c.turn_id, k);
      if (p && p->ok)
        ++r.resumed;
      else
        jobs.push_back(Job{&c, &k});
    }
  }

  std::map<int, std::unique_ptr<std::mutex>> file_locks;
  for (const auto& c : configs) file_locks.emplace(c.turn_id, std::make_unique<std::mutex>());
  std::vector<RawPrediction> fresh(jobs.size());
  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& summary = summaries.at({job.key->note_id, job.config->summary_length});
    fresh[i] = predict_one(gateway, summary, job.key->medication, *job.config, options);
    std::lock_guard lock(*file_locks.at(job.config->turn_id));
    std::ofstream out(turn_file(predictions_dir, job.config->turn_id), std::ios::app | std::ios::binary);
    out << serialize_prediction(fresh[i]) << '\n';
  });

  PredictionMatrix matrix;
  for (const auto& [key, p] : existing.entries)
    if (p.ok && key_set.count(PairKey{p.note_id, p.medication})) matrix.insert(p);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& r = reports[fresh[i].turn_id];
    ++r.issued;
    matrix.insert(std::move(fresh[i]));
  }
  for (const auto& c : configs) {
    std::string content;
    for (const auto& k : keys) {
      const auto* p = matrix.find(c.turn_id, k);
      content += serialize_prediction(*p);
      content += '\n';
      auto& r = reports[c.turn_id];
      if (p->ok)
        ++r.ok;
      else
        ++r.errors;
    }
    write_file_atomic(turn_file(predictions_dir, c.turn_id), content);
  }

  json manifest = {{"provider", to_string(gateway.provider_kind())},
                   {"model_name", options.model_name},
                   {"grid_hash", options.grid_hash.empty() ? grid_hash(configs) : options.grid_hash},
                   {"corpus_hash", sha256_hex(serialize_corpus(corpus))},
                   {"cache", gateway.has_cache() ? "on" : "off"},
                   {"prediction_prompt", std::string(prompts::kPredictionTemplate)},
                   {"summarization_prompt_prefix", std::string(prompts::kSummarizePrefix)}};
  json turns = json::array();
  for (const auto& c : configs) turns.push_back(c.turn_id);
  manifest["turns"] = turns;
  write_file_atomic(predictions_dir / "manifest.json", manifest.dump(2) + "\n");

  matrix.provenance = to_string(gateway.provider_kind()) + ":" + options.model_name;
  MatrixRun run{std::move(matrix), {}};
  for (auto& [_, r] : reports) run.report.push_back(r);
  return run;
}

}  // namespace consensus_dx
