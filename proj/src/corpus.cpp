#include "consensus_dx/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/io.hpp"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;

Corpus::Corpus(std::vector<ClinicalNote> notes, std::vector<GroundTruthPair> pairs)
    : notes_(std::move(notes)), pairs_(std::move(pairs)) {
  if (notes_.empty()) throw ValidationError("empty corpus");
  for (std::size_t i = 0; i < notes_.size(); ++i) {
    const auto& n = notes_[i];
    if (n.note_id.empty()) throw ValidationError("note with empty note_id");
    if (!note_index_.emplace(n.note_id, i).second)
      throw ValidationError("duplicate note_id '" + n.note_id + "'");
    if (n.text.empty()) throw ValidationError("note '" + n.note_id + "' has empty text");
    if (n.medications.empty())
      throw ValidationError("note '" + n.note_id + "' has no medications");
    std::set<std::string> seen;
    for (const auto& m : n.medications) {
      if (m.empty()) throw ValidationError("note '" + n.note_id + "' lists an empty medication");
      if (!seen.insert(m).second)
        throw ValidationError("note '" + n.note_id + "' lists medication '" + m + "' twice");
    }
  }
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    const std::string name = "(" + p.note_id + ", " + p.medication + ")";
    auto it = note_index_.find(p.note_id);
    if (it == note_index_.end())
      throw ValidationError("pair " + name + " references unknown note");
    const auto& meds = notes_[it->second].medications;
    if (std::find(meds.begin(), meds.end(), p.medication) == meds.end())
      throw ValidationError("pair " + name + " references a medication absent from its note");
    if (p.accepted_diagnoses.empty())
      throw ValidationError("pair " + name + " has no accepted diagnoses");
    for (const auto& d : p.accepted_diagnoses)
      if (d.empty()) throw ValidationError("pair " + name + " has an empty diagnosis");
    if (!pair_index_.emplace(PairKey{p.note_id, p.medication}, i).second)
      throw ValidationError("duplicate pair " + name);
  }
}

const ClinicalNote& Corpus::note(const std::string& note_id) const {
  auto it = note_index_.find(note_id);
  if (it == note_index_.end()) throw ValidationError("unknown note_id '" + note_id + "'");
  return notes_[it->second];
}

const GroundTruthPair& Corpus::pair(const PairKey& key) const {
  auto it = pair_index_.find(key);
  if (it == pair_index_.end())
    throw ValidationError("unknown pair (" + key.note_id + ", " + key.medication + ")");
  return pairs_[it->second];
}

std::vector<PairKey> Corpus::keys() const {
  std::vector<PairKey> out;
  out.reserve(pair_index_.size());
  for (const auto& [k, _] : pair_index_) out.push_back(k);
  return out;
}

namespace {

std::vector<std::string> string_list(const json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j.at(field).is_array())
    throw ValidationError(where + ": field '" + field + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j.at(field)) {
    if (!e.is_string()) throw ValidationError(where + ": field '" + field + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string string_field(const json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j.at(field).is_string())
    throw ValidationError(where + ": field '" + field + "' must be a string");
  return j.at(field).get<std::string>();
}

}  // namespace

Corpus parse_corpus(const std::string& content, const std::string& source_name) {
  std::vector<ClinicalNote> notes;
  std::vector<GroundTruthPair> pairs;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(source_name, lineno, "record must be a JSON object");
    const std::string where = source_name + ":" + std::to_string(lineno);
    ClinicalNote note;
    try {
      note.note_id = string_field(j, "note_id", where);
      note.text = string_field(j, "text", where);
      note.medications = string_list(j, "medications", where);
      if (j.contains("ground_truth")) {
        if (!j.at("ground_truth").is_array())
          throw ValidationError(where + ": field 'ground_truth' must be an array");
        for (const auto& g : j.at("ground_truth")) {
          if (!g.is_object()) throw ValidationError(where + ": ground_truth entries must be objects");
          pairs.push_back(GroundTruthPair{note.note_id, string_field(g, "medication", where),
                                          string_list(g, "diagnoses", where)});
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(source_name, lineno, e.what());
    }
    notes.push_back(std::move(note));
  }
  return Corpus(std::move(notes), std::move(pairs));
}

Corpus load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("corpus file not found: " + path.string());
  return parse_corpus(read_file(path), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::map<std::string, std::vector<const GroundTruthPair*>> by_note;
  for (const auto& p : corpus.pairs()) by_note[p.note_id].push_back(&p);
  std::string out;
  for (const auto& n : corpus.notes()) {
    json gt = json::array();
    for (const auto* p : by_note[n.note_id])
      gt.push_back({{"medication", p->medication}, {"diagnoses", p->accepted_diagnoses}});
    json j = {{"note_id", n.note_id}, {"text", n.text}, {"medications", n.medications}, {"ground_truth", gt}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_corpus(corpus));
}

std::string to_string(SplitGranularity g) { return g == SplitGranularity::pair ? "pair" : "note"; }

SplitGranularity parse_granularity(const std::string& s) {
  if (s == "pair") return SplitGranularity::pair;
  if (s == "note") return SplitGranularity::note;
  throw ValidationError("unknown split granularity '" + s + "' (expected pair or note)");
}

namespace {

// Uniform index in [0, bound) without modulo bias.
std::uint64_t draw_index(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void fisher_yates(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = draw_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

std::size_t train_count(double fraction, std::size_t units) {
  // The epsilon absorbs representation error, e.g. 0.6 * 240.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(units) + 1e-9));
}

}  // namespace

DatasetSplit split_corpus(const Corpus& corpus, double train_fraction, std::uint64_t seed,
                          SplitGranularity granularity) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ValidationError("train_fraction must lie in (0, 1]");
  DatasetSplit split;
  split.seed = seed;
  split.train_fraction = train_fraction;
  split.granularity = granularity;

  const auto keys = corpus.keys();
  if (granularity == SplitGranularity::pair) {
    auto units = keys;
    fisher_yates(units, seed);
    const auto n_train = train_count(train_fraction, units.size());
    for (std::size_t i = 0; i < units.size(); ++i)
      (i < n_train ? split.train_keys : split.test_keys).insert(units[i]);
  } else {
    std::set<std::string> ids;
    for (const auto& k : keys) ids.insert(k.note_id);
    std::vector<std::string> units(ids.begin(), ids.end());
    fisher_yates(units, seed);
    const auto n_train = train_count(train_fraction, units.size());
    std::set<std::string> train_notes(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(n_train));
    for (const auto& k : keys)
      (train_notes.count(k.note_id) ? split.train_keys : split.test_keys).insert(k);
  }
  return split;
}

std::vector<PairKey> keys_of(const std::set<PairKey>& side) { return {side.begin(), side.end()}; }

namespace {

json keys_json(const std::set<PairKey>& side) {
  json arr = json::array();
  for (const auto& k : side) arr.push_back(json::array({k.note_id, k.medication}));
  return arr;
}

std::set<PairKey> keys_from(const json& arr) {
  std::set<PairKey> out;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2)
      throw ValidationError("split keys must be [note_id, medication] pairs");
    out.insert(PairKey{e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  }
  return out;
}

}  // namespace

std::string serialize_split(const DatasetSplit& split) {
  json j = {{"seed", split.seed},
            {"train_fraction", split.train_fraction},
            {"granularity", to_string(split.granularity)},
            {"train", keys_json(split.train_keys)},
            {"test", keys_json(split.test_keys)}};
  return j.dump(2) + "\n";
}

DatasetSplit parse_split(const std::string& content) {
  json j;
  try {
    j = json::parse(content);
    DatasetSplit s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_fraction = j.at("train_fraction").get<double>();
    s.granularity = parse_granularity(j.at("granularity").get<std::string>());
    s.train_keys = keys_from(j.at("train"));
    s.test_keys = keys_from(j.at("test"));
    for (const auto& k : s.train_keys)
      if (s.test_keys.count(k)) throw ValidationError("split file lists a key on both sides");
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed split file: ") + e.what());
  }
}

void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_split(split));
}

DatasetSplit load_split(const std::filesystem::path& path) { return parse_split(read_file(path)); }

}  // namespace consensus_dx
