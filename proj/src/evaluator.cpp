#include "consensus_dx/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/io.hpp"
#include "consensus_dx/parallel.hpp"
#include "json.hpp"

namespace consensus_dx {

namespace {

bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool word_start(std::string_view s, std::size_t pos) { return pos == 0 || !alnum(s[pos - 1]); }

}  // namespace

ExpansionMap::ExpansionMap(std::map<std::string, std::string> entries) {
  for (auto& [key, value] : entries) {
    if (key.empty() || key.front() == ' ' || key.back() == ' ' || key.find("  ") != std::string::npos)
      throw ValidationError("expansion key '" + key + "' must be a trimmed phrase");
    for (char c : key)
      if (!(c == ' ' || (alnum(c) && !std::isupper(static_cast<unsigned char>(c)))))
        throw ValidationError("expansion key '" + key + "' must be lowercase alphanumeric words");
    entries_.emplace(key, ascii_lower(value));
  }
  for (const auto& [key, value] : entries_)
    for (std::size_t pos = 0; pos < value.size(); ++pos)
      if (word_start(value, pos) && match_at(value, pos).first != nullptr)
        throw ValidationError("expansion of '" + key + "' contains another shorthand; expansions must be final");
}

ExpansionMap ExpansionMap::defaults() {
  return ExpansionMap({{"chf", "congestive heart failure"}, {"gerd", "gastroesophageal reflux disease"}});
}

ExpansionMap ExpansionMap::parse(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_object()) throw ValidationError("expansion map must be a JSON object");
    std::map<std::string, std::string> entries;
    for (const auto& [k, v] : j.items()) {
      if (!entries.emplace(ascii_lower(k), v.get<std::string>()).second)
        throw ValidationError("expansion key '" + k + "' repeated (keys are case-insensitive)");
    }
    return ExpansionMap(std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed expansion map: ") + e.what());
  }
}

ExpansionMap ExpansionMap::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::pair<const std::string*, std::size_t> ExpansionMap::match_at(std::string_view text, std::size_t pos) const {
  const std::string* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& [key, value] : entries_) {
    const auto len = key.size();
    if (len <= best_len || text.size() - pos < len) continue;
    if (text.compare(pos, len, key) != 0) continue;
    if (pos + len < text.size() && alnum(text[pos + len])) continue;
    best = &value;
    best_len = len;
  }
  return {best, best_len};
}

std::string normalize(std::string_view text, const ExpansionMap& map, bool strict_removal) {
  const auto lower = ascii_lower(text);
  std::string expanded;
  expanded.reserve(lower.size());
  for (std::size_t i = 0; i < lower.size();) {
    if (alnum(lower[i]) && word_start(lower, i)) {
      if (auto [exp, len] = map.match_at(lower, i); exp != nullptr) {
        expanded += *exp;
        i += len;
        continue;
      }
    }
    expanded += lower[i++];
  }

  std::string out;
  out.reserve(expanded.size());
  bool pending_space = false;
  for (char c : expanded) {
    if (alnum(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += c;
    } else if (!strict_removal || std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
    }
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double similarity(std::string_view a, std::string_view b) {
  const auto longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

bool is_match(std::string_view prediction, const std::vector<std::string>& truths, double threshold) {
  if (truths.empty()) throw ValidationError("is_match: empty truth list");
  for (const auto& t : truths)
    if (similarity(prediction, t) >= threshold) return true;
  return false;
}

namespace {

bool votes_agree(const std::string& a, const std::string& b, const VoteOptions& o) {
  return o.exact ? a == b : similarity(a, b) >= o.threshold;
}

}  // namespace

VoteOutcome majority_vote(const VoteMap& votes, const VoteOptions& options) {
  struct Cluster {
    int founder;
    const std::string* representative;
    int size;
  };
  std::vector<Cluster> clusters;
  for (const auto& [turn, text] : votes) {  // std::map: ascending turn id
    if (!text) continue;
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const Cluster& c) { return votes_agree(*c.representative, *text, options); });
    if (it != clusters.end())
      ++it->size;
    else
      clusters.push_back(Cluster{turn, &*text, 1});
  }
  VoteOutcome out;
  if (clusters.empty()) {
    out.abstained = true;
    return out;
  }
  const Cluster* best = &clusters.front();
  for (const auto& c : clusters)
    if (c.size > best->size) best = &c;  // strict: earlier founders keep ties
  out.tie_broken =
      std::count_if(clusters.begin(), clusters.end(), [&](const Cluster& c) { return c.size == best->size; }) > 1;
  out.winner = *best->representative;
  out.winner_founder = best->founder;
  for (const auto& c : clusters) out.cluster_sizes[*c.representative] += c.size;
  return out;
}

VoteOutcome majority_vote(const VoteMap& votes, const std::vector<std::string>& normalized_truths,
                          const VoteOptions& options) {
  auto out = majority_vote(votes, options);
  out.correct = !out.abstained && is_match(out.winner, normalized_truths, options.threshold);
  return out;
}

std::string to_string(SplitSide s) {
  switch (s) {
    case SplitSide::train: return "train";
    case SplitSide::test: return "test";
    case SplitSide::all: return "all";
  }
  return "?";
}

SplitSide parse_split_side(const std::string& s) {
  if (s == "train") return SplitSide::train;
  if (s == "test") return SplitSide::test;
  if (s == "all") return SplitSide::all;
  throw ValidationError("unknown split side '" + s + "'");
}

bool score_order(const CombinationScore& a, const CombinationScore& b) {
  const auto lhs = static_cast<unsigned long long>(a.correct_count) * b.total;
  const auto rhs = static_cast<unsigned long long>(b.correct_count) * a.total;
  if (lhs != rhs) return lhs > rhs;
  return a.turns < b.turns;
}

ScoringTable::ScoringTable(const PredictionMatrix& matrix, const Corpus& corpus, std::vector<PairKey> keys,
                           const EvaluationOptions& options, SplitSide side)
    : turns_(matrix.turns), keys_(std::move(keys)), side_(side), width_(turns_.size()) {
  if (keys_.empty()) throw ValidationError("cannot score an empty key set");
  if (turns_.empty()) throw ValidationError("prediction matrix has no turns");
  std::sort(keys_.begin(), keys_.end());
  const VoteOptions vote_options{options.threshold, options.exact_vote};
  const auto n = keys_.size();
  truths_.resize(n);
  text_.resize(n * width_);
  correct_.assign(n * width_, 0);
  match_.assign(n * width_ * width_, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& d : corpus.pair(keys_[i]).accepted_diagnoses)
      truths_[i].push_back(normalize(d, options.expansions, options.strict_removal));
    for (std::size_t c = 0; c < width_; ++c) {
      const auto* cell = matrix.find(turns_[c], keys_[i]);
      if (cell == nullptr)
        throw ValidationError("prediction matrix lacks turn " + std::to_string(turns_[c]) + " for (" +
                              keys_[i].note_id + ", " + keys_[i].medication + ")");
      if (!cell->ok) continue;
      auto& slot = text_[i * width_ + c];
      slot = normalize(cell->text, options.expansions, options.strict_removal);
      correct_[i * width_ + c] = is_match(*slot, truths_[i], options.threshold);
    }
    for (std::size_t a = 0; a < width_; ++a) {
      const auto& ta = text_[i * width_ + a];
      if (!ta) continue;
      for (std::size_t b = a; b < width_; ++b) {
        const auto& tb = text_[i * width_ + b];
        if (!tb) continue;
        const unsigned char m = votes_agree(*ta, *tb, vote_options);
        match_[(i * width_ + a) * width_ + b] = m;
        match_[(i * width_ + b) * width_ + a] = m;
      }
    }
  }
}

std::size_t ScoringTable::column(int turn_id) const {
  auto it = std::lower_bound(turns_.begin(), turns_.end(), turn_id);
  if (it == turns_.end() || *it != turn_id)
    throw ValidationError("turn " + std::to_string(turn_id) + " is not in the prediction matrix");
  return static_cast<std::size_t>(it - turns_.begin());
}

std::vector<std::size_t> ScoringTable::columns(std::span<const int> turn_ids) const {
  if (turn_ids.empty()) throw ValidationError("a combination needs at least one turn");
  std::vector<std::size_t> cols;
  cols.reserve(turn_ids.size());
  for (int t : turn_ids) cols.push_back(column(t));
  std::sort(cols.begin(), cols.end());
  if (std::adjacent_find(cols.begin(), cols.end()) != cols.end())
    throw ValidationError("combination repeats a turn");
  return cols;
}

VoteMap ScoringTable::votes(std::size_t item, std::span<const int> turn_ids) const {
  VoteMap out;
  for (auto c : columns(turn_ids)) out.emplace(turns_[c], text_[item * width_ + c]);
  return out;
}

namespace {

struct FastVote {
  std::ptrdiff_t founder = -1;  // column of the winning cluster's founder
  bool tie = false;
};

// Same clustering as majority_vote, driven by the precomputed match table.
template <typename MatchFn, typename OkFn>
FastVote fast_vote(const std::vector<std::size_t>& cols, MatchFn&& matches, OkFn&& ok) {
  std::size_t founders[64];
  int sizes[64];
  std::vector<std::size_t> founders_big;
  std::vector<int> sizes_big;
  std::size_t* f = founders;
  int* s = sizes;
  if (cols.size() > 64) {
    founders_big.resize(cols.size());
    sizes_big.resize(cols.size());
    f = founders_big.data();
    s = sizes_big.data();
  }
  std::size_t n_clusters = 0;
  for (auto c : cols) {
    if (!ok(c)) continue;
    std::size_t j = 0;
    while (j < n_clusters && !matches(f[j], c)) ++j;
    if (j < n_clusters) {
      ++s[j];
    } else {
      f[n_clusters] = c;
      s[n_clusters] = 1;
      ++n_clusters;
    }
  }
  FastVote out;
  if (n_clusters == 0) return out;
  std::size_t best = 0;
  for (std::size_t j = 1; j < n_clusters; ++j)
    if (s[j] > s[best]) best = j;
  for (std::size_t j = 0; j < n_clusters; ++j)
    if (j != best && s[j] == s[best]) out.tie = true;
  out.founder = static_cast<std::ptrdiff_t>(f[best]);
  return out;
}

}  // namespace

VoteOutcome ScoringTable::vote(std::size_t item, std::span<const int> turn_ids) const {
  VoteOutcome out;
  out.item = keys_.at(item);
  const auto cols = columns(turn_ids);
  const auto base = item * width_;
  std::vector<std::pair<std::size_t, int>> clusters;  // founder col, size
  for (auto c : cols) {
    if (!text_[base + c]) continue;
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const auto& cl) { return match_[(base + cl.first) * width_ + c] != 0; });
    if (it != clusters.end())
      ++it->second;
    else
      clusters.emplace_back(c, 1);
  }
  if (clusters.empty()) {
    out.abstained = true;
    return out;
  }
  auto best = clusters.begin();
  for (auto it = clusters.begin(); it != clusters.end(); ++it)
    if (it->second > best->second) best = it;
  out.tie_broken = std::count_if(clusters.begin(), clusters.end(),
                                 [&](const auto& cl) { return cl.second == best->second; }) > 1;
  out.winner = *text_[base + best->first];
  out.winner_founder = turns_[best->first];
  out.correct = correct_[base + best->first] != 0;
  for (const auto& [col, size] : clusters) out.cluster_sizes[*text_[base + col]] += size;
  return out;
}

CombinationScore ScoringTable::combo(std::span<const int> turn_ids) const {
  const auto cols = columns(turn_ids);
  CombinationScore score;
  for (auto c : cols) score.turns.push_back(turns_[c]);
  score.split_side = side_;
  score.total = keys_.size();
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const auto base = i * width_;
    const auto v = fast_vote(
        cols, [&](std::size_t a, std::size_t b) { return match_[(base + a) * width_ + b] != 0; },
        [&](std::size_t c) { return text_[base + c].has_value(); });
    if (v.founder >= 0 && correct_[base + static_cast<std::size_t>(v.founder)]) ++score.correct_count;
  }
  score.accuracy = static_cast<double>(score.correct_count) / static_cast<double>(score.total);
  return score;
}

CombinationScore ScoringTable::single(int turn_id) const {
  const int t[] = {turn_id};
  return combo(t);
}

CombinationScore single_accuracy(const PredictionMatrix& matrix, const Corpus& corpus, int turn_id,
                                 const std::vector<PairKey>& keys, const EvaluationOptions& options) {
  return ScoringTable(matrix, corpus, keys, options).single(turn_id);
}

CombinationScore combo_accuracy(const PredictionMatrix& matrix, const Corpus& corpus, std::span<const int> turns,
                                const std::vector<PairKey>& keys, const EvaluationOptions& options) {
  return ScoringTable(matrix, corpus, keys, options).combo(turns);
}

std::size_t combination_count(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<std::vector<int>> k_subsets(const std::vector<int>& items, std::size_t k) {
  std::vector<std::vector<int>> out;
  const auto n = items.size();
  if (k == 0 || k > n) return out;
  out.reserve(combination_count(n, k));
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    std::vector<int> combo(k);
    for (std::size_t i = 0; i < k; ++i) combo[i] = items[idx[i]];
    out.push_back(std::move(combo));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::vector<CombinationScore> sweep_combinations(const ScoringTable& table, std::size_t k, unsigned workers) {
  const auto& turns = table.turns();
  if (k < 1) throw ValidationError("combination size must be at least 1");
  if (k > turns.size())
    throw ValidationError("combination size " + std::to_string(k) + " exceeds the " + std::to_string(turns.size()) +
                          " turns in the matrix");
  const auto subsets = k_subsets(turns, k);
  std::vector<CombinationScore> scores(subsets.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  constexpr std::size_t chunk = 256;
  const auto chunks = (subsets.size() + chunk - 1) / chunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const auto end = std::min(subsets.size(), (c + 1) * chunk);
    for (auto i = c * chunk; i < end; ++i) scores[i] = table.combo(subsets[i]);
  });
  std::sort(scores.begin(), scores.end(), score_order);
  return scores;
}

std::vector<CombinationScore> sweep_combinations(const PredictionMatrix& matrix, const Corpus& corpus, std::size_t k,
                                                 const std::vector<PairKey>& keys, const EvaluationOptions& options) {
  return sweep_combinations(ScoringTable(matrix, corpus, keys, options), k);
}

std::string scores_to_csv(const std::vector<CombinationScore>& scores) {
  std::string out = "turns,split,correct,total,accuracy\n";
  char acc[32];
  for (const auto& s : scores) {
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(s.turns[i]);
    }
    std::snprintf(acc, sizeof acc, "%.6f", s.accuracy);
    out += ',' + to_string(s.split_side) + ',' + std::to_string(s.correct_count) + ',' + std::to_string(s.total) +
           ',' + acc + '\n';
  }
  return out;
}

std::vector<CombinationScore> scores_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("turns,split,correct,total,accuracy", 0) != 0)
    throw ValidationError("scores CSV lacks the expected header");
  std::vector<CombinationScore> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (fields.size() != 5) throw ParseError("scores.csv", lineno, "expected 5 fields");
    try {
      CombinationScore s;
      std::stringstream ts(fields[0]);
      for (std::string t; std::getline(ts, t, ';');) s.turns.push_back(std::stoi(t));
      s.split_side = parse_split_side(fields[1]);
      s.correct_count = std::stoull(fields[2]);
      s.total = std::stoull(fields[3]);
      if (s.total == 0 || s.correct_count > s.total) throw ValidationError("bad counts");
      s.accuracy = static_cast<double>(s.correct_count) / static_cast<double>(s.total);
      out.push_back(std::move(s));
    } catch (const std::logic_error& e) {
      throw ParseError("scores.csv", lineno, e.what());
    } catch (const ValidationError& e) {
      throw ParseError("scores.csv", lineno, e.what());
    }
  }
  return out;
}

}  // namespace consensus_dx
