#include "consensus_dx/analyzer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

#include "consensus_dx/errors.hpp"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;

Partition partition(const std::vector<CombinationScore>& scores, double threshold) {
  if (scores.empty()) throw ValidationError("partition: no scores");
  Partition p;
  p.threshold = threshold;
  for (const auto& s : scores) {
    // Accuracies are ratios of small integers; the slack only absorbs rounding.
    (s.accuracy + 1e-12 >= threshold ? p.high : p.low).push_back(s);
  }
  return p;
}

std::string to_string(PartitionSide s) { return s == PartitionSide::high ? "high" : "low"; }

std::map<int, std::size_t> membership_counts(const std::vector<CombinationScore>& scores) {
  std::map<int, std::size_t> counts;
  for (const auto& s : scores)
    for (int t : s.turns) ++counts[t];
  return counts;
}

TurnFrequency turn_frequency(const Partition& p, PartitionSide side, const std::vector<int>& universe) {
  const auto& scores = side == PartitionSide::high ? p.high : p.low;
  TurnFrequency f;
  f.side = side;
  f.combinations = scores.size();
  if (scores.empty()) spdlog::warn("{} side of the partition is empty", to_string(side));
  for (int t : universe) f.counts[t] = 0;
  for (const auto& [t, c] : membership_counts(scores)) f.counts[t] = c;
  return f;
}

IntersectionMatrix intersection_matrix(const std::vector<CombinationScore>& scores, std::size_t top_n) {
  if (top_n < 1) throw ValidationError("intersection matrix needs top_n >= 1");
  if (top_n > scores.size())
    throw ValidationError("top_n " + std::to_string(top_n) + " exceeds the " + std::to_string(scores.size()) +
                          " available combinations");
  IntersectionMatrix m;
  m.combos.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(top_n));
  m.cells.assign(top_n, std::vector<int>(top_n, 0));
  for (std::size_t i = 0; i < top_n; ++i)
    for (std::size_t j = 0; j < top_n; ++j) {
      const std::set<int> a(m.combos[i].turns.begin(), m.combos[i].turns.end());
      int n = 0;
      for (int t : m.combos[j].turns) n += static_cast<int>(a.count(t));
      m.cells[i][j] = n;
    }
  return m;
}

namespace {

std::vector<int> top_by_count(const std::map<int, std::size_t>& counts, std::size_t k, bool nonzero_only) {
  std::vector<std::pair<int, std::size_t>> ranked;
  for (const auto& [t, c] : counts)
    if (!nonzero_only || c > 0) ranked.emplace_back(t, c);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].first);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> agreed_turns(const std::vector<CombinationScore>& top_scores, std::size_t k) {
  if (top_scores.empty()) throw ValidationError("agreed_turns: no scores");
  return top_by_count(membership_counts(top_scores), k, true);
}

std::vector<int> select_ensemble(const TurnFrequency& frequency, std::size_t k) {
  auto out = top_by_count(frequency.counts, k, true);
  if (out.size() < k)
    throw ValidationError("only " + std::to_string(out.size()) + " turns have a nonzero count; cannot select " +
                          std::to_string(k));
  return out;
}

TestEvaluation evaluate_on_test(const ScoringTable& table, const std::vector<int>& ensemble) {
  TestEvaluation ev;
  for (int t : table.turns()) ev.singles.push_back(table.single(t));
  ev.best_single = *std::min_element(ev.singles.begin(), ev.singles.end(), score_order);
  ev.ensemble = table.combo(ensemble);
  return ev;
}

AnalysisReport analyze(const std::vector<CombinationScore>& train_scores, const ScoringTable& train_table,
                       const ScoringTable* test_table, double match_threshold, const AnalyzeOptions& options) {
  if (train_scores.empty()) throw ValidationError("analyze: empty sweep");
  AnalysisReport r;
  r.match_threshold = match_threshold;
  r.partition_threshold = options.partition_threshold;
  r.combination_size = train_scores.front().turns.size();
  r.train_items = train_table.item_count();
  r.combination_count = train_scores.size();

  for (int t : train_table.turns()) r.train_singles.push_back(train_table.single(t));
  r.best_single_train = *std::min_element(r.train_singles.begin(), r.train_singles.end(), score_order);
  r.best_combo_train = train_scores.front();
  r.worst_combo_train = train_scores.back();

  const auto p = partition(train_scores, options.partition_threshold);
  r.high_count = p.high.size();
  r.low_count = p.low.size();
  r.high_frequency = turn_frequency(p, PartitionSide::high, train_table.turns());
  r.low_frequency = turn_frequency(p, PartitionSide::low, train_table.turns());

  r.top_n = std::min(options.top_n, train_scores.size());
  if (r.top_n < options.top_n)
    r.warnings.push_back("top_n reduced to " + std::to_string(r.top_n) + " (number of combinations)");
  r.intersection = intersection_matrix(train_scores, r.top_n);
  r.agreed = agreed_turns(r.intersection.combos, options.ensemble_size);

  if (options.ensemble_override) {
    r.ensemble = *options.ensemble_override;
    std::sort(r.ensemble.begin(), r.ensemble.end());
    r.ensemble_source = "override";
  } else if (!p.high.empty()) {
    r.ensemble = select_ensemble(r.high_frequency, options.ensemble_size);
    r.ensemble_source = "high_frequency";
  } else {
    r.warnings.push_back("high side empty at threshold; ensemble selected from overall frequency");
    spdlog::warn("high side empty at threshold {}; falling back to overall turn frequency", options.partition_threshold);
    TurnFrequency overall;
    overall.counts = membership_counts(train_scores);
    overall.combinations = train_scores.size();
    r.ensemble = select_ensemble(overall, options.ensemble_size);
    r.ensemble_source = "overall_frequency_fallback";
    r.ensemble_fallback = true;
  }

  if (test_table != nullptr) {
    r.test_items = test_table->item_count();
    r.test = evaluate_on_test(*test_table, r.ensemble);
  } else {
    r.warnings.push_back("test split is empty; no held-out evaluation");
  }
  return r;
}

namespace {

json score_json(const CombinationScore& s) {
  return json{{"turns", s.turns},
              {"split", to_string(s.split_side)},
              {"correct", s.correct_count},
              {"total", s.total},
              {"accuracy", s.accuracy}};
}

json counts_json(const TurnFrequency& f) {
  json j = json::object();
  for (const auto& [t, c] : f.counts) j[std::to_string(t)] = c;
  return j;
}

}  // namespace

std::string report_to_json(const AnalysisReport& r) {
  json singles = json::array();
  for (const auto& s : r.train_singles) singles.push_back(score_json(s));
  json combos = json::array();
  for (const auto& s : r.intersection.combos) combos.push_back(score_json(s));

  json j;
  j["settings"] = {{"match_threshold", r.match_threshold},
                   {"partition_threshold", r.partition_threshold},
                   {"combination_size", r.combination_size},
                   {"top_n", r.top_n}};
  j["train"] = {{"items", r.train_items},
                {"single_accuracies", singles},
                {"best_single", score_json(r.best_single_train)},
                {"best_combo", score_json(r.best_combo_train)},
                {"worst_combo", score_json(r.worst_combo_train)},
                {"combination_count", r.combination_count}};
  j["partition"] = {{"high_count", r.high_count}, {"low_count", r.low_count}};
  j["turn_frequency"] = {{"high", counts_json(r.high_frequency)}, {"low", counts_json(r.low_frequency)}};
  j["intersection"] = {{"combos", combos}, {"cells", r.intersection.cells}};
  j["agreed_turns"] = r.agreed;
  j["ensemble"] = {{"turns", r.ensemble}, {"source", r.ensemble_source}, {"fallback", r.ensemble_fallback}};
  if (r.test) {
    json test_singles = json::array();
    for (const auto& s : r.test->singles) test_singles.push_back(score_json(s));
    j["test"] = {{"items", r.test_items},
                 {"single_accuracies", test_singles},
                 {"best_single", score_json(r.test->best_single)},
                 {"ensemble", score_json(r.test->ensemble)},
                 {"best_single_test_accuracy", r.test->best_single.accuracy},
                 {"ensemble_test_accuracy", r.test->ensemble.accuracy}};
  } else {
    j["test"] = nullptr;
  }
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string frequency_to_csv(const TurnFrequency& high, const TurnFrequency& low) {
  std::string out = "side,turn_id,count\n";
  for (const auto* f : {&high, &low})
    for (const auto& [t, c] : f->counts) out += to_string(f->side) + ',' + std::to_string(t) + ',' + std::to_string(c) + '\n';
  return out;
}

std::string intersection_to_csv(const IntersectionMatrix& m) {
  std::string out = "row,col,value\n";
  for (std::size_t i = 0; i < m.cells.size(); ++i)
    for (std::size_t j = 0; j < m.cells[i].size(); ++j)
      out += std::to_string(i + 1) + ',' + std::to_string(j + 1) + ',' + std::to_string(m.cells[i][j]) + '\n';
  return out;
}

}  // namespace consensus_dx
