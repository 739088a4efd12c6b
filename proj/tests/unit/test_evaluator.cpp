#include <gtest/gtest.h>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/evaluator.hpp"
#include "consensus_dx/predictor.hpp"
#include "test_support.hpp"

using namespace consensus_dx;

namespace {

const ExpansionMap kMap = ExpansionMap::defaults();

/// Matrix over the given turns where answers[t][i] is turn t's answer for item i
/// (nullopt = error cell).
struct Fixture {
  Corpus corpus;
  PredictionMatrix matrix;
  std::vector<PairKey> keys;
};

Fixture make_fixture(const std::vector<std::string>& truths,
                     const std::map<int, std::vector<std::optional<std::string>>>& answers) {
  std::vector<std::string> meds;
  std::vector<GroundTruthPair> pairs;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    meds.push_back("med" + std::to_string(i));
    pairs.push_back(GroundTruthPair{"n", meds.back(), {truths[i]}});
  }
  Fixture f{Corpus({ClinicalNote{"n", "note", meds}}, pairs), {}, {}};
  f.keys = f.corpus.keys();
  for (const auto& [turn, row] : answers) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& a = row[i];
      f.matrix.insert(RawPrediction{turn, "n", meds[i], a.value_or(""), a.has_value(), a ? "" : "timeout"});
    }
  }
  return f;
}

VoteMap votes(std::initializer_list<std::pair<const int, std::optional<std::string>>> v) {
  VoteMap m(v);
  for (auto& [_, s] : m)
    if (s) s = normalize(*s, kMap);
  return m;
}

}  // namespace

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize("chf", kMap), "congestive heart failure");
  EXPECT_EQ(normalize("CHF exacerbation", kMap), "congestive heart failure exacerbation");
  EXPECT_EQ(normalize("GERD", kMap), "gastroesophageal reflux disease");
  EXPECT_EQ(normalize("Type-2/Diabetes  ", kMap), "type 2 diabetes");
  EXPECT_EQ(normalize("Hypertension.", kMap), "hypertension");
  EXPECT_EQ(normalize("", kMap), "");
  EXPECT_EQ(normalize(" -- ", kMap), "");
}

TEST(Normalize, ExpansionIsWholeWordOnly) {
  EXPECT_EQ(normalize("chfx", kMap), "chfx");
  EXPECT_EQ(normalize("achf", kMap), "achf");
  EXPECT_EQ(normalize("(chf)", kMap), "congestive heart failure");
  EXPECT_EQ(normalize("chf/gerd", kMap), "congestive heart failure gastroesophageal reflux disease");
}

TEST(Normalize, StrictRemovalDeletes) {
  EXPECT_EQ(normalize("Type-2/Diabetes", kMap, true), "type2diabetes");
  EXPECT_EQ(normalize("a - b", kMap, true), "a b");
}

TEST(ExpansionMap, ParseValidateAndLongestMatch) {
  const auto m = ExpansionMap::parse(R"({"af": "atrial fibrillation", "af rvr": "atrial fibrillation with rvr"})");
  EXPECT_EQ(normalize("AF RVR", m), "atrial fibrillation with rvr");
  EXPECT_EQ(normalize("af", m), "atrial fibrillation");
  EXPECT_EQ(ExpansionMap::parse(R"({"CHF": "Chronic Heart Failure"})").entries().at("chf"), "chronic heart failure");
  EXPECT_THROW(ExpansionMap::parse(R"({"CHF": "a", "chf": "b"})"), ValidationError);
  EXPECT_THROW(ExpansionMap::parse(R"({"c-h-f": "x"})"), ValidationError);
  EXPECT_THROW(ExpansionMap::parse(R"({"chf": 3})"), ValidationError);
  EXPECT_THROW(ExpansionMap::parse(R"({"chf": "chf exacerbation"})"), ValidationError);
  EXPECT_THROW(ExpansionMap::parse(R"(["chf"])"), ValidationError);
  EXPECT_THROW(ExpansionMap::parse("{"), ValidationError);
  EXPECT_TRUE(ExpansionMap().entries().empty());
}

TEST(Levenshtein, Basics) {
  EXPECT_EQ(levenshtein("", ""), 0u);
  EXPECT_EQ(levenshtein("abc", ""), 3u);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("hypertension", "hypertensive"), 2u);
}

TEST(Similarity, OracleValues) {
  // Values computed independently with a full-matrix edit-distance script.
  EXPECT_DOUBLE_EQ(similarity("hypertension", "hypertension"), 1.0);
  EXPECT_NEAR(similarity("hypertension", "hypertensive"), 10.0 / 12.0, 1e-12);
  EXPECT_NEAR(similarity("hypertension", "anemia"), 2.0 / 12.0, 1e-12);
  EXPECT_LT(similarity("hypertension", "anemia"), 0.6);
  EXPECT_NEAR(similarity("hypertension", "gastric distension"), 8.0 / 18.0, 1e-12);
  EXPECT_NEAR(similarity("gastric distension", "gastric distention"), 17.0 / 18.0, 1e-12);
  EXPECT_NEAR(similarity("congestive heart failure", "chronic kidney disease"), 5.0 / 24.0, 1e-12);
  EXPECT_NEAR(similarity("nausea and vomiting", "nausea"), 6.0 / 19.0, 1e-12);
  EXPECT_DOUBLE_EQ(similarity("", ""), 1.0);
  EXPECT_DOUBLE_EQ(similarity("abc", ""), 0.0);
}

TEST(IsMatch, Examples) {
  EXPECT_TRUE(is_match("congestive heart failure", {"congestive heart failure"}));
  EXPECT_FALSE(is_match("hypertension", {"gastric distension"}));
  EXPECT_TRUE(is_match("anything", {"gastric distension"}, 0.0));
  EXPECT_TRUE(is_match("hypertensive", {"anemia", "hypertension"}));
  EXPECT_THROW(is_match("x", {}), ValidationError);
}

TEST(Vote, EnalaprilPatternWinsHypertension) {
  const auto v = votes({{2, "Congestive heart failure"},
                        {7, "Hypertension"},
                        {10, "Hypertension."},
                        {13, "Hypertensive"},
                        {14, "Chronic kidney disease"}});
  const auto out = majority_vote(v, std::vector<std::string>{"hypertension"});
  EXPECT_EQ(out.winner, "hypertension");
  EXPECT_EQ(out.winner_founder, 7);
  EXPECT_EQ(out.cluster_sizes.at("hypertension"), 3);
  EXPECT_TRUE(out.correct);
  EXPECT_FALSE(out.tie_broken);
}

TEST(Vote, OndansetronPatternWinsGastricDistension) {
  const auto v = votes({{2, "Gastric distension"},
                        {7, "Nausea and vomiting"},
                        {10, "gastric distention"},
                        {13, "Gastric Distension."},
                        {14, "Nausea"}});
  const auto out = majority_vote(v, std::vector<std::string>{"gastric distension"});
  EXPECT_EQ(out.winner, "gastric distension");
  EXPECT_EQ(out.winner_founder, 2);
  EXPECT_TRUE(out.correct);
}

TEST(Vote, UnanimousNoTie) {
  const auto out = majority_vote(votes({{1, "gout"}, {2, "gout"}, {3, "gout"}, {4, "gout"}, {5, "gout"}}));
  EXPECT_EQ(out.winner, "gout");
  EXPECT_FALSE(out.tie_broken);
  EXPECT_EQ(out.cluster_sizes.size(), 1u);
}

TEST(Vote, TieGoesToSmallestFounder) {
  const auto out = majority_vote(votes({{3, "anemia"}, {5, "gout"}, {8, "gout"}, {9, "anemia"}}));
  EXPECT_EQ(out.winner, "anemia");
  EXPECT_EQ(out.winner_founder, 3);
  EXPECT_TRUE(out.tie_broken);
}

TEST(Vote, ChfPoolsWithExpansion) {
  const auto out =
      majority_vote(votes({{1, "anemia"}, {2, "CHF"}, {3, "congestive heart failure"}, {4, "Anemia"}, {5, "chf."}}));
  EXPECT_EQ(out.winner, "congestive heart failure");
  EXPECT_EQ(out.cluster_sizes.at("congestive heart failure"), 3);
}

TEST(Vote, ErrorCellsAreExcludedAndAllErrorsAbstain) {
  const auto out = majority_vote(votes({{1, std::nullopt}, {2, std::nullopt}, {3, "gout"}}));
  EXPECT_EQ(out.winner, "gout");
  const auto none = majority_vote(votes({{1, std::nullopt}, {2, std::nullopt}}), std::vector<std::string>{"gout"});
  EXPECT_TRUE(none.abstained);
  EXPECT_FALSE(none.correct);
  EXPECT_TRUE(majority_vote(VoteMap{}).abstained);
}

TEST(Vote, ExactModeDoesNotPoolVariants) {
  VoteOptions exact;
  exact.exact = true;
  const auto v = votes({{1, "hypertension"}, {2, "hypertensive"}, {3, "anemia"}, {4, "anemia"}});
  EXPECT_EQ(majority_vote(v, exact).winner, "anemia");
  EXPECT_EQ(majority_vote(v).winner, "hypertension");
}

TEST(ScoreOrder, ExactFractionsThenTuple) {
  const CombinationScore a{{1, 2}, SplitSide::train, 2.0 / 3.0, 2, 3};
  const CombinationScore b{{1, 3}, SplitSide::train, 4.0 / 6.0, 4, 6};
  const CombinationScore c{{2, 3}, SplitSide::train, 0.5, 1, 2};
  EXPECT_TRUE(score_order(a, b));
  EXPECT_FALSE(score_order(b, a));
  EXPECT_TRUE(score_order(b, c));
}

TEST(Scoring, SingleAndComboAccuracy) {
  const auto f = make_fixture({"gout", "anemia", "asthma"}, {{1, {"gout", "anemia", "copd"}},
                                                             {2, {"gout", "x", std::nullopt}},
                                                             {3, {"y", "anemia", "asthma"}}});
  const auto s1 = single_accuracy(f.matrix, f.corpus, 1, f.keys);
  EXPECT_EQ(s1.correct_count, 2u);
  EXPECT_EQ(s1.total, 3u);
  EXPECT_EQ(single_accuracy(f.matrix, f.corpus, 2, f.keys).correct_count, 1u);
  const std::vector<int> all{1, 2, 3};
  const auto combo = combo_accuracy(f.matrix, f.corpus, all, f.keys);
  // item0: gout x2; item1: anemia x2; item2: copd vs asthma tie -> founder turn 1 (copd) wins.
  EXPECT_EQ(combo.correct_count, 2u);
  EXPECT_EQ(combo.turns, all);
}

TEST(Scoring, TableErrors) {
  const auto f = make_fixture({"gout"}, {{1, {"gout"}}, {2, {"gout"}}});
  EXPECT_THROW(ScoringTable(f.matrix, f.corpus, {}), ValidationError);
  EXPECT_THROW(ScoringTable(f.matrix, f.corpus, {PairKey{"n", "other"}}), ValidationError);
  ScoringTable t(f.matrix, f.corpus, f.keys);
  EXPECT_THROW(t.single(7), ValidationError);
  const std::vector<int> dup{1, 1};
  EXPECT_THROW(t.combo(dup), ValidationError);
  EXPECT_THROW(t.combo(std::vector<int>{}), ValidationError);
  auto incomplete = f.matrix;
  incomplete.turns.push_back(3);
  EXPECT_THROW(ScoringTable(incomplete, f.corpus, f.keys), ValidationError);
}

TEST(Scoring, FastPathAgreesWithReferenceVote) {
  const auto f = make_fixture({"gout", "anemia"}, {{1, {"gout", "anemia"}},
                                                   {2, {"goat", "anaemia"}},
                                                   {3, {"asthma", "x"}},
                                                   {4, {std::nullopt, "x"}}});
  ScoringTable t(f.matrix, f.corpus, f.keys);
  for (const auto& subset : k_subsets({1, 2, 3, 4}, 3)) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < t.item_count(); ++i)
      correct += majority_vote(t.votes(i, subset), t.truths(i)).correct;
    EXPECT_EQ(t.combo(subset).correct_count, correct);
    for (std::size_t i = 0; i < t.item_count(); ++i)
      EXPECT_EQ(t.vote(i, subset).correct, majority_vote(t.votes(i, subset), t.truths(i)).correct);
  }
}

TEST(Combinations, Counts) {
  EXPECT_EQ(combination_count(18, 5), 8568u);
  EXPECT_EQ(combination_count(18, 18), 1u);
  EXPECT_EQ(combination_count(6, 2), 15u);
  EXPECT_EQ(combination_count(3, 5), 0u);
  const auto subsets = k_subsets({1, 2, 3, 4}, 2);
  EXPECT_EQ(subsets.size(), 6u);
  EXPECT_EQ(subsets.front(), (std::vector<int>{1, 2}));
  EXPECT_EQ(subsets.back(), (std::vector<int>{3, 4}));
}

TEST(Sweep, SizesAndOrdering) {
  std::map<int, std::vector<std::optional<std::string>>> answers;
  for (int t = 1; t <= 18; ++t) answers[t] = {t % 3 ? std::optional<std::string>("gout") : "x", "anemia"};
  const auto f = make_fixture({"gout", "anemia"}, answers);
  ScoringTable table(f.matrix, f.corpus, f.keys);
  const auto s5 = sweep_combinations(table, 5);
  EXPECT_EQ(s5.size(), 8568u);
  EXPECT_TRUE(std::is_sorted(s5.begin(), s5.end(), score_order));
  EXPECT_EQ(sweep_combinations(table, 18).size(), 1u);
  EXPECT_EQ(sweep_combinations(table, 1).size(), 18u);
  EXPECT_THROW(sweep_combinations(table, 19), ValidationError);
  EXPECT_THROW(sweep_combinations(table, 0), ValidationError);
  EXPECT_EQ(sweep_combinations(table, 5, 1), sweep_combinations(table, 5, 3));
}

TEST(Sweep, SixTurnsKTwoGivesFifteen) {
  std::map<int, std::vector<std::optional<std::string>>> answers;
  for (int t = 1; t <= 6; ++t) answers[t] = {"gout"};
  const auto f = make_fixture({"gout"}, answers);
  EXPECT_EQ(sweep_combinations(f.matrix, f.corpus, 2, f.keys).size(), 15u);
}

TEST(Sweep, SingletonsEqualSingleAccuracy) {
  std::map<int, std::vector<std::optional<std::string>>> answers;
  for (int t = 1; t <= 6; ++t)
    answers[t] = {t % 2 ? std::optional<std::string>("gout") : "x", t % 3 ? std::optional<std::string>("anemia") : std::nullopt};
  const auto f = make_fixture({"gout", "anemia"}, answers);
  ScoringTable table(f.matrix, f.corpus, f.keys);
  for (const auto& s : sweep_combinations(table, 1)) {
    const auto single = table.single(s.turns.front());
    EXPECT_EQ(s, single);
  }
}

TEST(Csv, RoundTrip) {
  const std::vector<CombinationScore> scores{{{1, 2, 3}, SplitSide::train, 2.0 / 3.0, 2, 3},
                                             {{4}, SplitSide::test, 0.0, 0, 3}};
  const auto csv = scores_to_csv(scores);
  EXPECT_EQ(csv, "turns,split,correct,total,accuracy\n1;2;3,train,2,3,0.666667\n4,test,0,3,0.000000\n");
  EXPECT_EQ(scores_from_csv(csv), scores);
  EXPECT_THROW(scores_from_csv("bad header\n"), ValidationError);
  EXPECT_THROW(scores_from_csv("turns,split,correct,total,accuracy\n1;2,train,5,3,1.0\n"), ValidationError);
}
