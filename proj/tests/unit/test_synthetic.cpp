#include <gtest/gtest.h>

#include "consensus_dx/config_space.hpp"
#include "consensus_dx/errors.hpp"
#include "consensus_dx/evaluator.hpp"
#include "consensus_dx/prompts.hpp"
#include "consensus_dx/synthetic.hpp"

using namespace consensus_dx;

namespace {

SyntheticVoterModel model_with(double p, ConfuserMode mode = ConfuserMode::binary, std::uint64_t seed = 9) {
  SyntheticVoterModel m;
  for (int t = 1; t <= 18; ++t) m.per_turn_accuracy[t] = p;
  m.confuser_mode = mode;
  m.seed = seed;
  return m;
}

}  // namespace

TEST(SynthAnswer, ProbabilityBoundaries) {
  const auto always = model_with(1.0);
  const auto never = model_with(0.0);
  for (int i = 0; i < 500; ++i) {
    const auto key = "item-" + std::to_string(i);
    EXPECT_EQ(synth_answer(always, 3, key, "Anemia"), "Anemia");
    EXPECT_EQ(synth_answer(never, 3, key, "Anemia"), "WRONG");
  }
}

TEST(SynthAnswer, DistinctConfuserNamesTheTurn) {
  EXPECT_EQ(synth_answer(model_with(0.0, ConfuserMode::distinct), 7, "k", "Gout"), "WRONG-7");
}

TEST(SynthAnswer, PureFunctionOfInputs) {
  const auto m = model_with(0.5);
  for (int i = 0; i < 200; ++i) {
    const auto key = "item-" + std::to_string(i);
    EXPECT_EQ(synth_answer(m, 5, key, "Gout"), synth_answer(m, 5, key, "Gout"));
  }
}

TEST(SynthAnswer, EmpiricalRateTracksAccuracy) {
  const auto m = model_with(0.6);
  int right = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) right += synth_answer(m, 2, "item-" + std::to_string(i), "T") == "T";
  EXPECT_NEAR(static_cast<double>(right) / n, 0.6, 0.015);
}

TEST(SynthAnswer, TurnsAreIndependent) {
  const auto m = model_with(0.5);
  int both = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto key = "item-" + std::to_string(i);
    both += synth_answer(m, 1, key, "T") == "T" && synth_answer(m, 2, key, "T") == "T";
  }
  EXPECT_NEAR(static_cast<double>(both) / n, 0.25, 0.015);
}

TEST(SynthAnswer, SeedChangesDraws) {
  int differ = 0;
  for (int i = 0; i < 200; ++i) {
    const auto key = "item-" + std::to_string(i);
    differ += synth_answer(model_with(0.5, ConfuserMode::binary, 1), 1, key, "T") !=
              synth_answer(model_with(0.5, ConfuserMode::binary, 2), 1, key, "T");
  }
  EXPECT_GT(differ, 50);
}

TEST(SynthAnswer, Errors) {
  SyntheticVoterModel m;
  m.per_turn_accuracy[1] = 0.5;
  EXPECT_THROW(synth_answer(m, 2, "k", "T"), ValidationError);
  m.per_turn_accuracy[1] = 1.5;
  EXPECT_THROW(m.validate(), ValidationError);
  EXPECT_THROW(parse_confuser_mode("other"), ValidationError);
  EXPECT_EQ(parse_confuser_mode("distinct"), ConfuserMode::distinct);
}

TEST(SyntheticSummary, FitsOrTruncatesAtSentence) {
  EXPECT_EQ(synthetic_summary("Short.", 100), "Short.");
  EXPECT_EQ(synthetic_summary("One two. Three four five.", 12), "One two.");
}

TEST(SyntheticCorpus, DeterministicAndSized) {
  const auto a = make_synthetic_corpus({5, 4, 900, 11});
  const auto b = make_synthetic_corpus({5, 4, 900, 11});
  EXPECT_EQ(serialize_corpus(a), serialize_corpus(b));
  EXPECT_EQ(a.pairs().size(), 20u);
  for (const auto& n : a.notes()) EXPECT_GE(n.text.size(), 900u);
  EXPECT_NE(serialize_corpus(a), serialize_corpus(make_synthetic_corpus({5, 4, 900, 12})));
  EXPECT_THROW(make_synthetic_corpus({0, 4, 900, 1}), ValidationError);
  EXPECT_THROW(make_synthetic_corpus({1, 99, 900, 1}), ValidationError);
}

TEST(SyntheticCorpus, DiagnosesAreMutuallyDissimilarAndFarFromConfusers) {
  const auto map = ExpansionMap::defaults();
  const auto& table = synthetic_drug_table();
  std::vector<std::string> dx;
  for (const auto& [drug, d] : table) dx.push_back(normalize(d, map));
  for (std::size_t i = 0; i < dx.size(); ++i) {
    for (std::size_t j = i + 1; j < dx.size(); ++j) EXPECT_LT(similarity(dx[i], dx[j]), 0.6) << dx[i] << " / " << dx[j];
    EXPECT_LT(similarity(dx[i], "wrong"), 0.6);
    for (int t = 1; t <= 18; ++t) EXPECT_LT(similarity(dx[i], "wrong " + std::to_string(t)), 0.6);
  }
}

TEST(SyntheticProvider, AnswersBothPromptKinds) {
  const auto corpus = make_synthetic_corpus({2, 3, 4600, 5});
  const auto grid = full_grid();
  SyntheticProvider p(model_with(1.0), corpus, grid);
  const auto& note = corpus.notes().front();
  const auto summary = p.complete({"m", prompts::summarization_prompt(note.text, 2000), 0.1, 0.1, 1024});
  EXPECT_LE(summary.size(), 2000u);
  EXPECT_EQ(summary, synthetic_summary(note.text, 2000));

  const auto& pair = corpus.pairs().front();
  const auto& turn = find_turn(grid, 14);
  const auto answer = p.complete({"m", prompts::prediction_prompt(summary, pair.medication), turn.temperature,
                                  turn.top_p, 64});
  EXPECT_EQ(answer, pair.accepted_diagnoses.front());
  EXPECT_THROW(p.complete({"m", "free text", 0.1, 0.1, 64}), UpstreamError);
  EXPECT_THROW(p.complete({"m", prompts::prediction_prompt("unknown note", pair.medication), 0.1, 0.1, 64}),
               UpstreamError);
}

TEST(SyntheticProvider, AttributesTurnFromDecodingAndLength) {
  const auto corpus = make_synthetic_corpus({1, 2, 4600, 5});
  const auto grid = full_grid();
  SyntheticVoterModel m;
  for (int t = 1; t <= 18; ++t) m.per_turn_accuracy[t] = t == 10 ? 1.0 : 0.0;
  SyntheticProvider p(m, corpus, grid);
  const auto& note = corpus.notes().front();
  const auto& pair = corpus.pairs().front();
  const auto s4000 = synthetic_summary(note.text, 4000);
  const auto s2000 = synthetic_summary(note.text, 2000);
  EXPECT_EQ(p.complete({"m", prompts::prediction_prompt(s4000, pair.medication), 0.5, 0.1, 64}),
            pair.accepted_diagnoses.front());
  EXPECT_EQ(p.complete({"m", prompts::prediction_prompt(s2000, pair.medication), 0.5, 0.1, 64}), "WRONG");
}
