#include <gtest/gtest.h>

#include "consensus_dx/llm_gateway.hpp"
#include "consensus_dx/prompts.hpp"
#include "properties.hpp"

using namespace consensus_dx;
using namespace cdx_test;

namespace {

void expect_ok(const PropertyResult& r) {
  EXPECT_GE(r.cases, kPropertyCases);
  for (const auto& f : r.failures) ADD_FAILURE() << r.name << ": " << f;
}

}  // namespace

TEST(Property, NormalizeIdempotent) { expect_ok(check_normalize_idempotent(101)); }
TEST(Property, SimilarityLaws) { expect_ok(check_similarity_laws(102)); }
TEST(Property, SimilarityMatchesOracle) { expect_ok(check_similarity_oracle(103)); }
TEST(Property, VotePermutationInvariance) { expect_ok(check_vote_permutation_invariance(104)); }
TEST(Property, StrictMajorityDominance) { expect_ok(check_strict_majority_dominance(105)); }
TEST(Property, SingletonReduction) { expect_ok(check_singleton_reduction(106)); }
TEST(Property, ComboMatchesReferenceVote) { expect_ok(check_combo_matches_reference(107)); }
TEST(Property, PartitionExhaustive) { expect_ok(check_partition_exhaustive(108)); }
TEST(Property, IntersectionSymmetry) { expect_ok(check_intersection_symmetry(109)); }
TEST(Property, FrequencyIdentities) { expect_ok(check_frequency_identities(110)); }
TEST(Property, SplitLaws) { expect_ok(check_split_laws(111)); }
TEST(Property, SweepSizes) { expect_ok(check_sweep_sizes(112)); }

TEST(Property, PromptsRoundTrip) {
  std::mt19937_64 rng(113);
  for (int i = 0; i < kPropertyCases; ++i) {
    const auto note = random_string(rng, 60, "ab ',:{}.\n") + "z";
    const auto med = "Med " + random_string(rng, 10, "abc ");
    const auto p = prompts::parse_prediction_prompt(prompts::prediction_prompt(note, med));
    ASSERT_TRUE(p);
    EXPECT_EQ(p->clinical_note, note);
    EXPECT_EQ(p->medication, med);
    const int len = 1 + static_cast<int>(rng() % 9000);
    const auto s = prompts::parse_summarization_prompt(prompts::summarization_prompt(note, len));
    ASSERT_TRUE(s);
    EXPECT_EQ(s->summary_length, len);
    EXPECT_EQ(s->note_text, note);
  }
}

TEST(Property, CacheKeyIgnoresNumberSpelling) {
  std::mt19937_64 rng(114);
  for (int i = 0; i < kPropertyCases; ++i) {
    const double t = static_cast<double>(rng() % 101) / 100.0;
    CompletionRequest a{"m", random_string(rng, 20, "abc") + "q", t, 0.5, 64};
    const auto back = request_from_json(canonical_request_json(a));
    EXPECT_EQ(cache_key(back), cache_key(a));
    auto b = a;
    b.prompt += " ";
    EXPECT_NE(cache_key(b), cache_key(a));
  }
}

TEST(Property, ScoresCsvRoundTrip) {
  std::mt19937_64 rng(115);
  std::vector<CombinationScore> scores;
  for (int i = 0; i < kPropertyCases; ++i) scores.push_back(detail::random_score(rng, 1 + rng() % 5));
  EXPECT_EQ(scores_from_csv(scores_to_csv(scores)), scores);
}
