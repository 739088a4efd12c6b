#include <gtest/gtest.h>

#include <atomic>
#include <functional>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/prompts.hpp"
#include "consensus_dx/summarizer.hpp"
#include "consensus_dx/synthetic.hpp"
#include "test_support.hpp"

using namespace consensus_dx;

namespace {

/// Answers summarization prompts with a caller-supplied function of the note.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(std::function<std::string(const std::string&)> fn, std::atomic<int>* calls)
      : fn_(std::move(fn)), calls_(calls) {}
  ProviderKind kind() const override { return ProviderKind::synthetic; }
  std::string complete(const CompletionRequest& r) override {
    ++*calls_;
    auto slots = prompts::parse_summarization_prompt(r.prompt);
    if (!slots) throw UpstreamError("not a summarization prompt");
    return fn_(slots->note_text);
  }

 private:
  std::function<std::string(const std::string&)> fn_;
  std::atomic<int>* calls_;
};

std::string sentences(std::size_t chars) {
  std::string s;
  while (s.size() < chars) s += "Patient reports steady improvement. ";
  return s.substr(0, chars);
}

}  // namespace

TEST(Bound, ToleranceAndUnits) {
  SummarizerOptions o;
  EXPECT_EQ(summary_length_bound(2000, o), 2400u);
  o.unit = SummaryUnit::tokens;
  EXPECT_EQ(summary_length_bound(500, o), 2400u);
  o = SummarizerOptions{};
  o.tolerance = 1.0;
  EXPECT_EQ(summary_length_bound(2000, o), 2000u);
}

TEST(Truncate, SentenceThenWhitespaceThenHardCut) {
  EXPECT_EQ(truncate_at_sentence("Short.", 100), "Short.");
  EXPECT_EQ(truncate_at_sentence("A b. C d! E f? G h", 12), "A b. C d!");
  EXPECT_EQ(truncate_at_sentence("alpha beta gamma", 12), "alpha beta");
  EXPECT_EQ(truncate_at_sentence("abcdefghij", 4), "abcd");
  // Never splits a multi-byte character: "é" is two bytes.
  EXPECT_EQ(truncate_at_sentence("ab\xc3\xa9", 3), "ab");
}

TEST(Summarize, SixtyFourHundredCharNoteFitsBound) {
  std::atomic<int> calls{0};
  const auto corpus = make_synthetic_corpus({1, 2, 6400, 2});
  const auto& note = corpus.notes().front();
  ASSERT_GE(note.text.size(), 6400u);
  Gateway g(std::make_unique<ScriptedProvider>([](const std::string& t) { return t.substr(0, 1900); }, &calls));
  const auto s = summarize(g, note, 2000);
  EXPECT_LT(s.text.size(), note.text.size());
  EXPECT_LE(s.text.size(), 2400u);
  EXPECT_FALSE(s.passthrough);
  EXPECT_EQ(calls.load(), 1);
}

TEST(Summarize, ShortNotePassesThroughWithoutModelCall) {
  std::atomic<int> calls{0};
  Gateway g(std::make_unique<ScriptedProvider>([](const std::string&) { return "x"; }, &calls));
  const ClinicalNote note{"n", sentences(1500), {"A"}};
  const auto s = summarize(g, note, 2000);
  EXPECT_TRUE(s.passthrough);
  EXPECT_EQ(s.text, note.text);
  EXPECT_EQ(calls.load(), 0);
}

TEST(Summarize, OverlongResponseIsRepromptedOnce) {
  std::atomic<int> calls{0};
  // First answer is too long; the second (summarizing the first) fits.
  Gateway g(std::make_unique<ScriptedProvider>(
      [](const std::string& t) { return t.size() > 5000 ? sentences(3000) : sentences(1800); }, &calls));
  const auto s = summarize(g, ClinicalNote{"n", sentences(6400), {"A"}}, 2000);
  EXPECT_EQ(calls.load(), 2);
  EXPECT_EQ(s.text.size(), sentences(1800).size() - 1);  // trailing space trimmed
}

TEST(Summarize, PersistentlyOverlongResponseIsTruncatedAtSentence) {
  std::atomic<int> calls{0};
  Gateway g(std::make_unique<ScriptedProvider>([](const std::string&) { return sentences(5000); }, &calls));
  const auto s = summarize(g, ClinicalNote{"n", sentences(6400), {"A"}}, 2000);
  EXPECT_EQ(calls.load(), 2);
  EXPECT_LE(s.text.size(), 2400u);
  EXPECT_EQ(s.text.back(), '.');
}

TEST(Summarize, EmptyResponseIsUpstreamError) {
  std::atomic<int> calls{0};
  Gateway g(std::make_unique<ScriptedProvider>([](const std::string&) { return "   "; }, &calls));
  EXPECT_THROW(summarize(g, ClinicalNote{"n", sentences(3000), {"A"}}, 2000), UpstreamError);
  EXPECT_THROW(summarize(g, ClinicalNote{"n", "x", {"A"}}, 0), ValidationError);
}

TEST(Summarize, RepeatCallIsCachedAndIdentical) {
  cdx_test::TempDir dir;
  std::atomic<int> calls{0};
  GatewayOptions o;
  o.cache_dir = dir.path();
  Gateway g(std::make_unique<ScriptedProvider>([](const std::string& t) { return t.substr(0, 3500); }, &calls), o);
  const ClinicalNote note{"n", sentences(6400), {"A"}};
  const auto a = summarize(g, note, 4000);
  const auto b = summarize(g, note, 4000);
  EXPECT_EQ(a, b);
  EXPECT_EQ(calls.load(), 1);
}

TEST(SummarizeCorpus, TwentyNotesTwoLengthsGiveFortySummaries) {
  cdx_test::TempDir dir;
  const auto corpus = make_synthetic_corpus({20, 2, 4600, 4});
  const auto grid = full_grid();
  GatewayOptions o;
  o.cache_dir = dir.path();
  auto make = [&] {
    return Gateway(std::make_unique<SyntheticProvider>(SyntheticVoterModel{{{1, 1.0}}}, corpus, grid), o);
  };
  auto g = make();
  const auto run = summarize_corpus(g, corpus, {2000, 4000});
  EXPECT_EQ(run.summaries.size(), 40u);
  EXPECT_TRUE(run.complete());
  EXPECT_EQ(run.upstream_calls, 40u);

  auto warm = make();
  const auto again = summarize_corpus(warm, corpus, {2000, 4000});
  EXPECT_EQ(again.upstream_calls, 0u);
  EXPECT_EQ(serialize_summaries(again.summaries), serialize_summaries(run.summaries));
}

TEST(SummarizeCorpus, FailuresAreCollected) {
  std::atomic<int> calls{0};
  Gateway g(std::make_unique<ScriptedProvider>(
      [](const std::string&) -> std::string { throw UpstreamError("down"); }, &calls));
  const auto corpus = make_synthetic_corpus({3, 1, 4600, 4});
  const auto run = summarize_corpus(g, corpus, {2000});
  EXPECT_EQ(run.failures.size(), 3u);
  EXPECT_FALSE(run.complete());
  EXPECT_THROW(summarize_corpus(g, corpus, {}), ValidationError);
  EXPECT_THROW(summarize_corpus(g, corpus, {-5}), ValidationError);
}

TEST(SummaryFile, RoundTripAndErrors) {
  cdx_test::TempDir dir;
  SummaryMap m;
  m[{"b", 2000}] = Summary{"b", 2000, "text b", false};
  m[{"a", 4000}] = Summary{"a", 4000, "text \"a\"\n", true};
  save_summaries(m, dir / "s.jsonl");
  EXPECT_EQ(load_summaries(dir / "s.jsonl"), m);
  EXPECT_EQ(serialize_summaries(parse_summaries(serialize_summaries(m))), serialize_summaries(m));
  EXPECT_THROW(parse_summaries("{oops"), ParseError);
  EXPECT_THROW(load_summaries(dir / "missing.jsonl"), ValidationError);
}
