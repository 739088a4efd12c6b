#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace consensus_dx {

struct ClinicalNote {
  std::string note_id;
  std::string text;
  std::vector<std::string> medications;
};

struct GroundTruthPair {
  std::string note_id;
  std::string medication;
  std::vector<std::string> accepted_diagnoses;
};

/// (note_id, medication). Identifies one scored item.
struct PairKey {
  std::string note_id;
  std::string medication;

  auto operator<=>(const PairKey&) const = default;
};

class Corpus {
 public:
  Corpus() = default;

  /// Validates on construction; throws ValidationError when an invariant is broken.
  Corpus(std::vector<ClinicalNote> notes, std::vector<GroundTruthPair> pairs);

  const std::vector<ClinicalNote>& notes() const noexcept { return notes_; }
  const std::vector<GroundTruthPair>& pairs() const noexcept { return pairs_; }

  const ClinicalNote& note(const std::string& note_id) const;
  const GroundTruthPair& pair(const PairKey& key) const;
  bool contains(const PairKey& key) const { return pair_index_.count(key) != 0; }

  /// Every ground-truth key, sorted lexicographically.
  std::vector<PairKey> keys() const;

 private:
  std::vector<ClinicalNote> notes_;
  std::vector<GroundTruthPair> pairs_;
  std::map<std::string, std::size_t> note_index_;
  std::map<PairKey, std::size_t> pair_index_;
};

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Canonical line-delimited serialization, as written by save_corpus.
std::string serialize_corpus(const Corpus& corpus);
Corpus parse_corpus(const std::string& content, const std::string& source_name = "<memory>");

enum class SplitGranularity { pair, note };

std::string to_string(SplitGranularity g);
SplitGranularity parse_granularity(const std::string& s);

struct DatasetSplit {
  std::set<PairKey> train_keys;
  std::set<PairKey> test_keys;
  std::uint64_t seed = 0;
  double train_fraction = 0.6;
  SplitGranularity granularity = SplitGranularity::pair;
};

/// Seeded partition of the corpus into train and test keys.
///
/// Units (pairs or note ids, per granularity) are sorted lexicographically,
/// shuffled with Fisher-Yates driven by a 64-bit Mersenne Twister seeded
/// with `seed` (indices drawn by rejection sampling, so the permutation does
/// not depend on the standard library's distribution implementation), and
/// the first floor(train_fraction * units) units go to train.
DatasetSplit split_corpus(const Corpus& corpus, double train_fraction, std::uint64_t seed,
                          SplitGranularity granularity = SplitGranularity::pair);

std::string serialize_split(const DatasetSplit& split);
DatasetSplit parse_split(const std::string& content);
void save_split(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit load_split(const std::filesystem::path& path);

/// Sorted key list for one side of a split.
std::vector<PairKey> keys_of(const std::set<PairKey>& side);

}  // namespace consensus_dx
