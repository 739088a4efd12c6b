#include "consensus_dx/summarizer.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/io.hpp"
#include "consensus_dx/parallel.hpp"
#include "consensus_dx/prompts.hpp"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;

std::size_t summary_length_bound(int target_length, const SummarizerOptions& options) {
  const int budget = character_budget(target_length, options.unit);
  return static_cast<std::size_t>(std::ceil(options.tolerance * budget - 1e-9));
}

std::string truncate_at_sentence(const std::string& text, std::size_t bound) {
  if (text.size() <= bound) return text;
  for (std::size_t i = bound; i-- > 0;) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))
      return text.substr(0, i + 1);
  }
  for (std::size_t i = bound; i-- > 0;)
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      if (i > 0) return text.substr(0, i);
      break;
    }
  std::size_t cut = bound;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return text.substr(0, cut);
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

CompletionRequest summary_request(const std::string& text, int target_length, const SummarizerOptions& o) {
  return CompletionRequest{o.model_name, prompts::summarization_prompt(text, target_length), o.temperature,
                           o.top_p, o.max_output_tokens};
}

}  // namespace

Summary summarize(Gateway& gateway, const ClinicalNote& note, int target_length, const SummarizerOptions& options) {
  if (target_length <= 0) throw ValidationError("summary target length must be positive");
  const auto budget = static_cast<std::size_t>(character_budget(target_length, options.unit));
  if (note.text.size() <= budget) return Summary{note.note_id, target_length, note.text, true};

  const auto bound = summary_length_bound(target_length, options);
  auto text = trim(gateway.complete(summary_request(note.text, target_length, options)).text);
  if (text.size() > bound) {
    text = trim(gateway.complete(summary_request(text, target_length, options)).text);
    if (text.size() > bound) {
      spdlog::warn("summary of {} at length {} still {} chars after re-prompt; truncating to {}", note.note_id,
                   target_length, text.size(), bound);
      text = truncate_at_sentence(text, bound);
    }
  }
  if (text.empty()) throw UpstreamError("empty summary for note " + note.note_id);
  return Summary{note.note_id, target_length, std::move(text), false};
}

SummaryRun summarize_corpus(Gateway& gateway, const Corpus& corpus, const std::vector<int>& lengths,
                            const SummarizerOptions& options) {
  if (lengths.empty()) throw ValidationError("summarize_corpus needs at least one summary length");
  const std::set<int> unique(lengths.begin(), lengths.end());
  for (int l : unique)
    if (l <= 0) throw ValidationError("summary lengths must be positive");

  std::vector<std::pair<const ClinicalNote*, int>> jobs;
  for (const auto& note : corpus.notes())
    for (int l : unique) jobs.emplace_back(&note, l);

  std::vector<std::optional<Summary>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const auto calls_before = gateway.stats().upstream_calls;
  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    try {
      results[i] = summarize(gateway, *jobs[i].first, jobs[i].second, options);
    } catch (const UpstreamError& e) {
      errors[i] = e.what();
    }
  });

  SummaryRun run;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i])
      run.summaries.emplace(std::pair{results[i]->note_id, results[i]->target_length}, std::move(*results[i]));
    else
      run.failures.push_back(SummaryFailure{jobs[i].first->note_id, jobs[i].second, errors[i]});
  }
  run.upstream_calls = gateway.stats().upstream_calls - calls_before;
  return run;
}

std::string serialize_summaries(const SummaryMap& summaries) {
  std::string out;
  for (const auto& [_, s] : summaries) {
    json j = {{"note_id", s.note_id}, {"target_length", s.target_length}, {"text", s.text},
              {"passthrough", s.passthrough}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

SummaryMap parse_summaries(const std::string& content, const std::string& source_name) {
  SummaryMap out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      Summary s{j.at("note_id").get<std::string>(), j.at("target_length").get<int>(),
                j.at("text").get<std::string>(), j.at("passthrough").get<bool>()};
      auto key = std::pair{s.note_id, s.target_length};
      out.insert_or_assign(std::move(key), std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(source_name, lineno, e.what());
    }
  }
  return out;
}

void save_summaries(const SummaryMap& summaries, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_summaries(summaries));
}

SummaryMap load_summaries(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("summaries file not found: " + path.string());
  return parse_summaries(read_file(path), path.string());
}

}  // namespace consensus_dx
