#include "consensus_dx/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>
#include <set>
#include <sstream>

#include "consensus_dx/analyzer.hpp"
#include "consensus_dx/io.hpp"
#include "consensus_dx/predictor.hpp"
#include "consensus_dx/summarizer.hpp"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (k == "api_key" || k == "apiKey")
      throw ValidationError("API keys are read from CONSENSUS_DX_API_KEY only, never from config files");
    if (!ok) throw ValidationError("unknown setting '" + k + "' in " + where);
  }
}

std::string fmt_acc(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", a);
  return buf;
}

std::string join_turns(const std::vector<int>& turns, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(turns[i]);
  }
  return out;
}

std::string describe(const CombinationScore& s) {
  return join_turns(s.turns) + " accuracy " + fmt_acc(s.accuracy) + " (" + std::to_string(s.correct_count) + "/" +
         std::to_string(s.total) + ")";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

RunConfig RunConfig::parse(const std::string& json_text, const fs::path& base_dir) {
  RunConfig c;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed run config: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  try {
    reject_unknown(j,
                   {"corpus", "output_dir", "cache_dir", "grid", "summary_unit", "provider", "workers", "allow_partial",
                    "summary_max_tokens", "prediction_max_tokens", "split", "evaluation"},
                   "run config");
    auto opt_path = [&](const json& obj, const char* key) -> std::optional<fs::path> {
      if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
      return resolve(obj.at(key).get<std::string>(), base_dir);
    };
    if (j.contains("corpus")) c.corpus = resolve(j.at("corpus").get<std::string>(), base_dir);
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
    c.cache_dir = opt_path(j, "cache_dir");
    c.grid = opt_path(j, "grid");
    if (j.contains("summary_unit")) c.summary_unit = parse_summary_unit(j.at("summary_unit").get<std::string>());
    c.workers = j.value("workers", c.workers);
    c.allow_partial = j.value("allow_partial", c.allow_partial);
    c.summary_max_tokens = j.value("summary_max_tokens", c.summary_max_tokens);
    c.prediction_max_tokens = j.value("prediction_max_tokens", c.prediction_max_tokens);

    if (j.contains("provider")) {
      const auto& p = j.at("provider");
      reject_unknown(p,
                     {"kind", "base_url", "model", "rate_limit_per_minute", "max_attempts", "backoff_base_ms",
                      "timeout_s", "replay_dir", "synthetic"},
                     "provider");
      auto& ps = c.provider;
      if (p.contains("kind")) ps.kind = parse_provider_kind(p.at("kind").get<std::string>());
      ps.base_url = p.value("base_url", ps.base_url);
      ps.model = p.value("model", ps.model);
      ps.rate_limit_per_minute = p.value("rate_limit_per_minute", ps.rate_limit_per_minute);
      ps.max_attempts = p.value("max_attempts", ps.max_attempts);
      ps.backoff_base_ms = p.value("backoff_base_ms", ps.backoff_base_ms);
      ps.timeout_s = p.value("timeout_s", ps.timeout_s);
      ps.replay_dir = opt_path(p, "replay_dir");
      if (p.contains("synthetic")) {
        const auto& s = p.at("synthetic");
        reject_unknown(s, {"per_turn_accuracy", "default_accuracy", "confuser_mode", "seed"}, "provider.synthetic");
        if (s.contains("per_turn_accuracy"))
          for (const auto& [turn, acc] : s.at("per_turn_accuracy").items())
            ps.synthetic.per_turn_accuracy[std::stoi(turn)] = acc.get<double>();
        if (s.contains("default_accuracy")) ps.synthetic_default_accuracy = s.at("default_accuracy").get<double>();
        if (s.contains("confuser_mode"))
          ps.synthetic.confuser_mode = parse_confuser_mode(s.at("confuser_mode").get<std::string>());
        ps.synthetic.seed = s.value("seed", ps.synthetic.seed);
      }
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown(s, {"train_fraction", "seed", "granularity"}, "split");
      c.split.train_fraction = s.value("train_fraction", c.split.train_fraction);
      c.split.seed = s.value("seed", c.split.seed);
      if (s.contains("granularity")) c.split.granularity = parse_granularity(s.at("granularity").get<std::string>());
    }
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      reject_unknown(e,
                     {"threshold", "partition_threshold", "k", "top_n", "expansion_map", "strict_removal",
                      "exact_vote"},
                     "evaluation");
      auto& ev = c.evaluation;
      ev.threshold = e.value("threshold", ev.threshold);
      ev.partition_threshold = e.value("partition_threshold", ev.partition_threshold);
      ev.k = e.value("k", ev.k);
      ev.top_n = e.value("top_n", ev.top_n);
      ev.expansion_map = opt_path(e, "expansion_map");
      ev.strict_removal = e.value("strict_removal", ev.strict_removal);
      ev.exact_vote = e.value("exact_vote", ev.exact_vote);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid run config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("invalid run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
  return parse(read_file(path), path.parent_path());
}

std::string RunConfig::to_json() const {
  auto opt = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); };
  json per_turn = json::object();
  for (const auto& [t, a] : provider.synthetic.per_turn_accuracy) per_turn[std::to_string(t)] = a;
  json synthetic = {{"per_turn_accuracy", per_turn},
                    {"confuser_mode", to_string(provider.synthetic.confuser_mode)},
                    {"seed", provider.synthetic.seed}};
  if (provider.synthetic_default_accuracy) synthetic["default_accuracy"] = *provider.synthetic_default_accuracy;
  json j = {{"corpus", corpus.string()},
            {"output_dir", output_dir.string()},
            {"cache_dir", opt(cache_dir)},
            {"grid", opt(grid)},
            {"summary_unit", to_string(summary_unit)},
            {"workers", workers},
            {"allow_partial", allow_partial},
            {"summary_max_tokens", summary_max_tokens},
            {"prediction_max_tokens", prediction_max_tokens},
            {"provider",
             {{"kind", to_string(provider.kind)},
              {"base_url", provider.base_url},
              {"model", provider.model},
              {"rate_limit_per_minute", provider.rate_limit_per_minute},
              {"max_attempts", provider.max_attempts},
              {"backoff_base_ms", provider.backoff_base_ms},
              {"timeout_s", provider.timeout_s},
              {"replay_dir", opt(provider.replay_dir)},
              {"synthetic", synthetic}}},
            {"split",
             {{"train_fraction", split.train_fraction},
              {"seed", split.seed},
              {"granularity", to_string(split.granularity)}}},
            {"evaluation",
             {{"threshold", evaluation.threshold},
              {"partition_threshold", evaluation.partition_threshold},
              {"k", evaluation.k},
              {"top_n", evaluation.top_n},
              {"expansion_map", opt(evaluation.expansion_map)},
              {"strict_removal", evaluation.strict_removal},
              {"exact_vote", evaluation.exact_vote}}}};
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  if (corpus.empty()) throw ValidationError("no corpus path given");
  if (!fs::exists(corpus)) throw ValidationError("corpus file not found: " + corpus.string());
  if (grid && !fs::exists(*grid)) throw ValidationError("grid override not found: " + grid->string());
  if (evaluation.expansion_map && !fs::exists(*evaluation.expansion_map))
    throw ValidationError("expansion map not found: " + evaluation.expansion_map->string());
  if (!(evaluation.threshold >= 0.0 && evaluation.threshold <= 1.0))
    throw ValidationError("evaluation.threshold must lie in [0, 1]");
  if (!(evaluation.partition_threshold >= 0.0 && evaluation.partition_threshold <= 1.0))
    throw ValidationError("evaluation.partition_threshold must lie in [0, 1]");
  if (evaluation.k < 1) throw ValidationError("evaluation.k must be at least 1");
  if (evaluation.top_n < 1) throw ValidationError("evaluation.top_n must be at least 1");
  if (!(split.train_fraction > 0.0 && split.train_fraction <= 1.0))
    throw ValidationError("split.train_fraction must lie in (0, 1]");
  if (workers < 1) throw ValidationError("workers must be at least 1");
  if (summary_max_tokens < 1 || prediction_max_tokens < 1) throw ValidationError("token limits must be positive");
  if (!(provider.rate_limit_per_minute > 0.0)) throw ValidationError("provider.rate_limit_per_minute must be positive");
  if (provider.max_attempts < 1) throw ValidationError("provider.max_attempts must be at least 1");
  if (provider.backoff_base_ms < 0) throw ValidationError("provider.backoff_base_ms must be non-negative");
  if (provider.kind == ProviderKind::replay && !provider.replay_dir && !cache_dir)
    throw ValidationError("replay provider needs provider.replay_dir or cache_dir");
  if (provider.synthetic_default_accuracy &&
      !(*provider.synthetic_default_accuracy >= 0.0 && *provider.synthetic_default_accuracy <= 1.0))
    throw ValidationError("synthetic default_accuracy must lie in [0, 1]");
  provider.synthetic.validate();
}

std::vector<TurnConfig> grid_of(const RunConfig& config) {
  return config.grid ? expand_grid(load_grid_axes(*config.grid)) : full_grid();
}

EvaluationOptions evaluation_options(const RunConfig& config) {
  EvaluationOptions o;
  o.threshold = config.evaluation.threshold;
  o.exact_vote = config.evaluation.exact_vote;
  o.strict_removal = config.evaluation.strict_removal;
  if (config.evaluation.expansion_map) o.expansions = ExpansionMap::load(*config.evaluation.expansion_map);
  return o;
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config, const Corpus& corpus,
                                      const std::vector<TurnConfig>& grid) {
  GatewayOptions options;
  options.cache_dir = config.cache_dir;
  options.retry.max_attempts = config.provider.max_attempts;
  options.retry.base_delay = std::chrono::milliseconds(config.provider.backoff_base_ms);
  options.requests_per_minute = config.provider.rate_limit_per_minute;

  std::unique_ptr<Provider> provider;
  switch (config.provider.kind) {
    case ProviderKind::http: {
      HttpProviderOptions http;
      http.base_url = config.provider.base_url;
      http.timeout = std::chrono::seconds(config.provider.timeout_s);
      provider = std::make_unique<HttpProvider>(http);
      break;
    }
    case ProviderKind::replay:
      provider = std::make_unique<ReplayProvider>(config.provider.replay_dir ? *config.provider.replay_dir
                                                                             : *config.cache_dir);
      break;
    case ProviderKind::synthetic: {
      auto model = config.provider.synthetic;
      if (config.provider.synthetic_default_accuracy)
        for (const auto& c : grid) model.per_turn_accuracy.try_emplace(c.turn_id, *config.provider.synthetic_default_accuracy);
      provider = std::make_unique<SyntheticProvider>(model, corpus, grid, config.summary_unit);
      break;
    }
  }
  return std::make_unique<Gateway>(std::move(provider), options);
}

std::vector<int> parse_turn_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const auto b = tok.find_first_not_of(' ');
    const auto e = tok.find_last_not_of(' ');
    if (b == std::string::npos) throw ValidationError("empty entry in turn list '" + text + "'");
    tok = tok.substr(b, e - b + 1);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != tok.size()) throw ValidationError("bad turn id '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("empty turn list");
  if (std::set<int>(out.begin(), out.end()).size() != out.size())
    throw ValidationError("turn list repeats a turn");
  return out;
}

int cmd_summarize(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto corpus = load_corpus(config.corpus);
  const auto grid = grid_of(config);
  const auto lengths = summary_lengths_of(grid);
  auto gateway = make_gateway(config, corpus, grid);

  SummarizerOptions options;
  options.model_name = config.provider.model;
  options.max_output_tokens = config.summary_max_tokens;
  options.unit = config.summary_unit;
  options.workers = config.workers;
  auto run = summarize_corpus(*gateway, corpus, lengths, options);

  SummaryMap merged;
  if (fs::exists(config.summaries_path())) merged = load_summaries(config.summaries_path());
  for (auto& [k, s] : run.summaries) merged.insert_or_assign(k, s);
  save_summaries(merged, config.summaries_path());

  std::map<int, std::size_t> per_length;
  std::size_t passthrough = 0;
  for (const auto& [k, s] : run.summaries) {
    ++per_length[k.second];
    passthrough += s.passthrough;
  }
  out << "summarized " << run.summaries.size() << " (";
  bool first = true;
  for (const auto& [len, n] : per_length) {
    out << (first ? "" : ", ") << len << ": " << n;
    first = false;
  }
  out << "); " << passthrough << " passthrough; " << run.upstream_calls << " upstream calls; " << run.failures.size()
      << " failures\n";
  for (const auto& f : run.failures)
    out << "  failed " << f.note_id << " @" << f.target_length << ": " << f.message << '\n';
  out << "wrote " << config.summaries_path().string() << '\n';
  if (!run.complete() && !config.allow_partial) return kExitFailure;
  return kExitOk;
}

int cmd_predict(const RunConfig& config, const std::optional<std::vector<int>>& turns, std::ostream& out) {
  config.validate();
  const auto corpus = load_corpus(config.corpus);
  const auto grid = grid_of(config);
  std::vector<TurnConfig> configs;
  if (turns) {
    for (int t : *turns) configs.push_back(find_turn(grid, t));
    std::sort(configs.begin(), configs.end(), [](const auto& a, const auto& b) { return a.turn_id < b.turn_id; });
  } else {
    configs = grid;
  }
  if (!fs::exists(config.summaries_path()))
    throw ValidationError("summaries not found at " + config.summaries_path().string() + "; run summarize first");
  const auto summaries = load_summaries(config.summaries_path());
  auto gateway = make_gateway(config, corpus, grid);

  PredictorOptions options;
  options.model_name = config.provider.model;
  options.max_output_tokens = config.prediction_max_tokens;
  options.workers = config.workers;
  options.grid_hash = grid_hash(grid);
  const auto calls_before = gateway->stats().upstream_calls;
  const auto run = run_matrix(*gateway, corpus, summaries, configs, config.predictions_dir(), options);

  std::size_t errors = 0;
  for (const auto& r : run.report) {
    out << "turn " << r.turn_id << ": ok=" << r.ok << " errors=" << r.errors << " issued=" << r.issued
        << " resumed=" << r.resumed << '\n';
    errors += r.errors;
  }
  out << "matrix: " << run.matrix.entries.size() << " cells over " << configs.size() << " turns; " << errors
      << " errors; " << (gateway->stats().upstream_calls - calls_before) << " upstream calls\n";
  if (errors > 0 && !config.allow_partial) return kExitFailure;
  return kExitOk;
}

namespace {

struct Loaded {
  Corpus corpus;
  DatasetSplit split;
  PredictionMatrix matrix;
  EvaluationOptions eval;
};

Loaded load_for_scoring(const RunConfig& config, bool write_split) {
  config.validate();
  Loaded l;
  l.corpus = load_corpus(config.corpus);
  if (write_split) {
    l.split = split_corpus(l.corpus, config.split.train_fraction, config.split.seed, config.split.granularity);
    save_split(l.split, config.split_path());
  } else if (fs::exists(config.split_path())) {
    l.split = load_split(config.split_path());
  } else {
    l.split = split_corpus(l.corpus, config.split.train_fraction, config.split.seed, config.split.granularity);
  }
  l.matrix = load_matrix(config.predictions_dir());
  if (l.matrix.turns.empty()) throw Error("incomplete matrix: no prediction files under " + config.predictions_dir().string());
  l.eval = evaluation_options(config);
  return l;
}

void require_complete(const Loaded& l, const std::vector<PairKey>& keys, bool allow_partial) {
  std::size_t absent = 0, failed = 0;
  for (int t : l.matrix.turns)
    for (const auto& k : keys) {
      const auto* p = l.matrix.find(t, k);
      if (p == nullptr)
        ++absent;
      else if (!p->ok)
        ++failed;
    }
  if (absent > 0) throw Error("incomplete matrix: " + std::to_string(absent) + " cells missing; run predict first");
  if (failed > 0 && !allow_partial)
    throw Error("incomplete matrix: " + std::to_string(failed) + " cells carry errors (use --allow-partial)");
}

}  // namespace

int cmd_sweep(const RunConfig& config, std::ostream& out) {
  const auto l = load_for_scoring(config, true);
  const auto train = keys_of(l.split.train_keys);
  if (train.empty()) throw ValidationError("train split is empty");
  require_complete(l, train, config.allow_partial);
  const ScoringTable table(l.matrix, l.corpus, train, l.eval, SplitSide::train);
  const auto scores = sweep_combinations(table, config.evaluation.k);
  write_file_atomic(config.scores_path(), scores_to_csv(scores));

  std::vector<CombinationScore> singles;
  for (int t : table.turns()) singles.push_back(table.single(t));
  const auto best_single = *std::min_element(singles.begin(), singles.end(), score_order);
  out << "train items: " << table.item_count() << "; turns: " << table.turns().size() << "; k=" << config.evaluation.k
      << "; combinations: " << scores.size() << '\n';
  out << "best single: turn " << describe(best_single) << '\n';
  out << "best combo: " << describe(scores.front()) << '\n';
  out << "worst combo: " << describe(scores.back()) << '\n';
  out << "wrote " << config.scores_path().string() << '\n';
  return kExitOk;
}

int cmd_vote(const RunConfig& config, const std::vector<int>& turns, SplitSide side, std::ostream& out) {
  const auto l = load_for_scoring(config, false);
  std::vector<PairKey> keys;
  if (side == SplitSide::all)
    keys = l.corpus.keys();
  else
    keys = keys_of(side == SplitSide::train ? l.split.train_keys : l.split.test_keys);
  if (keys.empty()) throw ValidationError(to_string(side) + " split is empty");
  const ScoringTable table(l.matrix, l.corpus, keys, l.eval, side);

  std::string csv = "note_id,medication,winner,winner_turn,clusters,tie_broken,correct\n";
  std::size_t correct = 0;
  for (std::size_t i = 0; i < table.item_count(); ++i) {
    const auto v = table.vote(i, turns);
    correct += v.correct;
    csv += csv_field(table.keys()[i].note_id) + ',' + csv_field(table.keys()[i].medication) + ',' +
           csv_field(v.winner) + ',' + std::to_string(v.winner_founder) + ',' + std::to_string(v.cluster_sizes.size()) +
           ',' + (v.tie_broken ? "1" : "0") + ',' + (v.correct ? "1" : "0") + '\n';
  }
  const auto path = config.output_dir / "votes.csv";
  write_file_atomic(path, csv);
  const auto score = table.combo(turns);
  out << "vote over " << join_turns(score.turns) << " on " << to_string(side) << ": " << correct << "/"
      << table.item_count() << " correct (accuracy " << fmt_acc(score.accuracy) << ")\n";
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_analyze(const RunConfig& config, const std::optional<std::vector<int>>& ensemble, std::ostream& out) {
  if (!fs::exists(config.scores_path()))
    throw Error("missing sweep output " + config.scores_path().string() + "; run sweep first");
  const auto l = load_for_scoring(config, false);
  const auto scores = scores_from_csv(read_file(config.scores_path()));
  if (scores.empty()) throw Error("sweep output is empty");
  const auto train = keys_of(l.split.train_keys);
  const auto test = keys_of(l.split.test_keys);
  require_complete(l, train, config.allow_partial);
  const ScoringTable train_table(l.matrix, l.corpus, train, l.eval, SplitSide::train);
  std::optional<ScoringTable> test_table;
  if (!test.empty()) {
    require_complete(l, test, config.allow_partial);
    test_table.emplace(l.matrix, l.corpus, test, l.eval, SplitSide::test);
  }

  AnalyzeOptions options;
  options.partition_threshold = config.evaluation.partition_threshold;
  options.top_n = config.evaluation.top_n;
  options.ensemble_size = config.evaluation.k;
  options.ensemble_override = ensemble;
  const auto report = analyze(scores, train_table, test_table ? &*test_table : nullptr, l.eval.threshold, options);

  write_file_atomic(config.output_dir / "frequency.csv", frequency_to_csv(report.high_frequency, report.low_frequency));
  write_file_atomic(config.output_dir / "intersection.csv", intersection_to_csv(report.intersection));
  write_file_atomic(config.output_dir / "report.json", report_to_json(report));

  out << "partition at " << fmt_acc(report.partition_threshold) << ": " << report.high_count << " high, "
      << report.low_count << " low\n";
  out << "agreed turns (top " << report.top_n << "): " << join_turns(report.agreed) << '\n';
  out << "ensemble (" << report.ensemble_source << "): " << join_turns(report.ensemble) << '\n';
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  if (report.test) {
    out << "test best single: turn " << describe(report.test->best_single) << '\n';
    out << "test ensemble: " << describe(report.test->ensemble) << '\n';
  }
  out << "wrote frequency.csv, intersection.csv, report.json to " << config.output_dir.string() << '\n';
  return kExitOk;
}

int cmd_report(const RunConfig& config, std::ostream& out) {
  const auto path = config.output_dir / "report.json";
  if (!fs::exists(path)) throw Error("missing " + path.string() + "; run analyze first");
  const auto r = json::parse(read_file(path));
  const auto grid = grid_of(config);

  std::map<int, double> train_acc, test_acc;
  for (const auto& s : r.at("train").at("single_accuracies"))
    train_acc[s.at("turns").at(0).get<int>()] = s.at("accuracy").get<double>();
  if (!r.at("test").is_null())
    for (const auto& s : r.at("test").at("single_accuracies"))
      test_acc[s.at("turns").at(0).get<int>()] = s.at("accuracy").get<double>();

  std::string csv = "turn_id,temperature,summary_length,top_p,strategy,train_accuracy,test_accuracy\n";
  out << "turn  temp  length  top_p  strategy       train    test\n";
  for (const auto& c : grid) {
    if (!train_acc.count(c.turn_id)) continue;
    char line[160];
    const std::string test = test_acc.count(c.turn_id) ? fmt_acc(test_acc[c.turn_id]) : "-";
    std::snprintf(line, sizeof line, "%4d  %4.2f  %6d  %5.2f  %-13s  %s  %s\n", c.turn_id, c.temperature,
                  c.summary_length, c.top_p, to_string(strategy_of(c)).c_str(), fmt_acc(train_acc[c.turn_id]).c_str(),
                  test.c_str());
    out << line;
    std::ostringstream row;
    row << c.turn_id << ',' << json(c.temperature).dump() << ',' << c.summary_length << ',' << json(c.top_p).dump()
        << ',' << to_string(strategy_of(c)) << ',' << fmt_acc(train_acc[c.turn_id]) << ','
        << (test_acc.count(c.turn_id) ? fmt_acc(test_acc[c.turn_id]) : "") << '\n';
    csv += row.str();
  }
  write_file_atomic(config.output_dir / "turn_accuracy.csv", csv);

  auto turns_of = [](const json& s) { return join_turns(s.at("turns").get<std::vector<int>>()); };
  const auto& train = r.at("train");
  out << "\ntrain (" << train.at("items").get<std::size_t>() << " items)\n";
  out << "  best single run      turn " << turns_of(train.at("best_single")) << "  "
      << fmt_acc(train.at("best_single").at("accuracy").get<double>()) << '\n';
  out << "  majority vote, best  " << turns_of(train.at("best_combo")) << "  "
      << fmt_acc(train.at("best_combo").at("accuracy").get<double>()) << '\n';
  out << "  majority vote, worst " << turns_of(train.at("worst_combo")) << "  "
      << fmt_acc(train.at("worst_combo").at("accuracy").get<double>()) << '\n';
  out << "agreed turns: " << join_turns(r.at("agreed_turns").get<std::vector<int>>()) << '\n';
  out << "ensemble: " << join_turns(r.at("ensemble").at("turns").get<std::vector<int>>()) << " ("
      << r.at("ensemble").at("source").get<std::string>() << ")\n";
  if (!r.at("test").is_null()) {
    const auto& test = r.at("test");
    out << "test (" << test.at("items").get<std::size_t>() << " items)\n";
    out << "  best single run      turn " << turns_of(test.at("best_single")) << "  "
        << fmt_acc(test.at("best_single_test_accuracy").get<double>()) << '\n';
    out << "  majority vote        " << turns_of(test.at("ensemble")) << "  "
        << fmt_acc(test.at("ensemble_test_accuracy").get<double>()) << '\n';
  }
  return kExitOk;
}

}  // namespace consensus_dx
