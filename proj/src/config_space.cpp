#include "consensus_dx/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/hashing.hpp"
#include "consensus_dx/io.hpp"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Deterministic: return "Deterministic";
    case Strategy::Balanced: return "Balanced";
    case Strategy::Exploratory: return "Exploratory";
  }
  return "?";
}

std::vector<TurnConfig> expand_grid(const GridAxes& axes) {
  if (axes.temperatures.empty() || axes.summary_lengths.empty() || axes.top_ps.empty())
    throw ValidationError("grid axes must be non-empty");
  for (double t : axes.temperatures)
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("grid temperature outside [0, 1]");
  for (double p : axes.top_ps)
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("grid top_p outside (0, 1]");
  for (int l : axes.summary_lengths)
    if (l <= 0) throw ValidationError("grid summary_length must be positive");

  std::vector<TurnConfig> grid;
  int id = 1;
  for (double t : axes.temperatures)
    for (int l : axes.summary_lengths)
      for (double p : axes.top_ps) grid.push_back(TurnConfig{id++, t, p, l});

  std::set<std::tuple<double, double, int>> seen;
  for (const auto& c : grid)
    if (!seen.emplace(c.temperature, c.top_p, c.summary_length).second)
      throw ValidationError("grid axes contain duplicate values");
  return grid;
}

std::vector<TurnConfig> full_grid() { return expand_grid(GridAxes{}); }

GridAxes parse_grid_axes(const std::string& json_text) {
  GridAxes axes;
  try {
    const auto j = json::parse(json_text);
    if (!j.is_object()) throw ValidationError("grid override must be a JSON object");
    for (const auto& [key, _] : j.items())
      if (key != "temperature" && key != "summary_length" && key != "top_p")
        throw ValidationError("unknown grid axis '" + key + "' (expected temperature, summary_length, top_p)");
    if (j.contains("temperature")) axes.temperatures = j.at("temperature").get<std::vector<double>>();
    if (j.contains("summary_length")) axes.summary_lengths = j.at("summary_length").get<std::vector<int>>();
    if (j.contains("top_p")) axes.top_ps = j.at("top_p").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed grid override: ") + e.what());
  }
  expand_grid(axes);  // validates
  return axes;
}

GridAxes load_grid_axes(const std::filesystem::path& path) { return parse_grid_axes(read_file(path)); }

Strategy strategy_of(const TurnConfig& config) {
  constexpr std::pair<double, Strategy> anchors[] = {
      {0.1, Strategy::Deterministic}, {0.5, Strategy::Balanced}, {0.95, Strategy::Exploratory}};
  Strategy best = Strategy::Deterministic;
  double best_dist = 1e9;
  for (const auto& [t, s] : anchors) {
    const double d = std::abs(config.temperature - t);
    if (d < best_dist) {
      best_dist = d;
      best = s;
    }
  }
  return best;
}

const TurnConfig& find_turn(const std::vector<TurnConfig>& grid, int turn_id) {
  for (const auto& c : grid)
    if (c.turn_id == turn_id) return c;
  throw ValidationError("unknown turn id " + std::to_string(turn_id));
}

std::optional<int> turn_for(const std::vector<TurnConfig>& grid, double temperature, double top_p,
                            int summary_length) {
  for (const auto& c : grid)
    if (c.temperature == temperature && c.top_p == top_p && c.summary_length == summary_length)
      return c.turn_id;
  return std::nullopt;
}

std::vector<int> summary_lengths_of(const std::vector<TurnConfig>& grid) {
  std::set<int> s;
  for (const auto& c : grid) s.insert(c.summary_length);
  return {s.begin(), s.end()};
}

std::string grid_hash(const std::vector<TurnConfig>& grid) {
  json arr = json::array();
  for (const auto& c : grid)
    arr.push_back({{"turn_id", c.turn_id},
                   {"temperature", c.temperature},
                   {"top_p", c.top_p},
                   {"summary_length", c.summary_length}});
  return sha256_hex(arr.dump());
}

std::string to_string(SummaryUnit u) { return u == SummaryUnit::characters ? "characters" : "tokens"; }

SummaryUnit parse_summary_unit(const std::string& s) {
  if (s == "characters" || s == "chars") return SummaryUnit::characters;
  if (s == "tokens") return SummaryUnit::tokens;
  throw ValidationError("unknown summary unit '" + s + "'");
}

int character_budget(int summary_length, SummaryUnit unit) {
  return unit == SummaryUnit::characters ? summary_length : summary_length * 4;
}

}  // namespace consensus_dx
