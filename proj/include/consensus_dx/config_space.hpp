#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace consensus_dx {

enum class Strategy { Deterministic, Balanced, Exploratory };

std::string to_string(Strategy s);

/// One point of the decoding grid. turn_id is the 1-based row position.
struct TurnConfig {
  int turn_id = 0;
  double temperature = 0.0;
  double top_p = 1.0;
  int summary_length = 0;

  bool operator==(const TurnConfig&) const = default;
};

/// Value sets per axis. Expansion order: temperature outermost, summary
/// length in the middle, top-p innermost.
struct GridAxes {
  std::vector<double> temperatures{0.1, 0.5, 0.95};
  std::vector<int> summary_lengths{2000, 4000};
  std::vector<double> top_ps{0.1, 0.5, 0.9};
};

/// The 18-point default grid, turn ids 1..18.
std::vector<TurnConfig> full_grid();
std::vector<TurnConfig> expand_grid(const GridAxes& axes);

/// Reads {"temperature": [...], "summary_length": [...], "top_p": [...]};
/// missing axes keep their default values.
GridAxes load_grid_axes(const std::filesystem::path& path);
GridAxes parse_grid_axes(const std::string& json_text);

/// Deterministic at 0.1, Balanced at 0.5, Exploratory at 0.95. Temperatures
/// of custom grids fall to the class of the nearest of those anchors.
Strategy strategy_of(const TurnConfig& config);

const TurnConfig& find_turn(const std::vector<TurnConfig>& grid, int turn_id);
std::optional<int> turn_for(const std::vector<TurnConfig>& grid, double temperature, double top_p,
                            int summary_length);

/// Distinct summary lengths in ascending order.
std::vector<int> summary_lengths_of(const std::vector<TurnConfig>& grid);

/// Hex SHA-256 of the canonical JSON rendering of the grid.
std::string grid_hash(const std::vector<TurnConfig>& grid);

/// Unit the summary length is expressed in. Token budgets are converted to a
/// character budget at four characters per token.
enum class SummaryUnit { characters, tokens };

std::string to_string(SummaryUnit u);
SummaryUnit parse_summary_unit(const std::string& s);
int character_budget(int summary_length, SummaryUnit unit);

}  // namespace consensus_dx
