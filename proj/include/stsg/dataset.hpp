#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stsg/common.hpp"
#include "stsg/graph_wavelet.hpp"

namespace stsg {

/// Downwind line positions of the tunnel, in meters, indexed 1..6.
inline constexpr std::array<double, 6> kLinePositions{0.25, 0.5, 0.98, 1.18, 1.40, 1.45};
inline constexpr std::size_t kBoardsPerColumn = 9;
inline constexpr std::size_t kSensorsPerBoard = 8;
inline constexpr double kBoardSpacing = 0.13;

/// The ten gas labels, in canonical order.
const std::vector<std::string>& gas_vocabulary();
bool is_known_gas(const std::string& name);
double line_position(int position_index);  // 1-based
double board_coordinate(int board_index);  // 1-based, 0.13 * k

/// One board's time series for one trial.
struct Recording {
  Matrix samples;                  // T x S
  std::vector<double> timestamps;  // seconds, strictly increasing
  double sample_rate = 10.0;
  std::string gas;
  double ppm = 0.0;
  double heater_voltage = 0.0;
  double airflow_rpm = 0.0;
  int position_index = 1;
  int board_index = 1;
  int trial = 0;

  double x_pos() const { return line_position(position_index); }
  double x_board() const { return board_coordinate(board_index); }
  /// Identifies the trial cell, without the board.
  std::string cell_key() const;
  /// cell_key plus board.
  std::string key() const;

  friend bool operator==(const Recording& a, const Recording& b);
};

enum class IngestErrorKind { io, missing_key, bad_value, unknown_label, malformed_row, non_monotone_timestamps };

std::string to_string(IngestErrorKind kind);

class IngestError : public Error {
 public:
  IngestError(IngestErrorKind kind, std::string source, std::size_t line, const std::string& detail);

  IngestErrorKind kind() const { return kind_; }
  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  IngestErrorKind kind_;
  std::string source_;
  std::size_t line_;
};

/// File schema: `key: value` header lines (gas, ppm, heater_voltage,
/// airflow_rpm, position_index, board_index, trial, sample_rate), then
/// comma-separated rows of a timestamp followed by one reading per sensor.
/// Blank lines and lines starting with '#' are ignored.
Recording parse_recording(std::istream& in, const std::string& source = "<stream>");
Recording ingest(const std::filesystem::path& path);
void write_recording(std::ostream& out, const Recording& r);
void save_recording(const std::filesystem::path& path, const Recording& r);

/// Manifest: CSV with header `file,gas,ppm,heater_voltage,airflow_rpm,
/// position_index,board_index,trial`; paths relative to the manifest.
void write_manifest(const std::filesystem::path& manifest, const std::vector<Recording>& recordings,
                    const std::vector<std::string>& files);
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);
/// Writes every recording under `dir` plus `dir/manifest.csv`.
std::filesystem::path save_dataset(const std::filesystem::path& dir, const std::vector<Recording>& recordings);
std::vector<Recording> load_dataset(const std::filesystem::path& manifest, std::size_t threads = 1);

enum class Aggregation { board_column, single_board };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

/// 8 sensors on one board: a clique, sensors spaced 2 cm apart.
std::shared_ptr<const SensorGraph> board_graph();
/// 9 boards x 8 sensors: per-board cliques, sensor k of board b linked to
/// sensor k of board b+1. Vertex id = 8*(board-1) + sensor.
std::shared_ptr<const SensorGraph> column_graph();

/// A recording on a sensor graph, ready for feature extraction.
struct GraphRecording {
  std::string id;
  Matrix samples;  // T x N
  std::shared_ptr<const SensorGraph> graph;
  std::string gas;
  double ppm = 0.0;
  double heater_voltage = 0.0;
  double airflow_rpm = 0.0;
  int position_index = 1;
  int board_index = 0;  // 0 for a board column
  int trial = 0;

  double x_pos() const { return line_position(position_index); }
  double x_board() const { return board_coordinate(board_index); }
};

/// Aggregates the boards of one trial cell. board_column concatenates all
/// nine boards in board order (truncating to the shortest length, with a
/// warning); single_board yields one output per board.
std::vector<GraphRecording> aggregate(const std::vector<Recording>& trial, Aggregation mode,
                                      std::vector<std::string>* warnings = nullptr);

/// Groups by cell_key (sorted) and aggregates every group.
std::vector<GraphRecording> aggregate_dataset(const std::vector<Recording>& recordings, Aggregation mode,
                                              std::vector<std::string>* warnings = nullptr);

/// Desk-scale plume simulation. Each trial draws a train of puffs from the
/// source; a puff reaches line x after x/u seconds with temporal spread
/// sqrt(s0^2 + 2 D x / u^3) and lateral spread sqrt(y0^2 + 2 Dy x / u),
/// jittered in amplitude, timing and lateral offset. Sensor s of a board
/// reads gain(gas, s) times the local concentration passed through a
/// first-order response with time constant tau(gas, s), plus AR(1) noise.
struct SynthSpec {
  std::vector<std::string> gases{"acetone", "ethylene", "methane"};
  std::vector<int> positions{1, 2, 3, 4, 5, 6};
  std::vector<int> boards{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> concentrations{1000.0};
  int trials = 20;
  std::size_t length = 512;
  double sample_rate = 10.0;
  double heater_voltage = 5.0;
  double airflow_rpm = 3900.0;
  double noise = 0.05;          // stationary noise std relative to the nearest-line peak
  double noise_correlation = 0.7;
  double puff_rate = 8.0;       // puffs per second
  double source_lateral = -0.3;  // meters; the plume axis sits below the first board
  double longitudinal_diffusion = 0.03; // m^2/s, along the wind
  double lateral_diffusion = 0.05;   // m^2/s, across the wind
  double puff_duration = 0.3;        // s, temporal spread at the source
  double puff_width = 0.5;           // m, lateral spread at the source
  double amplitude_jitter = 0.2;     // log-normal sigma of puff amplitudes
  double meander = 0.1;              // m, lateral puff offset sigma
  double gain_spread = 0.03;    // log-normal spread of per-gas gains around the shared array pattern
  double tau_spread = 0.2;      // per-sensor time constants vary in tau_gas * [1 - spread, 1 + spread]
  std::map<std::string, std::vector<double>> gain_overrides;
  std::map<std::string, std::vector<double>> tau_overrides;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Per-gas sensor gains and time constants used by synth_generate.
struct GasResponse {
  std::array<double, kSensorsPerBoard> gain{};
  std::array<double, kSensorsPerBoard> tau{};
};
GasResponse synth_gas_response(const SynthSpec& spec, const std::string& gas);

/// Recordings ordered by (gas, concentration, position, trial, board).
std::vector<Recording> synth_generate(const SynthSpec& spec);

enum class Task { gas10, co_binary, localize };

std::string to_string(Task t);
Task parse_task(const std::string& name);

struct ScenarioSpec {
  Task task = Task::gas10;
  Aggregation aggregation = Aggregation::single_board;
  bool include_static = false;
  bool include_location = false;
};

struct Target {
  std::string label;  // classification
  Vector value;       // regression
};

/// gas10: gas name. co_binary: "low" (1000 ppm) or "high" (4000 ppm).
/// localize: x_pos for a board column, (x_pos, x_board) for a single board.
Target extract_target(const GraphRecording& r, const ScenarioSpec& spec);

/// Class names for a scenario, restricted to those present in `recordings`
/// and in canonical order.
std::vector<std::string> scenario_classes(const std::vector<GraphRecording>& recordings,
                                          const ScenarioSpec& spec);

/// Counts per gas x position x (ppm, heater, airflow) condition.
std::string dataset_summary(const std::vector<Recording>& recordings);

}  // namespace stsg
