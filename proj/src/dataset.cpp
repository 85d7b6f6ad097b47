#include "stsg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "stsg/parallel.hpp"
#include "stsg/rng.hpp"

namespace stsg {

namespace {

const char* const kHeaderKeys[] = {"gas",           "ppm",         "heater_voltage", "airflow_rpm",
                                   "position_index", "board_index", "trial",          "sample_rate"};

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

const std::vector<std::string>& gas_vocabulary() {
  static const std::vector<std::string> v{"acetone",  "acetaldehyde", "ammonia",         "butanol", "ethylene",
                                          "methane",  "methanol",     "carbon_monoxide", "benzene", "toluene"};
  return v;
}

bool is_known_gas(const std::string& name) {
  const auto& v = gas_vocabulary();
  return std::find(v.begin(), v.end(), name) != v.end();
}

double line_position(int position_index) {
  if (position_index < 1 || position_index > static_cast<int>(kLinePositions.size())) {
    throw InvalidArgument("position index " + std::to_string(position_index) + " outside 1..6");
  }
  return kLinePositions[static_cast<std::size_t>(position_index - 1)];
}

double board_coordinate(int board_index) {
  if (board_index < 1 || board_index > static_cast<int>(kBoardsPerColumn)) {
    throw InvalidArgument("board index " + std::to_string(board_index) + " outside 1..9");
  }
  return kBoardSpacing * board_index;
}

std::string Recording::cell_key() const {
  std::ostringstream k;
  k << gas << '_' << fmt(ppm) << "ppm_" << fmt(heater_voltage) << "V_" << fmt(airflow_rpm) << "rpm_L"
    << position_index << "_T" << trial;
  return k.str();
}

std::string Recording::key() const { return cell_key() + "_B" + std::to_string(board_index); }

bool operator==(const Recording& a, const Recording& b) {
  return a.samples.rows() == b.samples.rows() && a.samples.cols() == b.samples.cols() &&
         a.samples == b.samples && a.timestamps == b.timestamps && a.sample_rate == b.sample_rate &&
         a.gas == b.gas && a.ppm == b.ppm && a.heater_voltage == b.heater_voltage &&
         a.airflow_rpm == b.airflow_rpm && a.position_index == b.position_index &&
         a.board_index == b.board_index && a.trial == b.trial;
}

std::string to_string(IngestErrorKind kind) {
  switch (kind) {
    case IngestErrorKind::io: return "io";
    case IngestErrorKind::missing_key: return "missing_key";
    case IngestErrorKind::bad_value: return "bad_value";
    case IngestErrorKind::unknown_label: return "unknown_label";
    case IngestErrorKind::malformed_row: return "malformed_row";
    case IngestErrorKind::non_monotone_timestamps: return "non_monotone_timestamps";
  }
  return "unknown";
}

IngestError::IngestError(IngestErrorKind kind, std::string source, std::size_t line, const std::string& detail)
    : Error(source + ":" + std::to_string(line) + ": " + to_string(kind) + ": " + detail),
      kind_(kind),
      source_(std::move(source)),
      line_(line) {}

Recording parse_recording(std::istream& in, const std::string& source) {
  Recording r;
  std::map<std::string, std::pair<std::string, std::size_t>> header;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool in_body = false;
  auto fail = [&](IngestErrorKind k, std::size_t at, const std::string& msg) {
    throw IngestError(k, source, at, msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto colon = t.find(':');
    if (!in_body && colon != std::string::npos) {
      const std::string key = trim(t.substr(0, colon));
      if (std::find(std::begin(kHeaderKeys), std::end(kHeaderKeys), key) == std::end(kHeaderKeys)) {
        fail(IngestErrorKind::bad_value, lineno, "unknown header key '" + key + "'");
      }
      if (header.count(key)) fail(IngestErrorKind::bad_value, lineno, "duplicate header key '" + key + "'");
      header[key] = {trim(t.substr(colon + 1)), lineno};
      continue;
    }
    in_body = true;
    const auto fields = split(t, ',');
    if (fields.size() < 2) fail(IngestErrorKind::malformed_row, lineno, "expected timestamp and readings");
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      fail(IngestErrorKind::malformed_row, lineno,
           "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(width);
    for (std::size_t i = 0; i < width; ++i) {
      if (!parse_double(fields[i], row[i])) {
        fail(IngestErrorKind::malformed_row, lineno, "field " + std::to_string(i + 1) + " is not a finite number");
      }
    }
    if (!rows.empty() && !(row[0] > rows.back()[0])) {
      fail(IngestErrorKind::non_monotone_timestamps, lineno, "timestamp does not increase");
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) fail(IngestErrorKind::io, lineno, "read failure");

  auto get = [&](const char* key) -> const std::pair<std::string, std::size_t>& {
    auto it = header.find(key);
    if (it == header.end()) fail(IngestErrorKind::missing_key, lineno, std::string("missing header key '") + key + "'");
    return it->second;
  };
  auto number = [&](const char* key) {
    const auto& [text, at] = get(key);
    double v = 0.0;
    if (!parse_double(text, v)) fail(IngestErrorKind::bad_value, at, std::string(key) + " is not a number");
    return v;
  };
  auto integer = [&](const char* key, int lo, int hi) {
    const auto& [text, at] = get(key);
    double v = number(key);
    if (v != std::floor(v) || v < lo || v > hi) {
      fail(IngestErrorKind::bad_value, at, std::string(key) + " must be an integer in " + std::to_string(lo) + ".." +
                                               std::to_string(hi));
    }
    return static_cast<int>(v);
  };
  {
    const auto& [gas, at] = get("gas");
    if (!is_known_gas(gas)) fail(IngestErrorKind::unknown_label, at, "unknown gas '" + gas + "'");
    r.gas = gas;
  }
  r.ppm = number("ppm");
  r.heater_voltage = number("heater_voltage");
  r.airflow_rpm = number("airflow_rpm");
  r.position_index = integer("position_index", 1, static_cast<int>(kLinePositions.size()));
  r.board_index = integer("board_index", 1, static_cast<int>(kBoardsPerColumn));
  r.trial = integer("trial", 0, 1 << 30);
  r.sample_rate = number("sample_rate");
  if (r.sample_rate <= 0) fail(IngestErrorKind::bad_value, get("sample_rate").second, "sample_rate must be positive");
  if (rows.empty()) fail(IngestErrorKind::malformed_row, lineno, "no data rows");

  r.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  r.timestamps.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    r.timestamps[i] = rows[i][0];
    for (std::size_t j = 1; j < width; ++j) {
      r.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = rows[i][j];
    }
  }
  return r;
}

Recording ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(IngestErrorKind::io, path.string(), 0, "cannot open file");
  return parse_recording(in, path.string());
}

void write_recording(std::ostream& out, const Recording& r) {
  out << "gas: " << r.gas << '\n'
      << "ppm: " << fmt(r.ppm) << '\n'
      << "heater_voltage: " << fmt(r.heater_voltage) << '\n'
      << "airflow_rpm: " << fmt(r.airflow_rpm) << '\n'
      << "position_index: " << r.position_index << '\n'
      << "board_index: " << r.board_index << '\n'
      << "trial: " << r.trial << '\n'
      << "sample_rate: " << fmt(r.sample_rate) << '\n';
  std::string row;
  for (Eigen::Index i = 0; i < r.samples.rows(); ++i) {
    row = fmt(r.timestamps[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < r.samples.cols(); ++j) {
      row += ',';
      row += fmt(r.samples(i, j));
    }
    row += '\n';
    out << row;
  }
}

void save_recording(const std::filesystem::path& path, const Recording& r) {
  std::ofstream out(path);
  if (!out) throw IngestError(IngestErrorKind::io, path.string(), 0, "cannot create file");
  write_recording(out, r);
  if (!out) throw IngestError(IngestErrorKind::io, path.string(), 0, "write failure");
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<Recording>& recordings,
                    const std::vector<std::string>& files) {
  if (files.size() != recordings.size()) throw DimensionError("manifest: file count != recording count");
  std::ofstream out(manifest);
  if (!out) throw IngestError(IngestErrorKind::io, manifest.string(), 0, "cannot create manifest");
  out << "file,gas,ppm,heater_voltage,airflow_rpm,position_index,board_index,trial\n";
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& r = recordings[i];
    out << files[i] << ',' << r.gas << ',' << fmt(r.ppm) << ',' << fmt(r.heater_voltage) << ','
        << fmt(r.airflow_rpm) << ',' << r.position_index << ',' << r.board_index << ',' << r.trial << '\n';
  }
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IngestError(IngestErrorKind::io, manifest.string(), 0, "cannot open manifest");
  std::vector<std::filesystem::path> out;
  std::string line;
  std::size_t lineno = 0;
  const auto base = manifest.parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split(t, ',');
    if (lineno == 1 && fields.front() == "file") continue;
    if (fields.size() != 8) {
      throw IngestError(IngestErrorKind::malformed_row, manifest.string(), lineno, "expected 8 manifest fields");
    }
    std::filesystem::path p(fields.front());
    out.push_back(p.is_absolute() ? p : base / p);
  }
  return out;
}

std::filesystem::path save_dataset(const std::filesystem::path& dir, const std::vector<Recording>& recordings) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (const auto& r : recordings) {
    files.push_back(r.key() + ".csv");
    save_recording(dir / files.back(), r);
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, recordings, files);
  return manifest;
}

std::vector<Recording> load_dataset(const std::filesystem::path& manifest, std::size_t threads) {
  const auto files = read_manifest(manifest);
  std::vector<Recording> out(files.size());
  parallel_for(files.size(), threads, [&](std::size_t i) { out[i] = ingest(files[i]); });
  return out;
}

std::string to_string(Aggregation a) { return a == Aggregation::board_column ? "board_column" : "single_board"; }

Aggregation parse_aggregation(const std::string& name) {
  if (name == "board_column") return Aggregation::board_column;
  if (name == "single_board") return Aggregation::single_board;
  throw InvalidArgument("unknown aggregation '" + name + "'");
}

namespace {

constexpr double kSensorSpacing = 0.02;

std::vector<SensorGraph::Edge> clique_edges(std::size_t offset) {
  std::vector<SensorGraph::Edge> e;
  for (std::size_t a = 0; a < kSensorsPerBoard; ++a) {
    for (std::size_t b = a + 1; b < kSensorsPerBoard; ++b) e.emplace_back(offset + a, offset + b);
  }
  return e;
}

}  // namespace

std::shared_ptr<const SensorGraph> board_graph() {
  static const auto g = [] {
    std::vector<Point2> pos(kSensorsPerBoard);
    for (std::size_t s = 0; s < kSensorsPerBoard; ++s) pos[s] = {0.0, kSensorSpacing * static_cast<double>(s)};
    return std::make_shared<const SensorGraph>(std::move(pos), clique_edges(0));
  }();
  return g;
}

std::shared_ptr<const SensorGraph> column_graph() {
  static const auto g = [] {
    std::vector<Point2> pos;
    std::vector<SensorGraph::Edge> edges;
    for (std::size_t b = 0; b < kBoardsPerColumn; ++b) {
      for (std::size_t s = 0; s < kSensorsPerBoard; ++s) {
        pos.push_back({kBoardSpacing * static_cast<double>(b + 1), kSensorSpacing * static_cast<double>(s)});
      }
      const auto clique = clique_edges(b * kSensorsPerBoard);
      edges.insert(edges.end(), clique.begin(), clique.end());
      if (b + 1 < kBoardsPerColumn) {
        for (std::size_t s = 0; s < kSensorsPerBoard; ++s) {
          edges.emplace_back(b * kSensorsPerBoard + s, (b + 1) * kSensorsPerBoard + s);
        }
      }
    }
    return std::make_shared<const SensorGraph>(std::move(pos), std::move(edges));
  }();
  return g;
}

namespace {

GraphRecording graph_recording_from(const Recording& r) {
  GraphRecording g;
  g.gas = r.gas;
  g.ppm = r.ppm;
  g.heater_voltage = r.heater_voltage;
  g.airflow_rpm = r.airflow_rpm;
  g.position_index = r.position_index;
  g.board_index = r.board_index;
  g.trial = r.trial;
  return g;
}

void check_board_width(const Recording& r) {
  if (static_cast<std::size_t>(r.samples.cols()) != kSensorsPerBoard) {
    throw DimensionError("recording " + r.key() + " has " + std::to_string(r.samples.cols()) + " sensors, expected " +
                         std::to_string(kSensorsPerBoard));
  }
}

}  // namespace

std::vector<GraphRecording> aggregate(const std::vector<Recording>& trial, Aggregation mode,
                                      std::vector<std::string>* warnings) {
  if (trial.empty()) throw InvalidArgument("aggregate: no recordings");
  const std::string cell = trial.front().cell_key();
  for (const auto& r : trial) {
    if (r.cell_key() != cell) throw InvalidArgument("aggregate: recordings from different trials: " + r.cell_key());
    check_board_width(r);
  }
  std::vector<const Recording*> order;
  for (const auto& r : trial) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const Recording* a, const Recording* b) { return a->board_index < b->board_index; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->board_index == order[i - 1]->board_index) {
      throw InvalidArgument("aggregate: board " + std::to_string(order[i]->board_index) + " repeated in " + cell);
    }
  }

  std::vector<GraphRecording> out;
  if (mode == Aggregation::single_board) {
    for (const Recording* r : order) {
      GraphRecording g = graph_recording_from(*r);
      g.id = r->key();
      g.samples = r->samples;
      g.graph = board_graph();
      out.push_back(std::move(g));
    }
    return out;
  }

  for (int b = 1; b <= static_cast<int>(kBoardsPerColumn); ++b) {
    const bool present = std::any_of(order.begin(), order.end(), [b](const Recording* r) { return r->board_index == b; });
    if (!present) throw InvalidArgument("aggregate: board " + std::to_string(b) + " missing from " + cell);
  }
  Eigen::Index T = order.front()->samples.rows();
  Eigen::Index longest = T;
  for (const Recording* r : order) {
    T = std::min(T, r->samples.rows());
    longest = std::max(longest, r->samples.rows());
  }
  if (T != longest && warnings) {
    warnings->push_back(cell + ": board lengths differ (" + std::to_string(T) + ".." + std::to_string(longest) +
                        "), truncated to " + std::to_string(T));
  }
  GraphRecording g = graph_recording_from(*order.front());
  g.board_index = 0;
  g.id = cell;
  g.graph = column_graph();
  g.samples.resize(T, static_cast<Eigen::Index>(kBoardsPerColumn * kSensorsPerBoard));
  for (std::size_t b = 0; b < order.size(); ++b) {
    g.samples.middleCols(static_cast<Eigen::Index>(b * kSensorsPerBoard), static_cast<Eigen::Index>(kSensorsPerBoard)) =
        order[b]->samples.topRows(T);
  }
  out.push_back(std::move(g));
  return out;
}

std::vector<GraphRecording> aggregate_dataset(const std::vector<Recording>& recordings, Aggregation mode,
                                              std::vector<std::string>* warnings) {
  std::map<std::string, std::vector<Recording>> groups;
  for (const auto& r : recordings) groups[r.cell_key()].push_back(r);
  std::vector<GraphRecording> out;
  for (auto& [key, trial] : groups) {
    auto part = aggregate(trial, mode, warnings);
    for (auto& g : part) out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

// Characteristic sensor response times (s), one per vocabulary entry.
constexpr std::array<double, 10> kGasTau{0.25, 0.3, 0.45, 0.7, 0.38, 0.56, 0.28, 0.5, 0.65, 0.75};

double wind_speed(double rpm) { return 0.05 + 5e-5 * rpm; }

std::size_t vocabulary_index(const std::string& gas) {
  const auto& v = gas_vocabulary();
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), gas) - v.begin());
}

}  // namespace

void SynthSpec::validate() const {
  if (gases.empty() || positions.empty() || boards.empty() || concentrations.empty() || trials < 1) {
    throw InvalidArgument("synth: empty specification");
  }
  if (gases.size() > gas_vocabulary().size()) throw InvalidArgument("synth: more than ten gases");
  std::set<std::string> seen;
  for (const auto& g : gases) {
    if (!is_known_gas(g)) throw InvalidArgument("synth: unknown gas '" + g + "'");
    if (!seen.insert(g).second) throw InvalidArgument("synth: gas '" + g + "' listed twice");
  }
  for (int p : positions) line_position(p);
  for (int b : boards) board_coordinate(b);
  for (double c : concentrations) {
    if (!(c > 0)) throw InvalidArgument("synth: concentrations must be positive");
  }
  if (length < 4) throw InvalidArgument("synth: length must be >= 4");
  if (!(sample_rate > 0) || !(noise >= 0) || !(puff_rate > 0) || !(airflow_rpm > 0)) {
    throw InvalidArgument("synth: rates, airflow and noise must be positive");
  }
  if (!(longitudinal_diffusion >= 0) || !(lateral_diffusion >= 0) || !(puff_duration > 0) || !(puff_width > 0) ||
      !(amplitude_jitter >= 0) || !(meander >= 0)) {
    throw InvalidArgument("synth: plume parameters out of range");
  }
  if (!(gain_spread >= 0) || !(tau_spread >= 0 && tau_spread < 1)) throw InvalidArgument("synth: spreads out of range");
  if (!(noise_correlation >= 0 && noise_correlation < 1)) throw InvalidArgument("synth: noise correlation outside [0, 1)");
  for (const auto& [g, v] : gain_overrides) {
    if (v.size() != kSensorsPerBoard) throw DimensionError("synth: gain override for '" + g + "' needs 8 values");
  }
  for (const auto& [g, v] : tau_overrides) {
    if (v.size() != kSensorsPerBoard) throw DimensionError("synth: tau override for '" + g + "' needs 8 values");
    for (double t : v) {
      if (!(t > 0)) throw InvalidArgument("synth: time constants must be positive");
    }
  }
}

GasResponse synth_gas_response(const SynthSpec& spec, const std::string& gas) {
  if (!is_known_gas(gas)) throw InvalidArgument("synth: unknown gas '" + gas + "'");
  GasResponse resp;
  // A sensor-array pattern shared by all gases, modulated per gas.
  Rng shared(derive_seed(spec.seed ^ fnv1a64("sensor-array"), 0));
  std::array<double, kSensorsPerBoard> base{};
  for (auto& b : base) b = shared.uniform(0.6, 1.4);
  const std::size_t gi = vocabulary_index(gas);
  Rng rng(derive_seed(spec.seed ^ fnv1a64("gas-response"), gi));
  for (std::size_t s = 0; s < kSensorsPerBoard; ++s) {
    resp.gain[s] = base[s] * std::exp(spec.gain_spread * rng.normal());
    resp.tau[s] = kGasTau[gi] * rng.uniform(1.0 - spec.tau_spread, 1.0 + spec.tau_spread);
  }
  if (auto it = spec.gain_overrides.find(gas); it != spec.gain_overrides.end()) {
    std::copy(it->second.begin(), it->second.end(), resp.gain.begin());
  }
  if (auto it = spec.tau_overrides.find(gas); it != spec.tau_overrides.end()) {
    std::copy(it->second.begin(), it->second.end(), resp.tau.begin());
  }
  return resp;
}

std::vector<Recording> synth_generate(const SynthSpec& spec) {
  spec.validate();
  const double fs = spec.sample_rate;
  const double dt = 1.0 / fs;
  const double u = wind_speed(spec.airflow_rpm);
  auto sigma_t = [&](double x) {
    return std::sqrt(spec.puff_duration * spec.puff_duration + 2.0 * spec.longitudinal_diffusion * x / (u * u * u));
  };
  auto sigma_y = [&](double x) { return std::sqrt(spec.puff_width * spec.puff_width + 2.0 * spec.lateral_diffusion * x / u); };
  const double ref = sigma_t(kLinePositions.front()) * sigma_y(kLinePositions.front());

  std::map<std::string, GasResponse> responses;
  double max_tau = 0.0;
  for (const auto& g : spec.gases) {
    responses[g] = synth_gas_response(spec, g);
    for (double t : responses[g].tau) max_tau = std::max(max_tau, t);
  }
  const auto burn = static_cast<std::size_t>(std::ceil(8.0 * max_tau * fs)) + 1;
  const std::size_t total = burn + spec.length;
  const double t_end = static_cast<double>(spec.length) * dt;

  struct Cell {
    std::string gas;
    double ppm;
    int position;
    int trial;
  };
  std::vector<Cell> cells;
  for (const auto& g : spec.gases) {
    for (double c : spec.concentrations) {
      for (int p : spec.positions) {
        for (int t = 0; t < spec.trials; ++t) cells.push_back({g, c, p, t});
      }
    }
  }

  std::vector<std::vector<Recording>> per_cell(cells.size());
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    Recording proto;
    proto.gas = cell.gas;
    proto.ppm = cell.ppm;
    proto.heater_voltage = spec.heater_voltage;
    proto.airflow_rpm = spec.airflow_rpm;
    proto.position_index = cell.position;
    proto.trial = cell.trial;
    proto.sample_rate = fs;
    const std::uint64_t trial_seed = derive_seed(spec.seed, fnv1a64(proto.cell_key()));
    Rng rng(trial_seed);

    const double x = line_position(cell.position);
    const double st = sigma_t(x);
    const double sy = sigma_y(x);
    const double scale = cell.ppm / 1000.0 * ref / (st * sy);
    struct Puff {
      double arrival, amplitude, lateral, width;
    };
    std::vector<Puff> puffs;
    const double t0 = -static_cast<double>(burn) * dt - 6.0 * st;
    const double t1 = t_end + 6.0 * st;
    const double travel = x / u;
    for (double te = t0 - travel + rng.uniform() / spec.puff_rate; te < t1 - travel;) {
      Puff p;
      p.arrival = te + travel + 0.15 * travel * rng.normal();
      p.amplitude = std::exp(spec.amplitude_jitter * rng.normal() - 0.5 * spec.amplitude_jitter * spec.amplitude_jitter);
      p.lateral = spec.meander * rng.normal();
      p.width = st * std::exp(0.2 * rng.normal());
      puffs.push_back(p);
      te += -std::log(1.0 - rng.uniform()) / spec.puff_rate;
    }

    const GasResponse& resp = responses.at(cell.gas);
    std::vector<double> conc(total);
    for (int b : spec.boards) {
      Recording r = proto;
      r.board_index = b;
      const double y = board_coordinate(b) - spec.source_lateral;
      for (std::size_t n = 0; n < total; ++n) {
        const double t = (static_cast<double>(n) - static_cast<double>(burn)) * dt;
        double c = 0.0;
        for (const auto& p : puffs) {
          const double d = t - p.arrival;
          if (std::abs(d) > 6.0 * p.width) continue;
          const double ly = y - p.lateral;
          c += p.amplitude * std::exp(-0.5 * (d * d) / (p.width * p.width) - 0.5 * (ly * ly) / (sy * sy));
        }
        conc[n] = scale * c;
      }
      Rng noise_rng(derive_seed(trial_seed, static_cast<std::uint64_t>(b)));
      r.samples.resize(static_cast<Eigen::Index>(spec.length), static_cast<Eigen::Index>(kSensorsPerBoard));
      const double rho = spec.noise_correlation;
      const double innovation = spec.noise * std::sqrt(1.0 - rho * rho);
      for (std::size_t s = 0; s < kSensorsPerBoard; ++s) {
        const double a = std::exp(-dt / resp.tau[s]);
        double state = 0.0;
        double colored = spec.noise * noise_rng.normal();
        for (std::size_t n = 0; n < total; ++n) {
          state = a * state + (1.0 - a) * resp.gain[s] * conc[n];
          colored = rho * colored + innovation * noise_rng.normal();
          if (n >= burn) {
            r.samples(static_cast<Eigen::Index>(n - burn), static_cast<Eigen::Index>(s)) = state + colored;
          }
        }
      }
      r.timestamps.resize(spec.length);
      for (std::size_t n = 0; n < spec.length; ++n) r.timestamps[n] = static_cast<double>(n) * dt;
      per_cell[ci].push_back(std::move(r));
    }
  }

  std::vector<Recording> out;
  for (auto& v : per_cell) {
    for (auto& r : v) out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios

std::string to_string(Task t) {
  switch (t) {
    case Task::gas10: return "gas10";
    case Task::co_binary: return "co_binary";
    case Task::localize: return "localize";
  }
  return "gas10";
}

Task parse_task(const std::string& name) {
  if (name == "gas10") return Task::gas10;
  if (name == "co_binary") return Task::co_binary;
  if (name == "localize") return Task::localize;
  throw InvalidArgument("unknown task '" + name + "'");
}

Target extract_target(const GraphRecording& r, const ScenarioSpec& spec) {
  Target t;
  switch (spec.task) {
    case Task::gas10:
      t.label = r.gas;
      break;
    case Task::co_binary:
      if (r.gas != "carbon_monoxide") throw InvalidArgument("co_binary: " + r.id + " is not a carbon monoxide recording");
      if (r.ppm == 1000.0) {
        t.label = "low";
      } else if (r.ppm == 4000.0) {
        t.label = "high";
      } else {
        throw InvalidArgument("co_binary: " + r.id + " has " + fmt(r.ppm) + " ppm, expected 1000 or 4000");
      }
      break;
    case Task::localize:
      if (spec.aggregation == Aggregation::board_column || r.board_index == 0) {
        t.value = Vector::Constant(1, r.x_pos());
      } else {
        t.value = Vector(2);
        t.value << r.x_pos(), r.x_board();
      }
      break;
  }
  return t;
}

std::vector<std::string> scenario_classes(const std::vector<GraphRecording>& recordings, const ScenarioSpec& spec) {
  if (spec.task == Task::co_binary) return {"low", "high"};
  if (spec.task == Task::localize) return {};
  std::set<std::string> present;
  for (const auto& r : recordings) present.insert(r.gas);
  std::vector<std::string> out;
  for (const auto& g : gas_vocabulary()) {
    if (present.count(g)) out.push_back(g);
  }
  return out;
}

std::string dataset_summary(const std::vector<Recording>& recordings) {
  using CellKey = std::tuple<std::size_t, int, double, double, double>;
  std::map<CellKey, std::size_t> counts;
  std::set<std::string> trials;
  for (const auto& r : recordings) {
    ++counts[{vocabulary_index(r.gas), r.position_index, r.ppm, r.heater_voltage, r.airflow_rpm}];
    trials.insert(r.cell_key());
  }
  std::ostringstream out;
  out << "recordings " << recordings.size() << " trials " << trials.size() << '\n';
  out << "gas,position,x_pos,ppm,heater_voltage,airflow_rpm,recordings\n";
  for (const auto& [k, n] : counts) {
    const auto& [g, p, ppm, hv, rpm] = k;
    out << gas_vocabulary()[g] << ',' << p << ',' << fmt(line_position(p)) << ',' << fmt(ppm) << ',' << fmt(hv) << ','
        << fmt(rpm) << ',' << n << '\n';
  }
  return out.str();
}

}  // namespace stsg
