#include <filesystem>
#include <set>
#include <sstream>

#include "doctest.h"

#include "stsg/baselines.hpp"
#include "stsg/dataset.hpp"

using namespace stsg;

namespace {

const char* kFixture =
    "# three rows, eight sensors\n"
    "gas: methane\n"
    "ppm: 1000\n"
    "heater_voltage: 5\n"
    "airflow_rpm: 3900\n"
    "position_index: 3\n"
    "board_index: 2\n"
    "trial: 4\n"
    "sample_rate: 10\n"
    "0,1,2,3,4,5,6,7,8\n"
    "0.1,1.5,2.5,3.5,4.5,5.5,6.5,7.5,8.5\n"
    "0.2,-1,-2,-3,-4,-5,-6,-7,-8e-3\n";

IngestErrorKind kind_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_recording(in, "fixture");
  } catch (const IngestError& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return IngestErrorKind::io;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  return s.replace(s.find(from), from.size(), to);
}

SynthSpec small_spec() {
  SynthSpec s;
  s.gases = {"acetone", "methane"};
  s.positions = {1, 4};
  s.trials = 2;
  s.length = 128;
  s.seed = 5;
  return s;
}

}  // namespace

TEST_CASE("parse a fixture") {
  std::istringstream in(kFixture);
  const auto r = parse_recording(in, "fixture");
  CHECK(r.samples.rows() == 3);
  CHECK(r.samples.cols() == 8);
  CHECK(r.gas == "methane");
  CHECK(r.ppm == 1000);
  CHECK(r.x_pos() == 0.98);
  CHECK(r.x_board() == doctest::Approx(0.26));
  CHECK(r.trial == 4);
  CHECK(r.samples(2, 7) == -8e-3);
  CHECK(r.cell_key() == "methane_1000ppm_5V_3900rpm_L3_T4");
  CHECK(r.key() == "methane_1000ppm_5V_3900rpm_L3_T4_B2");

  std::ostringstream out;
  write_recording(out, r);
  std::istringstream back(out.str());
  CHECK(parse_recording(back) == r);
}

TEST_CASE("ingest error kinds") {
  const std::string f = kFixture;
  CHECK(kind_of(replace(f, "methane", "xenon")) == IngestErrorKind::unknown_label);
  CHECK(kind_of(replace(f, "trial: 4\n", "")) == IngestErrorKind::missing_key);
  CHECK(kind_of(replace(f, "ppm: 1000", "ppm: lots")) == IngestErrorKind::bad_value);
  CHECK(kind_of(replace(f, "position_index: 3", "position_index: 7")) == IngestErrorKind::bad_value);
  CHECK(kind_of(replace(f, "ppm: 1000", "color: red")) == IngestErrorKind::bad_value);
  CHECK(kind_of(replace(f, "0.1,1.5", "0.1,abc")) == IngestErrorKind::malformed_row);
  CHECK(kind_of(replace(f, ",8.5\n", "\n")) == IngestErrorKind::malformed_row);
  CHECK(kind_of(replace(f, "0.2,-1", "0.05,-1")) == IngestErrorKind::non_monotone_timestamps);

  std::istringstream in(replace(f, "0.2,-1", "0.1,-1"));
  try {
    parse_recording(in, "trial.csv");
    FAIL("expected an error");
  } catch (const IngestError& e) {
    CHECK(e.line() == 12);
    CHECK(std::string(e.what()).find("trial.csv:12") == 0);
  }
  CHECK_THROWS_AS(ingest("/nonexistent/recording.csv"), IngestError);
}

TEST_CASE("synthetic datasets") {
  const auto spec = small_spec();
  const auto a = synth_generate(spec);
  CHECK(a.size() == 2 * 2 * 2 * 9);
  const auto b = synth_generate(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  auto other = spec;
  other.seed = 6;
  CHECK_FALSE(synth_generate(other)[0] == a[0]);

  std::set<double> positions;
  for (const auto& r : a) {
    positions.insert(r.x_pos());
    CHECK(r.samples.rows() == 128);
    CHECK(r.samples.cols() == 8);
    CHECK(r.samples.allFinite());
  }
  CHECK(positions == std::set<double>{0.25, 1.18});

  auto six = spec;
  six.positions = {1, 2, 3, 4, 5, 6};
  six.trials = 1;
  six.gases = {"ethylene"};
  std::set<double> all;
  for (const auto& r : synth_generate(six)) all.insert(r.x_pos());
  CHECK(all == std::set<double>{0.25, 0.5, 0.98, 1.18, 1.40, 1.45});

  auto empty = spec;
  empty.gases.clear();
  CHECK_THROWS_AS(synth_generate(empty), InvalidArgument);
}

TEST_CASE("orthogonal gains separate moment features") {
  auto spec = small_spec();
  spec.noise = 0.0;
  spec.trials = 6;
  spec.gain_overrides["acetone"] = {1, 1, 1, 1, 0, 0, 0, 0};
  spec.gain_overrides["methane"] = {0, 0, 0, 0, 1, 1, 1, 1};
  const auto recs = synth_generate(spec);
  std::vector<Vector> feats;
  std::vector<int> labels;
  for (const auto& r : recs) {
    feats.push_back(moment_features(r.samples).values);
    labels.push_back(r.gas == "acetone" ? 0 : 1);
  }
  Vector centroid[2] = {Vector::Zero(16), Vector::Zero(16)};
  double count[2] = {0, 0};
  for (std::size_t i = 0; i < feats.size(); ++i) centroid[labels[i]] += feats[i], count[labels[i]] += 1;
  for (int c = 0; c < 2; ++c) centroid[c] /= count[c];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const int guess = (feats[i] - centroid[0]).norm() <= (feats[i] - centroid[1]).norm() ? 0 : 1;
    correct += guess == labels[i];
  }
  CHECK(correct == feats.size());
}

TEST_CASE("aggregation") {
  const auto recs = synth_generate(small_spec());
  std::vector<Recording> trial(recs.begin(), recs.begin() + 9);
  const auto column = aggregate(trial, Aggregation::board_column);
  REQUIRE(column.size() == 1);
  CHECK(column[0].samples.cols() == 72);
  CHECK(column[0].graph->size() == 72);
  for (int b = 0; b < 9; ++b) CHECK(column[0].samples.middleCols(8 * b, 8) == trial[static_cast<std::size_t>(b)].samples);

  const auto single = aggregate(trial, Aggregation::single_board);
  CHECK(single.size() == 9);
  CHECK(single[3].samples.cols() == 8);
  CHECK(single[3].board_index == 4);

  auto ragged = trial;
  ragged[2].samples.conservativeResize(126, 8);
  ragged[2].timestamps.resize(126);
  std::vector<std::string> warnings;
  const auto cut = aggregate(ragged, Aggregation::board_column, &warnings);
  CHECK(cut[0].samples.rows() == 126);
  CHECK(warnings.size() == 1);

  auto missing = trial;
  missing.pop_back();
  CHECK_THROWS_AS(aggregate(missing, Aggregation::board_column), InvalidArgument);
  CHECK(aggregate(missing, Aggregation::single_board).size() == 8);
  auto mixed = trial;
  mixed[0].trial = 99;
  CHECK_THROWS_AS(aggregate(mixed, Aggregation::board_column), InvalidArgument);

  CHECK(aggregate_dataset(recs, Aggregation::board_column).size() == 8);
  CHECK(aggregate_dataset(recs, Aggregation::single_board).size() == recs.size());
}

TEST_CASE("targets") {
  GraphRecording co;
  co.gas = "carbon_monoxide";
  co.ppm = 4000;
  co.position_index = 3;
  co.board_index = 0;
  ScenarioSpec s{Task::co_binary, Aggregation::board_column, false, false};
  CHECK(extract_target(co, s).label == "high");
  co.ppm = 1000;
  CHECK(extract_target(co, s).label == "low");
  co.ppm = 2000;
  CHECK_THROWS_AS(extract_target(co, s), InvalidArgument);

  s.task = Task::localize;
  const auto loc = extract_target(co, s);
  REQUIRE(loc.value.size() == 1);
  CHECK(loc.value(0) == 0.98);
  s.aggregation = Aggregation::single_board;
  co.board_index = 5;
  const auto loc2 = extract_target(co, s);
  REQUIRE(loc2.value.size() == 2);
  CHECK(loc2.value(1) == doctest::Approx(0.65));

  GraphRecording me;
  me.gas = "methane";
  s.task = Task::gas10;
  CHECK(extract_target(me, s).label == "methane");
  s.task = Task::co_binary;
  CHECK_THROWS_AS(extract_target(me, s), InvalidArgument);
}

TEST_CASE("dataset files") {
  const auto dir = std::filesystem::temp_directory_path() / "stsg_dataset_test";
  std::filesystem::remove_all(dir);
  auto spec = small_spec();
  spec.trials = 1;
  const auto recs = synth_generate(spec);
  const auto manifest = save_dataset(dir, recs);
  const auto back = load_dataset(manifest, 2);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(back[i] == recs[i]);
  const auto summary = dataset_summary(recs);
  CHECK(summary.find("acetone") != std::string::npos);
  std::filesystem::remove_all(dir);
}
