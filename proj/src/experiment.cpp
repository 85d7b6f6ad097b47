#include "stsg/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "stsg/parallel.hpp"

namespace stsg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& source, const std::string& msg) : InvalidArgument(source + ": " + msg) {}
};

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where,
                    const std::string& source) {
  if (!obj.is_object()) throw ConfigError(source, where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* s) { return k == s; })) {
      throw ConfigError(source, "unknown key '" + k + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::stsg: return "stsg";
    case FeatureKind::stft: return "stft";
    case FeatureKind::moments: return "moments";
  }
  return "stsg";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "stsg") return FeatureKind::stsg;
  if (name == "stft") return FeatureKind::stft;
  if (name == "moments") return FeatureKind::moments;
  throw InvalidArgument("unknown feature kind '" + name + "' (expected stsg, stft or moments)");
}

std::string display_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::stsg: return "STSG";
    case FeatureKind::stft: return "STFT";
    case FeatureKind::moments: return "Statistical moments";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source, e.what());
  }
  ExperimentConfig c;
  try {
    reject_unknown(doc, {"seed", "scenario", "features", "stsg", "stft", "forest", "folds", "holdout_folds", "synth", "threads"},
                   "configuration", source);
    if (!doc.contains("seed")) throw ConfigError(source, "missing required key 'seed'");
    c.seed = doc.at("seed").get<std::uint64_t>();
    read_opt(doc, "folds", c.folds);
    read_opt(doc, "holdout_folds", c.holdout_folds);
    read_opt(doc, "threads", c.threads);
    if (doc.contains("scenario")) {
      const auto& s = doc.at("scenario");
      reject_unknown(s, {"task", "aggregation", "include_static", "include_location"}, "scenario", source);
      if (s.contains("task")) c.scenario.task = parse_task(s.at("task"));
      if (s.contains("aggregation")) c.scenario.aggregation = parse_aggregation(s.at("aggregation"));
      read_opt(s, "include_static", c.scenario.include_static);
      read_opt(s, "include_location", c.scenario.include_location);
    }
    if (doc.contains("features")) {
      c.features.clear();
      for (const auto& f : doc.at("features")) c.features.push_back(parse_feature_kind(f.get<std::string>()));
    }
    if (doc.contains("stsg")) {
      const auto& s = doc.at("stsg");
      reject_unknown(s, {"J", "q1", "q2", "max_order", "rule", "haar_levels", "overlap"}, "stsg", source);
      read_opt(s, "J", c.stsg.max_log_scale);
      read_opt(s, "q1", c.stsg.q1);
      read_opt(s, "q2", c.stsg.q2);
      read_opt(s, "max_order", c.stsg.max_order);
      read_opt(s, "haar_levels", c.stsg.haar_levels);
      if (s.contains("rule")) c.stsg.rule = parse_second_order_rule(s.at("rule"));
      if (s.contains("overlap")) c.stsg.overlap = parse_overlap_policy(s.at("overlap"));
    }
    if (doc.contains("stft")) {
      const auto& s = doc.at("stft");
      reject_unknown(s, {"window", "hop"}, "stft", source);
      read_opt(s, "window", c.stft.window);
      read_opt(s, "hop", c.stft.hop);
    }
    if (doc.contains("forest")) {
      const auto& f = doc.at("forest");
      reject_unknown(f, {"n_trees", "max_depth", "min_leaf", "features_per_split", "pca_dim", "use_pca", "standardize"},
                     "forest", source);
      read_opt(f, "n_trees", c.forest.n_trees);
      read_opt(f, "max_depth", c.forest.max_depth);
      read_opt(f, "min_leaf", c.forest.min_leaf);
      read_opt(f, "features_per_split", c.forest.features_per_split);
      read_opt(f, "pca_dim", c.forest.pca_dim);
      read_opt(f, "use_pca", c.forest.use_pca);
      read_opt(f, "standardize", c.forest.standardize);
    }
    if (doc.contains("synth")) {
      const auto& s = doc.at("synth");
      reject_unknown(s,
                     {"gases", "positions", "boards", "concentrations", "trials", "length", "sample_rate",
                      "heater_voltage", "airflow_rpm", "noise", "noise_correlation", "puff_rate", "source_lateral",
                      "longitudinal_diffusion", "lateral_diffusion", "puff_duration", "puff_width", "amplitude_jitter", "meander",
                      "gain_spread", "tau_spread", "gain_overrides", "tau_overrides"},
                     "synth", source);
      auto& y = c.synth;
      read_opt(s, "gases", y.gases);
      read_opt(s, "positions", y.positions);
      read_opt(s, "boards", y.boards);
      read_opt(s, "concentrations", y.concentrations);
      read_opt(s, "trials", y.trials);
      read_opt(s, "length", y.length);
      read_opt(s, "sample_rate", y.sample_rate);
      read_opt(s, "heater_voltage", y.heater_voltage);
      read_opt(s, "airflow_rpm", y.airflow_rpm);
      read_opt(s, "noise", y.noise);
      read_opt(s, "noise_correlation", y.noise_correlation);
      read_opt(s, "puff_rate", y.puff_rate);
      read_opt(s, "source_lateral", y.source_lateral);
      read_opt(s, "longitudinal_diffusion", y.longitudinal_diffusion);
      read_opt(s, "lateral_diffusion", y.lateral_diffusion);
      read_opt(s, "puff_duration", y.puff_duration);
      read_opt(s, "puff_width", y.puff_width);
      read_opt(s, "amplitude_jitter", y.amplitude_jitter);
      read_opt(s, "meander", y.meander);
      read_opt(s, "gain_spread", y.gain_spread);
      read_opt(s, "tau_spread", y.tau_spread);
      read_opt(s, "gain_overrides", y.gain_overrides);
      read_opt(s, "tau_overrides", y.tau_overrides);
    }
  } catch (const json::exception& e) {
    throw ConfigError(source, e.what());
  }
  c.finalize();
  return c;
}

std::string ExperimentConfig::to_json() const {
  ordered_json doc;
  doc["seed"] = seed;
  doc["scenario"] = {{"task", to_string(scenario.task)},
                     {"aggregation", to_string(scenario.aggregation)},
                     {"include_static", scenario.include_static},
                     {"include_location", scenario.include_location}};
  std::vector<std::string> kinds;
  for (auto k : features) kinds.push_back(to_string(k));
  doc["features"] = kinds;
  doc["stsg"] = {{"J", stsg.max_log_scale},   {"q1", stsg.q1},
                 {"q2", stsg.q2},             {"max_order", stsg.max_order},
                 {"rule", to_string(stsg.rule)}, {"haar_levels", stsg.haar_levels},
                 {"overlap", to_string(stsg.overlap)}};
  doc["stft"] = {{"window", stft.window}, {"hop", stft.hop}};
  doc["forest"] = {{"n_trees", forest.n_trees},
                   {"max_depth", forest.max_depth},
                   {"min_leaf", forest.min_leaf},
                   {"features_per_split", forest.features_per_split},
                   {"pca_dim", forest.pca_dim},
                   {"use_pca", forest.use_pca},
                   {"standardize", forest.standardize}};
  doc["folds"] = folds;
  doc["holdout_folds"] = holdout_folds;
  doc["synth"] = {{"gases", synth.gases},
                  {"positions", synth.positions},
                  {"boards", synth.boards},
                  {"concentrations", synth.concentrations},
                  {"trials", synth.trials},
                  {"length", synth.length},
                  {"sample_rate", synth.sample_rate},
                  {"heater_voltage", synth.heater_voltage},
                  {"airflow_rpm", synth.airflow_rpm},
                  {"noise", synth.noise},
                  {"noise_correlation", synth.noise_correlation},
                  {"puff_rate", synth.puff_rate},
                  {"source_lateral", synth.source_lateral},
                  {"longitudinal_diffusion", synth.longitudinal_diffusion},
                  {"lateral_diffusion", synth.lateral_diffusion},
                  {"puff_duration", synth.puff_duration},
                  {"puff_width", synth.puff_width},
                  {"amplitude_jitter", synth.amplitude_jitter},
                  {"meander", synth.meander},
                  {"gain_spread", synth.gain_spread},
                  {"tau_spread", synth.tau_spread},
                  {"gain_overrides", synth.gain_overrides},
                  {"tau_overrides", synth.tau_overrides}};
  return doc.dump(2);
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(to_json())); }

void ExperimentConfig::finalize() {
  forest.seed = seed;
  forest.threads = threads;
  synth.seed = seed;
  if (features.empty()) throw InvalidArgument("configuration: no feature kinds");
  if (folds < 2) throw InvalidArgument("configuration: folds must be >= 2");
  if (holdout_folds < 2) throw InvalidArgument("configuration: holdout_folds must be >= 2");
  if (forest.n_trees < 1) throw InvalidArgument("configuration: forest.n_trees must be >= 1");
  if (scenario.task == Task::localize && scenario.include_location) {
    throw InvalidArgument("configuration: location features cannot be inputs of the localization task");
  }
}

// ---------------------------------------------------------------------------
// Recordings and features

std::vector<GraphRecording> prepare_recordings(const std::vector<Recording>& recordings, const ScenarioSpec& spec,
                                               std::vector<std::string>* warnings) {
  if (spec.task != Task::co_binary) return aggregate_dataset(recordings, spec.aggregation, warnings);
  std::vector<Recording> co;
  for (const auto& r : recordings) {
    if (r.gas == "carbon_monoxide" && (r.ppm == 1000.0 || r.ppm == 4000.0)) co.push_back(r);
  }
  if (co.empty()) throw InvalidArgument("co_binary: no carbon monoxide recordings at 1000 or 4000 ppm");
  return aggregate_dataset(co, spec.aggregation, warnings);
}

std::size_t FeatureMatrix::reducible() const {
  return layout.size() - layout.block_size("static") - layout.block_size("location");
}

LearningSet FeatureMatrix::learning_set() const {
  if (classification()) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = i;
    std::vector<std::size_t> y;
    for (const auto& l : labels) {
      auto it = index.find(l);
      if (it == index.end()) throw InvalidArgument("feature matrix: label '" + l + "' not in class list");
      y.push_back(it->second);
    }
    return LearningSet::classification(features, std::move(y), classes.size(), reducible());
  }
  return LearningSet::regression(features, targets, reducible());
}

FeatureMatrix FeatureMatrix::subset(const std::vector<std::size_t>& rows) const {
  FeatureMatrix out;
  out.kind = kind;
  out.config_hash = config_hash;
  out.scenario = scenario;
  out.layout = layout;
  out.classes = classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  if (!classification()) out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.ids.push_back(ids.at(rows[i]));
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    if (classification()) {
      out.labels.push_back(labels[rows[i]]);
    } else {
      out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(r);
    }
  }
  return out;
}

void FeatureMatrix::write(std::ostream& out) const {
  out << "# stsg-features v1\n";
  out << "kind: " << to_string(kind) << '\n';
  out << "config_hash: " << config_hash << '\n';
  out << "task: " << to_string(scenario.task) << '\n';
  out << "aggregation: " << to_string(scenario.aggregation) << '\n';
  out << "include_static: " << (scenario.include_static ? 1 : 0) << '\n';
  out << "include_location: " << (scenario.include_location ? 1 : 0) << '\n';
  out << "layout: " << layout.summary() << '\n';
  for (const auto& d : layout.description) out << "describe: " << d << '\n';
  if (classification()) {
    out << "classes:";
    for (std::size_t i = 0; i < classes.size(); ++i) out << (i ? "," : " ") << classes[i];
    out << '\n';
  }
  const auto q = classification() ? 1 : targets.cols();
  out << "target_columns: " << q << '\n';
  out << "rows: " << rows() << '\n';
  out << "data:\n";
  std::string line;
  for (std::size_t i = 0; i < rows(); ++i) {
    line = ids[i];
    const auto r = static_cast<Eigen::Index>(i);
    if (classification()) {
      line += ',' + labels[i];
    } else {
      for (Eigen::Index j = 0; j < targets.cols(); ++j) line += ',' + fmt(targets(r, j));
    }
    for (Eigen::Index j = 0; j < features.cols(); ++j) line += ',' + fmt(features(r, j));
    line += '\n';
    out << line;
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(',', start);
    out.push_back(s.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

FeatureLayout parse_layout(const std::string& summary) {
  FeatureLayout l;
  std::istringstream in(summary);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw InvalidArgument("layout token '" + tok + "' lacks '='");
    l.blocks.push_back({tok.substr(0, eq), static_cast<std::size_t>(std::stoull(tok.substr(eq + 1)))});
  }
  return l;
}

}  // namespace

FeatureMatrix FeatureMatrix::read(std::istream& in, const std::string& source) {
  FeatureMatrix m;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw InvalidArgument(source + ":" + std::to_string(lineno) + ": " + msg);
  };
  std::size_t q = 0, n = 0;
  bool have_rows = false, data = false;
  std::map<std::string, std::string> seen;
  while (!data && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    if (line == "data:") {
      data = true;
      break;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail("expected 'key: value'");
    const std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.erase(0, 1);
    try {
      if (key == "kind") {
        m.kind = parse_feature_kind(value);
      } else if (key == "config_hash") {
        m.config_hash = value;
      } else if (key == "task") {
        m.scenario.task = parse_task(value);
      } else if (key == "aggregation") {
        m.scenario.aggregation = parse_aggregation(value);
      } else if (key == "include_static") {
        m.scenario.include_static = value == "1";
      } else if (key == "include_location") {
        m.scenario.include_location = value == "1";
      } else if (key == "layout") {
        m.layout.blocks = parse_layout(value).blocks;
      } else if (key == "describe") {
        m.layout.description.push_back(value);
      } else if (key == "classes") {
        m.classes = split_csv(value);
      } else if (key == "target_columns") {
        q = std::stoull(value);
      } else if (key == "rows") {
        n = std::stoull(value);
        have_rows = true;
      } else {
        fail("unknown header key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      fail("bad value for '" + key + "'");
    }
  }
  if (!data || !have_rows || q == 0 || m.layout.blocks.empty()) fail("incomplete feature header");
  const std::size_t F = m.layout.size();
  m.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(F));
  if (!m.classification()) m.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) fail("expected " + std::to_string(n) + " data rows");
    ++lineno;
    const auto f = split_csv(line);
    if (f.size() != 1 + q + F) fail("expected " + std::to_string(1 + q + F) + " fields, found " + std::to_string(f.size()));
    m.ids.push_back(f[0]);
    auto num = [&](const std::string& s) {
      double v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) fail("bad number '" + s + "'");
      return v;
    };
    if (m.classification()) {
      m.labels.push_back(f[1]);
    } else {
      for (std::size_t j = 0; j < q; ++j) m.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = num(f[1 + j]);
    }
    for (std::size_t j = 0; j < F; ++j) {
      m.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = num(f[1 + q + j]);
    }
  }
  return m;
}

void FeatureMatrix::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot create " + path);
  write(out);
}

FeatureMatrix FeatureMatrix::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read(in, path);
}

FeatureMatrix extract_features(const std::vector<GraphRecording>& recordings, const ExperimentConfig& cfg,
                               FeatureKind kind) {
  if (recordings.empty()) throw InvalidArgument("extract_features: no recordings");
  FeatureMatrix m;
  m.kind = kind;
  m.config_hash = cfg.hash();
  m.scenario = cfg.scenario;
  m.classes = scenario_classes(recordings, cfg.scenario);

  const auto T = recordings.front().samples.rows();
  const auto graph = recordings.front().graph;
  for (const auto& r : recordings) {
    if (r.samples.rows() != T) throw DimensionError("extract_features: recordings differ in length; " + r.id);
    if (r.graph != graph) throw InvalidArgument("extract_features: recordings live on different graphs");
  }

  const std::size_t n = recordings.size();
  std::vector<FeatureVector> base(n);
  if (kind == FeatureKind::stsg) {
    StsgConfig sc;
    const int levels = cfg.stsg.haar_levels < 0 ? max_decomposition_level(graph->size()) : cfg.stsg.haar_levels;
    DecompositionOptions opt;
    opt.overlap = cfg.stsg.overlap;
    sc.decomposition = std::make_shared<const FolderDecomposition>(build_decomposition(*graph, levels, opt));
    sc.max_log_scale = cfg.stsg.max_log_scale;
    sc.q1 = cfg.stsg.q1;
    sc.q2 = cfg.stsg.q2;
    sc.max_order = cfg.stsg.max_order;
    sc.rule = cfg.stsg.rule;
    const FilterBank fb(sc.bank(static_cast<std::size_t>(T)));
    parallel_for(n, cfg.threads, [&](std::size_t i) { base[i] = stsg_moments(recordings[i].samples, sc, fb); });
  } else if (kind == FeatureKind::stft) {
    StftConfig sc = StftConfig::hann(cfg.stft.window);
    sc.hop = cfg.stft.hop;
    parallel_for(n, cfg.threads, [&](std::size_t i) { base[i] = stft_features(recordings[i].samples, sc); });
  } else {
    parallel_for(n, cfg.threads, [&](std::size_t i) { base[i] = moment_features(recordings[i].samples); });
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = recordings[i];
    const StaticFeatures st{r.heater_voltage, r.airflow_rpm, r.ppm};
    const LocationFeatures loc{r.x_pos(), r.board_index == 0 ? 0.0 : r.x_board()};
    FeatureVector fv = assemble_features(base[i], cfg.scenario.include_static, cfg.scenario.include_location, st, loc);
    if (i == 0) {
      m.layout = fv.layout;
      m.features.resize(static_cast<Eigen::Index>(n), fv.values.size());
    }
    m.features.row(static_cast<Eigen::Index>(i)) = fv.values.transpose();
    m.ids.push_back(r.id);
    const Target t = extract_target(r, cfg.scenario);
    if (m.classification()) {
      m.labels.push_back(t.label);
    } else {
      if (i == 0) m.targets.resize(static_cast<Eigen::Index>(n), t.value.size());
      m.targets.row(static_cast<Eigen::Index>(i)) = t.value.transpose();
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Cross-validation reports

CvReport cross_validate_features(const std::vector<FeatureMatrix>& matrices, const ExperimentConfig& cfg) {
  CvReport rep;
  rep.config_hash = cfg.hash();
  rep.scenario = cfg.scenario;
  rep.folds = cfg.folds;
  rep.trees = cfg.forest.n_trees;
  for (const auto& m : matrices) {
    if (rep.samples == 0) rep.samples = m.rows();
    if (m.rows() != rep.samples) throw DimensionError("cross_validate: feature matrices differ in row count");
    CvRow row;
    row.kind = m.kind;
    row.feature_count = static_cast<std::size_t>(m.features.cols());
    row.cv = cross_validate(m.learning_set(), cfg.forest, cfg.folds);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

namespace {

bool is_regression(const ScenarioSpec& s) { return s.task == Task::localize; }

std::string metric_name(const ScenarioSpec& s) {
  return is_regression(s) ? "mean L2 error (m)" : "misclassification rate (%)";
}

std::string format_error(const ScenarioSpec& s, double v) {
  return is_regression(s) ? fixed(v, 4) : fixed(100.0 * v, 2) + "%";
}

}  // namespace

std::string CvReport::table() const {
  std::ostringstream o;
  const std::string title = scenario.aggregation == Aggregation::board_column ? "Board Column" : "Single Board";
  o << (is_regression(scenario) ? "Localization" : "Classification") << " performance of '" << title
    << "' scenario, task " << to_string(scenario.task) << '\n';
  o << "config " << config_hash << ", " << samples << " samples, " << folds << "-fold CV, " << trees << " trees\n";
  o << "metric: " << metric_name(scenario) << '\n';
  std::size_t width = 13;
  for (const auto& r : rows) width = std::max(width, display_name(r.kind).size());
  o << std::left << std::setw(static_cast<int>(width)) << "Feature space" << "  " << std::setw(9) << "features"
    << "  error mean (+-std)\n";
  for (const auto& r : rows) {
    o << std::left << std::setw(static_cast<int>(width)) << display_name(r.kind) << "  " << std::setw(9)
      << r.feature_count << "  " << format_error(scenario, r.cv.mean) << " (+-" << format_error(scenario, r.cv.stddev)
      << ")\n";
  }
  return o.str();
}

std::string CvReport::numeric() const {
  std::ostringstream o;
  o << "config_hash=" << config_hash << " task=" << to_string(scenario.task)
    << " aggregation=" << to_string(scenario.aggregation) << '\n';
  for (const auto& r : rows) {
    o << "feature=" << to_string(r.kind) << " mean=" << fmt(r.cv.mean) << " std=" << fmt(r.cv.stddev);
    for (std::size_t f = 0; f < r.cv.fold_errors.size(); ++f) o << " fold" << f << '=' << fmt(r.cv.fold_errors[f]);
    o << '\n';
  }
  return o.str();
}

std::string CvReport::to_json() const {
  ordered_json doc;
  doc["kind"] = "cv";
  doc["config_hash"] = config_hash;
  doc["task"] = to_string(scenario.task);
  doc["aggregation"] = to_string(scenario.aggregation);
  doc["samples"] = samples;
  doc["folds"] = folds;
  doc["trees"] = trees;
  ordered_json rs = ordered_json::array();
  for (const auto& r : rows) {
    rs.push_back({{"feature", to_string(r.kind)},
                  {"features", r.feature_count},
                  {"mean", r.cv.mean},
                  {"std", r.cv.stddev},
                  {"fold_errors", r.cv.fold_errors}});
  }
  doc["rows"] = rs;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Train / eval / curves

Split holdout_split(const FeatureMatrix& m, const ExperimentConfig& cfg) {
  const auto folds = assign_folds(m.learning_set(), cfg.holdout_folds, cfg.seed);
  Split s;
  for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == 0 ? s.heldout : s.train).push_back(i);
  return s;
}

std::string TrainedModel::to_json() const {
  ordered_json doc;
  doc["format"] = "stsg-model";
  doc["version"] = 1;
  doc["config_hash"] = config_hash;
  doc["feature"] = to_string(kind);
  doc["task"] = to_string(scenario.task);
  doc["aggregation"] = to_string(scenario.aggregation);
  doc["include_static"] = scenario.include_static;
  doc["include_location"] = scenario.include_location;
  doc["layout"] = layout;
  doc["classes"] = classes;
  doc["heldout_ids"] = heldout_ids;
  doc["heldout_error"] = heldout_error;
  doc["forest"] = ordered_json::parse(forest.to_json());
  return doc.dump() + "\n";
}

TrainedModel TrainedModel::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "stsg-model" || doc.at("version") != 1) {
      throw InvalidArgument("model document: unsupported format");
    }
    TrainedModel m;
    m.config_hash = doc.at("config_hash");
    m.kind = parse_feature_kind(doc.at("feature"));
    m.scenario.task = parse_task(doc.at("task"));
    m.scenario.aggregation = parse_aggregation(doc.at("aggregation"));
    m.scenario.include_static = doc.at("include_static");
    m.scenario.include_location = doc.at("include_location");
    m.layout = doc.at("layout");
    m.classes = doc.at("classes").get<std::vector<std::string>>();
    m.heldout_ids = doc.at("heldout_ids").get<std::vector<std::string>>();
    m.heldout_error = doc.at("heldout_error");
    m.forest = Forest::from_json(doc.at("forest").dump());
    return m;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model document: ") + e.what());
  }
}

TrainedModel train_model(const FeatureMatrix& m, const ExperimentConfig& cfg) {
  const Split split = holdout_split(m, cfg);
  TrainedModel model;
  model.config_hash = cfg.hash();
  model.kind = m.kind;
  model.scenario = m.scenario;
  model.layout = m.layout.summary();
  model.classes = m.classes;
  for (auto i : split.heldout) model.heldout_ids.push_back(m.ids[i]);
  model.forest = train_rf(m.subset(split.train).learning_set(), cfg.forest);
  model.heldout_error = evaluate_error(model.forest, m.subset(split.heldout).learning_set());
  return model;
}

double evaluate_model(const TrainedModel& model, const FeatureMatrix& m, bool all_rows) {
  if (m.layout.summary() != model.layout) {
    throw DimensionError("evaluate: feature layout '" + m.layout.summary() + "' differs from the model's '" +
                         model.layout + "'");
  }
  if (m.classes != model.classes) throw InvalidArgument("evaluate: class list differs from the model's");
  std::vector<std::size_t> rows;
  if (all_rows) {
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(i);
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < m.rows(); ++i) index[m.ids[i]] = i;
    for (const auto& id : model.heldout_ids) {
      auto it = index.find(id);
      if (it == index.end()) throw InvalidArgument("evaluate: held-out row '" + id + "' missing from feature file");
      rows.push_back(it->second);
    }
  }
  return evaluate_error(model.forest, m.subset(rows).learning_set());
}

LearningCurves learning_curves(const FeatureMatrix& m, const ExperimentConfig& cfg) {
  const Split split = holdout_split(m, cfg);
  const LearningSet train = m.subset(split.train).learning_set();
  const Forest forest = train_rf(train, cfg.forest);
  LearningCurves c;
  c.config_hash = cfg.hash();
  c.validation = error_curve(forest, m.subset(split.heldout).learning_set());
  const OobCurve oob = oob_error(forest, train);
  c.oob = oob.error;
  c.oob_excluded = oob.excluded;
  return c;
}

std::string LearningCurves::table() const {
  std::ostringstream o;
  o << "# config " << config_hash << '\n';
  o << "trees,validation_error,oob_error,oob_excluded\n";
  for (std::size_t i = 0; i < validation.size(); ++i) {
    o << (i + 1) << ',' << fmt(validation[i]) << ',' << fmt(oob[i]) << ',' << oob_excluded[i] << '\n';
  }
  return o.str();
}

std::string LearningCurves::to_json() const {
  ordered_json doc;
  doc["kind"] = "curves";
  doc["config_hash"] = config_hash;
  doc["validation"] = validation;
  doc["oob"] = oob;
  doc["oob_excluded"] = oob_excluded;
  return doc.dump(2) + "\n";
}

std::string render_report(const std::string& results_json) {
  json doc;
  try {
    doc = json::parse(results_json);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("results document: ") + e.what());
  }
  std::ostringstream o;
  try {
    const std::string kind = doc.at("kind");
    o << "# config " << doc.at("config_hash").get<std::string>() << '\n';
    if (kind == "cv") {
      o << "# task " << doc.at("task").get<std::string>() << " aggregation "
        << doc.at("aggregation").get<std::string>() << '\n';
      const std::size_t k = doc.at("folds");
      o << "feature,features,mean,std";
      for (std::size_t f = 0; f < k; ++f) o << ",fold" << f;
      o << '\n';
      for (const auto& r : doc.at("rows")) {
        o << r.at("feature").get<std::string>() << ',' << r.at("features").get<std::size_t>() << ','
          << fmt(r.at("mean").get<double>()) << ',' << fmt(r.at("std").get<double>());
        for (const auto& e : r.at("fold_errors")) o << ',' << fmt(e.get<double>());
        o << '\n';
      }
    } else if (kind == "curves") {
      LearningCurves c;
      c.config_hash = doc.at("config_hash");
      c.validation = doc.at("validation").get<std::vector<double>>();
      c.oob = doc.at("oob").get<std::vector<double>>();
      c.oob_excluded = doc.at("oob_excluded").get<std::vector<std::size_t>>();
      const std::string t = c.table();
      o << t.substr(t.find('\n') + 1);
    } else {
      throw InvalidArgument("results document: unknown kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("results document: ") + e.what());
  }
  return o.str();
}

}  // namespace stsg
