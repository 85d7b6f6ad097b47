#include "stsg/graph_wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stsg {

namespace {

Point2 centroid(const Folder& f, const std::vector<Point2>& pos) {
  Point2 c;
  for (std::size_t v : f.members) {
    c.x += pos[v].x;
    c.y += pos[v].y;
  }
  const double n = static_cast<double>(f.members.size());
  return {c.x / n, c.y / n};
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Folder merge(int level, const std::vector<Folder>& prev, std::vector<std::size_t> children) {
  Folder f;
  f.level = level;
  for (std::size_t c : children) {
    f.members.insert(f.members.end(), prev[c].members.begin(), prev[c].members.end());
  }
  std::sort(f.members.begin(), f.members.end());
  f.members.erase(std::unique(f.members.begin(), f.members.end()), f.members.end());
  f.children = std::move(children);
  return f;
}

bool folders_adjacent(const Folder& a, const SensorGraph& g,
                      const std::vector<char>& in_b) {
  for (std::size_t u : a.members) {
    if (in_b[u]) return true;
    for (std::size_t v : g.neighbors(u)) {
      if (in_b[v]) return true;
    }
  }
  return false;
}

std::vector<std::vector<std::size_t>> greedy_pairs(const std::vector<Folder>& prev,
                                                   const SensorGraph& g, int level,
                                                   const DecompositionOptions& opt,
                                                   std::vector<std::string>& notes) {
  const std::size_t m = prev.size();
  std::vector<Point2> centers(m);
  for (std::size_t i = 0; i < m; ++i) centers[i] = centroid(prev[i], g.positions());

  std::vector<std::vector<char>> adj(m, std::vector<char>(m, 0));
  for (std::size_t b = 0; b < m; ++b) {
    std::vector<char> in_b(g.size(), 0);
    for (std::size_t v : prev[b].members) in_b[v] = 1;
    for (std::size_t a = 0; a < m; ++a) {
      if (a != b) adj[a][b] = folders_adjacent(prev[a], g, in_b) ? 1 : 0;
    }
  }

  std::vector<char> matched(m, 0);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t a = 0; a < m; ++a) {
    if (matched[a]) continue;
    std::size_t best = m;
    double best_d = std::numeric_limits<double>::infinity();
    bool best_adj = false;
    for (std::size_t b = a + 1; b < m; ++b) {
      if (matched[b]) continue;
      const bool is_adj = adj[a][b] != 0;
      const double d = distance(centers[a], centers[b]);
      if ((is_adj && !best_adj) || (is_adj == best_adj && d < best_d)) {
        best = b;
        best_d = d;
        best_adj = is_adj;
      }
    }
    matched[a] = 1;
    if (best == m) {
      out.push_back({a});
      continue;
    }
    if (!best_adj) {
      std::ostringstream msg;
      msg << "level " << level << ": folders " << a << " and " << best
          << " paired without a connecting edge";
      if (opt.strict_adjacency) throw InvalidArgument("build_decomposition: " + msg.str());
      notes.push_back(msg.str());
    }
    matched[best] = 1;
    out.push_back({a, best});
  }
  return out;
}

// Pairs consecutive entries of `run`; a trailing singleton is carried.
void pair_run(std::vector<std::size_t> run, std::vector<std::vector<std::size_t>>& out) {
  for (std::size_t i = 0; i < run.size(); i += 2) {
    if (i + 1 < run.size()) {
      out.push_back({std::min(run[i], run[i + 1]), std::max(run[i], run[i + 1])});
    } else {
      out.push_back({run[i]});
    }
  }
}

std::vector<std::vector<std::size_t>> center_pairs(std::size_t m) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> left, right;
  if (m % 2 == 1) {
    const std::size_t c = (m - 1) / 2;
    for (std::size_t i = c + 1; i-- > 0;) left.push_back(i);
    for (std::size_t i = c; i < m; ++i) right.push_back(i);
  } else {
    const std::size_t c0 = m / 2 - 1;
    const std::size_t c1 = m / 2;
    out.push_back({c0, c1});
    for (std::size_t i = c0 + 1; i-- > 0;) left.push_back(i);
    for (std::size_t i = c1; i < m; ++i) right.push_back(i);
  }
  pair_run(left, out);
  pair_run(right, out);
  return out;
}

bool folder_order(const Folder& a, const Folder& b) {
  if (a.members.front() != b.members.front()) return a.members.front() < b.members.front();
  if (a.members != b.members) return a.members < b.members;
  return a.children < b.children;
}

std::string join_ids(const std::vector<std::size_t>& ids) {
  if (ids.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ids[i]);
  }
  return s;
}

std::vector<std::size_t> parse_ids(const std::string& s) {
  std::vector<std::size_t> ids;
  if (s == "-") return ids;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) ids.push_back(std::stoull(item));
  return ids;
}

}  // namespace

SensorGraph::SensorGraph(std::vector<Point2> positions, std::vector<Edge> edges)
    : positions_(std::move(positions)) {
  const std::size_t n = positions_.size();
  for (const auto& p : positions_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidArgument("SensorGraph: non-finite vertex position");
    }
  }
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw InvalidArgument("SensorGraph: edge endpoint out of range");
    if (a == b) throw InvalidArgument("SensorGraph: self-loop");
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  adjacency_.assign(n, {});
  for (auto [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
}

bool SensorGraph::adjacent(std::size_t a, std::size_t b) const {
  const auto& nb = adjacency_.at(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

SensorGraph SensorGraph::path(std::size_t n, double spacing) {
  std::vector<Point2> pos(n);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = {spacing * static_cast<double>(i), 0.0};
    if (i + 1 < n) edges.emplace_back(i, i + 1);
  }
  return SensorGraph(std::move(pos), std::move(edges));
}

std::string to_string(OverlapPolicy policy) {
  return policy == OverlapPolicy::center ? "center" : "none";
}

OverlapPolicy parse_overlap_policy(const std::string& name) {
  if (name == "none") return OverlapPolicy::none;
  if (name == "center") return OverlapPolicy::center;
  throw InvalidArgument("unknown overlap policy '" + name + "'");
}

int max_decomposition_level(std::size_t n) {
  if (n == 0) throw InvalidArgument("max_decomposition_level: empty graph");
  int j = 0;
  while ((std::size_t{2} << j) <= n) ++j;
  return j;
}

FolderDecomposition::FolderDecomposition(std::size_t vertex_count,
                                         std::vector<std::vector<Folder>> levels,
                                         OverlapPolicy overlap,
                                         std::vector<std::string> fallback_pairings)
    : vertex_count_(vertex_count),
      levels_(std::move(levels)),
      policy_(overlap),
      fallback_(std::move(fallback_pairings)) {
  validate();
}

void FolderDecomposition::validate() {
  if (vertex_count_ == 0) throw InvalidArgument("FolderDecomposition: empty graph");
  if (levels_.empty()) throw InvalidArgument("FolderDecomposition: no levels");
  if (max_level() > max_decomposition_level(vertex_count_)) {
    throw InvalidArgument("FolderDecomposition: max level exceeds floor(log2 N)");
  }
  const auto& base = levels_[0];
  if (base.size() != vertex_count_) {
    throw InvalidArgument("FolderDecomposition: level 0 must hold N singletons");
  }
  for (std::size_t v = 0; v < vertex_count_; ++v) {
    if (base[v].members != std::vector<std::size_t>{v} || !base[v].children.empty()) {
      throw InvalidArgument("FolderDecomposition: level 0 folder " + std::to_string(v) +
                            " is not the singleton {" + std::to_string(v) + "}");
    }
  }
  bool shared = false;
  for (std::size_t j = 1; j < levels_.size(); ++j) {
    const auto& prev = levels_[j - 1];
    std::vector<int> parent_count(prev.size(), 0);
    for (const auto& f : levels_[j]) {
      if (f.level != static_cast<int>(j)) {
        throw InvalidArgument("FolderDecomposition: folder level tag mismatch");
      }
      if (f.children.empty() || f.children.size() > 2) {
        throw InvalidArgument("FolderDecomposition: folder must have one or two children");
      }
      std::vector<std::size_t> expect;
      for (std::size_t c : f.children) {
        if (c >= prev.size()) throw InvalidArgument("FolderDecomposition: child id out of range");
        ++parent_count[c];
        expect.insert(expect.end(), prev[c].members.begin(), prev[c].members.end());
      }
      std::sort(expect.begin(), expect.end());
      expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
      if (expect != f.members) {
        throw InvalidArgument("FolderDecomposition: members differ from union of children");
      }
      if (f.paired() && f.children[0] == f.children[1]) {
        throw InvalidArgument("FolderDecomposition: folder paired with itself");
      }
    }
    for (int c : parent_count) {
      if (c > 2) throw InvalidArgument("FolderDecomposition: folder has more than two parents");
      if (c == 2) shared = true;
    }
  }
  if (shared && policy_ == OverlapPolicy::none) {
    throw InvalidArgument("FolderDecomposition: shared child in a non-overlapping decomposition");
  }
  overlapping_ = shared;
}

std::string FolderDecomposition::to_text() const {
  std::ostringstream out;
  out << "decomposition v1 vertices " << vertex_count_ << " max_level " << max_level()
      << " overlap " << to_string(policy_) << '\n';
  for (const auto& level : levels_) {
    for (std::size_t i = 0; i < level.size(); ++i) {
      out << "folder " << level[i].level << ' ' << i << ' ' << join_ids(level[i].members) << ' '
          << join_ids(level[i].children) << '\n';
    }
  }
  return out.str();
}

FolderDecomposition FolderDecomposition::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("decomposition text: empty document");
  std::istringstream head(line);
  std::string tag, version, k_vert, k_level, k_overlap, overlap;
  std::size_t n = 0;
  int max_level = 0;
  head >> tag >> version >> k_vert >> n >> k_level >> max_level >> k_overlap >> overlap;
  if (!head || tag != "decomposition" || version != "v1" || k_vert != "vertices" ||
      k_level != "max_level" || k_overlap != "overlap") {
    throw InvalidArgument("decomposition text: bad header line");
  }
  if (max_level < 0) throw InvalidArgument("decomposition text: negative max_level");
  std::vector<std::vector<Folder>> levels(static_cast<std::size_t>(max_level) + 1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string kw, members, children;
    int level = -1;
    std::size_t id = 0;
    row >> kw >> level >> id >> members >> children;
    if (!row || kw != "folder" || level < 0 || level > max_level) {
      throw InvalidArgument("decomposition text: malformed line " + std::to_string(lineno));
    }
    auto& lv = levels[static_cast<std::size_t>(level)];
    if (id != lv.size()) {
      throw InvalidArgument("decomposition text: folder ids out of order at line " +
                            std::to_string(lineno));
    }
    Folder f;
    f.level = level;
    f.members = parse_ids(members);
    f.children = parse_ids(children);
    if (f.members.empty()) {
      throw InvalidArgument("decomposition text: empty folder at line " + std::to_string(lineno));
    }
    lv.push_back(std::move(f));
  }
  return FolderDecomposition(n, std::move(levels), parse_overlap_policy(overlap));
}

FolderDecomposition FolderDecomposition::relabeled(std::span<const std::size_t> perm) const {
  if (perm.size() != vertex_count_) throw DimensionError("relabeled: permutation size mismatch");
  std::vector<std::vector<Folder>> levels = levels_;
  // Level 0 stays the identity list of singletons, so level-0 folder ids are
  // permuted along with the vertices.
  for (std::size_t v = 0; v < vertex_count_; ++v) levels[0][v].members = {v};
  for (std::size_t j = 1; j < levels.size(); ++j) {
    for (auto& f : levels[j]) {
      for (auto& m : f.members) m = perm[m];
      std::sort(f.members.begin(), f.members.end());
      if (j == 1) {
        for (auto& c : f.children) c = perm[c];
      }
    }
  }
  return FolderDecomposition(vertex_count_, std::move(levels), policy_, fallback_);
}

FolderDecomposition build_decomposition(const SensorGraph& graph, int max_level,
                                        const DecompositionOptions& options) {
  const std::size_t n = graph.size();
  if (n == 0) throw InvalidArgument("build_decomposition: empty graph");
  if (max_level < 0 || max_level > max_decomposition_level(n)) {
    throw InvalidArgument("build_decomposition: max_level must lie in [0, floor(log2 N)] = [0, " +
                          std::to_string(max_decomposition_level(n)) + "]");
  }
  std::vector<std::vector<Folder>> levels(1);
  for (std::size_t v = 0; v < n; ++v) levels[0].push_back(Folder{0, {v}, {}});

  std::vector<std::string> notes;
  for (int j = 1; j <= max_level; ++j) {
    const auto& prev = levels.back();
    const bool overlap = options.overlap == OverlapPolicy::center &&
                         j >= options.overlap_from_level && prev.size() >= 3;
    const auto groups = overlap ? center_pairs(prev.size()) : greedy_pairs(prev, graph, j, options, notes);
    std::vector<Folder> next;
    next.reserve(groups.size());
    for (const auto& g : groups) next.push_back(merge(j, prev, g));
    std::stable_sort(next.begin(), next.end(), folder_order);
    levels.push_back(std::move(next));
  }
  return FolderDecomposition(n, std::move(levels), options.overlap, std::move(notes));
}

std::vector<HaarChannel> haar_channel_layout(const FolderDecomposition& dec) {
  std::vector<HaarChannel> out;
  if (dec.max_level() == 0) {
    for (std::size_t v = 0; v < dec.vertex_count(); ++v) out.push_back({0, v, 0});
    return out;
  }
  for (int k = 1; k <= dec.max_level(); ++k) {
    const auto& level = dec.level(k);
    for (std::size_t i = 0; i < level.size(); ++i) {
      out.push_back({k, i, 0});
      if (level[i].paired()) out.push_back({k, i, 1});
    }
  }
  return out;
}

HaarChannelSet haar_analyze_series(const FolderDecomposition& dec, const Matrix& recording) {
  if (static_cast<std::size_t>(recording.cols()) != dec.vertex_count()) {
    throw DimensionError("haar_analyze: recording has " + std::to_string(recording.cols()) +
                         " vertices, decomposition has " + std::to_string(dec.vertex_count()));
  }
  if (!recording.allFinite()) throw InvalidArgument("haar_analyze: non-finite input");

  HaarChannelSet out;
  out.channels = haar_channel_layout(dec);
  const Eigen::Index T = recording.rows();
  out.values.resize(T, static_cast<Eigen::Index>(out.channels.size()));
  if (dec.max_level() == 0) {
    out.values = recording;
    return out;
  }

  Matrix scaling = recording;  // level 0
  Eigen::Index col = 0;
  for (int k = 1; k <= dec.max_level(); ++k) {
    const auto& level = dec.level(k);
    Matrix next(T, static_cast<Eigen::Index>(level.size()));
    for (std::size_t i = 0; i < level.size(); ++i) {
      const auto& f = level[i];
      const auto a = static_cast<Eigen::Index>(f.children[0]);
      const auto ii = static_cast<Eigen::Index>(i);
      if (f.paired()) {
        const auto b = static_cast<Eigen::Index>(f.children[1]);
        if (dec.overlapping()) {
          next.col(ii).setZero();
          for (auto v : f.members) next.col(ii) += recording.col(static_cast<Eigen::Index>(v));
        } else {
          next.col(ii) = scaling.col(a) + scaling.col(b);
        }
        out.values.col(col++) = next.col(ii);
        out.values.col(col++) = scaling.col(a) - scaling.col(b);
      } else {
        next.col(ii) = scaling.col(a);
        out.values.col(col++) = next.col(ii);
      }
    }
    scaling = std::move(next);
  }
  return out;
}

HaarChannelSet haar_analyze(const FolderDecomposition& dec, std::span<const double> signal) {
  if (signal.size() != dec.vertex_count()) {
    throw DimensionError("haar_analyze: signal length " + std::to_string(signal.size()) +
                         " != vertex count " + std::to_string(dec.vertex_count()));
  }
  Matrix row(1, static_cast<Eigen::Index>(signal.size()));
  for (std::size_t v = 0; v < signal.size(); ++v) row(0, static_cast<Eigen::Index>(v)) = signal[v];
  return haar_analyze_series(dec, row);
}

Matrix haar_synthesize(const FolderDecomposition& dec, const HaarChannelSet& channels) {
  if (dec.overlapping()) {
    throw UnsupportedDecomposition(
        "haar_synthesize: overlapping decompositions are redundant and have no unique inverse");
  }
  const auto layout = haar_channel_layout(dec);
  if (layout.size() != channels.channels.size() ||
      static_cast<std::size_t>(channels.values.cols()) != layout.size()) {
    throw DimensionError("haar_synthesize: channel set does not match decomposition");
  }
  const Eigen::Index T = channels.values.rows();
  if (dec.max_level() == 0) return channels.values;

  // Locate the columns of every (level, folder) scaling and wavelet channel.
  const int J = dec.max_level();
  std::vector<std::vector<Eigen::Index>> wavelet_col(static_cast<std::size_t>(J) + 1);
  std::vector<Eigen::Index> top_scaling;
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const auto& ch = layout[c];
    if (ch.level != channels.channels[c].level || ch.folder != channels.channels[c].folder ||
        ch.coefficient != channels.channels[c].coefficient) {
      throw DimensionError("haar_synthesize: channel layout differs from decomposition");
    }
    auto& wl = wavelet_col[static_cast<std::size_t>(ch.level)];
    if (wl.size() <= ch.folder) wl.resize(ch.folder + 1, -1);
    if (ch.coefficient == 1) wl[ch.folder] = static_cast<Eigen::Index>(c);
    if (ch.level == J && ch.coefficient == 0) top_scaling.push_back(static_cast<Eigen::Index>(c));
  }

  Matrix scaling(T, static_cast<Eigen::Index>(top_scaling.size()));
  for (std::size_t i = 0; i < top_scaling.size(); ++i) {
    scaling.col(static_cast<Eigen::Index>(i)) = channels.values.col(top_scaling[i]);
  }
  for (int k = J; k >= 1; --k) {
    const auto& level = dec.level(k);
    Matrix prev(T, static_cast<Eigen::Index>(dec.level(k - 1).size()));
    for (std::size_t i = 0; i < level.size(); ++i) {
      const auto& f = level[i];
      const auto ii = static_cast<Eigen::Index>(i);
      const auto a = static_cast<Eigen::Index>(f.children[0]);
      if (f.paired()) {
        const auto b = static_cast<Eigen::Index>(f.children[1]);
        const auto w = channels.values.col(wavelet_col[static_cast<std::size_t>(k)][i]);
        prev.col(a) = 0.5 * (scaling.col(ii) + w);
        prev.col(b) = 0.5 * (scaling.col(ii) - w);
      } else {
        prev.col(a) = scaling.col(ii);
      }
    }
    scaling = std::move(prev);
  }
  return scaling;
}

}  // namespace stsg
