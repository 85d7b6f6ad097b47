#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stsg/common.hpp"

namespace stsg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Undirected, unweighted sensor graph with planar vertex positions (meters).
class SensorGraph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  SensorGraph() = default;
  SensorGraph(std::vector<Point2> positions, std::vector<Edge> edges);

  std::size_t size() const { return positions_.size(); }
  const std::vector<Point2>& positions() const { return positions_; }
  /// Normalized edges (first < second), sorted, no duplicates.
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adjacency_.at(v); }
  bool adjacent(std::size_t a, std::size_t b) const;

  /// Vertices on the x axis at `spacing`, edges between consecutive ids.
  static SensorGraph path(std::size_t n, double spacing = 1.0);

 private:
  std::vector<Point2> positions_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

enum class OverlapPolicy { none, center };

std::string to_string(OverlapPolicy policy);
OverlapPolicy parse_overlap_policy(const std::string& name);

struct DecompositionOptions {
  OverlapPolicy overlap = OverlapPolicy::none;
  /// First level whose folders are built with the overlap rule. Lower levels
  /// use plain greedy pairing.
  int overlap_from_level = 1;
  /// When no graph-adjacent unmatched folder is left, the greedy matcher falls
  /// back to the nearest folder by centroid distance and records the event in
  /// FolderDecomposition::fallback_pairings(). With `strict_adjacency` the
  /// fallback raises InvalidArgument instead.
  bool strict_adjacency = false;
};

/// A set of level-0 vertices at one resolution level. `children` holds the
/// ids of the level-(j-1) folders it was built from: none at level 0, one for
/// a folder carried up unpaired, two for a pair (alpha, beta).
struct Folder {
  int level = 0;
  std::vector<std::size_t> members;
  std::vector<std::size_t> children;

  bool paired() const { return children.size() == 2; }
};

/// Multiscale folder hierarchy over a SensorGraph. Immutable once built.
class FolderDecomposition {
 public:
  FolderDecomposition(std::size_t vertex_count, std::vector<std::vector<Folder>> levels,
                      OverlapPolicy overlap, std::vector<std::string> fallback_pairings = {});

  std::size_t vertex_count() const { return vertex_count_; }
  int max_level() const { return static_cast<int>(levels_.size()) - 1; }
  const std::vector<Folder>& level(int j) const { return levels_.at(static_cast<std::size_t>(j)); }
  const std::vector<std::vector<Folder>>& levels() const { return levels_; }
  bool overlapping() const { return overlapping_; }
  OverlapPolicy overlap_policy() const { return policy_; }
  const std::vector<std::string>& fallback_pairings() const { return fallback_; }

  /// One folder per line: `folder <level> <id> <members> <children>`, with
  /// comma-separated id lists and `-` for an empty list.
  std::string to_text() const;
  static FolderDecomposition from_text(const std::string& text);

  /// Same hierarchy with vertex v renamed to perm[v].
  FolderDecomposition relabeled(std::span<const std::size_t> perm) const;

 private:
  void validate();

  std::size_t vertex_count_ = 0;
  std::vector<std::vector<Folder>> levels_;
  OverlapPolicy policy_ = OverlapPolicy::none;
  bool overlapping_ = false;
  std::vector<std::string> fallback_;
};

/// Builds levels 0..max_level. Folder pairing is a deterministic greedy
/// matching: folders are scanned by ascending lowest member id and each
/// unmatched folder takes the graph-adjacent unmatched folder with the nearest
/// centroid (ties to the lower id). With an odd folder count the leftover
/// folder is carried to the next level.
///
/// The center overlap rule orders a level's folders by lowest member id and
/// shares the middle folder (odd count) or the middle two (even count) between
/// two parents; see the README for the exact pairing.
FolderDecomposition build_decomposition(const SensorGraph& graph, int max_level,
                                        const DecompositionOptions& options = {});

/// floor(log2(n)) for n >= 1.
int max_decomposition_level(std::size_t n);

struct HaarChannel {
  int level = 0;
  std::size_t folder = 0;
  /// 0 = scaling (sum over the folder), 1 = wavelet (alpha minus beta).
  int coefficient = 0;
};

/// Haar coefficients of a graph signal or graph time series. Column c of
/// `values` is the series of channel `channels[c]`; a plain vertex signal is
/// the single-row case.
///
/// Channels are level-major (1..J), folder-minor, scaling before wavelet.
/// Carried folders contribute a scaling channel only. With J = 0 the channels
/// are the level-0 vertex signals.
struct HaarChannelSet {
  std::vector<HaarChannel> channels;
  Matrix values;  // T x channel count

  std::size_t channel_count() const { return channels.size(); }
  std::size_t length() const { return static_cast<std::size_t>(values.rows()); }
};

/// Channel index layout that haar_analyze produces for `dec`.
std::vector<HaarChannel> haar_channel_layout(const FolderDecomposition& dec);

HaarChannelSet haar_analyze(const FolderDecomposition& dec, std::span<const double> signal);

/// `recording` is T x N (time by vertex).
HaarChannelSet haar_analyze_series(const FolderDecomposition& dec, const Matrix& recording);

/// Inverse of haar_analyze for non-overlapping decompositions. Only the
/// top-level scaling channels and the wavelet channels are read. Returns a
/// T x N matrix.
Matrix haar_synthesize(const FolderDecomposition& dec, const HaarChannelSet& channels);

}  // namespace stsg
