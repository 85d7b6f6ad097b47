#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stsg/common.hpp"
#include "stsg/graph_wavelet.hpp"
#include "stsg/scattering.hpp"

namespace stsg {

/// Named, contiguous block of a feature vector.
struct FeatureBlock {
  std::string name;  // "moments", "static", "location", ...
  std::size_t size = 0;
};

/// Layout of a feature vector: blocks in order, plus free-form descriptor
/// lines (channel and path order) written into feature-file headers.
struct FeatureLayout {
  std::vector<FeatureBlock> blocks;
  std::vector<std::string> description;

  std::size_t size() const;
  std::size_t block_size(const std::string& name) const;
  /// Offset of a block; throws if absent.
  std::size_t offset(const std::string& name) const;
  bool has(const std::string& name) const;
  std::string summary() const;  // "moments=308 static=3"
  friend bool operator==(const FeatureLayout& a, const FeatureLayout& b);
};

struct FeatureVector {
  Vector values;
  FeatureLayout layout;
};

struct StsgConfig {
  std::shared_ptr<const FolderDecomposition> decomposition;
  int max_log_scale = 6;  // J
  int q1 = 8;
  int q2 = 1;
  int max_order = 2;      // M
  SecondOrderRule rule = SecondOrderRule::increasing;
  bool include_static = false;
  bool include_location = false;
  /// 0 selects min(64, moment count).
  std::size_t pca_dim = 0;
  std::size_t threads = 1;

  FilterBankParams bank(std::size_t length) const;
};

/// Time-averaged scattering moments of every graph-Haar channel of
/// `recording` (T x N), concatenated channel-major: channel c occupies
/// entries [c*P, (c+1)*P) in the path order of FilterBank::paths.
FeatureVector stsg_moments(const Matrix& recording, const StsgConfig& cfg);

/// Same, reusing a prebuilt filter bank whose length must equal T.
FeatureVector stsg_moments(const Matrix& recording, const StsgConfig& cfg, const FilterBank& fb);

/// Extracts moments for many recordings of equal length on cfg.threads
/// workers; row i of the result belongs to recordings[i].
Matrix stsg_moments_batch(const std::vector<Matrix>& recordings, const StsgConfig& cfg,
                          FeatureLayout* layout = nullptr);

struct StaticFeatures {
  double heater_voltage = 0.0;
  double airflow_rpm = 0.0;
  double nominal_ppm = 0.0;
};

struct LocationFeatures {
  double x_pos = 0.0;
  double x_board = 0.0;
};

/// moments | static(3) | location(2); disabled blocks are omitted. A block
/// that is enabled but not supplied raises InvalidArgument.
FeatureVector assemble_features(const FeatureVector& moments, bool include_static,
                                bool include_location,
                                const std::optional<StaticFeatures>& statics = std::nullopt,
                                const std::optional<LocationFeatures>& location = std::nullopt);

}  // namespace stsg
