#include "stsg/stsg.hpp"

#include <sstream>

#include "stsg/parallel.hpp"

namespace stsg {

std::size_t FeatureLayout::size() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size;
  return n;
}

std::size_t FeatureLayout::block_size(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b.size;
  }
  return 0;
}

std::size_t FeatureLayout::offset(const std::string& name) const {
  std::size_t off = 0;
  for (const auto& b : blocks) {
    if (b.name == name) return off;
    off += b.size;
  }
  throw InvalidArgument("feature layout has no block '" + name + "'");
}

bool FeatureLayout::has(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

std::string FeatureLayout::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out << ' ';
    out << blocks[i].name << '=' << blocks[i].size;
  }
  return out.str();
}

bool operator==(const FeatureLayout& a, const FeatureLayout& b) {
  if (a.blocks.size() != b.blocks.size()) return false;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    if (a.blocks[i].name != b.blocks[i].name || a.blocks[i].size != b.blocks[i].size) return false;
  }
  return a.description == b.description;
}

FilterBankParams StsgConfig::bank(std::size_t length) const {
  return FilterBankParams{length, max_log_scale, q1, q2, rule};
}

namespace {

FeatureLayout moments_layout(const FolderDecomposition& dec, const FilterBank& fb, int max_order) {
  const auto channels = haar_channel_layout(dec);
  const auto paths = fb.paths(max_order);
  FeatureLayout layout;
  layout.blocks.push_back({"moments", channels.size() * paths.size()});
  std::ostringstream ch;
  ch << "channels " << channels.size() << ':';
  for (const auto& c : channels) {
    ch << ' ' << 'L' << c.level << 'F' << c.folder << (c.coefficient == 0 ? 's' : 'w');
  }
  std::ostringstream pa;
  pa << "paths " << paths.size() << ':';
  for (const auto& p : paths) pa << ' ' << p.label();
  layout.description = {"order channel-major path-minor", ch.str(), pa.str()};
  return layout;
}

void check_config(const Matrix& recording, const StsgConfig& cfg) {
  if (!cfg.decomposition) throw InvalidArgument("stsg_moments: configuration has no decomposition");
  if (static_cast<std::size_t>(recording.cols()) != cfg.decomposition->vertex_count()) {
    throw DimensionError("stsg_moments: recording width " + std::to_string(recording.cols()) +
                         " != decomposition vertex count " +
                         std::to_string(cfg.decomposition->vertex_count()));
  }
}

}  // namespace

FeatureVector stsg_moments(const Matrix& recording, const StsgConfig& cfg, const FilterBank& fb) {
  check_config(recording, cfg);
  if (static_cast<std::size_t>(recording.rows()) != fb.length()) {
    throw DimensionError("stsg_moments: recording length differs from filter bank length");
  }
  const auto channels = haar_analyze_series(*cfg.decomposition, recording);
  const Matrix per_channel =
      scattering_moments_batch(channels.values, fb, cfg.max_order, cfg.threads);
  FeatureVector out;
  // Column-major storage makes the flattened matrix channel-major.
  out.values = Eigen::Map<const Vector>(per_channel.data(), per_channel.size());
  out.layout = moments_layout(*cfg.decomposition, fb, cfg.max_order);
  return out;
}

FeatureVector stsg_moments(const Matrix& recording, const StsgConfig& cfg) {
  check_config(recording, cfg);
  const auto T = static_cast<std::size_t>(recording.rows());
  if (T < 4 || cfg.max_log_scale >= 63 || (std::size_t{1} << cfg.max_log_scale) > T) {
    throw InvalidArgument("stsg_moments: recording of length " + std::to_string(T) +
                          " is too short for J = " + std::to_string(cfg.max_log_scale));
  }
  const FilterBank fb(cfg.bank(T));
  return stsg_moments(recording, cfg, fb);
}

Matrix stsg_moments_batch(const std::vector<Matrix>& recordings, const StsgConfig& cfg,
                          FeatureLayout* layout) {
  if (recordings.empty()) return Matrix(0, 0);
  const auto T = static_cast<std::size_t>(recordings.front().rows());
  for (const auto& r : recordings) {
    if (static_cast<std::size_t>(r.rows()) != T) {
      throw DimensionError("stsg_moments_batch: recordings must share one length");
    }
    check_config(r, cfg);
  }
  const FilterBank fb(cfg.bank(T));
  StsgConfig inner = cfg;
  inner.threads = 1;
  const auto first = stsg_moments(recordings.front(), inner, fb);
  if (layout) *layout = first.layout;
  Matrix out(static_cast<Eigen::Index>(recordings.size()), first.values.size());
  out.row(0) = first.values.transpose();
  parallel_for(recordings.size() - 1, cfg.threads, [&](std::size_t i) {
    out.row(static_cast<Eigen::Index>(i + 1)) =
        stsg_moments(recordings[i + 1], inner, fb).values.transpose();
  });
  return out;
}

FeatureVector assemble_features(const FeatureVector& moments, bool include_static,
                                bool include_location,
                                const std::optional<StaticFeatures>& statics,
                                const std::optional<LocationFeatures>& location) {
  if (include_static && !statics) {
    throw InvalidArgument("assemble_features: static features enabled but not supplied");
  }
  if (include_location && !location) {
    throw InvalidArgument("assemble_features: location features enabled but not supplied");
  }
  FeatureVector out = moments;
  const auto base = moments.values.size();
  Eigen::Index extra = (include_static ? 3 : 0) + (include_location ? 2 : 0);
  out.values.conservativeResize(base + extra);
  Eigen::Index at = base;
  if (include_static) {
    out.values(at++) = statics->heater_voltage;
    out.values(at++) = statics->airflow_rpm;
    out.values(at++) = statics->nominal_ppm;
    out.layout.blocks.push_back({"static", 3});
  }
  if (include_location) {
    out.values(at++) = location->x_pos;
    out.values(at++) = location->x_board;
    out.layout.blocks.push_back({"location", 2});
  }
  return out;
}

}  // namespace stsg
