#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "ccae/channel.hpp"
#include "ccae/constraints.hpp"
#include "ccae/features.hpp"
#include "ccae/metrics.hpp"
#include "ccae/nn.hpp"
#include "ccae/scenario.hpp"

namespace ccae::io {

// Text artifacts may start with a `# config_hash=<hex>` line; readers skip
// `#` lines and expose the hash when present. Decimal values are written as
// shortest round-trip text.

struct Provenance {
  std::optional<std::string> config_hash;
};

void write_positions(const std::filesystem::path& path, const UePlacement& placement,
                     const Provenance& provenance = {});
UePlacement read_positions(const std::filesystem::path& path, Provenance* provenance = nullptr);

/// Binary CSI: "CCSI", u16 version 1, u32 N, u32 M, N*M (re, im) float32 pairs,
/// little endian, row-major.
void write_csi_binary(const std::filesystem::path& path, const CsiMatrix& csi);
CsiMatrix read_csi_binary(const std::filesystem::path& path);

void write_csi_csv(const std::filesystem::path& path, const CsiMatrix& csi,
                   const Provenance& provenance = {});
CsiMatrix read_csi_csv(const std::filesystem::path& path, Provenance* provenance = nullptr);

/// Dispatches on the file's leading bytes.
CsiMatrix read_csi(const std::filesystem::path& path);

void write_features(const std::filesystem::path& path, const FeatureSet& features,
                    const Provenance& provenance = {});
FeatureSet read_features(const std::filesystem::path& path, Provenance* provenance = nullptr);

/// Two-dimensional anchors only (anchor_u, anchor_v columns).
void write_constraints(const std::filesystem::path& path, const ConstraintSet& set,
                       const Provenance& provenance = {});
ConstraintSet read_constraints(const std::filesystem::path& path,
                               Provenance* provenance = nullptr);

struct ChartRow {
  double u = 0.0;
  double v = 0.0;
  double true_x = 0.0;
  double true_y = 0.0;
  bool is_anchor = false;
  long traj_order = -1;
};

/// `embedding` is N x 2 and aligned with `placement`.
void write_chart(const std::filesystem::path& path, const Eigen::MatrixXd& embedding,
                 const UePlacement& placement, const Provenance& provenance = {});

struct Chart {
  Eigen::MatrixXd embedding;    // N x 2
  Eigen::MatrixXd true_xy;      // N x 2
  std::vector<std::size_t> anchor_indices;
  std::vector<std::size_t> trajectory_indices;  // in path order
  Provenance provenance;
};
Chart read_chart(const std::filesystem::path& path);

/// `metric,K,value` rows; TW/CT carry K, KS leaves it empty. Metric names get
/// `_feature` appended for feature-space references.
void write_report(const std::filesystem::path& path, std::span<const MetricsReport> reports,
                  const Provenance& provenance = {});
std::string format_report(const MetricsReport& report);

/// "CCNN", u16 version 1, u32 layer count, then per layer u32 rows, u32 cols,
/// u8 activation, rows*cols float64 weights row-major, rows float64 biases.
void write_network(const std::filesystem::path& path, const Network& net);
Network read_network(const std::filesystem::path& path);

}  // namespace ccae::io
