#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfcn/graph.hpp"
#include "mfcn/harness.hpp"
#include "mfcn/manifold.hpp"
#include "mfcn/net.hpp"
#include "mfcn/spectral.hpp"

namespace mfcn::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr const char* kCloudFormat = "mfcn-cloud v1";

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& bytes);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);
std::string file_hash(const fs::path& path);

// Point clouds --------------------------------------------------------------

/// Header "# mfcn-cloud v1, kind=<k>, d=<d>, D=<D>, seed=<s>", then one row per
/// point: ambient coordinates, then intrinsic coordinates.
std::string cloud_to_csv(const PointCloud& cloud);
PointCloud cloud_from_csv(const std::string& text);
void write_cloud(const fs::path& path, const PointCloud& cloud);
PointCloud read_cloud(const fs::path& path);

// Generic numeric CSV (lines starting with '#' are comments) ----------------

std::string matrix_to_csv(const MatrixXd& m, const std::string& comment = {});
MatrixXd matrix_from_csv(const std::string& text);
void write_csv(const fs::path& path, const MatrixXd& m, const std::string& comment = {});
MatrixXd read_csv(const fs::path& path);

// MFCNMAT1 container --------------------------------------------------------

enum class MatrixKind : std::uint8_t { dense = 0, sparse = 1 };

struct MatrixRecord {
  MatrixKind kind = MatrixKind::dense;
  MatrixXd dense;
  SparseMatrixXd sparse;
  Index rows() const { return kind == MatrixKind::dense ? dense.rows() : sparse.rows(); }
  Index cols() const { return kind == MatrixKind::dense ? dense.cols() : sparse.cols(); }
  MatrixXd to_dense() const { return kind == MatrixKind::dense ? dense : MatrixXd(sparse); }
};

/// "MFCNMAT1", u32 version, u8 kind, u64 rows, u64 cols, then row-major f64
/// (dense) or u64 nnz + (u64 i, u64 j, f64 v) sorted by (i, j) (sparse).
/// All little-endian.
std::string encode_matrix(const MatrixXd& m);
std::string encode_matrix(const SparseMatrixXd& m);
/// Decodes one record starting at `offset`, advancing it.
MatrixRecord decode_matrix(const std::string& bytes, std::size_t& offset);

void write_matrix(const fs::path& path, const MatrixXd& m);
void write_matrix(const fs::path& path, const SparseMatrixXd& m);
MatrixRecord read_matrix(const fs::path& path);

// Graphs and eigensystems ---------------------------------------------------

Json graph_meta_to_json(const GraphMeta& meta);
GraphMeta graph_meta_from_json(const Json& j);

/// Stores L itself (dense or sparse to match the family) plus a JSON sidecar.
void write_graph(const fs::path& path, const GraphLaplacian& L);
/// Rebuilds a GraphLaplacian with scale 1 from a stored Laplacian matrix.
GraphLaplacian laplacian_from_matrix(const MatrixRecord& rec);
GraphLaplacian read_graph(const fs::path& path);

/// Eigenvalues (kappa x 1) then eigenvectors (n x kappa), two MFCNMAT1 records;
/// sidecar {graph_hash, kappa, residual_max, complete}.
void write_eigensystem(const fs::path& path, const EigenSystem& es, const std::string& graph_hash);
EigenSystem read_eigensystem(const fs::path& path);

fs::path sidecar_path(const fs::path& path);

// Networks ------------------------------------------------------------------

Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);
Json network_to_json(const NetworkSpec& net);
NetworkSpec network_from_json(const Json& j);
void write_network(const fs::path& path, const NetworkSpec& net);
NetworkSpec read_network(const fs::path& path);

// Sweeps --------------------------------------------------------------------

Json sweep_config_to_json(const SweepConfig& cfg);
SweepConfig sweep_config_from_json(const Json& j);
Json report_to_json(const ConvergenceReport& report);
/// Columns: family, manifold, n, trial, metric, value, flags.
std::string report_to_csv(const ConvergenceReport& report);
/// One table per fitted metric: n, median, fitted line.
void write_plot_data(const fs::path& dir, const ConvergenceReport& report);

// Manifests -----------------------------------------------------------------

struct Manifest {
  std::string command;
  Json config = Json::object();
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
};

/// Writes manifest.json next to the outputs: resolved config, input hashes,
/// output hashes, and format versions.
void write_manifest(const fs::path& dir, const Manifest& m);

std::string version_string();

}  // namespace mfcn::io
