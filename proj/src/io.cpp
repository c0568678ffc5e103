#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mfcn/io.hpp"

namespace mfcn::io {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) throw IoError("empty numeric field");
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  if (*first == '+') ++first;
  double v = 0.0;
  const auto r = std::from_chars(first, last, v);
  if (r.ec != std::errc() || r.ptr != last) throw IoError("bad numeric field '" + s + "'");
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_hash(const fs::path& path) { return hash_hex(fnv1a64(read_file(path))); }

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string cloud_to_csv(const PointCloud& cloud) {
  std::ostringstream os;
  os << "# " << kCloudFormat << ", kind=" << to_string(cloud.manifold.kind)
     << ", d=" << cloud.manifold.intrinsic_dim() << ", D=" << cloud.manifold.ambient_dim()
     << ", seed=" << cloud.seed << ", density=" << to_string(cloud.manifold.density) << "\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    bool first = true;
    for (Index c = 0; c < cloud.points.cols(); ++c, first = false)
      os << (first ? "" : ",") << format_double(cloud.points(i, c));
    for (Index c = 0; c < cloud.intrinsic.cols(); ++c) os << "," << format_double(cloud.intrinsic(i, c));
    os << "\n";
  }
  return os.str();
}

PointCloud cloud_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
    throw IoError("cloud file lacks the '# mfcn-cloud v1' header");
  const auto fields = split(header.substr(2), ',');
  if (fields.empty() || trim(fields[0]) != kCloudFormat) throw IoError("unsupported cloud format '" + header + "'");
  ManifoldSpec spec;
  std::uint64_t seed = 0;
  int d = -1, D = -1;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const std::string f = trim(fields[i]);
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw IoError("bad cloud header field '" + f + "'");
    const std::string key = f.substr(0, eq), val = f.substr(eq + 1);
    if (key == "kind") spec.kind = parse_manifold_kind(val);
    else if (key == "d") d = std::stoi(val);
    else if (key == "D") D = std::stoi(val);
    else if (key == "seed") seed = std::stoull(val);
    else if (key == "density") spec.density = parse_density(val);
  }
  if (d != spec.intrinsic_dim() || D != spec.ambient_dim()) throw IoError("cloud header dimensions do not match kind");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != d + D)
      throw IoError("cloud row has " + std::to_string(cells.size()) + " fields, expected " + std::to_string(d + D));
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(parse_double(c));
    rows.push_back(std::move(r));
  }
  PointCloud cloud;
  cloud.manifold = spec;
  cloud.seed = seed;
  cloud.points.resize(static_cast<Index>(rows.size()), D);
  cloud.intrinsic.resize(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < D; ++c) cloud.points(static_cast<Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    for (int c = 0; c < d; ++c) cloud.intrinsic(static_cast<Index>(i), c) = rows[i][static_cast<std::size_t>(D + c)];
  }
  return cloud;
}

void write_cloud(const fs::path& path, const PointCloud& cloud) { write_file(path, cloud_to_csv(cloud)); }
PointCloud read_cloud(const fs::path& path) { return cloud_from_csv(read_file(path)); }

std::string matrix_to_csv(const MatrixXd& m, const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) os << "# " << comment << "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << "\n";
  }
  return os.str();
}

MatrixXd matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> r;
    for (const auto& c : split(line, ',')) r.push_back(parse_double(c));
    if (!rows.empty() && r.size() != rows.front().size()) throw IoError("ragged CSV matrix");
    rows.push_back(std::move(r));
  }
  const Index cols = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  MatrixXd m(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < cols; ++j) m(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return m;
}

void write_csv(const fs::path& path, const MatrixXd& m, const std::string& comment) {
  write_file(path, matrix_to_csv(m, comment));
}
MatrixXd read_csv(const fs::path& path) { return matrix_from_csv(read_file(path)); }

// ---------------------------------------------------------------------------
// MFCNMAT1

namespace {

constexpr char kMagic[8] = {'M', 'F', 'C', 'N', 'M', 'A', 'T', '1'};

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
  } else {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T get(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw IoError("truncated MFCNMAT1 payload");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  off += sizeof(T);
  return v;
}

std::string header(MatrixKind kind, Index rows, Index cols) {
  std::string out(kMagic, 8);
  put<std::uint32_t>(out, kMatrixFormatVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(rows));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(cols));
  return out;
}

}  // namespace

std::string encode_matrix(const MatrixXd& m) {
  std::string out = header(MatrixKind::dense, m.rows(), m.cols());
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 8);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
  return out;
}

std::string encode_matrix(const SparseMatrixXd& m) {
  std::vector<std::tuple<Index, Index, double>> trip;
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrixXd::InnerIterator it(m, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  std::sort(trip.begin(), trip.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::string out = header(MatrixKind::sparse, m.rows(), m.cols());
  put<std::uint64_t>(out, trip.size());
  for (const auto& [i, j, v] : trip) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(i));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(j));
    put<double>(out, v);
  }
  return out;
}

MatrixRecord decode_matrix(const std::string& bytes, std::size_t& off) {
  if (off + 8 > bytes.size() || std::memcmp(bytes.data() + off, kMagic, 8) != 0)
    throw IoError("missing MFCNMAT1 magic");
  off += 8;
  const auto version = get<std::uint32_t>(bytes, off);
  if (version != kMatrixFormatVersion) throw IoError("unsupported MFCNMAT1 version " + std::to_string(version));
  const auto kind = get<std::uint8_t>(bytes, off);
  const auto rows = static_cast<Index>(get<std::uint64_t>(bytes, off));
  const auto cols = static_cast<Index>(get<std::uint64_t>(bytes, off));
  MatrixRecord rec;
  if (kind == 0) {
    rec.kind = MatrixKind::dense;
    if (bytes.size() - off < static_cast<std::size_t>(rows * cols) * 8) throw IoError("truncated MFCNMAT1 payload");
    rec.dense.resize(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) rec.dense(i, j) = get<double>(bytes, off);
  } else if (kind == 1) {
    rec.kind = MatrixKind::sparse;
    const auto nnz = get<std::uint64_t>(bytes, off);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nnz);
    for (std::uint64_t k = 0; k < nnz; ++k) {
      const auto i = static_cast<Index>(get<std::uint64_t>(bytes, off));
      const auto j = static_cast<Index>(get<std::uint64_t>(bytes, off));
      const double v = get<double>(bytes, off);
      if (i >= rows || j >= cols) throw IoError("MFCNMAT1 triplet index out of range");
      trip.emplace_back(i, j, v);
    }
    rec.sparse.resize(rows, cols);
    rec.sparse.setFromTriplets(trip.begin(), trip.end());
  } else {
    throw IoError("unknown MFCNMAT1 storage kind");
  }
  return rec;
}

void write_matrix(const fs::path& path, const MatrixXd& m) { write_file(path, encode_matrix(m)); }
void write_matrix(const fs::path& path, const SparseMatrixXd& m) { write_file(path, encode_matrix(m)); }

MatrixRecord read_matrix(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::size_t off = 0;
  return decode_matrix(bytes, off);
}

// ---------------------------------------------------------------------------

fs::path sidecar_path(const fs::path& path) {
  fs::path p = path;
  p += ".json";
  return p;
}

Json graph_meta_to_json(const GraphMeta& m) {
  Json j;
  j["family"] = to_string(m.family);
  j["param"] = m.param;
  j["intrinsic_dim"] = m.intrinsic_dim;
  j["kernel"] = to_string(m.kernel.kind);
  j["scale"] = m.scale;
  j["disconnected"] = m.disconnected;
  j["components"] = m.components;
  j["edges"] = m.edges;
  return j;
}

GraphMeta graph_meta_from_json(const Json& j) {
  GraphMeta m;
  m.family = parse_graph_family(j.at("family").get<std::string>());
  m.param = j.at("param").get<double>();
  m.intrinsic_dim = j.at("intrinsic_dim").get<int>();
  m.kernel.kind = parse_kernel_kind(j.at("kernel").get<std::string>());
  m.scale = j.at("scale").get<double>();
  m.disconnected = j.value("disconnected", false);
  m.components = j.value("components", Index{1});
  m.edges = j.value("edges", Index{0});
  return m;
}

void write_graph(const fs::path& path, const GraphLaplacian& L) {
  if (L.is_dense())
    write_matrix(path, L.to_dense());
  else
    write_matrix(path, L.to_sparse());
  Json side = graph_meta_to_json(L.meta());
  side["n"] = L.size();
  side["storage"] = L.is_dense() ? "dense" : "sparse";
  write_file(sidecar_path(path), side.dump(2) + "\n");
}

GraphLaplacian laplacian_from_matrix(const MatrixRecord& rec) {
  if (rec.rows() != rec.cols()) throw ContractError("stored Laplacian is not square");
  GraphMeta meta;
  meta.scale = 1.0;
  if (rec.kind == MatrixKind::dense) {
    MatrixXd W = -rec.dense;
    W.diagonal().setZero();
    meta.family = GraphFamily::dense_gaussian;
    meta.components = count_components(W.sparseView());
    meta.disconnected = meta.components > 1;
    GraphLaplacian L(std::move(W), meta);
    if ((L.degrees() - rec.dense.diagonal()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, rec.dense.cwiseAbs().maxCoeff()))
      throw ContractError("stored matrix rows do not sum to zero (not a graph Laplacian)");
    return L;
  }
  SparseMatrixXd W = -rec.sparse;
  W.prune([](Index r, Index c, double) { return r != c; });
  meta.family = GraphFamily::epsilon;
  meta.components = count_components(W);
  meta.disconnected = meta.components > 1;
  return GraphLaplacian(std::move(W), meta);
}

GraphLaplacian read_graph(const fs::path& path) {
  GraphLaplacian L = laplacian_from_matrix(read_matrix(path));
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    GraphMeta stored = graph_meta_from_json(Json::parse(read_file(side)));
    // The stored matrix already carries the scale.
    GraphMeta meta = L.meta();
    meta.family = stored.family;
    meta.param = stored.param;
    meta.intrinsic_dim = stored.intrinsic_dim;
    meta.kernel = stored.kernel;
    meta.edges = stored.edges;
    if (L.is_dense()) return GraphLaplacian(L.dense_weights(), meta);
    return GraphLaplacian(L.sparse_weights(), meta);
  }
  return L;
}

void write_eigensystem(const fs::path& path, const EigenSystem& es, const std::string& graph_hash) {
  std::string bytes = encode_matrix(MatrixXd(es.values));
  bytes += encode_matrix(es.vectors);
  write_file(path, bytes);
  Json side;
  side["graph_hash"] = graph_hash;
  side["kappa"] = es.count();
  side["n"] = es.size();
  side["residual_max"] = es.residual_max;
  side["complete"] = es.complete;
  write_file(sidecar_path(path), side.dump(2) + "\n");
}

EigenSystem read_eigensystem(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::size_t off = 0;
  const MatrixRecord vals = decode_matrix(bytes, off);
  const MatrixRecord vecs = decode_matrix(bytes, off);
  EigenSystem es;
  es.values = vals.to_dense().col(0);
  es.vectors = vecs.to_dense();
  if (es.vectors.cols() != es.values.size()) throw IoError("eigensystem file has mismatched records");
  es.complete = es.count() == es.size();
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    const Json j = Json::parse(read_file(side));
    es.residual_max = j.value("residual_max", 0.0);
    es.complete = j.value("complete", es.complete);
  }
  return es;
}

// ---------------------------------------------------------------------------

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("matrix must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& r = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(r.size()) != cols) throw IoError("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(i, c) = r.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Json network_to_json(const NetworkSpec& net) {
  Json j;
  j["format"] = "mfcn-net v1";
  j["input_channels"] = net.input_channels;
  Json layers = Json::array();
  for (const auto& l : net.layers) {
    Json lj;
    lj["in_channels"] = l.in_channels;
    lj["num_filters"] = l.num_filters;
    lj["combine_width"] = l.combine_width;
    lj["cross_width"] = l.cross_width;
    Json filters = Json::array();
    for (const auto& f : l.filters) filters.push_back(f.describe());
    lj["filters"] = filters;
    Json theta = Json::array();
    for (const auto& t : l.theta) theta.push_back(matrix_to_json(t));
    lj["theta"] = theta;
    Json alpha = Json::array();
    for (const auto& a : l.alpha) alpha.push_back(matrix_to_json(a));
    lj["alpha"] = alpha;
    lj["activation"] = to_string(l.activation);
    layers.push_back(std::move(lj));
  }
  j["layers"] = layers;
  return j;
}

NetworkSpec network_from_json(const Json& j) {
  NetworkSpec net;
  try {
    net.input_channels = j.at("input_channels").get<Index>();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.in_channels = lj.at("in_channels").get<Index>();
      l.num_filters = lj.at("num_filters").get<Index>();
      l.combine_width = lj.at("combine_width").get<Index>();
      l.cross_width = lj.at("cross_width").get<Index>();
      for (const auto& f : lj.at("filters")) l.filters.push_back(FilterSpec::parse(f.get<std::string>()));
      for (const auto& t : lj.at("theta")) l.theta.push_back(matrix_from_json(t));
      for (const auto& a : lj.at("alpha")) l.alpha.push_back(matrix_from_json(a));
      l.activation = parse_activation(lj.value("activation", std::string("relu")));
      net.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed network JSON: ") + e.what());
  }
  net.validate();
  return net;
}

void write_network(const fs::path& path, const NetworkSpec& net) {
  write_file(path, network_to_json(net).dump(2) + "\n");
}

NetworkSpec read_network(const fs::path& path) {
  try {
    return network_from_json(Json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("network JSON parse error: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Json sweep_config_to_json(const SweepConfig& c) {
  Json j;
  j["manifold"] = to_string(c.manifold.kind);
  j["density"] = to_string(c.manifold.density);
  j["family"] = to_string(c.family);
  j["kernel"] = to_string(c.kernel.kind);
  j["ns"] = c.ns;
  j["trials"] = c.trials;
  j["kappa"] = c.kappa;
  j["master_seed"] = c.master_seed;
  if (c.bandwidth_constant)
    j["bandwidth_constant"] = *c.bandwidth_constant;
  else
    j["bandwidth_constant"] = "AUTO";
  j["resolved_bandwidth_constant"] = c.resolved_constant();
  j["calibrate"] = c.resolved_calibrate();
  Json filters = Json::array();
  for (const auto& f : c.filters) filters.push_back(f.describe());
  j["filters"] = filters;
  j["gamma_random_pairs"] = c.gamma_random_pairs;
  j["threads"] = c.threads;
  if (c.synthetic_rate) j["synthetic_rate"] = *c.synthetic_rate;
  j["eig"] = {{"block", c.eig.block}, {"max_basis", c.eig.max_basis}, {"max_restarts", c.eig.max_restarts},
              {"tol", c.eig.tol}};
  return j;
}

SweepConfig sweep_config_from_json(const Json& j) {
  SweepConfig c;
  try {
    if (j.contains("manifold")) c.manifold.kind = parse_manifold_kind(j["manifold"].get<std::string>());
    if (j.contains("density")) c.manifold.density = parse_density(j["density"].get<std::string>());
    if (j.contains("family")) c.family = parse_graph_family(j["family"].get<std::string>());
    if (j.contains("kernel")) c.kernel.kind = parse_kernel_kind(j["kernel"].get<std::string>());
    if (j.contains("ns")) c.ns = j["ns"].get<std::vector<Index>>();
    if (j.contains("trials")) c.trials = j["trials"].get<int>();
    if (j.contains("kappa")) c.kappa = j["kappa"].get<Index>();
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("bandwidth_constant")) {
      const auto& b = j["bandwidth_constant"];
      if (b.is_string()) {
        if (b.get<std::string>() != "AUTO") throw ConfigError("bandwidth_constant must be a number or \"AUTO\"");
      } else {
        c.bandwidth_constant = b.get<double>();
      }
    }
    if (j.contains("calibrate")) c.calibrate = j["calibrate"].get<bool>();
    if (j.contains("filters")) {
      c.filters.clear();
      for (const auto& f : j["filters"]) c.filters.push_back(FilterSpec::parse(f.get<std::string>()));
    }
    if (j.contains("gamma_random_pairs")) c.gamma_random_pairs = j["gamma_random_pairs"].get<int>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("synthetic_rate")) c.synthetic_rate = j["synthetic_rate"].get<double>();
    if (j.contains("eig")) {
      const auto& e = j["eig"];
      c.eig.block = e.value("block", c.eig.block);
      c.eig.max_basis = e.value("max_basis", c.eig.max_basis);
      c.eig.max_restarts = e.value("max_restarts", c.eig.max_restarts);
      c.eig.tol = e.value("tol", c.eig.tol);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed sweep config: ") + e.what());
  }
  return c;
}

Json report_to_json(const ConvergenceReport& r) {
  Json j;
  j["config"] = sweep_config_to_json(r.config);
  j["bandwidth_constant"] = r.bandwidth_constant;
  j["calibrated"] = r.calibrated;
  j["eigen_scale"] = r.calibration;
  j["disconnected_trials"] = r.disconnected;
  j["runtime_seconds"] = r.runtime_seconds;
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json sj;
    sj["n"] = s.n;
    sj["trial"] = s.trial;
    sj["seed"] = s.seed;
    sj["param"] = s.param;
    sj["kappa"] = s.kappa;
    sj["alpha"] = s.alpha;
    sj["beta"] = s.beta;
    sj["gamma"] = s.gamma;
    sj["calibration"] = s.calibration;
    sj["disconnected"] = s.disconnected;
    sj["cluster_mismatch"] = s.cluster_mismatch;
    sj["residual_max"] = s.residual_max;
    sj["gamma_pairs"] = s.gamma_pairs;
    sj["gamma_violations"] = s.gamma_violations;
    sj["eigenvalues"] = std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
    Json fs_ = Json::array();
    for (const auto& f : s.filters)
      fs_.push_back({{"filter", f.filter}, {"error", f.error}, {"bound", f.bound}, {"hypotheses", f.hypotheses},
                     {"truncated", f.truncated}});
    sj["filters"] = fs_;
    samples.push_back(std::move(sj));
  }
  j["samples"] = samples;
  Json fits = Json::array();
  for (const auto& f : r.fits)
    fits.push_back({{"metric", f.metric},
                    {"slope", f.fit.slope},
                    {"intercept", f.fit.intercept},
                    {"stderr", f.fit.stderr_slope},
                    {"r2", f.fit.r2},
                    {"count", f.fit.count},
                    {"dropped_nonpositive", f.fit.dropped_nonpositive},
                    {"target_slope", f.target_slope}});
  j["fits"] = fits;
  return j;
}

std::string report_to_csv(const ConvergenceReport& r) {
  std::ostringstream os;
  os << "family,manifold,n,trial,metric,value,flags\n";
  const std::string fam = to_string(r.config.family), man = to_string(r.config.manifold.kind);
  for (const auto& s : r.samples) {
    std::string flags;
    auto add = [&](const char* f) { flags += (flags.empty() ? "" : "|") + std::string(f); };
    if (s.disconnected) add("disconnected");
    if (s.cluster_mismatch) add("cluster_mismatch");
    if (s.gamma_violations > 0) add("gamma_bound_violation");
    auto row = [&](const std::string& metric, double v, const std::string& extra = {}) {
      std::string f = flags;
      if (!extra.empty()) f += (f.empty() ? "" : "|") + extra;
      os << fam << "," << man << "," << s.n << "," << s.trial << "," << metric << "," << format_double(v) << ","
         << f << "\n";
    };
    row("alpha", s.alpha);
    row("beta", s.beta);
    row("gamma", s.gamma);
    for (const auto& f : s.filters) {
      std::string extra = f.hypotheses ? "hypotheses" : "";
      if (f.truncated) extra += std::string(extra.empty() ? "" : "|") + "truncated";
      row("filter_error[" + f.filter + "]", f.error, extra);
      row("filter_bound[" + f.filter + "]", f.bound, extra);
    }
  }
  return os.str();
}

void write_plot_data(const fs::path& dir, const ConvergenceReport& r) {
  for (const std::string metric : {"alpha", "beta", "gamma", "gamma_sq", "filter_error"}) {
    const auto med = r.medians(metric);
    if (med.empty()) continue;
    const MetricFit* fit = r.fit(metric);
    std::ostringstream os;
    os << "n,log_n,median,log_median,fit,log_fit\n";
    for (const auto& [n, v] : med) {
      const double ln = std::log(static_cast<double>(n));
      os << n << "," << format_double(ln) << "," << format_double(v) << ","
         << format_double(v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity()) << ",";
      if (fit) {
        const double lf = fit->fit.intercept + fit->fit.slope * ln;
        os << format_double(std::exp(lf)) << "," << format_double(lf);
      } else {
        os << ",";
      }
      os << "\n";
    }
    write_file(dir / ("plot_" + metric + ".csv"), os.str());
  }
}

// ---------------------------------------------------------------------------

std::string version_string() {
  return std::string("mfcn ") + MFCN_VERSION_STRING + " (matrix format MFCNMAT1 v" +
         std::to_string(kMatrixFormatVersion) + ", cloud format " + kCloudFormat + ", net format mfcn-net v1)";
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  Json j;
  j["command"] = m.command;
  j["version"] = MFCN_VERSION_STRING;
  j["formats"] = {{"matrix", "MFCNMAT1 v" + std::to_string(kMatrixFormatVersion)},
                  {"cloud", kCloudFormat},
                  {"net", "mfcn-net v1"}};
  j["config"] = m.config;
  Json inputs = Json::object();
  for (const auto& p : m.inputs) inputs[p.string()] = file_hash(p);
  j["inputs"] = inputs;
  Json outputs = Json::object();
  for (const auto& p : m.outputs)
    if (fs::exists(p)) outputs[p.string()] = file_hash(p);
  j["outputs"] = outputs;
  std::string all;
  for (const auto& [k, v] : inputs.items()) all += k + "=" + v.get<std::string>() + ";";
  j["input_hash"] = hash_hex(fnv1a64(all + j["config"].dump()));
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace mfcn::io
