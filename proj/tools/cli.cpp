#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>

#include "mfcn/graph.hpp"
#include "mfcn/harness.hpp"
#include "mfcn/io.hpp"
#include "mfcn/manifold.hpp"
#include "mfcn/net.hpp"
#include "mfcn/scattering.hpp"
#include "mfcn/spectral.hpp"

namespace mfcn::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const fs::path& out) {
  const fs::path parent = fs::absolute(out).parent_path();
  fs::create_directories(parent);
  return parent;
}

std::string abs_str(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

void manifest(const fs::path& dir, const std::string& command, Json args, Json resolved,
              const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  io::Manifest m;
  m.command = command;
  m.config = Json::object();
  m.config["args"] = std::move(args);
  m.config["resolved"] = std::move(resolved);
  for (const auto& p : inputs) m.inputs.push_back(fs::absolute(p).lexically_normal());
  for (const auto& p : outputs) m.outputs.push_back(fs::absolute(p).lexically_normal());
  io::write_manifest(dir, m);
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError("missing " + what + " '" + p.string() + "'");
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string manifold = "circle";
  std::string density = "uniform";
  Index n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  ManifoldSpec spec{parse_manifold_kind(a.manifold), parse_density(a.density)};
  if (a.n < 1) throw UsageError("--n must be positive");
  const PointCloud cloud = sample_points(spec, a.n, a.seed);
  io::write_cloud(a.out, cloud);
  Json args = {{"manifold", a.manifold}, {"density", a.density}, {"n", a.n}, {"seed", a.seed}, {"out", abs_str(a.out)}};
  Json resolved = {{"manifold", to_string(spec.kind)},
                   {"density", to_string(spec.density)},
                   {"intrinsic_dim", spec.intrinsic_dim()},
                   {"ambient_dim", spec.ambient_dim()}};
  manifest(output_dir(a.out), "sample", args, resolved, {}, {a.out});
  out << "wrote " << cloud.size() << " points to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// graph

struct GraphArgs {
  std::string family = "epsilon";
  std::string param = "AUTO";
  std::string kernel = "indicator";
  std::string input;
  std::string out;
};

GraphLaplacian build_graph(const PointCloud& cloud, GraphFamily family, const std::string& param, KernelSpec kernel,
                           Json& resolved) {
  const int d = cloud.manifold.intrinsic_dim();
  double value = 0.0;
  if (param == "AUTO" || param == "auto") {
    const double c = default_bandwidth_constant(cloud.manifold.kind, family);
    value = bandwidth_schedule(family, cloud.size(), d, c);
    resolved["auto_constant"] = c;
  } else {
    try {
      value = io::parse_double(param);
    } catch (const IoError&) {
      throw UsageError("--param must be AUTO or a number, got '" + param + "'");
    }
  }
  resolved["param"] = value;
  switch (family) {
    case GraphFamily::dense_gaussian: return build_dense_gaussian(cloud, value, d);
    case GraphFamily::epsilon: return build_epsilon(cloud, value, d, kernel);
    case GraphFamily::knn: return build_knn(cloud, static_cast<Index>(std::llround(value)), d, kernel);
  }
  throw UsageError("unknown family");
}

int cmd_graph(const GraphArgs& a, std::ostream& out) {
  require_file(a.input, "point cloud");
  const PointCloud cloud = io::read_cloud(a.input);
  const GraphFamily family = parse_graph_family(a.family);
  KernelSpec kernel{parse_kernel_kind(a.kernel)};
  Json resolved = {{"family", to_string(family)}, {"kernel", to_string(kernel.kind)}};
  const GraphLaplacian L = build_graph(cloud, family, a.param, kernel, resolved);
  io::write_graph(a.out, L);
  resolved["scale"] = L.meta().scale;
  resolved["components"] = L.meta().components;
  Json args = {{"family", a.family}, {"param", a.param}, {"kernel", a.kernel}, {"input", abs_str(a.input)},
               {"out", abs_str(a.out)}};
  manifest(output_dir(a.out), "graph", args, resolved, {a.input}, {a.out, io::sidecar_path(a.out)});
  if (L.meta().disconnected) out << "warning: graph has " << L.meta().components << " connected components\n";
  out << "wrote " << to_string(family) << " graph (n=" << L.size() << ", param=" << io::format_double(L.meta().param)
      << ") to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// eig

struct EigArgs {
  Index kappa = 0;
  std::string graph;
  std::string out;
};

int cmd_eig(const EigArgs& a, std::ostream& out) {
  require_file(a.graph, "graph");
  const GraphLaplacian L = io::read_graph(a.graph);
  const Index kappa = a.kappa <= 0 ? L.size() : std::min(a.kappa, L.size());
  const EigenSystem es = kappa == L.size() ? eig_dense_sym(L) : eig_partial(L, kappa);
  io::write_eigensystem(a.out, es, io::file_hash(a.graph));
  Json args = {{"kappa", a.kappa}, {"graph", abs_str(a.graph)}, {"out", abs_str(a.out)}};
  Json resolved = {{"kappa", kappa}, {"complete", es.complete}, {"residual_max", es.residual_max}};
  manifest(output_dir(a.out), "eig", args, resolved, {a.graph}, {a.out, io::sidecar_path(a.out)});
  out << "eigenvalues:";
  for (Index i = 0; i < es.count(); ++i) out << " " << io::format_double(es.values(i));
  out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// filter

struct FilterArgs {
  std::string spec;
  std::string eig;
  std::string signal;
  std::string out;
};

MatrixXd read_signal(const fs::path& p, Index n) {
  require_file(p, "signal");
  MatrixXd x = io::read_csv(p);
  if (x.rows() != n) {
    if (x.rows() == 1 && x.cols() == n) return x.transpose();
    throw ContractError("signal has " + std::to_string(x.rows()) + " rows but the graph has " + std::to_string(n) +
                        " vertices");
  }
  return x;
}

int cmd_filter(const FilterArgs& a, std::ostream& out) {
  const FilterSpec w = FilterSpec::parse(a.spec);
  require_file(a.eig, "eigensystem");
  const EigenSystem es = io::read_eigensystem(a.eig);
  const MatrixXd x = read_signal(a.signal, es.size());
  MatrixXd y(x.rows(), x.cols());
  bool truncated = false;
  for (Index c = 0; c < x.cols(); ++c) {
    const FilteredSignal f = apply_filter_checked(es, w, x.col(c));
    y.col(c) = f.signal;
    truncated = truncated || f.truncated;
  }
  io::write_csv(a.out, y, "filter " + w.describe());
  Json side = {{"filter", w.describe()}, {"truncated", truncated}, {"kappa", es.count()}};
  io::write_file(io::sidecar_path(a.out), side.dump(2) + "\n");
  Json args = {{"spec", a.spec}, {"eig", abs_str(a.eig)}, {"signal", abs_str(a.signal)}, {"out", abs_str(a.out)}};
  manifest(output_dir(a.out), "filter", args, side, {a.eig, a.signal}, {a.out, io::sidecar_path(a.out)});
  if (truncated) out << "warning: filter evaluated on a truncated eigensystem (" << es.count() << " of " << es.size()
                     << " pairs)\n";
  out << "wrote " << y.rows() << "x" << y.cols() << " filtered signal to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// forward

struct ForwardArgs {
  std::string net;
  std::string eig;
  std::string input;
  std::string out;
};

int cmd_forward(const ForwardArgs& a, std::ostream& out) {
  require_file(a.net, "network");
  const NetworkSpec net = io::read_network(a.net);
  require_file(a.eig, "eigensystem");
  const EigenSystem es = io::read_eigensystem(a.eig);
  const MatrixXd x = read_signal(a.input, es.size());
  if (x.cols() != net.input_channels)
    throw ContractError("input has " + std::to_string(x.cols()) + " channels, network expects " +
                        std::to_string(net.input_channels));
  const MatrixXd y = network_forward(net, es, x);
  io::write_csv(a.out, y, "network output");
  Json args = {{"net", abs_str(a.net)}, {"eig", abs_str(a.eig)}, {"input", abs_str(a.input)}, {"out", abs_str(a.out)}};
  Json resolved = {{"layers", net.layers.size()}, {"output_channels", net.output_channels()}, {"kappa", es.count()}};
  manifest(output_dir(a.out), "forward", args, resolved, {a.net, a.eig, a.input}, {a.out});
  out << "wrote " << y.rows() << "x" << y.cols() << " network output to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// converge

struct ConvergeArgs {
  std::string config;
  std::string out;
  bool assert_mode = false;
  bool plot_data = false;
  std::string synthetic;
};

double parse_synthetic(const std::string& s) {
  const std::string body = s.rfind("r=", 0) == 0 ? s.substr(2) : s;
  try {
    return io::parse_double(body);
  } catch (const IoError&) {
    throw UsageError("--synthetic expects r=<rate>, got '" + s + "'");
  }
}

int cmd_converge(const ConvergeArgs& a, std::ostream& out) {
  SweepConfig cfg;
  Json cfg_json = Json::object();
  if (!a.config.empty()) {
    require_file(a.config, "sweep config");
    try {
      cfg_json = Json::parse(io::read_file(a.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("sweep config is not valid JSON: ") + e.what());
    }
    cfg = io::sweep_config_from_json(cfg_json);
  }
  if (!a.synthetic.empty()) cfg.synthetic_rate = parse_synthetic(a.synthetic);
  const fs::path dir = fs::absolute(a.out);
  fs::create_directories(dir);

  const ConvergenceReport report = run_sweep(cfg);
  io::write_file(dir / "report.json", io::report_to_json(report).dump(2) + "\n");
  io::write_file(dir / "report.csv", io::report_to_csv(report));
  std::vector<fs::path> outputs{dir / "report.json", dir / "report.csv"};
  if (a.plot_data) {
    io::write_plot_data(dir, report);
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().filename().string().rfind("plot_", 0) == 0) outputs.push_back(e.path());
  }

  for (const auto& f : report.fits)
    out << "fit " << f.metric << ": slope " << io::format_double(f.fit.slope) << " (r2 " << io::format_double(f.fit.r2)
        << ", target " << io::format_double(f.target_slope) << ")\n";
  if (report.fits.empty()) out << "single n: report only, no fits\n";

  int code = kOk;
  Json assertions = Json::array();
  if (a.assert_mode) {
    for (const auto& r : evaluate_assertions(report)) {
      out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
      assertions.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
      if (!r.pass) code = kAssertion;
    }
    io::write_file(dir / "assertions.json", assertions.dump(2) + "\n");
    outputs.push_back(dir / "assertions.json");
  }

  Json args = {{"config", cfg_json}, {"out", dir.string()}, {"assert", a.assert_mode},
               {"emit-plot-data", a.plot_data}, {"synthetic", a.synthetic}};
  Json resolved = io::sweep_config_to_json(cfg);
  resolved["threads"] = resolve_threads(cfg.threads);
  std::vector<fs::path> inputs;
  if (!a.config.empty()) inputs.push_back(a.config);
  manifest(dir, "converge", args, resolved, inputs, outputs);
  out << "runtime " << io::format_double(report.runtime_seconds) << " s, " << report.disconnected
      << " disconnected trials\n";
  return code;
}

// ---------------------------------------------------------------------------
// scatter

struct ScatterArgs {
  std::string mode = "spectral";
  int J = 4;
  int Q = 4;
  std::vector<std::string> inputs;
  std::string signals = "x,y,z";
  std::string family = "epsilon";
  std::string param = "AUTO";
  std::string out;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ',')) parts.push_back(p);
  return parts;
}

MatrixXd scatter_signals(const PointCloud& cloud, const std::string& spec) {
  const auto parts = split_list(spec);
  bool coords = !parts.empty();
  for (const auto& p : parts) coords = coords && (p == "x" || p == "y" || p == "z" || p == "w");
  if (coords) {
    std::vector<Index> cols;
    for (const auto& p : parts) {
      const Index c = p == "w" ? 3 : p[0] - 'x';
      if (c < cloud.points.cols()) cols.push_back(c);
    }
    if (cols.empty()) throw ContractError("no requested coordinate exists in dimension " +
                                          std::to_string(cloud.points.cols()));
    MatrixXd x(cloud.size(), static_cast<Index>(cols.size()));
    const double inv = 1.0 / std::sqrt(static_cast<double>(cloud.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) x.col(static_cast<Index>(c)) = cloud.points.col(cols[c]) * inv;
    return x;
  }
  return read_signal(spec, cloud.size());
}

int cmd_scatter(const ScatterArgs& a, std::ostream& out, std::ostream& err) {
  if (a.mode != "spectral" && a.mode != "approx") throw UsageError("--mode must be spectral or approx");
  if (a.J < 0 || a.Q < 1) throw UsageError("--J must be >= 0 and --Q >= 1");
  const GraphFamily family = parse_graph_family(a.family);
  std::vector<VectorXd> rows;
  Json per_input = Json::array();
  bool truncated = false;
  for (const auto& path : a.inputs) {
    require_file(path, "point cloud");
    const PointCloud cloud = io::read_cloud(path);
    Json resolved = Json::object();
    const GraphLaplacian L = build_graph(cloud, family, a.param, KernelSpec{}, resolved);
    const MatrixXd x = scatter_signals(cloud, a.signals);
    const Index len = scattering_feature_length(a.J, a.Q);
    VectorXd row(len * x.cols());
    if (a.mode == "spectral") {
      const EigenSystem es = eig_dense_sym(walk_matched_laplacian(L));
      for (Index c = 0; c < x.cols(); ++c) {
        const ScatteringResult r = scattering_moments(es, x.col(c), a.J, a.Q);
        row.segment(c * len, len) = r.features;
        truncated = truncated || r.truncated;
      }
    } else {
      const SparseMatrixXd A = L.adjacency();
      if ((A.transpose() * VectorXd::Ones(A.rows())).minCoeff() <= 0.0)
        err << "warning: " << path << " has isolated vertices; the walk keeps half their mass in place\n";
      const SparseMatrixXd P = lazy_walk(A);
      for (Index c = 0; c < x.cols(); ++c) row.segment(c * len, len) = scattering_moments_approx(P, x.col(c), a.J, a.Q);
    }
    rows.push_back(std::move(row));
    resolved["input"] = abs_str(path);
    per_input.push_back(resolved);
  }
  if (rows.empty()) throw UsageError("scatter needs at least one --input");
  MatrixXd feats(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != feats.cols()) throw ContractError("inputs yield different feature lengths");
    feats.row(static_cast<Index>(i)) = rows[i].transpose();
  }
  io::write_csv(a.out, feats, "scattering moments mode=" + a.mode + " J=" + std::to_string(a.J) +
                                   " Q=" + std::to_string(a.Q));
  Json inputs_abs = Json::array();
  std::vector<fs::path> inputs;
  for (const auto& p : a.inputs) {
    inputs_abs.push_back(abs_str(p));
    inputs.emplace_back(p);
  }
  Json args = {{"mode", a.mode}, {"J", a.J}, {"Q", a.Q}, {"input", inputs_abs}, {"signals", a.signals},
               {"family", a.family}, {"param", a.param}, {"out", abs_str(a.out)}};
  Json resolved = {{"features_per_signal", scattering_feature_length(a.J, a.Q)}, {"graphs", per_input},
                   {"truncated", truncated}};
  manifest(output_dir(a.out), "scatter", args, resolved, inputs, {a.out});
  out << "wrote " << feats.rows() << "x" << feats.cols() << " scattering features to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// rerun

std::vector<std::string> args_from_manifest(const Json& m, const std::string& out_override) {
  const std::string command = m.at("command").get<std::string>();
  Json args = m.at("config").at("args");
  std::vector<std::string> argv{command};
  if (!out_override.empty()) args["out"] = out_override;
  if (command == "converge") {
    const fs::path dir = fs::absolute(args.at("out").get<std::string>());
    fs::create_directories(dir);
    const Json cfg = args.at("config");
    args.erase("config");
    if (!cfg.empty()) {
      const fs::path cfg_path = dir / "rerun_config.json";
      io::write_file(cfg_path, cfg.dump(2) + "\n");
      argv.push_back("--config");
      argv.push_back(cfg_path.string());
    }
  }
  for (const auto& [key, value] : args.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) argv.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        argv.push_back(flag);
        argv.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
    } else if (value.is_string()) {
      if (value.get<std::string>().empty()) continue;
      argv.push_back(flag);
      argv.push_back(value.get<std::string>());
    } else {
      argv.push_back(flag);
      argv.push_back(value.dump());
    }
  }
  return argv;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Manifold filter-combine networks on point clouds", "mfcn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version_string());

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Sample a point cloud from an analytic manifold");
  sample->add_option("--manifold", sa.manifold, "circle|sphere|torus")->capture_default_str();
  sample->add_option("--density", sa.density, "uniform|cosine:a")->capture_default_str();
  sample->add_option("--n", sa.n, "Number of points")->required();
  sample->add_option("--seed", sa.seed, "RNG seed")->required();
  sample->add_option("--out", sa.out, "Output CSV")->required();

  GraphArgs ga;
  auto* graph = app.add_subcommand("graph", "Build a graph Laplacian from a point cloud");
  graph->add_option("--family", ga.family, "dense|epsilon|knn")->capture_default_str();
  graph->add_option("--param", ga.param, "AUTO, epsilon, or k")->capture_default_str();
  graph->add_option("--kernel", ga.kernel, "indicator|truncated_linear")->capture_default_str();
  graph->add_option("--input", ga.input, "Point cloud CSV")->required();
  graph->add_option("--out", ga.out, "Output MFCNMAT1 file")->required();

  EigArgs ea;
  auto* eig = app.add_subcommand("eig", "Smallest eigenpairs of a stored Laplacian");
  eig->add_option("--kappa", ea.kappa, "Number of eigenpairs (0: all)")->capture_default_str();
  eig->add_option("--graph", ea.graph, "Graph MFCNMAT1 file")->required();
  eig->add_option("--out", ea.out, "Output eigensystem file")->required();

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "Apply a spectral filter to signals");
  filter->add_option("--spec", fa.spec, "Filter, e.g. heat:t=1")->required();
  filter->add_option("--eig", fa.eig, "Eigensystem file")->required();
  filter->add_option("--signal", fa.signal, "Signal CSV (n rows)")->required();
  filter->add_option("--out", fa.out, "Output CSV")->required();

  ForwardArgs fwa;
  auto* forward = app.add_subcommand("forward", "Forward pass of a network");
  forward->add_option("--net", fwa.net, "Network JSON")->required();
  forward->add_option("--eig", fwa.eig, "Eigensystem file")->required();
  forward->add_option("--input", fwa.input, "Input CSV (n rows, one column per channel)")->required();
  forward->add_option("--out", fwa.out, "Output CSV")->required();

  ConvergeArgs ca;
  auto* converge = app.add_subcommand("converge", "Run a convergence sweep");
  converge->add_option("--config", ca.config, "Sweep config JSON");
  converge->add_option("--out", ca.out, "Output directory")->required();
  converge->add_flag("--assert", ca.assert_mode, "Check slope bands and set the exit code");
  converge->add_flag("--emit-plot-data", ca.plot_data, "Write per-metric log-log tables");
  converge->add_option("--synthetic", ca.synthetic, "Synthetic power law, e.g. r=0.5");

  ScatterArgs sca;
  auto* scatter = app.add_subcommand("scatter", "Scattering moments of point-cloud signals");
  scatter->add_option("--mode", sca.mode, "spectral|approx")->capture_default_str();
  scatter->add_option("--J", sca.J, "Largest wavelet scale")->capture_default_str();
  scatter->add_option("--Q", sca.Q, "Number of moments")->capture_default_str();
  scatter->add_option("--input", sca.inputs, "Point cloud CSV (repeatable)")->required();
  scatter->add_option("--signals", sca.signals, "Coordinates (x,y,z) or a signal CSV")->capture_default_str();
  scatter->add_option("--family", sca.family, "Graph family")->capture_default_str();
  scatter->add_option("--param", sca.param, "Graph parameter")->capture_default_str();
  scatter->add_option("--out", sca.out, "Output CSV")->required();

  std::string manifest_path, rerun_out;
  auto* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json")->required();
  rerun->add_option("--out", rerun_out, "Override the output location");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << io::version_string() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sample->parsed()) return cmd_sample(sa, out);
    if (graph->parsed()) return cmd_graph(ga, out);
    if (eig->parsed()) return cmd_eig(ea, out);
    if (filter->parsed()) return cmd_filter(fa, out);
    if (forward->parsed()) return cmd_forward(fwa, out);
    if (converge->parsed()) return cmd_converge(ca, out);
    if (scatter->parsed()) return cmd_scatter(sca, out, err);
    if (rerun->parsed()) {
      require_file(manifest_path, "manifest");
      Json m;
      try {
        m = Json::parse(io::read_file(manifest_path));
      } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("manifest is not valid JSON: ") + e.what());
      }
      return run(args_from_manifest(m, rerun_out), out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ContractError& e) {
    err << "contract violation: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace mfcn::cli
