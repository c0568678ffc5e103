#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "mfcn/io.hpp"

using namespace mfcn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run mfcn_run(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path workdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mfcn_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string s(const fs::path& p) { return p.string(); }

void write_ring(const fs::path& p) {
  io::write_file(p,
                 "# mfcn-cloud v1, kind=circle, d=1, D=2, seed=0\n"
                 "1,0,0\n"
                 "0,1,1.5707963267948966\n"
                 "-1,0,3.141592653589793\n"
                 "0,-1,4.71238898038469\n");
}

}  // namespace

TEST_CASE("cli: version and usage errors") {
  const Run v = mfcn_run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("MFCNMAT1") != std::string::npos);
  CHECK(mfcn_run({}).code == cli::kUsage);
  CHECK(mfcn_run({"sample", "--n", "4"}).code == cli::kUsage);
  CHECK(mfcn_run({"bogus"}).code == cli::kUsage);
  const fs::path d = workdir("usage");
  CHECK(mfcn_run({"sample", "--manifold", "klein", "--n", "4", "--seed", "1", "--out", s(d / "c.csv")}).code ==
        cli::kUsage);
  CHECK(mfcn_run({"graph", "--input", s(d / "missing.csv"), "--out", s(d / "g.bin")}).code == cli::kData);
}

TEST_CASE("cli: sample is deterministic and lands on the circle") {
  const fs::path d = workdir("sample");
  REQUIRE(mfcn_run({"sample", "--manifold", "circle", "--n", "4", "--seed", "1", "--out", s(d / "a.csv")}).code == 0);
  REQUIRE(mfcn_run({"sample", "--manifold", "circle", "--n", "4", "--seed", "1", "--out", s(d / "b" / "a.csv")}).code ==
          0);
  CHECK(io::read_file(d / "a.csv") == io::read_file(d / "b" / "a.csv"));
  const PointCloud c = io::read_cloud(d / "a.csv");
  CHECK(c.size() == 4);
  CHECK((c.points.rowwise().squaredNorm().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(fs::exists(d / "manifest.json"));
}

TEST_CASE("cli: tilted sample mean") {
  const fs::path d = workdir("tilt");
  REQUIRE(mfcn_run({"sample", "--density", "cosine:0.5", "--n", "100000", "--seed", "3", "--out", s(d / "c.csv")})
              .code == 0);
  const PointCloud c = io::read_cloud(d / "c.csv");
  // E cos = a/2, Var cos = E cos^2 - (a/2)^2 = 1/2 - 1/16
  const double sigma = std::sqrt((0.5 - 0.0625) / 100000);
  CHECK(std::abs(c.points.col(0).mean() - 0.25) < 3 * sigma);
}

TEST_CASE("cli: dense graph on two points") {
  const fs::path d = workdir("dense2");
  io::write_file(d / "c.csv", "# mfcn-cloud v1, kind=circle, d=1, D=2, seed=0\n1,0,0\n-1,0,3.141592653589793\n");
  REQUIRE(mfcn_run({"graph", "--family", "dense", "--param", "1", "--input", s(d / "c.csv"), "--out", s(d / "g.bin")})
              .code == 0);
  const MatrixXd L = io::read_matrix(d / "g.bin").to_dense();
  const double w = std::exp(-4.0) / 2.0;
  CHECK(-L(0, 1) == doctest::Approx(w).epsilon(1e-14));
  CHECK(L(0, 0) == doctest::Approx(w).epsilon(1e-14));
}

TEST_CASE("cli: 4-ring spectrum, filtering, forward pass, rerun") {
  const fs::path d = workdir("ring");
  write_ring(d / "c.csv");
  REQUIRE(mfcn_run({"graph", "--family", "epsilon", "--param", "1.5", "--input", s(d / "c.csv"), "--out",
                    s(d / "g" / "g.bin")})
              .code == 0);
  const Run e = mfcn_run({"eig", "--kappa", "4", "--graph", s(d / "g" / "g.bin"), "--out", s(d / "e" / "e.bin")});
  REQUIRE(e.code == 0);
  const EigenSystem es = io::read_eigensystem(d / "e" / "e.bin");
  const Eigen::Vector4d expect(0, 0.0987654, 0.0987654, 0.1975309);
  CHECK((es.values - expect).cwiseAbs().maxCoeff() < 1e-7);

  io::write_csv(d / "x.csv", Eigen::Vector4d(1, 2, 3, 4));
  REQUIRE(mfcn_run({"filter", "--spec", "heat:t=0", "--eig", s(d / "e" / "e.bin"), "--signal", s(d / "x.csv"), "--out",
                    s(d / "f" / "y.csv")})
              .code == 0);
  CHECK((io::read_csv(d / "f" / "y.csv") - Eigen::Vector4d(1, 2, 3, 4)).cwiseAbs().maxCoeff() < 1e-12);

  io::write_csv(d / "bad.csv", Eigen::Vector3d(1, 2, 3));
  const Run bad = mfcn_run({"filter", "--spec", "heat:t=1", "--eig", s(d / "e" / "e.bin"), "--signal",
                            s(d / "bad.csv"), "--out", s(d / "f2" / "y.csv")});
  CHECK(bad.code == cli::kData);
  CHECK(bad.err.find("contract violation") != std::string::npos);

  NetworkSpec net;
  net.input_channels = 1;
  net.layers = {mcn_layer(FilterSpec::heat(1.0), MatrixXd::Constant(1, 2, 0.5), Activation::relu)};
  io::write_network(d / "net.json", net);
  REQUIRE(mfcn_run({"forward", "--net", s(d / "net.json"), "--eig", s(d / "e" / "e.bin"), "--input", s(d / "x.csv"),
                    "--out", s(d / "n" / "y.csv")})
              .code == 0);
  const MatrixXd y = io::read_csv(d / "n" / "y.csv");
  CHECK(y.cols() == 2);
  CHECK((y - network_forward(net, es, MatrixXd(Eigen::Vector4d(1, 2, 3, 4)))).cwiseAbs().maxCoeff() == 0.0);

  REQUIRE(mfcn_run({"rerun", "--manifest", s(d / "e" / "manifest.json"), "--out", s(d / "e2" / "e.bin")}).code == 0);
  CHECK(io::read_file(d / "e" / "e.bin") == io::read_file(d / "e2" / "e.bin"));
  REQUIRE(mfcn_run({"rerun", "--manifest", s(d / "n" / "manifest.json"), "--out", s(d / "n2" / "y.csv")}).code == 0);
  CHECK(io::read_file(d / "n" / "y.csv") == io::read_file(d / "n2" / "y.csv"));
}

TEST_CASE("cli: converge report-only and synthetic assertions") {
  const fs::path d = workdir("converge");
  io::write_file(d / "one.json", R"({"ns": [128], "trials": 2})");
  const Run one = mfcn_run({"converge", "--config", s(d / "one.json"), "--out", s(d / "one")});
  CHECK(one.code == 0);
  CHECK(one.out.find("no fits") != std::string::npos);
  CHECK(fs::exists(d / "one" / "report.json"));
  CHECK(fs::exists(d / "one" / "report.csv"));
  CHECK(fs::exists(d / "one" / "manifest.json"));

  const Run syn = mfcn_run({"converge", "--synthetic", "r=0.5", "--assert", "--emit-plot-data", "--out", s(d / "syn")});
  CHECK(syn.code == 0);
  CHECK(syn.out.find("FAIL") == std::string::npos);
  const io::Json rep = io::Json::parse(io::read_file(d / "syn" / "report.json"));
  for (const auto& f : rep["fits"])
    if (f["metric"] == "alpha") CHECK(std::abs(f["slope"].get<double>() + 0.5) < 1e-12);
  CHECK(fs::exists(d / "syn" / "plot_alpha.csv"));

  REQUIRE(mfcn_run({"rerun", "--manifest", s(d / "one" / "manifest.json"), "--out", s(d / "one_again")}).code == 0);
  CHECK(io::read_file(d / "one" / "report.csv") == io::read_file(d / "one_again" / "report.csv"));
}

TEST_CASE("cli: failing assertions give exit code 3") {
  const fs::path d = workdir("fail");
  io::write_file(d / "cfg.json", R"({"ns": [64, 128, 256], "trials": 2, "bandwidth_constant": 0.05})");
  const Run r = mfcn_run({"converge", "--config", s(d / "cfg.json"), "--assert", "--out", s(d / "out")});
  CHECK(r.code == cli::kAssertion);
  CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("cli: scatter features") {
  const fs::path d = workdir("scatter");
  REQUIRE(mfcn_run({"sample", "--manifold", "sphere", "--n", "300", "--seed", "2", "--out", s(d / "c.csv")}).code == 0);
  const Run r = mfcn_run({"scatter", "--mode", "spectral", "--J", "4", "--Q", "4", "--input", s(d / "c.csv"),
                          "--signals", "x,y,z", "--out", s(d / "f.csv")});
  REQUIRE(r.code == 0);
  const MatrixXd f = io::read_csv(d / "f.csv");
  CHECK(f.rows() == 1);
  CHECK(f.cols() == 3 * 64);

  // constant signal, and a row-permuted copy of the cloud
  PointCloud c = io::read_cloud(d / "c.csv");
  io::write_csv(d / "one.csv", MatrixXd::Constant(300, 1, 1.0 / std::sqrt(300.0)));
  PointCloud p = c;
  for (Index i = 0; i < 300; ++i) {
    p.points.row(i) = c.points.row((i * 7) % 300);
    p.intrinsic.row(i) = c.intrinsic.row((i * 7) % 300);
  }
  io::write_cloud(d / "p.csv", p);
  for (const std::string mode : {"spectral", "approx"}) {
    REQUIRE(mfcn_run({"scatter", "--mode", mode, "--input", s(d / "c.csv"), "--input", s(d / "p.csv"), "--signals",
                      "x,y,z", "--out", s(d / ("perm_" + mode + ".csv"))})
                .code == 0);
    const MatrixXd g = io::read_csv(d / ("perm_" + mode + ".csv"));
    REQUIRE(g.rows() == 2);
    CHECK((g.row(0) - g.row(1)).cwiseAbs().maxCoeff() < 1e-10);
  }
  REQUIRE(mfcn_run({"scatter", "--input", s(d / "c.csv"), "--signals", s(d / "one.csv"), "--out", s(d / "one_f.csv")})
              .code == 0);
  const MatrixXd one = io::read_csv(d / "one_f.csv");
  CHECK((one.leftCols(4).array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(one.rightCols(60).cwiseAbs().maxCoeff() < 1e-12);
}
