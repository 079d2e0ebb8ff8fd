#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Output {
  int code;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("qprobe_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Runs the CLI through the shell; stdout is captured, stderr discarded.
Output cli(const std::string& args, const std::string& env = "") {
  const auto captured = scratch() / "stdout.txt";
  const std::string cmd = env + " \"" QPROBE_CLI "\" " + args + " > \"" + captured.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(captured)};
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

void write_file(const std::string& name, const std::string& text) {
  std::ofstream os(path(name), std::ios::binary);
  os << text;
}

}  // namespace

TEST_CASE("pmf writes a poisson csv and a manifest", "[cli]") {
  const auto out = path("pois.csv");
  REQUIRE(cli("pmf --model poisson --lambda-per-red 10 --out " + out).code == 0);
  const auto csv = slurp(out);
  CHECK(csv.rfind("n,prob\n0,4.53999297625", 0) == 0);
  CHECK(csv.find("\n10,0.125110035721") != std::string::npos);
  const auto manifest = slurp(out + ".manifest");
  CHECK(manifest.find("command=pmf\n") != std::string::npos);
  CHECK(manifest.find("version=") != std::string::npos);
  CHECK(manifest.find("output=" + out) != std::string::npos);
  CHECK(manifest.find("wall_clock_s=") != std::string::npos);
  CHECK(manifest.find("meta.seed=") != std::string::npos);
}

TEST_CASE("a tiny red window gives a near point mass at zero", "[cli]") {
  const auto r = cli("pmf --model poisson --lambda-vph 800 --red-s 0.000001");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("n,prob\n0,0.9999997", 0) == 0);
}

TEST_CASE("bunched pmf is deterministic and replays byte for byte", "[cli]") {
  const auto a = path("bunched_a.csv"), b = path("bunched_b.csv"), c = path("bunched_c.csv");
  const std::string args = "pmf --model bunched --lambda-per-red 10 --windows 200000 --seed 7 --out ";
  REQUIRE(cli(args + a).code == 0);
  REQUIRE(cli(args + b).code == 0);
  CHECK(slurp(a) == slurp(b));
  REQUIRE(cli("replay --manifest " + a + ".manifest --out " + c).code == 0);
  CHECK(slurp(a) == slurp(c));

  const auto manifest = slurp(a + ".manifest");
  CHECK(manifest.find("phi=0.818730753078") != std::string::npos);
  CHECK(manifest.find("generator=mt19937_64") != std::string::npos);
}

TEST_CASE("seed falls back to the environment and is recorded", "[cli]") {
  const auto a = path("env_a.csv"), b = path("env_b.csv"), c = path("env_c.csv");
  const std::string args = "pmf --model bunched --lambda-per-red 10 --windows 20000 --out ";
  REQUIRE(cli(args + a, "QPROBE_SEED=99").code == 0);
  REQUIRE(cli(args + b + " --seed 99").code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a + ".manifest").find("arg.9=--seed\narg.10=99\n") != std::string::npos);
  // The replay ignores a different environment seed.
  REQUIRE(cli("replay --manifest " + a + ".manifest --out " + c, "QPROBE_SEED=5").code == 0);
  CHECK(slurp(a) == slurp(c));
}

TEST_CASE("estimate reports the conditional moments", "[cli]") {
  write_file("uniform.csv", "n,prob\n2,0.5\n3,0.5\n");
  auto r = cli("estimate --pmf " + path("uniform.csv") + " --p 0.5 --lp 2");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("expected_queue=2.33333333333\n") != std::string::npos);
  CHECK(r.out.find("conditional_variance=0.222222222222\n") != std::string::npos);
  CHECK(r.out.find("interval=VP/3sigma (unimodality assumed)") != std::string::npos);

  write_file("point.csv", "n,prob\n0,0\n4,1\n");
  r = cli("estimate --pmf " + path("point.csv") + " --p 0.3 --lp 1 --show-pmf");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("expected_queue=4\n") != std::string::npos);
  CHECK(r.out.find("conditional_variance=0\n") != std::string::npos);
  CHECK(r.out.find("n,prob\n0,0\n1,0\n2,0\n3,0\n4,1\n") != std::string::npos);
}

TEST_CASE("bad input exits with 2", "[cli]") {
  write_file("uniform.csv", "n,prob\n2,0.5\n3,0.5\n");
  CHECK(cli("").code == 2);
  CHECK(cli("pmf --lambda-vph 800 --lambda-per-red 10").code == 2);
  CHECK(cli("pmf --model gamma --lambda-per-red 10").code == 2);
  CHECK(cli("estimate --pmf " + path("uniform.csv") + " --p 1.5 --lp 2").code == 2);
  CHECK(cli("estimate --pmf " + path("uniform.csv") + " --p 0.5 --lp 9").code == 2);
  CHECK(cli("sweep --pmf " + path("uniform.csv") + " --p-grid 0.5,0.1").code == 2);
  write_file("bad.csv", "n,prob\n0,0.5\n1,0.4\n");
  CHECK(cli("estimate --pmf " + path("bad.csv") + " --p 0.5 --lp 0").code == 2);
}

TEST_CASE("saturation exits with 3", "[cli]") {
  CHECK(cli("pmf --model bunched --lambda-vph 2400 --windows 10000").code == 3);
  CHECK(cli("simulate --lambda-per-cycle 23 --cycles 2000").code == 3);
  CHECK(cli("table2 --rho-grid 1.0 --derive-lambda --cycles 2000").code == 3);
}

TEST_CASE("i/o failures exit with 4", "[cli]") {
  CHECK(cli("estimate --pmf " + path("missing.csv") + " --p 0.5 --lp 0").code == 4);
  CHECK(cli("pmf --lambda-per-red 10 --out " + path("no/such/dir/x.csv")).code == 4);
  CHECK(cli("replay --manifest " + path("missing.manifest")).code == 4);
}

TEST_CASE("sweep over a pmf file", "[cli]") {
  REQUIRE(cli("pmf --lambda-per-red 10 --out " + path("sweep_in.csv")).code == 0);
  const auto r = cli("sweep --pmf " + path("sweep_in.csv") + " --p-grid 0,0.5,1 --lambda-ref 10");
  REQUIRE(r.code == 0);
  std::istringstream is(r.out);
  std::string header, first, middle, last;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, middle);
  std::getline(is, last);
  CHECK(header == "model,lambda,rho,p,var_d,sigma,three_sigma,pct_of_lambda,pct_of_mean_queue");
  CHECK(first.rfind("pmf,10,,0,10,3.16228,9.48683,94.8683,", 0) == 0);
  CHECK(last.rfind("pmf,10,,1,0,0,0,0,0", 0) == 0);
}

TEST_CASE("simulate records the signal scenario", "[cli]") {
  const auto out = path("sim.csv");
  REQUIRE(cli("simulate --cycles 5000 --seed 3 --out " + out).code == 0);
  const auto manifest = slurp(out + ".manifest");
  CHECK(manifest.find("meta.rho=0.889\n") != std::string::npos);
  CHECK(manifest.find("meta.departure_slots=23\n") != std::string::npos);
  CHECK(manifest.find("meta.mean_overflow=") != std::string::npos);
  CHECK(manifest.find("meta.overflow=carried\n") != std::string::npos);
  const auto copy = path("sim_copy.csv");
  REQUIRE(cli("replay --manifest " + out + ".manifest --out " + copy).code == 0);
  CHECK(slurp(out) == slurp(copy));
}

TEST_CASE("numeric output ignores the locale", "[cli]") {
  const auto a = path("loc_a.csv"), b = path("loc_b.csv");
  REQUIRE(cli("pmf --lambda-per-red 3.5 --out " + a).code == 0);
  REQUIRE(cli("pmf --lambda-per-red 3.5 --out " + b, "LC_ALL=de_DE.UTF-8 LC_NUMERIC=de_DE.UTF-8").code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).find(';') == std::string::npos);
}
