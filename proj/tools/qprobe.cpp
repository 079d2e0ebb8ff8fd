// qprobe: queue-length prediction from probe vehicles.
//
//   qprobe pmf        count pmf of arrivals per red (poisson | bunched)
//   qprobe estimate   E(N | l_p) and Var(N | l_p) for a pmf file
//   qprobe sweep      Var(D) over a p grid, for a pmf file or a rate grid
//   qprobe simulate   end-of-red queue pmf of the fixed-cycle signal
//   qprobe overflow   Var(D) with vs without the overflow queue
//   qprobe table1     3-sigma error over p at rho = 0.88, both arrival models
//   qprobe table2     E[Var(N | L_p)] at p = 0.5 over a rho grid
//   qprobe replay     rerun the command recorded in a manifest
//
// Every command writing --out also writes <out>.manifest. Exit codes: 0 ok,
// 2 bad flags or arguments, 3 saturated model, 4 I/O failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "qprobe/qprobe.hpp"

#ifndef QPROBE_VERSION
#define QPROBE_VERSION "dev"
#endif

namespace {

using namespace qprobe;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitSaturated = 3;
constexpr int kExitIo = 4;

using Metadata = std::vector<std::pair<std::string, std::string>>;

std::string num(double x) { return format_double(x, 12); }

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ";" : "") + num(xs[i]);
  return out;
}

void write_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << contents;
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

Pmf load_pmf(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read pmf file " + path);
  return read_pmf_csv(is);
}

std::string manifest_path(const std::string& out) { return out + ".manifest"; }

struct Run {
  std::string command;
  std::vector<std::string> args;  // full argv after the program name
  std::string out;
  Metadata meta;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  // Writes the CSV to --out (plus manifest) or to stdout; metadata to stderr.
  void emit(const std::string& csv) {
    for (const auto& [k, v] : meta) std::cerr << k << '=' << v << '\n';
    if (out.empty()) {
      std::cout << csv;
      return;
    }
    write_atomically(out, csv);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ostringstream m;
    m << "command=" << command << '\n' << "version=" << QPROBE_VERSION << '\n';
    for (std::size_t i = 0; i < args.size(); ++i) m << "arg." << i << '=' << args[i] << '\n';
    m << "output=" << out << '\n';
    for (const auto& [k, v] : meta) m << "meta." << k << '=' << v << '\n';
    m << "wall_clock_s=" << format_double(seconds, 6) << '\n';
    write_atomically(manifest_path(out), m.str());
  }
};

// Flags shared by the commands that build arrival models.
struct ModelFlags {
  std::string model = "poisson";
  double delta = kDefaultDelta;
  double b = kDefaultBunching;
  std::uint64_t seed = 1;
  std::size_t windows = kDefaultWindows;

  ArrivalKind kind() const { return model == "bunched" ? ArrivalKind::Bunched : ArrivalKind::NegExp; }
  BunchingOptions bunching() const { return {delta, b}; }

  void add_to(CLI::App* cmd, bool with_model = true) {
    if (with_model)
      cmd->add_option("--model", model, "Arrival model")
          ->check(CLI::IsMember({"poisson", "negexp", "bunched"}))
          ->capture_default_str();
    cmd->add_option("--delta", delta, "Minimum headway in seconds (bunched)")->capture_default_str();
    cmd->add_option("--b", b, "Bunching constant (bunched)")->capture_default_str();
    cmd->add_option("--seed", seed, "RNG seed")->envname("QPROBE_SEED")->capture_default_str();
    cmd->add_option("--windows", windows, "Monte-Carlo windows for bunched count pmfs")
        ->capture_default_str();
  }

  void describe(Metadata& meta, double lambda_vps) const {
    meta.emplace_back("model", kind_name(kind()));
    meta.emplace_back("generator", kGeneratorName);
    meta.emplace_back("seed", std::to_string(seed));
    if (kind() == ArrivalKind::Bunched)
      meta.emplace_back("params", qprobe::describe(calibrate_bunched(lambda_vps, delta, b)) +
                                      ", seed=" + std::to_string(seed));
  }
};

struct SimFlags {
  double cycle_s = 90.0;
  double red_s = 45.0;
  double green_s = 45.0;
  double service_s = 2.0;
  double lambda_per_cycle = 20.0;
  std::size_t cycles = 65'000;
  std::size_t warmup = 200;
  std::size_t replications = 1;

  void add_to(CLI::App* cmd, bool with_lambda = true) {
    cmd->add_option("--cycle-s", cycle_s, "Cycle length C in seconds")->capture_default_str();
    cmd->add_option("--red-s", red_s, "Red duration in seconds")->capture_default_str();
    cmd->add_option("--green-s", green_s, "Green duration in seconds")->capture_default_str();
    cmd->add_option("--service-s", service_s, "Saturation headway in seconds per vehicle")
        ->capture_default_str();
    if (with_lambda)
      cmd->add_option("--lambda-per-cycle", lambda_per_cycle, "Arrivals per cycle")->capture_default_str();
    cmd->add_option("--cycles", cycles, "Simulated cycles per replication")->capture_default_str();
    cmd->add_option("--warmup", warmup, "Warm-up cycles discarded")->capture_default_str();
    cmd->add_option("--replications", replications, "Independent replications")->capture_default_str();
  }

  SignalTiming timing() const { return {cycle_s, red_s, green_s, service_s}; }

  SimConfig config(const ModelFlags& m, double lambda) const {
    SimConfig c;
    c.n_cycles = cycles;
    c.warmup_cycles = warmup;
    c.replications = replications;
    c.seed = RngSeed{m.seed};
    c.count_windows = m.windows;
    c.arrival_model = make_arrival_model(m.kind(), lambda / cycle_s, m.bunching());
    return c;
  }

  void describe(Metadata& meta, const SignalTiming& t) const {
    meta.emplace_back("cycle_s", num(t.cycle_s));
    meta.emplace_back("red_s", num(t.red_s));
    meta.emplace_back("green_s", num(t.green_s));
    meta.emplace_back("service_s", num(t.service_headway_s));
    meta.emplace_back("mu_per_cycle", num(t.service_rate()));
    meta.emplace_back("departure_slots", std::to_string(t.departure_slots()));
    meta.emplace_back("n_cycles", std::to_string(cycles));
    meta.emplace_back("warmup", std::to_string(warmup));
    meta.emplace_back("replications", std::to_string(replications));
  }
};

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  write_sweep_csv(os, rows);
  return os.str();
}

std::string pmf_csv(const Pmf& pmf) {
  std::ostringstream os;
  write_pmf_csv(os, pmf);
  return os.str();
}

std::string rho_label(double rho) { return format_double(rho, 3); }

int run(const std::vector<std::string>& args);

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Queue-length prediction from probe vehicles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", QPROBE_VERSION);

  Run run_state;
  run_state.args = args;
  std::function<void()> action;

  // pmf
  ModelFlags pmf_model;
  std::optional<double> pmf_vph, pmf_per_red;
  double pmf_red_s = 45.0, pmf_tail = kDefaultTailEps;
  auto* pmf_cmd = app.add_subcommand("pmf", "Count pmf of arrivals during red");
  pmf_model.add_to(pmf_cmd);
  auto* vph_opt = pmf_cmd->add_option("--lambda-vph", pmf_vph, "Arrival rate in vehicles per hour");
  auto* red_opt = pmf_cmd->add_option("--lambda-per-red", pmf_per_red, "Mean arrivals per red interval");
  vph_opt->excludes(red_opt);
  pmf_cmd->add_option("--red-s", pmf_red_s, "Red (window) duration in seconds")->capture_default_str();
  pmf_cmd->add_option("--tail-eps", pmf_tail, "Dropped tail mass for analytic pmfs")->capture_default_str();
  pmf_cmd->add_option("--out", run_state.out, "Output CSV path");
  pmf_cmd->callback([&] {
    action = [&] {
      if (!pmf_vph && !pmf_per_red) throw InvalidArgument("one of --lambda-vph or --lambda-per-red is required");
      if (!(pmf_red_s > 0.0)) throw InvalidArgument("--red-s must be positive");
      const double lambda_vps = pmf_vph ? *pmf_vph / 3600.0 : *pmf_per_red / pmf_red_s;
      CountSweepOptions opt{pmf_model.bunching(), RngSeed{pmf_model.seed}, pmf_model.windows, pmf_tail};
      const Pmf pmf = count_pmf(pmf_model.kind(), lambda_vps, pmf_red_s, opt);
      pmf_model.describe(run_state.meta, lambda_vps);
      run_state.meta.emplace_back("lambda_vps", num(lambda_vps));
      run_state.meta.emplace_back("lambda_per_red", num(lambda_vps * pmf_red_s));
      run_state.meta.emplace_back("red_s", num(pmf_red_s));
      run_state.meta.emplace_back("mean", num(mean(pmf)));
      run_state.meta.emplace_back("variance", num(variance(pmf)));
      run_state.emit(pmf_csv(pmf));
    };
  });

  // estimate
  std::string est_pmf;
  double est_p = 0.0, est_ref = 0.0;
  std::size_t est_lp = 0;
  bool est_show = false;
  auto* est_cmd = app.add_subcommand("estimate", "Conditional queue estimate given the last probe");
  est_cmd->add_option("--pmf", est_pmf, "Queue pmf CSV")->required();
  est_cmd->add_option("--p", est_p, "Probe proportion")->required();
  est_cmd->add_option("--lp", est_lp, "Position of the last probe (0 = no probe)")->required();
  est_cmd->add_option("--reference-mean", est_ref, "Reference mean for the percent error");
  est_cmd->add_flag("--show-pmf", est_show, "Also print the conditional pmf");
  est_cmd->add_option("--out", run_state.out, "Write the conditional pmf CSV here");
  est_cmd->callback([&] {
    action = [&] {
      const ProbeScenario s(load_pmf(est_pmf), est_p);
      const Pmf cond = conditional_pmf(s, est_lp);
      const auto summary = error_variance(s, est_ref);
      std::cout << "expected_queue=" << num(expected_queue(s, est_lp)) << '\n'
                << "conditional_variance=" << num(conditional_variance(s, est_lp)) << '\n'
                << "var_d=" << num(summary.var_d) << '\n'
                << "three_sigma=" << num(summary.three_sigma) << '\n'
                << "interval=" << kIntervalLabel << '\n';
      if (est_ref > 0.0) std::cout << "normalized_pct=" << num(summary.normalized_pct) << '\n';
      if (est_show && run_state.out.empty()) {
        std::cout << pmf_csv(cond);
      } else if (!run_state.out.empty()) {
        run_state.meta.emplace_back("p", num(est_p));
        run_state.meta.emplace_back("lp", std::to_string(est_lp));
        run_state.emit(pmf_csv(cond));
      }
    };
  });

  // sweep
  ModelFlags sw_model;
  std::string sw_pmf;
  std::vector<double> sw_lambda_vph, sw_p_grid;
  double sw_duration = 45.0, sw_lambda_ref = 0.0;
  std::string sw_reference = "lambda";
  for (int i = 0; i <= 20; ++i) sw_p_grid.push_back(i / 20.0);
  auto* sw_cmd = app.add_subcommand("sweep", "Var(D) across probe proportions");
  sw_model.add_to(sw_cmd);
  auto* sw_pmf_opt = sw_cmd->add_option("--pmf", sw_pmf, "Queue pmf CSV");
  auto* sw_grid_opt =
      sw_cmd->add_option("--lambda-grid", sw_lambda_vph, "Arrival rates in vehicles per hour")->delimiter(',');
  sw_pmf_opt->excludes(sw_grid_opt);
  sw_cmd->add_option("--p-grid", sw_p_grid, "Ascending probe proportions")->delimiter(',');
  sw_cmd->add_option("--duration-s", sw_duration, "Counting window for --lambda-grid")->capture_default_str();
  sw_cmd->add_option("--lambda-ref", sw_lambda_ref, "Mean arrivals used to label a --pmf sweep");
  sw_cmd->add_option("--reference", sw_reference, "Normalization for the printed summary")
      ->check(CLI::IsMember({"lambda", "mean-queue"}))
      ->capture_default_str();
  sw_cmd->add_option("--out", run_state.out, "Output CSV path");
  sw_cmd->callback([&] {
    action = [&] {
      std::vector<SweepRow> rows;
      if (!sw_pmf.empty()) {
        rows = sweep_p(load_pmf(sw_pmf), sw_p_grid, SweepLabels{"pmf", sw_lambda_ref, std::nullopt});
        run_state.meta.emplace_back("pmf", sw_pmf);
      } else {
        if (sw_lambda_vph.empty()) throw InvalidArgument("one of --pmf or --lambda-grid is required");
        std::vector<double> vps;
        for (double v : sw_lambda_vph) vps.push_back(v / 3600.0);
        CountSweepOptions opt{sw_model.bunching(), RngSeed{sw_model.seed}, sw_model.windows};
        rows = sweep_lambda(sw_model.kind(), vps, sw_p_grid, sw_duration, opt);
        sw_model.describe(run_state.meta, vps.front());
        run_state.meta.emplace_back("lambda_grid_vph", join(sw_lambda_vph));
        run_state.meta.emplace_back("duration_s", num(sw_duration));
      }
      run_state.meta.emplace_back("p_grid", join(sw_p_grid));
      run_state.meta.emplace_back("reference", sw_reference);
      run_state.meta.emplace_back("interval", kIntervalLabel);
      const auto ref = sw_reference == "lambda" ? Reference::Lambda : Reference::MeanQueue;
      for (const auto& r : rows)
        std::cerr << "lambda=" << num(r.lambda) << " p=" << num(r.p)
                  << " normalized_pct=" << format_double(normalized_pct(r, ref), 6) << '\n';
      run_state.emit(sweep_csv(rows));
    };
  });

  // simulate
  ModelFlags sim_model;
  SimFlags sim_flags;
  bool sim_no_overflow = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Equilibrium end-of-red queue pmf");
  sim_model.add_to(sim_cmd);
  sim_flags.add_to(sim_cmd);
  sim_cmd->add_flag("--no-overflow", sim_no_overflow, "Clear the queue at the end of every green");
  sim_cmd->add_option("--out", run_state.out, "Output CSV path");
  sim_cmd->callback([&] {
    action = [&] {
      const auto timing = sim_flags.timing();
      auto config = sim_flags.config(sim_model, sim_flags.lambda_per_cycle);
      config.carry_overflow = !sim_no_overflow;
      const auto result = run_fixed_cycle(timing, config);
      auto& meta = run_state.meta;
      sim_model.describe(meta, sim_flags.lambda_per_cycle / timing.cycle_s);
      sim_flags.describe(meta, timing);
      meta.emplace_back("lambda_per_cycle", num(sim_flags.lambda_per_cycle));
      meta.emplace_back("rho", rho_label(vc_ratio(timing, config)));
      std::string seeds;
      for (const auto& s : result.seeds) seeds += (seeds.empty() ? "" : ";") + std::to_string(s.value);
      meta.emplace_back("seeds", seeds);
      meta.emplace_back("overflow", config.carry_overflow ? "carried" : "cleared");
      meta.emplace_back("mean_n", num(result.mean_n));
      meta.emplace_back("var_n", num(result.var_n));
      meta.emplace_back("mean_overflow", num(result.mean_overflow));
      for (const auto& w : result.warnings) meta.emplace_back("warning", w);
      run_state.emit(pmf_csv(result.pmf));
    };
  });

  // overflow
  ModelFlags of_model;
  SimFlags of_flags;
  std::vector<double> of_p_grid{1e-4, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  auto* of_cmd = app.add_subcommand("overflow", "Var(D) with vs without the overflow queue");
  of_model.add_to(of_cmd);
  of_flags.add_to(of_cmd);
  of_cmd->add_option("--p-grid", of_p_grid, "Ascending probe proportions")->delimiter(',');
  of_cmd->add_option("--out", run_state.out, "Output CSV path");
  of_cmd->callback([&] {
    action = [&] {
      const auto timing = of_flags.timing();
      const auto config = of_flags.config(of_model, of_flags.lambda_per_cycle);
      const auto rows = overflow_comparison(timing, config, of_p_grid);
      of_model.describe(run_state.meta, of_flags.lambda_per_cycle / timing.cycle_s);
      of_flags.describe(run_state.meta, timing);
      run_state.meta.emplace_back("rho", rho_label(vc_ratio(timing, config)));
      std::ostringstream os;
      write_overflow_csv(os, rows);
      run_state.emit(os.str());
    };
  });

  // table1
  ModelFlags t1_model;
  SimFlags t1_flags;
  std::vector<double> t1_p_grid(reference::kTable1P.begin(), reference::kTable1P.end());
  auto* t1_cmd = app.add_subcommand("table1", "3-sigma error across p for both arrival models");
  t1_model.add_to(t1_cmd, false);
  t1_flags.add_to(t1_cmd);
  t1_cmd->add_option("--p-grid", t1_p_grid, "Ascending probe proportions")->delimiter(',');
  t1_cmd->add_option("--out", run_state.out, "Output CSV path");
  t1_cmd->callback([&] {
    action = [&] {
      const auto timing = t1_flags.timing();
      std::ostringstream os;
      os << kSweepHeader << ",reference,deviation_pct\n";
      for (ArrivalKind kind : {ArrivalKind::Bunched, ArrivalKind::NegExp}) {
        ModelFlags m = t1_model;
        m.model = kind == ArrivalKind::Bunched ? "bunched" : "poisson";
        const auto config = t1_flags.config(m, t1_flags.lambda_per_cycle);
        const double rho = vc_ratio(timing, config);
        const auto rows = sweep_p(simulate_fixed_cycle(timing, config), t1_p_grid,
                                  SweepLabels{kind_name(kind), t1_flags.lambda_per_cycle, rho});
        const auto& ref = kind == ArrivalKind::Bunched ? reference::kTable1Bunched : reference::kTable1NegExp;
        const bool default_scenario = t1_flags.lambda_per_cycle == reference::kTable1LambdaPerCycle &&
                                      timing.cycle_s == 90.0 && timing.red_s == 45.0 &&
                                      timing.service_headway_s == 2.0;
        for (const auto& r : rows) {
          os << sweep_csv_fields(r) << ',';
          std::optional<double> expected;
          for (std::size_t i = 0; i < reference::kTable1P.size() && default_scenario; ++i)
            if (reference::kTable1P[i] == r.p) expected = ref[i];
          if (expected)
            os << format_double(*expected, 6) << ','
               << format_double(100.0 * (r.three_sigma - *expected) / *expected, 6);
          else
            os << ',';
          os << '\n';
        }
      }
      t1_flags.describe(run_state.meta, timing);
      run_state.meta.emplace_back("lambda_per_cycle", num(t1_flags.lambda_per_cycle));
      run_state.meta.emplace_back("generator", kGeneratorName);
      run_state.meta.emplace_back("seed", std::to_string(t1_model.seed));
      run_state.meta.emplace_back("params", describe(calibrate_bunched(
                                                t1_flags.lambda_per_cycle / timing.cycle_s,
                                                t1_model.delta, t1_model.b)));
      run_state.meta.emplace_back("reference_field", "three_sigma");
      run_state.meta.emplace_back("interval", kIntervalLabel);
      run_state.emit(os.str());
    };
  });

  // table2
  ModelFlags t2_model;
  SimFlags t2_flags;
  std::vector<double> t2_rho, t2_lambda;
  bool t2_derive = false;
  double t2_p = reference::kTable2P;
  auto* t2_cmd = app.add_subcommand("table2", "E[Var(N | L_p)] across v/c ratios");
  t2_model.add_to(t2_cmd, false);
  t2_flags.add_to(t2_cmd, false);
  t2_cmd->add_option("--rho-grid", t2_rho, "v/c ratios")->delimiter(',');
  t2_cmd->add_option("--lambda-grid", t2_lambda, "Arrivals per cycle, one per rho")->delimiter(',');
  t2_cmd->add_flag("--derive-lambda", t2_derive, "Use lambda = rho * mu for every row");
  t2_cmd->add_option("--p", t2_p, "Probe proportion")->capture_default_str();
  t2_cmd->add_option("--out", run_state.out, "Output CSV path");
  t2_cmd->callback([&] {
    action = [&] {
      const auto timing = t2_flags.timing();
      std::vector<RhoPoint> points;
      if (t2_rho.empty() && t2_lambda.empty()) {
        for (const auto& row : reference::kTable2) points.push_back({row.rho, row.lambda_per_cycle});
        if (t2_derive) {
          std::vector<double> rhos;
          for (const auto& p : points) rhos.push_back(p.rho);
          points = derive_rho_points(timing, rhos);
        }
      } else if (t2_derive) {
        if (!t2_lambda.empty()) throw InvalidArgument("--derive-lambda conflicts with --lambda-grid");
        points = derive_rho_points(timing, t2_rho);
      } else {
        if (t2_lambda.size() != t2_rho.size())
          throw InvalidArgument("--lambda-grid needs one value per --rho-grid entry (or use --derive-lambda)");
        for (std::size_t i = 0; i < t2_rho.size(); ++i) points.push_back({t2_rho[i], t2_lambda[i]});
      }
      SimConfig base;
      base.n_cycles = t2_flags.cycles;
      base.warmup_cycles = t2_flags.warmup;
      base.replications = t2_flags.replications;
      base.seed = RngSeed{t2_model.seed};
      const auto rows = rho_sweep(timing, points, base, t2_model.bunching(), t2_p);

      std::ostringstream os;
      os << kSweepHeader << ",reference,deviation_pct\n";
      for (const auto& r : rows) {
        os << sweep_csv_fields(r) << ',';
        std::optional<double> expected;
        for (const auto& ref : reference::kTable2)
          if (ref.rho == r.rho && ref.lambda_per_cycle == r.lambda && t2_p == reference::kTable2P)
            expected = r.model == "bunched" ? ref.var_bunched : ref.var_negexp;
        if (expected)
          os << format_double(*expected, 6) << ','
             << format_double(100.0 * (r.var_d - *expected) / *expected, 6);
        else
          os << ',';
        os << '\n';
      }
      t2_flags.describe(run_state.meta, timing);
      run_state.meta.emplace_back("generator", kGeneratorName);
      run_state.meta.emplace_back("seed", std::to_string(t2_model.seed));
      run_state.meta.emplace_back("p", num(t2_p));
      run_state.meta.emplace_back("lambda_source", t2_derive ? "rho*mu" : "explicit");
      run_state.meta.emplace_back("reference_field", "var_d");
      run_state.emit(os.str());
    };
  });

  // replay
  std::string rp_manifest, rp_out;
  auto* rp_cmd = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
  rp_cmd->add_option("--manifest", rp_manifest, "Manifest written next to an output")->required();
  rp_cmd->add_option("--out", rp_out, "Write to this path instead of the recorded one");
  rp_cmd->callback([&] {
    action = [&] {
      std::ifstream is(rp_manifest);
      if (!is) throw IoError("cannot read manifest " + rp_manifest);
      std::map<std::size_t, std::string> recorded;
      for (std::string line; std::getline(is, line);) {
        if (line.rfind("arg.", 0) != 0) continue;
        const auto eq = line.find('=');
        recorded[parse_integer<std::size_t>(std::string_view(line).substr(4, eq - 4))] = line.substr(eq + 1);
      }
      if (recorded.empty()) throw InvalidArgument("manifest has no recorded arguments");
      std::vector<std::string> replay_args;
      for (auto& [i, a] : recorded) replay_args.push_back(a);
      if (!rp_out.empty()) {
        for (std::size_t i = 0; i + 1 < replay_args.size(); ++i)
          if (replay_args[i] == "--out") replay_args[i + 1] = rp_out;
      }
      const int code = run(replay_args);
      if (code != kExitOk) throw InvalidArgument("replayed command failed");
    };
  });

  std::vector<const char*> argv{"qprobe"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  run_state.command = app.get_subcommands().front()->get_name();
  // Record the effective seed so a replay does not depend on QPROBE_SEED.
  const bool seeded = std::any_of(args.begin(), args.end(), [](const std::string& a) {
    return a == "--seed" || a.rfind("--seed=", 0) == 0;
  });
  if (!seeded && run_state.command != "estimate" && run_state.command != "replay") {
    const std::map<std::string, const ModelFlags*> owner{
        {"pmf", &pmf_model}, {"sweep", &sw_model}, {"simulate", &sim_model},
        {"overflow", &of_model}, {"table1", &t1_model}, {"table2", &t2_model}};
    run_state.args.push_back("--seed");
    run_state.args.push_back(std::to_string(owner.at(run_state.command)->seed));
  }
  action();
  return kExitOk;
}

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const SaturationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSaturated;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
