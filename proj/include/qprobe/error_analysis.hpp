#pragma once

// Confidence bands for the prediction error and the scenario sweeps built on
// error_variance(): p sweeps, arrival-rate sweeps, overflow comparisons and
// v/c sweeps. Rows come back in grid order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qprobe/errors.hpp"
#include "qprobe/estimator.hpp"
#include "qprobe/format.hpp"
#include "qprobe/headway.hpp"
#include "qprobe/pmf.hpp"
#include "qprobe/signal_sim.hpp"

namespace qprobe {

inline constexpr const char* kIntervalLabel = "VP/3sigma (unimodality assumed)";

/// Vysochanskii-Petunin bound on P(|X - mu| > epsilon) for a unimodal X with
/// standard deviation sigma, clamped to [0, 1]:
///   4 sigma^2 / (9 epsilon^2)        for epsilon >= sigma sqrt(8/3)
///   4 sigma^2 / (3 epsilon^2) - 1/3  below that
/// Both branches equal 1/6 at the breakpoint; at epsilon = 3 sigma the bound is 4/81.
inline double vp_bound(double epsilon, double sigma) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  if (sigma == 0.0) return 0.0;
  const double k = epsilon / sigma;
  if (k >= std::sqrt(8.0 / 3.0)) return std::min(4.0 / (9.0 * k * k), 1.0);
  return std::clamp(4.0 / (3.0 * k * k) - 1.0 / 3.0, 0.0, 1.0);
}

enum class ArrivalKind { NegExp, Bunched };

inline std::string kind_name(ArrivalKind kind) {
  return kind == ArrivalKind::NegExp ? "negexp" : "bunched";
}

struct BunchingOptions {
  double delta = kDefaultDelta;
  double b = kDefaultBunching;
};

inline ArrivalModel make_arrival_model(ArrivalKind kind, double lambda_vps,
                                       const BunchingOptions& bunching = {}) {
  if (kind == ArrivalKind::NegExp) {
    if (!(lambda_vps > 0.0)) throw InvalidArgument("lambda must be positive");
    return PoissonArrivals{lambda_vps};
  }
  return calibrate_bunched(lambda_vps, bunching.delta, bunching.b);
}

enum class Reference { Lambda, MeanQueue };

struct SweepRow {
  std::string model;
  double lambda = 0.0;          // mean arrivals per reference interval
  std::optional<double> rho;    // v/c ratio when a signal is involved
  double p = 0.0;
  double var_d = 0.0;
  double sigma = 0.0;
  double three_sigma = 0.0;
  double pct_of_lambda = 0.0;
  double pct_of_mean_queue = 0.0;
};

inline double normalized_pct(const SweepRow& row, Reference ref) {
  return ref == Reference::Lambda ? row.pct_of_lambda : row.pct_of_mean_queue;
}

struct SweepLabels {
  std::string model;
  double lambda = 0.0;
  std::optional<double> rho;
};

inline void check_p_grid(std::span<const double> p_grid) {
  if (p_grid.empty()) throw InvalidArgument("p grid is empty");
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (!(p_grid[i] >= 0.0 && p_grid[i] <= 1.0))
      throw InvalidArgument("p grid value " + format_double(p_grid[i], 6) + " outside [0, 1]");
    if (i > 0 && !(p_grid[i] > p_grid[i - 1]))
      throw InvalidArgument("p grid must be strictly ascending");
  }
}

inline std::vector<SweepRow> sweep_p(const Pmf& queue_pmf, std::span<const double> p_grid,
                                     const SweepLabels& labels) {
  check_p_grid(p_grid);
  const double queue_mean = mean(queue_pmf);
  std::vector<SweepRow> rows;
  rows.reserve(p_grid.size());
  for (double p : p_grid) {
    const auto summary = error_variance(ProbeScenario(queue_pmf, p));
    SweepRow row{labels.model, labels.lambda, labels.rho, p, summary.var_d, summary.sigma,
                 summary.three_sigma};
    row.pct_of_lambda = labels.lambda > 0.0 ? 100.0 * row.three_sigma / labels.lambda : 0.0;
    row.pct_of_mean_queue = queue_mean > 0.0 ? 100.0 * row.three_sigma / queue_mean : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct CountSweepOptions {
  BunchingOptions bunching{};
  RngSeed seed{};
  std::size_t windows = kDefaultWindows;
  double tail_eps = kDefaultTailEps;
};

/// Count pmf of arrivals in a window of `duration_s`: analytic for NegExp,
/// Monte-Carlo for bunched.
inline Pmf count_pmf(ArrivalKind kind, double lambda_vps, double duration_s,
                     const CountSweepOptions& opt) {
  const auto model = make_arrival_model(kind, lambda_vps, opt.bunching);
  if (kind == ArrivalKind::NegExp) return poisson_count_pmf(lambda_vps * duration_s, opt.tail_eps);
  return bunched_count_pmf(std::get<BunchedParams>(model), duration_s, opt.windows, opt.seed);
}

/// One block of p rows per arrival rate (veh/s); rows are labelled with the
/// mean count per window. No overflow queue is involved.
inline std::vector<SweepRow> sweep_lambda(ArrivalKind kind, std::span<const double> lambda_grid_vps,
                                          std::span<const double> p_grid, double duration_s,
                                          const CountSweepOptions& opt = {}) {
  check_p_grid(p_grid);
  if (lambda_grid_vps.empty()) throw InvalidArgument("lambda grid is empty");
  if (!(duration_s > 0.0)) throw InvalidArgument("duration must be positive");
  // Validate every rate up front so a saturated grid fails before any work.
  for (double lambda : lambda_grid_vps) make_arrival_model(kind, lambda, opt.bunching);

  std::vector<std::future<std::vector<SweepRow>>> jobs;
  for (std::size_t i = 0; i < lambda_grid_vps.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      CountSweepOptions row_opt = opt;
      row_opt.seed = derive_seed(opt.seed, i);
      const double lambda = lambda_grid_vps[i];
      const Pmf pmf = count_pmf(kind, lambda, duration_s, row_opt);
      return sweep_p(pmf, p_grid, SweepLabels{kind_name(kind), lambda * duration_s, std::nullopt});
    }));
  }
  std::vector<SweepRow> rows;
  for (auto& job : jobs) {
    auto block = job.get();
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

struct OverflowRow {
  std::string model;
  double p = 0.0;
  double var_with = 0.0;     // Var(D) from the simulated end-of-red queue
  double var_without = 0.0;  // Var(D) from red arrivals only
  double pct_diff = 0.0;     // 100 * (with - without) / with
};

/// Var(D) with and without the overflow queue. Both pmfs are built from the
/// same arrival-stream seed.
inline std::vector<OverflowRow> overflow_comparison(const SignalTiming& timing,
                                                    const SimConfig& config,
                                                    std::span<const double> p_grid) {
  check_p_grid(p_grid);
  const Pmf with = simulate_fixed_cycle(timing, config);
  const Pmf without = red_only_count_pmf(timing, config);
  std::vector<OverflowRow> rows;
  for (double p : p_grid) {
    OverflowRow row{model_name(config.arrival_model), p};
    row.var_with = error_variance(ProbeScenario(with, p)).var_d;
    row.var_without = error_variance(ProbeScenario(without, p)).var_d;
    row.pct_diff = row.var_with > 0.0 ? 100.0 * (row.var_with - row.var_without) / row.var_with : 0.0;
    rows.push_back(row);
  }
  return rows;
}

struct RhoPoint {
  double rho = 0.0;
  double lambda_per_cycle = 0.0;
};

/// Points with lambda = rho * mu for each rho.
inline std::vector<RhoPoint> derive_rho_points(const SignalTiming& timing,
                                               std::span<const double> rho_grid) {
  std::vector<RhoPoint> points;
  for (double rho : rho_grid) points.push_back({rho, rho * timing.service_rate()});
  return points;
}

/// Simulates both arrival models at each (rho, lambda) point and reports one
/// row per model at probe proportion p. Rows are bunched then negexp per point.
inline std::vector<SweepRow> rho_sweep(const SignalTiming& timing, std::span<const RhoPoint> points,
                                       const SimConfig& base, const BunchingOptions& bunching = {},
                                       double p = 0.5) {
  if (points.empty()) throw InvalidArgument("rho grid is empty");
  for (const auto& pt : points) {
    if (!(pt.rho > 0.0 && pt.rho < 1.0))
      throw SaturationError("rho grid value " + format_double(pt.rho, 6) + " outside (0, 1)");
    if (!(pt.lambda_per_cycle > 0.0)) throw InvalidArgument("lambda must be positive");
  }
  const double p_grid[] = {p};

  std::vector<std::future<std::vector<SweepRow>>> jobs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (ArrivalKind kind : {ArrivalKind::Bunched, ArrivalKind::NegExp}) {
      SimConfig config = base;
      config.seed = derive_seed(base.seed, i);
      config.arrival_model =
          make_arrival_model(kind, points[i].lambda_per_cycle / timing.cycle_s, bunching);
      detail::check_sim_inputs(timing, config);
      jobs.push_back(std::async(std::launch::async, [&timing, config, kind, pt = points[i], &p_grid] {
        const Pmf pmf = simulate_fixed_cycle(timing, config);
        return sweep_p(pmf, p_grid, SweepLabels{kind_name(kind), pt.lambda_per_cycle, pt.rho});
      }));
    }
  }
  std::vector<SweepRow> rows;
  for (auto& job : jobs) {
    auto block = job.get();
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

// Sweep CSV: header `model,lambda,rho,p,var_d,sigma,three_sigma,pct_of_lambda,
// pct_of_mean_queue`, 6 significant digits; an empty rho field means no signal.

inline constexpr const char* kSweepHeader =
    "model,lambda,rho,p,var_d,sigma,three_sigma,pct_of_lambda,pct_of_mean_queue";

inline std::string sweep_csv_fields(const SweepRow& r) {
  auto f = [](double x) { return format_double(x, 6); };
  return r.model + ',' + f(r.lambda) + ',' + (r.rho ? f(*r.rho) : std::string()) + ',' + f(r.p) +
         ',' + f(r.var_d) + ',' + f(r.sigma) + ',' + f(r.three_sigma) + ',' + f(r.pct_of_lambda) +
         ',' + f(r.pct_of_mean_queue);
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << kSweepHeader << '\n';
  for (const auto& r : rows) os << sweep_csv_fields(r) << '\n';
}

inline void write_overflow_csv(std::ostream& os, std::span<const OverflowRow> rows) {
  auto f = [](double x) { return format_double(x, 6); };
  os << "model,p,var_d_with_overflow,var_d_without_overflow,pct_diff\n";
  for (const auto& r : rows)
    os << r.model << ',' << f(r.p) << ',' << f(r.var_with) << ',' << f(r.var_without) << ','
       << f(r.pct_diff) << '\n';
}

}  // namespace qprobe
