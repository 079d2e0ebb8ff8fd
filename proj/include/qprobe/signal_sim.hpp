#pragma once

// Fixed-cycle signal with a vertical queue.
//
// Each cycle starts with red. Arrivals come from one stationary stream that
// runs across cycle boundaries. During red every arrival joins the queue.
// During green a vehicle leaves at green onset and then every
// service_headway_s seconds while the queue is non-empty; green arrivals join
// only a non-empty queue and otherwise pass the stop line. The queue left at
// the end of green is the overflow carried into the next red. N is the queue
// at the end of red.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "qprobe/errors.hpp"
#include "qprobe/headway.hpp"
#include "qprobe/pmf.hpp"
#include "qprobe/rng.hpp"

namespace qprobe {

struct SignalTiming {
  double cycle_s = 90.0;
  double red_s = 45.0;
  double green_s = 45.0;
  double service_headway_s = 2.0;

  void validate() const {
    if (!(cycle_s > 0.0 && red_s > 0.0 && green_s > 0.0 && service_headway_s > 0.0))
      throw InvalidArgument("signal timing fields must all be positive");
    if (std::abs(red_s + green_s - cycle_s) > 1e-9 * cycle_s)
      throw InvalidArgument("red_s + green_s must equal cycle_s");
  }

  /// Service rate mu in vehicles per cycle (green / saturation headway).
  double service_rate() const { return green_s / service_headway_s; }

  /// Departure opportunities per green: offsets 0, h, 2h, ... strictly below green_s.
  std::size_t departure_slots() const {
    return static_cast<std::size_t>(std::ceil(green_s / service_headway_s));
  }
};

struct SimConfig {
  std::size_t n_cycles = 65'000;
  std::size_t warmup_cycles = 200;
  RngSeed seed{};
  ArrivalModel arrival_model = PoissonArrivals{20.0 / 90.0};
  std::size_t replications = 1;
  // false: the queue is cleared at the end of every green (no overflow).
  bool carry_overflow = true;
  // Windows used by red_only_count_pmf for Monte-Carlo count pmfs.
  std::size_t count_windows = kDefaultWindows;
};

inline double arrivals_per_cycle(const SignalTiming& t, const SimConfig& c) {
  return arrival_rate(c.arrival_model) * t.cycle_s;
}

/// v/c ratio rho = lambda / mu, both per cycle.
inline double vc_ratio(const SignalTiming& t, const SimConfig& c) {
  return arrivals_per_cycle(t, c) / t.service_rate();
}

inline constexpr std::size_t kMinRecordedCycles = 1'000;

struct SimResult {
  Pmf pmf;                                  // end-of-red queue N
  std::vector<std::uint32_t> end_of_red;    // N per recorded cycle, replications concatenated
  std::vector<std::uint64_t> overflow_hist; // queue at end of green, recorded cycles
  double mean_n = 0.0;
  double var_n = 0.0;
  double mean_overflow = 0.0;
  // Whole-run counters summed over replications (warm-up included).
  std::uint64_t arrivals = 0;
  std::uint64_t served = 0;
  std::uint64_t passed = 0;  // green arrivals that met an empty queue
  std::uint64_t cleared = 0; // removed at end of green when overflow is disabled
  std::uint64_t final_queue = 0;
  std::vector<RngSeed> seeds;
  std::vector<std::string> warnings;
};

namespace detail {

struct ReplicationOutput {
  std::vector<std::uint32_t> end_of_red;
  std::vector<std::uint64_t> overflow_hist;
  std::uint64_t arrivals = 0, served = 0, passed = 0, cleared = 0, final_queue = 0;
};

inline ReplicationOutput run_replication(const SignalTiming& timing, const SimConfig& config,
                                         RngSeed seed) {
  ReplicationOutput out;
  out.end_of_red.reserve(config.n_cycles - config.warmup_cycles);
  ArrivalStream stream(config.arrival_model, seed);
  const std::size_t slots = timing.departure_slots();
  std::uint64_t queue = 0;
  double next = stream.next_arrival();

  auto arrive_during_green = [&](double until) {
    while (next < until) {
      ++out.arrivals;
      if (queue > 0) ++queue; else ++out.passed;
      next = stream.next_arrival();
    }
  };

  for (std::size_t k = 0; k < config.n_cycles; ++k) {
    const double start = static_cast<double>(k) * timing.cycle_s;
    const double red_end = start + timing.red_s;
    while (next < red_end) {
      ++out.arrivals;
      ++queue;
      next = stream.next_arrival();
    }
    const bool recorded = k >= config.warmup_cycles;
    if (recorded) out.end_of_red.push_back(static_cast<std::uint32_t>(queue));

    for (std::size_t j = 0; j < slots; ++j) {
      arrive_during_green(red_end + static_cast<double>(j) * timing.service_headway_s);
      if (queue > 0) {
        --queue;
        ++out.served;
      }
    }
    arrive_during_green(start + timing.cycle_s);

    if (!config.carry_overflow) {
      out.cleared += queue;
      queue = 0;
    }
    if (recorded) {
      if (queue >= out.overflow_hist.size()) out.overflow_hist.resize(queue + 1, 0);
      ++out.overflow_hist[queue];
    }
  }
  out.final_queue = queue;
  return out;
}

inline void check_sim_inputs(const SignalTiming& timing, const SimConfig& config) {
  timing.validate();
  if (config.n_cycles <= config.warmup_cycles)
    throw InvalidArgument("n_cycles must exceed warmup_cycles");
  if (config.replications == 0) throw InvalidArgument("at least one replication required");
  if (!(arrival_rate(config.arrival_model) > 0.0))
    throw InvalidArgument("arrival rate must be positive");
  const double rho = vc_ratio(timing, config);
  if (rho >= 1.0)
    throw SaturationError("v/c ratio " + format_double(rho, 6) +
                          " >= 1: oversaturated signals are out of scope");
}

}  // namespace detail

/// Seed for replication r; replication 0 uses the configured seed itself so a
/// single run shares its arrival stream with red_only_count_pmf.
inline RngSeed replication_seed(RngSeed base, std::size_t r) {
  return r == 0 ? base : derive_seed(base, r);
}

inline SimResult run_fixed_cycle(const SignalTiming& timing, const SimConfig& config) {
  detail::check_sim_inputs(timing, config);

  std::vector<std::future<detail::ReplicationOutput>> jobs;
  SimResult result;
  for (std::size_t r = 0; r < config.replications; ++r) {
    const RngSeed seed = replication_seed(config.seed, r);
    result.seeds.push_back(seed);
    jobs.push_back(std::async(config.replications > 1 ? std::launch::async : std::launch::deferred,
                              [&timing, &config, seed] {
                                return detail::run_replication(timing, config, seed);
                              }));
  }

  std::vector<std::uint64_t> hist;
  for (auto& job : jobs) {
    auto rep = job.get();
    for (auto n : rep.end_of_red) {
      if (n >= hist.size()) hist.resize(n + 1, 0);
      ++hist[n];
    }
    if (rep.overflow_hist.size() > result.overflow_hist.size())
      result.overflow_hist.resize(rep.overflow_hist.size(), 0);
    for (std::size_t i = 0; i < rep.overflow_hist.size(); ++i)
      result.overflow_hist[i] += rep.overflow_hist[i];
    result.end_of_red.insert(result.end_of_red.end(), rep.end_of_red.begin(), rep.end_of_red.end());
    result.arrivals += rep.arrivals;
    result.served += rep.served;
    result.passed += rep.passed;
    result.cleared += rep.cleared;
    result.final_queue += rep.final_queue;
  }

  result.pmf = from_histogram(hist);
  result.mean_n = mean(result.pmf);
  result.var_n = variance(result.pmf);
  result.mean_overflow = mean(from_histogram(result.overflow_hist));
  if (config.n_cycles - config.warmup_cycles < kMinRecordedCycles)
    result.warnings.push_back("fewer than " + std::to_string(kMinRecordedCycles) +
                              " cycles recorded after warm-up");
  return result;
}

/// Equilibrium pmf of the total queue at the end of red.
inline Pmf simulate_fixed_cycle(const SignalTiming& timing, const SimConfig& config) {
  return run_fixed_cycle(timing, config).pmf;
}

/// Arrivals during one red interval with no carried-over queue: analytic for
/// Poisson arrivals, Monte-Carlo windows of length red_s for bunched arrivals.
inline Pmf red_only_count_pmf(const SignalTiming& timing, const SimConfig& config,
                              double tail_eps = kDefaultTailEps) {
  detail::check_sim_inputs(timing, config);
  if (const auto* poisson = std::get_if<PoissonArrivals>(&config.arrival_model))
    return poisson_count_pmf(poisson->lambda * timing.red_s, tail_eps);
  return bunched_count_pmf(std::get<BunchedParams>(config.arrival_model), timing.red_s,
                           config.count_windows, config.seed);
}

}  // namespace qprobe
