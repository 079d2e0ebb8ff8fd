#pragma once

// Arrival models: Poisson counts (negative exponential headways) and the
// bunched exponential (Cowan M3) headway model with geometric bunch sizes.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qprobe/errors.hpp"
#include "qprobe/format.hpp"
#include "qprobe/pmf.hpp"
#include "qprobe/rng.hpp"

namespace qprobe {

/// Calibrated bunched exponential parameters. Built by calibrate_bunched();
/// every instance satisfies phi = exp(-b*delta*lambda) and
/// theta = phi*lambda / (1 - delta*lambda).
struct BunchedParams {
  double lambda = 0.0;  // veh/s
  double delta = 0.0;   // s, minimum (intra-bunch) headway
  double b = 0.0;       // bunching constant
  double phi = 1.0;     // proportion of free vehicles
  double theta = 0.0;   // 1/s, decay rate of free headways
};

inline constexpr double kDefaultDelta = 1.5;
inline constexpr double kDefaultBunching = 0.6;

inline BunchedParams calibrate_bunched(double lambda, double delta, double b) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  if (!(b >= 0.0)) throw InvalidArgument("b must be non-negative");
  if (delta * lambda >= 1.0)
    throw SaturationError("delta*lambda = " + format_double(delta * lambda, 6) +
                          " >= 1: minimum headway saturates the flow");
  BunchedParams out;
  out.lambda = lambda;
  out.delta = delta;
  out.b = b;
  out.phi = std::exp(-b * delta * lambda);
  out.theta = out.phi * lambda / (1.0 - delta * lambda);
  return out;
}

/// P(N = n) for Poisson counts with mean `lambda_per_interval`, truncated so
/// the dropped tail is below `tail_eps`.
inline Pmf poisson_count_pmf(double lambda_per_interval, double tail_eps = kDefaultTailEps) {
  const double lambda = lambda_per_interval;
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("poisson lambda must be positive");
  if (!(tail_eps > 0.0 && tail_eps < 1.0)) throw InvalidArgument("tail_eps must lie in (0, 1)");

  // Recurse outward from the mode so e^{-lambda} never has to be formed
  // directly for large lambda.
  const auto mode = static_cast<std::size_t>(std::floor(lambda));
  if (mode >= kMaxSupport) throw InvalidArgument("poisson lambda exceeds the support cap");
  std::vector<double> probs(mode + 1, 0.0);
  const double mode_mass =
      std::exp(-lambda + static_cast<double>(mode) * std::log(lambda) -
               std::lgamma(static_cast<double>(mode) + 1.0));
  probs[mode] = mode_mass;
  for (std::size_t n = mode; n > 0; --n) probs[n - 1] = probs[n] * static_cast<double>(n) / lambda;

  // Upward: stop once the geometric bound on the remaining tail is negligible.
  for (std::size_t n = mode + 1;; ++n) {
    const double next = probs.back() * lambda / static_cast<double>(n);
    probs.push_back(next);
    const double ratio = lambda / static_cast<double>(n + 1);
    if (ratio < 1.0 && next * ratio / (1.0 - ratio) < 0.01 * tail_eps) break;
    if (n >= kMaxSupport) break;
  }
  return truncate(normalize(probs), tail_eps);
}

/// Geometric bunch size on {1, 2, ...} with success probability phi.
inline std::uint64_t sample_bunch_size(const BunchedParams& params, Rng& rng) {
  if (params.phi >= 1.0) return 1;
  const double u = rng.uniform_open();
  return 1 + static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-params.phi)));
}

/// One headway from the two-component mixture: exactly delta for a bunched
/// follower (probability 1 - phi), otherwise delta plus an exponential gap.
inline double sample_headway(const BunchedParams& params, Rng& rng) {
  if (rng.uniform_open() < 1.0 - params.phi) return params.delta;
  return params.delta + rng.exponential(params.theta);
}

struct PoissonArrivals {
  double lambda = 0.0;  // veh/s
};

using ArrivalModel = std::variant<PoissonArrivals, BunchedParams>;

inline double arrival_rate(const ArrivalModel& model) {
  return std::visit([](const auto& m) { return m.lambda; }, model);
}

inline std::string model_name(const ArrivalModel& model) {
  return std::holds_alternative<PoissonArrivals>(model) ? "negexp" : "bunched";
}

/// Cumulative arrival epochs of a stationary headway stream starting at t = 0.
class ArrivalStream {
 public:
  ArrivalStream(ArrivalModel model, RngSeed seed) : model_(std::move(model)), rng_(seed) {
    if (!(arrival_rate(model_) > 0.0)) throw InvalidArgument("arrival rate must be positive");
  }

  double next_headway() {
    if (const auto* bunched = std::get_if<BunchedParams>(&model_))
      return sample_headway(*bunched, rng_);
    return rng_.exponential(std::get<PoissonArrivals>(model_).lambda);
  }

  /// Advances to and returns the next arrival epoch.
  double next_arrival() {
    clock_ += next_headway();
    return clock_;
  }

  double clock() const { return clock_; }

 private:
  ArrivalModel model_;
  Rng rng_;
  double clock_ = 0.0;
};

inline constexpr std::size_t kDefaultWindows = 1'000'000;
inline constexpr std::size_t kMinWindows = 10'000;
inline constexpr std::size_t kBurnInArrivals = 1'000;

/// Empirical pmf of arrivals per window of length `duration`, counted over
/// `n_windows` consecutive windows of one long stream after a burn-in.
inline Pmf window_count_pmf(const ArrivalModel& model, double duration, std::size_t n_windows,
                            RngSeed seed) {
  if (!(duration > 0.0)) throw InvalidArgument("window duration must be positive");
  if (n_windows < kMinWindows)
    throw InvalidArgument("at least " + std::to_string(kMinWindows) + " windows required");
  ArrivalStream stream(model, seed);
  for (std::size_t i = 0; i < kBurnInArrivals; ++i) stream.next_arrival();
  const double origin = stream.clock();

  std::vector<std::uint64_t> hist(1, 0);
  std::size_t window = 0;
  std::uint64_t in_window = 0;
  double window_end = origin + duration;
  while (window < n_windows) {
    const double t = stream.next_arrival();
    while (t >= window_end && window < n_windows) {
      if (in_window >= hist.size()) hist.resize(in_window + 1, 0);
      ++hist[in_window];
      in_window = 0;
      ++window;
      window_end = origin + static_cast<double>(window + 1) * duration;
    }
    ++in_window;
  }
  return from_histogram(hist);
}

inline Pmf bunched_count_pmf(const BunchedParams& params, double duration,
                             std::size_t n_windows, RngSeed seed) {
  return window_count_pmf(params, duration, n_windows, seed);
}

/// Key-value echo of calibrated parameters for run metadata.
inline std::string describe(const BunchedParams& p) {
  return "lambda_vps=" + format_double(p.lambda, 12) + ", delta_s=" + format_double(p.delta, 12) +
         ", b=" + format_double(p.b, 12) + ", phi=" + format_double(p.phi, 12) +
         ", theta_per_s=" + format_double(p.theta, 12);
}

}  // namespace qprobe
