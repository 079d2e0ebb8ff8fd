#pragma once

// Queue-length inference from the position of the last probe vehicle.
//
// Vehicles are probes independently with probability p. Given the position
// l of the deepest probe (0 when there is none), the posterior on the total
// queue N is P(N = n | l) proportional to (1 - p)^n P(N = n) for n >= l. All
// routines work for an arbitrary queue pmf.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qprobe/errors.hpp"
#include "qprobe/pmf.hpp"

namespace qprobe {

/// A queue-length pmf at the end of red paired with the probe proportion.
class ProbeScenario {
 public:
  ProbeScenario(Pmf queue_pmf, double p) : queue_pmf_(std::move(queue_pmf)), p_(p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw InvalidArgument("probe proportion p=" + format_double(p, 6) + " outside [0, 1]");
  }

  const Pmf& queue_pmf() const { return queue_pmf_; }
  double p() const { return p_; }

 private:
  Pmf queue_pmf_;
  double p_;
};

/// Var(D) of the prediction error D = N - E(N | L_p) with its 3-sigma band.
struct ErrorSummary {
  double var_d = 0.0;
  double sigma = 0.0;
  double three_sigma = 0.0;
  double normalized_pct = 0.0;  // 100 * three_sigma / reference mean
};

namespace detail {

/// Shifted tail moments of the (1-p)-tilted pmf, one entry per l:
///   t0[l] = sum_{n>=l} q^{n-l} P(n)
///   t1[l] = sum_{n>=l} (n-l) q^{n-l} P(n)
///   t2[l] = sum_{n>=l} (n-l)^2 q^{n-l} P(n)
/// Shifting by l keeps every term O(1) so nothing underflows for long queues.
struct TiltedTails {
  std::vector<double> t0, t1, t2;
};

inline TiltedTails tilted_tails(const Pmf& pmf, double q) {
  const std::size_t size = pmf.size();
  TiltedTails tails{std::vector<double>(size + 1, 0.0), std::vector<double>(size + 1, 0.0),
                    std::vector<double>(size + 1, 0.0)};
  auto& [t0, t1, t2] = tails;
  for (std::size_t l = size; l-- > 0;) {
    t0[l] = pmf[l] + q * t0[l + 1];
    t1[l] = q * (t1[l + 1] + t0[l + 1]);
    t2[l] = q * (t2[l + 1] + 2.0 * t1[l + 1] + t0[l + 1]);
  }
  return tails;
}

inline void check_position(const ProbeScenario& s, std::size_t l_p) {
  if (l_p > s.queue_pmf().n_max())
    throw InvalidArgument("last probe position " + std::to_string(l_p) +
                          " beyond queue support n_max=" + std::to_string(s.queue_pmf().n_max()));
}

inline double conditional_mean_at(const TiltedTails& t, std::size_t l) {
  return static_cast<double>(l) + t.t1[l] / t.t0[l];
}

inline double conditional_variance_at(const TiltedTails& t, std::size_t l) {
  const double m = t.t1[l] / t.t0[l];
  return std::max(t.t2[l] / t.t0[l] - m * m, 0.0);
}

}  // namespace detail

/// Posterior pmf of N given that the last probe sits at position l_p.
/// For p = 1 every vehicle is a probe and the result is a point mass at l_p.
inline Pmf conditional_pmf(const ProbeScenario& s, std::size_t l_p) {
  detail::check_position(s, l_p);
  if (s.p() >= 1.0) return Pmf::point_mass(l_p);
  const double q = 1.0 - s.p();
  const Pmf& pmf = s.queue_pmf();
  std::vector<double> weights(pmf.size(), 0.0);
  // Weights relative to q^{l_p}; the common factor cancels on normalization.
  double tilt = 1.0;
  for (std::size_t n = l_p; n < pmf.size(); ++n, tilt *= q) weights[n] = tilt * pmf[n];
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0))
    throw InvalidArgument("no queue mass at or beyond last probe position " + std::to_string(l_p));
  return normalize(weights);
}

inline double expected_queue(const ProbeScenario& s, std::size_t l_p) {
  detail::check_position(s, l_p);
  if (s.p() >= 1.0) return static_cast<double>(l_p);
  const auto tails = detail::tilted_tails(s.queue_pmf(), 1.0 - s.p());
  if (!(tails.t0[l_p] > 0.0))
    throw InvalidArgument("no queue mass at or beyond last probe position " + std::to_string(l_p));
  return detail::conditional_mean_at(tails, l_p);
}

inline double conditional_variance(const ProbeScenario& s, std::size_t l_p) {
  detail::check_position(s, l_p);
  if (s.p() >= 1.0) return 0.0;
  const auto tails = detail::tilted_tails(s.queue_pmf(), 1.0 - s.p());
  if (!(tails.t0[l_p] > 0.0))
    throw InvalidArgument("no queue mass at or beyond last probe position " + std::to_string(l_p));
  return detail::conditional_variance_at(tails, l_p);
}

/// Distribution of the last-probe position:
///   P(L = 0) = sum_n q^n P(n),  P(L = l) = p * sum_{n>=l} q^{n-l} P(n).
inline Pmf last_probe_marginal(const ProbeScenario& s) {
  const double p = s.p();
  const auto tails = detail::tilted_tails(s.queue_pmf(), 1.0 - p);
  std::vector<double> probs(s.queue_pmf().size(), 0.0);
  probs[0] = tails.t0[0];
  for (std::size_t l = 1; l < probs.size(); ++l) probs[l] = p * tails.t0[l];
  return normalize(probs);
}

/// Var(D) = sum_l P(L = l) Var(N | L = l), the expected posterior variance.
inline ErrorSummary error_variance(const ProbeScenario& s, double reference_mean = 0.0) {
  ErrorSummary out;
  const double p = s.p();
  if (p < 1.0) {
    const auto tails = detail::tilted_tails(s.queue_pmf(), 1.0 - p);
    out.var_d = tails.t0[0] * detail::conditional_variance_at(tails, 0);
    if (p > 0.0) {
      for (std::size_t l = 1; l < s.queue_pmf().size(); ++l) {
        if (tails.t0[l] > 0.0) out.var_d += p * tails.t0[l] * detail::conditional_variance_at(tails, l);
      }
    }
  }
  out.sigma = std::sqrt(out.var_d);
  out.three_sigma = 3.0 * out.sigma;
  out.normalized_pct = reference_mean > 0.0 ? 100.0 * out.three_sigma / reference_mean : 0.0;
  return out;
}

}  // namespace qprobe
