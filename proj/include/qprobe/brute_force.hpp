#pragma once

// Exhaustive reference for error_variance(): enumerates every queue length n
// and every probe marking of its n vehicles, so it shares no algebra with the
// tilted-tail recursions in estimator.hpp.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qprobe/errors.hpp"
#include "qprobe/estimator.hpp"

namespace qprobe {

inline constexpr std::size_t kBruteForceMaxSupport = 20;

inline double brute_force_error_variance(const ProbeScenario& s) {
  const Pmf& pmf = s.queue_pmf();
  if (pmf.n_max() > kBruteForceMaxSupport)
    throw InvalidArgument("brute force enumeration limited to n_max <= " +
                          std::to_string(kBruteForceMaxSupport));
  const double p = s.p();
  const std::size_t size = pmf.size();

  // mass[n][l]: probability of queue n with the deepest probe at position l.
  // Vehicle i (1-based from the stop bar) is a probe iff bit i-1 is set.
  std::vector<std::vector<double>> mass(size, std::vector<double>(size, 0.0));
  for (std::size_t n = 0; n < size; ++n) {
    if (pmf[n] == 0.0) continue;
    const std::uint32_t markings = std::uint32_t{1} << n;
    for (std::uint32_t mask = 0; mask < markings; ++mask) {
      const int probes = std::popcount(mask);
      const std::size_t last = mask == 0 ? 0 : static_cast<std::size_t>(std::bit_width(mask));
      mass[n][last] += pmf[n] * std::pow(p, probes) * std::pow(1.0 - p, static_cast<int>(n) - probes);
    }
  }

  double var_d = 0.0;
  for (std::size_t l = 0; l < size; ++l) {
    double weight = 0.0, first = 0.0;
    for (std::size_t n = 0; n < size; ++n) {
      weight += mass[n][l];
      first += static_cast<double>(n) * mass[n][l];
    }
    if (weight == 0.0) continue;
    const double predicted = first / weight;
    for (std::size_t n = 0; n < size; ++n) {
      const double d = static_cast<double>(n) - predicted;
      var_d += d * d * mass[n][l];
    }
  }
  return var_d;
}

}  // namespace qprobe
