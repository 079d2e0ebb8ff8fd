#pragma once

// Finite-support probability mass functions over {0, 1, ..., n_max}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qprobe/errors.hpp"
#include "qprobe/format.hpp"

namespace qprobe {

// Tolerance on the total mass of an externally supplied pmf.
inline constexpr double kLoadTolerance = 1e-9;
// Default tail mass dropped when realizing an infinite-support pmf.
inline constexpr double kDefaultTailEps = 1e-12;
// Hard cap on the support of any generated pmf.
inline constexpr std::size_t kMaxSupport = 10'000;

/// Immutable pmf stored densely from n = 0. Entries are non-negative, sum to
/// one, and the last stored entry is non-zero.
class Pmf {
 public:
  Pmf() : probs_{1.0} {}

  static Pmf point_mass(std::size_t n) {
    std::vector<double> probs(n + 1, 0.0);
    probs[n] = 1.0;
    return Pmf(std::move(probs));
  }

  /// Accepts probabilities whose total is within `tolerance` of one and
  /// renormalizes them unless the total is already one up to rounding.
  static Pmf from_probabilities(std::vector<double> probs,
                                double tolerance = kLoadTolerance) {
    double total = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
      if (!(probs[n] >= 0.0) || !std::isfinite(probs[n]))
        throw InvalidArgument("probability at n=" + std::to_string(n) +
                              " is negative or not finite");
      total += probs[n];
    }
    if (std::abs(total - 1.0) > tolerance)
      throw InvalidArgument("probabilities sum to " + format_double(total, 17) +
                            ", not 1");
    if (std::abs(total - 1.0) > 1e-13)
      for (double& x : probs) x /= total;
    return Pmf(std::move(probs));
  }

  std::size_t n_max() const { return probs_.size() - 1; }
  std::size_t size() const { return probs_.size(); }

  /// P(N = n); zero outside the stored support.
  double operator[](std::size_t n) const { return n < probs_.size() ? probs_[n] : 0.0; }

  std::span<const double> probs() const { return probs_; }

  friend bool operator==(const Pmf&, const Pmf&) = default;

 private:
  friend Pmf normalize(std::span<const double> weights);

  explicit Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
    while (probs_.size() > 1 && probs_.back() == 0.0) probs_.pop_back();
  }

  std::vector<double> probs_;
};

/// Scales non-negative weights to unit total.
inline Pmf normalize(std::span<const double> weights) {
  if (weights.empty()) throw InvalidArgument("cannot normalize an empty weight sequence");
  double total = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (!(weights[n] >= 0.0) || !std::isfinite(weights[n]))
      throw InvalidArgument("weight at index " + std::to_string(n) +
                            " is negative or not finite");
    total += weights[n];
  }
  if (total <= 0.0) throw InvalidArgument("all weights are zero");
  std::vector<double> probs(weights.begin(), weights.end());
  for (double& x : probs) x /= total;
  return Pmf(std::move(probs));
}

inline double mean(const Pmf& pmf) {
  double m = 0.0;
  auto probs = pmf.probs();
  for (std::size_t n = 0; n < probs.size(); ++n) m += static_cast<double>(n) * probs[n];
  return m;
}

inline double variance(const Pmf& pmf) {
  const double m = mean(pmf);
  double v = 0.0;
  auto probs = pmf.probs();
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const double d = static_cast<double>(n) - m;
    v += d * d * probs[n];
  }
  return std::max(v, 0.0);
}

/// Keeps the shortest prefix whose dropped tail mass is below `tail_eps`,
/// then renormalizes.
inline Pmf truncate(const Pmf& pmf, double tail_eps) {
  if (!(tail_eps > 0.0 && tail_eps < 1.0))
    throw InvalidArgument("tail_eps must lie in (0, 1)");
  auto probs = pmf.probs();
  // tail[k] = sum_{n > k} P(n), accumulated from the back.
  std::vector<double> tail(probs.size(), 0.0);
  for (std::size_t k = probs.size() - 1; k > 0; --k) tail[k - 1] = tail[k] + probs[k];
  std::size_t keep = probs.size() - 1;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (tail[k] < tail_eps) {
      keep = k;
      break;
    }
  }
  return normalize(probs.subspan(0, keep + 1));
}

/// Pmf from a histogram where counts[n] is the number of observations of n.
inline Pmf from_histogram(std::span<const std::uint64_t> counts) {
  std::vector<double> weights(counts.begin(), counts.end());
  return normalize(weights);
}

/// Empirical relative-frequency pmf of observed non-negative integers.
inline Pmf from_samples(std::span<const std::uint64_t> samples) {
  if (samples.empty()) throw InvalidArgument("no samples");
  const std::uint64_t top = *std::max_element(samples.begin(), samples.end());
  std::vector<std::uint64_t> counts(top + 1, 0);
  for (auto s : samples) ++counts[s];
  return from_histogram(counts);
}

inline double total_variation(const Pmf& a, const Pmf& b) {
  const std::size_t n = std::max(a.size(), b.size());
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

// CSV: header `n,prob`, one row per support point.

inline void write_pmf_csv(std::ostream& os, const Pmf& pmf) {
  os << "n,prob\n";
  auto probs = pmf.probs();
  for (std::size_t n = 0; n < probs.size(); ++n)
    os << n << ',' << format_double(probs[n], 17) << '\n';
}

inline Pmf read_pmf_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != "n,prob")
    throw InvalidArgument("pmf csv: expected header 'n,prob'");
  std::vector<double> probs;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InvalidArgument("pmf csv: missing comma on line " + std::to_string(row));
    const auto n = parse_integer<std::size_t>(std::string_view(line).substr(0, comma));
    const double p = parse_double(std::string_view(line).substr(comma + 1));
    if (n > kMaxSupport)
      throw InvalidArgument("pmf csv: support index " + std::to_string(n) + " exceeds cap");
    if (n < probs.size() && probs[n] != 0.0)
      throw InvalidArgument("pmf csv: duplicate n=" + std::to_string(n));
    if (n >= probs.size()) probs.resize(n + 1, 0.0);
    probs[n] = p;
  }
  if (probs.empty()) throw InvalidArgument("pmf csv: no rows");
  return Pmf::from_probabilities(std::move(probs));
}

}  // namespace qprobe
