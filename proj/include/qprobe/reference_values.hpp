#pragma once

// Reference values for the two fixed-cycle reference scenarios. Kept here as
// data only; table commands and acceptance checks compare against them.
//
// Scenario: C = 90 s, r = g = 45 s, 2 s/veh service, 65,000 cycles with a
// 200-cycle warm-up, single-lane bunching (delta = 1.5 s, b = 0.6).

#include <array>

namespace qprobe::reference {

// 3-sigma prediction error (vehicles) at lambda = 20 veh/cycle, rho = 0.88.
inline constexpr std::array<double, 6> kTable1P = {1e-4, 0.1, 0.2, 0.3, 0.4, 0.5};
inline constexpr std::array<double, 6> kTable1Bunched = {6.9, 6.2, 5.4, 4.7, 4.0, 3.4};
inline constexpr std::array<double, 6> kTable1NegExp = {12.8, 9.8, 7.8, 6.2, 4.9, 3.9};
inline constexpr double kTable1LambdaPerCycle = 20.0;
inline constexpr double kTable1Rho = 0.88;

// E[Var(N | L_p)] at p = 0.5 for a range of v/c ratios. The lambda column
// is the reference one and is not always rho * 22.5.
struct Table2Row {
  double rho;
  double lambda_per_cycle;
  double var_bunched;
  double var_negexp;
  double pct_bunched;  // reference "3 sigma Dev. %" column
  double pct_negexp;
};

inline constexpr std::array<Table2Row, 7> kTable2 = {{
    {0.60, 13.50, 1.106, 1.395, 47, 52},
    {0.70, 15.75, 1.161, 1.472, 41, 46},
    {0.80, 18.00, 1.210, 1.553, 35, 40},
    {0.88, 20.00, 1.257, 1.654, 30, 34},
    {0.90, 20.25, 1.263, 1.672, 29, 33},
    {0.95, 21.38, 1.308, 1.766, 23, 27},
    {0.99, 22.00, 1.340, 1.876, 15, 17},
}};
inline constexpr double kTable2P = 0.5;

}  // namespace qprobe::reference
