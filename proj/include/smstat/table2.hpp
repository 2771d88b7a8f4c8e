#pragma once

// Bundled 27-month benchmark/index fixture.
//
// These are approximate values read off a published chart of the Dutch
// consumer confidence index (CCI) and a social-media sentiment index (SMI);
// the true series are confidential. Treat them as illustrative, not as data.

#include <array>
#include <string>

#include "smstat/one_phase.hpp"

namespace smstat::fixtures {

inline constexpr std::array<double, 27> table2_cci{
    -17, -13, -8,  -12.5, -12.5, -11, -15, -5,    -2.5, -7,  -10, -10, -11,  -11,
    -19, -30, -38, -35.5, -40,   -34, -35, -37,   -32,  -36.5, -39, -30, -29};

inline constexpr std::array<double, 27> table2_smi{
    -16,   -15,   -17.5,  -17.5, -20,   -18, -4,  -10,   -10, -8,  -7.5, -11.5, -11.5, -9,
    -16.5, -22.5, -28.5, -29.35, -33.5, -40.5, -39, -39.5, -37, -32, -29,  -29.5, -29.5};

/// Periods are labelled "1" .. "27"; the source chart's calendar months are
/// not recoverable from the fixture.
inline PairedSeries table2() {
  PairedSeries s;
  for (std::size_t i = 0; i < table2_cci.size(); ++i) {
    const std::string label = std::to_string(i + 1);
    s.cci.periods.push_back(label);
    s.smi.periods.push_back(label);
    s.cci.values.push_back(table2_cci[i]);
    s.smi.values.push_back(table2_smi[i]);
  }
  return s;
}

}  // namespace smstat::fixtures
