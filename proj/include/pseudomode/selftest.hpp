#pragma once

#include <string>
#include <vector>

namespace pseudomode {

struct SelfCheck {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::string detail;
};

struct SelftestReport {
    std::vector<SelfCheck> checks;
    bool ok() const;
};

/// Tolerance multiplier from PMODE_SELFTEST_TOL_SCALE (1 when unset).
double selftest_tol_scale();

/// Property suites of the symbols, conditions, eikonal, transport, synth and cli layers.
/// A check passes when value < tol * tol_scale.
SelftestReport run_selftest(double tol_scale, unsigned long long seed = 7);

} // namespace pseudomode
