#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "loopalloc/fbl.hpp"

namespace loopalloc::verify {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

// The curvature-figure classification check, with an injectable threshold
// so a corrupted constant demonstrably fails it (negative control).
CheckResult check_curvature_classification(
    std::optional<fbl::CurvatureThreshold> injected = std::nullopt);

// Runs every acceptance check in order. Deterministic (fixed seeds).
std::vector<CheckResult> run_all_checks();

// Prints one status line per check plus a summary; returns 0 iff all pass.
int run_and_report(std::ostream& os);

}  // namespace loopalloc::verify
