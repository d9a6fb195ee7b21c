#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace iflow {

struct CriterionResult {
    std::string id;
    std::string description;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;  // measured numbers backing the verdict
};

// Runs the full acceptance battery: rate reproduction on the shipped presets,
// energy-inequality certification and monotonicity sweeps, simulation-free
// property suites, and solver validation. One result per criterion; a
// progress line is printed to `log` as each criterion finishes.
std::vector<CriterionResult> run_acceptance(std::ostream& log);

bool all_passed(const std::vector<CriterionResult>& results);

// "PASS <id> ... (1.23s) detail" / "FAIL ..." for one result.
std::string format_result(const CriterionResult& r);

}  // namespace iflow
