#pragma once

// Seeded property suites for the numbered acceptance criteria. Each suite
// draws from its own RNG stream, so results depend only on (seed, criterion)
// and not on the thread count or on which other suites run.

#include "dirac_bvp/io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dbvp {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;         // checks hold and the time limit is met
    bool checks_passed = false;  // checks only; deterministic
    double seconds = 0.0;  // wall time, kept out of the JSON report
    double time_limit = 0.0;
    Json details;          // checked quantities, each with lhs/rhs/margin/holds
};

/// Criteria 1 to 9. The returned result fails when a check fails or the suite
/// runs past its time limit.
CriterionResult run_criterion(int id, std::uint64_t seed);

/// Criterion 10: runs 1 to 9 at `threads` workers and again at a different
/// worker count, and compares the serialized reports byte for byte.
CriterionResult run_reproducibility(std::uint64_t seed, int threads,
                                    const std::vector<CriterionResult>& first_pass);

struct AcceptanceRun {
    std::vector<CriterionResult> results;
    bool passed() const;
};

/// Runs the selected criteria (all when `which` is empty).
AcceptanceRun run_acceptance(std::uint64_t seed, int threads, const std::vector<int>& which = {});

/// Report without timings, so it is byte-identical across runs at a fixed
/// seed: {"schema_version", "seed", "checks_passed", "criteria": [...]}.
Json acceptance_json(const AcceptanceRun& run, std::uint64_t seed);

/// "[PASS] 3  model a priori estimate (1.23 s)"
std::string summary_line(const CriterionResult& result);

} // namespace dbvp
