#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "frameless/model.hpp"

namespace frameless::cli {

enum ExitCode : int
{
    kOk = 0,
    kValidationFailure = 1,
    kUsageError = 2,
};

/// Entry point shared by the executable and the tests. Data goes to `out`,
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct ValidationConfig
{
    int max_n = 4;
    int max_m = 4;
    int max_k = 2;
    int max_nm = 16;
    std::vector<double> betas{0.5, 1.0, 2.0};
    /// Also test beta = n at every n.
    bool include_beta_n = true;
    double tolerance = 1e-10;
    /// 0 disables the simulator comparison.
    long runs = 20000;
    uint64_t seed = 1;
};

struct ValidationRow
{
    int n = 0;
    int m = 0;
    int k = 0;
    double beta = 0.0;
    double analysis = 0.0;
    double oracle = 0.0;
    double simulated = 0.0;
    double sim_stderr = 0.0;
    bool exact_ok = true;
    bool sim_ok = true;
};

struct ValidationReport
{
    std::vector<ValidationRow> rows;
    bool ok() const;
};

using PerFunction = std::function<double(const SystemParams&)>;

/// Exact analysis (pruning off) against the brute-force oracle, and the
/// simulator against the oracle within 4 standard errors plus 5/runs.
/// `analysis_per` defaults to the real analysis; tests inject faulty ones.
/// Throws std::invalid_argument when max_nm exceeds the oracle budget.
ValidationReport run_validation(const ValidationConfig& config, const PerFunction& analysis_per = {});

/// The `validate` subcommand body: writes the CSV report and returns kOk or
/// kValidationFailure.
int run_validate_command(const ValidationConfig& config, const PerFunction& analysis_per, std::ostream& out,
                         std::ostream& err);

} // namespace frameless::cli
