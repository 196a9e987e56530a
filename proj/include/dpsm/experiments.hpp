#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dpsm/accuracy.hpp"
#include "dpsm/matrix_ext.hpp"
#include "dpsm/montecarlo.hpp"
#include "dpsm/precision.hpp"

namespace dpsm {

// Run configuration. Overrides hold experiment-specific keys as strings;
// unknown keys are rejected by the experiment entry points. Every emitted
// document starts with a comment line carrying the fully resolved
// configuration and its hash, so a run can be reproduced from its output.
struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    int workers = 4;
    std::string output_path; // empty or "-": stdout
    std::map<std::string, std::string> overrides;

    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;
};

struct ExperimentOutput {
    std::string text;                 // CSV or JSON document
    bool pass = true;                 // embedded assertions
    std::vector<std::string> failures;
};

// Flat key=value text; '#' comments and blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// FNV-1a 64 over the canonical resolved-config string.
std::uint64_t config_hash(const std::string& resolved);

// Fig-2 style trade-off: optimal-limit curve, iid staircase baseline at
// matched composition, complex-Shamir baseline pairs from a noise sweep.
// Columns: curve,epsilon,mse. Asserts the optimal curve dominates the iid
// baseline pointwise and the Shamir baseline at matched MSE.
ExperimentOutput run_tradeoff(const ExperimentConfig& cfg);

// Layered-scheme gap sweep over n with alpha1 = 1/n, alpha2 = alpha1 ln(1/alpha1).
// Columns: t,n,snr_p_actual,snr_a,gap_vs_target,gap_vs_actual. Asserts the
// actual gap decreases along n for each t.
ExperimentOutput run_gap_sweep(const ExperimentConfig& cfg);

// Randomized converse suite; JSON summary with violation count and
// tightness quantiles. Asserts zero violations.
ExperimentOutput run_converse_suite(const ExperimentConfig& cfg);

// Bit-budget sweeps for both schemes plus slope summary rows.
// Columns: scheme,t,delta,min_bits,overload_rate,mse,stderr.
ExperimentOutput run_precision_sweeps(const ExperimentConfig& cfg);

// Entrywise matrix extension experiment.
// Columns: m,l,k,entry_mse_max,stderr,scalar_lmse,entry_signal_power,entry_lmse_closed.
ExperimentOutput run_matrix(const ExperimentConfig& cfg);

// Full analysis of a serialized code: privacy and accuracy reports, the
// converse record when N <= 2t (a notice otherwise).
ExperimentOutput eval_scheme(const std::string& json_text, int t, const ExperimentConfig& cfg);

// Seeded random codes for the converse / null-vector suites: N(0,1)
// coefficients, t..t+2 noise coordinates per side, mixed noise kinds.
LinearCode random_code(Rng& rng, int t, int n_nodes);

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

} // namespace dpsm
