#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prodmat/limit.hpp"
#include "prodmat/measures.hpp"

namespace prodmat {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnsembleSpec {
    enum class Kind { FixedSpectrum, GinibrePolar, TruncatedUnitary };
    Kind kind = Kind::FixedSpectrum;
    std::vector<double> atoms;  // fixed_spectrum: cycled to N atoms
    double ratio = 2.0;         // rows/N for ginibre_polar, ambient/N for truncated_unitary
};

struct JointQuery {
    std::vector<double> c;
    std::vector<int> m;  // nonincreasing checkpoint indices
};

struct ExperimentConfig {
    EnsembleSpec ensemble;
    std::optional<EnsembleSpec> ensemble_b;  // same-gamma cross-ensemble KS check
    int n = 0;
    int m = 0;
    std::vector<double> c_grid;
    std::vector<JointQuery> joint_queries;
    int replicas = 0;
    std::uint64_t seed = 1;
    double containment_c = 0.0;  // declared C of condition (i); 0 = skip check
};

ExperimentConfig parse_config(const std::string& json_text);
std::string config_canonical_json(const ExperimentConfig& cfg);
std::string sha1_hex(const std::string& data);

struct QueryResult {
    std::vector<double> c;
    std::vector<int> m;
    std::vector<double> gamma_hat;
    double formula = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double z = 0.0;
    bool gamma_zero = false;
};

struct StatResult {
    std::string name;
    double statistic = 0.0;
    double p_value = 1.0;
};

struct ExperimentReport {
    std::string kind;
    std::string config_hash;
    std::vector<QueryResult> queries;
    std::vector<StatResult> statistics;
    std::vector<double> top_samples_a;  // centered top values at the last checkpoint
    std::vector<double> top_samples_b;
    int replicas = 0;
    int n = 0;
    bool pass = true;  // |z| <= 4 everywhere and KS p > 0.01
};

// Thm-1.4-style Monte Carlo against the limiting Laplace transform at the
// accumulated-variance time.
ExperimentReport run_universality(const ExperimentConfig& cfg, bool parallel = true);

// Small-N shift-operator expansion against Monte Carlo.
ExperimentReport run_oracle_smalln(const ExperimentConfig& cfg, bool parallel = true);

struct ConvergenceRow {
    int n = 0;
    double finite_n = 0.0;
    double limit = 0.0;
    double err = 0.0;
    double ratio = 0.0;  // err / previous err
    bool exact = false;
};

std::vector<ConvergenceRow> run_convergence_sweep(double c, double t, const std::vector<int>& ns);

struct SamplePaths {
    int n = 0;
    std::vector<double> times;                // ensemble clock t
    std::vector<std::vector<double>> values;  // [time][j], centered, descending in j
};

// Centered trajectories xi_j(t/4) - N t/2 - log N on a uniform t-grid.
SamplePaths run_sample_paths(int n, double t_max, int steps, std::uint64_t seed,
                             double sim_step = 0.0);

void write_sample_paths_csv(const SamplePaths& paths, const std::string& path);
void write_report_json(const ExperimentReport& rep, const ExperimentConfig& cfg,
                       const std::string& path);
void write_samples_csv(const ExperimentReport& rep, const std::string& path);
void write_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path);
void write_meta_json(double wall_seconds, int workers, const std::string& path);

}  // namespace prodmat
