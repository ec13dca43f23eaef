#pragma once

// Monte Carlo comparison of the plug-in ratio (RSD) and the KHB ratio for a
// single binary mediator.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathlogit/dataset.hpp"
#include "pathlogit/fitting.hpp"
#include "pathlogit/model.hpp"

namespace pathlogit {

enum class TreatmentKind { binary, continuous };

std::string_view to_string(TreatmentKind kind);
TreatmentKind parse_treatment_kind(std::string_view text);

struct SimTruth {
    double beta0 = -2.0;
    double betaX = 0.4;
    double betaW = 2.0;
    double betaXW = 0.0;
    double gamma0 = -2.0;
    double gammaX = 2.0;
};

struct SimConfig {
    TreatmentKind treatment = TreatmentKind::binary;
    int n = 250;
    int replications = 2000;
    SimTruth truth;
    std::size_t pseudoPopulationSize = 150000;
    double treatmentVariance = 2.0;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
    double maxExcludedFraction = 0.05;
};

/// Y: 1,X,W,X:W and W: 1,X with a binary or continuous X.
SystemSpec sim_system(TreatmentKind kind);
ParameterSet truth_params(const SimConfig& config);

/// Estimation model used inside each replication (no X:W term, as in the truth).
SystemSpec sim_estimation_system(TreatmentKind kind);

/// Normal draws with the configured variance, seeded by the master seed only.
std::vector<double> pseudo_population(const SimConfig& config);

/// Continuous X values of the study sample: a seeded subsample of the
/// pseudo-population, fixed for a given (seed, n) and shared by all replications.
std::vector<double> treatment_sample(const SimConfig& config, const std::vector<double>& population);

/// Independent stream for replication `rep` of the cell described by `config`.
std::mt19937_64 replication_rng(const SimConfig& config, int rep);

/// Draws one replication. For continuous X, `xs` holds the fixed sample.
Dataset generate_data(const SimConfig& config, int rep, const std::vector<double>& xs = {});

/// Plug-in ratio: IE/TE for the {1,0} contrast (binary) or AIPE/ATPE over the sample (continuous).
double rsd_ratio(const Dataset& data, TreatmentKind kind, const FitControl& control = {});

/// KHB ratio (reduced - full)/reduced, using averaged partial effects for continuous X.
double khb_ratio(const Dataset& data, TreatmentKind kind, const FitControl& control = {});

struct TrueValue {
    double ratio = 0.0;
    double total = 0.0;  // TE (binary) or ATPE (continuous)
    bool defined() const;
};

TrueValue true_values(const SimConfig& config);
TrueValue true_values(const SimConfig& config, const std::vector<double>& population);

struct MethodSummary {
    double average = 0.0;
    double variance = 0.0;  // population variance over replications
    double rmse = 0.0;
    double mcse = 0.0;      // sqrt(variance / used)
};

struct SimResult {
    SimConfig config;
    TrueValue truth;
    MethodSummary rsd;
    MethodSummary khb;
    int used = 0;
    int excluded = 0;
    double meanTotal = 0.0;  // average estimated TE or ATPE
    bool ratioFlagged = false;  // true when the true total effect is zero
    bool failed() const;
};

MethodSummary summarize(const std::vector<double>& values, double truth);

SimResult run_study(const SimConfig& config);
SimResult run_study(const SimConfig& config, const std::vector<double>& population);

/// A grid of cells over treatment kinds, beta_x values and sample sizes.
struct StudyGrid {
    SimConfig base;
    std::vector<TreatmentKind> treatments{TreatmentKind::binary, TreatmentKind::continuous};
    std::vector<double> betaX{0.4, 0.9, 1.8};
    std::vector<int> sampleSizes{250, 500, 1000};

    std::vector<SimConfig> cells() const;
};

StudyGrid grid_from_json(const nlohmann::json& doc);
StudyGrid load_grid(const std::filesystem::path& path);

std::vector<SimResult> run_grid(const StudyGrid& grid);

/// One row per (method, cell): method,treatment,beta_x,n,average,variance,rmse,true_value,excluded,mcse
void write_results_csv(std::ostream& out, const std::vector<SimResult>& results);

}  // namespace pathlogit
