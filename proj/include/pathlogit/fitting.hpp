#pragma once

// Maximum-likelihood fitting of the logistic equations of a recursive system.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pathlogit/dataset.hpp"
#include "pathlogit/model.hpp"

namespace pathlogit {

struct FitControl {
    double scoreTolerance = 1e-8;
    double relativeLoglikTolerance = 1e-12;
    int maxIterations = 100;
    int maxHalvings = 10;
    double separationBound = 50.0;
};

struct FitDiagnostics {
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool separation = false;
    double maxScore = 0.0;
};

struct LogisticFit {
    std::vector<std::string> labels;
    Eigen::VectorXd coef;
    Eigen::MatrixXd covariance;  // inverse observed information at the estimate
    FitDiagnostics diagnostics;
    double n = 0.0;  // total weight
};

/// Newton-Raphson with step halving on a weighted design. Throws on empty data
/// or a rank-deficient design, naming the collinear columns.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& weights, std::vector<std::string> labels,
                         const FitControl& control = {});

/// Builds the dummy-coded design of one equation of `layout` from `data`.
void build_design(const Dataset& data, const ParameterLayout& layout, std::size_t eq,
                  Eigen::MatrixXd& design, Eigen::VectorXd& y, Eigen::VectorXd& weights);

LogisticFit fit_logistic(const Dataset& data, const ParameterLayout& layout, std::size_t eq,
                         const FitControl& control = {});

struct FittedSystem {
    ParameterSet params;
    Eigen::MatrixXd covariance;  // block diagonal by equation
    std::vector<FitDiagnostics> perEquation;
    double n = 0.0;

    double se(std::size_t coefficient) const;
    bool allConverged() const;
};

FittedSystem fit_system(const Dataset& data, const SystemSpec& spec, const FitControl& control = {});

nlohmann::json to_json(const FittedSystem& fitted);
FittedSystem fitted_from_json(const nlohmann::json& doc);

}  // namespace pathlogit
