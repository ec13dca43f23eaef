#include "pathlogit/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pathlogit/numeric.hpp"

namespace pathlogit {

namespace {

double loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
              const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += w[i] * (y[i] * eta[i] - softplus(eta[i]));
    return ll;
}

// Score and observed information at beta.
void score_info(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                const Eigen::VectorXd& beta, Eigen::VectorXd& score, Eigen::MatrixXd& info) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd resid(eta.size()), curv(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double p = expit(eta[i]);
        resid[i] = w[i] * (y[i] - p);
        curv[i] = w[i] * p * (1.0 - p);
    }
    score = X.transpose() * resid;
    info = X.transpose() * curv.asDiagonal() * X;
}

}  // namespace

LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& weights, std::vector<std::string> labels,
                         const FitControl& control) {
    const auto p = design.cols();
    if (static_cast<Eigen::Index>(labels.size()) != p)
        throw std::invalid_argument("label count does not match design columns");
    const double n = weights.sum();
    if (design.rows() == 0 || !(n > 0.0)) throw std::invalid_argument("empty data");

    // Rank on the rows that carry weight.
    std::vector<Eigen::Index> live;
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (weights[i] > 0.0) live.push_back(i);
    Eigen::MatrixXd support(static_cast<Eigen::Index>(live.size()), p);
    for (std::size_t r = 0; r < live.size(); ++r) support.row(static_cast<Eigen::Index>(r)) = design.row(live[r]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(support);
    if (qr.rank() < p) {
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < p; ++j) {
            if (!names.empty()) names += ", ";
            names += labels[static_cast<std::size_t>(perm[j])];
        }
        throw std::invalid_argument("rank-deficient design: collinear terms " + names);
    }

    LogisticFit fit;
    fit.labels = std::move(labels);
    fit.n = n;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double ll = loglik(design, y, weights, beta);
    Eigen::VectorXd score;
    Eigen::MatrixXd info;
    auto& diag = fit.diagnostics;

    for (int iter = 1; iter <= control.maxIterations; ++iter) {
        score_info(design, y, weights, beta, score, info);
        if (score.cwiseAbs().maxCoeff() < control.scoreTolerance) {
            diag.converged = true;
            break;
        }
        diag.iterations = iter;
        Eigen::VectorXd step = info.ldlt().solve(score);
        Eigen::VectorXd trial = beta + step;
        double llTrial = loglik(design, y, weights, trial);
        for (int h = 0; h < control.maxHalvings && !(llTrial >= ll); ++h) {
            step *= 0.5;
            trial = beta + step;
            llTrial = loglik(design, y, weights, trial);
        }
        if (!(llTrial >= ll)) {
            // No ascent along the Newton direction: numerically at the optimum.
            diag.converged = true;
            break;
        }
        const double change = std::abs(llTrial - ll) / (std::abs(ll) + 0.1);
        beta = trial;
        ll = llTrial;
        if (change < control.relativeLoglikTolerance) {
            diag.converged = true;
            break;
        }
    }
    score_info(design, y, weights, beta, score, info);
    diag.loglik = ll;
    diag.maxScore = score.cwiseAbs().maxCoeff();
    if (diag.iterations >= control.maxIterations && !diag.converged) diag.separation = true;
    if (beta.cwiseAbs().maxCoeff() > control.separationBound) diag.separation = true;
    for (Eigen::Index i = 0; i < design.rows() && !diag.separation; ++i) {
        const double mu = expit(design.row(i).dot(beta));
        if (weights[i] > 0.0 && std::min(mu, 1.0 - mu) < 1e-8) diag.separation = true;
    }

    fit.coef = beta;
    Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    fit.covariance = 0.5 * (cov + cov.transpose());
    return fit;
}

void build_design(const Dataset& data, const ParameterLayout& layout, std::size_t eq,
                  Eigen::MatrixXd& design, Eigen::VectorXd& y, Eigen::VectorXd& weights) {
    const auto& el = layout.equations().at(eq);
    const auto& spec = layout.spec();
    const auto nvar = layout.variableCount();

    std::vector<std::optional<std::size_t>> colOf(nvar);
    std::vector<bool> needed(nvar, false);
    needed[el.responseVar] = true;
    for (const auto& c : el.columns)
        for (const auto& f : c.factors) needed[f.var] = true;
    for (std::size_t v = 0; v < nvar; ++v) {
        colOf[v] = data.columnIndex(spec.variables[v].name);
        if (needed[v] && !colOf[v])
            throw std::invalid_argument("data has no column for '" + spec.variables[v].name +
                                        "' needed by equation " + el.response);
    }

    const auto rows = static_cast<Eigen::Index>(data.rows());
    const auto p = static_cast<Eigen::Index>(el.columns.size());
    design.resize(rows, p);
    y.resize(rows);
    weights.resize(rows);
    std::vector<double> values(nvar, 0.0);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto rr = static_cast<std::size_t>(r);
        for (std::size_t v = 0; v < nvar; ++v)
            if (colOf[v]) values[v] = data.value(rr, *colOf[v]);
        const double resp = values[el.responseVar];
        if (resp != 0.0 && resp != 1.0)
            throw std::invalid_argument("response " + el.response + " must be 0/1 (row " +
                                        std::to_string(r) + ")");
        y[r] = resp;
        weights[r] = data.weight(rr);
        for (Eigen::Index c = 0; c < p; ++c) {
            double prod = 1.0;
            for (const auto& f : el.columns[static_cast<std::size_t>(c)].factors)
                prod *= factor_value<double>(f, values);
            design(r, c) = prod;
        }
    }
}

LogisticFit fit_logistic(const Dataset& data, const ParameterLayout& layout, std::size_t eq,
                         const FitControl& control) {
    if (data.empty()) throw std::invalid_argument("empty data");
    Eigen::MatrixXd design;
    Eigen::VectorXd y, w;
    build_design(data, layout, eq, design, y, w);
    std::vector<std::string> labels;
    for (const auto& c : layout.equations()[eq].columns) labels.push_back(c.label);
    return fit_logistic(design, y, w, std::move(labels), control);
}

double FittedSystem::se(std::size_t coefficient) const {
    return std::sqrt(std::max(0.0, covariance(static_cast<Eigen::Index>(coefficient),
                                              static_cast<Eigen::Index>(coefficient))));
}

bool FittedSystem::allConverged() const {
    return std::all_of(perEquation.begin(), perEquation.end(),
                       [](const FitDiagnostics& d) { return d.converged && !d.separation; });
}

FittedSystem fit_system(const Dataset& data, const SystemSpec& spec, const FitControl& control) {
    auto layout = make_layout(spec);
    FittedSystem out{ParameterSet(layout), Eigen::MatrixXd::Zero(
                                               static_cast<Eigen::Index>(layout->size()),
                                               static_cast<Eigen::Index>(layout->size())),
                     {}, data.totalWeight()};
    auto values = out.params.values();
    for (std::size_t eq = 0; eq < layout->equations().size(); ++eq) {
        const auto& el = layout->equations()[eq];
        LogisticFit fit;
        try {
            fit = fit_logistic(data, *layout, eq, control);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("equation " + el.response + ": " + e.what());
        }
        const auto off = static_cast<Eigen::Index>(el.offset);
        const auto p = fit.coef.size();
        for (Eigen::Index j = 0; j < p; ++j) values[el.offset + static_cast<std::size_t>(j)] = fit.coef[j];
        out.covariance.block(off, off, p, p) = fit.covariance;
        out.perEquation.push_back(fit.diagnostics);
    }
    return out;
}

nlohmann::json to_json(const FittedSystem& fitted) {
    const auto& layout = fitted.params.layout();
    nlohmann::json doc;
    doc["format"] = "pathlogit-fitted-system";
    doc["version"] = 1;
    doc["spec"] = to_json(layout.spec());
    doc["n"] = fitted.n;
    auto& coefs = doc["coefficients"] = nlohmann::json::array();
    for (std::size_t eq = 0; eq < layout.equations().size(); ++eq) {
        const auto& el = layout.equations()[eq];
        for (std::size_t c = 0; c < el.columns.size(); ++c) {
            const auto idx = el.offset + c;
            coefs.push_back({{"equation", el.response},
                             {"term", el.columns[c].label},
                             {"estimate", fitted.params.values()[idx]},
                             {"se", fitted.se(idx)}});
        }
    }
    auto& cov = doc["covariance"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < fitted.covariance.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(fitted.covariance.cols()));
        for (Eigen::Index j = 0; j < fitted.covariance.cols(); ++j)
            row[static_cast<std::size_t>(j)] = fitted.covariance(i, j);
        cov.push_back(row);
    }
    auto& diags = doc["diagnostics"] = nlohmann::json::array();
    for (std::size_t eq = 0; eq < fitted.perEquation.size(); ++eq) {
        const auto& d = fitted.perEquation[eq];
        diags.push_back({{"equation", layout.equations()[eq].response},
                         {"loglik", d.loglik},
                         {"iterations", d.iterations},
                         {"converged", d.converged},
                         {"separation", d.separation},
                         {"max_score", d.maxScore}});
    }
    return doc;
}

FittedSystem fitted_from_json(const nlohmann::json& doc) {
    if (doc.value("format", std::string{}) != "pathlogit-fitted-system")
        throw std::invalid_argument("not a fitted-system artifact");
    auto layout = make_layout(system_from_json(doc.at("spec")));
    const auto p = layout->size();
    const auto& coefs = doc.at("coefficients");
    if (coefs.size() != p)
        throw std::invalid_argument("artifact has " + std::to_string(coefs.size()) +
                                    " coefficients, model needs " + std::to_string(p));
    std::vector<double> values(p);
    for (std::size_t i = 0; i < p; ++i) {
        const auto expected = layout->label(i);
        const auto got = coefs[i].at("equation").get<std::string>() + ": " +
                         coefs[i].at("term").get<std::string>();
        if (expected != got)
            throw std::invalid_argument("coefficient " + std::to_string(i) + " is '" + got +
                                        "', expected '" + expected + "'");
        values[i] = coefs[i].at("estimate").get<double>();
    }
    FittedSystem out{ParameterSet(layout, std::move(values)),
                     Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)),
                     {}, doc.value("n", 0.0)};
    const auto& cov = doc.at("covariance");
    if (cov.size() != p) throw std::invalid_argument("covariance has wrong dimension");
    for (std::size_t i = 0; i < p; ++i) {
        if (cov[i].size() != p) throw std::invalid_argument("covariance has wrong dimension");
        for (std::size_t j = 0; j < p; ++j)
            out.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                cov[i][j].get<double>();
    }
    if (doc.contains("diagnostics")) {
        for (const auto& d : doc.at("diagnostics")) {
            FitDiagnostics fd;
            fd.loglik = d.value("loglik", 0.0);
            fd.iterations = d.value("iterations", 0);
            fd.converged = d.value("converged", false);
            fd.separation = d.value("separation", false);
            fd.maxScore = d.value("max_score", 0.0);
            out.perEquation.push_back(fd);
        }
    }
    return out;
}

}  // namespace pathlogit
