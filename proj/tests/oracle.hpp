#pragma once

// Brute-force references for tests: joint laws are enumerated state by state
// from the per-equation logistic probabilities, with no use of g-functions,
// recursions or closed forms.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathlogit/model.hpp"

namespace oracle {

using pathlogit::Assignment;
using pathlogit::ParameterSet;
using pathlogit::SystemSpec;

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// Names of the binary endogenous variables, outcome first then W1..Wk.
inline std::vector<std::string> endogenous(const SystemSpec& spec) {
    std::vector<std::string> out{spec.outcome().name};
    for (int j = 1; j <= spec.mediatorCount(); ++j) out.push_back(spec.mediator(j).name);
    return out;
}

/// P(all endogenous variables take the values in `a`), given X and covariates in `a`.
inline double joint(const ParameterSet& p, const Assignment& a) {
    double prob = 1.0;
    for (const auto& name : endogenous(p.spec())) {
        const double q = sigmoid(pathlogit::linear_predictor(p, name, a));
        prob *= a.at(name) == 1.0 ? q : 1.0 - q;
    }
    return prob;
}

/// Sum of the joint law over every endogenous variable not fixed in `fixed`.
inline double marginal(const ParameterSet& p, const Assignment& fixed) {
    const auto names = endogenous(p.spec());
    std::vector<std::string> free;
    for (const auto& n : names)
        if (!fixed.count(n)) free.push_back(n);
    double total = 0.0;
    for (unsigned m = 0; m < (1u << free.size()); ++m) {
        Assignment a = fixed;
        for (std::size_t i = 0; i < free.size(); ++i) a[free[i]] = (m >> i) & 1u;
        total += joint(p, a);
    }
    return total;
}

/// P(target=1 | given) by enumeration; `given` must include X and covariates.
inline double conditional(const ParameterSet& p, const std::string& target, Assignment given) {
    given[target] = 1.0;
    const double on = marginal(p, given);
    given[target] = 0.0;
    const double off = marginal(p, given);
    return on / (on + off);
}

inline double logit_of(double q) { return std::log(q / (1.0 - q)); }

/// Assignment holding X and covariates.
inline Assignment base(const SystemSpec& spec, double x, const Assignment& covariates = {}) {
    Assignment a = covariates;
    a[spec.treatment().name] = x;
    for (const auto& c : spec.covariates())
        if (!a.count(c)) a[c] = 0.0;
    return a;
}

inline double marginal_logit(const ParameterSet& p, double x, const Assignment& covariates = {}) {
    return logit_of(conditional(p, p.spec().outcome().name, base(p.spec(), x, covariates)));
}

/// Log cross-product ratio of the enumerated (Y, X) table at x1 versus x0.
inline double log_cpr(const ParameterSet& p, double x1, double x0, const Assignment& covariates = {}) {
    return marginal_logit(p, x1, covariates) - marginal_logit(p, x0, covariates);
}

/// Model JSON with a binary outcome, k binary mediators, treatment of the
/// given kind and fully connected recursive arrows (no interactions unless
/// `interactions` is set, in which case each equation gets X:W terms).
inline SystemSpec full_system(int k, const std::string& xKind = "binary", bool interactions = false) {
    nlohmann::json doc;
    doc["variables"] = nlohmann::json::array({{{"name", "Y"}, {"role", "outcome"}}});
    for (int j = 1; j <= k; ++j)
        doc["variables"].push_back(
            {{"name", "W" + std::to_string(j)}, {"role", "mediator"}, {"mediator_index", j}});
    doc["variables"].push_back({{"name", "X"}, {"role", "treatment"}, {"kind", xKind}});
    const auto eq = [&](int from) {
        std::vector<std::string> terms{"1", "X"};
        for (int j = from; j <= k; ++j) {
            terms.push_back("W" + std::to_string(j));
            if (interactions) terms.push_back("X:W" + std::to_string(j));
        }
        return terms;
    };
    doc["equations"]["Y"] = eq(1);
    for (int j = 1; j <= k; ++j) doc["equations"]["W" + std::to_string(j)] = eq(j + 1);
    return pathlogit::system_from_json(doc);
}

inline ParameterSet random_params(const SystemSpec& spec, std::mt19937_64& rng, double scale = 1.5) {
    ParameterSet p(pathlogit::make_layout(spec));
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& v : p.values()) v = u(rng);
    return p;
}

}  // namespace oracle
