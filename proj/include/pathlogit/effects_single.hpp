#pragma once

// Closed-form single-mediator effect decomposition: total, direct, indirect and
// residual effects on the log-odds and probability scales.

#include <string>

#include <json.hpp>

#include "pathlogit/dataset.hpp"
#include "pathlogit/model.hpp"

namespace pathlogit {

enum class Scale { logOdds, probability };
enum class EffectMode { derivative, contrast };

std::string_view to_string(Scale scale);

/// Where an effect is evaluated. Treatment and categorical covariate values
/// are level indices (see SystemSpec::parseValue).
struct EffectRequest {
    EffectMode mode = EffectMode::contrast;
    double at = 0.0;
    double x1 = 1.0;
    double x0 = 0.0;
    Assignment covariates;
    Scale scale = Scale::logOdds;

    static EffectRequest derivative(double x, Assignment covariates = {}, Scale scale = Scale::logOdds);
    static EffectRequest contrast(double x1, double x0, Assignment covariates = {},
                                  Scale scale = Scale::logOdds);
    EffectRequest withScale(Scale s) const;

    /// "{2,1}" or "d/dx@0.5"
    std::string contrastLabel(const SystemSpec& spec) const;
    /// "C=0" style, empty when there are no covariates.
    std::string covariateLabel(const SystemSpec& spec) const;
};

/// Throws std::invalid_argument when the request does not fit the system.
void validate_request(const SystemSpec& spec, const EffectRequest& request);

struct Decomposition {
    EffectRequest request;
    double total = 0.0;
    double direct = 0.0;
    double indirect = 0.0;  // IE for one mediator, GIE for several
    double residual = 0.0;
    bool global = false;

    /// indirect / total; only a proportion mediated when the residual is zero.
    double mediatedRatio() const { return indirect / total; }
    bool ratioCaveat() const;
};

nlohmann::json to_json(const Decomposition& d, const SystemSpec& spec);

/// Zero every mediator term of the outcome equation (the direct-effect mask).
ZeroMask direct_mask(const ParameterLayout& layout);
/// Zero every treatment term of the outcome equation (the indirect-effect mask).
ZeroMask indirect_mask(const ParameterLayout& layout);

/// log odds of W=1 given Y=y, X=x and covariates.
double g_y(const ParameterSet& params, int y, double x, const Assignment& covariates = {});

/// log odds of Y=1 given X=x and covariates with the mediator summed out.
double marginal_logit(const ParameterSet& params, double x, const Assignment& covariates = {});

struct Deltas {
    double y = 0.0;      // P(Y=1|W=1,x) - P(Y=1|W=0,x)
    double w = 0.0;      // P(W=1|Y=1,x) - P(W=1|Y=0,x)
    double wStar = 0.0;  // w with the treatment terms of the outcome equation zeroed
};

Deltas deltas(const ParameterSet& params, double x, const Assignment& covariates = {});

/// d/dx of marginal_logit from the closed-form expression.
double total_effect_derivative(const ParameterSet& params, double x, const Assignment& covariates = {});

/// Total effect on the request's scale, without decomposition.
double total_effect(const ParameterSet& params, const EffectRequest& request);

Decomposition decompose_logodds(const ParameterSet& params, const EffectRequest& request);
Decomposition decompose_probability(const ParameterSet& params, const EffectRequest& request);
/// Dispatches on request.scale.
Decomposition decompose_single(const ParameterSet& params, const EffectRequest& request);

struct AverageProbabilityEffects {
    double total = 0.0;     // ATPE
    double direct = 0.0;    // ADPE
    double indirect = 0.0;  // AIPE
};

/// Weighted means of the local probability effects over the treatment values
/// (and covariate values, when present as columns) of `data`.
AverageProbabilityEffects average_probability_effects(const ParameterSet& params, const Dataset& data);

}  // namespace pathlogit
