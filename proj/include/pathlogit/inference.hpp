#pragma once

// Delta-method standard errors, Wald intervals and p-values for scalar
// functionals of a fitted system.

#include <functional>
#include <string>
#include <vector>

#include "pathlogit/effects_multi.hpp"
#include "pathlogit/fitting.hpp"

namespace pathlogit {

inline constexpr double kZ975 = 1.959963984540054;

struct EffectEstimate {
    std::string effect;      // "DE", "IPE", "PSIE{2,3}", ...
    std::string contrast;    // "{2,1}" or "d/dx@0.5"
    std::string covariates;  // "C=0", empty without covariates
    double value = 0.0;
    double se = 0.0;
    double ciLow = 0.0;
    double ciHigh = 0.0;
    double pValue = 1.0;

    std::string label() const;
};

/// Interval and two-sided normal p-value for `value` with standard error `se`.
EffectEstimate make_estimate(double value, double se);

using EffectFunction = std::function<double(const ParameterSet&)>;
using ParameterTransform = std::function<ParameterSet(const ParameterSet&)>;

/// Gradient by central differences with step stepScale*max(1,|theta_i|);
/// se = sqrt(g' Sigma g). Throws when the effect is not finite at the
/// estimate or at a perturbed point, naming the coordinate.
EffectEstimate delta_se(const FittedSystem& fitted, const EffectFunction& effect, double stepScale = 1e-6);

/// Effect names for a component on a scale, "IE"/"GIE" by mediator count.
std::string component_name(Component component, Scale scale, int mediators, const PathSpec* path = nullptr);

/// Rows grouped by request in the order DE, IE or GIE, RES, TE, then one row
/// per path. `transform` maps fitted parameters to the system the effects are
/// computed on (e.g. after marginalization); its input is the full stack, so
/// standard errors account for it.
std::vector<EffectEstimate> effect_table(const FittedSystem& fitted, const std::vector<EffectRequest>& requests,
                                         const std::vector<PathSpec>& paths = {},
                                         const ParameterTransform& transform = {});

}  // namespace pathlogit
