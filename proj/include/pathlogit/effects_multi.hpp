#pragma once

// Multi-mediator marginal logits, global and path-specific decompositions, and
// removal of inner or outer mediators.

#include <string>
#include <string_view>
#include <vector>

#include "pathlogit/effects_single.hpp"
#include "pathlogit/model.hpp"

namespace pathlogit {

/// g-value of mediator j (1 = innermost) after W_1..W_{j-1} are summed out.
/// `conditioning` holds covariates and values of W_{>j}; missing ones are 0.
double g_recursive(const ParameterSet& params, int j, int y, double x, const Assignment& conditioning = {});

/// log odds of Y=1 given X=x (and covariates) with all mediators summed out.
double marginal_logit_multi(const ParameterSet& params, double x, const Assignment& covariates = {});

/// d/dx of marginal_logit_multi, exact through forward-mode differentiation.
double total_effect_derivative_multi(const ParameterSet& params, double x, const Assignment& covariates = {});

/// Total effect on the request's scale for any number of mediators.
double total_effect_multi(const ParameterSet& params, const EffectRequest& request);

/// TE, DE, GIE and RES. With one mediator this equals decompose_single.
Decomposition decompose_multi(const ParameterSet& params, const EffectRequest& request);

/// True when X is not a parent of Y or is its only parent among X and the mediators.
bool residual_structurally_zero(const SystemSpec& spec);

/// Ordered set of mediator indices traversed by a path from X to Y.
class PathSpec {
public:
    /// Accepts "2,3,5", "[5,3,2]" or "A=[5,3,2]".
    static PathSpec parse(std::string_view text);
    /// The list must be monotone (either direction); it is stored increasing.
    static PathSpec from_list(std::vector<int> indices);

    const std::vector<int>& indices() const { return indices_; }
    std::string label() const;  // "PSIE{2,3,5}"

    /// Throws when an index is not a mediator of `spec`.
    void check(const SystemSpec& spec) const;

    /// The four zeroing groups as (response, variable) targets.
    std::vector<ZeroTarget> zeroTargets(const SystemSpec& spec) const;

private:
    std::vector<int> indices_;
};

ZeroMask psie_mask(const ParameterLayout& layout, const PathSpec& path);

/// Total effect under the path mask, on the request's scale.
double psie(const ParameterSet& params, const PathSpec& path, const EffectRequest& request);

enum class Component { total, direct, indirect, residual, pathSpecific };

/// One scalar component. `path` is required for Component::pathSpecific.
double effect_component(const ParameterSet& params, Component component, const EffectRequest& request,
                        const PathSpec* path = nullptr);

/// Sums out W_1. Needs k >= 2 and discrete treatment and covariates. The
/// outcome equation of the result carries the full interaction basis over
/// the remaining predictors; mediators W_j are renumbered to j-1.
ParameterSet marginalize_inner(const ParameterSet& params);

/// Conditional laws after summing out W_2 from a k=2 system.
class OuterMarginal {
public:
    explicit OuterMarginal(ParameterSet params);

    /// log odds of Y=1 given X=x, W_1=w1 and covariates.
    double outcomeLogit(double x, int w1, const Assignment& covariates = {}) const;
    /// log odds of W_1=1 given X=x and covariates.
    double mediatorLogit(double x, const Assignment& covariates = {}) const;

    /// Single-mediator parameters with full interaction bases (discrete
    /// treatment and covariates only).
    ParameterSet toParameterSet() const;

private:
    ParameterSet params_;
};

OuterMarginal marginalize_outer(const ParameterSet& params);

}  // namespace pathlogit
