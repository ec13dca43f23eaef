#include "pathlogit/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace pathlogit {

std::string EffectEstimate::label() const {
    std::string out = effect + contrast;
    if (!covariates.empty()) out += " [" + covariates + "]";
    return out;
}

EffectEstimate make_estimate(double value, double se) {
    EffectEstimate e;
    e.value = value;
    e.se = se;
    e.ciLow = value - kZ975 * se;
    e.ciHigh = value + kZ975 * se;
    if (se > 0.0) e.pValue = std::erfc(std::abs(value / se) / std::sqrt(2.0));
    else e.pValue = value == 0.0 ? 1.0 : 0.0;
    return e;
}

EffectEstimate delta_se(const FittedSystem& fitted, const EffectFunction& effect, double stepScale) {
    const auto& theta = fitted.params;
    const double value = effect(theta);
    if (!std::isfinite(value)) throw std::domain_error("effect is not finite at the estimate");
    const std::size_t p = theta.values().size();
    Eigen::VectorXd grad(p);
    ParameterSet work = theta;
    for (std::size_t i = 0; i < p; ++i) {
        const double t = theta.values()[i];
        const double h = stepScale * std::max(1.0, std::abs(t));
        work.values()[i] = t + h;
        const double up = effect(work);
        work.values()[i] = t - h;
        const double down = effect(work);
        work.values()[i] = t;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw std::domain_error("effect is not finite when perturbing coefficient " + theta.layout().label(i));
        grad[static_cast<Eigen::Index>(i)] = (up - down) / (2.0 * h);
    }
    const double var = grad.dot(fitted.covariance * grad);
    return make_estimate(value, std::sqrt(std::max(0.0, var)));
}

std::string component_name(Component component, Scale scale, int mediators, const PathSpec* path) {
    const bool prob = scale == Scale::probability;
    switch (component) {
        case Component::total: return prob ? "TPE" : "TE";
        case Component::direct: return prob ? "DPE" : "DE";
        case Component::indirect:
            if (mediators > 1) return prob ? "GIPE" : "GIE";
            return prob ? "IPE" : "IE";
        case Component::residual: return prob ? "RPE" : "RES";
        case Component::pathSpecific: {
            if (!path) throw std::invalid_argument("path-specific effect requested without a path");
            auto label = path->label();
            if (prob) label.replace(0, 4, "PSIPE");
            return label;
        }
    }
    throw std::invalid_argument("unknown effect component");
}

std::vector<EffectEstimate> effect_table(const FittedSystem& fitted, const std::vector<EffectRequest>& requests,
                                         const std::vector<PathSpec>& paths, const ParameterTransform& transform) {
    const ParameterSet target = transform ? transform(fitted.params) : fitted.params;
    const auto& spec = target.spec();
    const int k = spec.mediatorCount();
    for (const auto& r : requests) validate_request(spec, r);
    for (const auto& p : paths) p.check(spec);

    std::vector<EffectEstimate> rows;
    const auto add = [&](Component c, const EffectRequest& req, const PathSpec* path) {
        const EffectFunction f = [&, c, path](const ParameterSet& theta) {
            if (transform) return effect_component(transform(theta), c, req, path);
            return effect_component(theta, c, req, path);
        };
        auto row = delta_se(fitted, f);
        row.effect = component_name(c, req.scale, k, path);
        row.contrast = req.contrastLabel(spec);
        row.covariates = req.covariateLabel(spec);
        rows.push_back(std::move(row));
    };
    for (const auto& req : requests) {
        for (const auto c : {Component::direct, Component::indirect, Component::residual, Component::total})
            add(c, req, nullptr);
        for (const auto& p : paths) add(Component::pathSpecific, req, &p);
    }
    return rows;
}

}  // namespace pathlogit
