#include "pathlogit/effects_single.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pathlogit/numeric.hpp"

namespace pathlogit {

namespace {

struct SingleContext {
    std::size_t yEq = 0;
    std::size_t wEq = 0;
    std::size_t xVar = 0;
    std::size_t wVar = 0;
};

SingleContext single_context(const ParameterSet& params) {
    const auto& layout = params.layout();
    const auto& spec = layout.spec();
    if (spec.mediatorCount() != 1)
        throw std::invalid_argument("single-mediator decomposition needs exactly one mediator, system has " +
                                    std::to_string(spec.mediatorCount()));
    const auto& w = spec.mediator(1);
    return {layout.equationIndex(spec.outcome().name), layout.equationIndex(w.name),
            layout.variableIndex(spec.treatment().name), layout.variableIndex(w.name)};
}

template <class T>
struct Parts {
    T a;  // rhs(Y | W=0, x, c)
    T b;  // rhs(Y | W=1, x, c) - rhs(Y | W=0, x, c)
    T r;  // rhs(W | x, c)
};

template <class T>
Parts<T> parts(const ParameterSet& params, const SingleContext& ctx, T x, const Assignment& covariates) {
    const auto base = encode(params.layout(), covariates);
    std::vector<T> values(base.begin(), base.end());
    values[ctx.xVar] = x;
    values[ctx.wVar] = T(0.0);
    const T a = rhs<T>(params, ctx.yEq, values);
    const T r = rhs<T>(params, ctx.wEq, values);
    values[ctx.wVar] = T(1.0);
    const T a1 = rhs<T>(params, ctx.yEq, values);
    return {a, a1 - a, r};
}

template <class T>
T g_from_parts(const Parts<T>& p, int y) {
    return T(static_cast<double>(y)) * p.b + (softplus(p.a) - softplus(p.a + p.b)) + p.r;
}

template <class T>
T eta_from_parts(const Parts<T>& p) {
    return p.a + (softplus(g_from_parts(p, 1)) - softplus(g_from_parts(p, 0)));
}

double logodds_effect(const ParameterSet& params, const EffectRequest& req) {
    if (req.mode == EffectMode::derivative)
        return total_effect_derivative(params, req.at, req.covariates);
    return marginal_logit(params, req.x1, req.covariates) - marginal_logit(params, req.x0, req.covariates);
}

double probability_effect(const ParameterSet& params, const EffectRequest& req) {
    if (req.mode == EffectMode::derivative) {
        const double p = expit(marginal_logit(params, req.at, req.covariates));
        return p * (1.0 - p) * total_effect_derivative(params, req.at, req.covariates);
    }
    return expit(marginal_logit(params, req.x1, req.covariates)) -
           expit(marginal_logit(params, req.x0, req.covariates));
}

Decomposition decompose_with(const ParameterSet& params, const EffectRequest& request,
                             double (*effect)(const ParameterSet&, const EffectRequest&)) {
    validate_request(params.spec(), request);
    single_context(params);
    Decomposition d;
    d.request = request;
    d.total = effect(params, request);
    d.direct = effect(direct_mask(params.layout()).apply(params), request);
    d.indirect = effect(indirect_mask(params.layout()).apply(params), request);
    d.residual = d.total - d.direct - d.indirect;
    return d;
}

}  // namespace

std::string_view to_string(Scale scale) {
    return scale == Scale::logOdds ? "logodds" : "probability";
}

EffectRequest EffectRequest::derivative(double x, Assignment covariates, Scale scale) {
    EffectRequest r;
    r.mode = EffectMode::derivative;
    r.at = x;
    r.covariates = std::move(covariates);
    r.scale = scale;
    return r;
}

EffectRequest EffectRequest::contrast(double x1, double x0, Assignment covariates, Scale scale) {
    EffectRequest r;
    r.mode = EffectMode::contrast;
    r.x1 = x1;
    r.x0 = x0;
    r.covariates = std::move(covariates);
    r.scale = scale;
    return r;
}

EffectRequest EffectRequest::withScale(Scale s) const {
    EffectRequest r = *this;
    r.scale = s;
    return r;
}

std::string EffectRequest::contrastLabel(const SystemSpec& spec) const {
    const auto& x = spec.treatment().name;
    if (mode == EffectMode::derivative) return "d/dx@" + spec.formatValue(x, at);
    return "{" + spec.formatValue(x, x1) + "," + spec.formatValue(x, x0) + "}";
}

std::string EffectRequest::covariateLabel(const SystemSpec& spec) const {
    std::string out;
    for (const auto& [name, value] : covariates) {
        if (!out.empty()) out += ";";
        out += name + "=" + spec.formatValue(name, value);
    }
    return out;
}

void validate_request(const SystemSpec& spec, const EffectRequest& request) {
    const auto& x = spec.treatment();
    if (request.mode == EffectMode::derivative) {
        if (x.kind != Kind::continuous)
            throw std::invalid_argument("derivative effects need a continuous treatment; " + x.name +
                                        " is " + std::string(to_string(x.kind)));
        if (!std::isfinite(request.at)) throw std::invalid_argument("derivative point is not finite");
    } else {
        if (request.x1 == request.x0) throw std::invalid_argument("contrast levels must differ");
        for (const double v : {request.x1, request.x0}) {
            if (x.kind == Kind::categorical &&
                (v < 0 || v != std::floor(v) || v >= static_cast<double>(x.levels.size())))
                throw std::invalid_argument("contrast value is not a level of " + x.name);
            if (x.kind == Kind::binary && v != 0.0 && v != 1.0)
                throw std::invalid_argument("binary treatment contrasts use 0 and 1");
        }
    }
    for (const auto& [name, value] : request.covariates) {
        const auto* v = spec.find(name);
        if (!v || v->role != Role::covariate)
            throw std::invalid_argument("'" + name + "' is not a covariate of the system");
        if (v->kind == Kind::categorical &&
            (value < 0 || value != std::floor(value) || value >= static_cast<double>(v->levels.size())))
            throw std::invalid_argument("covariate value is not a level of " + name);
    }
}

bool Decomposition::ratioCaveat() const {
    return std::abs(residual) > 1e-10 * std::max(1.0, std::abs(total));
}

nlohmann::json to_json(const Decomposition& d, const SystemSpec& spec) {
    const bool prob = d.request.scale == Scale::probability;
    const std::string ind = d.global ? "GI" : "I";
    nlohmann::json j;
    j["scale"] = std::string(to_string(d.request.scale));
    j["contrast"] = d.request.contrastLabel(spec);
    j["covariates"] = d.request.covariateLabel(spec);
    j[prob ? "TPE" : "TE"] = d.total;
    j[prob ? "DPE" : "DE"] = d.direct;
    j[prob ? ind + "PE" : ind + "E"] = d.indirect;
    j[prob ? "RPE" : "RES"] = d.residual;
    j["indirect_total_ratio"] = d.mediatedRatio();
    j["ratio_caveat"] = d.ratioCaveat();
    return j;
}

ZeroMask direct_mask(const ParameterLayout& layout) {
    const auto& spec = layout.spec();
    std::vector<ZeroTarget> targets;
    for (int j = 1; j <= spec.mediatorCount(); ++j)
        targets.emplace_back(spec.outcome().name, spec.mediator(j).name);
    return ZeroMask::build(layout, targets);
}

ZeroMask indirect_mask(const ParameterLayout& layout) {
    const auto& spec = layout.spec();
    return ZeroMask::build(layout, {{spec.outcome().name, spec.treatment().name}});
}

double g_y(const ParameterSet& params, int y, double x, const Assignment& covariates) {
    if (y != 0 && y != 1) throw std::invalid_argument("y must be 0 or 1");
    const auto ctx = single_context(params);
    return g_from_parts(parts<double>(params, ctx, x, covariates), y);
}

double marginal_logit(const ParameterSet& params, double x, const Assignment& covariates) {
    const auto ctx = single_context(params);
    return eta_from_parts(parts<double>(params, ctx, x, covariates));
}

Deltas deltas(const ParameterSet& params, double x, const Assignment& covariates) {
    const auto ctx = single_context(params);
    const auto p = parts<double>(params, ctx, x, covariates);
    const auto star = parts<double>(indirect_mask(params.layout()).apply(params), ctx, x, covariates);
    Deltas d;
    d.y = expit(p.a + p.b) - expit(p.a);
    d.w = expit(g_from_parts(p, 1)) - expit(g_from_parts(p, 0));
    d.wStar = expit(g_from_parts(star, 1)) - expit(g_from_parts(star, 0));
    return d;
}

double total_effect_derivative(const ParameterSet& params, double x, const Assignment& covariates) {
    const auto ctx = single_context(params);
    const auto p = parts<Dual>(params, ctx, Dual(x, 1.0), covariates);
    // a' multiplies the conditional treatment slope, b' the treatment-mediator
    // interaction slope and r' the treatment slope of the mediator equation.
    const double g1 = g_from_parts(p, 1).v, g0 = g_from_parts(p, 0).v;
    const double pw1 = expit(g1), pw0 = expit(g0);
    const double py1 = expit(p.a.v + p.b.v), py0 = expit(p.a.v);
    const double dW = pw1 - pw0;
    const double dY = py1 - py0;
    return p.a.d * (1.0 - dY * dW) + p.b.d * (pw1 - dW * py1) + p.r.d * dW;
}

double total_effect(const ParameterSet& params, const EffectRequest& request) {
    return request.scale == Scale::logOdds ? logodds_effect(params, request)
                                           : probability_effect(params, request);
}

Decomposition decompose_logodds(const ParameterSet& params, const EffectRequest& request) {
    EffectRequest r = request.withScale(Scale::logOdds);
    return decompose_with(params, r, &logodds_effect);
}

Decomposition decompose_probability(const ParameterSet& params, const EffectRequest& request) {
    EffectRequest r = request.withScale(Scale::probability);
    return decompose_with(params, r, &probability_effect);
}

Decomposition decompose_single(const ParameterSet& params, const EffectRequest& request) {
    return request.scale == Scale::logOdds ? decompose_logodds(params, request)
                                           : decompose_probability(params, request);
}

AverageProbabilityEffects average_probability_effects(const ParameterSet& params, const Dataset& data) {
    const auto& spec = params.spec();
    const auto& x = spec.treatment();
    if (x.kind != Kind::continuous)
        throw std::invalid_argument("average probability effects need a continuous treatment");
    if (data.empty() || !(data.totalWeight() > 0.0)) throw std::invalid_argument("empty data");
    const auto xCol = data.columnIndex(x.name);
    if (!xCol) throw std::invalid_argument("data has no column for treatment " + x.name);

    std::vector<std::pair<std::string, std::size_t>> covCols;
    for (const auto& c : spec.covariates())
        if (const auto col = data.columnIndex(c)) covCols.emplace_back(c, *col);

    const auto dm = direct_mask(params.layout()).apply(params);
    const auto im = indirect_mask(params.layout()).apply(params);
    AverageProbabilityEffects out;
    double wsum = 0.0;
    Assignment cov;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const double w = data.weight(r);
        if (w == 0.0) continue;
        for (const auto& [name, col] : covCols) cov[name] = data.value(r, col);
        const auto req = EffectRequest::derivative(data.value(r, *xCol), cov, Scale::probability);
        out.total += w * probability_effect(params, req);
        out.direct += w * probability_effect(dm, req);
        out.indirect += w * probability_effect(im, req);
        wsum += w;
    }
    out.total /= wsum;
    out.direct /= wsum;
    out.indirect /= wsum;
    return out;
}

}  // namespace pathlogit
