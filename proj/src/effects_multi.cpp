#include "pathlogit/effects_multi.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pathlogit/numeric.hpp"

namespace pathlogit {

namespace {

struct MultiContext {
    std::size_t yEq = 0;
    std::size_t xVar = 0;
    int k = 0;
    std::vector<std::size_t> wEq;   // index j-1 holds W_j
    std::vector<std::size_t> wVar;
};

MultiContext multi_context(const ParameterSet& params) {
    const auto& layout = params.layout();
    const auto& spec = layout.spec();
    MultiContext ctx;
    ctx.k = spec.mediatorCount();
    if (ctx.k < 1) throw std::invalid_argument("system has no mediator");
    if (ctx.k > 20) throw std::invalid_argument("too many mediators for exact marginalization");
    ctx.yEq = layout.equationIndex(spec.outcome().name);
    ctx.xVar = layout.variableIndex(spec.treatment().name);
    for (int j = 1; j <= ctx.k; ++j) {
        const auto& name = spec.mediator(j).name;
        ctx.wEq.push_back(layout.equationIndex(name));
        ctx.wVar.push_back(layout.variableIndex(name));
    }
    return ctx;
}

template <class T>
void set_mediators(std::vector<T>& values, const MultiContext& ctx, unsigned m) {
    for (int i = 0; i < ctx.k; ++i) values[ctx.wVar[i]] = T(((m >> i) & 1u) ? 1.0 : 0.0);
}

/// Conditional logits of Y indexed by mediator bitmask (bit j-1 is W_j).
template <class T>
std::vector<T> outcome_table(const ParameterSet& params, const MultiContext& ctx, std::vector<T>& values) {
    const unsigned n = 1u << ctx.k;
    std::vector<T> table(n);
    for (unsigned m = 0; m < n; ++m) {
        set_mediators(values, ctx, m);
        table[m] = rhs<T>(params, ctx.yEq, values);
    }
    return table;
}

/// Sums W_j out of the table. Entries with any of the low j bits set become unused.
template <class T>
void fold_step(const ParameterSet& params, const MultiContext& ctx, std::vector<T>& values,
               std::vector<T>& table, int j) {
    const unsigned bit = 1u << (j - 1);
    const unsigned low = (bit << 1) - 1;
    for (unsigned m = 0; m < table.size(); ++m) {
        if (m & low) continue;
        set_mediators(values, ctx, m);
        const T r = rhs<T>(params, ctx.wEq[j - 1], values);
        const T a = table[m];
        const T a1 = table[m | bit];
        const T g0 = softplus(a) - softplus(a1) + r;
        const T g1 = (a1 - a) + g0;
        table[m] = a + (softplus(g1) - softplus(g0));
    }
}

template <class T>
T marginal_logit_t(const ParameterSet& params, const MultiContext& ctx, T x, const Assignment& covariates) {
    const auto base = encode(params.layout(), covariates);
    std::vector<T> values(base.begin(), base.end());
    values[ctx.xVar] = x;
    auto table = outcome_table(params, ctx, values);
    for (int j = 1; j <= ctx.k; ++j) fold_step(params, ctx, values, table, j);
    return table[0];
}

double logodds_effect_multi(const ParameterSet& params, const EffectRequest& req) {
    if (req.mode == EffectMode::derivative)
        return total_effect_derivative_multi(params, req.at, req.covariates);
    return marginal_logit_multi(params, req.x1, req.covariates) -
           marginal_logit_multi(params, req.x0, req.covariates);
}

double probability_effect_multi(const ParameterSet& params, const EffectRequest& req) {
    const auto ctx = multi_context(params);
    if (req.mode == EffectMode::derivative) {
        const Dual eta = marginal_logit_t<Dual>(params, ctx, Dual(req.at, 1.0), req.covariates);
        const double p = expit(eta.v);
        return p * (1.0 - p) * eta.d;
    }
    return expit(marginal_logit_t<double>(params, ctx, req.x1, req.covariates)) -
           expit(marginal_logit_t<double>(params, ctx, req.x0, req.covariates));
}

double total_any(const ParameterSet& params, const EffectRequest& request) {
    if (params.spec().mediatorCount() == 1) return total_effect(params, request);
    return total_effect_multi(params, request);
}

bool is_discrete(const VariableSpec& v) { return v.kind != Kind::continuous; }

std::set<std::string> covariates_in(const SystemSpec& spec, const std::vector<std::string>& responses) {
    std::set<std::string> out;
    for (const auto& r : responses) {
        const auto* eq = spec.equation(r);
        if (!eq) continue;
        for (const auto& t : eq->terms)
            for (const auto& f : t.factors())
                if (spec.variable(f).role == Role::covariate) out.insert(f);
    }
    return out;
}

/// Every subset of `vars`, intercept first, ordered by size.
std::vector<Term> full_basis(const std::vector<std::string>& vars) {
    std::vector<Term> terms;
    const unsigned n = 1u << vars.size();
    for (unsigned m = 0; m < n; ++m) {
        std::vector<std::string> f;
        for (std::size_t i = 0; i < vars.size(); ++i)
            if (m & (1u << i)) f.push_back(vars[i]);
        terms.emplace_back(std::move(f));
    }
    std::stable_sort(terms.begin(), terms.end(),
                     [](const Term& a, const Term& b) { return a.order() < b.order(); });
    return terms;
}

void require_discrete(const SystemSpec& spec, const std::set<std::string>& covariates, const char* what) {
    if (!is_discrete(spec.treatment()))
        throw std::invalid_argument(std::string(what) + " needs a binary or categorical treatment");
    for (const auto& c : covariates)
        if (!is_discrete(spec.variable(c)))
            throw std::invalid_argument(std::string(what) + " needs discrete covariates; '" + c +
                                        "' is continuous");
}

/// Fills every coefficient of equation `eq` by inclusion-exclusion over the
/// corner cells of its columns. Exact when `logit` is a function of indicator
/// predictors and the equation carries the full interaction basis.
void mobius_fill(ParameterSet& target, std::size_t eq, const std::function<double(const Assignment&)>& logit) {
    const auto& layout = target.layout();
    const auto& el = layout.equations()[eq];
    auto values = target.values();
    for (std::size_t c = 0; c < el.columns.size(); ++c) {
        const auto& factors = el.columns[c].factors;
        const unsigned n = 1u << factors.size();
        double coef = 0.0;
        for (unsigned m = 0; m < n; ++m) {
            Assignment corner;
            for (std::size_t i = 0; i < factors.size(); ++i) {
                if (!(m & (1u << i))) continue;
                const auto& f = factors[i];
                corner[layout.spec().variables[f.var].name] = f.level >= 0 ? f.level : 1.0;
            }
            const int missing = static_cast<int>(factors.size()) - std::popcount(m);
            coef += (missing % 2 ? -1.0 : 1.0) * logit(corner);
        }
        values[el.offset + c] = coef;
    }
}

void copy_equation(const ParameterSet& from, ParameterSet& to, std::string_view response) {
    const auto& el = to.layout().equation(response);
    for (const auto& col : el.columns) to.set(response, col.label, from.get(response, col.label));
}

}  // namespace

double g_recursive(const ParameterSet& params, int j, int y, double x, const Assignment& conditioning) {
    const auto ctx = multi_context(params);
    if (j < 1 || j > ctx.k)
        throw std::invalid_argument("mediator index " + std::to_string(j) + " out of range 1.." +
                                    std::to_string(ctx.k));
    if (y != 0 && y != 1) throw std::invalid_argument("y must be 0 or 1");
    const auto& spec = params.spec();
    unsigned above = 0;
    Assignment covariates;
    for (const auto& [name, value] : conditioning) {
        const auto& v = spec.variable(name);
        if (v.role == Role::mediator) {
            if (*v.mediatorIndex <= j)
                throw std::invalid_argument("conditioning on " + name + " which is not above W_" +
                                            std::to_string(j));
            if (value != 0.0 && value != 1.0) throw std::invalid_argument(name + " must be 0 or 1");
            if (value == 1.0) above |= 1u << (*v.mediatorIndex - 1);
        } else if (v.role == Role::covariate) {
            covariates[name] = value;
        } else {
            throw std::invalid_argument("cannot condition on " + name);
        }
    }
    const auto base = encode(params.layout(), covariates);
    std::vector<double> values(base.begin(), base.end());
    values[ctx.xVar] = x;
    auto table = outcome_table(params, ctx, values);
    for (int i = 1; i < j; ++i) fold_step(params, ctx, values, table, i);
    const unsigned bit = 1u << (j - 1);
    set_mediators(values, ctx, above);
    const double r = rhs<double>(params, ctx.wEq[j - 1], values);
    const double a = table[above];
    const double a1 = table[above | bit];
    return y * (a1 - a) + (softplus(a) - softplus(a1)) + r;
}

double marginal_logit_multi(const ParameterSet& params, double x, const Assignment& covariates) {
    return marginal_logit_t<double>(params, multi_context(params), x, covariates);
}

double total_effect_derivative_multi(const ParameterSet& params, double x, const Assignment& covariates) {
    return marginal_logit_t<Dual>(params, multi_context(params), Dual(x, 1.0), covariates).d;
}

double total_effect_multi(const ParameterSet& params, const EffectRequest& request) {
    return request.scale == Scale::logOdds ? logodds_effect_multi(params, request)
                                           : probability_effect_multi(params, request);
}

Decomposition decompose_multi(const ParameterSet& params, const EffectRequest& request) {
    validate_request(params.spec(), request);
    multi_context(params);
    Decomposition d;
    d.request = request;
    d.global = params.spec().mediatorCount() > 1;
    d.total = total_effect_multi(params, request);
    d.direct = total_effect_multi(direct_mask(params.layout()).apply(params), request);
    d.indirect = total_effect_multi(indirect_mask(params.layout()).apply(params), request);
    d.residual = d.total - d.direct - d.indirect;
    return d;
}

bool residual_structurally_zero(const SystemSpec& spec) {
    const auto* eq = spec.equation(spec.outcome().name);
    if (!eq) throw std::invalid_argument("system has no outcome equation");
    std::set<std::string> parents;
    for (const auto& t : eq->terms)
        for (const auto& f : t.factors())
            if (spec.variable(f).role != Role::covariate) parents.insert(f);
    const auto& x = spec.treatment().name;
    if (!parents.count(x)) return true;
    return parents.size() == 1;
}

PathSpec PathSpec::parse(std::string_view text) {
    std::string s(text);
    if (const auto eq = s.find('='); eq != std::string::npos) s = s.substr(eq + 1);
    std::replace_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == '{' || c == '}'; }, ' ');
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<int> indices;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw std::invalid_argument("path entry '" + tok + "' is not an integer");
        indices.push_back(v);
    }
    return from_list(std::move(indices));
}

PathSpec PathSpec::from_list(std::vector<int> indices) {
    if (indices.empty()) throw std::invalid_argument("path must name at least one mediator");
    for (const int i : indices)
        if (i < 1) throw std::invalid_argument("mediator indices start at 1");
    const bool up = std::adjacent_find(indices.begin(), indices.end(), std::greater_equal<>()) == indices.end();
    const bool down = std::adjacent_find(indices.begin(), indices.end(), std::less_equal<>()) == indices.end();
    if (!up && !down) {
        std::string list;
        for (const int i : indices) list += (list.empty() ? "" : ",") + std::to_string(i);
        throw std::invalid_argument("path {" + list +
                                    "} changes direction: it meets two arrowheads at a collider, "
                                    "which blocks the path, so no indirect effect flows along it");
    }
    if (down) std::reverse(indices.begin(), indices.end());
    PathSpec p;
    p.indices_ = std::move(indices);
    return p;
}

std::string PathSpec::label() const {
    std::string out = "PSIE{";
    for (std::size_t i = 0; i < indices_.size(); ++i) out += (i ? "," : "") + std::to_string(indices_[i]);
    return out + "}";
}

void PathSpec::check(const SystemSpec& spec) const {
    const int k = spec.mediatorCount();
    for (const int i : indices_)
        if (i > k)
            throw std::invalid_argument("path names mediator " + std::to_string(i) + " but the system has " +
                                        std::to_string(k) + (k == 1 ? " mediator" : " mediators"));
}

std::vector<ZeroTarget> PathSpec::zeroTargets(const SystemSpec& spec) const {
    check(spec);
    const int k = spec.mediatorCount();
    const auto& y = spec.outcome().name;
    const auto& x = spec.treatment().name;
    const int lo = indices_.front();
    const int hi = indices_.back();
    std::vector<ZeroTarget> t;
    t.emplace_back(y, x);
    for (int j = 1; j <= k; ++j)
        if (j != lo) t.emplace_back(y, spec.mediator(j).name);
    for (std::size_t p = 0; p < indices_.size(); ++p) {
        const int r = indices_[p];
        const auto& wr = spec.mediator(r).name;
        const int next = p + 1 < indices_.size() ? indices_[p + 1] : 0;
        for (int j = r + 1; j <= k; ++j)
            if (j != next) t.emplace_back(wr, spec.mediator(j).name);
        if (r != hi) t.emplace_back(wr, x);
    }
    return t;
}

ZeroMask psie_mask(const ParameterLayout& layout, const PathSpec& path) {
    return ZeroMask::build(layout, path.zeroTargets(layout.spec()));
}

double psie(const ParameterSet& params, const PathSpec& path, const EffectRequest& request) {
    validate_request(params.spec(), request);
    return total_any(psie_mask(params.layout(), path).apply(params), request);
}

double effect_component(const ParameterSet& params, Component component, const EffectRequest& request,
                        const PathSpec* path) {
    switch (component) {
        case Component::total:
            return total_any(params, request);
        case Component::direct:
            return total_any(direct_mask(params.layout()).apply(params), request);
        case Component::indirect:
            return total_any(indirect_mask(params.layout()).apply(params), request);
        case Component::residual:
            return total_any(params, request) - total_any(direct_mask(params.layout()).apply(params), request) -
                   total_any(indirect_mask(params.layout()).apply(params), request);
        case Component::pathSpecific:
            if (!path) throw std::invalid_argument("path-specific effect requested without a path");
            return psie(params, *path, request);
    }
    throw std::invalid_argument("unknown effect component");
}

ParameterSet marginalize_inner(const ParameterSet& params) {
    const auto& spec = params.spec();
    const int k = spec.mediatorCount();
    if (k < 2) throw std::invalid_argument("inner marginalization needs at least two mediators");
    const auto& y = spec.outcome().name;
    const auto& w1 = spec.mediator(1).name;
    const auto covs = covariates_in(spec, {y, w1});
    require_discrete(spec, covs, "inner marginalization");

    SystemSpec out;
    for (auto v : spec.variables) {
        if (v.name == w1) continue;
        if (v.role == Role::mediator) v.mediatorIndex = *v.mediatorIndex - 1;
        out.variables.push_back(std::move(v));
    }
    std::vector<std::string> predictors{spec.treatment().name};
    for (int j = 2; j <= k; ++j) predictors.push_back(spec.mediator(j).name);
    predictors.insert(predictors.end(), covs.begin(), covs.end());
    out.equations.push_back({y, full_basis(predictors)});
    for (const auto& eq : spec.equations)
        if (eq.response != y && eq.response != w1) out.equations.push_back(eq);

    ParameterSet result(make_layout(std::move(out)));
    for (const auto& eq : result.spec().equations)
        if (eq.response != y) copy_equation(params, result, eq.response);

    const auto& layout = params.layout();
    const auto yEq = layout.equationIndex(y);
    const auto wEq = layout.equationIndex(w1);
    const auto wVar = layout.variableIndex(w1);
    mobius_fill(result, result.layout().equationIndex(y), [&](const Assignment& corner) {
        auto values = encode(layout, corner);
        values[wVar] = 0.0;
        const double a = rhs<double>(params, yEq, values);
        const double r = rhs<double>(params, wEq, values);
        values[wVar] = 1.0;
        const double a1 = rhs<double>(params, yEq, values);
        const double g0 = softplus(a) - softplus(a1) + r;
        const double g1 = (a1 - a) + g0;
        return a + (softplus(g1) - softplus(g0));
    });
    return result;
}

OuterMarginal::OuterMarginal(ParameterSet params) : params_(std::move(params)) {
    if (params_.spec().mediatorCount() != 2)
        throw std::invalid_argument("outer marginalization is defined for systems with two mediators");
}

namespace {

struct OuterParts {
    double a = 0, a1 = 0;  // outcome logit at W2=0 and W2=1
    double s0 = 0, s1 = 0;  // W1 logit at W2=0 and W2=1
    double r2 = 0;          // W2 logit
};

OuterParts outer_parts(const ParameterSet& params, std::vector<double> values) {
    const auto& layout = params.layout();
    const auto& spec = layout.spec();
    const auto w2 = layout.variableIndex(spec.mediator(2).name);
    OuterParts p;
    values[w2] = 0.0;
    p.a = rhs<double>(params, layout.equationIndex(spec.outcome().name), values);
    p.s0 = rhs<double>(params, layout.equationIndex(spec.mediator(1).name), values);
    p.r2 = rhs<double>(params, layout.equationIndex(spec.mediator(2).name), values);
    values[w2] = 1.0;
    p.a1 = rhs<double>(params, layout.equationIndex(spec.outcome().name), values);
    p.s1 = rhs<double>(params, layout.equationIndex(spec.mediator(1).name), values);
    return p;
}

double log_sum_exp(double u, double v) {
    const double m = std::max(u, v);
    return m + std::log(std::exp(u - m) + std::exp(v - m));
}

}  // namespace

double OuterMarginal::outcomeLogit(double x, int w1, const Assignment& covariates) const {
    if (w1 != 0 && w1 != 1) throw std::invalid_argument("w1 must be 0 or 1");
    const auto& layout = params_.layout();
    auto values = encode(layout, covariates);
    values[layout.variableIndex(params_.spec().treatment().name)] = x;
    values[layout.variableIndex(params_.spec().mediator(1).name)] = w1;
    const auto p = outer_parts(params_, values);
    const double common = w1 * (p.s1 - p.s0) + softplus(p.s0) - softplus(p.s1) + p.r2;
    const double h0 = softplus(p.a) - softplus(p.a1) + common;
    const double h1 = (p.a1 - p.a) + h0;
    return p.a + (softplus(h1) - softplus(h0));
}

double OuterMarginal::mediatorLogit(double x, const Assignment& covariates) const {
    const auto& layout = params_.layout();
    auto values = encode(layout, covariates);
    values[layout.variableIndex(params_.spec().treatment().name)] = x;
    const auto p = outer_parts(params_, values);
    const double logq1 = -softplus(-p.r2), logq0 = -softplus(p.r2);
    const double on = log_sum_exp(-softplus(-p.s0) + logq0, -softplus(-p.s1) + logq1);
    const double off = log_sum_exp(-softplus(p.s0) + logq0, -softplus(p.s1) + logq1);
    return on - off;
}

ParameterSet OuterMarginal::toParameterSet() const {
    const auto& spec = params_.spec();
    const auto& y = spec.outcome().name;
    const auto& w1 = spec.mediator(1).name;
    const auto& w2 = spec.mediator(2).name;
    const auto& x = spec.treatment().name;
    const auto yCovs = covariates_in(spec, {y, w1, w2});
    const auto wCovs = covariates_in(spec, {w1, w2});
    require_discrete(spec, yCovs, "outer marginalization");

    SystemSpec out;
    for (const auto& v : spec.variables)
        if (v.name != w2) out.variables.push_back(v);
    std::vector<std::string> yPred{x, w1};
    yPred.insert(yPred.end(), yCovs.begin(), yCovs.end());
    std::vector<std::string> wPred{x};
    wPred.insert(wPred.end(), wCovs.begin(), wCovs.end());
    out.equations.push_back({y, full_basis(yPred)});
    out.equations.push_back({w1, full_basis(wPred)});

    ParameterSet result(make_layout(std::move(out)));
    const auto split = [&](const Assignment& corner, Assignment& covs) {
        covs.clear();
        double xv = 0.0;
        int w = 0;
        for (const auto& [name, value] : corner) {
            if (name == x) xv = value;
            else if (name == w1) w = static_cast<int>(value);
            else covs[name] = value;
        }
        return std::pair{xv, w};
    };
    Assignment covs;
    mobius_fill(result, result.layout().equationIndex(y), [&](const Assignment& corner) {
        const auto [xv, w] = split(corner, covs);
        return outcomeLogit(xv, w, covs);
    });
    mobius_fill(result, result.layout().equationIndex(w1), [&](const Assignment& corner) {
        const auto [xv, w] = split(corner, covs);
        return mediatorLogit(xv, covs);
    });
    return result;
}

OuterMarginal marginalize_outer(const ParameterSet& params) { return OuterMarginal(params); }

}  // namespace pathlogit
