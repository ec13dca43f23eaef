#include "pathlogit/cli.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "pathlogit/effects_multi.hpp"
#include "pathlogit/fitting.hpp"
#include "pathlogit/inference.hpp"
#include "pathlogit/report.hpp"
#include "pathlogit/simulation.hpp"

namespace pathlogit {

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Options {
    std::string data;
    std::string model;
    std::string fitted;
    std::string out;
    std::string format = "text";
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<int> threads;
    std::vector<std::string> contrasts;
    std::vector<double> at;
    std::vector<std::string> by;
    std::vector<std::string> set;
    std::string scale = "logodds";
    std::vector<std::string> paths;
    int inner = 0;
    int outer = 0;
};

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    try {
        nlohmann::json doc;
        in >> doc;
        return doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

/// The fitted system from --fitted, or fitted on the spot from --data and --model.
FittedSystem obtain_fit(const Options& o) {
    if (!o.fitted.empty()) {
        if (!o.data.empty()) throw UsageError("give either --fitted or --data/--model, not both");
        try {
            return fitted_from_json(read_json_file(o.fitted));
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(o.fitted + ": " + e.what());
        }
    }
    if (o.data.empty() || o.model.empty()) throw UsageError("need --fitted, or both --data and --model");
    const auto spec = load_system(o.model);
    const auto report = validate_system(spec);
    if (!report.ok()) {
        std::string msg = o.model + ": invalid model";
        for (const auto& v : report.violations) msg += "\n  " + v;
        throw std::invalid_argument(msg);
    }
    return fit_system(load_dataset(o.data, spec), spec);
}

std::ostream& open_out(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty()) return fallback;
    file.open(path);
    if (!file) throw std::invalid_argument("cannot write " + path);
    return file;
}

ParameterTransform make_transform(const Options& o, const SystemSpec& spec) {
    if (o.inner > 0 && o.outer > 0) throw UsageError("choose one of --marginalize-inner and --marginalize-outer");
    const int k = spec.mediatorCount();
    if (o.inner > 0) {
        if (o.inner >= k)
            throw UsageError(fmt::format("--marginalize-inner {} would remove every mediator (system has {})", o.inner, k));
        const int times = o.inner;
        return [times](const ParameterSet& p) {
            ParameterSet cur = p;
            for (int i = 0; i < times; ++i) cur = marginalize_inner(cur);
            return cur;
        };
    }
    if (o.outer > 0) {
        if (k != 2 || o.outer != 2)
            throw UsageError("--marginalize-outer supports removing W2 from a two-mediator system (use 2)");
        return [](const ParameterSet& p) { return marginalize_outer(p).toParameterSet(); };
    }
    return {};
}

std::vector<double> levels_of(const VariableSpec& v) {
    if (v.kind == Kind::binary) return {0.0, 1.0};
    if (v.kind == Kind::categorical) {
        std::vector<double> out;
        for (std::size_t i = 0; i < v.levels.size(); ++i) out.push_back(static_cast<double>(i));
        return out;
    }
    throw UsageError("--by needs a discrete covariate; " + v.name + " is continuous");
}

std::vector<Assignment> covariate_settings(const Options& o, const SystemSpec& spec) {
    Assignment fixed;
    for (const auto& s : o.set) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects VAR=value, got '" + s + "'");
        const auto name = s.substr(0, eq);
        const auto* v = spec.find(name);
        if (!v || v->role != Role::covariate) throw UsageError("--set: '" + name + "' is not a covariate");
        try {
            fixed[name] = spec.parseValue(name, s.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--set: ") + e.what());
        }
    }
    std::vector<Assignment> out{fixed};
    for (const auto& name : o.by) {
        const auto* v = spec.find(name);
        if (!v || v->role != Role::covariate) throw UsageError("--by: '" + name + "' is not a covariate");
        if (fixed.count(name)) throw UsageError("--by and --set both name " + name);
        std::vector<Assignment> next;
        for (const auto& base : out)
            for (const double level : levels_of(*v)) {
                auto a = base;
                a[name] = level;
                next.push_back(std::move(a));
            }
        out = std::move(next);
    }
    return out;
}

std::vector<EffectRequest> build_requests(const Options& o, const SystemSpec& spec) {
    const auto& x = spec.treatment();
    std::vector<std::pair<double, double>> contrasts;
    for (const auto& c : o.contrasts) {
        const auto comma = c.find(',');
        if (comma == std::string::npos) throw UsageError("--contrast expects a,b, got '" + c + "'");
        try {
            contrasts.emplace_back(spec.parseValue(x.name, c.substr(0, comma)), spec.parseValue(x.name, c.substr(comma + 1)));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--contrast: ") + e.what());
        }
    }
    if (contrasts.empty() && o.at.empty()) {
        if (x.kind == Kind::continuous) throw UsageError("continuous treatment: give --at x or --contrast a,b");
        const auto levels = levels_of(x);
        for (std::size_t i = 1; i < levels.size(); ++i) contrasts.emplace_back(levels[i], levels[0]);
    }
    std::vector<Scale> scales;
    if (o.scale == "logodds" || o.scale == "both") scales.push_back(Scale::logOdds);
    if (o.scale == "prob" || o.scale == "both") scales.push_back(Scale::probability);

    std::vector<EffectRequest> out;
    for (const auto scale : scales)
        for (const auto& cov : covariate_settings(o, spec)) {
            for (const auto& [x1, x0] : contrasts) out.push_back(EffectRequest::contrast(x1, x0, cov, scale));
            for (const double a : o.at) out.push_back(EffectRequest::derivative(a, cov, scale));
        }
    for (const auto& r : out) {
        try {
            validate_request(spec, r);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    return out;
}

void emit_effects(const Options& o, const std::vector<EffectEstimate>& rows, std::ostream& out) {
    if (o.format == "json") {
        out << effects_to_json(rows).dump(2) << '\n';
    } else if (o.format == "csv") {
        write_effects_csv(out, rows);
    } else {
        write_effects_text(out, rows);
        for (const auto& r : rows)
            if ((r.effect == "RES" || r.effect == "RPE") && std::abs(r.value) > 1e-10) {
                out << "\nnote: the residual effect is nonzero, so the indirect/total ratio is not a "
                       "proportion mediated.\n";
                break;
            }
    }
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
    const auto fitted = obtain_fit(o);
    if (!o.out.empty()) {
        std::ofstream file(o.out);
        if (!file) throw std::invalid_argument("cannot write " + o.out);
        file << to_json(fitted).dump(2) << '\n';
    }
    if (o.format == "json") out << to_json(fitted).dump(2) << '\n';
    else if (o.format == "csv") write_coefficients_csv(out, fitted);
    else write_coefficients_text(out, fitted);
    for (std::size_t e = 0; e < fitted.perEquation.size(); ++e) {
        const auto& d = fitted.perEquation[e];
        if (!d.converged || d.separation)
            err << "warning: equation " << fitted.params.layout().equations()[e].response
                      << (d.converged ? " shows signs of separation" : " did not converge") << '\n';
    }
    return 0;
}

int cmd_decompose(const Options& o, std::ostream& out) {
    const auto fitted = obtain_fit(o);
    const auto transform = make_transform(o, fitted.params.spec());
    const ParameterSet target = transform ? transform(fitted.params) : fitted.params;
    const auto& spec = target.spec();
    std::vector<PathSpec> paths;
    for (const auto& p : o.paths) {
        try {
            paths.push_back(PathSpec::parse(p));
            paths.back().check(spec);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--path: ") + e.what());
        }
    }
    const auto requests = build_requests(o, spec);
    std::ofstream file;
    auto& dest = open_out(o.out, file, out);
    emit_effects(o, effect_table(fitted, requests, paths, transform), dest);
    return 0;
}

int cmd_marginalize(const Options& o, std::ostream& out) {
    if (o.inner == 0 && o.outer == 0) throw UsageError("marginalize needs --inner j or --outer j");
    const auto fitted = obtain_fit(o);
    const auto transform = make_transform(o, fitted.params.spec());
    const auto marginal = transform(fitted.params);
    const auto& layout = marginal.layout();
    std::vector<EffectEstimate> coefs;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        auto est = delta_se(fitted, [&transform, i](const ParameterSet& p) { return transform(p).values()[i]; });
        est.effect = layout.label(i);
        coefs.push_back(std::move(est));
    }
    std::ofstream file;
    auto& dest = open_out(o.out, file, out);
    if (o.format == "json") {
        nlohmann::json doc;
        doc["spec"] = to_json(layout.spec());
        doc["coefficients"] = nlohmann::json::array();
        for (std::size_t i = 0; i < coefs.size(); ++i) {
            const auto& eq = layout.equations();
            std::string response, term;
            for (const auto& el : eq)
                if (i >= el.offset && i < el.offset + el.columns.size()) {
                    response = el.response;
                    term = el.columns[i - el.offset].label;
                }
            doc["coefficients"].push_back({{"equation", response},
                                           {"term", term},
                                           {"estimate", coefs[i].value},
                                           {"se", coefs[i].se}});
        }
        dest << doc.dump(2) << '\n';
    } else if (o.format == "csv") {
        dest << "coefficient,estimate,se,ci_low,ci_high,p_value\n";
        for (const auto& c : coefs)
            dest << '"' << c.effect << "\"," << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}", c.value, c.se,
                                                           c.ciLow, c.ciHigh, c.pValue)
                 << '\n';
    } else {
        std::size_t width = 4;
        for (const auto& c : coefs) width = std::max(width, c.effect.size());
        fmt::print(dest, "{:<{}} {:>9} {:>8} {:>9} {:>9} {:>8}\n", "coefficient", width, "Est.", "SE", "CI low",
                   "CI high", "p-value");
        for (const auto& c : coefs)
            fmt::print(dest, "{:<{}} {:>9.4f} {:>8.4f} {:>9.4f} {:>9.4f} {:>8.3f}\n", c.effect, width, c.value, c.se,
                       c.ciLow, c.ciHigh, c.pValue);
    }
    return 0;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.config.empty()) throw UsageError("simulate needs --config");
    auto grid = load_grid(o.config);
    if (o.seed) grid.base.seed = *o.seed;
    if (o.replications) {
        if (*o.replications < 1) throw UsageError("--replications must be positive");
        grid.base.replications = *o.replications;
    }
    if (o.threads) grid.base.threads = *o.threads;
    const auto start = std::chrono::steady_clock::now();
    const auto results = run_grid(grid);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ofstream file;
    auto& dest = open_out(o.out, file, out);
    if (o.format == "json") {
        auto arr = nlohmann::json::array();
        for (const auto& r : results)
            for (const auto& [name, m] : {std::pair{"RSD", &r.rsd}, std::pair{"KHB", &r.khb}})
                arr.push_back({{"method", name},
                               {"treatment", std::string(to_string(r.config.treatment))},
                               {"beta_x", r.config.truth.betaX},
                               {"n", r.config.n},
                               {"average", m->average},
                               {"variance", m->variance},
                               {"rmse", m->rmse},
                               {"true_value", r.truth.ratio},
                               {"excluded", r.excluded},
                               {"mcse", m->mcse}});
        dest << arr.dump(2) << '\n';
    } else {
        write_results_csv(dest, results);
    }

    bool failed = false;
    std::ostream& summary = o.out.empty() ? err : out;
    fmt::print(summary, "{:<10} {:>5} {:>5} {:>7} {:>8} {:>8} {:>8} {:>8} {:>5}\n", "treatment", "b_x", "n", "true",
               "RSD avg", "RSD rmse", "KHB avg", "KHB rmse", "excl");
    for (const auto& r : results) {
        fmt::print(summary, "{:<10} {:>5} {:>5} {:>7.3f} {:>8.3f} {:>8.3f} {:>8.3f} {:>8.3f} {:>5}\n",
                   to_string(r.config.treatment), r.config.truth.betaX, r.config.n, r.truth.ratio, r.rsd.average,
                   r.rsd.rmse, r.khb.average, r.khb.rmse, r.excluded);
        if (r.ratioFlagged)
            fmt::print(summary, "  note: true total effect is zero (mean estimated total {:.4g}); the ratio is undefined\n",
                       r.meanTotal);
        if (r.failed()) {
            failed = true;
            fmt::print(err, "error: {} of {} replications excluded for {} b_x={} n={} (limit {:.0f}%)\n", r.excluded,
                       r.excluded + r.used, to_string(r.config.treatment), r.config.truth.betaX, r.config.n,
                       100.0 * r.config.maxExcludedFraction);
        }
    }
    fmt::print(summary, "{} cells, {} replications each, {:.1f} s\n", results.size(), grid.base.replications, secs);
    return failed ? 1 : 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact effect decomposition for recursive systems of logistic regressions"};
    app.name("pathlogit");
    app.require_subcommand(1);
    Options o;

    const auto add_io = [&](CLI::App* sub) {
        sub->add_option("--data", o.data, "CSV or JSON data (records or a count column)");
        sub->add_option("--model", o.model, "JSON model specification");
        sub->add_option("--out", o.out, "output file");
        sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv", "text"}));
    };

    auto* fit = app.add_subcommand("fit", "fit every equation of a model by maximum likelihood");
    add_io(fit);

    auto* dec = app.add_subcommand("decompose", "decompose total effects with delta-method inference");
    add_io(dec);
    dec->add_option("--fitted", o.fitted, "fitted-system JSON written by 'fit --out'");
    dec->add_option("--contrast", o.contrasts, "treatment contrast a,b (repeatable)");
    dec->add_option("--at", o.at, "derivative point for a continuous treatment (repeatable)");
    dec->add_option("--by", o.by, "stratify by every level of a covariate (repeatable)");
    dec->add_option("--set", o.set, "fix a covariate, VAR=value (repeatable)");
    dec->add_option("--scale", o.scale, "effect scale")->check(CLI::IsMember({"logodds", "prob", "both"}));
    dec->add_option("--path", o.paths, "mediator indices of a path, e.g. 3,2 (repeatable)");
    dec->add_option("--marginalize-inner", o.inner, "sum out the j innermost mediators first")->check(CLI::PositiveNumber);
    dec->add_option("--marginalize-outer", o.outer, "sum out outer mediator j first (two-mediator systems, j=2)")
        ->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("simulate", "run the Monte Carlo comparison of RSD and KHB ratios");
    sim->add_option("--config", o.config, "study grid JSON")->required();
    sim->add_option("--out", o.out, "results file (CSV unless --format json)");
    sim->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv", "text"}));
    sim->add_option("--seed", o.seed, "master seed (overrides the config)");
    sim->add_option("--replications", o.replications, "replications per cell (overrides the config)");
    sim->add_option("--threads", o.threads, "worker threads, 0 for all cores");

    auto* marg = app.add_subcommand("marginalize", "parameters of the model with mediators summed out");
    add_io(marg);
    marg->add_option("--fitted", o.fitted, "fitted-system JSON written by 'fit --out'");
    marg->add_option("--inner", o.inner, "sum out the j innermost mediators")->check(CLI::PositiveNumber);
    marg->add_option("--outer", o.outer, "sum out outer mediator j (two-mediator systems, j=2)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (fit->parsed()) return cmd_fit(o, out, err);
        if (dec->parsed()) return cmd_decompose(o, out);
        if (sim->parsed()) return cmd_simulate(o, out, err);
        if (marg->parsed()) return cmd_marginalize(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace pathlogit
