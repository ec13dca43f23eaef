#include "pathlogit/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "pathlogit/effects_single.hpp"
#include "pathlogit/numeric.hpp"

namespace pathlogit {

namespace {

constexpr std::uint64_t kPopulationStream = 0x706f70756c617469ULL;
constexpr std::uint64_t kSampleStream = 0x73616d706c650000ULL;
constexpr std::uint64_t kReplicationStream = 0x7265706c69636174ULL;

std::mt19937_64 seeded(std::initializer_list<std::uint64_t> words) {
    std::vector<std::uint32_t> parts;
    for (const auto w : words) {
        parts.push_back(static_cast<std::uint32_t>(w));
        parts.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq seq(parts.begin(), parts.end());
    return std::mt19937_64(seq);
}

std::uint64_t beta_key(double betaX) { return static_cast<std::uint64_t>(std::llround(betaX * 1e6)); }

struct RatioAndTotal {
    double ratio = 0.0;
    double total = 0.0;
};

bool fit_ok(const FitDiagnostics& d) { return d.converged && !d.separation; }

RatioAndTotal rsd_estimate(const Dataset& data, TreatmentKind kind, const FitControl& control) {
    const auto spec = sim_estimation_system(kind);
    const auto fitted = fit_system(kind == TreatmentKind::binary ? data.collapsed() : data, spec, control);
    for (const auto& d : fitted.perEquation)
        if (!fit_ok(d)) throw std::runtime_error("fit did not converge cleanly");
    if (kind == TreatmentKind::binary) {
        const auto dec = decompose_logodds(fitted.params, EffectRequest::contrast(1.0, 0.0));
        return {dec.indirect / dec.total, dec.total};
    }
    const auto ape = average_probability_effects(fitted.params, data);
    return {ape.indirect / ape.total, ape.total};
}

}  // namespace

std::string_view to_string(TreatmentKind kind) { return kind == TreatmentKind::binary ? "binary" : "continuous"; }

TreatmentKind parse_treatment_kind(std::string_view text) {
    if (text == "binary") return TreatmentKind::binary;
    if (text == "continuous") return TreatmentKind::continuous;
    throw std::invalid_argument("treatment must be 'binary' or 'continuous', got '" + std::string(text) + "'");
}

SystemSpec sim_system(TreatmentKind kind) {
    SystemSpec spec;
    spec.variables = {{"Y", Role::outcome, Kind::binary, {}, std::nullopt},
                      {"W", Role::mediator, Kind::binary, {}, 1},
                      {"X", Role::treatment, kind == TreatmentKind::binary ? Kind::binary : Kind::continuous, {},
                       std::nullopt}};
    spec.equations = {{"Y", {Term::parse("1"), Term::parse("X"), Term::parse("W"), Term::parse("X:W")}},
                      {"W", {Term::parse("1"), Term::parse("X")}}};
    return spec;
}

SystemSpec sim_estimation_system(TreatmentKind kind) {
    auto spec = sim_system(kind);
    spec.equations[0].terms.pop_back();
    return spec;
}

ParameterSet truth_params(const SimConfig& config) {
    ParameterSet p(make_layout(sim_system(config.treatment)));
    const auto& t = config.truth;
    p.set("Y", "1", t.beta0);
    p.set("Y", "X", t.betaX);
    p.set("Y", "W", t.betaW);
    p.set("Y", "X:W", t.betaXW);
    p.set("W", "1", t.gamma0);
    p.set("W", "X", t.gammaX);
    return p;
}

std::vector<double> pseudo_population(const SimConfig& config) {
    auto rng = seeded({config.seed, kPopulationStream});
    std::normal_distribution<double> normal(0.0, std::sqrt(config.treatmentVariance));
    std::vector<double> xs(config.pseudoPopulationSize);
    for (auto& x : xs) x = normal(rng);
    return xs;
}

std::vector<double> treatment_sample(const SimConfig& config, const std::vector<double>& population) {
    if (config.n <= 0 || static_cast<std::size_t>(config.n) > population.size())
        throw std::invalid_argument("sample size must be between 1 and the pseudo-population size");
    auto rng = seeded({config.seed, kSampleStream, static_cast<std::uint64_t>(config.n)});
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(config.n));
    std::sample(population.begin(), population.end(), std::back_inserter(out), config.n, rng);
    return out;
}

std::mt19937_64 replication_rng(const SimConfig& config, int rep) {
    return seeded({config.seed, kReplicationStream, static_cast<std::uint64_t>(config.treatment),
                   beta_key(config.truth.betaX), static_cast<std::uint64_t>(config.n),
                   static_cast<std::uint64_t>(rep)});
}

Dataset generate_data(const SimConfig& config, int rep, const std::vector<double>& xs) {
    if (config.treatment == TreatmentKind::continuous && xs.size() != static_cast<std::size_t>(config.n))
        throw std::invalid_argument("continuous replications need the fixed treatment sample of size n");
    auto rng = replication_rng(config, rep);
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto& t = config.truth;
    Dataset data({"Y", "W", "X"});
    data.reserve(static_cast<std::size_t>(config.n));
    for (int i = 0; i < config.n; ++i) {
        const double x = config.treatment == TreatmentKind::binary ? (coin(rng) ? 1.0 : 0.0)
                                                                   : xs[static_cast<std::size_t>(i)];
        const double w = unif(rng) < expit(t.gamma0 + t.gammaX * x) ? 1.0 : 0.0;
        const double y = unif(rng) < expit(t.beta0 + t.betaX * x + t.betaW * w + t.betaXW * x * w) ? 1.0 : 0.0;
        const double row[] = {y, w, x};
        data.addRow(row);
    }
    return data;
}

double rsd_ratio(const Dataset& data, TreatmentKind kind, const FitControl& control) {
    return rsd_estimate(data, kind, control).ratio;
}

double khb_ratio(const Dataset& data, TreatmentKind kind, const FitControl& control) {
    const auto yc = data.columnIndex("Y"), wc = data.columnIndex("W"), xc = data.columnIndex("X");
    if (!yc || !wc || !xc) throw std::invalid_argument("KHB needs columns Y, W and X");
    const auto n = static_cast<Eigen::Index>(data.rows());
    Eigen::VectorXd y(n), w(n), x(n), wt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        y[i] = data.value(r, *yc);
        w[i] = data.value(r, *wc);
        x[i] = data.value(r, *xc);
        wt[i] = data.weight(r);
    }
    Eigen::MatrixXd lin(n, 2);
    lin.col(0).setOnes();
    lin.col(1) = x;
    const Eigen::VectorXd sw = wt.array().sqrt();
    const Eigen::VectorXd ols =
        (sw.asDiagonal() * lin).colPivHouseholderQr().solve(sw.cwiseProduct(w));
    const Eigen::VectorXd resid = w - lin * ols;

    Eigen::MatrixXd full(n, 3), reduced(n, 3);
    full << lin, w;
    reduced << lin, resid;
    const auto ff = fit_logistic(full, y, wt, {"1", "X", "W"}, control);
    const auto fr = fit_logistic(reduced, y, wt, {"1", "X", "R"}, control);
    if (!fit_ok(ff.diagnostics) || !fit_ok(fr.diagnostics))
        throw std::runtime_error("KHB fit did not converge cleanly");
    double bFull = ff.coef[1], bRed = fr.coef[1];
    if (kind == TreatmentKind::continuous) {
        const auto ape = [&](const Eigen::MatrixXd& design, const Eigen::VectorXd& coef) {
            const Eigen::VectorXd eta = design * coef;
            double s = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double p = expit(eta[i]);
                s += wt[i] * p * (1.0 - p);
            }
            return s / wt.sum() * coef[1];
        };
        bFull = ape(full, ff.coef);
        bRed = ape(reduced, fr.coef);
    }
    return (bRed - bFull) / bRed;
}

bool TrueValue::defined() const { return std::abs(total) > 1e-12; }

TrueValue true_values(const SimConfig& config) {
    if (config.treatment == TreatmentKind::binary) return true_values(config, {});
    return true_values(config, pseudo_population(config));
}

TrueValue true_values(const SimConfig& config, const std::vector<double>& population) {
    const auto truth = truth_params(config);
    TrueValue tv;
    if (config.treatment == TreatmentKind::binary) {
        const auto dec = decompose_logodds(truth, EffectRequest::contrast(1.0, 0.0));
        tv.total = dec.total;
        tv.ratio = dec.indirect / dec.total;
    } else {
        if (population.empty()) throw std::invalid_argument("empty pseudo-population");
        Dataset pop({"X"});
        pop.reserve(population.size());
        for (const double x : population) pop.addRow(std::span<const double>(&x, 1));
        const auto ape = average_probability_effects(truth, pop);
        tv.total = ape.total;
        tv.ratio = ape.indirect / ape.total;
    }
    if (!tv.defined()) tv.ratio = std::nan("");
    else if (config.truth.betaW == 0.0 && config.truth.betaXW == 0.0) tv.ratio = 0.0;
    return tv;
}

MethodSummary summarize(const std::vector<double>& values, double truth) {
    MethodSummary s;
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.average = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0, mse = 0.0;
    for (const double v : values) {
        var += (v - s.average) * (v - s.average);
        mse += (v - truth) * (v - truth);
    }
    s.variance = var / n;
    s.rmse = std::sqrt(mse / n);
    s.mcse = std::sqrt(s.variance / n);
    return s;
}

bool SimResult::failed() const {
    const int total = used + excluded;
    return total == 0 || excluded > config.maxExcludedFraction * total;
}

SimResult run_study(const SimConfig& config) {
    if (config.treatment == TreatmentKind::binary) return run_study(config, {});
    return run_study(config, pseudo_population(config));
}

SimResult run_study(const SimConfig& config, const std::vector<double>& population) {
    if (config.replications < 1) throw std::invalid_argument("replications must be positive");
    if (config.n < 2) throw std::invalid_argument("sample size must be at least 2");
    SimResult result;
    result.config = config;
    result.truth = true_values(config, population);
    result.ratioFlagged = !result.truth.defined();

    std::vector<double> xs;
    if (config.treatment == TreatmentKind::continuous) xs = treatment_sample(config, population);

    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<double> rsd(reps), khb(reps), total(reps);
    std::vector<char> ok(reps, 0);
    const auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t r = begin; r < reps; r += stride) {
            try {
                const auto data = generate_data(config, static_cast<int>(r), xs);
                const auto est = rsd_estimate(data, config.treatment, {});
                rsd[r] = est.ratio;
                total[r] = est.total;
                khb[r] = khb_ratio(data, config.treatment);
                ok[r] = std::isfinite(rsd[r]) && std::isfinite(khb[r]) ? 1 : 0;
            } catch (const std::exception&) {
                ok[r] = 0;
            }
        }
    };
    std::size_t threads = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, reps);
    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }

    std::vector<double> rsdOk, khbOk;
    double totalSum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        if (!ok[r]) {
            ++result.excluded;
            continue;
        }
        rsdOk.push_back(rsd[r]);
        khbOk.push_back(khb[r]);
        totalSum += total[r];
    }
    result.used = static_cast<int>(rsdOk.size());
    if (result.used > 0) result.meanTotal = totalSum / result.used;
    const double truth = result.ratioFlagged ? 0.0 : result.truth.ratio;
    result.rsd = summarize(rsdOk, truth);
    result.khb = summarize(khbOk, truth);
    return result;
}

std::vector<SimConfig> StudyGrid::cells() const {
    std::vector<SimConfig> out;
    for (const auto t : treatments)
        for (const double b : betaX)
            for (const int n : sampleSizes) {
                SimConfig c = base;
                c.treatment = t;
                c.truth.betaX = b;
                c.n = n;
                out.push_back(c);
            }
    return out;
}

StudyGrid grid_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("study config must be a JSON object");
    static const std::vector<std::string> known{"seed",          "replications",     "pseudo_population_size",
                                                "treatment_variance", "truth",      "beta_x",
                                                "n",             "treatments",       "threads",
                                                "max_excluded_fraction"};
    for (const auto& [key, _] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("unknown study config key '" + key + "'");
    StudyGrid g;
    try {
        auto& b = g.base;
        b.seed = doc.value("seed", b.seed);
        b.replications = doc.value("replications", b.replications);
        b.pseudoPopulationSize = doc.value("pseudo_population_size", b.pseudoPopulationSize);
        b.treatmentVariance = doc.value("treatment_variance", b.treatmentVariance);
        b.threads = doc.value("threads", b.threads);
        b.maxExcludedFraction = doc.value("max_excluded_fraction", b.maxExcludedFraction);
        if (doc.contains("truth")) {
            const auto& t = doc.at("truth");
            static const std::vector<std::string> truthKeys{"beta0", "beta_w", "beta_xw", "gamma0", "gamma_x"};
            for (const auto& [key, _] : t.items())
                if (std::find(truthKeys.begin(), truthKeys.end(), key) == truthKeys.end())
                    throw std::invalid_argument("unknown truth key '" + key + "'");
            b.truth.beta0 = t.value("beta0", b.truth.beta0);
            b.truth.betaW = t.value("beta_w", b.truth.betaW);
            b.truth.betaXW = t.value("beta_xw", b.truth.betaXW);
            b.truth.gamma0 = t.value("gamma0", b.truth.gamma0);
            b.truth.gammaX = t.value("gamma_x", b.truth.gammaX);
        }
        if (doc.contains("beta_x")) g.betaX = doc.at("beta_x").get<std::vector<double>>();
        if (doc.contains("n")) g.sampleSizes = doc.at("n").get<std::vector<int>>();
        if (doc.contains("treatments")) {
            g.treatments.clear();
            for (const auto& t : doc.at("treatments")) g.treatments.push_back(parse_treatment_kind(t.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("study config: ") + e.what());
    }
    if (g.base.replications < 1) throw std::invalid_argument("study config: replications must be positive");
    if (g.base.pseudoPopulationSize < 1) throw std::invalid_argument("study config: pseudo_population_size must be positive");
    if (!(g.base.treatmentVariance > 0.0)) throw std::invalid_argument("study config: treatment_variance must be positive");
    if (!(g.base.maxExcludedFraction >= 0.0 && g.base.maxExcludedFraction <= 1.0))
        throw std::invalid_argument("study config: max_excluded_fraction must be in [0,1]");
    if (g.betaX.empty() || g.sampleSizes.empty() || g.treatments.empty())
        throw std::invalid_argument("study config: beta_x, n and treatments must be nonempty");
    for (const int n : g.sampleSizes)
        if (n < 2 || static_cast<std::size_t>(n) > g.base.pseudoPopulationSize)
            throw std::invalid_argument("study config: each n must be at least 2 and at most the pseudo-population size");
    return g;
}

StudyGrid load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open study config " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return grid_from_json(doc);
}

std::vector<SimResult> run_grid(const StudyGrid& grid) {
    std::vector<SimResult> out;
    std::vector<double> population;
    for (const auto& cell : grid.cells()) {
        if (cell.treatment == TreatmentKind::continuous && population.empty()) population = pseudo_population(cell);
        out.push_back(run_study(cell, population));
    }
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<SimResult>& results) {
    out << "method,treatment,beta_x,n,average,variance,rmse,true_value,excluded,mcse\n";
    for (const auto& r : results) {
        for (const auto& [name, m] : {std::pair{"RSD", &r.rsd}, std::pair{"KHB", &r.khb}}) {
            out << fmt::format("{},{},{},{},{:.10g},{:.10g},{:.10g},{:.10g},{},{:.10g}\n", name,
                               to_string(r.config.treatment), r.config.truth.betaX, r.config.n, m->average,
                               m->variance, m->rmse, r.truth.ratio, r.excluded, m->mcse);
        }
    }
}

}  // namespace pathlogit
