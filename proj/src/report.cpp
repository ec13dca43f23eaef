#include "pathlogit/report.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace pathlogit {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string num(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

void write_effects_csv(std::ostream& out, const std::vector<EffectEstimate>& rows) {
    out << "effect,contrast,covariates,estimate,se,ci_low,ci_high,p_value\n";
    for (const auto& r : rows)
        out << csv_field(r.effect) << ',' << csv_field(r.contrast) << ',' << csv_field(r.covariates) << ','
            << num(r.value) << ',' << num(r.se) << ',' << num(r.ciLow) << ',' << num(r.ciHigh) << ','
            << num(r.pValue) << '\n';
}

nlohmann::json effects_to_json(const std::vector<EffectEstimate>& rows) {
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"effect", r.effect},
                       {"contrast", r.contrast},
                       {"covariates", r.covariates},
                       {"estimate", r.value},
                       {"se", r.se},
                       {"ci_low", r.ciLow},
                       {"ci_high", r.ciHigh},
                       {"p_value", r.pValue}});
    return arr;
}

void write_effects_text(std::ostream& out, const std::vector<EffectEstimate>& rows) {
    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.effect.size() + r.contrast.size());
    std::string block;
    for (const auto& r : rows) {
        const std::string key = r.contrast + "|" + r.covariates;
        if (key != block) {
            if (!block.empty()) out << '\n';
            block = key;
            fmt::print(out, "{}{}\n", r.contrast, r.covariates.empty() ? "" : "  " + r.covariates);
            fmt::print(out, "{:<{}} {:>8} {:>7} {:>8} {:>8} {:>8}\n", "", width, "Est.", "SE", "CI low",
                       "CI high", "p-value");
        }
        fmt::print(out, "{:<{}} {:>8.3f} {:>7.3f} {:>8.3f} {:>8.3f} {:>8.3f}\n", r.effect + r.contrast, width,
                   r.value, r.se, r.ciLow, r.ciHigh, r.pValue);
    }
}

void write_coefficients_text(std::ostream& out, const FittedSystem& fitted) {
    const auto& layout = fitted.params.layout();
    std::size_t width = 4;
    for (const auto& eq : layout.equations())
        for (const auto& c : eq.columns) width = std::max(width, c.label.size());
    for (std::size_t e = 0; e < layout.equations().size(); ++e) {
        const auto& eq = layout.equations()[e];
        const auto& d = fitted.perEquation[e];
        fmt::print(out, "Equation {}  (loglik {:.4f}, {} iterations{}{})\n", eq.response, d.loglik, d.iterations,
                   d.converged ? "" : ", NOT CONVERGED", d.separation ? ", separation warning" : "");
        fmt::print(out, "  {:<{}} {:>9} {:>8} {:>9} {:>9} {:>8}\n", "term", width, "Est.", "SE", "CI low",
                   "CI high", "p-value");
        for (std::size_t c = 0; c < eq.columns.size(); ++c) {
            const auto i = eq.offset + c;
            const auto est = make_estimate(fitted.params.values()[i], fitted.se(i));
            fmt::print(out, "  {:<{}} {:>9.4f} {:>8.4f} {:>9.4f} {:>9.4f} {:>8.3f}\n", eq.columns[c].label, width,
                       est.value, est.se, est.ciLow, est.ciHigh, est.pValue);
        }
        out << '\n';
    }
    fmt::print(out, "n = {}\n", fitted.n);
}

void write_coefficients_csv(std::ostream& out, const FittedSystem& fitted) {
    out << "equation,term,estimate,se,ci_low,ci_high,p_value\n";
    const auto& layout = fitted.params.layout();
    for (const auto& eq : layout.equations()) {
        for (std::size_t c = 0; c < eq.columns.size(); ++c) {
            const auto i = eq.offset + c;
            const auto est = make_estimate(fitted.params.values()[i], fitted.se(i));
            out << csv_field(eq.response) << ',' << csv_field(eq.columns[c].label) << ',' << num(est.value) << ','
                << num(est.se) << ',' << num(est.ciLow) << ',' << num(est.ciHigh) << ',' << num(est.pValue)
                << '\n';
        }
    }
}

}  // namespace pathlogit
