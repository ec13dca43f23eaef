#include "pathlogit/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pathlogit {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

Role parse_role(const std::string& s) {
    if (s == "outcome") return Role::outcome;
    if (s == "treatment") return Role::treatment;
    if (s == "mediator") return Role::mediator;
    if (s == "covariate") return Role::covariate;
    throw std::invalid_argument("unknown variable role '" + s + "'");
}

Kind parse_kind(const std::string& s) {
    if (s == "binary") return Kind::binary;
    if (s == "continuous") return Kind::continuous;
    if (s == "categorical") return Kind::categorical;
    throw std::invalid_argument("unknown variable kind '" + s + "'");
}

// Every non-empty combination of non-reference levels for the categorical
// factors of a term; numeric factors contribute a single entry.
void expand_columns(const SystemSpec& spec, const ParameterLayout& layout, const Term& term,
                    std::vector<Column>& out) {
    std::vector<Factor> factors;
    for (const auto& name : term.factors()) factors.push_back({layout.variableIndex(name), -1});
    // Keep the system ordering (X before W before C) in labels.
    std::sort(factors.begin(), factors.end(), [&](const Factor& a, const Factor& b) {
        const auto& va = spec.variables[a.var].name;
        const auto& vb = spec.variables[b.var].name;
        const int ra = spec.rank(va), rb = spec.rank(vb);
        if (ra != rb) return ra > rb;
        return a.var < b.var;
    });

    std::vector<Factor> current = factors;
    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == current.size()) {
            std::string label;
            for (const auto& f : current) {
                if (!label.empty()) label += ':';
                const auto& v = spec.variables[f.var];
                label += v.name;
                if (f.level >= 0) label += "[" + v.levels[static_cast<std::size_t>(f.level)] + "]";
            }
            out.push_back({term, current, label.empty() ? "1" : label});
            return;
        }
        const auto& v = spec.variables[current[i].var];
        if (v.kind != Kind::categorical) {
            self(self, i + 1);
            return;
        }
        for (std::size_t l = 1; l < v.levels.size(); ++l) {
            current[i].level = static_cast<int>(l);
            self(self, i + 1);
        }
    };
    recurse(recurse, 0);
}

}  // namespace

std::string_view to_string(Role role) {
    switch (role) {
        case Role::outcome: return "outcome";
        case Role::treatment: return "treatment";
        case Role::mediator: return "mediator";
        case Role::covariate: return "covariate";
    }
    return "?";
}

std::string_view to_string(Kind kind) {
    switch (kind) {
        case Kind::binary: return "binary";
        case Kind::continuous: return "continuous";
        case Kind::categorical: return "categorical";
    }
    return "?";
}

// ---------------------------------------------------------------- Term

Term::Term(std::vector<std::string> factors) : factors_(std::move(factors)) {
    std::sort(factors_.begin(), factors_.end());
    if (std::adjacent_find(factors_.begin(), factors_.end()) != factors_.end())
        throw std::invalid_argument("term repeats a factor");
}

Term Term::parse(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) throw std::invalid_argument("empty term");
    if (t == "1") return Term{};
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = t.find(':', start);
        std::string part = trim(std::string_view(t).substr(start, pos - start));
        if (part.empty()) throw std::invalid_argument("malformed term '" + t + "'");
        parts.push_back(std::move(part));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return Term(std::move(parts));
}

bool Term::contains(std::string_view name) const {
    return std::binary_search(factors_.begin(), factors_.end(), name, std::less<>{});
}

bool Term::isSubsetOf(const Term& other) const {
    return std::includes(other.factors_.begin(), other.factors_.end(), factors_.begin(),
                         factors_.end());
}

std::string Term::label() const {
    if (factors_.empty()) return "1";
    std::string out;
    for (const auto& f : factors_) {
        if (!out.empty()) out += ':';
        out += f;
    }
    return out;
}

// ---------------------------------------------------------------- SystemSpec

const VariableSpec* SystemSpec::find(std::string_view name) const {
    for (const auto& v : variables)
        if (v.name == name) return &v;
    return nullptr;
}

const VariableSpec& SystemSpec::variable(std::string_view name) const {
    if (const auto* v = find(name)) return *v;
    throw std::invalid_argument("unknown variable '" + std::string(name) + "'");
}

const VariableSpec& SystemSpec::outcome() const {
    for (const auto& v : variables)
        if (v.role == Role::outcome) return v;
    throw std::invalid_argument("system has no outcome");
}

const VariableSpec& SystemSpec::treatment() const {
    for (const auto& v : variables)
        if (v.role == Role::treatment) return v;
    throw std::invalid_argument("system has no treatment");
}

int SystemSpec::mediatorCount() const {
    return static_cast<int>(std::count_if(variables.begin(), variables.end(),
                                          [](const auto& v) { return v.role == Role::mediator; }));
}

const VariableSpec& SystemSpec::mediator(int index) const {
    for (const auto& v : variables)
        if (v.role == Role::mediator && v.mediatorIndex == index) return v;
    throw std::invalid_argument("no mediator with index " + std::to_string(index));
}

std::vector<std::string> SystemSpec::covariates() const {
    std::vector<std::string> out;
    for (const auto& v : variables)
        if (v.role == Role::covariate) out.push_back(v.name);
    return out;
}

const Equation* SystemSpec::equation(std::string_view response) const {
    for (const auto& e : equations)
        if (e.response == response) return &e;
    return nullptr;
}

int SystemSpec::rank(std::string_view name) const {
    const auto& v = variable(name);
    const int k = mediatorCount();
    switch (v.role) {
        case Role::outcome: return 0;
        case Role::mediator: return v.mediatorIndex.value_or(0);
        case Role::treatment: return k + 1;
        case Role::covariate: return k + 2;
    }
    return k + 2;
}

double SystemSpec::parseValue(std::string_view name, std::string_view text) const {
    const auto& v = variable(name);
    const std::string t = trim(text);
    if (v.kind == Kind::categorical) {
        const auto it = std::find(v.levels.begin(), v.levels.end(), t);
        if (it == v.levels.end())
            throw std::invalid_argument("'" + t + "' is not a level of " + v.name);
        return static_cast<double>(it - v.levels.begin());
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw std::invalid_argument("'" + t + "' is not a number (variable " + v.name + ")");
    if (v.kind == Kind::binary && value != 0.0 && value != 1.0)
        throw std::invalid_argument("binary variable " + v.name + " takes values 0/1, got " + t);
    return value;
}

std::string SystemSpec::formatValue(std::string_view name, double value) const {
    const auto& v = variable(name);
    if (v.kind == Kind::categorical) {
        const auto idx = static_cast<std::size_t>(value);
        if (value < 0 || idx >= v.levels.size()) return "?";
        return v.levels[idx];
    }
    std::ostringstream os;
    os << value;
    return os.str();
}

// ---------------------------------------------------------------- validation

ValidationReport validate_system(const SystemSpec& spec) {
    ValidationReport report;
    auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    std::set<std::string> names;
    int outcomes = 0, treatments = 0;
    std::vector<int> mediatorIndices;
    for (const auto& v : spec.variables) {
        if (v.name.empty()) fail("role: variable with empty name");
        if (!names.insert(v.name).second) fail("role: duplicate variable '" + v.name + "'");
        if (v.name.find(':') != std::string::npos || v.name == "1")
            fail("role: variable name '" + v.name + "' is reserved in term syntax");
        if (v.role == Role::outcome) ++outcomes;
        if (v.role == Role::treatment) ++treatments;
        if (v.role == Role::mediator) {
            if (!v.mediatorIndex)
                fail("role: mediator '" + v.name + "' has no mediator index");
            else
                mediatorIndices.push_back(*v.mediatorIndex);
        } else if (v.mediatorIndex) {
            fail("role: non-mediator '" + v.name + "' carries a mediator index");
        }
        if ((v.role == Role::outcome || v.role == Role::mediator) && v.kind != Kind::binary)
            fail("role: '" + v.name + "' must be binary (outcome and mediators are 0/1)");
        if (v.kind == Kind::categorical && v.levels.size() < 2)
            fail("role: categorical '" + v.name + "' needs at least two levels");
        if (v.kind != Kind::categorical && !v.levels.empty())
            fail("role: only categorical variables declare levels ('" + v.name + "')");
    }
    if (outcomes != 1) fail("role: expected exactly one outcome, found " + std::to_string(outcomes));
    if (treatments != 1)
        fail("role: expected exactly one treatment, found " + std::to_string(treatments));
    std::sort(mediatorIndices.begin(), mediatorIndices.end());
    for (std::size_t i = 0; i < mediatorIndices.size(); ++i) {
        if (mediatorIndices[i] != static_cast<int>(i) + 1) {
            fail("role: mediator indices must be exactly 1..k without gaps or repeats");
            break;
        }
    }
    if (!report.ok()) return report;  // ranks below depend on a sane variable list

    std::set<std::string> responses;
    for (const auto& eq : spec.equations) {
        const auto* r = spec.find(eq.response);
        if (!r) {
            fail("role: equation for undeclared variable '" + eq.response + "'");
            continue;
        }
        if (!responses.insert(eq.response).second)
            fail("role: two equations for '" + eq.response + "'");
        if (r->role == Role::covariate || r->role == Role::treatment)
            fail("role: " + std::string(to_string(r->role)) + " '" + eq.response +
                 "' cannot be a response");
        const int responseRank = spec.rank(eq.response);
        std::set<Term> seen;
        for (const auto& term : eq.terms) {
            if (!seen.insert(term).second)
                fail("hierarchy: duplicate term " + term.label() + " in equation " + eq.response);
            for (const auto& f : term.factors()) {
                if (!spec.find(f)) {
                    fail("role: term " + term.label() + " of " + eq.response +
                         " references undeclared variable '" + f + "'");
                } else if (spec.rank(f) <= responseRank) {
                    fail("ordering: " + f + " cannot predict " + eq.response +
                         " (predictors must come later in the recursive ordering)");
                }
            }
        }
        // Every subset of each term, intercept included, must be present.
        for (const auto& term : eq.terms) {
            const auto& fs = term.factors();
            const std::size_t m = fs.size();
            for (std::size_t mask = 0; mask + 1 < (std::size_t{1} << m); ++mask) {
                std::vector<std::string> sub;
                for (std::size_t i = 0; i < m; ++i)
                    if (mask & (std::size_t{1} << i)) sub.push_back(fs[i]);
                Term lower(std::move(sub));
                if (!seen.count(lower))
                    fail("hierarchy: equation " + eq.response + " has " + term.label() +
                         " but lacks lower-order term " + lower.label());
            }
        }
    }
    for (const auto& v : spec.variables) {
        if ((v.role == Role::outcome || v.role == Role::mediator) && !responses.count(v.name))
            fail("role: no equation for " + std::string(to_string(v.role)) + " '" + v.name + "'");
    }
    return report;
}

// ---------------------------------------------------------------- JSON

SystemSpec system_from_json(const nlohmann::json& doc) {
    SystemSpec spec;
    for (const auto& jv : doc.at("variables")) {
        VariableSpec v;
        v.name = jv.at("name").get<std::string>();
        v.role = parse_role(jv.at("role").get<std::string>());
        v.kind = parse_kind(jv.value("kind", std::string("binary")));
        if (jv.contains("levels"))
            for (const auto& l : jv.at("levels"))
                v.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
        if (jv.contains("mediator_index")) v.mediatorIndex = jv.at("mediator_index").get<int>();
        spec.variables.push_back(std::move(v));
    }
    for (const auto& [response, terms] : doc.at("equations").items()) {
        Equation eq{response, {}};
        for (const auto& t : terms) eq.terms.push_back(Term::parse(t.get<std::string>()));
        spec.equations.push_back(std::move(eq));
    }
    // Deterministic order: Y, W1, ..., Wk regardless of JSON key order.
    const auto report = validate_system(spec);
    if (report.ok()) {
        std::stable_sort(spec.equations.begin(), spec.equations.end(),
                         [&](const Equation& a, const Equation& b) {
                             return spec.rank(a.response) < spec.rank(b.response);
                         });
    }
    return spec;
}

nlohmann::json to_json(const SystemSpec& spec) {
    nlohmann::json doc;
    doc["variables"] = nlohmann::json::array();
    for (const auto& v : spec.variables) {
        nlohmann::json jv{{"name", v.name},
                          {"role", std::string(to_string(v.role))},
                          {"kind", std::string(to_string(v.kind))}};
        if (!v.levels.empty()) jv["levels"] = v.levels;
        if (v.mediatorIndex) jv["mediator_index"] = *v.mediatorIndex;
        doc["variables"].push_back(std::move(jv));
    }
    doc["equations"] = nlohmann::json::object();
    for (const auto& eq : spec.equations) {
        auto& arr = doc["equations"][eq.response] = nlohmann::json::array();
        for (const auto& t : eq.terms) arr.push_back(t.label());
    }
    return doc;
}

SystemSpec load_system(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open model file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return system_from_json(doc);
}

// ---------------------------------------------------------------- layout

ParameterLayout::ParameterLayout(SystemSpec spec) : spec_(std::move(spec)) {
    const auto report = validate_system(spec_);
    if (!report.ok()) {
        std::string msg = "invalid system:";
        for (const auto& v : report.violations) msg += "\n  " + v;
        throw std::invalid_argument(msg);
    }
    std::stable_sort(spec_.equations.begin(), spec_.equations.end(),
                     [&](const Equation& a, const Equation& b) {
                         return spec_.rank(a.response) < spec_.rank(b.response);
                     });
    equationOfVar_.assign(spec_.variables.size(), std::nullopt);
    for (const auto& eq : spec_.equations) {
        EquationLayout el;
        el.response = eq.response;
        el.responseVar = variableIndex(eq.response);
        el.offset = size_;
        for (const auto& term : eq.terms) expand_columns(spec_, *this, term, el.columns);
        size_ += el.columns.size();
        equationOfVar_[el.responseVar] = equations_.size();
        equations_.push_back(std::move(el));
    }
}

std::size_t ParameterLayout::variableIndex(std::string_view name) const {
    for (std::size_t i = 0; i < spec_.variables.size(); ++i)
        if (spec_.variables[i].name == name) return i;
    throw std::invalid_argument("unknown variable '" + std::string(name) + "'");
}

const EquationLayout& ParameterLayout::equation(std::string_view response) const {
    return equations_[equationIndex(response)];
}

std::size_t ParameterLayout::equationIndex(std::string_view response) const {
    for (std::size_t i = 0; i < equations_.size(); ++i)
        if (equations_[i].response == response) return i;
    throw std::invalid_argument("no equation for '" + std::string(response) + "'");
}

std::optional<std::size_t> ParameterLayout::equationIndexFor(std::size_t responseVar) const {
    return equationOfVar_.at(responseVar);
}

std::optional<std::size_t> ParameterLayout::find(std::string_view response,
                                                 std::string_view label) const {
    const auto& eq = equation(response);
    for (std::size_t c = 0; c < eq.columns.size(); ++c)
        if (eq.columns[c].label == label) return eq.offset + c;
    // Accept a label spelled with another factor order.
    try {
        const Term wanted = Term::parse(label);
        std::optional<std::size_t> hit;
        for (std::size_t c = 0; c < eq.columns.size(); ++c) {
            if (eq.columns[c].term == wanted) {
                if (hit) return std::nullopt;  // ambiguous: categorical term has several columns
                hit = eq.offset + c;
            }
        }
        return hit;
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

std::string ParameterLayout::label(std::size_t coefficient) const {
    for (const auto& eq : equations_)
        if (coefficient < eq.offset + eq.columns.size())
            return eq.response + ": " + eq.columns[coefficient - eq.offset].label;
    throw std::out_of_range("coefficient index out of range");
}

LayoutPtr make_layout(SystemSpec spec) {
    return std::make_shared<const ParameterLayout>(std::move(spec));
}

// ---------------------------------------------------------------- ParameterSet

ParameterSet::ParameterSet(LayoutPtr layout)
    : layout_(std::move(layout)), values_(layout_->size(), 0.0) {}

ParameterSet::ParameterSet(LayoutPtr layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.size() != layout_->size())
        throw std::invalid_argument("parameter vector has " + std::to_string(values_.size()) +
                                    " entries, layout needs " + std::to_string(layout_->size()));
}

std::span<const double> ParameterSet::equationValues(std::size_t eq) const {
    const auto& el = layout_->equations()[eq];
    return std::span<const double>(values_).subspan(el.offset, el.columns.size());
}

double ParameterSet::get(std::string_view response, std::string_view label) const {
    const auto idx = layout_->find(response, label);
    if (!idx)
        throw std::invalid_argument("no coefficient '" + std::string(label) + "' in equation " +
                                    std::string(response));
    return values_[*idx];
}

void ParameterSet::set(std::string_view response, std::string_view label, double value) {
    const auto idx = layout_->find(response, label);
    if (!idx)
        throw std::invalid_argument("no coefficient '" + std::string(label) + "' in equation " +
                                    std::string(response));
    values_[*idx] = value;
}

// ---------------------------------------------------------------- masks

ZeroMask ZeroMask::build(const ParameterLayout& layout, const std::vector<ZeroTarget>& targets) {
    ZeroMask mask;
    for (const auto& [response, var] : targets) {
        const auto eqIdx = layout.equationIndex(response);
        if (!layout.spec().find(var))
            throw std::invalid_argument("cannot zero unknown variable '" + var + "'");
        const auto& eq = layout.equations()[eqIdx];
        for (std::size_t c = 0; c < eq.columns.size(); ++c) {
            if (!eq.columns[c].term.contains(var)) continue;
            mask.zeroed_.emplace(response, eq.columns[c].term);
            mask.columns_.push_back(eq.offset + c);
        }
    }
    std::sort(mask.columns_.begin(), mask.columns_.end());
    mask.columns_.erase(std::unique(mask.columns_.begin(), mask.columns_.end()),
                        mask.columns_.end());
    return mask;
}

ZeroMask& ZeroMask::merge(const ZeroMask& other) {
    zeroed_.insert(other.zeroed_.begin(), other.zeroed_.end());
    columns_.insert(columns_.end(), other.columns_.begin(), other.columns_.end());
    std::sort(columns_.begin(), columns_.end());
    columns_.erase(std::unique(columns_.begin(), columns_.end()), columns_.end());
    return *this;
}

ParameterSet ZeroMask::apply(const ParameterSet& params) const {
    ParameterSet out = params;
    auto v = out.values();
    for (const auto c : columns_) v[c] = 0.0;
    return out;
}

ParameterSet zero_out(const ParameterSet& params, const std::vector<ZeroTarget>& targets) {
    return ZeroMask::build(params.layout(), targets).apply(params);
}

std::vector<double> encode(const ParameterLayout& layout, const Assignment& assignment) {
    std::vector<double> values(layout.variableCount(), 0.0);
    for (const auto& [name, value] : assignment) values[layout.variableIndex(name)] = value;
    return values;
}

double linear_predictor(const ParameterSet& params, std::string_view response,
                        const Assignment& assignment) {
    const auto& layout = params.layout();
    const auto eq = layout.equationIndex(response);
    for (const auto& col : layout.equations()[eq].columns) {
        for (const auto& f : col.factors) {
            const auto& name = layout.spec().variables[f.var].name;
            if (!assignment.count(name))
                throw std::invalid_argument("missing value for predictor '" + name +
                                            "' of equation " + std::string(response));
        }
    }
    const auto values = encode(layout, assignment);
    return rhs<double>(params, eq, values);
}

}  // namespace pathlogit
