#pragma once

// Variables, recursive logistic systems, coefficient storage and zero masks.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pathlogit/numeric.hpp"

namespace pathlogit {

enum class Role { outcome, treatment, mediator, covariate };
enum class Kind { binary, continuous, categorical };

std::string_view to_string(Role role);
std::string_view to_string(Kind kind);

struct VariableSpec {
    std::string name;
    Role role = Role::covariate;
    Kind kind = Kind::binary;
    std::vector<std::string> levels;   // categorical only, first entry is the reference
    std::optional<int> mediatorIndex;  // 1 is the mediator adjacent to the outcome
};

/// A model term: a set of factor names. The empty set is the intercept.
/// Factors are kept sorted so that "X:W" and "W:X" compare equal.
class Term {
public:
    Term() = default;
    explicit Term(std::vector<std::string> factors);

    /// Parses "1", "X" or "X:W".
    static Term parse(std::string_view text);

    const std::vector<std::string>& factors() const { return factors_; }
    bool isIntercept() const { return factors_.empty(); }
    std::size_t order() const { return factors_.size(); }
    bool contains(std::string_view name) const;
    bool isSubsetOf(const Term& other) const;
    std::string label() const;

    auto operator<=>(const Term&) const = default;

private:
    std::vector<std::string> factors_;
};

struct Equation {
    std::string response;
    std::vector<Term> terms;
};

/// Variables plus one logistic equation per endogenous variable. Ordering of
/// the system is (Y, W1, ..., Wk, X, C...): each equation may only use
/// predictors that come strictly later.
class SystemSpec {
public:
    std::vector<VariableSpec> variables;
    std::vector<Equation> equations;

    const VariableSpec* find(std::string_view name) const;
    const VariableSpec& variable(std::string_view name) const;
    const VariableSpec& outcome() const;
    const VariableSpec& treatment() const;
    int mediatorCount() const;
    const VariableSpec& mediator(int index) const;
    std::vector<std::string> covariates() const;
    const Equation* equation(std::string_view response) const;

    /// Position in the recursive ordering; covariates share the last rank.
    int rank(std::string_view name) const;

    /// Parses a user-facing value: a level label for categorical variables,
    /// a number otherwise. Categorical values are encoded as level indices.
    double parseValue(std::string_view name, std::string_view text) const;
    std::string formatValue(std::string_view name, double value) const;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_system(const SystemSpec& spec);

SystemSpec system_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SystemSpec& spec);
SystemSpec load_system(const std::filesystem::path& path);

/// One factor of a design column. A non-negative level means the factor is
/// the dummy indicator of that level; otherwise the raw value is used.
struct Factor {
    std::size_t var = 0;
    int level = -1;
};

struct Column {
    Term term;
    std::vector<Factor> factors;
    std::string label;  // e.g. "X[2]:W"
};

struct EquationLayout {
    std::string response;
    std::size_t responseVar = 0;
    std::size_t offset = 0;  // position of the first coefficient in the stack
    std::vector<Column> columns;
};

/// Flattened coefficient layout of a validated system. Equations appear in
/// recursive order (Y first, then W1..Wk).
class ParameterLayout {
public:
    explicit ParameterLayout(SystemSpec spec);

    const SystemSpec& spec() const { return spec_; }
    std::size_t size() const { return size_; }
    std::size_t variableCount() const { return spec_.variables.size(); }
    std::size_t variableIndex(std::string_view name) const;

    const std::vector<EquationLayout>& equations() const { return equations_; }
    const EquationLayout& equation(std::string_view response) const;
    std::size_t equationIndex(std::string_view response) const;
    std::optional<std::size_t> equationIndexFor(std::size_t responseVar) const;

    std::optional<std::size_t> find(std::string_view response, std::string_view label) const;
    std::string label(std::size_t coefficient) const;  // "Y: X[2]:W"

private:
    SystemSpec spec_;
    std::vector<EquationLayout> equations_;
    std::vector<std::optional<std::size_t>> equationOfVar_;
    std::size_t size_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParameterLayout>;

LayoutPtr make_layout(SystemSpec spec);

/// Coefficient values over a layout.
class ParameterSet {
public:
    explicit ParameterSet(LayoutPtr layout);
    ParameterSet(LayoutPtr layout, std::vector<double> values);

    const ParameterLayout& layout() const { return *layout_; }
    const LayoutPtr& layoutPtr() const { return layout_; }
    const SystemSpec& spec() const { return layout_->spec(); }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::span<const double> equationValues(std::size_t eq) const;

    double get(std::string_view response, std::string_view label) const;
    void set(std::string_view response, std::string_view label, double value);

private:
    LayoutPtr layout_;
    std::vector<double> values_;
};

using Assignment = std::map<std::string, double, std::less<>>;

/// (response, variable): zero every term of that equation containing the variable.
using ZeroTarget = std::pair<std::string, std::string>;

/// Set of zeroed (response, term) pairs, closed upward over interactions.
class ZeroMask {
public:
    ZeroMask() = default;
    static ZeroMask build(const ParameterLayout& layout, const std::vector<ZeroTarget>& targets);

    const std::set<std::pair<std::string, Term>>& zeroed() const { return zeroed_; }
    bool empty() const { return zeroed_.empty(); }
    ZeroMask& merge(const ZeroMask& other);
    ParameterSet apply(const ParameterSet& params) const;

private:
    std::set<std::pair<std::string, Term>> zeroed_;
    std::vector<std::size_t> columns_;
};

ParameterSet zero_out(const ParameterSet& params, const std::vector<ZeroTarget>& targets);

double linear_predictor(const ParameterSet& params, std::string_view response,
                        const Assignment& assignment);

/// Dense variable vector (indexed like the layout) from a named assignment.
/// Unassigned variables are set to 0 (reference level).
std::vector<double> encode(const ParameterLayout& layout, const Assignment& assignment);

template <class T>
T factor_value(const Factor& f, std::span<const T> values) {
    if (f.level >= 0) return T(primal(values[f.var]) == f.level ? 1.0 : 0.0);
    return values[f.var];
}

/// Linear predictor of equation `eq` at a dense variable vector.
template <class T>
T rhs(const ParameterSet& params, std::size_t eq, std::span<const T> values) {
    const auto& layout = params.layout().equations()[eq];
    const auto coef = params.equationValues(eq);
    T total(0.0);
    for (std::size_t c = 0; c < layout.columns.size(); ++c) {
        if (coef[c] == 0.0) continue;
        T prod(coef[c]);
        for (const auto& f : layout.columns[c].factors) prod *= factor_value<T>(f, values);
        total += prod;
    }
    return total;
}

}  // namespace pathlogit
