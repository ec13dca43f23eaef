#include <doctest.h>

#include <algorithm>
#include <random>

#include "../fixtures.hpp"
#include "../oracle.hpp"
#include "pathlogit/model.hpp"

using namespace pathlogit;

namespace {

bool has_violation(const ValidationReport& r, const std::string& prefix) {
    return std::any_of(r.violations.begin(), r.violations.end(),
                       [&](const std::string& v) { return v.rfind(prefix, 0) == 0; });
}

const char* kChain = R"({
  "variables": [{"name":"Y","role":"outcome"},{"name":"W","role":"mediator","mediator_index":1},
                {"name":"X","role":"treatment"}],
  "equations": {"Y":["1","X","W","X:W"], "W":["1","X"]}
})";

}  // namespace

TEST_CASE("validate_system accepts a mediated chain") {
    CHECK(validate_system(fixtures::spec_from(kChain)).ok());
}

TEST_CASE("validate_system rejects the outcome predicting a mediator") {
    const auto spec = fixtures::spec_from(R"({
      "variables": [{"name":"Y","role":"outcome"},{"name":"W","role":"mediator","mediator_index":1},
                    {"name":"X","role":"treatment"}],
      "equations": {"Y":["1","X","W"], "W":["1","Y"]}
    })");
    const auto r = validate_system(spec);
    CHECK_FALSE(r.ok());
    CHECK(has_violation(r, "ordering:"));
}

TEST_CASE("validate_system rejects an interaction without its main effect") {
    const auto spec = fixtures::spec_from(R"({
      "variables": [{"name":"Y","role":"outcome"},{"name":"W","role":"mediator","mediator_index":1},
                    {"name":"X","role":"treatment"}],
      "equations": {"Y":["1","X","X:W"], "W":["1","X"]}
    })");
    const auto r = validate_system(spec);
    CHECK_FALSE(r.ok());
    CHECK(has_violation(r, "hierarchy:"));
}

TEST_CASE("validate_system enforces roles") {
    SUBCASE("two outcomes") {
        const auto r = validate_system(fixtures::spec_from(R"({
          "variables": [{"name":"Y","role":"outcome"},{"name":"Z","role":"outcome"},{"name":"X","role":"treatment"}],
          "equations": {"Y":["1","X"], "Z":["1","X"]}
        })"));
        CHECK(has_violation(r, "role:"));
    }
    SUBCASE("mediator index gap") {
        const auto r = validate_system(fixtures::spec_from(R"({
          "variables": [{"name":"Y","role":"outcome"},{"name":"W","role":"mediator","mediator_index":2},
                        {"name":"X","role":"treatment"}],
          "equations": {"Y":["1","X","W"], "W":["1","X"]}
        })"));
        CHECK(has_violation(r, "role:"));
    }
    SUBCASE("covariate as a response") {
        const auto r = validate_system(fixtures::spec_from(R"({
          "variables": [{"name":"Y","role":"outcome"},{"name":"X","role":"treatment"},{"name":"C","role":"covariate"}],
          "equations": {"Y":["1","X","C"], "C":["1","X"]}
        })"));
        CHECK(has_violation(r, "role:"));
    }
}

TEST_CASE("validate_system accepts the multi-mediator figure systems") {
    // Fully connected k mediators, the collider system and the inner/outer marginalization sources.
    for (int k = 1; k <= 6; ++k) CHECK(validate_system(oracle::full_system(k)).ok());
    CHECK(validate_system(fixtures::spec_from(R"({
      "variables": [{"name":"Y","role":"outcome"},{"name":"W1","role":"mediator","mediator_index":1},
                    {"name":"W2","role":"mediator","mediator_index":2},{"name":"W3","role":"mediator","mediator_index":3},
                    {"name":"X","role":"treatment"}],
      "equations": {"Y":["1","W1"], "W1":["1","W2","W3"], "W2":["1","X"], "W3":["1","X"]}
    })")).ok());
    CHECK(validate_system(fixtures::spec_from(R"({
      "variables": [{"name":"Y","role":"outcome"},{"name":"X","role":"treatment"}],
      "equations": {"Y":["1","X"]}
    })")).ok());
}

TEST_CASE("terms are canonical") {
    CHECK(Term::parse("X:W") == Term::parse("W:X"));
    CHECK(Term::parse("1").isIntercept());
    CHECK(Term::parse("X").isSubsetOf(Term::parse("W:X")));
    CHECK_THROWS(Term::parse("X::W"));
}

TEST_CASE("zero_out applies upward closure") {
    const auto layout = make_layout(fixtures::spec_from(kChain));
    ParameterSet p(layout, {-2.0, 1.0, 2.0, 0.5, -1.0, 0.7});

    const auto ie = zero_out(p, {{"Y", "X"}});
    CHECK(ie.get("Y", "X") == 0.0);
    CHECK(ie.get("Y", "X:W") == 0.0);
    CHECK(ie.get("Y", "1") == -2.0);
    CHECK(ie.get("Y", "W") == 2.0);
    CHECK(ie.get("W", "X") == 0.7);

    const auto de = zero_out(p, {{"Y", "W"}});
    CHECK(de.get("Y", "W") == 0.0);
    CHECK(de.get("Y", "X:W") == 0.0);
    CHECK(de.get("Y", "X") == 1.0);

    CHECK_THROWS(zero_out(p, {{"Y", "Q"}}));
    CHECK_THROWS(zero_out(p, {{"Q", "X"}}));
}

TEST_CASE("zero_out closure over a three-mediator interaction") {
    const auto spec = fixtures::spec_from(R"({
      "variables": [{"name":"Y","role":"outcome"},{"name":"W1","role":"mediator","mediator_index":1},
                    {"name":"W2","role":"mediator","mediator_index":2},{"name":"W3","role":"mediator","mediator_index":3},
                    {"name":"X","role":"treatment"}],
      "equations": {"Y":["1","X","W1","W2","W3","X:W2","W2:W3","X:W3","X:W2:W3"],
                    "W1":["1","X"], "W2":["1","X"], "W3":["1","X"]}
    })");
    const auto layout = make_layout(spec);
    ParameterSet p(layout);
    for (auto& v : p.values()) v = 1.0;
    const auto z = zero_out(p, {{"Y", "W2"}});
    for (const auto& col : layout->equation("Y").columns) {
        const double expected = col.term.contains("W2") ? 0.0 : 1.0;
        CHECK_MESSAGE(z.get("Y", col.label) == expected, col.label);
    }
}

TEST_CASE("zero_out is idempotent and commutes over disjoint targets") {
    std::mt19937_64 rng(7);
    const auto p = oracle::random_params(oracle::full_system(3, "binary", true), rng);
    const std::vector<ZeroTarget> a{{"Y", "W2"}}, b{{"W1", "X"}};
    const auto once = zero_out(p, a);
    const auto twice = zero_out(once, a);
    CHECK(std::equal(once.values().begin(), once.values().end(), twice.values().begin()));
    const auto ab = zero_out(zero_out(p, a), b);
    const auto ba = zero_out(zero_out(p, b), a);
    CHECK(std::equal(ab.values().begin(), ab.values().end(), ba.values().begin()));
}

TEST_CASE("linear_predictor") {
    const auto layout = make_layout(fixtures::spec_from(kChain));
    ParameterSet p(layout, {-2.0, 1.0, 2.0, 0.5, 0.0, 0.0});
    CHECK(linear_predictor(p, "Y", {{"X", 1.0}, {"W", 1.0}}) == doctest::Approx(1.5));
    CHECK(linear_predictor(ParameterSet(layout), "Y", {{"X", 3.3}, {"W", 1.0}}) == 0.0);
    CHECK_THROWS(linear_predictor(p, "Y", {{"X", 1.0}}));
}

TEST_CASE("linear_predictor is linear in the coefficients") {
    std::mt19937_64 rng(11);
    const auto spec = oracle::full_system(2, "continuous", true);
    const auto p = oracle::random_params(spec, rng);
    const auto q = oracle::random_params(spec, rng);
    ParameterSet mix(p.layoutPtr());
    for (std::size_t i = 0; i < mix.values().size(); ++i) mix.values()[i] = 2.0 * p.values()[i] - 0.5 * q.values()[i];
    const Assignment a{{"X", 0.7}, {"W1", 1.0}, {"W2", 0.0}};
    CHECK(linear_predictor(mix, "Y", a) ==
          doctest::Approx(2.0 * linear_predictor(p, "Y", a) - 0.5 * linear_predictor(q, "Y", a)).epsilon(1e-12));
}

TEST_CASE("linear_predictor on the published outcome equation uses reference dummies") {
    const auto spec = load_system(fixtures::table2_model());
    ParameterSet p(make_layout(spec));
    p.set("Y", "1", -1.6186);
    p.set("Y", "X[2]", 1.9345);
    p.set("Y", "X[3]", 1.1329);
    const Assignment a{{"X", spec.parseValue("X", "2")}, {"C", 0.0}, {"W", 0.0}};
    CHECK(linear_predictor(p, "Y", a) == doctest::Approx(0.3159).epsilon(1e-9));
}

TEST_CASE("system JSON round trip") {
    const auto spec = load_system(fixtures::table2_model());
    const auto again = system_from_json(to_json(spec));
    CHECK(to_json(again) == to_json(spec));
    const auto layout = make_layout(spec);
    CHECK(layout->size() == 11);
    CHECK(layout->label(0) == "Y: 1");
    CHECK(layout->find("Y", "X[2]:W").has_value());
}
