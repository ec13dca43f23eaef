#include <doctest.h>

#include <cmath>
#include <random>

#include "../fixtures.hpp"
#include "../oracle.hpp"
#include "../published.hpp"
#include "pathlogit/effects_single.hpp"

using namespace pathlogit;

namespace {

ParameterSet chain_params(double b0, double bx, double bw, double bxw, double g0, double gx) {
    ParameterSet p(make_layout(fixtures::single_mediator()));
    p.set("Y", "1", b0);
    p.set("Y", "X", bx);
    p.set("Y", "W", bw);
    p.set("Y", "X:W", bxw);
    p.set("W", "1", g0);
    p.set("W", "X", gx);
    return p;
}

ParameterSet random_chain(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    return chain_params(u(rng), u(rng), u(rng), u(rng), u(rng), u(rng));
}

int sign(double v) { return (v > 0) - (v < 0); }

double fd_marginal(const ParameterSet& p, double x) {
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    return (oracle::marginal_logit(p, x + h) - oracle::marginal_logit(p, x - h)) / (2 * h);
}

Assignment c_is(double c) { return {{"C", c}}; }

}  // namespace

TEST_CASE("g_y matches the enumerated conditional law of the mediator") {
    const auto fitted = fixtures::table1_fit();
    const auto& p = fitted.params;
    for (double x : {0.0, 1.0, 2.0})
        for (double c : {0.0, 1.0})
            for (int y : {0, 1}) {
                auto given = oracle::base(p.spec(), x, c_is(c));
                given["Y"] = y;
                const double expected = oracle::logit_of(oracle::conditional(p, "W", given));
                CHECK(g_y(p, y, x, c_is(c)) == doctest::Approx(expected).epsilon(1e-10));
            }
}

TEST_CASE("g_y special cases") {
    const auto p = chain_params(-0.3, 0.8, 0.0, 0.0, 0.4, -1.1);
    CHECK(g_y(p, 1, 0.7) == doctest::Approx(0.4 - 1.1 * 0.7));
    CHECK(g_y(p, 0, 0.7) == doctest::Approx(0.4 - 1.1 * 0.7));
    const auto q = chain_params(-0.3, 0.8, 1.3, -0.6, 0.4, -1.1);
    CHECK(g_y(q, 1, 0.7) - g_y(q, 0, 0.7) == doctest::Approx(1.3 - 0.6 * 0.7));
}

TEST_CASE("marginal_logit matches enumeration") {
    const auto fitted = fixtures::table1_fit();
    for (double x : {0.0, 1.0, 2.0})
        for (double c : {0.0, 1.0})
            CHECK(marginal_logit(fitted.params, x, c_is(c)) ==
                  doctest::Approx(oracle::marginal_logit(fitted.params, x, c_is(c))).epsilon(1e-10));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_chain(rng);
        const double x = std::uniform_real_distribution<double>(-2, 2)(rng);
        CHECK(std::abs(marginal_logit(p, x) - oracle::marginal_logit(p, x)) < 1e-10);
    }
    const auto flat = chain_params(-0.3, 0.8, 0.0, 0.0, 0.4, -1.1);
    CHECK(marginal_logit(flat, 1.5) == doctest::Approx(-0.3 + 0.8 * 1.5));
    CHECK(std::abs(marginal_logit(fitted.params, 1.0, c_is(0)) - marginal_logit(fitted.params, 0.0, c_is(0)) - 1.822) <
          1.5e-3);
}

TEST_CASE("deltas") {
    const auto zero = chain_params(-0.3, 0.8, 0.0, 0.0, 0.4, -1.1);
    const auto d0 = deltas(zero, 0.5);
    CHECK(d0.y == 0.0);
    CHECK(d0.w == 0.0);
    const auto d = deltas(chain_params(0.0, 0.0, 2.0, 0.0, 0.3, 0.5), 1.0);
    CHECK(d.y == doctest::Approx(oracle::sigmoid(2.0) - 0.5).epsilon(1e-12));
    CHECK(d.y == doctest::Approx(0.3808).epsilon(1e-4));

    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_chain(rng);
        const double x = std::uniform_real_distribution<double>(-2, 2)(rng);
        const auto dd = deltas(p, x);
        CHECK(std::abs(dd.y) <= 1.0);
        CHECK(std::abs(dd.w) <= 1.0);
        CHECK(sign(dd.y) == sign(dd.w));
        // Cell identity: both deltas share the sign of p00 p11 - p01 p10.
        auto cell = [&](double w, double y) {
            auto a = oracle::base(p.spec(), x);
            a["W"] = w;
            a["Y"] = y;
            return oracle::joint(p, a);
        };
        const double cross = cell(0, 0) * cell(1, 1) - cell(0, 1) * cell(1, 0);
        CHECK(sign(dd.w) == sign(cross));
        CHECK(sign(dd.wStar) == sign(p.get("Y", "W")));
    }
}

TEST_CASE("Table 3 estimates on the log-odds scale") {
    const auto fitted = fixtures::table1_fit();
    const auto& spec = fitted.params.spec();
    for (const auto& row : published::table3()) {
        const double x1 = spec.parseValue("X", row.contrast.substr(1, 1));
        const double c = row.covariates == "C=1" ? 1.0 : 0.0;
        const auto d = decompose_logodds(fitted.params, EffectRequest::contrast(x1, 0.0, c_is(c)));
        const double v = row.effect == "TE" ? d.total : row.effect == "DE" ? d.direct : row.effect == "IE" ? d.indirect : d.residual;
        CHECK_MESSAGE(std::abs(v - row.est) < 1.5e-3, row.effect, row.contrast, " ", row.covariates);
    }
}

TEST_CASE("Table 5 estimates on the probability scale") {
    const auto fitted = fixtures::table1_fit();
    const auto& spec = fitted.params.spec();
    for (const auto& row : published::table5()) {
        const double x1 = spec.parseValue("X", row.contrast.substr(1, 1));
        const double c = row.covariates == "C=1" ? 1.0 : 0.0;
        const auto d = decompose_probability(fitted.params, EffectRequest::contrast(x1, 0.0, c_is(c), Scale::probability));
        const double v = row.effect == "TPE" ? d.total : row.effect == "DPE" ? d.direct : row.effect == "IPE" ? d.indirect : d.residual;
        CHECK_MESSAGE(std::abs(v - row.est) < 1.5e-3, row.effect, row.contrast, " ", row.covariates);
    }
}

TEST_CASE("discrete total effect equals the enumerated log cross-product ratio") {
    const auto fitted = fixtures::table1_fit();
    for (double x1 : {1.0, 2.0})
        for (double c : {0.0, 1.0}) {
            const auto d = decompose_logodds(fitted.params, EffectRequest::contrast(x1, 0.0, c_is(c)));
            CHECK(d.total == doctest::Approx(oracle::log_cpr(fitted.params, x1, 0.0, c_is(c))).epsilon(1e-10));
        }
}

TEST_CASE("structural cases of the decomposition") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const double b0 = u(rng), bx = u(rng), bw = u(rng), bxw = u(rng), g0 = u(rng), gx = u(rng);
        const double x = u(rng);
        for (const auto& req : {EffectRequest::derivative(x), EffectRequest::contrast(x + 0.7, x)}) {
            const auto caseI = decompose_logodds(chain_params(b0, 0.0, bw, 0.0, g0, gx), req);
            CHECK(caseI.direct == 0.0);
            CHECK(std::abs(caseI.residual) < 1e-12);

            const double width = req.mode == EffectMode::derivative ? 1.0 : 0.7;
            const auto caseII = decompose_logodds(chain_params(b0, bx, 0.0, 0.0, g0, gx), req);
            CHECK(caseII.total == doctest::Approx(bx * width).epsilon(1e-12));
            CHECK(caseII.direct == doctest::Approx(bx * width).epsilon(1e-12));
            CHECK(caseII.indirect == 0.0);
            CHECK(std::abs(caseII.residual) < 1e-12);
        }
        const auto caseIII = decompose_logodds(chain_params(b0, bx, bw, 0.0, g0, 0.0), EffectRequest::derivative(x));
        CHECK(std::abs(caseIII.total) <= std::abs(bx) + 1e-12);

        const double bxwSame = sign(bx) * std::abs(bxw);
        const auto caseIV = decompose_logodds(chain_params(b0, bx, bw, bxwSame, g0, 0.0), EffectRequest::derivative(x));
        CHECK(sign(caseIV.total) == sign(bx));

        const auto general = decompose_logodds(chain_params(b0, bx, bw, bxw, g0, gx), EffectRequest::derivative(x));
        CHECK(sign(general.indirect) == sign(gx * bw));
    }
}

TEST_CASE("continuous total effect matches a finite difference of the marginal logit") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 300; ++i) {
        const auto p = random_chain(rng);
        const double x = std::uniform_real_distribution<double>(-3, 3)(rng);
        CHECK(std::abs(total_effect_derivative(p, x) - fd_marginal(p, x)) < 1e-6);
    }
}

TEST_CASE("additivity over random draws on both scales and in both modes") {
    std::mt19937_64 rng(29);
    const auto spec = fixtures::single_mediator("continuous", true);
    for (int i = 0; i < 1000; ++i) {
        const auto p = oracle::random_params(spec, rng, 2.0);
        std::uniform_real_distribution<double> u(-2, 2);
        const double x = u(rng);
        const Assignment c{{"C", u(rng)}};
        for (auto scale : {Scale::logOdds, Scale::probability})
            for (const auto& req : {EffectRequest::derivative(x, c, scale), EffectRequest::contrast(x + 1.0, x, c, scale)}) {
                const auto d = decompose_single(p, req);
                CHECK(std::abs(d.total - d.direct - d.indirect - d.residual) < 1e-10);
            }
    }
}

TEST_CASE("probability-scale closed forms") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_chain(rng);
        const double x = std::uniform_real_distribution<double>(-2, 2)(rng);
        const auto lo = decompose_logodds(p, EffectRequest::derivative(x));
        const auto pr = decompose_probability(p, EffectRequest::derivative(x, {}, Scale::probability));
        const double q = oracle::sigmoid(oracle::marginal_logit(p, x));
        CHECK(pr.total == doctest::Approx(q * (1 - q) * lo.total).epsilon(1e-10));
        const double qd = oracle::sigmoid(p.get("Y", "1") + p.get("Y", "X") * x);
        CHECK(pr.direct == doctest::Approx(qd * (1 - qd) * p.get("Y", "X")).epsilon(1e-10));
        const double qi = oracle::sigmoid(oracle::marginal_logit(zero_out(p, {{"Y", "X"}}), x));
        CHECK(pr.indirect == doctest::Approx(qi * (1 - qi) * lo.indirect).epsilon(1e-10));

        const auto ct = decompose_probability(p, EffectRequest::contrast(x + 1, x, {}, Scale::probability));
        CHECK(ct.total == doctest::Approx(oracle::sigmoid(oracle::marginal_logit(p, x + 1)) -
                                          oracle::sigmoid(oracle::marginal_logit(p, x))).epsilon(1e-10));
    }
    const auto flat = chain_params(-0.4, 1.1, 0.0, 0.0, 0.2, 0.9);
    const auto d = decompose_probability(flat, EffectRequest::contrast(1.0, 0.0, {}, Scale::probability));
    CHECK(d.total == doctest::Approx(oracle::sigmoid(0.7) - oracle::sigmoid(-0.4)));
    CHECK(d.direct == doctest::Approx(d.total));
    CHECK(d.indirect == 0.0);
    CHECK(std::abs(d.residual) < 1e-15);
}

TEST_CASE("request validation") {
    const auto fitted = fixtures::table1_fit();
    CHECK_THROWS(decompose_logodds(fitted.params, EffectRequest::derivative(1.0, c_is(0))));
    CHECK_THROWS(decompose_logodds(fitted.params, EffectRequest::contrast(1.0, 1.0, c_is(0))));
    CHECK_THROWS(decompose_logodds(fitted.params, EffectRequest::contrast(5.0, 0.0, c_is(0))));
}

TEST_CASE("average probability effects") {
    const auto p = chain_params(-1.0, 0.6, 1.5, -0.4, -0.5, 0.8);
    SUBCASE("one shared treatment value") {
        Dataset data({"X"});
        const double x[1] = {0.3};
        for (int i = 0; i < 4; ++i) data.addRow(x);
        const auto a = average_probability_effects(p, data);
        const auto d = decompose_probability(p, EffectRequest::derivative(0.3, {}, Scale::probability));
        CHECK(a.total == doctest::Approx(d.total).epsilon(1e-14));
        CHECK(a.direct == doctest::Approx(d.direct).epsilon(1e-14));
        CHECK(a.indirect == doctest::Approx(d.indirect).epsilon(1e-14));
    }
    SUBCASE("two units against enumeration") {
        Dataset data({"X"});
        const double x0[1] = {-0.8}, x1[1] = {1.4};
        data.addRow(x0);
        data.addRow(x1);
        auto tpe = [&](double x) {
            const double q = oracle::sigmoid(oracle::marginal_logit(p, x));
            return q * (1 - q) * fd_marginal(p, x);
        };
        CHECK(average_probability_effects(p, data).total == doctest::Approx(0.5 * (tpe(-0.8) + tpe(1.4))).epsilon(1e-6));
    }
    SUBCASE("empty data") {
        CHECK_THROWS(average_probability_effects(p, Dataset({"X"})));
    }
}

TEST_CASE("decomposition record") {
    const auto fitted = fixtures::table1_fit();
    const auto d = decompose_logodds(fitted.params, EffectRequest::contrast(1.0, 0.0, c_is(0)));
    CHECK(d.ratioCaveat());
    CHECK(d.mediatedRatio() == doctest::Approx(d.indirect / d.total));
    const auto j = to_json(d, fitted.params.spec());
    CHECK(j.at("contrast") == "{2,1}");
    CHECK(j.at("TE").get<double>() == d.total);
    CHECK(j.at("IE").get<double>() == d.indirect);
    CHECK(j.at("ratio_caveat").get<bool>());
    const auto clean = decompose_logodds(chain_params(0.1, 0.0, 1.0, 0.0, 0.2, 0.7), EffectRequest::derivative(0.0));
    CHECK_FALSE(clean.ratioCaveat());
}
