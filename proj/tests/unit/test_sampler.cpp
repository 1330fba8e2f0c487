#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "r2dt/errors.hpp"
#include "r2dt/sampler.hpp"

using namespace r2dt;

namespace {

const DoseGrid& grid() {
    static const DoseGrid g = transform_doses(std::vector<double>{20, 30, 40, 50});
    return g;
}

// Long chain for the oracle comparisons: 40000 retained draws keep the
// Monte Carlo error of a tail probability well inside 0.02.
const McmcConfig kLong{42000, 2000, 7};

}  // namespace

TEST_SUITE("sampler") {
    TEST_CASE("same seed gives identical draws") {
        const auto data = oracle::posterior_fixtures()[0];
        const auto a = sample_posterior(data, {}, grid(), {6000, 2000, 99});
        const auto b = sample_posterior(data, {}, grid(), {6000, 2000, 99});
        REQUIRE(a.size() == 4000);
        CHECK(a.draws == b.draws);
        const auto c = sample_posterior(data, {}, grid(), {6000, 2000, 100});
        CHECK_FALSE(a.draws == c.draws);
    }

    TEST_CASE("no data recovers the prior") {
        const PriorSpec prior;
        const auto d = sample_posterior({}, prior, grid(), {42000, 2000, 3});
        const auto pr = prior.as_array();
        for (std::size_t i = 0; i < 5; ++i) {
            std::vector<double> v;
            for (const auto& th : d.draws) v.push_back(th.as_array()[i]);
            double m = 0;
            for (double x : v) m += x;
            m /= v.size();
            double s2 = 0;
            for (double x : v) s2 += (x - m) * (x - m);
            const double sd = std::sqrt(s2 / (v.size() - 1));
            // batch means for the effective sample size
            const std::size_t nb = 40, len = v.size() / nb;
            double bm2 = 0;
            for (std::size_t b = 0; b < nb; ++b) {
                double bm = 0;
                for (std::size_t j = 0; j < len; ++j) bm += v[b * len + j];
                bm = bm / len - m;
                bm2 += bm * bm;
            }
            const double mcse = std::sqrt(bm2 / (nb - 1) / nb);
            CHECK(std::abs(m - pr[i].mean) < 3 * mcse + 1e-12);
            CHECK(sd == doctest::Approx(pr[i].sd).epsilon(0.1));
        }
    }

    TEST_CASE("acceptance rates stay in the diagnostic band") {
        for (const auto& f : oracle::posterior_fixtures()) {
            const auto d = sample_posterior(f, {}, grid(), {});
            for (double r : d.coordinateAcceptance) {
                CHECK(r > 0.05);
                CHECK(r < 0.95);
            }
            CHECK(d.acceptanceRate > 0.1);
        }
    }

    TEST_CASE("functionals agree with tensor-grid quadrature") {
        const auto up = default_r2dt_params();
        const auto fixtures = oracle::posterior_fixtures();
        for (std::size_t f = 0; f < fixtures.size(); ++f) {
            CAPTURE(f);
            const oracle::Quadrature q(fixtures[f], {}, grid().transformed);
            const auto d = sample_posterior(fixtures[f], {}, grid(), kLong);
            for (std::size_t k = 0; k < 4; ++k) {
                CAPTURE(k);
                CHECK(std::abs(posterior_tail_probability(d, k, grid(), TailPredicate::efficacy_below(0.5)) -
                               q.prob_eff_below(k, 0.5)) <= 0.02);
                CHECK(std::abs(posterior_tail_probability(d, k, grid(), TailPredicate::toxicity_above(0.4)) -
                               q.prob_tox_above(k, 0.4)) <= 0.02);
                CHECK(std::abs(posterior_tail_probability(d, k, grid(), TailPredicate::utility_below(0.58, up)) -
                               q.prob_utility_below(k, 0.58, up)) <= 0.02);
                CHECK(std::abs(posterior_expected_utility(d, k, grid(), up) - q.expected_utility(k, up)) <= 0.01);
            }
        }
    }

    TEST_CASE("functionals on hand-built draws") {
        PosteriorDraws d;
        const ModelParams th{0.4, 0.8, -0.2, -1.5, 1.1};
        d.draws.assign(10, th);
        const auto up = default_r2dt_params();
        for (std::size_t k = 0; k < 4; ++k) {
            const double x = grid().transformed[k];
            CHECK(posterior_expected_utility(d, k, grid(), up) ==
                  doctest::Approx(joint_utility(prob_efficacy(th, x), prob_toxicity(th, x), up)));
            CHECK(posterior_tail_probability(d, k, grid(), TailPredicate::efficacy_below(1.0)) == 1.0);
            CHECK(posterior_tail_probability(d, k, grid(), TailPredicate::toxicity_above(1.0)) == 0.0);
        }
        CHECK_THROWS_AS(posterior_tail_probability(d, 0, grid(), TailPredicate::efficacy_below(1.5)), InvalidParams);
        CHECK_THROWS_AS(posterior_expected_utility(d, 4, grid(), up), InvalidParams);
    }

    TEST_CASE("config checks and csv export") {
        CHECK_THROWS_AS(sample_posterior({}, {}, grid(), {1000, 1000, 1}), InvalidConfig);
        CHECK_THROWS_AS(sample_posterior({}, {}, grid(), {2500, 2000, 1}), InvalidConfig);
        const auto d = sample_posterior({}, {}, grid(), {3000, 1000, 1});
        std::ostringstream os;
        write_draws_csv(d, os);
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);
        CHECK(line == "muE,betaE1,betaE2,muT,betaT");
        int rows = 0;
        while (std::getline(is, line)) ++rows;
        CHECK(rows == 2000);
    }
}
