#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "r2dt/errors.hpp"
#include "r2dt/simulation.hpp"

using namespace r2dt;

namespace {

const DoseGrid& grid() {
    static const DoseGrid g = transform_doses(std::vector<double>{20, 30, 40, 50});
    return g;
}

const McmcConfig kFast{3000, 1000, 1};

Scenario scenario(int id) {
    for (const auto& s : reference_scenarios())
        if (s.id == id) return s;
    throw InvalidConfig("no scenario");
}

StudyConfig small_study(int reps, std::vector<int> ids, std::vector<std::string> designs) {
    StudyConfig cfg;
    cfg.grid = grid();
    cfg.mcmc = kFast;
    cfg.reps = reps;
    cfg.seed = 77;
    cfg.parallelism = 1;
    for (int id : ids) cfg.scenarios.push_back(scenario(id));
    for (const auto& d : designs) cfg.designs.push_back(reference_design(d));
    return cfg;
}

}  // namespace

TEST_SUITE("simulation") {
    TEST_CASE("outcome tables") {
        Scenario s{99, "degenerate", {0.0, 0.3, 0.7, 1.0}, {1.0, 1.0, 1.0, 1.0}};
        const auto t = generate_outcomes(s, 20, 45, 5);
        for (int r = 0; r < 20; ++r)
            for (int i = 0; i < 45; ++i) {
                CHECK(t.at(r, i, 0).yE == 0);
                CHECK(t.at(r, i, 3).yE == 1);
                for (std::size_t d = 0; d < 4; ++d) CHECK(t.at(r, i, d).yT == 1);
            }

        const auto s1 = scenario(1);
        const int reps = 400, maxN = 45;
        const auto a = generate_outcomes(s1, reps, maxN, 9);
        for (std::size_t d = 0; d < 4; ++d) {
            double mE = 0, mT = 0;
            for (int r = 0; r < reps; ++r)
                for (int i = 0; i < maxN; ++i) {
                    mE += a.at(r, i, d).yE;
                    mT += a.at(r, i, d).yT;
                }
            const double n = reps * maxN;
            mE /= n;
            mT /= n;
            const double p = s1.trueEff[d], q = s1.trueTox[d];
            CHECK(std::abs(mE - p) <= 3 * std::sqrt(p * (1 - p) / n) + 1e-12);
            CHECK(std::abs(mT - q) <= 3 * std::sqrt(q * (1 - q) / n) + 1e-12);
        }
        const auto b = generate_outcomes(s1, reps, maxN, 9);
        const auto c = generate_outcomes(s1, reps + 10, maxN, 9);
        for (int r = 0; r < reps; ++r)
            for (int i = 0; i < maxN; ++i)
                for (std::size_t d = 0; d < 4; ++d) {
                    CHECK(a.at(r, i, d) == b.at(r, i, d));
                    CHECK(a.at(r, i, d) == c.at(r, i, d));
                }
    }

    TEST_CASE("scenario and study validation") {
        CHECK_THROWS_AS(validate(Scenario{1, "x", {0.5, 0.5}, {0.1, 0.1, 0.1, 0.1}}, 4), InvalidConfig);
        CHECK_THROWS_AS(validate(Scenario{1, "x", {0.5, 0.5, 0.5, 1.2}, {0.1, 0.1, 0.1, 0.1}}, 4), InvalidConfig);
        auto cfg = small_study(0, {1}, {"R2DT1"});
        CHECK_THROWS_AS(validate(cfg), InvalidConfig);
        CHECK_THROWS_AS(reference_design("R2DT9"), InvalidConfig);
        CHECK(reference_scenarios().size() == 10);
        CHECK(reference_designs().size() >= 8);
    }

    TEST_CASE("one cohort then final selection") {
        auto d = reference_design("R2DT1");
        d.maxN = d.cohortSize;
        const auto t = generate_outcomes(scenario(1), 3, d.maxN, 1);
        for (int r = 0; r < 3; ++r) {
            const auto res = run_replicate(d, t, r, grid(), {}, kFast, {1, 1, r});
            REQUIRE(res.trajectory.size() == 1);
            CHECK(res.trajectory[0].doseIndex == d.startDoseIndex);
            CHECK(res.finalState.status != TrialStatus::Running);
            CHECK(res.patientsPerDose[d.startDoseIndex] == 3);
            CHECK(res.interimSelection.size() == 1);
            CHECK(res.interimSelection[0] == res.selected());
        }
    }

    TEST_CASE("near-certain toxicity stops the trial") {
        Scenario s{50, "toxic", {0.6, 0.6, 0.6, 0.6}, {0.99, 0.99, 0.99, 0.99}};
        const auto d = reference_design("R2DT1");
        const auto t = generate_outcomes(s, 10, d.maxN, 3);
        int stops = 0;
        for (int r = 0; r < 10; ++r) {
            const auto res = run_replicate(d, t, r, grid(), {}, kFast, {3, 50, r});
            stops += res.finalState.status == TrialStatus::StoppedNoDose;
            CHECK(res.finalState.patients() < d.maxN);
        }
        CHECK(stops >= 9);
    }

    TEST_CASE("slot-indexed outcomes and no-skip along trajectories") {
        const auto t = generate_outcomes(scenario(3), 6, 45, 4);
        for (const char* name : {"R2DT1", "EFFTOXU2", "R2DT3i", "R2DT4i"}) {
            const auto d = reference_design(name);
            for (int r = 0; r < 6; ++r) {
                const auto res = run_replicate(d, t, r, grid(), {}, kFast, {4, 3, r});
                std::optional<std::size_t> highest;
                int slot = 0;
                for (const auto& c : res.trajectory) {
                    CHECK(c.doseIndex <= (highest ? *highest + 1 : d.startDoseIndex));
                    highest = highest ? std::max(*highest, c.doseIndex) : c.doseIndex;
                    for (const auto& o : c.outcomes) CHECK(o == t.at(r, slot++, c.doseIndex));
                }
                CHECK(std::accumulate(res.patientsPerDose.begin(), res.patientsPerDose.end(), 0) ==
                      res.finalState.patients());
                // Replay
                const auto again = run_replicate(d, t, r, grid(), {}, kFast, {4, 3, r});
                CHECK(again.finalDecision == res.finalDecision);
                CHECK(again.selected() == res.selected());
            }
        }
    }

    TEST_CASE("common random numbers across designs") {
        const auto t = generate_outcomes(scenario(2), 5, 45, 8);
        for (int r = 0; r < 5; ++r) {
            const auto a = run_replicate(reference_design("R2DT1"), t, r, grid(), {}, kFast, {8, 2, r});
            const auto b = run_replicate(reference_design("EFFTOXU2"), t, r, grid(), {}, kFast, {8, 2, r});
            const std::size_t n = std::min(a.trajectory.size(), b.trajectory.size());
            for (std::size_t c = 0; c < n; ++c) {
                if (a.trajectory[c].doseIndex != b.trajectory[c].doseIndex) break;
                CHECK(a.trajectory[c].outcomes == b.trajectory[c].outcomes);
            }
        }
    }

    TEST_CASE("optimal dose under full knowledge") {
        const ConventionalThresholds th;
        CHECK(optimal_dose_oracle(scenario(1), default_r2dt_params(), th) == 3u);
        CHECK(optimal_dose_oracle(scenario(5), default_r2dt_params(), th) == 0u);
        CHECK_FALSE(optimal_dose_oracle(scenario(9), default_r2dt_params(), th).has_value());
    }

    TEST_CASE("operating characteristics accounting") {
        std::vector<ReplicateSummary> reps;
        reps.push_back({3u, false, {3, 3, 3, 36}, {}});
        reps.push_back({std::nullopt, true, {6, 3, 0, 0}, {}});
        reps.push_back({2u, false, {3, 6, 36, 0}, {}});
        reps.push_back({3u, false, {3, 3, 9, 30}, {}});
        const auto oc = operating_characteristics(reps, 4);
        CHECK(oc.reps == 4);
        CHECK(oc.selectionPercent[3] == doctest::Approx(50.0));
        CHECK(oc.selectionPercent[2] == doctest::Approx(25.0));
        CHECK(oc.noDoseSelectedPercent == doctest::Approx(25.0));
        double sum = oc.noDoseSelectedPercent;
        for (double v : oc.selectionPercent) sum += v;
        CHECK(sum == doctest::Approx(100.0));
        CHECK(oc.meanPatients[0] == doctest::Approx(3.75));

        const auto one = operating_characteristics({reps[0]}, 4);
        CHECK(one.selectionPercent[3] == doctest::Approx(100.0));
        CHECK(one.meanPatients[3] == doctest::Approx(36.0));
    }

    TEST_CASE("small study invariants and byte determinism") {
        auto cfg = small_study(6, {1, 9}, {"R2DT1", "EFFTOXU2"});
        const auto res = run_study(cfg);
        REQUIRE(res.cells.size() == 4);
        for (const auto& cell : res.cells) {
            double sum = cell.oc.noDoseSelectedPercent, pts = 0;
            for (double v : cell.oc.selectionPercent) sum += v;
            for (double v : cell.oc.meanPatients) pts += v;
            CHECK(std::abs(sum - 100.0) <= 0.1);
            CHECK(pts <= 45.0 + 1e-9);
            const bool anyStop = std::any_of(cell.stoppedEarly.begin(), cell.stoppedEarly.end(), [](bool b) { return b; });
            if (!anyStop) CHECK(pts == doctest::Approx(45.0));
            REQUIRE(cell.curve.sampleSizes.size() == 15);
            CHECK(cell.curve.sampleSizes.front() == 3);
            CHECK(cell.curve.sampleSizes.back() == 45);
            for (std::size_t n = 0; n < cell.curve.sampleSizes.size(); ++n) {
                double f = cell.curve.noDoseFraction[n];
                for (double v : cell.curve.fraction[n]) f += v;
                CHECK(f <= 1.0 + 1e-9);
            }
            // The curve's last point is the final selection.
            for (std::size_t d = 0; d < 4; ++d)
                CHECK(cell.curve.fraction.back()[d] * 100 == doctest::Approx(cell.oc.selectionPercent[d]));
        }
        std::ostringstream a1, a2, b1, b2;
        write_oc_csv(res, a1);
        write_curves_csv(res, b1);
        cfg.parallelism = 2;
        const auto again = run_study(cfg);
        write_oc_csv(again, a2);
        write_curves_csv(again, b2);
        CHECK(a1.str() == a2.str());
        CHECK(b1.str() == b2.str());
        CHECK(a1.str().rfind("scenario,design,dose,utilityAtTruth,selectionPct,meanPatients,ndsPct\n", 0) == 0);
        CHECK(b1.str().find("NDS") != std::string::npos);
    }
}
