import math

import pytest

import r2dt

EFFTOXU = {
    "kE": 0.25, "kT": 0.15,
    "efficacy": {"reference": 0.5, "lossAversion": 1, "gainExponent": 1, "lossExponent": 1},
    "toxicity": {"reference": 0.35, "lossAversion": 1, "gainExponent": 1, "lossExponent": 1},
}


def fast_config(reps=4):
    cfg = r2dt.default_config()
    cfg["mcmc"] = {"chainLength": 3000, "burnIn": 1000}
    return cfg


def test_utility_values():
    assert abs(r2dt.utility(0.85, 0.15)["utility"] - 0.88) <= 0.005
    assert abs(r2dt.utility(0.5, 0.35)["utility"] - 0.58) <= 0.005
    assert abs(r2dt.utility(0.85, 0.15, "efftoxu")["utility"] - 0.77) <= 0.005
    u = r2dt.utility(0.6, 0.3, EFFTOXU)
    e, t = 0.6, 0.3
    four = e * (1 - t) + 0.25 * e * t + 0.15 * (1 - e) * (1 - t)
    assert u["utility"] == pytest.approx(four, abs=1e-12)
    assert u["warnings"]


def test_utility_errors():
    bad = dict(EFFTOXU, kE=1.5)
    with pytest.raises(r2dt.InvalidParams):
        r2dt.utility(0.5, 0.5, bad)
    with pytest.raises(r2dt.Error):
        r2dt.utility(0.5, 0.5, "no-such-preset")


def test_contour_and_transform():
    level = r2dt.utility(0.5, 0.35)["utility"]
    pts = r2dt.contour(level)
    assert pts
    for e, t in pts[::20]:
        assert r2dt.utility(e, t)["utility"] == pytest.approx(level, abs=1e-6)
    g = r2dt.dose_transform([10, 20, 40, 80])
    assert sum(g["x"]) == pytest.approx(0.0, abs=1e-12)
    assert g["x"][0] == pytest.approx(-g["x"][3])


def test_simulated_trial_is_reproducible():
    a = r2dt.simulate_trial("R2DT1", 3, replicate=0, seed=5)
    b = r2dt.simulate_trial("R2DT1", 3, replicate=0, seed=5)
    assert a == b
    doses = [c["doseIndex"] for c in a["trajectory"]]
    assert doses[0] == 0
    high = 0
    for d in doses:
        assert d <= high + 1
        high = max(high, d)
    assert sum(a["patientsPerDose"]) == 3 * len(doses)


def test_small_study():
    s = r2dt.run_study(fast_config(), scenarios="1", designs=["R2DT1"], reps=4, seed=3, threads=1)
    (cell,) = s["cells"]
    oc = cell["oc"]
    assert cell["design"] == "R2DT1"
    assert sum(oc["selectionPercent"]) + oc["noDoseSelectedPercent"] == pytest.approx(100.0)
    assert cell["optimalDoseIndex"] == 3
    with pytest.raises(r2dt.InvalidConfig):
        r2dt.run_study(fast_config(), designs=["NOPE"], reps=1)


def _bisect(f, lo, hi, target, increasing):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (f(mid) < target) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _answer(q, truth):
    kind = q["kind"]
    if kind == "Reference":
        side = "efficacy" if q["attribute"] == "Efficacy" else "toxicity"
        return truth[side]["reference"]
    if kind == "StoppingToxicity":
        return 0.35
    if kind == "Lottery":
        lot = q["lottery"]
        key = "efficacyUtility" if lot["attribute"] == "Efficacy" else "toxicityUtility"

        def mu(p):
            return r2dt.utility(p, p, truth)[key]

        target = lot["mixing"] * mu(lot["x1"]) + (1 - lot["mixing"]) * mu(lot["x3"])
        lo, hi = sorted((lot["x1"], lot["x3"]))
        return _bisect(mu, lo, hi, target, lot["attribute"] == "Efficacy")
    target = r2dt.utility(q["x1"], q["y1"], truth)["utility"]
    return _bisect(lambda y: r2dt.utility(q["x2"], y, truth)["utility"], 0.0, 1.0, target, False)


def test_elicitation_recovers_risk_neutral_truth():
    s = r2dt.ElicitationSession()
    for _ in range(40):
        q = s.next_question()
        if q is None:
            break
        s.answer(q["phase"], q["index"], _answer(q, EFFTOXU))
    assert s.phase == "Done" and s.complete
    got = s.params()["utility"]
    assert got["kE"] == pytest.approx(0.25, abs=1e-6)
    assert got["kT"] == pytest.approx(0.15, abs=1e-6)
    for side in ("efficacy", "toxicity"):
        for k in ("gainExponent", "lossExponent", "lossAversion"):
            assert got[side][k] == pytest.approx(1.0, abs=1e-5)
    assert all(r["pass"] for r in s.params()["consistency"])
    with pytest.raises(r2dt.OutOfOrder):
        s.answer("RefE", 0, 0.5)
    s.reopen("JointWeights")
    assert s.phase == "JointWeights"


def test_service_round_trip(tmp_path):
    svc = r2dt.Service(tmp_path)
    assert svc.request("GET", "/health") == (200, {"status": "ok"})
    status, body = svc.request("POST", "/trials", {"design": "R2DT1", "seed": 4,
                                                   "mcmc": {"chainLength": 3000, "burnIn": 1000}})
    assert status == 201
    tid = body["id"]
    cohort = {"doseIndex": 0, "outcomes": [{"yE": 1, "yT": 0}] * 3}
    status, body = svc.request("POST", f"/trials/{tid}/cohorts", cohort)
    assert status == 200
    assert body["recommendation"]["doseIndex"] <= 1
    status, _ = svc.request("POST", f"/trials/{tid}/cohorts", {"doseIndex": 0, "outcomes": []})
    assert status in (409, 422)
    status, body = svc.request("POST", "/utility/evaluate", {"piE": 0.85, "piT": 0.15})
    assert status == 200 and math.isclose(body["utility"], 0.88, abs_tol=0.005)
    assert svc.request("GET", "/nowhere")[0] == 404
