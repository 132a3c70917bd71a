"""Acceptance gate: eleven release criteria, one PASS/FAIL line each.

Run with plain ``pytest tests/test_acceptance.py``; the verdict lines are
printed through pytest's capture so they always appear on the terminal.
"""

import random

import numpy as np
import pytest
from click.testing import CliRunner

from negosim.cli import main as cli_main
from negosim.coordination import (
    SubBuyerResult,
    coordinate_adapted,
    coordinate_desperate,
    coordinate_patient,
)
from negosim.domain import OfferVector, enumerate_offers, total_profit
from negosim.harness import bundled_scenario, compare_prediction, run_batch
from negosim.prediction import (
    NeuralPredictor,
    ObservationSeries,
    estimate_crossing,
    fit_regression,
    nn_train,
    select_model,
)
from negosim.protocol import Accept, NegotiationState, Offer, SessionOutcome, Withdraw, respond
from negosim.registry import DiscoveryQuery, ServiceRegistry
from negosim.tactics import resource_alpha, time_alpha

from conftest import random_offer, random_profile
from test_registry import record as registry_record


@pytest.fixture
def verdict(capsys, request):
    """Print one PASS/FAIL line per criterion, bypassing output capture."""
    printed = []

    def _report(number, title, ok):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
        with capsys.disabled():
            print(line)
        printed.append(ok)
        assert ok, line

    yield _report


def test_criterion_01_rating_table_fidelity(aircraft_scenario, verdict):
    ok = True
    for spec in aircraft_scenario.agents:
        profile = spec.profile
        best = OfferVector({i.name: i.max_rated_label for i in profile.issues})
        worst = OfferVector({i.name: i.zero_rated_labels[0] for i in profile.issues})
        ok &= total_profit(profile, best) == 100.0
        ok &= total_profit(profile, worst) == 0.0
    verdict(1, "bundled rating tables score exactly 100 / 0 at the extremes", ok)


def test_criterion_02_offer_space_size(aircraft_scenario, verdict):
    ok = all(
        len(enumerate_offers(spec.profile)) == 24 for spec in aircraft_scenario.agents
    )
    verdict(2, "aircraft offer space enumerates exactly 24 offers", ok)


def test_criterion_03_regression_exact_recovery(verdict):
    rng = random.Random(103)
    ok = True
    for _ in range(10):  # linear through t=0 (power inadmissible there)
        a, b = rng.uniform(1, 10), rng.uniform(1, 5)
        pts = tuple((float(t), a + b * t) for t in range(5))
        fit = fit_regression(ObservationSeries(pts), "linear")
        ok &= abs(fit.a - a) <= 1e-6 and abs(fit.b - b) <= 1e-6 and fit.sse <= 1e-9
        ok &= select_model(ObservationSeries(pts)).family == "linear"
    for _ in range(10):  # power with curvature well away from a straight line
        a, b = rng.uniform(0.5, 2), rng.uniform(1.4, 2.6)
        pts = tuple((t, a * t**b) for t in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0))
        fit = fit_regression(ObservationSeries(pts), "power")
        ok &= abs(fit.a - a) <= 1e-6 and abs(fit.b - b) <= 1e-6 and fit.sse <= 1e-9
        ok &= select_model(ObservationSeries(pts)).family == "power"
    for _ in range(10):  # quadratic through t=0 with genuine curvature
        a, b, c = rng.uniform(0.5, 2), rng.uniform(1, 3), rng.uniform(1, 10)
        pts = tuple((float(t), a * t**2 + b * t + c) for t in range(5))
        fit = fit_regression(ObservationSeries(pts), "quadratic")
        ok &= (
            abs(fit.a - a) <= 1e-6
            and abs(fit.b - b) <= 1e-6
            and abs(fit.c - c) <= 1e-6
            and fit.sse <= 1e-9
        )
        ok &= select_model(ObservationSeries(pts)).family == "quadratic"
    verdict(3, "all 30 noise-free fits recover their generators within 1e-6", ok)


def test_criterion_04_crossing_estimation(verdict):
    rising = fit_regression(
        ObservationSeries(tuple((float(t), 10.0 * t) for t in range(6))), "linear"
    )
    t_star = estimate_crossing(rising, 80.0, 10.0)
    ok = t_star is not None and abs(t_star - 8.0) <= 1e-6
    flat = fit_regression(
        ObservationSeries(((0.0, 30.0), (1.0, 30.0), (2.0, 30.0))), "linear"
    )
    ok &= estimate_crossing(flat, 80.0, 10.0) is None
    verdict(4, "crossing estimate hits t*=8 within 1e-6; flat curve never crosses", ok)


def test_criterion_05_response_function_law(verdict):
    rng = random.Random(105)
    ok = True
    for _ in range(10_000):
        profile = random_profile(rng, "me")
        state = NegotiationState(round=rng.randint(0, 30))
        incoming = OfferVector(random_offer(rng, profile))
        planned = OfferVector(random_offer(rng, profile))
        response = respond(profile, state, incoming, planned)
        if state.round > profile.deadline:
            ok &= isinstance(response, Withdraw)
        elif total_profit(profile, incoming) > total_profit(profile, planned):
            ok &= isinstance(response, Accept)
        else:
            ok &= isinstance(response, Offer)
        if not ok:
            break
    verdict(5, "respond branches exhaustive and exclusive over 10k random cases", ok)


def test_criterion_06_tactic_boundaries(verdict):
    ok = True
    for k in (0.0, 0.3):
        for beta in (0.5, 1.0, 2.0):
            ok &= time_alpha(0, 100, k, beta) == k
            ok &= time_alpha(100, 100, k, beta) == 1.0
            sweep = [time_alpha(t, 1000, k, beta) for t in range(1001)]
            ok &= all(b >= a for a, b in zip(sweep, sweep[1:]))
    ok &= resource_alpha(0.0, k=0.4) == 1.0
    verdict(6, "tactic concession curves hit their boundary values exactly", ok)


def _random_results(rng):
    results = []
    for thread_id in range(rng.randint(1, 5)):
        agreed = rng.random() < 0.7
        outcome = SessionOutcome(
            kind="agreement" if agreed else "withdrawal",
            round=rng.randint(1, 20),
            offer=None,
            party=f"s{thread_id}",
            reason=None,
            utilities={},
        )
        results.append(
            SubBuyerResult(
                thread_id=thread_id,
                supplier_id=f"s{thread_id}",
                outcome=outcome,
                completion_round=outcome.round,
                utility=rng.uniform(1, 100) if agreed else None,
            )
        )
    return results


def test_criterion_07_coordination_dominance(verdict):
    rng = random.Random(107)
    ok = True
    for _ in range(1000):
        results = _random_results(rng)
        desperate = coordinate_desperate(results)
        patient = coordinate_patient(results)
        ok &= (desperate is None) == (patient is None)
        if desperate is not None:
            ok &= patient.utility >= desperate.utility
        ok &= coordinate_adapted(results, theta=0.0) == desperate
        ok &= coordinate_adapted(results, theta=101.0) == patient
        if not ok:
            break
    verdict(7, "patient dominates desperate; adapted matches its limit strategies", ok)


def test_criterion_08_network_training(verdict):
    rng = np.random.default_rng(42)
    X = rng.uniform(0.0, 1.0, size=(50, 3))
    y = 0.5 * X[:, 0] + 0.3 * X[:, 1] - 0.2 * X[:, 2] + 0.1
    net = NeuralPredictor([50.0, 30.0, 20.0], epochs=200, seed=42).fit(X, y)
    ok = net.final_mse <= 0.5 * net.initial_mse
    single = NeuralPredictor([1.0, 1.0], epochs=500, seed=1)
    _, mse = nn_train(single, [((0.4, 0.7), 0.6)])
    ok &= mse <= 1e-3
    twin_a = NeuralPredictor([50.0, 30.0, 20.0], epochs=200, seed=42).fit(X, y)
    twin_b = NeuralPredictor([50.0, 30.0, 20.0], epochs=200, seed=42).fit(X, y)
    ok &= twin_a.weights_digest() == twin_b.weights_digest()
    verdict(8, "network halves its MSE, memorizes one sample, trains reproducibly", ok)


def test_criterion_09_prediction_benefit(verdict, disjoint_scenario, aircraft_scenario):
    disjoint = compare_prediction(disjoint_scenario, 10)
    ok = disjoint["on"].stats.mean_rounds < disjoint["off"].stats.mean_rounds
    overlapping = compare_prediction(aircraft_scenario.with_prediction(True), 100)
    ok &= (
        overlapping["on"].stats.agreement_rate
        >= overlapping["off"].stats.agreement_rate
    )
    verdict(9, "prediction cuts unprofitable rounds without costing agreements", ok)


def test_criterion_10_end_to_end_determinism(verdict, tmp_path):
    runner = CliRunner()
    outputs = []
    for name in ("one", "two"):
        out = tmp_path / name
        result = runner.invoke(
            cli_main,
            [
                "batch",
                "--scenario", str(bundled_scenario("aircraft.scenario")),
                "-n", "100",
                "--seed", "7",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = outputs[0] == outputs[1] and len(outputs[0]) == 101  # 100 traces + stats
    verdict(10, "two 100-session CLI batches are byte-identical", ok)


def test_criterion_11_registry_oracle_equivalence(verdict):
    rng = random.Random(111)
    ok = True
    for _ in range(1000):
        registry = ServiceRegistry()
        oracle = {}  # seller -> (sequence, category, record)
        handles = {}
        for _ in range(rng.randint(1, 12)):
            action = rng.choice(("register", "deregister", "discover"))
            seller = f"s{rng.randint(0, 4)}"
            category = rng.choice(("aircraft", "ships"))
            if action == "register" and seller not in oracle:
                rec = registry_record(seller_id=seller, category=category)
                handle = registry.register(rec)
                oracle[seller] = (handle.sequence, category)
                handles[seller] = handle
            elif action == "deregister" and seller in oracle:
                registry.deregister(handles.pop(seller))
                del oracle[seller]
            elif action == "discover":
                found = registry.discover(DiscoveryQuery(category=category))
                expected = sorted(
                    (seq, s) for s, (seq, cat) in oracle.items() if cat == category
                )
                ok &= [(r.registered_at, r.seller_id) for r in found] == expected
        if not ok:
            break
    verdict(11, "registry matches the brute-force oracle over 1000 sequences", ok)
