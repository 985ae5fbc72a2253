"""Acceptance criteria. Each test records one PASS/FAIL line, printed in the pytest summary.

Deselect with ``-m "not acceptance"`` for a fast unit run.
"""
import itertools
import time

import numpy as np
import pytest

from conftest import random_genome, record_criterion
from qneat.genome import Genome, InnovationRegistry, compatibility_distance, crossover
from qneat.moo import RankedAgent, assign_ranks, fast_non_dominated_sort, nsga2_select
from qneat.evolution import Agent
from qneat.qaoa import gate_count, qaoa_optimize
from qneat.runner import load_config, read_history, run_experiment, with_seed
from qneat.sim import (
    CNOT,
    RX,
    RZ,
    H,
    Rot,
    Statevector,
    apply_gate,
    apply_gates,
    expectation_observable,
)
from qneat.tasks.maxcut import BENCHMARKS, MaxCutFitness, benchmark_graph, brute_force_maxcut, maxcut_observable

from test_moo import brute_force_peel, eq8_select

pytestmark = pytest.mark.acceptance

CONFIGS = __import__("pathlib").Path(__file__).resolve().parent.parent / "configs"
SEEDS3 = (0, 1, 2)
MOO_SEEDS = (0, 1, 2, 3, 4)


def _random_gate(rng, n):
    kind = int(rng.integers(5))
    w = int(rng.integers(n))
    if kind == 0:
        return Rot(w, *rng.uniform(-2 * np.pi, 2 * np.pi, 3))
    if kind == 1 and n > 1:
        c, t = rng.choice(n, size=2, replace=False)
        return CNOT(int(c), int(t))
    if kind == 2:
        return RX(w, rng.uniform(-np.pi, np.pi))
    if kind == 3:
        return RZ(w, rng.uniform(-np.pi, np.pi))
    return H(w)


def _random_state(rng, n):
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return Statevector(n, amps / np.linalg.norm(amps))


def test_simulator_suite():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst_norm = 0.0
    for _ in range(10_000):
        n = int(rng.integers(1, 9))
        out = apply_gate(_random_state(rng, n), _random_gate(rng, n))
        worst_norm = max(worst_norm, abs(out.norm() - 1))
    worst_exp = 0.0
    for name in BENCHMARKS:
        graph = benchmark_graph(name)
        obs = maxcut_observable(graph)
        for _ in range(100):
            state = apply_gates(_random_state(rng, 8), [_random_gate(rng, 8) for _ in range(20)])
            brute = 0.0
            for k in range(256):
                bits = format(k, "08b")
                brute += abs(state.amplitudes[k]) ** 2 * sum(bits[u] != bits[v] for u, v in graph.edges)
            worst_exp = max(worst_exp, abs(expectation_observable(state, obs) - brute))
    elapsed = time.perf_counter() - start
    passed = worst_norm < 1e-10 and worst_exp < 1e-9 and elapsed < 60
    record_criterion(
        "simulator suite",
        passed,
        f"max |norm-1| {worst_norm:.1e} (tol 1e-10), max expectation error {worst_exp:.1e} (tol 1e-9), {elapsed:.1f}s (< 60s)",
    )
    assert passed


def test_genetic_property_suite():
    rng = np.random.default_rng(7)
    trials = 10_000
    violations = {"closure": 0, "fitter-parent superset": 0, "registry determinism": 0, "distance to self": 0}
    for _ in range(trials):
        reg = InnovationRegistry()
        a = random_genome(rng, n_mutations=int(rng.integers(0, 10)), registry=reg)
        b = random_genome(rng, n_mutations=int(rng.integers(0, 10)), registry=reg)
        fa, fb = float(rng.integers(0, 3)), float(rng.integers(0, 3))
        child = crossover(a, b, fa, fb, rng)
        try:
            rebuilt = Genome(child.n_wires, child.rot_genes, child.cnot_genes)
            if rebuilt != child or not child.structure() <= a.structure() | b.structure():
                violations["closure"] += 1
        except ValueError:
            violations["closure"] += 1
        hi, lo = (a, b) if fa >= fb else (b, a)
        if crossover(hi, lo, max(fa, fb) + 1.0, min(fa, fb), rng).structure() != hi.structure():
            violations["fitter-parent superset"] += 1
        seed = int(rng.integers(2**32))
        runs = []
        for _ in range(2):
            replay_reg = InnovationRegistry()
            g = random_genome(np.random.default_rng(seed), n_mutations=6, registry=replay_reg)
            runs.append((g, replay_reg.to_dict()))
        if runs[0] != runs[1]:
            violations["registry determinism"] += 1
        if compatibility_distance(a, a, 1.0, 1.0, 0.4) != 0.0:
            violations["distance to self"] += 1
    passed = not any(violations.values())
    detail = ", ".join(f"{k} {v}" for k, v in violations.items())
    record_criterion("genetic property suite", passed, f"{trials} trials each, violations: {detail}")
    assert passed


def test_maxcut_oracle_agreement():
    expected = {"ladder": 10, "barbell": 9, "random": 12, "caveman": 10}
    rng = np.random.default_rng(11)
    details, passed = [], True
    for name in BENCHMARKS:
        graph = benchmark_graph(name)
        value, cuts = brute_force_maxcut(graph)
        counts = {}
        for bits in itertools.product("01", repeat=graph.n_nodes):
            total = 0
            for u, v in graph.edges:
                if bits[u] != bits[v]:
                    total += 1
            counts["".join(bits)] = total
        best = max(counts.values())
        agree = value == best == expected[name] and cuts == {b for b, c in counts.items() if c == best}
        fitness = MaxCutFitness(graph)
        worst = max(fitness(random_genome(rng, n_wires=8, n_mutations=int(rng.integers(0, 25)))) for _ in range(1000))
        bound = worst <= value + 1e-9
        passed &= agree and bound
        details.append(f"{name} {value} (max random-genome <H> {worst:.3f})")
    record_criterion("maxcut oracle agreement", passed, "; ".join(details))
    assert passed


@pytest.fixture(scope="module")
def maxcut_runs(tmp_path_factory):
    config = load_config(CONFIGS / "maxcut_ladder.ini")
    out = tmp_path_factory.mktemp("maxcut")
    start = time.perf_counter()
    results = {s: run_experiment(with_seed(config, s), out / f"seed{s}").result for s in SEEDS3}
    return results, time.perf_counter() - start


def test_maxcut_end_to_end(maxcut_runs):
    results, qneat_seconds = maxcut_runs
    graph = benchmark_graph("ladder")
    qaoa_gates = gate_count(graph, 4)
    start = time.perf_counter()
    qaoa = qaoa_optimize(graph, 4, epochs=500)
    elapsed = qneat_seconds + time.perf_counter() - start
    successes = [s for s, r in results.items() if r["accuracy"] >= 0.5 and r["n_gates"] < qaoa_gates]
    qaoa_best = max(qaoa.expectations)
    passed = len(successes) >= 2 and qaoa_best >= 9.0 and elapsed <= 1800
    per_seed = ", ".join(f"seed {s}: acc {r['accuracy']:.2f} gates {r['n_gates']}" for s, r in results.items())
    record_criterion(
        "maxcut end-to-end",
        passed,
        f"{per_seed}; {len(successes)}/3 with acc >= 0.5 and gates < {qaoa_gates}; "
        f"QAOA p=4 <H> {qaoa_best:.3f} (>= 9.0); {elapsed:.0f}s",
    )
    assert passed


@pytest.fixture(scope="module")
def cartpole_runs(tmp_path_factory):
    config = load_config(CONFIGS / "cartpole.ini")
    out = tmp_path_factory.mktemp("cartpole")
    start = time.perf_counter()
    runs = {}
    for s in SEEDS3:
        outcome = run_experiment(with_seed(config, s), out / f"seed{s}")
        runs[s] = (outcome.result, read_history(outcome.out_dir / "history.csv"))
    return runs, time.perf_counter() - start


def test_cartpole_end_to_end(cartpole_runs):
    runs, elapsed = cartpole_runs
    rows = []
    good = 0
    for s, (result, history) in runs.items():
        reached = next((int(r["generation"]) for r in history if float(r["top5_mean"]) >= 500.0), None)
        reeval = result["mean_return_100"]
        ok = reached is not None and reeval >= 475.0
        good += ok
        rows.append(f"seed {s}: top-5 hits 500 at gen {reached}, 100-episode mean {reeval:.1f}")
    passed = good >= 2 and elapsed <= 1200
    record_criterion(
        "cartpole end-to-end",
        passed,
        "; ".join(rows) + f"; {good}/3 seeds with top-5 = 500 and re-evaluation >= 475; {elapsed:.0f}s",
    )
    assert passed


def test_nsga2_oracle_agreement():
    rng = np.random.default_rng(99)
    mismatches = 0
    for _ in range(200):
        size = int(rng.integers(2, 65))
        dims = int(rng.integers(2, 4))
        pts = [tuple(float(v) for v in rng.integers(0, 8, dims)) for _ in range(size)]
        if fast_non_dominated_sort(pts) != brute_force_peel(pts):
            mismatches += 1
            continue
        items = [RankedAgent(Agent(Genome(1), 0.0), p) for p in pts]
        n = int(rng.integers(0, size + 1))
        chosen = nsga2_select(items, n)
        assign_ranks(items)
        if {id(c) for c in chosen} != {id(c) for c in eq8_select(items, n)}:
            mismatches += 1
    passed = mismatches == 0
    record_criterion("nsga-ii oracle agreement", passed, f"200 instances of <= 64 points, {mismatches} mismatches")
    assert passed


def test_moo_gate_economy(tmp_path):
    moo_config = load_config(CONFIGS / "cartpole_moo.ini")
    plain_dict = moo_config.to_dict()
    plain_dict["algo"] = "qneat"
    plain_config = type(moo_config).from_dict(plain_dict)
    moo_gates, plain_gates = [], []
    for s in MOO_SEEDS:
        moo_gates.append(run_experiment(with_seed(moo_config, s), tmp_path / f"moo{s}").result["n_gates"])
        plain_gates.append(run_experiment(with_seed(plain_config, s), tmp_path / f"plain{s}").result["n_gates"])
    passed = np.mean(moo_gates) <= np.mean(plain_gates)
    record_criterion(
        "moo gate economy",
        passed,
        f"final best-agent gates over seeds {list(MOO_SEEDS)} at {moo_config.evolution.generations} generations: "
        f"qneat-moo {moo_gates} (mean {np.mean(moo_gates):.1f}) vs qneat {plain_gates} (mean {np.mean(plain_gates):.1f})",
    )
    assert passed


def test_determinism(tmp_path):
    identical = []
    for name, generations in (("cartpole.ini", 5), ("cartpole_moo.ini", 5), ("maxcut_ladder.ini", 5), ("qaoa_ladder_p4.ini", None)):
        config = with_seed(load_config(CONFIGS / name), 3)
        if generations is not None:
            config.evolution.generations = generations
        else:
            config.qaoa.epochs = 20
        a = run_experiment(config, tmp_path / f"{name}.a").out_dir / "history.csv"
        b = run_experiment(config, tmp_path / f"{name}.b").out_dir / "history.csv"
        identical.append((name, a.read_bytes() == b.read_bytes()))
    passed = all(ok for _, ok in identical)
    record_criterion("determinism", passed, ", ".join(f"{n} {'identical' if ok else 'DIFFERS'}" for n, ok in identical))
    assert passed
