"""Exit criteria for the build; one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""
import itertools
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from momentpoly.events import EventSet
from momentpoly.metrics import evaluate_model
from momentpoly.model import FitConfig, fit, fit_report
from momentpoly.moments import accumulate, accumulate_sharded, combine_binary
from momentpoly.solver import assemble, solve
from momentpoly.synth import fig1_spec, sample, sec3_spec, split_seed
from momentpoly.tensor_index import (
    basis_size,
    enumerate_indices,
    get_basis,
    index_of,
    multiplicity,
    num_free_components,
    position_of,
)
from momentpoly.model import Preprocessor
from oracles import brute_force_ranks, dense_moments, lstsq_fit, naive_powers


def record(number, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def fig1_runs():
    spec = fig1_spec()
    train_seed, test_seed = split_seed(2024, 2)
    train, test = sample(spec, 10_000, train_seed), sample(spec, 10_000, test_seed)
    return spec, train, test


def test_c1_monomial_count():
    n = basis_size(3, 20)
    direct = sum(num_free_components(3, k) for k in range(21))
    ok = n == direct == 1771 and num_free_components(3, 2) == 6 and num_free_components(1, 7) == 1
    record(1, ok, f"basis size d=3 degree 20 = {n} (expected 1771); C(4,2) = {num_free_components(3, 2)}")


def test_c2_position_formula_exhaustive():
    t0 = time.perf_counter()
    cases = mismatches = 0
    for d in range(1, 5):
        for k in range(0, 6):
            ranks = brute_force_ranks(d, k)
            for idx, rank in ranks.items():
                cases += 1
                mismatches += position_of(idx, d) != rank
            mismatches += len(enumerate_indices(d, k)) != len(ranks)
            # every dense tuple must land on the slot of its sorted form
            for t in itertools.product(range(1, d + 1), repeat=k):
                cases += 1
                mismatches += position_of(tuple(sorted(t)), d) != ranks[tuple(sorted(t))]
    elapsed = time.perf_counter() - t0
    record(2, mismatches == 0 and elapsed < 1.0,
           f"{cases} index tuples (d<=4, k<=5, canonical and permuted), {mismatches} mismatches, {elapsed:.3f}s")


def test_c3_compact_vs_dense():
    rng = np.random.default_rng(3)
    worst = 0.0
    for d, n in itertools.product((1, 2, 3), (1, 2, 3)):
        xs = rng.normal(0.2, 1.0, size=(40, d))
        xb = rng.normal(-0.2, 1.0, size=(40, d))
        cm = combine_binary(accumulate(xs, 2 * n).normalize(), accumulate(xb, 2 * n).normalize(), n)
        system = assemble(cm)
        Ts = dense_moments(xs, np.ones(40), 2 * n)
        Tb = dense_moments(xb, np.ones(40), 2 * n)
        G = [a + b for a, b in zip(Ts, Tb)]
        exps = get_basis(d, n).exponents
        dense_A = np.empty_like(system.matrix)
        for a, b in itertools.product(range(len(exps)), repeat=2):
            idx = index_of(exps[a]) + index_of(exps[b])
            dense_A[a, b] = G[len(idx)][tuple(v - 1 for v in idx)]
        scale = np.abs(dense_A).max()
        worst = max(worst, np.abs(system.matrix - dense_A).max() / scale)

        # dense contraction with unfolded unknowns F^j = folded / multiplicity
        folded = rng.normal(size=len(exps))
        lookup = {tuple(e): i for i, e in enumerate(exps)}
        dense_F = []
        for j in range(n + 1):
            Fj = np.zeros((d,) * j)
            for mu in itertools.product(range(d), repeat=j):
                m = tuple(np.bincount(np.array(mu, dtype=int), minlength=d))
                Fj[mu] = folded[lookup[m]] / multiplicity(m)
            dense_F.append(Fj)
        compact = system.matrix @ folded
        for k in range(n + 1):
            for mu in itertools.product(range(d), repeat=k):
                total = sum(float(np.tensordot(G[k + j][mu], dense_F[j], axes=j)) for j in range(n + 1))
                m = tuple(np.bincount(np.array(mu, dtype=int), minlength=d))
                worst = max(worst, abs(compact[lookup[m]] - total) / max(np.abs(compact).max(), 1e-300))
    record(3, worst <= 1e-12, f"max relative deviation compact vs dense = {worst:.2e} (tol 1e-12)")


def test_c4_least_squares_oracle():
    rng = np.random.default_rng(4)
    xs, xb = rng.normal(0.3, 0.7, size=(100, 2)), rng.normal(-0.3, 0.7, size=(100, 2))
    events = EventSet(np.vstack([xs, xb]), np.r_[np.ones(100), -np.ones(100)])
    t0 = time.perf_counter()
    model = fit(events, FitConfig(degree=3, preproc="none"))
    ref = lstsq_fit(events.x, events.label, np.ones(200), get_basis(2, 3).exponents)
    err = np.linalg.norm(model.coefficients - ref) / np.linalg.norm(ref)
    elapsed = time.perf_counter() - t0
    record(4, err <= 1e-6 and elapsed < 1.0, f"relative coefficient error vs QR least squares = {err:.2e} (tol 1e-6)")


def test_c5_point_mass_exact():
    events = EventSet(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))
    model = fit(events, FitConfig(degree=1, preproc="none"))
    err = np.abs(model.coefficients - [0.0, 1.0]).max()
    probe = np.linspace(-2, 2, 9)[:, None]
    resp_err = np.abs(model.evaluate(probe) - probe[:, 0]).max()
    record(5, err <= 1e-14 and resp_err <= 1e-14, f"coefficient error {err:.1e}, response error {resp_err:.1e} (tol 1e-14)")


def test_c6_fig1_reproduction(fig1_runs):
    spec, train, test = fig1_runs
    t0 = time.perf_counter()
    model = fit(train, FitConfig(degree=20))
    rep = evaluate_model(model, test, spec)
    elapsed = time.perf_counter() - t0
    ok = rep.spearman >= 0.98 and rep.rms_from_ideal <= 0.05 and abs(rep.auc_gap) <= 0.02 and elapsed < 10
    record(6, ok, f"degree 20: Spearman {rep.spearman:.4f} (>=0.98), RMS to ideal {rep.rms_from_ideal:.4f} (<=0.05), "
                  f"AUC {rep.auc:.4f} vs Bayes {rep.bayes_auc:.4f} gap {rep.auc_gap:.4f} (<=0.02), {elapsed:.2f}s")


@pytest.mark.slow
def test_c7_sec3_desk_scale():
    spec = sec3_spec()
    train_seed, test_seed = split_seed(2024, 2)
    train, test = sample(spec, 40_000, train_seed), sample(spec, 40_000, test_seed)
    model, rep = fit_report(train, FitConfig(degree=20))
    assembly = rep["accumulate_seconds"] + rep["assemble_seconds"]
    solve_t = rep["solve_seconds"]
    ev = evaluate_model(model, test, spec)
    ok = (rep["basis_size"] == 1771 and assembly <= 60 and solve_t <= 30 and ev.isotonic_excess <= 0
          and np.isfinite(model.coefficients).all())
    record(7, ok, f"M={rep['basis_size']}, assembly {assembly:.1f}s (<=60), solve {solve_t:.2f}s (<=30), "
                  f"max purity drop beyond 3 sigma {ev.isotonic_excess:.4f} (<=0), "
                  f"response range [{ev.response_min:.2f}, {ev.response_max:.2f}], AUC {ev.auc:.4f}/{ev.bayes_auc:.4f}")


def test_c8_regression_recovery():
    rng = np.random.default_rng(8)
    worst = 0.0
    for d, degree in ((1, 3), (2, 2), (2, 3)):
        basis = get_basis(d, degree)
        true = rng.uniform(-1, 1, size=basis.size)
        z = rng.uniform(-1, 1, size=(100_000, d))
        y = naive_powers(z, basis.exponents) @ true
        model = fit(EventSet(z, y), FitConfig(degree=degree, preproc="none", mode="regression"))
        worst = max(worst, float(np.sqrt(np.mean((model.coefficients - true) ** 2))))
    record(8, worst <= 1e-3, f"worst coefficient RMS error {worst:.2e} (tol 1e-3), d<=2, degree<=3, 1e5 events")


def test_c9_no_degradation_with_degree(fig1_runs):
    spec, train, test = fig1_runs
    aucs = {d: evaluate_model(fit(train, FitConfig(degree=d)), test).auc for d in range(0, 21)}
    best = max(aucs.values())
    best_deg = max(aucs, key=aucs.get)
    record(9, best - aucs[20] <= 0.01,
           f"test AUC degree 20 = {aucs[20]:.4f}, best = {best:.4f} at degree {best_deg} (gap <= 0.01)")
