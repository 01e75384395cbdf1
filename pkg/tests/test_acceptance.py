"""End-to-end acceptance checks; each prints one PASS/FAIL line in the run summary."""

import csv
import io
import time
from collections import defaultdict

import numpy as np

from entgen import bounds
from entgen.cli import main
from entgen.protocol import ProtocolParams
from entgen.strategies import evaluate_strategy, trivial_strategy, usd_strategy
from entgen.verifier import (
    TrialConfig,
    cross_validate_representations,
    equivalence_sweep,
    hull_check,
    run_monte_carlo,
    run_trials,
)

GRID = [k / 10 for k in range(1, 10)]


def test_01_dephasing_equivalence(acceptance):
    dist, _ = equivalence_sweep(n_draws=1000, seed=0, alpha_max=2.0, T_range=(0.05, 0.95), cutoff=40)
    acceptance("1 dephasing equivalence", dist <= 1e-10, f"worst trace distance {dist:.2e} over 1000 draws")


def test_02_overlap_relation(acceptance):
    _, rel = equivalence_sweep(n_draws=1000, seed=0, alpha_max=2.0, T_range=(0.05, 0.95), cutoff=40)
    acceptance("2 overlap relation", rel <= 1e-12, f"worst deviation {rel:.2e} over 1000 draws")


def test_03_usd_achievability(acceptance):
    worst_point = worst_fock = 0.0
    for u in GRID:
        for T in GRID:
            params = ProtocolParams.from_overlap(u, T)
            point = evaluate_strategy(params, usd_strategy(params)).point
            worst_point = max(worst_point, abs(point.Ps - (1 - u)),
                              abs(point.F - 0.5 * (1 + u ** ((1 - T) / T))))
            worst_fock = max(worst_fock, cross_validate_representations(params, usd_strategy(params)))
    ok = worst_point <= 1e-9 and worst_fock <= 1e-8
    acceptance("3 USD achievability", ok,
               f"closed-form deviation {worst_point:.2e}, Fock cross-check {worst_fock:.2e} on 81 points")


def test_04_monte_carlo_soundness(acceptance):
    config = TrialConfig(n_trials=10_000, seed=42)
    start = time.perf_counter()
    report = run_monte_carlo(config)
    elapsed = time.perf_counter() - start
    # rerun a scattered subset and check the same per-trial outcomes are reproduced
    subset = run_trials(config, range(0, 10_000, 97))
    again = run_trials(config, range(0, 10_000, 97))
    deterministic = subset.to_json() == again.to_json()
    ok = report.ok and report.trials == 10_000 and deterministic
    acceptance("4 bound soundness", ok,
               f"{report.violations} violations in {report.trials} trials, "
               f"cross-check max {report.cross_check_max:.1e}, deterministic={deterministic}, {elapsed:.0f}s")


def test_05_tightness(acceptance):
    worst = 0.0
    exact_x2 = True
    for u in GRID:
        for T in GRID:
            params = ProtocolParams.from_overlap(u, T)
            point = evaluate_strategy(params, usd_strategy(params)).point
            line = bounds.tradeoff_max_PsF(point.Ps, u, T)
            worst = max(worst, abs(line - point.Ps * point.F), abs(point.Ps - (1 - u)))
            triv = evaluate_strategy(params, trivial_strategy()).point
            exact_x2 &= triv.plane == bounds.triangle(u, T).X2
    acceptance("5 tightness", worst <= 1e-9 and exact_x2,
               f"USD gap to trade-off line {worst:.2e}, trivial at X2 exactly={exact_x2}")


def test_06_optimal_curve(acceptance):
    a = abs(bounds.f_opt(1 / 3, 0.25) - 35 / 54)
    b = abs(bounds.f_opt(0.5, 0.25) - (0.5 + 2 / 27))
    jumps = []
    for T in np.linspace(0.05, 0.49, 45):
        k = bounds.ps_star(T)
        jumps.append(abs(bounds.f_opt(k + 1e-12, T) - bounds.f_opt(k, T)))
    grid = np.linspace(0, 1, 1001)
    same = max(float(np.max(np.abs(bounds.f_opt(grid, T) - bounds.f_sym(grid, T))))
               for T in (0.5, 0.6, 0.75, 0.9))
    ok = a <= 1e-12 and b <= 1e-12 and max(jumps) <= 1e-6 and same == 0.0
    acceptance("6 optimal curve", ok,
               f"spot errors {a:.1e}/{b:.1e}, kink jump {max(jumps):.1e}, f_opt-f_sym for T>=1/2 {same:.1e}")


def test_07_convex_hull(acceptance):
    kinked = {T: hull_check(T, 10_000) for T in (0.15, 0.25, 0.35, 0.45)}
    smooth = {T: hull_check(T, 10_000) for T in (0.5, 0.7)}
    ok = max(kinked.values()) <= 5e-4 and max(smooth.values()) <= 1e-9
    detail = ", ".join(f"T={T}: {d:.1e}" for T, d in {**kinked, **smooth}.items())
    acceptance("7 convex hull", ok, detail)


def _fd(fun, x, h):
    return (fun(x + h) - fun(x - h)) / (2 * h)


def test_08_derivatives(acceptance):
    worst = 0.0
    sign_ok = True
    for T in (0.15, 0.25, 0.3, 0.4):
        curve = lambda p: p * bounds.f_sym(p, T)
        first = lambda p: bounds.fsym_curve_derivatives(p, T)[0]
        for p in np.linspace(0.05, 0.95, 37):
            d1, d2 = bounds.fsym_curve_derivatives(p, T)
            worst = max(worst, abs(_fd(curve, p, 1e-5) - d1) / max(abs(d1), 1e-3))
            if abs(p - 2 * T) > 1e-3:
                worst = max(worst, abs(_fd(first, p, 1e-5) - d2) / max(abs(d2), 1e-3))
        fine = np.linspace(0, 1, 200_001)[:-1]
        _, d2 = bounds.fsym_curve_derivatives(fine, T)
        left, right = fine < 2 * T, fine > 2 * T
        sign_ok &= bool(np.all(d2[left] < 0) and np.all(d2[right] > 0))
        sign_ok &= bounds.fsym_curve_derivatives(2 * T, T)[1] == 0.0
    acceptance("8 derivatives", worst <= 1e-6 and sign_ok,
               f"worst relative FD error {worst:.1e}, sign flips exactly at 2T={sign_ok}")


def test_09_fig3(acceptance, capsys):
    code = main(["fig3"])
    text = capsys.readouterr().out
    curves = defaultdict(list)
    for row in csv.DictReader(io.StringIO(text)):
        curves[float(row["l_km"])].append((float(row["Ps"]), float(row["F_opt"])))
    lengths = sorted(curves)
    ends = all(c[0] == (0.0, 1.0) and c[-1] == (1.0, 0.5) for c in curves.values())
    table = np.array([[f for _, f in curves[l]] for l in lengths])
    monotone = bool(np.all(np.diff(table, axis=0) <= 1e-15))
    ok = code == 0 and lengths == [10.0 * k for k in range(1, 11)] and ends and monotone
    acceptance("9 fig3 curves", ok,
               f"{len(lengths)} curves, endpoints F=1 and F=1/2: {ends}, non-increasing in l: {monotone}")
