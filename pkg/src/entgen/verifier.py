"""Monte Carlo verification of the performance bounds.

Each trial draws protocol parameters and a random compliant strategy from a
substream seeded by (seed, trial index), evaluates it, and records a signed
margin for every inequality the performance must obey. Failures are logged
and the run continues; the report says whether anything went wrong.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from . import bounds
from .config import DEFAULT_TOLERANCES, Tolerances
from .fock import PHI_PLUS, TruncationPolicy
from .protocol import ProtocolParams, build_joint_state, equivalence_check, lossy_memory_pulse_state
from .strategies import (
    MeasurementStrategy,
    PulseSpan,
    evaluate_strategy,
    lift_to_fock,
    sample_compliant_strategy,
    trivial_strategy,
    usd_strategy,
)

log = logging.getLogger(__name__)

CHECKS = (
    "fidelity_floor",
    "triangle_containment",
    "bell_positivity",
    "fidelity_cap",
    "g_nonnegative",
    "success_cap",
    "tradeoff_line",
    "even_bell_support",
    "alice_marginal_diagonal",
    "marginal_conservation",
    "usd_saturation",
    "trivial_at_x2",
)


@dataclass(frozen=True)
class TrialConfig:
    n_trials: int = 10_000
    seed: int = 42
    q0_range: tuple[float, float] = (0.0, 1.0)
    alpha_range: tuple[float, float] = (0.05, 2.0)
    theta_range: tuple[float, float] = (0.0, math.pi)
    T_range: tuple[float, float] = (0.05, 0.95)
    max_outcomes: int = 4
    cross_check_every: int = 10
    cutoff: int | None = None
    alpha_limit: float = 3.0
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        lo, hi = self.q0_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(f"bad q0 range {self.q0_range}")
        lo, hi = self.alpha_range
        if not 0.0 <= lo <= hi <= self.alpha_limit:
            raise ValueError(f"|alpha| range {self.alpha_range} outside [0, {self.alpha_limit}]")
        lo, hi = self.T_range
        if not 0.0 < lo <= hi < 1.0:
            raise ValueError(f"T range {self.T_range} must lie inside (0, 1)")
        lo, hi = self.theta_range
        if not lo <= hi:
            raise ValueError(f"bad theta range {self.theta_range}")
        if self.max_outcomes < 1:
            raise ValueError("max_outcomes must be positive")
        if self.cross_check_every < 0:
            raise ValueError("cross_check_every must be non-negative")


@dataclass
class CheckStats:
    name: str
    passes: int = 0
    failures: int = 0
    worst_margin: float = math.inf
    worst_trial: int | None = None

    def record(self, trial: int, margin: float, tol: float) -> bool:
        ok = margin >= -tol
        if ok:
            self.passes += 1
        else:
            self.failures += 1
        if margin < self.worst_margin:
            self.worst_margin = margin
            self.worst_trial = trial
        return ok

    def merge(self, other: "CheckStats") -> "CheckStats":
        mine = (self.worst_margin, math.inf if self.worst_trial is None else self.worst_trial)
        theirs = (other.worst_margin, math.inf if other.worst_trial is None else other.worst_trial)
        best = self if mine <= theirs else other
        return CheckStats(self.name, self.passes + other.passes, self.failures + other.failures,
                          best.worst_margin, best.worst_trial)


@dataclass
class VerificationReport:
    seed: int
    trials: int = 0
    checks: dict[str, CheckStats] = field(default_factory=lambda: {n: CheckStats(n) for n in CHECKS})
    cross_check_max: float = 0.0
    cross_checks: int = 0
    failing_trials: list[dict] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return len(self.failing_trials)

    @property
    def ok(self) -> bool:
        return not self.failing_trials

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        if other.seed != self.seed:
            raise ValueError("cannot merge reports from different seeds")
        return VerificationReport(
            seed=self.seed,
            trials=self.trials + other.trials,
            checks={n: self.checks[n].merge(other.checks[n]) for n in CHECKS},
            cross_check_max=max(self.cross_check_max, other.cross_check_max),
            cross_checks=self.cross_checks + other.cross_checks,
            failing_trials=sorted(self.failing_trials + other.failing_trials,
                                  key=lambda f: (f["trial"], f["check"])),
        )

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "ok": self.ok,
            "inequalities": [
                {
                    "name": c.name,
                    "passes": c.passes,
                    "failures": c.failures,
                    "worst_margin": None if math.isinf(c.worst_margin) else c.worst_margin,
                    "worst_trial": c.worst_trial,
                }
                for c in self.checks.values()
            ],
            "cross_check_max": self.cross_check_max,
            "cross_checks": self.cross_checks,
            "failing_trials": self.failing_trials,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _params_dict(params: ProtocolParams) -> dict:
    d = asdict(params)
    for key in ("alpha0", "alpha1"):
        d[key] = [d[key].real, d[key].imag]
    return d


def draw_params(rng: np.random.Generator, config: TrialConfig) -> ProtocolParams:
    q0 = rng.uniform(*config.q0_range)
    alpha = rng.uniform(*config.alpha_range) * np.exp(2j * math.pi * rng.random())
    theta = rng.uniform(*config.theta_range)
    T = rng.uniform(*config.T_range)
    Theta0, Theta1 = rng.uniform(0.0, 2 * math.pi, size=2)
    return ProtocolParams.phase_rotation(alpha, theta, T, q0=q0, Theta0=Theta0, Theta1=Theta1)


def cross_validate_representations(params: ProtocolParams, strategy: MeasurementStrategy,
                                   policy: TruncationPolicy | None = None) -> float:
    """Largest |difference| in p_k and F_k between the two-component and Fock-space pictures.

    The Fock side never uses the dephasing shortcut: it sends the truncated
    coherent pulses through the loss isometry, traces out the environment,
    applies Bob's maps lifted to the truncated space, and then the same local
    correction Bob and Alice would apply for that outcome.
    """
    if strategy.prepare_ground:
        params = ProtocolParams(1.0, 0.0, 0.0, params.alpha0, params.alpha1, params.T)
    if policy is None:
        policy = TruncationPolicy.for_amplitudes(params.alpha0, params.alpha1)
    evaluation = evaluate_strategy(params, strategy)
    records = {o.k: o for o in evaluation.outcomes}
    span = PulseSpan.from_params(params)
    rho_ab = lossy_memory_pulse_state(params, policy).matrix

    worst = 0.0
    for k, kraus in enumerate(lift_to_fock(strategy, span, policy)):
        lifted = np.kron(np.eye(2), kraus)
        sigma = lifted @ rho_ab @ lifted.conj().T
        p = float(np.trace(sigma).real)
        rec = records.get(k)
        if rec is None:
            worst = max(worst, p)
            continue
        U = np.kron(rec.U_A, rec.U_B)
        tau = U @ sigma @ U.conj().T / p
        F = float(np.vdot(PHI_PLUS, tau @ PHI_PLUS).real)
        worst = max(worst, abs(p - rec.p), abs(F - rec.F))
    return worst


def _check_trial(trial: int, rng: np.random.Generator, config: TrialConfig, report: VerificationReport) -> None:
    params = draw_params(rng, config)
    n_out = int(rng.integers(1, config.max_outcomes + 1))
    failures: list[tuple[str, float]] = []
    try:
        _run_checks(trial, rng, params, n_out, config, report, failures)
    except Exception as exc:  # a crash is a failed trial, not a failed run
        log.debug("trial %d raised", trial, exc_info=True)
        failures.append((f"exception: {type(exc).__name__}: {exc}", math.nan))

    for name, margin in failures:
        report.failing_trials.append({
            "trial": trial,
            "check": name,
            "margin": None if math.isnan(margin) else margin,
            "n_outcomes": n_out,
            "params": _params_dict(params),
        })
    report.trials += 1


def _run_checks(trial, rng, params, n_out, config, report, failures) -> None:
    tol = config.tolerances
    u = abs(build_joint_state(params).u_overlap)

    def record(name: str, margin: float, limit: float = tol.violation) -> None:
        if not report.checks[name].record(trial, margin, limit):
            failures.append((name, margin))

    if u < 1.0:
        strategy = sample_compliant_strategy(rng, n_out, params)
        ev = evaluate_strategy(params, strategy, tol)
        point, marg = ev.point, ev.marginals
        for o in ev.outcomes:
            record("bell_positivity", 1.0 - (o.a ** 2 + abs(o.b) ** 2))
            record("even_bell_support", -o.odd_leak)
            record("alice_marginal_diagonal", -o.alice_coherence)
        record("marginal_conservation", -marg.conservation_residual())
        record("g_nonnegative", bounds.g_polynomial(point.Ps, marg.z0, marg.zs, u))
        if not point.vacuous:
            record("fidelity_floor", point.F - 0.5)
            record("triangle_containment", bounds.triangle(u, params.T).margin(point), tol.geometry)
            record("fidelity_cap", bounds.fidelity_cap(u, params.T) - point.F)
            record("success_cap", bounds.success_cap(u, marg.zs) - point.Ps)
            record("tradeoff_line", bounds.tradeoff_max_PsF(point.Ps, u, params.T) - point.Ps * point.F)

        # symmetric preparation with the same pulses: the optimal point X1
        sym = ProtocolParams(0.5, params.Theta0, params.Theta1, params.alpha0, params.alpha1, params.T)
        usd = evaluate_strategy(sym, usd_strategy(sym), tol).point
        gap = bounds.tradeoff_max_PsF(1.0 - u, u, params.T) - usd.Ps * usd.F
        x1 = bounds.triangle(u, params.T).X1
        record("usd_saturation", -max(abs(gap), abs(usd.Ps - x1[0]), abs(usd.Ps * usd.F - x1[1])))

        if config.cross_check_every and trial % config.cross_check_every == 0:
            policy = TruncationPolicy(config.cutoff) if config.cutoff else None
            dev = cross_validate_representations(params, strategy, policy)
            report.cross_checks += 1
            report.cross_check_max = max(report.cross_check_max, dev)
            if dev > tol.cross_check:
                failures.append(("cross_check", dev))

    trivial = evaluate_strategy(params, trivial_strategy(), tol).point
    record("trivial_at_x2", -max(abs(trivial.Ps - 1.0), abs(trivial.F - 0.5)))


def run_trials(config: TrialConfig, indices: Iterable[int]) -> VerificationReport:
    report = VerificationReport(seed=config.seed)
    for trial in indices:
        rng = np.random.default_rng([config.seed, trial])
        _check_trial(trial, rng, config, report)
    return report


def run_monte_carlo(config: TrialConfig, workers: int = 1) -> VerificationReport:
    """Run every trial and merge the per-chunk reports.

    The result does not depend on ``workers``: each trial owns its own
    substream and the merge is order independent.
    """
    if workers <= 1:
        report = run_trials(config, range(config.n_trials))
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [range(i, config.n_trials, workers) for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_trials, [config] * workers, chunks))
        report = parts[0]
        for part in parts[1:]:
            report = report.merge(part)
        report.failing_trials.sort(key=lambda f: (f["trial"], f["check"]))
    if not report.ok:
        log.warning("%d violations in %d trials", len(report.failing_trials), report.trials)
    return report


def equivalence_sweep(n_draws: int = 1000, seed: int = 0, alpha_max: float = 2.0,
                      T_range: tuple[float, float] = (0.05, 0.95), cutoff: int = 40) -> tuple[float, float]:
    """Worst trace distance of the dephasing picture and worst overlap-relation error.

    Both pulse amplitudes are drawn independently and uniformly from the disc
    |alpha| <= alpha_max.
    """
    rng = np.random.default_rng(seed)
    policy = TruncationPolicy(cutoff)
    worst_dist = worst_rel = 0.0
    for _ in range(n_draws):
        radii = alpha_max * np.sqrt(rng.random(2))
        alphas = radii * np.exp(2j * math.pi * rng.random(2))
        params = ProtocolParams(rng.random(), *rng.uniform(0, 2 * math.pi, 2), *alphas, rng.uniform(*T_range))
        joint = build_joint_state(params)
        rel = abs(abs(joint.u_overlap) ** (1 - params.T) - abs(joint.v_overlap) ** params.T)
        worst_rel = max(worst_rel, rel)
        worst_dist = max(worst_dist, equivalence_check(params, policy))
    return worst_dist, worst_rel


def hull_samples(T: float, grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid abscissae and the hull of {(Ps, Ps f_sym(Ps))} plus X2."""
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    grid = np.linspace(0.0, 1.0, grid_size)
    pts = np.column_stack([grid, grid * bounds.f_sym(grid, T)])
    pts = np.vstack([pts, [1.0, 0.5]])
    return grid, bounds.upper_convex_hull(pts)


def hull_check(T: float, grid_size: int = 10_000) -> float:
    """max over the grid of |hull(Ps) - Ps f_opt(Ps)|."""
    grid, hull = hull_samples(T, grid_size)
    return float(np.max(np.abs(bounds.hull_ordinate(hull, grid) - grid * bounds.f_opt(grid, T))))


def hull_kink(T: float, grid_size: int = 10_000) -> float:
    """Abscissa where the sampled hull leaves the curve for the straight segment to X2."""
    _, hull = hull_samples(T, grid_size)
    return float(hull[-2, 0]) if len(hull) >= 2 else 1.0
