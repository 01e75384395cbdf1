"""Bob's measurement strategies and their evaluation.

Bob's pulse only carries information about Alice's memory through the two
coherent states |u0>, |u1>, so a strategy is modelled on their span. We fix
the orthonormal frame

    e0 = |u0>,   e1 = (|u1> - s|u0>) / r,   s = <u0|u1>,  r = sqrt(1 - |s|^2),

in which |u0> = (1, 0) and |u1> = (s, r). A strategy is a list of 2x2 maps
M_k from that span into Bob's memory qubit, one per success outcome; whatever
is left of the identity is the failure branch. The orthogonal complement of
the span is routed to failure and never touches the state.

A strategy is *compliant* when every M_k sends |u0> and |u1> to orthogonal
memory states. That is exactly what leaves Alice and Bob, after a local
correction, in the span of the two even Bell states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bounds import PerformancePoint, VACUOUS
from .config import DEFAULT_TOLERANCES, Tolerances
from .fock import (
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    FockOperator,
    bloch_vector,
    coherent_vector,
    fidelity_to,
    singlet_fraction,
    partial_trace,
    TruncationPolicy,
)
from .protocol import InvariantViolation, ProtocolParams, apply_phase_flip, equivalent_state

# outcomes below this probability are treated as never occurring
NEGLIGIBLE_PROBABILITY = 1e-14
# a memory image this much smaller than its partner counts as zero
VANISHING_RATIO = 1e-12

_X = np.array([[0, 1], [1, 0]], dtype=complex)


class NonCompliantStrategy(ValueError):
    """A success outcome would leave a state outside the even Bell subspace."""


@dataclass(frozen=True)
class PulseSpan:
    """Coordinates of Bob's two possible pulses in the orthonormal frame (e0, e1)."""

    s: complex  # <u0|u1>
    b_amplitudes: tuple[complex, complex]

    @property
    def log_u(self) -> float:
        """log|<u0|u1>| = -|b0 - b1|^2 / 2, exact even when the pulses nearly coincide."""
        return -0.5 * abs(self.b_amplitudes[0] - self.b_amplitudes[1]) ** 2

    @property
    def u(self) -> float:
        return abs(self.s)

    @property
    def one_minus_u(self) -> float:
        return -math.expm1(self.log_u)

    @property
    def r(self) -> float:
        return math.sqrt(-math.expm1(2.0 * self.log_u))

    @property
    def frame(self) -> np.ndarray:
        """Columns are the coordinates of |u0> and |u1>."""
        return np.array([[1.0, self.s], [0.0, self.r]], dtype=complex)

    def fock_basis(self, policy: TruncationPolicy) -> np.ndarray:
        """Fock-space vectors of e0 and e1 as the columns of a (cutoff, 2) matrix."""
        u0 = coherent_vector(self.b_amplitudes[0], policy).amplitudes
        u1 = coherent_vector(self.b_amplitudes[1], policy).amplitudes
        e1 = (u1 - self.s * u0) / self.r if self.r > 0 else np.zeros_like(u0)
        return np.column_stack([u0, e1])

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "PulseSpan":
        picture = equivalent_state(params)
        b0, b1 = picture.b_amplitudes
        return cls(complex(np.conj(picture.u_overlap)), (complex(b0), complex(b1)))


@dataclass(frozen=True)
class MeasurementStrategy:
    """Success maps of Bob's measurement, each a 2x2 matrix on the pulse span.

    ``prepare_ground`` marks strategies in which Alice skips her superposition
    and prepares |0>; the maps are then applied to that product state.
    """

    success_maps: tuple[np.ndarray, ...]
    name: str = "custom"
    prepare_ground: bool = False

    def __post_init__(self):
        maps = []
        for m in self.success_maps:
            m = np.array(m, dtype=complex)
            if m.shape != (2, 2):
                raise ValueError(f"success maps must be 2x2, got {m.shape}")
            m.flags.writeable = False
            maps.append(m)
        object.__setattr__(self, "success_maps", tuple(maps))

    def completeness_defect(self) -> np.ndarray:
        """1 - sum_k M_k^dag M_k on the span; the failure branch's POVM element."""
        total = sum((m.conj().T @ m for m in self.success_maps), np.zeros((2, 2), dtype=complex))
        return np.eye(2) - total

    def compliance_residuals(self, span: PulseSpan) -> list[float]:
        """|<M u0, M u1>| / (|M u0| |M u1|) per outcome (0 where an image vanishes)."""
        out = []
        for m in self.success_maps:
            y0, y1 = (m @ span.frame).T
            n0, n1 = np.linalg.norm(y0), np.linalg.norm(y1)
            if min(n0, n1) <= VANISHING_RATIO * max(n0, n1):
                out.append(0.0)
            else:
                out.append(float(abs(np.vdot(y0, y1)) / (n0 * n1)))
        return out

    def validate(self, span: PulseSpan, tol: Tolerances = DEFAULT_TOLERANCES) -> None:
        lowest = np.linalg.eigvalsh(self.completeness_defect())[0]
        if lowest < -tol.min_eigenvalue:
            raise ValueError(f"success maps overshoot completeness (eigenvalue {lowest:.3g})")
        if self.prepare_ground:
            return
        worst = max(self.compliance_residuals(span), default=0.0)
        if worst > tol.compliance:
            raise NonCompliantStrategy(f"memory images not orthogonal (relative overlap {worst:.3g})")


@dataclass(frozen=True)
class OutcomeRecord:
    k: int
    p: float
    rho: np.ndarray  # memory pair right after Bob's outcome, before dephasing
    tau: np.ndarray  # after dephasing and the local correction
    F: float  # <Phi+|tau|Phi+>
    F_closed: float  # (1 + |<v1|v0>| a) / 2
    a: float
    b: complex
    z: float  # z-component of Alice's marginal of rho
    odd_leak: float  # largest of <Psi+-|tau|Psi+->
    alice_coherence: float  # |off-diagonal| of Alice's marginal of rho
    U_A: np.ndarray = field(repr=False)
    U_B: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class MarginalDecomposition:
    """Bloch components of Alice's memory: initial, success-averaged and failure branch."""

    x0: float
    y0: float
    z0: float
    zs: float
    xf: float
    yf: float
    zf: float
    Ps: float

    def conservation_residual(self) -> float:
        """Largest deviation from initial = Ps * success + (1 - Ps) * failure."""
        rest = 1.0 - self.Ps
        return max(
            abs(self.x0 - rest * self.xf),
            abs(self.y0 - rest * self.yf),
            abs(self.z0 - self.Ps * self.zs - rest * self.zf),
        )


class Evaluation(NamedTuple):
    outcomes: list[OutcomeRecord]
    point: PerformancePoint
    marginals: MarginalDecomposition


# --- named strategies ------------------------------------------------------


def usd_strategy(params: ProtocolParams) -> MeasurementStrategy:
    """Optimal unambiguous orthogonalization of Bob's two pulses.

    The single map sqrt(1-u) W^{-1}, where W holds the coordinates of |u0>, |u1>,
    sends |u_j> to sqrt(1-u)|j>: it removes the pulse overlap without learning j.
    Its largest admissible weight is the smallest eigenvalue 1-u of the Gram
    matrix, so it succeeds with probability 1-u. We split it into two outcomes
    that differ by a relative phase on Bob's memory, as a detector pair would;
    the local correction undoes the phase.
    """
    if abs(params.q0 - 0.5) > 1e-12:
        raise ValueError("the symmetric protocol requires q0 = 1/2")
    span = PulseSpan.from_params(params)
    if span.r == 0.0:
        raise ValueError("pulses are identical; no discrimination possible")
    # sqrt(1-u) W^{-1} written out; entries stay O(1) as u -> 1
    root = 1.0 / math.sqrt(1.0 + span.u)
    base = np.array([[math.sqrt(span.one_minus_u), -span.s * root], [0.0, root]])
    z = np.diag([1.0, -1.0])
    return MeasurementStrategy((base / math.sqrt(2), z @ base / math.sqrt(2)), name="usd")


def trivial_strategy() -> MeasurementStrategy:
    """Both memories in |00>, success declared every time."""
    return MeasurementStrategy((np.eye(2),), name="trivial", prepare_ground=True)


def sample_compliant_strategy(rng: np.random.Generator, n_outcomes: int, params: ProtocolParams,
                              max_retries: int = 16) -> MeasurementStrategy:
    """Random compliant strategy with ``n_outcomes`` success outcomes.

    Each map starts as a complex Gaussian matrix; the image of |u1> is then
    shifted along the image of |u0> to make the two orthogonal. Some draws
    zero the second image (product outcome) and some rebalance the two image
    norms to within a few percent, which lands near the tight boundary. All maps are
    finally scaled together so that the failure element stays positive, with a
    random overall weight that hits the completeness boundary a quarter of the
    time.
    """
    if n_outcomes < 1:
        raise ValueError("need at least one success outcome")
    span = PulseSpan.from_params(params)
    if span.r == 0.0:
        raise ValueError("pulses are identical; no compliant strategy succeeds")
    frame = span.frame
    for _ in range(max_retries):
        maps = []
        for _k in range(n_outcomes):
            g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            images = g @ frame
            y0, y1 = images[:, 0], images[:, 1]
            mode = rng.random()
            if mode < 0.1:
                y1 = np.zeros(2, dtype=complex)  # product-state outcome
            else:
                n0 = np.vdot(y0, y0).real
                if n0 > 0:
                    y1 = y1 - (np.vdot(y0, y1) / n0) * y0
                n1 = np.linalg.norm(y1)
                if mode < 0.4 and n1 > 0:
                    # near-balanced images sit close to the optimal boundary
                    y1 *= math.sqrt(n0) / n1 * math.exp(0.05 * rng.standard_normal())
            maps.append(np.linalg.solve(frame.T, np.column_stack([y0, y1]).T).T)
        total = sum(m.conj().T @ m for m in maps)
        top = np.linalg.eigvalsh(total)[-1]
        if not np.isfinite(top) or top <= 0:
            continue
        weight = 1.0 if rng.random() < 0.25 else rng.random()
        scale = math.sqrt(weight / top)
        # tiny shrink keeps the failure element PSD after rounding
        scale *= 1.0 - 1e-13
        return MeasurementStrategy(tuple(m * scale for m in maps), name="random")
    raise RuntimeError(f"could not draw a usable strategy in {max_retries} attempts")


# --- evaluation ------------------------------------------------------------


def correction_unitaries(state: np.ndarray, tol: float = DEFAULT_TOLERANCES.compliance
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Local unitaries taking c0|0>|y0> + c1|1>|y1> to c0'|00> + c1'|11>, c0' >= c1' >= 0.

    ``state`` is the memory pair as a 4-vector or a 2x2 array indexed [A, B];
    it need not be normalized. Row j is c_j |y_j>, so U_B = sum_j |j><y_j/|y_j||
    maps it to |y_j| |jj> with every phase absorbed on Bob's side. If Alice's
    |1> branch carries more weight, both parties flip.
    """
    rows = np.asarray(state, dtype=complex).reshape(2, 2)
    norms = np.linalg.norm(rows, axis=1)
    if norms.max() == 0:
        raise ValueError("zero state")
    if norms.min() <= VANISHING_RATIO * norms.max():
        norms[np.argmin(norms)] = 0.0
    if norms.min() > 0 and abs(np.vdot(rows[0], rows[1])) > tol * norms[0] * norms[1]:
        raise NonCompliantStrategy("Bob's memory states are not orthogonal")

    dirs = np.zeros((2, 2), dtype=complex)
    big = int(np.argmax(norms))
    dirs[big] = rows[big] / norms[big]
    other = 1 - big
    if norms[other] > 0:
        dirs[other] = rows[other] / norms[other]
    else:
        a, b = dirs[big]
        dirs[other] = np.array([-np.conj(b), np.conj(a)])
    U_B = dirs.conj()  # row j is <y_j|
    U_A = np.eye(2, dtype=complex)
    if norms[1] > norms[0]:
        U_A = _X.copy()
        U_B = _X @ U_B
    return U_A, U_B


def _bell_coefficients(rho: np.ndarray, U: np.ndarray) -> tuple[float, complex]:
    """(a, b) of rho in the Bell pair pulled back through the local correction U."""
    plus = U.conj().T @ PHI_PLUS
    minus = U.conj().T @ PHI_MINUS
    pp = np.vdot(plus, rho @ plus).real
    mm = np.vdot(minus, rho @ minus).real
    pm = np.vdot(plus, rho @ minus)
    return float(pp - mm), complex(2 * pm)


def evaluate_strategy(params: ProtocolParams, strategy: MeasurementStrategy,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> Evaluation:
    """Per-outcome states and fidelities, the averaged performance point, and Alice's marginals.

    Each fidelity is computed twice, from the dephased and corrected density
    matrix and from the closed form (1 + |<v1|v0>| a_k) / 2; the two must agree.
    """
    if strategy.prepare_ground:
        params = ProtocolParams(1.0, 0.0, 0.0, params.alpha0, params.alpha1, params.T)
    span = PulseSpan.from_params(params)
    strategy.validate(span, tol)
    picture = equivalent_state(params)
    coeffs = picture.coefficients
    v_mag = abs(picture.v_overlap)
    frame = span.frame

    outcomes: list[OutcomeRecord] = []
    for k, m in enumerate(strategy.success_maps):
        chi = coeffs[:, None] * (m @ frame).T  # rows: c'_j M u_j
        p = float(np.vdot(chi, chi).real)
        if p < NEGLIGIBLE_PROBABILITY:
            continue
        psi = (chi / math.sqrt(p)).reshape(4)
        rho = np.outer(psi, psi.conj())
        U_A, U_B = correction_unitaries(chi, tol.compliance)
        U = np.kron(U_A, U_B)
        dephased = apply_phase_flip(FockOperator(rho, (2, 2)), picture.f).matrix
        tau = U @ dephased @ U.conj().T
        F = singlet_fraction(FockOperator(tau, (2, 2)))
        a, b = _bell_coefficients(rho, U)
        F_closed = 0.5 * (1.0 + v_mag * a)
        if abs(F - F_closed) > tol.violation:
            raise InvariantViolation(f"outcome {k}: fidelity {F!r} vs closed form {F_closed!r}")
        rho_a = partial_trace(FockOperator(rho, (2, 2)), 1).matrix
        odd = max(fidelity_to(FockOperator(tau, (2, 2)), PSI_PLUS),
                  fidelity_to(FockOperator(tau, (2, 2)), PSI_MINUS))
        outcomes.append(OutcomeRecord(
            k=k, p=p, rho=rho, tau=tau, F=F, F_closed=F_closed, a=a, b=b,
            z=bloch_vector(rho_a)[2], odd_leak=odd, alice_coherence=float(abs(rho_a[0, 1])),
            U_A=U_A, U_B=U_B,
        ))

    Ps = sum(o.p for o in outcomes)
    if Ps > 0:
        point = PerformancePoint(min(Ps, 1.0), sum(o.p * o.F for o in outcomes) / Ps)
        zs = sum(o.p * o.z for o in outcomes) / Ps
    else:
        point, zs = VACUOUS, 0.0

    gram = frame.conj().T @ frame  # gram[l, j] = <u_l|u_j>
    initial = np.outer(coeffs, coeffs.conj()) * gram.T
    defect = strategy.completeness_defect()
    failure = np.outer(coeffs, coeffs.conj()) * (frame.conj().T @ defect @ frame).T
    fail_weight = float(np.trace(failure).real)
    x0, y0, z0 = bloch_vector(initial)
    if fail_weight > NEGLIGIBLE_PROBABILITY:
        xf, yf, zf = bloch_vector(failure / fail_weight)
    else:
        xf = yf = zf = 0.0
    marginals = MarginalDecomposition(x0, y0, z0, zs, xf, yf, zf, Ps)
    return Evaluation(outcomes, point, marginals)


def lift_to_fock(strategy: MeasurementStrategy, span: PulseSpan, policy: TruncationPolicy) -> list[np.ndarray]:
    """Success maps as (2, cutoff) matrices acting on the truncated pulse space."""
    basis = span.fock_basis(policy)
    return [m @ basis.conj().T for m in strategy.success_maps]
