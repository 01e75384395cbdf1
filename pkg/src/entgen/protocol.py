"""Exact state of the memory-pulse-environment system and its dephased equivalent.

Every pulse that appears here is a coherent state, so the whole tripartite
state is carried by two labelled components: a memory label, a complex
weight, and the coherent amplitudes that reach Bob (mode b) and leak to the
environment (mode E). All overlaps are then closed-form. The Fock-space
builders in this module exist only to cross-check that representation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .fock import (
    SIGMA_Z,
    FockOperator,
    TruncationPolicy,
    coherent_overlap,
    coherent_vector,
    pure,
    split_pulse,
    trace_distance,
)


class InvariantViolation(AssertionError):
    """An identity that must hold exactly (up to rounding) failed numerically."""


@dataclass(frozen=True)
class ProtocolParams:
    """Alice's preparation, the memory-conditioned pulse amplitudes, and the channel.

    The memory in state |j> leaves the pulse in the coherent state |alpha_j>;
    Alice prepares sqrt(q0) e^{i Theta0}|0> + sqrt(1-q0) e^{i Theta1}|1>.
    """

    q0: float
    Theta0: float
    Theta1: float
    alpha0: complex
    alpha1: complex
    T: float

    def __post_init__(self):
        if not 0.0 <= self.q0 <= 1.0:
            raise ValueError(f"q0 must lie in [0, 1], got {self.q0!r}")
        if not 0.0 < self.T < 1.0:
            raise ValueError(f"T must lie in (0, 1), got {self.T!r}")
        object.__setattr__(self, "alpha0", complex(self.alpha0))
        object.__setattr__(self, "alpha1", complex(self.alpha1))

    @property
    def q1(self) -> float:
        return 1.0 - self.q0

    @classmethod
    def phase_rotation(cls, alpha: complex, theta: float, T: float, q0: float = 0.5,
                       Theta0: float = 0.0, Theta1: float = 0.0) -> "ProtocolParams":
        """Dispersive-style interaction: alpha_j = alpha * exp(i (-1)^j theta)."""
        return cls(q0, Theta0, Theta1, alpha * cmath.exp(1j * theta), alpha * cmath.exp(-1j * theta), T)

    @classmethod
    def from_overlap(cls, u: float, T: float, q0: float = 0.5,
                     Theta0: float = 0.0, Theta1: float = 0.0) -> "ProtocolParams":
        """Real antipodal amplitudes +-beta chosen so that |<u1|u0>| equals ``u`` at Bob."""
        if not 0.0 < u <= 1.0:
            raise ValueError(f"overlap must lie in (0, 1], got {u!r}")
        # |<u1|u0>| = exp(-|sqrt(T) (alpha0 - alpha1)|^2 / 2) = exp(-2 T beta^2)
        beta = math.sqrt(-math.log(u) / (2.0 * T))
        return cls(q0, Theta0, Theta1, beta, -beta, T)


@dataclass(frozen=True)
class Component:
    label: int
    coefficient: complex
    b_amplitude: complex
    e_amplitude: complex


@dataclass(frozen=True)
class JointState:
    """sum_j c_j |j>_A |sqrt(T) alpha_j>_b |sqrt(1-T) alpha_j>_E."""

    components: tuple[Component, Component]
    T: float

    @property
    def u_overlap(self) -> complex:
        """<u1|u0>, overlap of the pulses arriving at Bob."""
        c0, c1 = self.components
        return coherent_overlap(c1.b_amplitude, c0.b_amplitude)

    @property
    def v_overlap(self) -> complex:
        """<v1|v0>, overlap of the environment's copies."""
        c0, c1 = self.components
        return coherent_overlap(c1.e_amplitude, c0.e_amplitude)

    def check(self, tol: float = DEFAULT_TOLERANCES.identity) -> None:
        if len(self.components) != 2:
            raise InvariantViolation("joint state must have exactly two components")
        weight = sum(abs(c.coefficient) ** 2 for c in self.components)
        if abs(weight - 1.0) > tol:
            raise InvariantViolation(f"component weights sum to {weight!r}")
        lhs = abs(self.u_overlap) ** (1.0 - self.T)
        rhs = abs(self.v_overlap) ** self.T
        if abs(lhs - rhs) > tol:
            raise InvariantViolation(f"overlap relation broken: {lhs!r} vs {rhs!r}")


@dataclass(frozen=True)
class EquivalentPicture:
    """Pure memory-pulse state followed by a phase flip of weight f on the memory.

    ``coefficients[j]`` multiplies |j>_A |u_j>_b, where |u_j> is the coherent
    state with amplitude ``b_amplitudes[j]``.
    """

    coefficients: np.ndarray
    b_amplitudes: np.ndarray
    f: float
    phi: float
    u_overlap: complex
    v_overlap: complex

    def fock_vector(self, policy: TruncationPolicy) -> np.ndarray:
        """Amplitudes psi'[j, n] on A (x) b."""
        rows = [c * coherent_vector(b, policy).amplitudes
                for c, b in zip(self.coefficients, self.b_amplitudes)]
        return np.array(rows)


def build_joint_state(params: ProtocolParams) -> JointState:
    sqrt_t = math.sqrt(params.T)
    sqrt_r = math.sqrt(1.0 - params.T)
    comps = []
    for j, (q, theta, alpha) in enumerate(
        ((params.q0, params.Theta0, params.alpha0), (params.q1, params.Theta1, params.alpha1))
    ):
        comps.append(Component(j, math.sqrt(q) * cmath.exp(1j * theta), sqrt_t * alpha, sqrt_r * alpha))
    state = JointState(tuple(comps), params.T)
    state.check()
    return state


def phase_flip_f(params: ProtocolParams, tol: float = DEFAULT_TOLERANCES.identity) -> float:
    """Weight of the identity branch in the memory dephasing caused by the leaked light."""
    joint = build_joint_state(params)
    f_env = 0.5 * (1.0 + abs(joint.v_overlap))
    u = abs(joint.u_overlap)
    # |<v1|v0>| re-derived from Bob's overlap alone, in log space
    f_bob = 0.5 * (1.0 + (math.exp((1.0 - params.T) / params.T * math.log(u)) if u > 0 else 0.0))
    if abs(f_env - f_bob) > tol:
        raise InvariantViolation(f"dephasing weight disagrees: {f_env!r} vs {f_bob!r}")
    return f_env


def equivalent_state(params: ProtocolParams) -> EquivalentPicture:
    joint = build_joint_state(params)
    v = joint.v_overlap
    phi = 0.5 * cmath.phase(v)  # principal branch
    coeffs = np.array([
        joint.components[0].coefficient * cmath.exp(1j * phi),
        joint.components[1].coefficient * cmath.exp(-1j * phi),
    ])
    b_amps = np.array([c.b_amplitude for c in joint.components])
    return EquivalentPicture(coeffs, b_amps, phase_flip_f(params), phi, joint.u_overlap, v)


def apply_phase_flip(rho: FockOperator, f: float) -> FockOperator:
    """f rho + (1-f) Z_A rho Z_A with the memory qubit as the first factor."""
    if not 0.5 <= f <= 1.0:
        raise ValueError(f"phase-flip weight must lie in [1/2, 1], got {f!r}")
    if rho.factor_dims[0] != 2:
        raise ValueError("first tensor factor must be the memory qubit")
    rest = rho.dim // 2
    z = np.kron(SIGMA_Z, np.eye(rest))
    return FockOperator(f * rho.matrix + (1.0 - f) * (z @ rho.matrix @ z), rho.factor_dims)


def lossy_memory_pulse_state(params: ProtocolParams, policy: TruncationPolicy) -> FockOperator:
    """Tr_E of the full memory-pulse-environment state, built photon by photon."""
    rows = []
    for q, theta, alpha in ((params.q0, params.Theta0, params.alpha0),
                            (params.q1, params.Theta1, params.alpha1)):
        pulse = coherent_vector(alpha, policy)
        rows.append(math.sqrt(q) * cmath.exp(1j * theta) * split_pulse(pulse, params.T))
    psi = np.array(rows)  # [j, n_b, n_E]
    rho = np.einsum("ibe,jce->ibjc", psi, psi.conj())
    n = policy.cutoff
    return FockOperator(rho.reshape(2 * n, 2 * n), (2, n))


def equivalence_check(params: ProtocolParams, policy: TruncationPolicy | None = None) -> float:
    """Trace distance between the lossy state and the dephased equivalent, both in Fock space."""
    if policy is None:
        policy = TruncationPolicy.for_amplitudes(params.alpha0, params.alpha1)
    policy.require(params.alpha0, params.alpha1)
    real = lossy_memory_pulse_state(params, policy)
    picture = equivalent_state(params)
    imagined = apply_phase_flip(pure(picture.fock_vector(policy), (2, policy.cutoff)), picture.f)
    return trace_distance(real, imagined)
