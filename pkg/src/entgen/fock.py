"""Truncated Fock-space linear algebra.

Dense complex vectors and matrices over one or more tensor factors. This
layer is deliberately naive: it builds every state explicitly so that it can
serve as a brute-force cross-check for the closed-form two-component
representation used elsewhere in the package.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammainc, gammaln

from .config import DEFAULT_TOLERANCES


class TruncationError(ValueError):
    """Raised when a photon-number cutoff is too small for a coherent amplitude."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class TruncationPolicy:
    """Photon-number cutoff plus the largest tail mass we are willing to drop."""

    cutoff: int
    tail_tol: float = DEFAULT_TOLERANCES.tail

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"cutoff must be a positive integer, got {self.cutoff!r}")
        if not self.tail_tol > 0:
            raise ValueError(f"tail_tol must be positive, got {self.tail_tol!r}")

    def tail_mass(self, gamma: complex) -> float:
        """Poisson probability of n >= cutoff photons in the coherent state |gamma>."""
        mean = abs(gamma) ** 2
        if mean == 0.0:
            return 0.0
        # regularized lower incomplete gamma P(N, mu) = Prob[Poisson(mu) >= N]
        return float(gammainc(self.cutoff, mean))

    def admits(self, gamma: complex) -> bool:
        return self.tail_mass(gamma) < self.tail_tol

    def require(self, *gammas: complex) -> None:
        for gamma in gammas:
            tail = self.tail_mass(gamma)
            if not tail < self.tail_tol:
                raise TruncationError(
                    f"cutoff {self.cutoff} drops tail mass {tail:.3g} for |alpha|={abs(gamma):.4g} "
                    f"(allowed {self.tail_tol:.1g})"
                )

    @classmethod
    def for_amplitudes(cls, *gammas: complex, tail_tol: float = DEFAULT_TOLERANCES.tail) -> "TruncationPolicy":
        """Smallest cutoff N >= m + 10*sqrt(m + 1) + 20 with m the largest mean photon number."""
        mean = max((abs(g) ** 2 for g in gammas), default=0.0)
        cutoff = math.ceil(mean + 10.0 * math.sqrt(mean + 1.0) + 20.0)
        policy = cls(cutoff, tail_tol)
        policy.require(*gammas)
        return policy


@dataclass(frozen=True)
class PulseState:
    """Single-mode state vector, amplitudes indexed by photon number."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes must be a non-empty 1-d array")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def mean_photon_number(self) -> float:
        n = np.arange(self.cutoff)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))

    def inner(self, other: "PulseState") -> complex:
        """<self|other>."""
        if other.cutoff != self.cutoff:
            raise ValueError("cutoff mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "FockOperator":
        return FockOperator(np.outer(self.amplitudes, self.amplitudes.conj()), (self.cutoff,))


@dataclass(frozen=True)
class FockOperator:
    """Square matrix over a tensor product with the given factor dimensions."""

    matrix: np.ndarray
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        mat = np.asarray(self.matrix)
        dims = tuple(int(d) for d in self.factor_dims)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator must be square, got shape {mat.shape}")
        if int(np.prod(dims)) != mat.shape[0]:
            raise ValueError(f"factor dims {dims} do not multiply to {mat.shape[0]}")
        object.__setattr__(self, "matrix", _frozen(mat))
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def check_density(self, tol=DEFAULT_TOLERANCES) -> None:
        """Raise ValueError unless Hermitian, unit trace and positive semidefinite."""
        mat = self.matrix
        herm = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
        if herm > tol.hermitian:
            raise ValueError(f"not Hermitian (deviation {herm:.3g})")
        if abs(self.trace() - 1.0) > tol.trace:
            raise ValueError(f"trace {self.trace():.12g} is not 1")
        lowest = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0]
        if lowest < -tol.min_eigenvalue:
            raise ValueError(f"negative eigenvalue {lowest:.3g}")


def pure(vector: np.ndarray, factor_dims: Sequence[int] | None = None) -> FockOperator:
    """|v><v| as an operator; the vector may be given with one axis per factor."""
    vec = np.asarray(vector, dtype=complex)
    dims = tuple(factor_dims) if factor_dims is not None else vec.shape
    flat = vec.reshape(-1)
    return FockOperator(np.outer(flat, flat.conj()), dims)


# --- coherent states -------------------------------------------------------


def coherent_vector(alpha: complex, policy: TruncationPolicy) -> PulseState:
    """Truncated coherent state |alpha>.

    Raises TruncationError when the neglected Poisson tail exceeds the policy's
    tolerance.
    """
    policy.require(alpha)
    amps = np.empty(policy.cutoff, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, policy.cutoff):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return PulseState(amps)


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """Exact inner product <alpha|beta> of two coherent states."""
    alpha, beta = complex(alpha), complex(beta)
    # real part of the exponent is -|alpha - beta|^2 / 2, so the modulus never exceeds 1
    return cmath.exp(complex(-0.5 * abs(alpha - beta) ** 2, (alpha.conjugate() * beta).imag))


# --- loss channel ----------------------------------------------------------


def _check_transmittance(T: float) -> None:
    if not 0.0 < T < 1.0:
        raise ValueError(f"transmittance must lie in (0, 1), got {T!r}")


@lru_cache(maxsize=64)
def _loss_kraus_cached(T: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    k = n[:, None]  # photons kept in b
    m = n[None, :]  # photons lost to E
    log_coeff = (
        0.5 * (gammaln(k + m + 1) - gammaln(k + 1) - gammaln(m + 1))
        + 0.5 * k * math.log(T)
        + 0.5 * m * math.log1p(-T)
    )
    kraus = np.zeros((cutoff, cutoff, cutoff))  # [m, k, n_in]
    valid = (k + m) < cutoff
    kk, mm = np.nonzero(valid)
    kraus[mm, kk, kk + mm] = np.exp(log_coeff[kk, mm])
    kraus.flags.writeable = False
    return kraus


def loss_kraus(T: float, cutoff: int) -> np.ndarray:
    """Kraus operators K_m = <m|_E N of the pure-loss channel, stacked as [m, out, in].

    N is the beamsplitter isometry |n> -> sum_k sqrt(C(n,k) T^k (1-T)^(n-k)) |k>_b |n-k>_E,
    i.e. a^dag -> sqrt(T) b^dag + sqrt(1-T) e^dag acting on a vacuum environment.
    Photon number is conserved, so the truncated map is exact on the truncated input.
    """
    _check_transmittance(T)
    return _loss_kraus_cached(float(T), int(cutoff))


def loss_isometry(T: float, cutoff: int) -> np.ndarray:
    """Isometry matrix of shape (cutoff**2, cutoff) from mode a into b (x) E, b index major."""
    kraus = loss_kraus(T, cutoff)
    return np.transpose(kraus, (1, 0, 2)).reshape(cutoff * cutoff, cutoff)


def split_pulse(state: PulseState, T: float) -> np.ndarray:
    """Joint amplitudes psi[n_b, n_E] after sending ``state`` through the loss isometry."""
    kraus = loss_kraus(T, state.cutoff)
    return np.einsum("mkn,n->km", kraus, state.amplitudes)


def apply_loss(state: PulseState | FockOperator, T: float, mode: int = 0) -> FockOperator:
    """Pure-loss channel on one mode, environment traced out.

    For a FockOperator, ``mode`` selects the tensor factor that carries the pulse.
    """
    _check_transmittance(T)
    if isinstance(state, PulseState):
        joint = split_pulse(state, T)
        return FockOperator(joint @ joint.conj().T, (state.cutoff,))

    dims = state.factor_dims
    kraus = loss_kraus(T, dims[mode])
    left = int(np.prod(dims[:mode]))
    right = int(np.prod(dims[mode + 1:]))
    out = np.zeros_like(state.matrix)
    for k_m in kraus:
        lifted = np.kron(np.kron(np.eye(left), k_m), np.eye(right))
        out += lifted @ state.matrix @ lifted.conj().T
    return FockOperator(out, dims)


# --- multilinear utilities -------------------------------------------------


def tensor(*ops: FockOperator) -> FockOperator:
    if not ops:
        raise ValueError("tensor of nothing")
    mat = ops[0].matrix
    dims = list(ops[0].factor_dims)
    for op in ops[1:]:
        mat = np.kron(mat, op.matrix)
        dims.extend(op.factor_dims)
    return FockOperator(mat, tuple(dims))


def partial_trace(op: FockOperator, trace_out: int | Sequence[int]) -> FockOperator:
    """Trace out the listed factors, keeping the rest in their original order."""
    drop = {trace_out} if isinstance(trace_out, int) else set(trace_out)
    dims = op.factor_dims
    if not drop <= set(range(len(dims))):
        raise ValueError(f"factor index out of range for dims {dims}")
    n = len(dims)
    tens = op.matrix.reshape(dims + dims)
    # trace highest index first so the remaining axis numbers stay valid
    for idx in sorted(drop, reverse=True):
        tens = np.trace(tens, axis1=idx, axis2=idx + n)
        n -= 1
    keep = tuple(d for i, d in enumerate(dims) if i not in drop)
    size = int(np.prod(keep)) if keep else 1
    return FockOperator(tens.reshape(size, size), keep if keep else (1,))


def trace_distance(rho: FockOperator, sigma: FockOperator) -> float:
    """Half the trace norm of rho - sigma."""
    if rho.factor_dims != sigma.factor_dims:
        raise ValueError(f"dimension mismatch {rho.factor_dims} vs {sigma.factor_dims}")
    diff = rho.matrix - sigma.matrix
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def fidelity_to(rho: FockOperator, target: np.ndarray) -> float:
    """<target| rho |target> for a normalized pure target."""
    vec = np.asarray(target, dtype=complex).reshape(-1)
    if vec.size != rho.dim:
        raise ValueError(f"target has dimension {vec.size}, operator {rho.dim}")
    return float(np.real(np.vdot(vec, rho.matrix @ vec)))


def singlet_fraction(tau: FockOperator) -> float:
    """<Phi+| tau |Phi+> for a two-qubit operator, read off the four relevant entries."""
    if tau.factor_dims != (2, 2):
        raise ValueError(f"expected a two-qubit operator, got dims {tau.factor_dims}")
    m = tau.matrix
    return float(0.5 * (m[0, 0].real + m[3, 3].real) + m[0, 3].real)


# --- qubit constants -------------------------------------------------------

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.flags.writeable = False

_S = 1 / math.sqrt(2)
PHI_PLUS = _frozen([_S, 0, 0, _S])
PHI_MINUS = _frozen([_S, 0, 0, -_S])
PSI_PLUS = _frozen([0, _S, _S, 0])
PSI_MINUS = _frozen([0, _S, -_S, 0])


def bloch_vector(rho: np.ndarray) -> tuple[float, float, float]:
    """(x, y, z) with rho = (1 + x X + y Y + z Z) / 2 (not renormalized)."""
    rho = np.asarray(rho)
    return (
        float(2 * rho[0, 1].real),
        float(-2 * rho[0, 1].imag),
        float((rho[0, 0] - rho[1, 1]).real),
    )
