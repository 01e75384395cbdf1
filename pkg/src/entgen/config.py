"""Numeric tolerances shared by every module.

Keeping them in one record means a tolerance is changed in exactly one place,
and a caller that wants a stricter or looser run passes its own copy.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # truncation
    tail: float = 1e-12
    # density-operator sanity checks
    hermitian: float = 1e-12
    trace: float = 1e-10
    min_eigenvalue: float = 1e-10
    # exact identities in the two-component representation
    identity: float = 1e-12
    # per-outcome diagnostics and inequality checks
    violation: float = 1e-9
    # Fock oracle vs component representation
    cross_check: float = 1e-8
    # orthogonality of Bob's memory images, relative to their norms
    compliance: float = 1e-10
    # plane geometry (triangle containment)
    geometry: float = 1e-9
    # sampled hull vs analytic envelope
    hull: float = 5e-4


DEFAULT_TOLERANCES = Tolerances()
