"""Reduction of N-particle counting observables to single-particle dynamics.

For a free gas prepared with occupations n_a in orthonormal modes psi_a and a
measurement M counting particles in orthonormal modes phi_i, the many-body
expectation factorizes exactly:

    tr[rho(t) M] = sum_a n_a tr[psi_a(t) P] = N tr[sigma(t) P],

with sigma = (1/N) sum_a n_a |psi_a><psi_a| and P = sum_i |phi_i><phi_i|.
When the initial modes are not occupation-diagonal, diagonalizing the
two-point correlation matrix produces modes that are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    ORTHO_TOL,
    ProjectorObservable,
    SpectralSystem,
    StateSP,
    average_expectation,
    evolve,
    expectation_P,
)

OCCUPATION_INT_TOL = 1e-8


@dataclass
class ModeEnsemble:
    """Orthonormal single-particle modes with occupation numbers.

    ``occupations`` are kept as floats: they are integers for the states of
    interest, but correlation-matrix eigenvalues of a general density operator
    need not be; ``exact_integers`` records which case applies.
    """

    statistics: str
    vectors: np.ndarray        # d x m, orthonormal columns
    occupations: np.ndarray    # m nonnegative floats
    exact_integers: bool = True

    def __post_init__(self):
        if self.statistics not in ("fermion", "boson"):
            raise ValueError("statistics must be 'fermion' or 'boson'")
        self.vectors = np.asarray(self.vectors, dtype=complex)
        self.occupations = np.asarray(self.occupations, dtype=float)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != len(self.occupations):
            raise ValueError("one occupation per mode vector required")
        gram = self.vectors.conj().T @ self.vectors
        dev = np.abs(gram - np.eye(self.vectors.shape[1])).max()
        if dev > ORTHO_TOL:
            raise ValueError(f"ensemble modes not orthonormal (deviation {dev:.2e})")
        if np.any(self.occupations < -OCCUPATION_INT_TOL):
            raise ValueError("negative occupation")
        if self.statistics == "fermion" and np.any(self.occupations > 1 + OCCUPATION_INT_TOL):
            raise ValueError("fermion occupation exceeds 1")

    @property
    def N(self) -> float:
        total = float(self.occupations.sum())
        return round(total) if abs(total - round(total)) < OCCUPATION_INT_TOL else total

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


@dataclass
class CorrelationMatrix:
    """Two-point function C_ab = tr[rho d_a^dag d_b] in some mode basis."""

    C: np.ndarray
    statistics: str = "fermion"

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=complex)
        if self.C.ndim != 2 or self.C.shape[0] != self.C.shape[1]:
            raise ValueError("correlation matrix must be square")
        if np.abs(self.C - self.C.conj().T).max() > ORTHO_TOL:
            raise ValueError("correlation matrix not Hermitian")
        if self.statistics not in ("fermion", "boson"):
            raise ValueError("statistics must be 'fermion' or 'boson'")


def reduce_to_single_particle(ensemble: ModeEnsemble, observable: ProjectorObservable):
    """The exact N-particle -> single-particle replacement.

    Returns (sigma, P, occupations) with sigma the weighted mode mixture and P
    the observable's projector, satisfying
    tr[rho(t) M] = N * tr[sigma(t) P] for all t.
    """
    if ensemble.dim != observable.dim:
        raise ValueError("ensemble/observable dimension mismatch")
    occ = ensemble.occupations
    total = occ.sum()
    if total <= 0:
        raise ValueError("ensemble holds no particles")
    keep = occ > OCCUPATION_INT_TOL
    sigma = StateSP.mixed(occ[keep] / total, ensemble.vectors[:, keep])
    return sigma, observable, occ.copy()


def diagonalize_correlations(corr: CorrelationMatrix, raw_modes) -> ModeEnsemble:
    """Rotate modes so the two-point function is occupation-diagonal.

    The rotated creation operators are a_a^dag = sum_b U_ab d_b^dag with U
    diagonalizing C; occupations are C's eigenvalues, rounded to integers when
    within 1e-8 of one (otherwise the ensemble is flagged thermal-like and the
    fractional values kept).
    """
    raw = np.asarray(raw_modes, dtype=complex)
    if raw.shape[1] != corr.C.shape[0]:
        raise ValueError("raw mode count must match correlation matrix size")
    evals, evecs = np.linalg.eigh(corr.C)          # C = W diag W^dag
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    lo = -OCCUPATION_INT_TOL
    hi = 1 + OCCUPATION_INT_TOL if corr.statistics == "fermion" else np.inf
    if np.any(evals < lo) or np.any(evals > hi):
        raise ValueError("correlation eigenvalue outside range allowed by statistics")
    rounded = np.round(evals)
    exact = bool(np.all(np.abs(evals - rounded) < OCCUPATION_INT_TOL))
    occ = np.clip(rounded, 0, None) if exact else evals.clip(min=0.0)
    # a_a^dag = sum_b U_ab d_b^dag with U = W^dag, so the new mode vectors are
    # raw @ U^T = raw @ conj(W)
    vectors = raw @ evecs.conj()
    return ModeEnsemble(statistics=corr.statistics, vectors=vectors,
                        occupations=occ, exact_integers=exact)


def delta_M(ensemble: ModeEnsemble, observable: ProjectorObservable,
            sys: SpectralSystem, t: float) -> float:
    """Normalized deviation of the counting observable from its time average.

    Delta_M(t) = |tr[rho(t) M] - tr[<rho> M]| / ||M|| with ||M|| = N on the
    N-particle sector; by the reduction this equals the single-particle
    distinguishability of sigma(t) from <sigma> under P.
    """
    sigma, proj, _ = reduce_to_single_particle(ensemble, observable)
    now = expectation_P(evolve(sys, sigma, t), proj)
    avg = average_expectation(sys, sigma, proj)
    return abs(now - avg)
