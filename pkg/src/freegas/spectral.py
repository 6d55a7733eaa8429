"""Single-particle spectral systems: states, evolution, averages, distinguishability.

Everything downstream works with a Hamiltonian given as sorted eigenvalues plus
an orthonormal eigenbasis expressed in a fixed reference basis.  States are pure
vectors or orthonormal mixtures, observables are mode projectors (or, where a
rank decomposition is unnatural, plain Hermitian matrices in the reference
basis).  Infinite-time averages are computed algebraically by dephasing, never
by long-time simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-10
#: default gap-clustering tolerance, relative to the spectral range
EPS_GAP_DEFAULT = 1e-9


def _as_complex_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    return a


@dataclass
class SpectralSystem:
    """A single-particle Hamiltonian as eigenvalues + eigenvector columns (hbar = 1)."""

    energies: np.ndarray
    eigenvectors: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.eigenvectors = np.asarray(self.eigenvectors, dtype=complex)
        d = len(self.energies)
        if self.eigenvectors.shape != (d, d):
            raise ValueError("eigenvector matrix must be d x d with d = len(energies)")
        if np.any(np.diff(self.energies) < 0):
            raise ValueError("energies must be sorted ascending")
        dev = np.abs(self.eigenvectors.conj().T @ self.eigenvectors - np.eye(d)).max()
        if dev > ORTHO_TOL:
            raise ValueError(f"eigenvector matrix not unitary (deviation {dev:.2e})")

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def spectral_range(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @classmethod
    def from_hamiltonian(cls, h, label: str = "") -> "SpectralSystem":
        h = np.asarray(h, dtype=complex)
        if np.abs(h - h.conj().T).max() > 1e-12 * max(1.0, np.abs(h).max()):
            raise ValueError("Hamiltonian must be Hermitian")
        evals, evecs = np.linalg.eigh(h)
        return cls(energies=evals, eigenvectors=evecs, label=label)

    @classmethod
    def diagonal(cls, energies, label: str = "") -> "SpectralSystem":
        """System whose reference basis is already the energy eigenbasis."""
        energies = np.asarray(energies, dtype=float)
        return cls(energies=energies, eigenvectors=np.eye(len(energies), dtype=complex),
                   label=label)

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.energies * t)

    def to_eigenbasis(self, vectors: np.ndarray) -> np.ndarray:
        return self.eigenvectors.conj().T @ vectors

    def from_eigenbasis(self, vectors: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ vectors


class StateSP:
    """Pure state or orthonormal mixture of a d-dimensional single-particle system.

    Mixtures are stored as (weights, orthonormal column vectors), the shape the
    many-body reduction produces; this keeps every operation O(d^2 r) instead of
    O(d^2) dense-matrix work per component.
    """

    def __init__(self, weights, vectors):
        self.weights = np.asarray(weights, dtype=float)
        self.vectors = _as_complex_matrix(vectors)
        if self.weights.ndim != 1 or self.vectors.shape[1] != len(self.weights):
            raise ValueError("need one weight per component vector")
        if np.any(self.weights < -ORTHO_TOL):
            raise ValueError("negative mixture weight")
        if abs(self.weights.sum() - 1.0) > ORTHO_TOL:
            raise ValueError("mixture weights must sum to 1")
        gram = self.vectors.conj().T @ self.vectors
        dev = np.abs(gram - np.eye(self.vectors.shape[1])).max()
        if dev > ORTHO_TOL:
            raise ValueError(f"component vectors not orthonormal (deviation {dev:.2e})")

    @classmethod
    def pure(cls, vector) -> "StateSP":
        v = np.asarray(vector, dtype=complex)
        return cls(np.array([1.0]), v[:, None])

    @classmethod
    def mixed(cls, weights, vectors) -> "StateSP":
        return cls(weights, vectors)

    @property
    def kind(self) -> str:
        return "pure" if self.n_components == 1 else "mixed"

    @property
    def n_components(self) -> int:
        return self.vectors.shape[1]

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def density_matrix(self) -> np.ndarray:
        return (self.vectors * self.weights) @ self.vectors.conj().T


@dataclass
class ProjectorObservable:
    """P = sum_i |phi_i><phi_i| for orthonormal modes phi_i (columns)."""

    modes: np.ndarray

    def __post_init__(self):
        self.modes = _as_complex_matrix(self.modes)
        d, r = self.modes.shape
        if r > d:
            raise ValueError("projector rank exceeds dimension")
        if r:
            gram = self.modes.conj().T @ self.modes
            dev = np.abs(gram - np.eye(r)).max()
            if dev > ORTHO_TOL:
                raise ValueError(f"projector modes not orthonormal (deviation {dev:.2e})")

    @classmethod
    def empty(cls, dim: int) -> "ProjectorObservable":
        return cls(np.zeros((dim, 0), dtype=complex))

    @property
    def rank(self) -> int:
        return self.modes.shape[1]

    @property
    def dim(self) -> int:
        return self.modes.shape[0]

    def matrix(self) -> np.ndarray:
        return self.modes @ self.modes.conj().T


@dataclass
class GapStructure:
    """Inter-level gap statistics of a spectrum under eps_gap clustering.

    ``gaps`` lists (positive gap value, multiplicity) over ordered level pairs
    with E_i > E_j; signed gaps come in +/- pairs with identical multiplicity,
    so D_G computed on the positive list equals D_G over signed gaps.
    """

    gaps: list
    D_G: int
    n_d: int
    eps_gap: float
    level_values: np.ndarray = field(default=None, repr=False)
    level_counts: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.D_G < 1:
            raise ValueError("D_G >= 1 required")


def _observable_matrix(obs) -> np.ndarray:
    if isinstance(obs, ProjectorObservable):
        return obs.matrix()
    return np.asarray(obs, dtype=complex)


def cluster_levels(energies: np.ndarray, eps_gap: float = EPS_GAP_DEFAULT):
    """Group sorted energies into levels by single-linkage with tolerance
    eps_gap relative to the spectral range.  Returns (level value means,
    counts, member slice indices)."""
    e = np.asarray(energies, dtype=float)
    rng = e[-1] - e[0] if len(e) > 1 else 0.0
    tol = eps_gap * rng
    if len(e) == 0:
        raise ValueError("empty spectrum")
    breaks = np.where(np.diff(e) > tol)[0] + 1
    bounds = np.concatenate(([0], breaks, [len(e)]))
    values = np.array([e[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
    counts = np.diff(bounds)
    return values, counts, bounds


def gap_structure(sys: SpectralSystem, eps_gap: float = EPS_GAP_DEFAULT) -> GapStructure:
    """Cluster the spectrum, enumerate all inter-level gaps and their
    multiplicities.  D_G is the largest multiplicity among nonzero gaps,
    n_d the largest level degeneracy."""
    if eps_gap <= 0:
        raise ValueError("eps_gap must be positive")
    values, counts, _ = cluster_levels(sys.energies, eps_gap)
    n_d = int(counts.max())
    if len(values) < 2:
        return GapStructure(gaps=[], D_G=1, n_d=n_d, eps_gap=eps_gap,
                            level_values=values, level_counts=counts)
    diffs = []
    for j in range(1, len(values)):
        diffs.append(values[j] - values[:j])
    g = np.sort(np.concatenate(diffs))
    tol = eps_gap * (values[-1] - values[0])
    breaks = np.where(np.diff(g) > tol)[0] + 1
    bounds = np.concatenate(([0], breaks, [len(g)]))
    gaps = [(float(g[a:b].mean()), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:])]
    D_G = max(m for _, m in gaps)
    return GapStructure(gaps=gaps, D_G=D_G, n_d=n_d, eps_gap=eps_gap,
                        level_values=values, level_counts=counts)


def evolve(sys: SpectralSystem, state: StateSP, t: float) -> StateSP:
    """Apply e^{-iHt} to every component through the spectral decomposition."""
    if state.dim != sys.dim:
        raise ValueError("state/system dimension mismatch")
    coeff = sys.to_eigenbasis(state.vectors)
    coeff = sys.phases(t)[:, None] * coeff
    return StateSP(state.weights, sys.from_eigenbasis(coeff))


def expectation_P(state: StateSP, obs) -> float:
    """tr[rho P]; 'obs' is a ProjectorObservable or an operator matrix in the
    reference basis.  For true projectors the result lies in [0, 1]."""
    if isinstance(obs, ProjectorObservable):
        if obs.dim != state.dim:
            raise ValueError("state/observable dimension mismatch")
        if obs.rank == 0:
            return 0.0
        amp = obs.modes.conj().T @ state.vectors
        val = float(np.sum(state.weights * np.sum(np.abs(amp) ** 2, axis=0)))
        if not -ORTHO_TOL <= val <= 1.0 + ORTHO_TOL:
            raise ValueError(f"projector expectation {val} outside [0,1]")
        return min(max(val, 0.0), 1.0)
    a = _observable_matrix(obs)
    if a.shape[0] != state.dim:
        raise ValueError("state/observable dimension mismatch")
    vals = np.einsum("ic,ij,jc->c", state.vectors.conj(), a, state.vectors)
    return float(np.real(state.weights @ vals))


def time_average_state(sys: SpectralSystem, state: StateSP,
                       eps_gap: float = EPS_GAP_DEFAULT) -> np.ndarray:
    """Infinite-time average of rho(t) as a dense matrix in the reference basis.

    Works by dephasing: coherences between distinct (eps_gap-clustered) energy
    levels are removed, blocks within a degenerate level are kept.
    """
    if state.dim != sys.dim:
        raise ValueError("state/system dimension mismatch")
    coeff = sys.to_eigenbasis(state.vectors)          # d x r
    _, _, bounds = cluster_levels(sys.energies, eps_gap)
    rho_e = np.zeros((sys.dim, sys.dim), dtype=complex)
    for a, b in zip(bounds[:-1], bounds[1:]):
        block = coeff[a:b]                            # members of one level
        rho_e[a:b, a:b] = (block * state.weights) @ block.conj().T
    return sys.from_eigenbasis(sys.from_eigenbasis(rho_e.conj().T).conj().T)


def average_expectation(sys: SpectralSystem, state: StateSP, obs,
                        eps_gap: float = EPS_GAP_DEFAULT) -> float:
    """tr[<rho> P] without forming the dense averaged state."""
    coeff = sys.to_eigenbasis(state.vectors)
    a_e = sys.to_eigenbasis(sys.to_eigenbasis(_observable_matrix(obs)).conj().T).conj().T
    _, _, bounds = cluster_levels(sys.energies, eps_gap)
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        block = coeff[a:b]
        rho_block = (block * state.weights) @ block.conj().T
        total += float(np.real(np.sum(rho_block.T * a_e[a:b, a:b])))
    return total


def distinguishability(sys: SpectralSystem, state: StateSP, obs, t: float,
                       eps_gap: float = EPS_GAP_DEFAULT) -> float:
    """|tr[rho(t) P] - tr[<rho> P]|, the single-measurement distinguishability."""
    now = expectation_P(evolve(sys, state, t), obs)
    return abs(now - average_expectation(sys, state, obs, eps_gap))


def expectation_series(sys: SpectralSystem, state: StateSP, obs,
                       times: np.ndarray) -> np.ndarray:
    """tr[rho(t) P] on a time grid, vectorized over t.

    Uses tr[rho(t) A] = u(t)^dag B u(t) with u(t) = e^{-iEt} and
    B = A_eig * rho_eig^T, so each time point costs O(d^2).
    """
    times = np.asarray(times, dtype=float)
    coeff = sys.to_eigenbasis(state.vectors)
    rho_e = (coeff * state.weights) @ coeff.conj().T
    a_e = sys.to_eigenbasis(sys.to_eigenbasis(_observable_matrix(obs)).conj().T).conj().T
    b = a_e * rho_e.T
    out = np.empty(len(times))
    chunk = max(1, int(2e6 // max(sys.dim, 1)))
    for i in range(0, len(times), chunk):
        u = np.exp(-1j * np.outer(sys.energies, times[i:i + chunk]))   # d x nt
        out[i:i + chunk] = np.sum(u.conj() * (b @ u), axis=0).real
    return out


def distinguishability_series(sys: SpectralSystem, state: StateSP, obs,
                              times: np.ndarray,
                              eps_gap: float = EPS_GAP_DEFAULT) -> np.ndarray:
    """|tr[rho(t) P] - tr[<rho> P]| on a time grid."""
    ref = average_expectation(sys, state, obs, eps_gap)
    return np.abs(expectation_series(sys, state, obs, times) - ref)


def windowed_average_expectation(sys: SpectralSystem, state: StateSP, obs,
                                 T: float) -> float:
    """Exact uniform average of tr[rho(t) P] over [0, T].

    The expectation is a trigonometric polynomial in t, so the window average
    integrates in closed form; no time grid (hence no aliasing) is involved.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    coeff = sys.to_eigenbasis(state.vectors)
    rho_e = (coeff * state.weights) @ coeff.conj().T
    a_e = sys.to_eigenbasis(sys.to_eigenbasis(_observable_matrix(obs)).conj().T).conj().T
    b = a_e * rho_e.T
    gaps = sys.energies[:, None] - sys.energies[None, :]   # E_n - E_m
    x = gaps * T
    small = np.abs(x) < 1e-12
    xs = np.where(small, 1.0, x)
    # (1/T) int_0^T e^{i g t} dt
    window = np.where(small, 1.0, (np.exp(1j * xs) - 1.0) / (1j * xs))
    return float(np.real(np.sum(b * window)))


def density_of_states(sys: SpectralSystem, n_bins: int):
    """Eigenvalue histogram normalized so its integral equals d.

    Returns (bin_edges, heights, n_max) where heights are states per unit
    energy and n_max is the tallest bin.
    """
    if n_bins < 2:
        raise ValueError("need n_bins >= 2")
    if sys.dim < 2:
        raise ValueError("density of states needs at least 2 levels")
    counts, edges = np.histogram(sys.energies, bins=n_bins)
    width = edges[1] - edges[0]
    heights = counts / width
    return edges, heights, float(heights.max())
