"""Brute-force many-body simulator on small Fock spaces.

This is the validation oracle: exact second-quantized dynamics by dense
diagonalization, used to check the single-particle reduction, Wick/Pfaffian
formulas and fluctuation bounds on instances small enough to enumerate.
Never a performance path; the dimension is capped at 4096.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .spectral import SpectralSystem, cluster_levels, gap_structure

DIM_CAP = 4096
ALGEBRA_TOL = 1e-12


@dataclass
class FockSpace:
    """Occupation-number basis for m modes of fermions or truncated bosons.

    Jordan-Wigner-style sign bookkeeping for fermions uses the fixed mode
    ordering given by the reference-basis index.
    """

    statistics: str
    m: int
    n_max_per_mode: int = 4
    basis: list = field(init=False, repr=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.statistics not in ("fermion", "boson"):
            raise ValueError("statistics must be 'fermion' or 'boson'")
        if self.statistics == "fermion":
            self.n_max_per_mode = 1
        cap = self.n_max_per_mode + 1
        if cap ** self.m > DIM_CAP:
            raise ValueError(
                f"Fock dimension {cap ** self.m} exceeds cap {DIM_CAP}")
        self.basis = list(itertools.product(range(cap), repeat=self.m))
        self.index = {occ: i for i, occ in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index[(0,) * self.m]] = 1.0
        return v

    def annihilation(self, mode: int) -> sp.csr_matrix:
        """Matrix of a_mode, with fermionic signs fixed by mode ordering."""
        rows, cols, vals = [], [], []
        for j, occ in enumerate(self.basis):
            n = occ[mode]
            if n == 0:
                continue
            new = list(occ)
            new[mode] = n - 1
            i = self.index[tuple(new)]
            if self.statistics == "fermion":
                sign = (-1) ** sum(occ[:mode])
                vals.append(float(sign))
            else:
                vals.append(np.sqrt(n))
            rows.append(i)
            cols.append(j)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    def creation(self, mode: int) -> sp.csr_matrix:
        return self.annihilation(mode).conj().T.tocsr()

    def annihilation_of(self, vector) -> sp.csr_matrix:
        """a(psi) = sum_i conj(psi_i) a_i for a single-particle vector psi."""
        v = np.asarray(vector, dtype=complex)
        if len(v) != self.m:
            raise ValueError("mode vector length must equal mode count")
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for i, c in enumerate(v):
            if c != 0:
                out = out + np.conj(c) * self.annihilation(i)
        return out

    def creation_of(self, vector) -> sp.csr_matrix:
        return self.annihilation_of(vector).conj().T.tocsr()

    def total_number(self) -> np.ndarray:
        return np.diag([float(sum(occ)) for occ in self.basis])


@dataclass
class ManyBodyOperator:
    matrix: np.ndarray
    descriptor: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("operator matrix must be square")


def counting_operator(space: FockSpace, modes) -> ManyBodyOperator:
    """M = sum_i b_i^dag b_i counting particles in the given modes (columns)."""
    modes = np.asarray(modes, dtype=complex)
    if modes.ndim == 1:
        modes = modes[:, None]
    m = np.zeros((space.dim, space.dim), dtype=complex)
    for col in modes.T:
        b = space.annihilation_of(col)
        m += (b.conj().T @ b).toarray()
    return ManyBodyOperator(m, descriptor=f"counter on {modes.shape[1]} modes")


def build_hamiltonian(space: FockSpace, sys: SpectralSystem) -> ManyBodyOperator:
    """Second-quantized H = sum_E E a^dag(|E>) a(|E>)."""
    if space.m != sys.dim:
        raise ValueError("mode count must equal single-particle dimension")
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for e, col in zip(sys.energies, sys.eigenvectors.T):
        a = space.annihilation_of(col)
        h += e * (a.conj().T @ a).toarray()
    return ManyBodyOperator(h, descriptor=f"free Hamiltonian '{sys.label}'")


class FockHamiltonian:
    """Diagonalized many-body Hamiltonian with exact evolution helpers."""

    def __init__(self, space: FockSpace, op: ManyBodyOperator):
        if np.abs(op.matrix - op.matrix.conj().T).max() > 1e-10:
            raise ValueError("Hamiltonian not Hermitian")
        self.space = space
        self.evals, self.evecs = np.linalg.eigh(op.matrix)

    def evolve_vector(self, psi: np.ndarray, t: float) -> np.ndarray:
        c = self.evecs.conj().T @ psi
        return self.evecs @ (np.exp(-1j * self.evals * t) * c)

    def expectation(self, psi: np.ndarray, op: ManyBodyOperator, t: float) -> float:
        ps = self.evolve_vector(psi, t)
        return float(np.real(ps.conj() @ op.matrix @ ps))

    def time_average_expectation(self, psi: np.ndarray, op: ManyBodyOperator,
                                 eps_rel: float = 1e-8) -> float:
        """tr[<rho> M] by dephasing in the many-body eigenbasis."""
        c = self.evecs.conj().T @ psi
        m_eig = self.evecs.conj().T @ op.matrix @ self.evecs
        _, _, bounds = cluster_levels(self.evals, eps_rel)
        total = 0.0
        for a, b in zip(bounds[:-1], bounds[1:]):
            block = c[a:b]
            total += float(np.real(block.conj() @ m_eig[a:b, a:b] @ block))
        return total


def evolve_expectation(space: FockSpace, hf: ManyBodyOperator, psi0: np.ndarray,
                       op: ManyBodyOperator, t: float) -> float:
    """tr[e^{-iHt} rho e^{iHt} M] for a pure initial vector, by diagonalization."""
    return FockHamiltonian(space, hf).expectation(psi0, op, t)


def product_state(space: FockSpace, vectors, occupations) -> np.ndarray:
    """Normalized Prod_a (a^dag(psi_a))^{n_a} |0> over mode columns."""
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    occupations = [int(round(n)) for n in np.atleast_1d(occupations)]
    psi = space.vacuum()
    for col, n in zip(vectors.T, occupations):
        if space.statistics == "fermion" and n > 1:
            raise ValueError("fermion occupation exceeds 1")
        adag = space.creation_of(col)
        for _ in range(n):
            psi = adag @ psi
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ValueError("product state vanished (Pauli exclusion or truncation)")
    return psi / norm


def mode_correlations(space: FockSpace, psi: np.ndarray) -> np.ndarray:
    """C_ij = <psi| a_i^dag a_j |psi> over the reference modes."""
    a_ops = [space.annihilation(i) for i in range(space.m)]
    applied = [a @ psi for a in a_ops]
    c = np.empty((space.m, space.m), dtype=complex)
    for i in range(space.m):
        for j in range(space.m):
            c[i, j] = applied[i].conj() @ applied[j]
    return c


def _check_single_occupancy_product(space: FockSpace, psi: np.ndarray) -> int:
    """Validate the fluctuation-lemma hypothesis: a pure state of the form
    a_1^dag ... a_N^dag |0> in some orthonormal modes.  Equivalent to the
    two-point correlation matrix having eigenvalues in {0, 1}.  Returns N."""
    c = mode_correlations(space, psi)
    evals = np.linalg.eigvalsh(c)
    if np.any(np.abs(evals - np.round(evals)) > 1e-8) or np.any(np.round(evals) > 1):
        raise ValueError(
            "state is not a single-occupancy product state; fluctuation lemma "
            "hypotheses not met")
    n = float(np.sum(np.round(evals)))
    return int(round(n))


def fluctuation_check(space: FockSpace, psi: np.ndarray, op: ManyBodyOperator,
                      enforce_form: bool = True):
    """Variance of a counting observable and the product-state bound.

    For fermions the bound is tr[rho M^2] <= tr[rho M]^2 + tr[rho M]; bosons
    get an extra +N.  Returns (variance, bound_ok).
    """
    if enforce_form:
        n_particles = _check_single_occupancy_product(space, psi)
    else:
        n_tot = space.total_number()
        n_particles = int(round(float(np.real(psi.conj() @ n_tot @ psi))))
    m1 = float(np.real(psi.conj() @ op.matrix @ psi))
    m2 = float(np.real(psi.conj() @ op.matrix @ op.matrix @ psi))
    variance = m2 - m1 ** 2
    slack = 0.0 if space.statistics == "fermion" else float(n_particles)
    bound_ok = m2 <= m1 ** 2 + m1 + slack + 1e-10
    return variance, bound_ok


def time_avg_fluctuation(space: FockSpace, ham: FockHamiltonian, psi0: np.ndarray,
                         op: ManyBodyOperator, sys: SpectralSystem,
                         n_times: int = 1000, t_max: float = 200.0,
                         seed: int = 42):
    """Monte-Carlo estimate of <sigma_M(rho(t))> over random times.

    Requires the single-particle spectrum to have nondegenerate levels and
    nondegenerate gaps; refuses otherwise since the sqrt(N) theorem's
    hypotheses would be violated.
    """
    gs = gap_structure(sys)
    if gs.n_d > 1 or gs.D_G > 1:
        raise ValueError("degenerate levels or gaps: theorem hypotheses violated")
    rng = np.random.default_rng(seed)
    times = rng.uniform(0.0, t_max, size=n_times)
    m, m2op = op.matrix, op.matrix @ op.matrix
    samples = np.empty(n_times)
    for k, t in enumerate(times):
        ps = ham.evolve_vector(psi0, t)
        m1 = float(np.real(ps.conj() @ m @ ps))
        msq = float(np.real(ps.conj() @ m2op @ ps))
        samples[k] = np.sqrt(max(msq - m1 ** 2, 0.0))
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(n_times))
    return mean, stderr


def algebra_deviation(space: FockSpace) -> float:
    """Worst violation of the canonical (anti)commutation relations.

    For truncated bosons the relations are checked below the truncation:
    matrix elements involving a fully occupied mode are excluded.
    """
    worst = 0.0
    eye = sp.identity(space.dim, format="csr", dtype=complex)
    for i in range(space.m):
        ai = space.annihilation(i)
        for j in range(space.m):
            aj_dag = space.creation(j)
            if space.statistics == "fermion":
                term = ai @ aj_dag + aj_dag @ ai
            else:
                term = ai @ aj_dag - aj_dag @ ai
            if i == j:
                term = term - eye
            dense = np.abs(term.toarray())
            if space.statistics == "boson":
                ok = np.array([occ[i] < space.n_max_per_mode for occ in space.basis])
                dense = dense[np.ix_(ok, ok)]
            if dense.size:
                worst = max(worst, float(dense.max()))
    return worst
