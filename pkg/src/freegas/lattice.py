"""Free lattice models and Gaussian fermionic states.

Gaussian states are carried as real antisymmetric Majorana covariance
matrices Gamma_ij = (i/2) tr(rho [c_i, c_j]) with the convention

    c_{2k} = a_k + a_k^dag,   c_{2k+1} = -i (a_k - a_k^dag)   (0-based),

ordered by site index.  Quadratic (hopping) Hamiltonians act as orthogonal
rotations on Gamma; string expectations follow from Wick's theorem as
Pfaffians of sub-covariance matrices.  The equilibration machinery bounds the
windowed average deviation of few-mode observables by spectral data (gap
degeneracy, truncated density of states).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bounds import C1, C2
from .series import min_samples
from .spectral import EPS_GAP_DEFAULT, SpectralSystem, cluster_levels, gap_structure

ANTISYM_TOL = 1e-10
PHYSICAL_TOL = 1e-8
ANOMALOUS_TOL = 1e-10
P0_DEFAULT = math.pi / 20.0


@dataclass
class HoppingModel:
    """Nearest-neighbour hopping on a ring or open chain (or a custom
    Hermitian amplitude matrix), s orthogonal states per site."""

    V: int
    geometry: str = "ring"
    t_hop: float = 0.5
    matrix: np.ndarray = None
    s: int = 1

    def __post_init__(self):
        if self.V < 2:
            raise ValueError("need at least two sites")
        if self.geometry not in ("ring", "chain"):
            raise ValueError("geometry must be 'ring' or 'chain'")
        if self.matrix is None:
            h = np.zeros((self.V, self.V))
            for i in range(self.V - 1):
                h[i, i + 1] = h[i + 1, i] = self.t_hop
            if self.geometry == "ring":
                h[0, self.V - 1] = h[self.V - 1, 0] = self.t_hop
            self.matrix = h
        else:
            self.matrix = np.asarray(self.matrix, dtype=complex)
            if np.abs(self.matrix - self.matrix.conj().T).max() > 1e-12:
                raise ValueError("amplitude matrix must be Hermitian")

    @property
    def dim(self) -> int:
        return self.V * self.s

    def spectral(self) -> SpectralSystem:
        return SpectralSystem.from_hamiltonian(
            self.matrix, label=f"{self.geometry} V={self.V}")


class CovarianceMatrix:
    """2V x 2V real antisymmetric Majorana covariance matrix of a fermionic
    Gaussian state; singular values must not exceed 1."""

    def __init__(self, gamma: np.ndarray):
        g = np.asarray(gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise ValueError("covariance matrix must be even-dimensional square")
        if np.abs(g + g.T).max() > ANTISYM_TOL:
            raise ValueError("covariance matrix not antisymmetric")
        sv = np.linalg.svd(g, compute_uv=False)
        if sv.max() > 1.0 + PHYSICAL_TOL:
            raise ValueError(f"unphysical covariance (singular value {sv.max():.6f})")
        self.gamma = g

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0] // 2

    @classmethod
    def from_correlations(cls, C, F=None) -> "CovarianceMatrix":
        """Build Gamma from C_jk = tr[rho a_j^dag a_k] and the anomalous
        F_jk = tr[rho a_j a_k] (zero for number-conserving states)."""
        C = np.asarray(C, dtype=complex)
        v = C.shape[0]
        F = np.zeros_like(C) if F is None else np.asarray(F, dtype=complex)
        eye = np.eye(v)
        g = np.zeros((2 * v, 2 * v))
        g[0::2, 0::2] = -2 * F.imag - 2 * C.imag
        g[0::2, 1::2] = 2 * F.real + 2 * C.real - eye
        g[1::2, 0::2] = 2 * F.real - 2 * C.real + eye
        g[1::2, 1::2] = 2 * F.imag - 2 * C.imag
        return cls(g)

    @classmethod
    def vacuum(cls, n_modes: int) -> "CovarianceMatrix":
        return cls.from_correlations(np.zeros((n_modes, n_modes)))

    @classmethod
    def from_occupied_sites(cls, n_modes: int, sites) -> "CovarianceMatrix":
        c = np.zeros((n_modes, n_modes))
        for s_ in sites:
            c[s_, s_] = 1.0
        return cls.from_correlations(c)

    def correlations(self):
        """Recover (C, F) from the covariance matrix."""
        g = self.gamma
        xx, xp = g[0::2, 0::2], g[0::2, 1::2]
        px, pp = g[1::2, 0::2], g[1::2, 1::2]
        eye = np.eye(self.n_modes)
        c = (xp - px + 2 * eye) / 4.0 - 1j * (xx + pp) / 4.0
        f = (xp + px) / 4.0 + 1j * (pp - xx) / 4.0
        return c, f

    def anomalous_norm(self) -> float:
        _, f = self.correlations()
        return float(np.abs(f).max()) if f.size else 0.0

    def purity_deviation(self) -> float:
        g = self.gamma
        return float(np.abs(g @ g.T - np.eye(g.shape[0])).max())


def majorana_rotation(w: np.ndarray) -> np.ndarray:
    """Orthogonal 2V x 2V rotation induced on interleaved Majoranas by the
    mode-space unitary w (a -> w a)."""
    v = w.shape[0]
    o = np.zeros((2 * v, 2 * v))
    o[0::2, 0::2] = w.real
    o[0::2, 1::2] = -w.imag
    o[1::2, 0::2] = w.imag
    o[1::2, 1::2] = w.real
    return o


def evolve_covariance(model: HoppingModel, cov: CovarianceMatrix,
                      t: float) -> CovarianceMatrix:
    """Gamma(t) = O(t) Gamma O(t)^T with O(t) the Majorana rotation of
    e^{-i h t}."""
    if cov.n_modes != model.V:
        raise ValueError("covariance/model dimension mismatch")
    sysm = model.spectral()
    w = (sysm.eigenvectors * np.exp(-1j * sysm.energies * t)) @ sysm.eigenvectors.conj().T
    o = majorana_rotation(w)
    return CovarianceMatrix(o @ cov.gamma @ o.T)


# ------------------------------------------------------------------ Pfaffian

def pfaffian(a: np.ndarray) -> float:
    """Pfaffian of a real antisymmetric matrix.

    Householder reduction to skew tridiagonal form; the Pfaffian is the
    product of alternate superdiagonal entries times the determinant sign of
    the accumulated orthogonal transform.  Satisfies pf(A)^2 = det(A).
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if n == 0:
        return 1.0
    if n % 2:
        raise ValueError("Pfaffian needs even dimension")
    scale = max(1.0, np.abs(a).max())
    if np.abs(a + a.T).max() > ANTISYM_TOL * scale:
        raise ValueError("matrix not antisymmetric")
    a = a.copy()
    det_q = 1.0
    for k in range(n - 2):
        x = a[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx < 1e-300:
            continue
        v = x.copy()
        v[0] += math.copysign(nx, x[0]) if x[0] != 0 else nx
        nv = np.linalg.norm(v)
        if nv < 1e-300:
            continue
        v /= nv
        a[k + 1:, :] -= 2.0 * np.outer(v, v @ a[k + 1:, :])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        det_q = -det_q
    pf_t = 1.0
    for i in range(0, n, 2):
        pf_t *= a[i, i + 1]
    return float(pf_t * det_q)


def pfaffian_cofactor(a: np.ndarray) -> float:
    """Recursive cofactor expansion; cross-check for dimensions up to 8."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n > 8:
        raise ValueError("cofactor expansion limited to dimension 8")
    if n == 0:
        return 1.0
    if n % 2:
        raise ValueError("Pfaffian needs even dimension")
    if n == 2:
        return float(a[0, 1])
    total = 0.0
    rest0 = list(range(1, n))
    for pos, j in enumerate(rest0):
        keep = [i for i in rest0 if i != j]
        total += (-1.0) ** pos * a[0, j] * pfaffian_cofactor(a[np.ix_(keep, keep)])
    return float(total)


def wick_expectation(cov: CovarianceMatrix, indices) -> complex:
    """tr[rho c_{i1} ... c_{i2K}] for strictly increasing Majorana indices.

    Gaussian states contract pairwise: the value is (-i)^K pf(Gamma^R) on the
    selected submatrix.  The empty string gives 1; odd strings vanish for the
    number-conserving states handled here.
    """
    idx = list(indices)
    if any(not 0 <= i < 2 * cov.n_modes for i in idx):
        raise ValueError("Majorana index out of range")
    if len(idx) == 0:
        return 1.0 + 0j
    if len(set(idx)) != len(idx) or sorted(idx) != idx:
        raise ValueError("indices must be strictly increasing and distinct")
    if len(idx) % 2:
        return 0.0 + 0j
    k = len(idx) // 2
    sub = cov.gamma[np.ix_(idx, idx)]
    return ((-1j) ** k) * pfaffian(sub)


def block_canonical_form(cov: CovarianceMatrix):
    """Orthogonal O and amplitudes lam with Gamma = O (bigoplus [[0, lam_n],
    [-lam_n, 0]]) O^T; |lam_n| <= 1 for physical states."""
    t, z = scipy.linalg.schur(cov.gamma, output="real")
    lams = np.array([t[i, i + 1] for i in range(0, t.shape[0] - 1, 2)])
    return lams, z, t


# ------------------------------------------------- dynamics and dephased means

class LatticeDynamics:
    """Eigenbasis bundle for correlator time series and exact dephased
    averages of one- and two-entry products.

    Frequencies are organized by level-pair gap classes; the infinite-time
    average of C_xy(t) keeps the zero-gap class, and averages of products of
    two correlator entries pair classes with opposite gaps.  This is exact
    (clustered at the standard gap tolerance), no long-time simulation.
    """

    def __init__(self, model: HoppingModel, cov0: CovarianceMatrix,
                 eps_gap: float = EPS_GAP_DEFAULT):
        if cov0.n_modes != model.V:
            raise ValueError("covariance/model dimension mismatch")
        self.model = model
        self.cov0 = cov0
        sysm = model.spectral()
        self.energies = sysm.energies
        self.vectors = sysm.eigenvectors
        c0, f0 = cov0.correlations()
        self.anomalous = float(np.abs(f0).max())
        # single-particle density-matrix convention: rho1 = C^T evolves as
        # rho1(t) = e^{-iht} rho1 e^{iht}
        self.rho_eig = self.vectors.conj().T @ c0.T @ self.vectors
        self.level_values, self.level_counts, self.level_bounds = cluster_levels(
            self.energies, eps_gap)
        self.eps_gap = eps_gap
        self._class_cache = None

    # -- time series ---------------------------------------------------------
    def pair_series(self, x: int, y: int, times: np.ndarray) -> np.ndarray:
        """C_xy(t) = tr[rho(t) a_x^dag a_y] on a time grid (complex array).

        Equals rho1(t)_{yx}, evaluated in the eigenbasis at O(d^2) per point.
        """
        m = np.outer(self.vectors[y], self.vectors[x].conj()) * self.rho_eig
        ph = np.exp(-1j * np.outer(np.asarray(times, float), self.energies))
        return np.sum((ph @ m) * ph.conj(), axis=1)

    # -- gap classes ---------------------------------------------------------
    def _classes(self):
        if self._class_cache is not None:
            return self._class_cache
        nl = len(self.level_values)
        pairs = [(i, j) for i in range(nl) for j in range(nl)]
        freqs = np.array([self.level_values[i] - self.level_values[j]
                          for i, j in pairs])
        order = np.argsort(freqs)
        freqs = freqs[order]
        pairs = [pairs[k] for k in order]
        rng = max(self.energies[-1] - self.energies[0], 1e-300)
        tol = self.eps_gap * rng
        breaks = np.where(np.diff(freqs) > tol)[0] + 1
        bounds = np.concatenate(([0], breaks, [len(freqs)]))
        class_values = np.array([freqs[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
        class_members = [pairs[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
        self._class_cache = (class_values, class_members, tol)
        return self._class_cache

    def _class_amps(self, x: int, y: int) -> np.ndarray:
        """S^G_xy with C_xy(t) = sum_G S^G_xy e^{-i G t} over gap classes."""
        class_values, class_members, _ = self._classes()
        lb = self.level_bounds
        vy, vx = self.vectors[y], self.vectors[x].conj()
        out = np.empty(len(class_values), dtype=complex)
        for ci, members in enumerate(class_members):
            tot = 0.0 + 0j
            for (li, lj) in members:
                a0, a1 = lb[li], lb[li + 1]
                b0, b1 = lb[lj], lb[lj + 1]
                tot += vy[a0:a1] @ self.rho_eig[a0:a1, b0:b1] @ vx[b0:b1]
            out[ci] = tot
        return out

    def averaged_pair(self, x: int, y: int) -> complex:
        """Infinite-time average of C_xy(t): the zero-gap class."""
        class_values, _, tol = self._classes()
        amps = self._class_amps(x, y)
        zero = np.abs(class_values) <= tol
        return complex(amps[zero].sum())

    def averaged_product(self, term1, term2) -> complex:
        """Infinite-time average of T1(t) T2(t) where each term is
        (x, y, conj_flag) denoting C_xy(t) or its conjugate."""
        class_values, _, tol = self._classes()
        x1, y1, c1f = term1
        x2, y2, c2f = term2
        a1 = self._class_amps(x1, y1)
        a2 = self._class_amps(x2, y2)
        if c1f:
            a1 = a1.conj()
        if c2f:
            a2 = a2.conj()
        f1 = -class_values if c1f else class_values
        f2 = -class_values if c2f else class_values
        # resonance: f1[p] + f2[q] = 0
        order = np.argsort(f2)
        f2s, a2s = f2[order], a2[order]
        total = 0.0 + 0j
        lo = np.searchsorted(f2s, -f1 - tol, side="left")
        hi = np.searchsorted(f2s, -f1 + tol, side="right")
        for p in range(len(f1)):
            if hi[p] > lo[p]:
                total += a1[p] * a2s[lo[p]:hi[p]].sum()
        return complex(total)


# --------------------------------------------------------------- correlators

_XT, _PT = 0, 1


def _gamma_entry_terms(i: int, j: int):
    """Gamma_ij as (constant, {(site_a, site_b, conj): coeff}) in terms of the
    mode correlations C_ab(t)."""
    if i == j:
        return 0.0, {}
    if i > j:
        const, terms = _gamma_entry_terms(j, i)
        return -const, {k: -v for k, v in terms.items()}
    sa, ta = divmod(i, 2)
    sb, tb = divmod(j, 2)
    delta = 1.0 if sa == sb else 0.0
    if ta == _XT and tb == _XT or ta == _PT and tb == _PT:
        # -2 Im C_ab = i C_ab - i conj(C_ab)
        return 0.0, {(sa, sb, False): 1j, (sa, sb, True): -1j}
    if ta == _XT and tb == _PT:
        # 2 Re C_ab - delta
        return -delta, {(sa, sb, False): 1.0 + 0j, (sa, sb, True): 1.0 + 0j}
    # p then x: delta - 2 Re C_ab
    return delta, {(sa, sb, False): -1.0 + 0j, (sa, sb, True): -1.0 + 0j}


def _gamma_entry_series(dyn: LatticeDynamics, i: int, j: int,
                        series_cache: dict, times: np.ndarray) -> np.ndarray:
    const, terms = _gamma_entry_terms(i, j)
    out = np.full(len(times), const, dtype=complex)
    for (a, b, conj), coeff in terms.items():
        if (a, b) not in series_cache:
            series_cache[(a, b)] = dyn.pair_series(a, b, times)
        s = series_cache[(a, b)]
        out += coeff * (s.conj() if conj else s)
    return out


def _gamma_entry_average(dyn: LatticeDynamics, i: int, j: int) -> complex:
    const, terms = _gamma_entry_terms(i, j)
    out = complex(const)
    for (a, b, conj), coeff in terms.items():
        avg = dyn.averaged_pair(a, b)
        out += coeff * (avg.conjugate() if conj else avg)
    return out


def _gamma_product_average(dyn: LatticeDynamics, pair1, pair2) -> complex:
    """Infinite-time average of Gamma_{i1 j1}(t) Gamma_{i2 j2}(t)."""
    const1, terms1 = _gamma_entry_terms(*pair1)
    const2, terms2 = _gamma_entry_terms(*pair2)
    out = complex(const1) * const2
    for (a, b, cf), coeff in terms1.items():
        avg = dyn.averaged_pair(a, b)
        out += const2 * coeff * (avg.conjugate() if cf else avg)
    for (a, b, cf), coeff in terms2.items():
        avg = dyn.averaged_pair(a, b)
        out += const1 * coeff * (avg.conjugate() if cf else avg)
    for (a1, b1, cf1), co1 in terms1.items():
        for (a2, b2, cf2), co2 in terms2.items():
            out += co1 * co2 * dyn.averaged_product((a1, b1, cf1), (a2, b2, cf2))
    return out


def phase_correlator(model: HoppingModel, cov0: CovarianceMatrix, x: int, y: int,
                     t: float) -> complex:
    """tr[rho(t) a_x^dag a_y], cross-computed two ways.

    Route one reads Majorana two-point functions off Gamma(t); route two
    reconstructs the mode correlations and combines the four auxiliary mode
    densities (d1..d4).  Both must agree to 1e-10.
    """
    if not (0 <= x < model.V and 0 <= y < model.V):
        raise ValueError("site index out of range")
    cov_t = evolve_covariance(model, cov0, t)
    g = cov_t.gamma

    def two_point(i, j):
        return (1.0 if i == j else 0.0) - 1j * g[i, j]

    xx, px = 2 * x, 2 * x + 1
    xy, py = 2 * y, 2 * y + 1
    route1 = 0.25 * (two_point(xx, xy) + 1j * two_point(xx, py)
                     - 1j * two_point(px, xy) + two_point(px, py))

    c_t, _ = cov_t.correlations()
    ex = np.zeros(model.V, dtype=complex)
    ey = np.zeros(model.V, dtype=complex)
    ex[x] = 1.0
    ey[y] = 1.0
    d_modes = [(ex + ey) / math.sqrt(2), (ex - ey) / math.sqrt(2),
               (ex + 1j * ey) / math.sqrt(2), (ex - 1j * ey) / math.sqrt(2)]
    dens = [complex(v.conj() @ c_t @ v) for v in d_modes]
    route2 = 0.5 * (dens[0] - dens[1] - 1j * dens[2] + 1j * dens[3])
    if abs(route1 - route2) > 1e-10:
        raise AssertionError(
            f"correlator routes disagree: {route1} vs {route2}")
    return complex(route1)


def correlator_series(model: HoppingModel, cov0: CovarianceMatrix, x: int, y: int,
                      times: np.ndarray) -> np.ndarray:
    """tr[rho(t) a_x^dag a_y] on a grid (fast eigenbasis path)."""
    dyn = LatticeDynamics(model, cov0)
    return dyn.pair_series(x, y, np.asarray(times, dtype=float))


# ------------------------------------------------------------ DOS truncation

@dataclass
class TruncatedDos:
    n_max: float
    excluded_fraction: float
    excluded_count_estimate: float
    p0: float


def truncated_dos(model: HoppingModel, p0: float = P0_DEFAULT) -> TruncatedDos:
    """Density-of-states ceiling for the ring after excluding the flat band
    edges |p| < p0 and |p - pi| < p0: n_max = V/(2 t_hop pi sin p0)."""
    if not 0 < p0 < math.pi / 2:
        raise ValueError("p0 must lie in (0, pi/2)")
    if model.geometry != "ring":
        raise ValueError("truncated DOS formula applies to the ring dispersion")
    n_max = model.V / (2.0 * model.t_hop * math.pi * math.sin(p0))
    return TruncatedDos(n_max=n_max, excluded_fraction=2 * p0 / math.pi,
                        excluded_count_estimate=2 * p0 * model.V / math.pi,
                        p0=p0)


# --------------------------------------------------------------- bound checks

@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs


def _model_gap_data(model: HoppingModel, eps_gap=EPS_GAP_DEFAULT):
    gs = gap_structure(model.spectral(), eps_gap)
    return gs.D_G, gs.n_d


def single_mode_bound_check(model: HoppingModel, cov0: CovarianceMatrix,
                            phi: np.ndarray, T: float, p0: float = P0_DEFAULT,
                            n_samples: int = None) -> BoundCheck:
    """Windowed average deviation of the occupation of a localized mode
    against l sqrt(c3 [D_G/d + c2 n_max/T]) + 2 p0 l / pi.

    The additive term budgets the weight the localized mode leaks into the
    excluded band edges.
    """
    phi = np.asarray(phi, dtype=complex)
    if len(phi) != model.V:
        raise ValueError("mode vector length must equal site count")
    ell = int(np.sum(np.abs(phi) > 1e-12))
    dyn = LatticeDynamics(model, cov0)
    g_max = float(dyn.energies[-1] - dyn.energies[0])
    n = n_samples or min_samples(T, g_max)
    times = np.linspace(0.0, T, n)
    support = np.nonzero(np.abs(phi) > 1e-12)[0]
    f_t = np.zeros(n, dtype=complex)
    f_avg = 0.0 + 0j
    for a in support:
        for b in support:
            w = np.conj(phi[a]) * phi[b]
            f_t += w * dyn.pair_series(a, b, times)
            f_avg += w * dyn.averaged_pair(a, b)
    lhs = float(np.trapezoid(np.abs(f_t - f_avg), times) / T)
    d_g, n_d = _model_gap_data(model)
    dos = truncated_dos(model, p0)
    d = model.dim
    c3 = C1 * n_d ** 2 * model.s ** 2
    rhs = (ell * math.sqrt(c3 * (d_g / d + C2 * dos.n_max / T))
           + 2 * p0 * ell / math.pi)
    return BoundCheck(lhs=lhs, rhs=rhs, details={
        "l": ell, "D_G": d_g, "n_d": n_d, "n_max": dos.n_max,
        "slack": 2 * p0 * ell / math.pi, "mean": complex(f_avg)})


def _string_series(dyn: LatticeDynamics, indices, series_cache, times):
    """tr[rho(t) c^R] for a sorted Majorana string of length 0, 2 or 4."""
    k = len(indices) // 2
    if len(indices) == 0:
        return np.ones(len(times), dtype=complex)
    if len(indices) == 2:
        i, j = indices
        return (-1j) * _gamma_entry_series(dyn, i, j, series_cache, times)
    if len(indices) == 4:
        i, j, k2, l2 = indices
        g12 = _gamma_entry_series(dyn, i, j, series_cache, times)
        g34 = _gamma_entry_series(dyn, k2, l2, series_cache, times)
        g13 = _gamma_entry_series(dyn, i, k2, series_cache, times)
        g24 = _gamma_entry_series(dyn, j, l2, series_cache, times)
        g14 = _gamma_entry_series(dyn, i, l2, series_cache, times)
        g23 = _gamma_entry_series(dyn, j, k2, series_cache, times)
        return ((-1j) ** 2) * (g12 * g34 - g13 * g24 + g14 * g23)
    raise ValueError("strings longer than 4 Majoranas are not supported")


def _string_average(dyn: LatticeDynamics, indices):
    if len(indices) == 0:
        return 1.0 + 0j
    if len(indices) == 2:
        return (-1j) * _gamma_entry_average(dyn, *indices)
    if len(indices) == 4:
        i, j, k2, l2 = indices
        val = (_gamma_product_average(dyn, (i, j), (k2, l2))
               - _gamma_product_average(dyn, (i, k2), (j, l2))
               + _gamma_product_average(dyn, (i, l2), (j, k2)))
        return ((-1j) ** 2) * val
    raise ValueError("strings longer than 4 Majoranas are not supported")


def multi_mode_bound_check(model: HoppingModel, cov0: CovarianceMatrix,
                           coefficients: dict, l_sites: int, T: float,
                           p0: float = P0_DEFAULT,
                           n_samples: int = None) -> BoundCheck:
    """Bound check for M = sum_R m_R c^R given by Majorana-string coefficients
    (keys: sorted index tuples; strings up to 4 Majoranas).

    Requires a number-conserving initial Gaussian state (anomalous
    correlations below 1e-10).  The right-hand side is
    2^{l s + 2} m s l^2 sqrt(c3 [D_G/d + c2 n_max/T]); the sharper
    m' <= m 2^K variant is reported in the details.
    """
    dyn = LatticeDynamics(model, cov0)
    if dyn.anomalous > ANOMALOUS_TOL:
        raise ValueError("initial state is not number conserving "
                         f"(anomalous correlations {dyn.anomalous:.2e})")
    g_max = float(dyn.energies[-1] - dyn.energies[0])
    n = n_samples or min_samples(T, g_max)
    times = np.linspace(0.0, T, n)
    cache = {}
    f_t = np.zeros(n, dtype=complex)
    f_avg = 0.0 + 0j
    majoranas = set()
    for indices, m_r in coefficients.items():
        idx = tuple(indices)
        if list(idx) != sorted(idx):
            raise ValueError("string indices must be sorted")
        majoranas.update(idx)
        f_t += m_r * _string_series(dyn, idx, cache, times)
        f_avg += m_r * _string_average(dyn, idx)
    lhs = float(np.trapezoid(np.abs(f_t - f_avg), times) / T)
    d_g, n_d = _model_gap_data(model)
    dos = truncated_dos(model, p0)
    k_modes = max(1, int(math.ceil(len(majoranas) / 2)))
    m_max = max(abs(v) for v in coefficients.values())
    m_prime = sum(abs(v) for ind, v in coefficients.items()
                  if _is_consecutive_pairs(ind))
    c3 = C1 * n_d ** 2 * model.s ** 2
    root = math.sqrt(c3 * (d_g / model.dim + C2 * dos.n_max / T))
    rhs = 2.0 ** (l_sites * model.s + 2) * m_max * model.s * l_sites ** 2 * root
    return BoundCheck(lhs=lhs, rhs=rhs, details={
        "K_modes": k_modes, "m_max": m_max, "m_prime": m_prime,
        "m_times_2K": m_max * 2 ** k_modes, "mean": complex(f_avg),
        "rhs_sharper": 4 * m_prime * l_sites * k_modes * root})


def _is_consecutive_pairs(indices) -> bool:
    """True when the string pairs up Majoranas (2n, 2n+1) only."""
    idx = list(indices)
    if len(idx) % 2:
        return False
    for a, b in zip(idx[0::2], idx[1::2]):
        if b != a + 1 or a % 2 != 0:
            return False
    return True
