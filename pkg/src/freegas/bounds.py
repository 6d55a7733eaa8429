"""General equilibration bounds for single-particle dynamics.

The central estimate bounds the windowed mean-square deviation of any
observable expectation from its dephased average:

    <|tr[sigma(t) A] - tr[<sigma> A]|^2>_T / ||A||^2
        <= (c1/d_eff) [ D_G + c2 n_max d / T ],

with c1 = e sqrt(pi)/2, c2 = 4 sqrt(pi), D_G the largest energy-gap
degeneracy, n_max the density-of-states peak and 1/d_eff the participation
ratio of the initial state over energy levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .spectral import (
    EPS_GAP_DEFAULT,
    SpectralSystem,
    StateSP,
    cluster_levels,
    density_of_states,
    gap_structure,
)

C1 = math.e * math.sqrt(math.pi) / 2.0
C2 = 4.0 * math.sqrt(math.pi)


def level_populations(sys: SpectralSystem, state: StateSP,
                      eps_gap: float = EPS_GAP_DEFAULT):
    """(level values, tr[sigma P_E] per clustered level)."""
    coeff = sys.to_eigenbasis(state.vectors)
    per_eigstate = (np.abs(coeff) ** 2) @ state.weights
    values, _, bounds = cluster_levels(sys.energies, eps_gap)
    pops = np.array([per_eigstate[a:b].sum() for a, b in zip(bounds[:-1], bounds[1:])])
    return values, pops


def effective_dimension(sys: SpectralSystem, state: StateSP,
                        eps_gap: float = EPS_GAP_DEFAULT) -> float:
    """Inverse participation ratio over energy levels: 1 / sum_E p_E^2."""
    _, pops = level_populations(sys, state, eps_gap)
    return float(1.0 / np.sum(pops ** 2))


@dataclass
class BoundReport:
    d: int
    d_eff: float
    D_G: int
    n_d: int
    n_max: float
    T: float
    bound_value: float
    c1: float = C1
    c2: float = C2
    components: dict = field(default_factory=dict)


def bound_eq5(d: int, d_eff: float, D_G: int, n_d: int, n_max: float,
              T: float) -> BoundReport:
    """Evaluate the mean-square bound; T = inf gives the asymptotic c1 D_G/d_eff."""
    if T <= 0:
        raise ValueError("T must be positive")
    gap_term = C1 * D_G / d_eff
    dos_term = 0.0 if math.isinf(T) else C1 * C2 * n_max * d / (d_eff * T)
    return BoundReport(d=d, d_eff=d_eff, D_G=D_G, n_d=n_d, n_max=n_max, T=T,
                       bound_value=gap_term + dos_term,
                       components={"gap_term": gap_term, "dos_term": dos_term})


def bound_for_state(sys: SpectralSystem, state: StateSP, T: float,
                    n_max: float = None, eps_gap: float = EPS_GAP_DEFAULT) -> BoundReport:
    """bound_eq5 with d_eff, D_G, n_d taken from the system and state; n_max
    from the sqrt(d)-bin histogram unless a closed-form value is supplied."""
    gs = gap_structure(sys, eps_gap)
    if n_max is None:
        _, _, n_max = density_of_states(sys, int(math.ceil(math.sqrt(sys.dim))))
    return bound_eq5(sys.dim, effective_dimension(sys, state, eps_gap),
                     gs.D_G, gs.n_d, n_max, T)


@dataclass
class WeightedAverageCheck:
    numeric: float
    analytic: float
    uniform: float
    uniform_within: bool


def weighted_average_check(delta_g: float, T: float) -> WeightedAverageCheck:
    """Gaussian-weighted phase average |(e/T) int e^{-4(t-T/2)^2/T^2} e^{i dG t} dt|.

    The quadrature value must match the closed form c1 e^{-dG^2 T^2/16} to
    1e-8 (raises otherwise).  The uniform [0,T] phase average is returned for
    comparison; it sits below the analytic value only while |dG| T does not
    exceed roughly 7 (the elementwise comparison breaks down beyond that, see
    ``uniform_within``), whereas the underlying weighted-average inequality
    holds for positive integrands at every window.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    scale = math.e / T

    def env(u):
        return math.exp(-4.0 * u * u / (T * T))

    re, re_err = quad(lambda u: env(u) * math.cos(delta_g * (u + T / 2)),
                      -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, limit=400)
    im, im_err = quad(lambda u: env(u) * math.sin(delta_g * (u + T / 2)),
                      -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, limit=400)
    numeric = scale * math.hypot(re, im)
    analytic = C1 * math.exp(-delta_g ** 2 * T ** 2 / 16.0)
    if abs(numeric - analytic) > 1e-8:
        raise RuntimeError(
            f"quadrature {numeric!r} inconsistent with closed form {analytic!r}")
    x = delta_g * T
    uniform = 1.0 if abs(x) < 1e-300 else abs(2.0 * math.sin(x / 2.0) / x)
    return WeightedAverageCheck(numeric=numeric, analytic=analytic,
                                uniform=uniform, uniform_within=uniform <= analytic)


def gaussian_weighted_mean(values: np.ndarray, times: np.ndarray) -> float:
    """(e/T) int_0^T f(t) e^{-4(t-T/2)^2/T^2} dt by trapezoid; dominates the
    uniform mean for nonnegative f."""
    T = times[-1] - times[0]
    w = math.e * np.exp(-4.0 * (times - times[0] - T / 2) ** 2 / T ** 2)
    return float(np.trapezoid(values * w, times) / T)


def timescale_estimate(sys: SpectralSystem, state: StateSP, target_eps: float,
                       n_max: float = None,
                       eps_gap: float = EPS_GAP_DEFAULT) -> float:
    """Smallest T with bound_eq5 <= target_eps^2, in closed form:
    T = c1 c2 n_max d / (d_eff eps^2 - c1 D_G).

    Raises when even the infinite-time bound exceeds target_eps^2, i.e. the
    bound cannot certify equilibration at that accuracy.
    """
    gs = gap_structure(sys, eps_gap)
    d_eff = effective_dimension(sys, state, eps_gap)
    if n_max is None:
        _, _, n_max = density_of_states(sys, int(math.ceil(math.sqrt(sys.dim))))
    if C1 * gs.D_G / d_eff >= target_eps ** 2:
        raise ValueError("bound cannot certify equilibration: "
                         f"c1 D_G/d_eff = {C1 * gs.D_G / d_eff:.3g} >= eps^2")
    return C1 * C2 * n_max * sys.dim / (d_eff * target_eps ** 2 - C1 * gs.D_G)


def mean_square_deviation(values: np.ndarray, times: np.ndarray,
                          reference: float) -> float:
    """Trapezoid <(f - reference)^2> over the sampled window."""
    return float(np.trapezoid((values - reference) ** 2, times)
                 / (times[-1] - times[0]))
