import numpy as np
import pytest
from scipy.integrate import quad

from freegas import box
from freegas.spectral import (
    average_expectation,
    distinguishability_series,
    expectation_P,
)

RNG = np.random.default_rng(42)


def halfbox_overlap_quadrature(n, k, L=1.0):
    """Independent oracle: <n|psi_k> by direct integration of the sine modes."""
    val, _ = quad(lambda x: np.sqrt(2 / L) * np.sin(n * np.pi * x / L)
                  * np.sqrt(4 / L) * np.sin(2 * k * np.pi * x / L),
                  0.0, L / 2, epsabs=1e-13, epsrel=1e-13)
    return val


class TestOverlapF:
    def test_diagonal_value(self):
        assert box.overlap_f(3, 3) == 0.5

    def test_same_parity_vanishes(self):
        assert box.overlap_f(1, 3) == pytest.approx(0.0, abs=1e-15)
        assert box.overlap_f(2, 6) == pytest.approx(0.0, abs=1e-15)

    def test_against_quadrature_oracle(self):
        for n, k in ((1, 1), (3, 1), (5, 2), (8, 4), (2, 1)):
            oracle = halfbox_overlap_quadrature(n, k)
            assert np.sqrt(2) * box.overlap_f(n, 2 * k) == pytest.approx(
                oracle, abs=1e-12)

    def test_f12_squared_value(self):
        # quadrature gives <1|psi_1>^2 = 2 f(1,2)^2 = 32/(9 pi^2)
        oracle = halfbox_overlap_quadrature(1, 1) ** 2 / 2
        assert oracle == pytest.approx(16 / (9 * np.pi ** 2), abs=1e-12)
        assert box.overlap_f(1, 2) ** 2 == pytest.approx(oracle, abs=1e-13)

    def test_odd_even_square_formula(self):
        for n in (1, 3, 7, 15):
            for k in (1, 2, 5):
                if n == 2 * k:
                    continue
                expected = (4 / np.pi ** 2) * 4 * k ** 2 / (n ** 2 - 4 * k ** 2) ** 2
                assert box.overlap_f(n, 2 * k) ** 2 == pytest.approx(
                    expected, abs=1e-15)


class TestSigma0:
    def test_left_half_mass_is_one(self):
        cfg = box.BoxConfig(N=10)
        state, trunc = box.sigma0(cfg)
        p_left = box.overlap_matrix(cfg.basis_cutoff)
        assert expectation_P(state, p_left) == pytest.approx(1.0, abs=5 * trunc + 1e-9)

    def test_truncation_below_tolerance(self):
        for n in (1, 2, 10, 100):
            _, trunc = box.sigma0(box.BoxConfig(N=n))
            assert trunc <= 1e-6

    def test_component_norm_sums(self):
        cfg = box.BoxConfig(N=10)
        n = np.arange(1, cfg.basis_cutoff + 1)
        for k in range(1, cfg.N + 1):
            total = float(np.sum(2 * box.overlap_f(n, 2 * k) ** 2))
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_too_small_cutoff_raises(self):
        with pytest.raises(ValueError, match="basis_cutoff"):
            box.sigma0(box.BoxConfig(N=10, basis_cutoff=20))

    def test_boson_state_independent_of_n(self):
        s1, _ = box.sigma0(box.BoxConfig(N=1, statistics="boson"))
        s10, _ = box.sigma0(box.BoxConfig(N=10, statistics="boson",
                                          basis_cutoff=box.default_basis_cutoff(1)))
        assert np.array_equal(s1.vectors, s10.vectors)
        assert s1.kind == "pure"


class TestClosedForm:
    def test_t0_equals_half_recurrence(self):
        cfg = box.BoxConfig(N=10)
        d0 = box.distinguishability_closed_form(cfg, 0.0)
        dh = box.distinguishability_closed_form(cfg, cfg.recurrence_time / 2)
        assert d0 == pytest.approx(dh, abs=1e-12)

    def test_time_symmetry_about_quarter_period(self):
        cfg = box.BoxConfig(N=10)
        series = box.box_series(cfg, n_samples=2049)
        assert np.abs(series.values - series.values[::-1]).max() < 1e-9

    def test_agrees_with_spectral_route(self):
        cfg = box.BoxConfig(N=10)
        sysm = box.spectral_system(cfg)
        state, _ = box.sigma0(cfg)
        p_left = box.overlap_matrix(cfg.basis_cutoff)
        times = RNG.uniform(0, cfg.recurrence_time, size=50)
        spectral = distinguishability_series(sysm, state, p_left, times)
        closed = box.distinguishability_closed_form(
            cfg, times, K_cutoff=cfg.basis_cutoff - 2 * cfg.N)
        assert np.abs(spectral - closed).max() <= 1e-6

    def test_agrees_with_spectral_route_n100(self):
        cfg = box.BoxConfig(N=100)
        sysm = box.spectral_system(cfg)
        state, _ = box.sigma0(cfg)
        p_left = box.overlap_matrix(cfg.basis_cutoff)
        times = RNG.uniform(0, cfg.recurrence_time, size=10)
        spectral = distinguishability_series(sysm, state, p_left, times)
        closed = box.distinguishability_closed_form(
            cfg, times, K_cutoff=cfg.basis_cutoff - 2 * cfg.N)
        assert np.abs(spectral - closed).max() <= 1e-6

    def test_cutoff_convergence_bounded_by_tail(self):
        cfg = box.BoxConfig(N=10)
        for k in (10, 20, 40):
            m1, _ = box.time_average_D(cfg, K_cutoff=k)
            m2, _ = box.time_average_D(cfg, K_cutoff=4 * k)
            assert abs(m1 - m2) <= box.tail_bound(k)


class TestTimeAverage:
    def test_mean_decreases_with_n(self):
        m100, b100 = box.time_average_D(box.BoxConfig(N=100))
        m10, b10 = box.time_average_D(box.BoxConfig(N=10))
        assert m100 < m10
        assert m100 <= b100 and m10 <= b10

    def test_boson_mean_large(self):
        cfg = box.BoxConfig(N=10, statistics="boson")
        series = box.box_series(cfg)
        assert series.mean() > 0.1

    def test_n100_average_below_bound_family(self):
        cfg = box.BoxConfig(N=100)
        mean, bound = box.time_average_D(cfg)
        assert mean <= bound


class TestEquilibrationTime:
    def test_identity(self):
        cfg = box.BoxConfig(N=17, a=0.07)
        t_eq, _ = box.equilibration_time(cfg)
        assert t_eq * (2 * cfg.N * cfg.a * cfg.nu) == pytest.approx(1.0)

    def test_halves_when_n_doubles(self):
        t1, _ = box.equilibration_time(box.BoxConfig(N=10))
        t2, _ = box.equilibration_time(box.BoxConfig(N=20))
        assert t2 == pytest.approx(t1 / 2)

    def test_certified_level_holds(self):
        cfg = box.BoxConfig(N=50, a=0.05)
        t_eq, level = box.equilibration_time(cfg)
        assert box.distinguishability_closed_form(cfg, t_eq) <= level

    def test_main_text_variant_is_twice(self):
        cfg = box.BoxConfig(N=10)
        t_eq, _ = box.equilibration_time(cfg)
        assert box.equilibration_time_main_text(cfg) == pytest.approx(2 * t_eq)


class TestThreeD:
    def test_cube_reduces_to_one_d(self):
        cfg3 = box.BoxConfig(N=8)
        reduced, j, _ = box.three_d_reduction(cfg3)
        assert j == 2 and reduced.N == 2
        t = np.linspace(0, reduced.recurrence_time / 2, 257)
        d3 = box.distinguishability_closed_form(reduced, t)
        d1 = box.distinguishability_closed_form(box.BoxConfig(N=2), t)
        assert np.array_equal(d3, d1)

    def test_single_particle(self):
        _, j, _ = box.three_d_reduction(box.BoxConfig(N=1))
        assert j == 1

    def test_teq_bound_value(self):
        cfg = box.BoxConfig(N=27, a=0.05)
        _, j, t_eq = box.three_d_reduction(cfg)
        assert j == 3
        assert t_eq == pytest.approx(1.0 / (2 * 3 * cfg.a * cfg.nu))

    def test_non_cube_rejected(self):
        with pytest.raises(ValueError, match="cube"):
            box.three_d_reduction(box.BoxConfig(N=10))


class TestMeanSquare:
    def test_matches_grid_quadrature_at_short_window(self):
        cfg = box.BoxConfig(N=5)
        T = 3.0 / cfg.nu
        exact = box.mean_sq_delta(cfg, T)
        w, g = box.closed_form_pairs(cfg.N, cfg.N)
        t = np.linspace(0, T, 200001)
        vals = np.zeros_like(t)
        for j in range(0, len(g), 2000):
            vals += np.cos((t * cfg.nu)[:, None] * g[None, j:j + 2000]) @ w[j:j + 2000]
        grid = float(np.trapezoid(vals ** 2, t) / T)
        assert exact == pytest.approx(grid, rel=1e-6)

    def test_positive_and_bounded(self):
        cfg = box.BoxConfig(N=10)
        for T in (10 / cfg.nu, 100 / cfg.nu):
            v = box.mean_sq_delta(cfg, T)
            assert 0 <= v <= 1.0


class TestConfigValidation:
    def test_bad_statistics(self):
        with pytest.raises(ValueError):
            box.BoxConfig(N=3, statistics="anyon")

    def test_cutoff_floor(self):
        with pytest.raises(ValueError, match="2N"):
            box.BoxConfig(N=10, basis_cutoff=15)

    def test_a_range(self):
        with pytest.raises(ValueError):
            box.BoxConfig(N=3, a=1.5)
