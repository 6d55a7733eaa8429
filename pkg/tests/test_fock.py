import itertools

import numpy as np
import pytest

from freegas.fock import (
    FockHamiltonian,
    FockSpace,
    ManyBodyOperator,
    algebra_deviation,
    build_hamiltonian,
    counting_operator,
    evolve_expectation,
    fluctuation_check,
    mode_correlations,
    product_state,
    time_avg_fluctuation,
)
from freegas.spectral import SpectralSystem

RNG = np.random.default_rng(42)


def random_unitary(d, rng=RNG):
    return np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]


def random_system(m, rng=RNG):
    h = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return SpectralSystem.from_hamiltonian((h + h.conj().T) / 2)


class TestAlgebra:
    def test_fermion_car(self):
        assert algebra_deviation(FockSpace("fermion", 4)) <= 1e-12

    def test_boson_ccr_below_truncation(self):
        assert algebra_deviation(FockSpace("boson", 3, n_max_per_mode=4)) <= 1e-12

    def test_dim_cap_enforced(self):
        with pytest.raises(ValueError, match="cap"):
            FockSpace("fermion", 13)

    def test_eq12_number_operator_identity(self):
        # tr[rho (b_i^dag b_i)(b_j^dag b_j)]
        #   = tr[rho b_j^dag b_i^dag b_i b_j] + delta_ij tr[rho b_i^dag b_i]
        rng = np.random.default_rng(1)
        for statistics, m in (("fermion", 4), ("boson", 3)):
            space = FockSpace(statistics, m, n_max_per_mode=3)
            u = random_unitary(m, rng)
            bs = [space.annihilation_of(u[:, i]) for i in range(2)]
            psi = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
            if statistics == "boson":
                # keep clear of the truncation boundary so the CCR are exact
                for k, occ in enumerate(space.basis):
                    if max(occ) >= space.n_max_per_mode:
                        psi[k] = 0.0
            psi /= np.linalg.norm(psi)
            for i, j in itertools.product(range(2), repeat=2):
                bi, bj = bs[i], bs[j]
                ni = (bi.conj().T @ bi).toarray()
                nj = (bj.conj().T @ bj).toarray()
                lhs = psi.conj() @ ni @ nj @ psi
                normal = (bj.conj().T @ bi.conj().T @ bi @ bj).toarray()
                rhs = psi.conj() @ normal @ psi
                if i == j:
                    rhs = rhs + psi.conj() @ ni @ psi
                assert abs(lhs - rhs) < 1e-10

    def test_eq15_exchange_term_on_product_state(self):
        # exchange part of the 4-point function equals |<phi_i|Q|phi_j>|^2
        rng = np.random.default_rng(2)
        m, n = 5, 3
        space = FockSpace("fermion", m)
        occ_basis = random_unitary(m, rng)
        psi = product_state(space, occ_basis[:, :n], np.ones(n))
        q = occ_basis[:, :n] @ occ_basis[:, :n].conj().T
        phis = random_unitary(m, rng)
        for i, j in ((0, 1), (1, 2), (0, 0)):
            bi = space.annihilation_of(phis[:, i])
            bj = space.annihilation_of(phis[:, j])
            four = (bj.conj().T @ bi.conj().T @ bi @ bj).toarray()
            val4 = float(np.real(psi.conj() @ four @ psi))
            ni = float(np.real(psi.conj() @ (bi.conj().T @ bi).toarray() @ psi))
            nj = float(np.real(psi.conj() @ (bj.conj().T @ bj).toarray() @ psi))
            exchange = abs(phis[:, i].conj() @ q @ phis[:, j]) ** 2
            assert val4 == pytest.approx(ni * nj - exchange, abs=1e-10)


class TestHamiltonian:
    def test_diagonal_system_diagonal_hamiltonian(self):
        sysm = SpectralSystem.diagonal([0.5, 1.5, 2.5])
        space = FockSpace("fermion", 3)
        h = build_hamiltonian(space, sysm).matrix
        off = h - np.diag(np.diag(h))
        assert np.abs(off).max() < 1e-12

    def test_single_mode_spectrum(self):
        sysm = SpectralSystem.diagonal([0.7])
        space = FockSpace("fermion", 1)
        evals = np.linalg.eigvalsh(build_hamiltonian(space, sysm).matrix)
        assert np.allclose(np.sort(evals), [0.0, 0.7])

    def test_spectrum_equals_subset_sums(self):
        sysm = random_system(3)
        space = FockSpace("fermion", 3)
        evals = np.sort(np.linalg.eigvalsh(build_hamiltonian(space, sysm).matrix))
        sums = sorted(sum(c) for r in range(4)
                      for c in itertools.combinations(sysm.energies, r))
        assert np.allclose(evals, sums, atol=1e-10)

    def test_commutes_with_total_number(self):
        sysm = random_system(3)
        space = FockSpace("fermion", 3)
        h = build_hamiltonian(space, sysm).matrix
        n_tot = space.total_number()
        assert np.abs(h @ n_tot - n_tot @ h).max() < 1e-10


class TestEvolveExpectation:
    def test_t0_is_plain_expectation(self):
        sysm = random_system(3)
        space = FockSpace("fermion", 3)
        hf = build_hamiltonian(space, sysm)
        psi = product_state(space, np.eye(3)[:, :2], [1, 1])
        m_op = counting_operator(space, np.eye(3)[:, :1])
        val0 = evolve_expectation(space, hf, psi, m_op, 0.0)
        assert val0 == pytest.approx(
            float(np.real(psi.conj() @ m_op.matrix @ psi)), abs=1e-12)

    def test_total_number_conserved(self):
        sysm = random_system(4)
        space = FockSpace("fermion", 4)
        ham = FockHamiltonian(space, build_hamiltonian(space, sysm))
        psi = product_state(space, random_unitary(4)[:, :2], [1, 1])
        m_op = ManyBodyOperator(space.total_number().astype(complex))
        vals = [ham.expectation(psi, m_op, t) for t in (0.0, 0.9, 7.7)]
        assert np.allclose(vals, 2.0, atol=1e-10)


class TestFluctuations:
    def test_counter_of_occupied_modes(self):
        rng = np.random.default_rng(3)
        m, n = 5, 3
        space = FockSpace("fermion", m)
        basis = random_unitary(m, rng)
        psi = product_state(space, basis[:, :n], np.ones(n))
        m_op = counting_operator(space, basis[:, :n])
        var, ok = fluctuation_check(space, psi, m_op)
        assert var == pytest.approx(0.0, abs=1e-10)
        assert ok

    def test_empty_orthogonal_mode_zero_variance(self):
        space = FockSpace("fermion", 3)
        psi = product_state(space, np.eye(3)[:, :1], [1])
        m_op = counting_operator(space, np.eye(3)[:, 2:])
        var, ok = fluctuation_check(space, psi, m_op)
        assert var == pytest.approx(0.0, abs=1e-12)
        assert ok

    def test_random_sweep_bound_holds(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            m = int(rng.integers(2, 6))
            n = int(rng.integers(1, min(3, m) + 1))
            space = FockSpace("fermion", m)
            basis = random_unitary(m, rng)
            psi = product_state(space, basis[:, :n], np.ones(n))
            r = int(rng.integers(1, m + 1))
            m_op = counting_operator(space, random_unitary(m, rng)[:, :r])
            _, ok = fluctuation_check(space, psi, m_op)
            assert ok

    def test_boson_bound_with_slack(self):
        rng = np.random.default_rng(5)
        m, n = 3, 2
        space = FockSpace("boson", m, n_max_per_mode=n)
        basis = random_unitary(m, rng)
        psi = product_state(space, basis[:, :n], np.ones(n))
        m_op = counting_operator(space, random_unitary(m, rng)[:, :2])
        _, ok = fluctuation_check(space, psi, m_op)
        assert ok

    def test_non_product_state_flagged(self):
        space = FockSpace("fermion", 2)
        # cat of 0 and 2 particles: not a product state
        psi = (product_state(space, np.eye(2), [1, 1]) + space.vacuum())
        psi /= np.linalg.norm(psi)
        m_op = counting_operator(space, np.eye(2)[:, :1])
        with pytest.raises(ValueError, match="product"):
            fluctuation_check(space, psi, m_op)


class TestTimeAvgFluctuation:
    def test_stationary_state_constant(self):
        sysm = random_system(4)
        space = FockSpace("fermion", 4)
        ham = FockHamiltonian(space, build_hamiltonian(space, sysm))
        psi = product_state(space, sysm.eigenvectors[:, :2], [1, 1])
        m_op = counting_operator(space, random_unitary(4)[:, :2])
        m1 = float(np.real(psi.conj() @ m_op.matrix @ psi))
        m2 = float(np.real(psi.conj() @ m_op.matrix @ m_op.matrix @ psi))
        sigma0 = np.sqrt(m2 - m1 ** 2)
        mean, stderr = time_avg_fluctuation(space, ham, psi, m_op, sysm,
                                            n_times=50)
        assert mean == pytest.approx(sigma0, abs=1e-10)
        assert stderr < 1e-12

    def test_number_operator_zero(self):
        sysm = random_system(3)
        space = FockSpace("fermion", 3)
        ham = FockHamiltonian(space, build_hamiltonian(space, sysm))
        psi = product_state(space, np.eye(3)[:, :1], [1])
        m_op = ManyBodyOperator(space.total_number().astype(complex))
        mean, _ = time_avg_fluctuation(space, ham, psi, m_op, sysm, n_times=50)
        # sqrt amplifies the ~1e-15 cancellation noise in m2 - m1^2
        assert mean == pytest.approx(0.0, abs=1e-6)

    def test_random_instance_below_sqrt_n(self):
        rng = np.random.default_rng(6)
        sysm = random_system(4, rng)
        space = FockSpace("fermion", 4)
        ham = FockHamiltonian(space, build_hamiltonian(space, sysm))
        psi = product_state(space, random_unitary(4, rng)[:, :2], [1, 1])
        m_op = counting_operator(space, random_unitary(4, rng)[:, :2])
        mean, stderr = time_avg_fluctuation(space, ham, psi, m_op, sysm,
                                            n_times=1000)
        assert mean <= np.sqrt(2) + 3 * stderr

    def test_degenerate_gaps_refused(self):
        sysm = SpectralSystem.diagonal([0.0, 1.0, 2.0, 4.0])
        space = FockSpace("fermion", 4)
        ham = FockHamiltonian(space, build_hamiltonian(space, sysm))
        psi = product_state(space, np.eye(4)[:, :2], [1, 1])
        m_op = counting_operator(space, np.eye(4)[:, :1])
        with pytest.raises(ValueError, match="degenerate"):
            time_avg_fluctuation(space, ham, psi, m_op, sysm)


class TestModeCorrelations:
    def test_product_state_correlations(self):
        rng = np.random.default_rng(7)
        m, n = 4, 2
        space = FockSpace("fermion", m)
        basis = random_unitary(m, rng)
        psi = product_state(space, basis[:, :n], np.ones(n))
        c = mode_correlations(space, psi)
        # C_ij = <a_i^dag a_j> is the transpose of the occupied projector
        q = basis[:, :n] @ basis[:, :n].conj().T
        assert np.abs(c - q.T).max() < 1e-10
