import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from weakcollapse.collapse import (
    collapse_rhs,
    convergence_exponent,
    fixed_point,
    fixed_point_residual,
    geodesic_map_density,
    geodesic_map_pure,
    integrate_trajectory,
    pure_state_rhs,
)
from weakcollapse.errors import DimensionError, InvariantBreach, QuantumStateError, ZeroProbabilityError
from weakcollapse.integrate import IntegratorParams, renormalize
from weakcollapse.quantum import (
    SIGMA_X,
    density,
    ket,
    plus_state,
    purity,
    random_density,
    random_pure_state,
    trace,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _oracle_trajectory(rho0, p, s_eval, g=1.0):
    """Independent reference: adaptive scipy integration at tight tolerance."""
    d = rho0.shape[0]

    def f(s, y):
        rho = y.reshape(d, d)
        return (g * (rho @ p + p @ rho - 2 * rho * np.trace(p @ rho))).ravel()

    sol = solve_ivp(f, (0, s_eval[-1]), rho0.ravel(), t_eval=s_eval, method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y.T.reshape(-1, d, d)


class TestGeodesic:
    def test_midpoint_of_plus(self, p0):
        out = geodesic_map_pure(plus_state(), p0, 0.5)
        np.testing.assert_allclose(out, [2 / np.sqrt(5), 1 / np.sqrt(5)])

    def test_endpoints(self, p0):
        psi = plus_state()
        np.testing.assert_allclose(geodesic_map_pure(psi, p0, 0.0), psi)
        np.testing.assert_allclose(geodesic_map_pure(psi, p0, 1.0), [1, 0])

    def test_orthogonal_state_at_s1(self, p0):
        with pytest.raises(ZeroProbabilityError):
            geodesic_map_pure(ket(1, 2), p0, 1.0)

    def test_parameter_range(self, p0):
        with pytest.raises(ValueError):
            geodesic_map_pure(plus_state(), p0, 1.5)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, s=st.floats(0, 0.99))
    def test_density_form_agrees_with_pure_form(self, seed, s):
        rng = np.random.default_rng(seed)
        psi = random_pure_state(3, rng)
        p = density(random_pure_state(3, rng))
        rho = geodesic_map_density(density(psi), p, s)
        np.testing.assert_allclose(rho, density(geodesic_map_pure(psi, p, s)), atol=1e-12)


class TestCollapseRhs:
    def test_maximally_mixed(self, p0):
        np.testing.assert_allclose(collapse_rhs(np.eye(2) / 2, p0), np.diag([0.5, -0.5]))

    def test_fixed_points_are_stationary(self, p0):
        assert np.max(np.abs(collapse_rhs(p0, p0))) == 0
        q = np.eye(2) - p0
        assert np.max(np.abs(collapse_rhs(q, p0))) == 0

    def test_pure_state_rhs(self, p0):
        np.testing.assert_allclose(pure_state_rhs(plus_state(), p0), np.array([1, -1]) / (2 * np.sqrt(2)))

    def test_dimension_mismatch(self, p0):
        with pytest.raises(DimensionError):
            collapse_rhs(np.eye(3) / 3, p0)

    def test_broadcasts_over_batches(self, rng, p0):
        stack = np.array([random_density(2, rng) for _ in range(4)])
        out = collapse_rhs(stack, p0)
        for r, o in zip(stack, out):
            np.testing.assert_allclose(o, collapse_rhs(r, p0))

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds, dim=st.integers(2, 6))
    def test_traceless_hermitian_and_purity_stationary(self, seed, dim):
        rng = np.random.default_rng(seed)
        psi = random_pure_state(dim, rng)
        rho = density(psi)
        p = density(random_pure_state(dim, rng))
        f = collapse_rhs(rho, p)
        assert abs(np.trace(f)) <= 1e-12
        assert np.max(np.abs(f - f.conj().T)) <= 1e-12
        # d/ds Tr rho^2 = 2 Tr(rho f) vanishes for pure states
        assert abs(np.trace(rho @ f)) <= 1e-12
        # the pure-state equation generates the same density derivative
        dpsi = pure_state_rhs(psi, p)
        np.testing.assert_allclose(np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj()), f, atol=1e-12)


class TestFixedPoint:
    def test_residual_of_mixed_state(self, p0):
        assert fixed_point_residual(np.eye(2) / 2, p0) == pytest.approx(1 / np.sqrt(2))

    def test_orthogonal_state(self, p0):
        with pytest.raises(ZeroProbabilityError):
            fixed_point(density(ket(1, 2)), p0)


class TestIntegrateTrajectory:
    def test_logistic_population(self, p0):
        params = IntegratorParams(ds=1e-3, duration=1.0, sample_every=100)
        rec = integrate_trajectory(np.eye(2) / 2, p0, params=params)
        # rho00' = 2 rho00 (1 - rho00) from 1/2 gives 1 / (1 + e^{-2s})
        np.testing.assert_allclose(rec.rho[:, 0, 0].real, 1 / (1 + np.exp(-2 * rec.s)), atol=1e-12)

    def test_matches_adaptive_oracle(self, rng):
        rho0 = random_density(3, rng)
        p = density(random_pure_state(3, rng))
        rec = integrate_trajectory(rho0, p, params=IntegratorParams(ds=1e-3, duration=3.0, sample_every=250))
        ref = _oracle_trajectory(rho0, p, rec.s)
        assert np.max(np.abs(rec.rho - ref)) <= 1e-9

    def test_sampling_grid_lands_on_duration(self, p0):
        rec = integrate_trajectory(np.eye(2) / 2, p0, params=IntegratorParams(ds=0.03, duration=1.0))
        assert rec.s[0] == 0 and rec.s[-1] == pytest.approx(1.0, abs=1e-15)

    def test_batched_matches_individual(self, rng):
        p = density(random_pure_state(3, rng))
        stack = np.array([density(random_pure_state(3, rng)) for _ in range(3)])
        params = IntegratorParams(ds=1e-2, duration=1.0)
        batch = integrate_trajectory(stack, p, params=params)
        for i in range(3):
            single = integrate_trajectory(stack[i], p, params=params)
            np.testing.assert_allclose(batch.rho[:, i], single.rho, atol=1e-14)

    def test_hamiltonian_only_is_rabi(self):
        params = IntegratorParams(ds=1e-3, duration=2.0, sample_every=100)
        rec = integrate_trajectory(density(ket(0, 2)), np.diag([1.0, 0.0]), h=SIGMA_X / 2, g=0.0, params=params)
        np.testing.assert_allclose(rec.rho[:, 0, 0].real, np.cos(rec.s / 2) ** 2, atol=1e-12)

    def test_negative_rate_rejected(self, p0):
        with pytest.raises(ValueError):
            integrate_trajectory(np.eye(2) / 2, p0, g=-1)

    def test_non_projector_rejected(self):
        with pytest.raises(QuantumStateError):
            integrate_trajectory(np.eye(2) / 2, np.diag([0.5, 0.0]))

    def test_renormalize_guards_drift(self):
        with pytest.raises(InvariantBreach):
            renormalize(np.diag([0.6, 0.6]).astype(complex), drift_tol=1e-7)
        fixed = renormalize(np.diag([0.5 + 1e-9, 0.5]).astype(complex), drift_tol=1e-7)
        assert abs(trace(fixed) - 1) <= 1e-15


class TestConvergenceRate:
    """Tail exponents of the two distance measures to the fixed point."""

    params = IntegratorParams(ds=1e-3, duration=12.0, sample_every=50)

    @pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
    def test_population_defect_decays_at_2g(self, rng, g, p0):
        rho0 = density(random_pure_state(2, rng))
        rec = integrate_trajectory(rho0, p0, g=g, params=self.params)
        assert convergence_exponent(rec, p0, metric="population") == pytest.approx(-2 * g, rel=1e-2)

    @pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
    def test_incoherent_state_frobenius_at_2g(self, g, p0):
        rec = integrate_trajectory(np.diag([0.3, 0.7]).astype(complex), p0, g=g, params=self.params)
        assert convergence_exponent(rec, metric="frobenius") == pytest.approx(-2 * g, rel=1e-2)

    @pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
    def test_coherent_state_frobenius_at_g(self, rng, g, p0):
        # coherences P rho Q shrink like sqrt(1 - d), i.e. e^{-g s}
        params = IntegratorParams(ds=1e-3, duration=14.0 / g, sample_every=50)
        rec = integrate_trajectory(density(random_pure_state(2, rng)), p0, g=g, params=params)
        assert convergence_exponent(rec, metric="frobenius") == pytest.approx(-g, rel=1e-2)

    def test_too_short_tail(self, p0):
        rec = integrate_trajectory(np.eye(2) / 2, p0, params=IntegratorParams(ds=1e-2, duration=1.0))
        with pytest.raises(ValueError, match="tail"):
            convergence_exponent(rec)


@settings(max_examples=15, deadline=None)
@given(seed=seeds, dim=st.sampled_from([2, 3, 4, 8]))
def test_purity_preserved(seed, dim):
    rng = np.random.default_rng(seed)
    rho0 = density(random_pure_state(dim, rng))
    p = density(random_pure_state(dim, rng))
    rec = integrate_trajectory(rho0, p, params=IntegratorParams(ds=1e-3, duration=2.0))
    assert np.max(np.abs(purity(rec.rho) - 1)) <= 1e-8


def test_rk4_step_halving_gives_fourth_order(p0):
    rho0 = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]])
    exact = _oracle_trajectory(rho0, p0, np.array([0.0, 2.0]))[-1]
    errs = [
        np.max(np.abs(integrate_trajectory(rho0, p0, params=IntegratorParams(ds=ds, duration=2.0)).final - exact))
        for ds in (0.1, 0.05, 0.025)
    ]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7)
