import numpy as np
import pytest

from fastphase import (
    SchwarzSpec,
    TrustRegionConfig,
    aligned_relative_error,
    generate_schwarz_object,
    ls,
    measure,
    minimize,
    normalized,
    schwarz_init,
    steihaug_cg,
    wirtinger_flow,
)
from conftest import rand_complex


def _identity_hvp(u):
    return u.copy()


def _instance(n=(8, 8), rho=4.0, seed=0, w=None):
    w = w or (0,) * len(n)
    x = generate_schwarz_object(SchwarzSpec(n, w, rho, seed))
    return x, measure(x, tuple(2 * s for s in n))


class TestSteihaugCg:
    def test_identity_system_solves_in_one_step(self, rng):
        g = rand_complex((4,), rng)
        res = steihaug_cg(g, _identity_hvp, radius=1e9, tol=1e-12)
        assert np.allclose(res.step, -g, atol=1e-14)
        assert not res.boundary_hit and not res.neg_curv

    def test_negative_curvature_goes_to_boundary(self):
        # stacked matrix diag(1, -1) acts on a complex scalar as conj
        g = np.array([1.0j])
        res = steihaug_cg(g, lambda u: np.conj(u), radius=2.0, tol=1e-12)
        assert res.boundary_hit and res.neg_curv
        assert np.linalg.norm(res.step) == pytest.approx(2.0, rel=1e-12)

    def test_matches_dense_solve_on_spd_system(self, rng):
        k = 6
        A = rng.standard_normal((2 * k, 2 * k))
        W = A @ A.T + 2 * k * np.eye(2 * k)

        def hvp_fn(u):
            s = np.concatenate([u.real, u.imag])
            out = W @ s
            return out[:k] + 1j * out[k:]

        g = rand_complex((k,), rng)
        res = steihaug_cg(g, hvp_fn, radius=1e9, tol=1e-13, max_iter=500)
        direct = np.linalg.solve(W, -np.concatenate([g.real, g.imag]))
        assert np.allclose(
            np.concatenate([res.step.real, res.step.imag]), direct, atol=1e-10
        )

    def test_step_never_exceeds_radius(self, rng):
        for radius in (1e-3, 0.1, 1.0):
            g = rand_complex((5,), rng)
            res = steihaug_cg(g, lambda u: 0.01 * u, radius=radius, tol=1e-12)
            assert np.linalg.norm(res.step) <= radius + 1e-12

    def test_zero_gradient_returns_zero_step(self):
        res = steihaug_cg(np.zeros(3, dtype=complex), _identity_hvp, radius=1.0)
        assert not np.any(res.step)
        assert res.iterations == 0


class TestMinimize:
    def test_exact_solution_converges_immediately(self):
        x, y = _instance()
        report = minimize(y, x, normalized(1.0, (0, 0)))
        assert report.converged
        assert report.iterations == 0
        assert report.cost_trace[0] <= 1e-18 * np.sum(y)

    def test_recovers_from_initializer(self):
        for seed in range(3):
            rng = np.random.default_rng(seed)
            n = (16, 16)
            w = tuple(int(v) for v in rng.integers(0, 16, size=2))
            x = generate_schwarz_object(SchwarzSpec(n, w, 4.0, 100 + seed))
            y = measure(x, (32, 32))
            x0 = schwarz_init(y, w, n)
            report = minimize(y, x0, normalized(1.0, w))
            assert report.converged
            assert report.iterations <= 50
            assert aligned_relative_error(report.x_final, x) <= 1e-8

    def test_accepted_cost_trace_monotone(self):
        x, y = _instance(seed=3)
        x0 = schwarz_init(y, (0, 0), (8, 8))
        report = minimize(y, x0, normalized(1.0, (0, 0)))
        trace = np.array(report.cost_trace)
        assert np.all(np.diff(trace) <= 0)

    def test_bitwise_deterministic(self):
        x, y = _instance(seed=4)
        x0 = schwarz_init(y, (0, 0), (8, 8))
        r1 = minimize(y, x0, normalized(1.0, (0, 0)))
        r2 = minimize(y, x0, normalized(1.0, (0, 0)))
        assert r1.cost_trace == r2.cost_trace
        assert r1.grad_norm_trace == r2.grad_norm_trace
        assert np.array_equal(r1.x_final, r2.x_final)

    def test_cost_tolerance_honored(self):
        x, y = _instance(seed=5)
        x0 = schwarz_init(y, (0, 0), (8, 8))
        cfg = TrustRegionConfig(cost_tol=1e-4 * float(np.sum(y)))
        report = minimize(y, x0, normalized(1.0, (0, 0)), cfg)
        assert report.converged
        assert report.cost_trace[-1] <= cfg.cost_tol

    def test_config_validation(self):
        from fastphase import ParameterError

        with pytest.raises(ParameterError):
            TrustRegionConfig(eta_accept=0.3)
        with pytest.raises(ParameterError):
            TrustRegionConfig(shrink=1.5)
        with pytest.raises(ParameterError):
            TrustRegionConfig(grow=0.9)


class TestWirtingerFlow:
    def test_converges_from_initializer(self):
        x = generate_schwarz_object(SchwarzSpec((8, 8), (0, 0), 4.0, 7))
        x = x / np.linalg.norm(x)
        y = measure(x, (16, 16))
        x0 = schwarz_init(y, (0, 0), (8, 8))
        report = wirtinger_flow(y, x0, max_iter=4000, kind=ls())
        assert report.cost_trace[-1] <= 1e-6

    def test_zero_gradient_point_does_not_move(self):
        _, y = _instance(seed=8)
        x0 = np.zeros((8, 8), dtype=complex)
        report = wirtinger_flow(y, x0, max_iter=50, kind=ls())
        assert not np.any(report.x_final)
        assert not report.converged

    def test_cost_trace_monotone(self):
        x, y = _instance(seed=9)
        rng = np.random.default_rng(0)
        x0 = rand_complex((8, 8), rng) * np.linalg.norm(x) / 8.0
        report = wirtinger_flow(y, x0, max_iter=200, kind=ls())
        assert np.all(np.diff(report.cost_trace) <= 0)
