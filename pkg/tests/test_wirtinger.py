import numpy as np
import pytest

from fastphase import (
    DomainError,
    ParameterError,
    SchwarzSpec,
    basin_check,
    condition_study,
    cost,
    diag_preconditioner,
    dft_oversampled,
    generate_schwarz_object,
    gradient,
    hessian_dense,
    hvp,
    hvp_stacked,
    ls,
    measure,
    normalized,
    reg,
    schwarz_init,
    sos_identity_residual,
    steihaug_cg,
)
from conftest import dft_direct, rand_complex

ALL_KINDS = [ls(), reg(1.0, (1, 0)), normalized(1.0, (1, 0))]


def _solution_instance(n=(4, 4), rho=4.0, seed=0, unit_scale=True):
    x = generate_schwarz_object(SchwarzSpec(n, (0,) * len(n), rho, seed))
    if unit_scale:
        x = x / np.linalg.norm(x)
    return x, measure(x, tuple(2 * s for s in n))


def _stacked(u):
    return np.concatenate([u.real.ravel(), u.imag.ravel()])


class TestCost:
    def test_zero_at_noiseless_solution(self):
        x, y = _solution_instance()
        for kind in (ls(), reg(1.0, (0, 0)), normalized(1.0, (0, 0))):
            assert cost(x, y, kind) == pytest.approx(0.0, abs=1e-20)

    def test_ls_at_origin_is_quarter_norm(self, rng):
        y = rng.random((6, 6)) + 0.5
        x0 = np.zeros((3, 3), dtype=complex)
        assert cost(x0, y, ls()) == pytest.approx(0.25 * np.sum(y * y), rel=1e-13)

    def test_matches_direct_summation(self, rng):
        x = rand_complex((3, 2), rng)
        t, y = _solution_instance((3, 2), 4.0, 1)
        X = dft_direct(x, (6, 4))
        r = np.abs(X) ** 2 - y
        assert cost(x, y, ls()) == pytest.approx(0.25 * np.sum(r * r), rel=1e-12)
        expected_norm = 0.125 * np.sum(r * r / y) + 0.5 * np.imag(x[1, 0]) ** 2
        assert cost(x, y, normalized(1.0, (1, 0))) == pytest.approx(
            expected_norm, rel=1e-12
        )

    def test_normalized_requires_positive_y(self):
        y = np.ones((4, 4))
        y[2, 2] = 0.0
        with pytest.raises(DomainError):
            cost(np.ones((2, 2), dtype=complex), y, normalized(1.0, (0, 0)))


class TestGradient:
    def test_zero_at_noiseless_solution(self):
        x, y = _solution_instance()
        g = gradient(x, y, normalized(1.0, (0, 0)))
        assert np.linalg.norm(g) < 1e-10 * np.linalg.norm(y)

    def test_zero_at_origin_saddle(self):
        _, y = _solution_instance()
        g = gradient(np.zeros((4, 4), dtype=complex), y, ls())
        assert np.all(g == 0)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_central_finite_differences(self, kind, rng):
        _, y = _solution_instance((3, 2), 4.0, 2)
        x = rand_complex((3, 2), rng)
        g = gradient(x, y, kind)
        gs = _stacked(2.0 * g)
        h = 1e-6 * (1.0 + np.max(np.abs(x)))
        for _ in range(20):
            u = rand_complex((3, 2), rng)
            fd = (cost(x + h * u, y, kind) - cost(x - h * u, y, kind)) / (2 * h)
            exact = float(gs @ _stacked(u))
            assert fd == pytest.approx(exact, rel=1e-6, abs=1e-9)


class TestHvp:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_stacked_symmetry(self, kind, rng):
        _, y = _solution_instance((3, 2), 4.0, 3)
        x = rand_complex((3, 2), rng)
        for _ in range(5):
            u, v = rand_complex((3, 2), rng), rand_complex((3, 2), rng)
            Hu = hvp_stacked(x, u, y, kind)
            Hv = hvp_stacked(x, v, y, kind)
            lhs = float(np.real(np.vdot(v, Hu)))
            rhs = float(np.real(np.vdot(u, Hv)))
            scale = max(abs(lhs), abs(rhs), 1e-30)
            assert abs(lhs - rhs) / scale < 1e-10

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_finite_difference_of_gradient(self, kind, rng):
        _, y = _solution_instance((3, 2), 4.0, 4)
        x = rand_complex((3, 2), rng)
        u = rand_complex((3, 2), rng)
        h = 1e-6 * (1.0 + np.max(np.abs(x)))
        fd = (gradient(x + h * u, y, kind) - gradient(x - h * u, y, kind)) / (2 * h)
        lin, anti = hvp(x, u, y, kind)
        assert np.linalg.norm(fd - (lin + anti)) / np.linalg.norm(fd) < 1e-5

    def test_identity_plus_rank_one_limit(self, rng):
        # extreme dominance: the linear block approaches a quarter of
        # identity-plus-anchor-projector and the antilinear block vanishes
        x, y = _solution_instance((4, 4), 1e6, 1, unit_scale=False)
        u = rand_complex((4, 4), rng)
        lin, anti = hvp(x, u, y, normalized(1.0, (0, 0)))
        expected = u.copy()
        expected[0, 0] += u[0, 0]
        assert np.linalg.norm(4.0 * lin - expected) / np.linalg.norm(expected) < 1e-4
        assert np.linalg.norm(4.0 * anti) / np.linalg.norm(u) < 1e-4


class TestHessianDense:
    def test_matches_hvp_on_random_vectors(self, rng):
        x, y = _solution_instance((2, 2), 4.0, 5)
        xp = x + 0.1 * rand_complex((2, 2), rng)
        kind = normalized(1.0, (0, 0))
        H = hessian_dense(xp, y, kind)
        for _ in range(5):
            u = rand_complex((2, 2), rng)
            assert np.allclose(H @ _stacked(u), _stacked(hvp_stacked(xp, u, y, kind)),
                               atol=1e-12 * np.linalg.norm(H))

    def test_symmetry(self, rng):
        _, y = _solution_instance((2, 2), 4.0, 6)
        x = rand_complex((2, 2), rng)
        for kind in (ls(), reg(1.0, (0, 1)), normalized(1.0, (0, 1))):
            H = hessian_dense(x, y, kind)
            assert np.linalg.norm(H - H.T) < 1e-10 * np.linalg.norm(H)

    @pytest.mark.parametrize("kindf", [reg, normalized])
    def test_diagonally_dominant_positive_definite_at_solutions(self, kindf):
        for seed in range(3):
            x, y = _solution_instance((4, 4), 8.0, seed)
            H = hessian_dense(x, y, kindf(1.0, (0, 0)))
            diag = np.abs(np.diag(H))
            offsum = np.sum(np.abs(H), axis=1) - diag
            assert np.all(diag > offsum), f"seed {seed}"
            assert np.linalg.eigvalsh(H).min() > 0.0

    def test_size_guard(self):
        x = np.zeros((17, 17), dtype=complex)
        with pytest.raises(ParameterError):
            hessian_dense(x, np.ones((34, 34)), ls())


class TestDiagPreconditioner:
    def test_matches_dense_diagonal(self, rng):
        _, y = _solution_instance((2, 2), 4.0, 7)
        x = rand_complex((2, 2), rng)
        for kind in (ls(), reg(1.0, (1, 1)), normalized(1.0, (1, 1))):
            H = hessian_dense(x, y, kind)
            d = diag_preconditioner(x, y, kind).reshape(-1)
            dense_diag = np.diag(H)
            mask = dense_diag > 1e-6 * np.max(np.abs(dense_diag))  # above the floor
            assert np.allclose(d[mask], dense_diag[mask], rtol=1e-10)

    def test_solution_diagonal_structure(self):
        # at a strongly dominant noiseless solution the diagonal is the
        # flat half-identity level away from the anchor; at the anchor
        # the second-harmonic term doubles the Re entry and cancels in
        # the Im entry, where the phase penalty contributes lam instead
        x, y = _solution_instance((4, 4), 100.0, 0, unit_scale=False)
        d = diag_preconditioner(x, y, normalized(1.0, (0, 0)))
        off = np.ones((4, 4), dtype=bool)
        off[0, 0] = False
        assert d[0][off] == pytest.approx(0.5, rel=0.05)
        assert d[1][off] == pytest.approx(0.5, rel=0.05)
        assert d[0][0, 0] == pytest.approx(1.0, rel=0.05)
        assert d[1][0, 0] == pytest.approx(1.0, rel=0.05)

    def test_preconditioned_cg_needs_fewer_iterations(self, rng):
        x, y = _solution_instance((8, 8), 10.0, 2)
        xp = x + 0.01 * rand_complex((8, 8), rng) * np.linalg.norm(x) / 8.0
        kind = normalized(1.0, (0, 0))
        g = 2.0 * gradient(xp, y, kind)

        def hfn(v):
            return hvp_stacked(xp, v, y, kind)

        plain = steihaug_cg(g, hfn, 1e12, None, 1e-10, 3000)
        pre = steihaug_cg(g, hfn, 1e12, diag_preconditioner(xp, y, kind), 1e-10, 3000)
        assert pre.iterations < plain.iterations


class TestBasin:
    def test_zero_error_is_inside_with_zero_rate(self):
        x, y = _solution_instance()
        rep = basin_check(x, x, y, (0, 0))
        assert rep.inside and rep.vdot == 0.0

    def test_initializer_lands_inside(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            w = tuple(int(v) for v in rng.integers(0, 8, size=2))
            x = generate_schwarz_object(SchwarzSpec((8, 8), w, 4.0, seed))
            y = measure(x, (16, 16))
            x0 = schwarz_init(y, w, (8, 8))
            assert basin_check(x0, x, y, w).inside, seed

    def test_inside_implies_negative_decay_rate(self, rng):
        x, y = _solution_instance((4, 4), 4.0, 8, unit_scale=False)
        inside_count = 0
        trials = 0
        while inside_count < 1000 and trials < 20000:
            trials += 1
            scale = 10.0 ** rng.uniform(-3, -0.5) * np.linalg.norm(x)
            eps = scale * rand_complex((4, 4), rng)
            rep = basin_check(x - eps, x, y, (0, 0))
            if rep.inside:
                inside_count += 1
                assert rep.vdot < 0.0
        assert inside_count == 1000


class TestSosIdentity:
    def test_zero_error_gives_zero_residual(self):
        x, _ = _solution_instance()
        assert sos_identity_residual(np.zeros_like(x), x, (0, 0)) == 0.0

    def test_residual_below_scaled_tolerance(self, rng):
        for _ in range(20):
            eps = rand_complex((4, 4), rng) * 10.0 ** rng.uniform(-3, 3)
            x_opt = rand_complex((4, 4), rng) * 10.0 ** rng.uniform(-3, 3)
            scale = np.linalg.norm(eps) + np.linalg.norm(x_opt)
            assert sos_identity_residual(eps, x_opt, (1, 2)) < 1e-9 * scale**4

    def test_degree_four_homogeneity(self, rng):
        # both sides of the identity scale as the fourth power
        eps = rand_complex((3, 3), rng)
        x_opt = rand_complex((3, 3), rng)
        m = (6, 6)
        E = dft_oversampled(eps, m)
        R = np.abs(np.real(E * np.conj(dft_oversampled(x_opt, m))))
        e2 = np.abs(E) ** 2
        value = 2.0 * float(np.sum((e2 - R) ** 2))
        E2 = dft_oversampled(2.0 * eps, m)
        R2 = np.abs(np.real(E2 * np.conj(dft_oversampled(2.0 * x_opt, m))))
        value2 = 2.0 * float(np.sum(((np.abs(E2) ** 2) - R2) ** 2))
        assert value2 == pytest.approx(16.0 * value, rel=1e-12)


class TestConditionStudy:
    def test_preconditioning_never_hurts_and_stays_bounded(self):
        ratios = (2.0, 10.0, 100.0)
        plain = condition_study(ratios, (4, 4), precond=False, seed=0)
        pre = condition_study(ratios, (4, 4), precond=True, seed=0)
        for (r, cu), (_, cp) in zip(plain, pre):
            assert cp <= cu

    def test_identity_plus_rank_one_spectrum_at_extreme_ratio(self):
        # eigenvalues approach {c, ..., c, 2c}: condition number -> 2
        (_, cu), = condition_study([1e6], (4, 4), precond=False, seed=1)
        assert cu == pytest.approx(2.0, abs=1e-3)
        (_, cp), = condition_study([1e6], (4, 4), precond=True, seed=1)
        assert cp <= 10.0
