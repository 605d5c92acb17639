"""Trust-region Newton-CG over the stacked real parameterization, and a
plain Wirtinger-gradient descent baseline.

The stacked (Re, Im) vector space is represented by complex grids with
the real inner product ``<u, v> = Re vdot(u, v)``; Hessian actions and
gradients come from :mod:`fastphase.wirtinger`.  The subproblem solver
is the classical CG truncated at the trust boundary or on negative
curvature, optionally preconditioned by the exact Hessian diagonal.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .instance import ParameterError
from .wirtinger import CostKind, cost, diag_preconditioner, gradient, hvp_stacked

__all__ = [
    "TrustRegionConfig",
    "SolveReport",
    "CgResult",
    "steihaug_cg",
    "minimize",
    "wirtinger_flow",
]


@dataclass(frozen=True)
class TrustRegionConfig:
    """Knobs of the trust-region loop.

    ``None`` fields derive at solve time: initial radius ``0.1 |x0|``,
    max radius ``10 |x0|``, CG tolerance ``min(0.5, sqrt(|g|))`` (the
    inexact-Newton forcing sequence) and gradient tolerance
    ``1e-14 |y|_2``.
    """

    delta0: Optional[float] = None
    delta_max: Optional[float] = None
    eta_accept: float = 0.1
    shrink: float = 0.25
    grow: float = 2.0
    cg_tol_rel: Optional[float] = None
    cg_max_iter: int = 250
    grad_tol: Optional[float] = None
    cost_tol: float = 0.0
    max_outer: int = 500
    use_preconditioner: bool = False

    def __post_init__(self):
        if not 0.0 < self.eta_accept < 0.25:
            raise ParameterError("eta_accept must lie in (0, 1/4)")
        if not 0.0 < self.shrink < 1.0:
            raise ParameterError("shrink must lie in (0, 1)")
        if self.grow <= 1.0:
            raise ParameterError("grow must exceed 1")
        if self.cg_max_iter < 1 or self.max_outer < 0:
            raise ParameterError("iteration limits must be positive")


@dataclass
class SolveReport:
    """Record of one minimization run."""

    x_final: np.ndarray
    cost_trace: list = field(default_factory=list)
    grad_norm_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    cg_iters_total: int = 0
    wall_seconds: float = 0.0
    warnings: list = field(default_factory=list)


class CgResult(NamedTuple):
    step: np.ndarray
    boundary_hit: bool
    neg_curv: bool
    iterations: int


def _dot(a: np.ndarray, b: np.ndarray):
    # numpy scalar, preserving extended precision when inputs carry it
    return np.real(np.vdot(a, b))


def _boundary_tau(s, d, radius):
    sd = _dot(s, d)
    dd = _dot(d, d)
    ss = _dot(s, s)
    return (-sd + np.sqrt(sd * sd + dd * (radius * radius - ss))) / dd


def steihaug_cg(
    grad: np.ndarray,
    hvp_fn: Callable[[np.ndarray], np.ndarray],
    radius: float,
    precond: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    max_iter: int = 250,
) -> CgResult:
    """Approximately solve ``H s = -g`` inside the trust ball.

    Terminates when the residual drops below ``tol * |g|``, when an
    iterate crosses the boundary, or when a direction of nonpositive
    curvature appears (followed to the boundary).  ``precond`` is the
    stacked Hessian diagonal of shape ``(2,) + grid`` applied as a
    Jacobi preconditioner; the trust ball stays Euclidean.

    Raises:
        FloatingPointError: if non-finite values appear in the iterates.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")

    def apply_minv(v):
        if precond is None:
            return v
        return v.real / precond[0] + 1j * (v.imag / precond[1])

    s = np.zeros_like(grad)
    r = -grad
    gnorm = np.sqrt(_dot(grad, grad))
    if gnorm == 0.0:
        return CgResult(s, False, False, 0)
    z = apply_minv(r)
    d = z.copy()
    rz = _dot(r, z)
    for it in range(1, max_iter + 1):
        Hd = hvp_fn(d)
        if not (np.all(np.isfinite(Hd.real)) and np.all(np.isfinite(Hd.imag))):
            raise FloatingPointError("non-finite Hessian action in CG")
        curv = _dot(d, Hd)
        if curv <= 0.0:
            tau = _boundary_tau(s, d, radius)
            return CgResult(s + tau * d, True, True, it)
        alpha = rz / curv
        s_next = s + alpha * d
        if np.sqrt(_dot(s_next, s_next)) >= radius:
            tau = _boundary_tau(s, d, radius)
            return CgResult(s + tau * d, True, False, it)
        s = s_next
        r = r - alpha * Hd
        if np.sqrt(_dot(r, r)) <= tol * gnorm:
            return CgResult(s, False, False, it)
        z = apply_minv(r)
        rz_next = _dot(r, z)
        d = z + (rz_next / rz) * d
        rz = rz_next
    return CgResult(s, False, False, max_iter)


def minimize(
    y: np.ndarray,
    x0: np.ndarray,
    kind: CostKind,
    cfg: TrustRegionConfig | None = None,
) -> SolveReport:
    """Trust-region Newton-CG minimization of the selected cost.

    Deterministic for fixed inputs.  Stops when the cost reaches
    ``cost_tol``, the stacked gradient norm reaches ``grad_tol``, the
    radius collapses to the numerical floor (stagnation at the
    attainable optimum), or ``max_outer`` is exhausted; ``converged``
    reports whether one of the two tolerance criteria was met.

    Raises:
        FloatingPointError: if the cost turns non-finite (trace attached
            to the exception).
    """
    cfg = cfg or TrustRegionConfig()
    t0 = time.perf_counter()
    x = np.array(x0, dtype=x0.dtype if np.iscomplexobj(x0) else complex)
    scale0 = max(float(np.linalg.norm(x.astype(np.complex128))), 1.0)
    # radius collapse threshold sits above the working precision
    stagnation = 1e-17 if x.dtype == np.clongdouble else 1e-13
    delta = cfg.delta0 if cfg.delta0 is not None else 0.1 * scale0
    delta_max = cfg.delta_max if cfg.delta_max is not None else 10.0 * scale0
    grad_tol = (
        cfg.grad_tol
        if cfg.grad_tol is not None
        else 1e-14 * float(np.linalg.norm(np.asarray(y, dtype=float)))
    )

    f = cost(x, y, kind)
    report = SolveReport(x_final=x, cost_trace=[float(f)])
    for it in range(cfg.max_outer):
        report.iterations = it
        if not np.isfinite(float(f)):
            raise FloatingPointError(f"cost diverged; trace {report.cost_trace}")
        if float(f) <= cfg.cost_tol:
            report.converged = True
            break
        g = 2.0 * gradient(x, y, kind)
        gn = float(np.sqrt(_dot(g, g)))
        report.grad_norm_trace.append(gn)
        if gn <= grad_tol:
            report.converged = True
            break

        def hvp_fn(u, _x=x):
            return hvp_stacked(_x, u, y, kind)

        precond = diag_preconditioner(x, y, kind) if cfg.use_preconditioner else None
        cg_tol = cfg.cg_tol_rel if cfg.cg_tol_rel is not None else min(0.5, np.sqrt(gn))
        res = steihaug_cg(g, hvp_fn, delta, precond, cg_tol, cfg.cg_max_iter)
        report.cg_iters_total += res.iterations

        predicted = -(_dot(g, res.step) + 0.5 * _dot(res.step, hvp_fn(res.step)))
        x_new = x + res.step
        f_new = cost(x_new, y, kind)
        ratio = float((f - f_new) / predicted) if predicted > 0 else -1.0
        if ratio >= cfg.eta_accept:
            x, f = x_new, f_new
            report.cost_trace.append(float(f))
        if ratio < 0.25:
            delta *= cfg.shrink
        elif ratio > 0.75 and res.boundary_hit:
            delta = min(cfg.grow * delta, delta_max)
        if delta < stagnation * scale0:
            # radius collapsed: the iterate is at the attainable optimum
            report.iterations = it + 1
            gn = float(2.0 * np.linalg.norm(gradient(x, y, kind).astype(complex)))
            report.converged = float(f) <= cfg.cost_tol or gn <= grad_tol
            break
    else:
        report.iterations = cfg.max_outer

    report.x_final = x
    report.wall_seconds = time.perf_counter() - t0
    return report


def wirtinger_flow(
    y: np.ndarray,
    x0: np.ndarray,
    step_size: Optional[float] = None,
    max_iter: int = 500,
    kind: CostKind | None = None,
    cost_tol: float = 0.0,
) -> SolveReport:
    """Plain gradient descent on the selected cost.

    Fixed step (default ``1 / (2 max y)``) with halving backtracking on
    cost increase; the reduced step persists.  Converges linearly at
    best and serves as the baseline method in the comparisons.
    """
    from .wirtinger import ls

    kind = kind or ls()
    if step_size is None:
        step_size = 1.0 / (2.0 * float(np.max(y)))
    if step_size <= 0:
        raise ParameterError("step_size must be positive")
    t0 = time.perf_counter()
    x = np.array(x0, dtype=complex)
    f = cost(x, y, kind)
    report = SolveReport(x_final=x, cost_trace=[float(f)])
    mu = step_size
    for it in range(max_iter):
        report.iterations = it
        if float(f) <= cost_tol:
            report.converged = True
            break
        g = gradient(x, y, kind)
        gn = float(np.linalg.norm(g))
        report.grad_norm_trace.append(2.0 * gn)
        if gn == 0.0:
            break
        moved = False
        for _ in range(60):
            x_new = x - mu * g
            f_new = cost(x_new, y, kind)
            if float(f_new) <= float(f):
                x, f = x_new, f_new
                moved = True
                break
            mu *= 0.5
        if not moved:
            break
        report.cost_trace.append(float(f))
    else:
        report.iterations = max_iter
    if float(f) <= cost_tol:
        report.converged = True
    report.x_final = x
    report.wall_seconds = time.perf_counter() - t0
    return report
