"""Mild-solution operator and Picard successive approximation.

For a trajectory ``w`` the operator returns

    R(w)(t) = T(t) w0 + int_0^t T(t - s) G(s, w(s), V(s), F(s)) ds
              + sum_{0 < t_k < t} T(t - t_k) I_k(w(t_k))

with ``V`` the Volterra and ``F`` the Fredholm kernel integrals. The outer
integral is the composite trapezoid rule on the grid, evaluated by the
recursion ``S_j = E_j S_{j-1}^+ + dt/2 (E_j g_{j-1}^+ + g_j)`` with
``E_j = exp(A dt_j)``; by the semigroup law this equals the trapezoid sum of
``T(t_j - s) g(s)`` over all earlier nodes without forming O(N^2)
exponentials.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Bielecki, Chebyshev, Grid, Trajectory, make_grid, norm
from .dsl.expr import Expr, eval_array, to_source, variables
from .dsl.problem import ProblemSpec
from .errors import (EvalError, GridMismatch, InsufficientResolution, InvalidArgument,
                     KernelEvalError)
from .quadrature import KernelFn, cumulative, kernel_profile
from .semigroup import ExponentialCache

log = logging.getLogger(__name__)


def _stack(exprs: tuple[Expr, ...], env: dict, shape: tuple[int, ...]) -> np.ndarray:
    cols = [np.broadcast_to(eval_array(e, env), shape) for e in exprs]
    return np.stack(cols, axis=-1)


def expr_kernel(kind: str, exprs: tuple[Expr, ...], dim: int, b: float) -> KernelFn:
    """Kernel backed by DSL expressions over ``tau, sigma, b, w``."""

    def func(tau, sigma, state):
        env = {"tau": tau, "sigma": sigma, "b": b, "w": state}
        shape = np.broadcast_shapes(np.shape(tau), np.shape(sigma), np.shape(state)[:-1])
        return _stack(exprs, env, shape)

    uses_tau = any("tau" in variables(e) for e in exprs)
    return KernelFn(kind, func, dim, uses_tau=uses_tau)


def _check_grid(p: ProblemSpec, grid: Grid) -> None:
    if abs(grid.b - p.b) > 1e-12 * max(1.0, p.b):
        raise GridMismatch(f"grid horizon {grid.b!r} differs from problem horizon {p.b!r}")
    times = grid.impulse_times
    if len(times) != p.n or np.any(np.abs(times - np.array(p.impulse_times)) > 1e-12 * max(1.0, p.b)):
        raise GridMismatch("grid impulse nodes do not match the problem's impulse times")


def problem_grid(p: ProblemSpec, h: float) -> Grid:
    return make_grid(p.b, p.impulse_times, h)


class MildOperator:
    """``R`` for one problem on one grid; exponentials and kernels are built once."""

    def __init__(self, p: ProblemSpec, grid: Grid):
        _check_grid(p, grid)
        self.problem = p
        self.grid = grid
        self.F1 = expr_kernel("volterra", p.F1, p.d, p.b)
        self.F2 = expr_kernel("fredholm", p.F2, p.d, p.b)
        self._exp = ExponentialCache(p.A)
        self._zero_A = not p.A.any()
        dt = np.diff(grid.nodes)
        self._dt = dt
        self._E = None if self._zero_A else [self._exp(h) for h in dt]
        self._imp_pos = {i: k for k, i in enumerate(grid.impulse_index)}

    # -- pieces -------------------------------------------------------------

    def kernel_terms(self, w: Trajectory) -> tuple[np.ndarray, np.ndarray]:
        """Volterra and Fredholm integrals at every node (continuous in time)."""
        return kernel_profile(self.F1, w), kernel_profile(self.F2, w)

    def nonlinearity(self, w: Trajectory, V: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``G`` at every node (left values) and at the right limits."""
        g = self.grid
        p = self.problem
        left = self._eval_G(g.nodes, w.values, V, F)
        idx = list(g.impulse_index)
        if idx:
            right = self._eval_G(g.impulse_times, w.right_limits, V[idx], F[idx])
        else:
            right = np.zeros((0, p.d))
        return left, right

    def _eval_G(self, tau, W, V, F) -> np.ndarray:
        env = {"tau": tau, "b": self.problem.b, "w": W, "y1": V, "y2": F}
        try:
            return _stack(self.problem.G, env, (len(tau),))
        except EvalError as exc:
            t = float(tau[exc.index]) if exc.index is not None and exc.index < len(tau) else None
            raise KernelEvalError(f"G failed at tau={t!r}: {exc}", tau=t) from None

    def jumps(self, w: Trajectory) -> np.ndarray:
        """``I_k(w(t_k))`` evaluated on left values; shape ``(n, d)``."""
        p = self.problem
        out = np.zeros((p.n, p.d))
        for k, (imp, i) in enumerate(zip(p.impulses, self.grid.impulse_index)):
            env = {"b": p.b, "w": w.values[i]}
            try:
                out[k] = _stack(imp.map, env, ())
            except EvalError as exc:
                raise KernelEvalError(f"impulse map {k} failed at tau={imp.time!r}: {exc}",
                                      tau=imp.time) from None
        return out

    # -- propagation --------------------------------------------------------

    def propagate(self, g_left: np.ndarray, g_right: np.ndarray, jumps: np.ndarray) -> Trajectory:
        """Trapezoid mild integral of sampled forcing plus impulse sum."""
        grid = self.grid
        w0 = self.problem.w0
        if self._zero_A:
            vals = w0 + cumulative(g_left, grid, g_right)
            idx = np.array(grid.impulse_index, dtype=int)
            if idx.size:
                # jump k enters every node strictly after t_k
                after = np.zeros_like(vals)
                after[idx + 1] = jumps
                vals = vals + np.cumsum(after, axis=0)
                right = vals[idx] + jumps
            else:
                right = np.zeros((0, self.problem.d))
            return Trajectory(grid, vals, right)

        N = grid.size
        vals = np.empty((N, self.problem.d))
        right = np.empty((grid.n_impulses, self.problem.d))
        S = w0.copy()
        vals[0] = S
        for j in range(1, N):
            prev, g_prev = S, g_left[j - 1]
            k = self._imp_pos.get(j - 1)
            if k is not None:
                prev = S + jumps[k]
                right[k] = prev
                g_prev = g_right[k]
            E = self._E[j - 1]
            S = E @ prev + (0.5 * self._dt[j - 1]) * (E @ g_prev + g_left[j])
            vals[j] = S
        return Trajectory(grid, vals, right)

    def free_evolution(self) -> Trajectory:
        """``T(t) w0`` on the grid, with no jumps."""
        d = self.problem.d
        n = self.grid.n_impulses
        return self.propagate(np.zeros((self.grid.size, d)), np.zeros((n, d)), np.zeros((n, d)))

    def __call__(self, w: Trajectory) -> Trajectory:
        if not w.grid.same_as(self.grid):
            raise GridMismatch("trajectory grid differs from the operator grid")
        if w.dim != self.problem.d:
            raise GridMismatch(f"trajectory dimension {w.dim} != problem dimension {self.problem.d}")
        V, F = self.kernel_terms(w)
        g_left, g_right = self.nonlinearity(w, V, F)
        return self.propagate(g_left, g_right, self.jumps(w))


def apply_mild_operator(p: ProblemSpec, w: Trajectory) -> Trajectory:
    return MildOperator(p, w.grid)(w)


@dataclass(frozen=True, eq=False)
class SolveResult:
    solution: Trajectory
    iterations: int
    final_step_norm: float
    gamma_used: float
    converged: bool
    step_history: tuple[float, ...] = field(default=())
    tol: float = 0.0

    def ratios(self) -> np.ndarray:
        """Successive step-norm ratios ``step[m+1] / step[m]``."""
        s = np.asarray(self.step_history)
        if s.size < 2:
            return np.zeros(0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return s[1:] / s[:-1]


def picard_solve(p: ProblemSpec, grid: Grid, gamma: Optional[float] = None, tol: float = 1e-10,
                 max_iter: int = 500, initial: Optional[Trajectory] = None,
                 operator: Optional[MildOperator] = None) -> SolveResult:
    """Iterate ``w_{m+1} = R(w_m)`` from ``T(t) w0`` until the Bielecki step norm is ``<= tol``.

    ``gamma=None`` uses ``1/b``: the weight then stays above ``1/e`` on the
    whole horizon, so ``tol`` also bounds the plain sup step to within a factor e.
    """
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol!r}")
    if gamma is None:
        gamma = 1.0 / p.b
    kind = Bielecki(gamma)
    R = operator if operator is not None else MildOperator(p, grid)
    w = initial if initial is not None else R.free_evolution()
    history: list[float] = []
    converged = False
    step = float("inf")
    it = 0
    for it in range(1, max_iter + 1):
        nxt = R(w)
        step = norm(nxt - w, kind)
        history.append(step)
        w = nxt
        log.debug("picard iteration %d: step %.3e", it, step)
        if step <= tol:
            converged = True
            break
        if not np.isfinite(step):
            break
    return SolveResult(solution=w, iterations=it, final_step_norm=step, gamma_used=float(gamma),
                       converged=converged, step_history=tuple(history), tol=tol)


# -- residuals ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IntegralDefect:
    """``w - R(w)`` at every node and right limit."""

    defect: Trajectory

    @property
    def per_node(self) -> np.ndarray:
        return np.linalg.norm(self.defect.values, axis=1)

    @property
    def per_right_limit(self) -> np.ndarray:
        return np.linalg.norm(self.defect.right_limits, axis=1)

    @property
    def sup(self) -> float:
        return norm(self.defect, Chebyshev())


@dataclass(frozen=True, eq=False)
class DerivativeResidual:
    """``w' - A w - G(...)`` by finite differences within panels."""

    residual_left: np.ndarray
    residual_right: np.ndarray
    truncation_estimate: float

    @property
    def sup(self) -> float:
        top = float(np.linalg.norm(self.residual_left, axis=1).max())
        if self.residual_right.size:
            top = max(top, float(np.linalg.norm(self.residual_right, axis=1).max()))
        return top


@dataclass(frozen=True)
class ResidualReport:
    integral_defect_sup: float
    derivative_residual_sup: float
    jump_violation: float
    truncation_estimate: float
    per_node: np.ndarray = field(repr=False, compare=False, default=None)


def integral_defect(p: ProblemSpec, w: Trajectory, operator: Optional[MildOperator] = None) -> IntegralDefect:
    R = operator if operator is not None else MildOperator(p, w.grid)
    return IntegralDefect(w - R(w))


def derivative_residual(p: ProblemSpec, w: Trajectory,
                        operator: Optional[MildOperator] = None) -> DerivativeResidual:
    """Measured epsilon of an approximate solution.

    Derivatives are second-order finite differences (central inside a panel,
    one-sided at its ends); a panel opening at an impulse starts from the
    stored right limit, so no stencil crosses a jump.
    """
    R = operator if operator is not None else MildOperator(p, w.grid)
    grid = w.grid
    V, F = R.kernel_terms(w)
    g_left, g_right = R.nonlinearity(w, V, F)
    A = p.A
    res_left = np.zeros_like(w.values)
    res_right = np.zeros_like(w.right_limits)
    trunc = 0.0
    pos = {i: k for k, i in enumerate(grid.impulse_index)}
    for s, e in grid.panels():
        if e - s + 1 < 3:
            raise InsufficientResolution(
                f"panel [{grid.nodes[s]!r}, {grid.nodes[e]!r}] has {e - s + 1} nodes; need >= 3")
        t = grid.nodes[s:e + 1]
        vals = w.values[s:e + 1].copy()
        gs = g_left[s:e + 1].copy()
        k = pos.get(s)
        if k is not None:
            vals[0] = w.right_limits[k]
            gs[0] = g_right[k]
        deriv = np.gradient(vals, t, axis=0, edge_order=2)
        r = deriv - vals @ A.T - gs
        res_left[s + 1:e + 1] = r[1:]
        if k is None:
            res_left[s] = r[0]
        else:
            res_right[k] = r[0]
        if e - s + 1 >= 5 and (e - s) % 2 == 0:
            coarse = np.gradient(vals[::2], t[::2], axis=0, edge_order=2)
            trunc = max(trunc, float(np.abs(deriv[::2] - coarse).max()) / 3.0)
    return DerivativeResidual(res_left, res_right, trunc)


def jump_violation(p: ProblemSpec, w: Trajectory, operator: Optional[MildOperator] = None) -> float:
    """``max_k || (w(t_k+) - w(t_k)) - I_k(w(t_k)) ||``."""
    if not p.n:
        return 0.0
    R = operator if operator is not None else MildOperator(p, w.grid)
    idx = list(w.grid.impulse_index)
    gap = (w.right_limits - w.values[idx]) - R.jumps(w)
    return float(np.linalg.norm(gap, axis=1).max())


def residual_report(p: ProblemSpec, w: Trajectory) -> ResidualReport:
    R = MildOperator(p, w.grid)
    defect = integral_defect(p, w, R)
    deriv = derivative_residual(p, w, R)
    return ResidualReport(
        integral_defect_sup=defect.sup,
        derivative_residual_sup=deriv.sup,
        jump_violation=jump_violation(p, w, R),
        truncation_estimate=deriv.truncation_estimate,
        per_node=defect.per_node,
    )
