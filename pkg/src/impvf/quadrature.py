"""Impulse-aware composite trapezoid rule and the Volterra/Fredholm kernel terms.

Samples are split at impulse nodes: a panel that opens at an impulse node
uses the stored right limit, a panel that closes there uses the node value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .core import Grid, Trajectory
from .errors import GridMismatch, ImpvfError, InvalidArgument, KernelEvalError

KernelKind = Literal["volterra", "fredholm"]


def node_position(grid: Grid, node) -> int:
    """Resolve a node given either as an index or as a time that sits on the grid."""
    if isinstance(node, (int, np.integer)):
        i = int(node)
        if not 0 <= i < grid.size:
            raise GridMismatch(f"node index {i} outside grid of {grid.size} nodes")
        return i
    t = float(node)
    i = int(np.searchsorted(grid.nodes, t))
    tol = 1e-12 * max(1.0, grid.b)
    for j in (i - 1, i):
        if 0 <= j < grid.size and abs(grid.nodes[j] - t) <= tol:
            return j
    raise GridMismatch(f"time {t!r} is not a grid node")


def _segments(values: np.ndarray, grid: Grid, right_limits: np.ndarray | None) -> np.ndarray:
    """Trapezoid contributions of each grid segment; sample axis first."""
    if values.shape[0] != grid.size:
        raise GridMismatch(f"expected {grid.size} samples along the integration axis, got {values.shape[0]}")
    opening = values[:-1].copy()
    if right_limits is not None and grid.n_impulses:
        if right_limits.shape[0] != grid.n_impulses:
            raise GridMismatch(f"expected {grid.n_impulses} right limits, got {right_limits.shape[0]}")
        opening[list(grid.impulse_index)] = right_limits
    dt = np.diff(grid.nodes).reshape((-1,) + (1,) * (values.ndim - 1))
    return 0.5 * dt * (opening + values[1:])


def cumulative(values, grid: Grid, right_limits=None, axis: int = 0) -> np.ndarray:
    """``out[i] = integral from 0 to nodes[i]`` along ``axis`` (same shape as ``values``)."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    r = None if right_limits is None else np.moveaxis(np.asarray(right_limits, dtype=float), axis, 0)
    seg = _segments(v, grid, r)
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(seg, axis=0, out=out[1:])
    return np.moveaxis(out, 0, axis)


def integrate_samples(values, grid: Grid, lo=0, hi=None, right_limits=None) -> np.ndarray:
    """Composite trapezoid integral of sampled values over ``[nodes[lo], nodes[hi]]``.

    ``values`` has one row per node (scalars or state vectors);
    ``right_limits`` one row per impulse. Without right limits the samples
    are treated as continuous.
    """
    v = np.asarray(values, dtype=float)
    r = None if right_limits is None else np.asarray(right_limits, dtype=float)
    i0 = node_position(grid, lo)
    i1 = grid.size - 1 if hi is None else node_position(grid, hi)
    if i0 > i1:
        raise InvalidArgument(f"integration bounds out of order: node {i0} > node {i1}")
    seg = _segments(v, grid, r)
    total = np.zeros(v.shape[1:])
    for s in seg[i0:i1]:
        total = total + s
    return total


def integrate_trajectory(traj: Trajectory, lo=0, hi=None) -> np.ndarray:
    return integrate_samples(traj.values, traj.grid, lo, hi, traj.right_limits)


@dataclass(frozen=True)
class KernelFn:
    """Kernel ``F(tau, sigma, w)`` returning a state vector.

    ``func`` is vectorized: it receives broadcastable ``tau`` and ``sigma``
    arrays and a state array whose last axis holds the components, and it
    returns an array whose last axis has length ``dim``. ``uses_tau`` may be
    set to False when the kernel ignores its first argument; the integral
    is then computed once instead of once per outer node.
    """

    kind: KernelKind
    func: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    dim: int
    uses_tau: bool = True

    def __post_init__(self):
        if self.kind not in ("volterra", "fredholm"):
            raise InvalidArgument(f"kernel kind must be 'volterra' or 'fredholm', got {self.kind!r}")

    def evaluate(self, tau, sigma, state) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        state = np.asarray(state, dtype=float)
        shape = np.broadcast_shapes(tau.shape, sigma.shape, state.shape[:-1]) + (self.dim,)
        try:
            out = np.asarray(self.func(tau, sigma, state), dtype=float)
            out = np.broadcast_to(out, shape)
        except ImpvfError:
            raise self._locate(tau, sigma, state) from None
        if not np.all(np.isfinite(out)):
            raise self._locate(tau, sigma, state)
        return out

    def _locate(self, tau, sigma, state) -> KernelEvalError:
        """Rescan pointwise to find the first failing (tau, sigma)."""
        t_b, s_b = np.broadcast_arrays(tau, sigma)
        st = np.broadcast_to(state, t_b.shape + state.shape[-1:])
        for idx in np.ndindex(t_b.shape):
            t, s = float(t_b[idx]), float(s_b[idx])
            try:
                val = np.asarray(self.func(np.asarray(t), np.asarray(s), st[idx]), dtype=float)
            except ImpvfError as exc:
                return KernelEvalError(f"{self.kind} kernel failed at tau={t!r}, sigma={s!r}: {exc}", t, s)
            if not np.all(np.isfinite(val)):
                return KernelEvalError(f"{self.kind} kernel is not finite at tau={t!r}, sigma={s!r}", t, s)
        return KernelEvalError(f"{self.kind} kernel evaluation failed")


def _columns(traj: Trajectory):
    g = traj.grid
    return g.nodes, traj.values, g.impulse_times, traj.right_limits


def kernel_profile(k: KernelFn, traj: Trajectory) -> np.ndarray:
    """Kernel integral at every node; shape ``(nodes, dim)``.

    Volterra: ``int_0^{t_i} F(t_i, s, w(s)) ds``; Fredholm: ``int_0^b F(t_i, s, w(s)) ds``.
    """
    g = traj.grid
    s_nodes, w_nodes, s_imp, w_imp = _columns(traj)
    if k.uses_tau:
        tau = g.nodes[:, None]
        vals = k.evaluate(tau, s_nodes[None, :], w_nodes[None, :, :])
        rl = k.evaluate(tau, s_imp[None, :], w_imp[None, :, :]) if g.n_impulses else None
        cum = cumulative(vals, g, rl, axis=1)
        if k.kind == "volterra":
            idx = np.arange(g.size)
            return cum[idx, idx, :].copy()
        return cum[:, -1, :].copy()
    vals = k.evaluate(0.0, s_nodes, w_nodes)
    rl = k.evaluate(0.0, s_imp, w_imp) if g.n_impulses else None
    cum = cumulative(vals, g, rl, axis=0)
    if k.kind == "volterra":
        return cum
    return np.broadcast_to(cum[-1], cum.shape).copy()


def _row_integral(k: KernelFn, traj: Trajectory, i: int, hi: int) -> np.ndarray:
    g = traj.grid
    s_nodes, w_nodes, s_imp, w_imp = _columns(traj)
    tau = float(g.nodes[i])
    vals = k.evaluate(tau, s_nodes, w_nodes)
    rl = k.evaluate(tau, s_imp, w_imp) if g.n_impulses else None
    return integrate_samples(vals, g, 0, hi, rl)


def volterra_term(k: KernelFn, traj: Trajectory, node) -> np.ndarray:
    if k.kind != "volterra":
        raise InvalidArgument("volterra_term needs a kernel tagged 'volterra'")
    i = node_position(traj.grid, node)
    return _row_integral(k, traj, i, i)


def fredholm_term(k: KernelFn, traj: Trajectory, node) -> np.ndarray:
    if k.kind != "fredholm":
        raise InvalidArgument("fredholm_term needs a kernel tagged 'fredholm'")
    i = node_position(traj.grid, node)
    return _row_integral(k, traj, i, traj.grid.size - 1)
