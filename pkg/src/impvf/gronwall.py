"""Impulsive Gronwall-type bounds and an equality oracle that tests them.

An instance describes the linear integral inequality

    u(t) <= a(t) + int_0^t b(t,s) u(s) ds
                 + int_0^t int_0^s k1(t,s,r) u(r) dr ds
                 + int_0^t int_0^B k2(t,s,r) u(r) dr ds
                 + sum_{0 < t_k < t} beta_k(t) u(t_k)

on ``[0, B]``. The oracle solves it with equality, which is the extremal
input every valid bound must dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Grid, Trajectory, make_grid
from .dsl.expr import Expr, eval_array, to_source, variables
from .dsl.problem import load_toml, parse_expr_field, parse_impulse_times, with_line
from .errors import (EvalError, InstanceError, InvalidArgument, OracleDivergence,
                     ProblemFormatError)
from .quadrature import cumulative, node_position

A_VARS = frozenset({"tau", "b"})
BKER_VARS = frozenset({"tau", "sigma", "b"})
K_VARS = frozenset({"tau", "sigma", "varsigma", "b"})
BETA_VARS = frozenset({"tau", "b"})

# sizes of the sampling scan used to check the hypotheses on the data
SCAN_TAU = 50
SCAN_INNER = 7
# cap on elements of a (tau, sigma, varsigma) kernel tensor
MAX_TENSOR = 60_000_000


def _num(x: float) -> Expr:
    from .dsl.expr import Num
    return Num(float(x))


@dataclass(frozen=True, eq=False)
class GronwallInstance:
    """Data of the inequality; all functions are DSL expressions.

    Construction samples every function on a 50-point scan in ``tau`` and
    rejects negative values or decrease in ``tau``.
    """

    horizon: float
    a: Expr
    bker: Expr
    k1: Expr
    k2: Expr
    impulse_times: tuple[float, ...] = ()
    betas: tuple[Expr, ...] = ()
    name: str = ""
    k1_zero: bool = field(init=False, default=False)
    k2_zero: bool = field(init=False, default=False)

    def __post_init__(self):
        b = float(self.horizon)
        if not (math.isfinite(b) and b > 0):
            raise InstanceError(f"horizon must be positive, got {self.horizon!r}")
        object.__setattr__(self, "horizon", b)
        times = tuple(float(t) for t in self.impulse_times)
        object.__setattr__(self, "impulse_times", times)
        object.__setattr__(self, "betas", tuple(self.betas))
        if len(times) != len(self.betas):
            raise InstanceError("need one beta per impulse time")
        for t0, t1 in zip(times, times[1:]):
            if not t1 > t0:
                raise InstanceError("impulse times must be strictly increasing")
        if any(not 0 < t < b for t in times):
            raise InstanceError("impulse time must lie in (0,b)")
        for slot, e, allowed in (("a", self.a, A_VARS), ("b", self.bker, BKER_VARS),
                                 ("k1", self.k1, K_VARS), ("k2", self.k2, K_VARS),
                                 *((f"beta[{k}]", e, BETA_VARS) for k, e in enumerate(self.betas))):
            extra = variables(e) - allowed
            if extra:
                raise InstanceError(f"{slot} may not reference {sorted(extra)}")
        k1_samples = self._check("k1", self.k1)
        k2_samples = self._check("k2", self.k2)
        self._check("a", self.a)
        self._check("b", self.bker)
        for k, e in enumerate(self.betas):
            self._check(f"beta[{k}]", e)
        object.__setattr__(self, "k1_zero", not np.any(k1_samples))
        object.__setattr__(self, "k2_zero", not np.any(k2_samples))

    def _check(self, slot: str, e: Expr) -> np.ndarray:
        b = self.horizon
        tau = np.linspace(0.0, b, SCAN_TAU)[:, None, None]
        inner = np.linspace(0.0, b, SCAN_INNER)
        env = {"tau": tau, "sigma": inner[None, :, None], "varsigma": inner[None, None, :], "b": b}
        try:
            vals = np.broadcast_to(eval_array(e, env), (SCAN_TAU, SCAN_INNER, SCAN_INNER))
        except EvalError as exc:
            raise InstanceError(f"{slot} cannot be evaluated on [0, b]: {exc}") from None
        if np.any(vals < 0):
            raise InstanceError(f"{slot} = '{to_source(e)}' takes negative values")
        step = np.diff(vals, axis=0)
        if np.any(step < -1e-12 * (1.0 + np.abs(vals[1:]))):
            raise InstanceError(f"{slot} = '{to_source(e)}' is not nondecreasing in tau")
        return vals

    @property
    def n(self) -> int:
        return len(self.impulse_times)

    def grid(self, h: float) -> Grid:
        return make_grid(self.horizon, self.impulse_times, h)


def constant_instance(a: float, bker: float = 0.0, k1: float = 0.0, k2: float = 0.0,
                      impulses: Sequence[tuple[float, float]] = (), horizon: float = 1.0,
                      name: str = "") -> GronwallInstance:
    """Instance whose functions are all constants."""
    return GronwallInstance(horizon, _num(a), _num(bker), _num(k1), _num(k2),
                            tuple(t for t, _ in impulses), tuple(_num(beta) for _, beta in impulses),
                            name)


# -- discretization -----------------------------------------------------------

class _Discrete:
    """Kernel tensors of an instance sampled on a grid.

    Kernel arrays keep only the axes their expression depends on
    (size-1 axes otherwise), so constant kernels cost O(N) per application.
    """

    def __init__(self, inst: GronwallInstance, grid: Grid, impulse_nodes: Sequence[int]):
        self.inst = inst
        self.grid = grid
        self.imp = np.asarray(impulse_nodes, dtype=int)
        N = grid.size
        t = grid.nodes
        b = inst.horizon
        env = {"tau": t[:, None, None], "sigma": t[None, :, None], "varsigma": t[None, None, :], "b": b}
        env2 = {"tau": t[:, None], "sigma": t[None, :], "b": b}
        self.a = np.broadcast_to(eval_array(inst.a, {"tau": t, "b": b}), (N,))
        self.B = self._shape2(eval_array(inst.bker, env2))
        self.K1 = self._shape3(eval_array(inst.k1, env), "k1")
        self.K2 = self._shape3(eval_array(inst.k2, env), "k2")
        self.beta = [np.broadcast_to(eval_array(e, {"tau": t, "b": b}), (N,)) for e in inst.betas]

    @staticmethod
    def _shape2(arr) -> np.ndarray:
        arr = np.asarray(arr, dtype=float)
        return arr.reshape((1,) * (2 - arr.ndim) + arr.shape)

    def _shape3(self, arr, slot) -> np.ndarray:
        arr = np.asarray(arr, dtype=float)
        arr = arr.reshape((1,) * (3 - arr.ndim) + arr.shape)
        T, S, _ = arr.shape
        if T * S * self.grid.size > MAX_TENSOR:
            raise InvalidArgument(
                f"{slot} depends on tau and sigma; the grid of {self.grid.size} nodes is too fine")
        return arr

    @staticmethod
    def _pick(cum: np.ndarray) -> np.ndarray:
        """Row 0 for tau-free kernels, else the diagonal (integral up to t_i at outer t_i)."""
        if cum.shape[0] == 1:
            return cum[0]
        idx = np.arange(cum.shape[0])
        return cum[idx, idx]

    def _cols(self, kernel: np.ndarray, u: np.ndarray, u_rl: Optional[np.ndarray]):
        vals = kernel * u
        if u_rl is None:
            return vals, None
        if kernel.shape[-1] == 1:
            rl = kernel * u_rl
        else:
            rl = kernel[..., self.imp] * u_rl
        return vals, rl

    def term_b(self, u, u_rl=None) -> np.ndarray:
        vals, rl = self._cols(self.B, u, u_rl)
        vals = np.broadcast_to(vals, (vals.shape[0], self.grid.size))
        if rl is not None:
            rl = np.broadcast_to(rl, (vals.shape[0], rl.shape[-1]))
        return self._pick(cumulative(vals, self.grid, rl, axis=1))

    def term_k1(self, u, u_rl=None) -> np.ndarray:
        N = self.grid.size
        vals, rl = self._cols(self.K1, u, u_rl)
        T, S = vals.shape[:2]
        vals = np.broadcast_to(vals, (T, S, N))
        if rl is not None:
            rl = np.broadcast_to(rl, (T, S, rl.shape[-1]))
        inner = cumulative(vals, self.grid, rl, axis=2)
        if S == 1:
            at_sigma = inner[:, 0, :]
        else:
            idx = np.arange(N)
            at_sigma = inner[:, idx, idx]
        return self._pick(cumulative(at_sigma, self.grid, None, axis=1))

    def term_k2(self, u, u_rl=None) -> np.ndarray:
        N = self.grid.size
        vals, rl = self._cols(self.K2, u, u_rl)
        T, S = vals.shape[:2]
        vals = np.broadcast_to(vals, (T, S, N))
        if rl is not None:
            rl = np.broadcast_to(rl, (T, S, rl.shape[-1]))
        whole = cumulative(vals, self.grid, rl, axis=2)[:, :, -1]
        whole = np.broadcast_to(whole, (T, N))
        return self._pick(cumulative(whole, self.grid, None, axis=1))

    def impulse_sums(self, u_left_at_imp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``sum_{t_k < t} beta_k(t) u(t_k)`` at nodes and the inclusive sum at each right limit."""
        N = self.grid.size
        left = np.zeros(N)
        right = np.zeros(len(self.imp))
        for k, (i, beta) in enumerate(zip(self.imp, self.beta)):
            left[i + 1:] += beta[i + 1:] * u_left_at_imp[k]
            right[k:] += beta[self.imp[k:]] * u_left_at_imp[k]
        return left, right

    def apply(self, u: np.ndarray, u_rl: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Right-hand side of the inequality for a sampled ``u`` (nodes, right limits)."""
        integrals = self.term_b(u, u_rl) + self.term_k1(u, u_rl) + self.term_k2(u, u_rl)
        left_imp, right_imp = self.impulse_sums(u[self.imp])
        vals = self.a + integrals + left_imp
        rl = self.a[self.imp] + integrals[self.imp] + right_imp
        return vals, rl

    def exponents(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``int b``, ``int int k1`` and ``int int k2`` at every node."""
        ones = np.ones(self.grid.size)
        return self.term_b(ones), self.term_k1(ones), self.term_k2(ones)

    def products(self) -> tuple[np.ndarray, np.ndarray]:
        """``prod_{t_k < t} (1 + beta_k(t))`` at nodes and (inclusive) at right limits."""
        left = np.ones(self.grid.size)
        right = np.ones(len(self.imp))
        for k, (i, beta) in enumerate(zip(self.imp, self.beta)):
            left[i + 1:] *= 1.0 + beta[i + 1:]
            right[k:] *= 1.0 + beta[self.imp[k:]]
        return left, right


def _impulse_nodes(inst: GronwallInstance, grid: Grid) -> list[int]:
    return [node_position(grid, t) for t in inst.impulse_times]


def _instance_grid_check(inst: GronwallInstance, grid: Grid) -> None:
    if abs(grid.b - inst.horizon) > 1e-12 * max(1.0, inst.horizon):
        raise InvalidArgument("grid horizon differs from the instance horizon")
    times = grid.impulse_times
    if len(times) != inst.n or np.any(np.abs(times - np.array(inst.impulse_times)) > 1e-12 * inst.horizon):
        raise InvalidArgument("grid impulse nodes differ from the instance impulse times")


# -- bounds -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundProfile:
    """Bound values at every node (left) and at each impulse right limit."""

    name: str
    left: np.ndarray
    right: np.ndarray
    feasible: bool = True

    def as_trajectory(self, grid: Grid) -> Trajectory:
        return Trajectory(grid, self.left, self.right)


BOUND_NAMES = ("volterra_impulse", "volterra_double", "mixed", "mixed_corrected")


def bound_profiles(inst: GronwallInstance, grid: Grid, impulse_nodes=None) -> dict[str, BoundProfile]:
    """Every applicable bound on ``grid``.

    ``volterra_impulse`` needs k1 = k2 = 0, ``volterra_double`` needs k2 = 0,
    ``mixed`` is the verbatim mixed bound, ``mixed_corrected`` handles the
    whole-interval kernel through the sup of ``u`` and is marked infeasible
    when ``Q(b) E(b) >= 1``.
    """
    if impulse_nodes is None:
        _instance_grid_check(inst, grid)
        impulse_nodes = _impulse_nodes(inst, grid)
    disc = _Discrete(inst, grid, impulse_nodes)
    imp = disc.imp
    e_b, e_k1, e_k2 = disc.exponents()
    p_left, p_right = disc.products()
    a = disc.a
    a_rl = a[imp]
    out = {}

    def make(name, expo):
        return BoundProfile(name, a * (p_left * np.exp(expo)), a_rl * (p_right * np.exp(expo[imp])))

    if inst.k1_zero and inst.k2_zero:
        out["volterra_impulse"] = make("volterra_impulse", e_b)
    double_expo = e_b + e_k1
    if inst.k2_zero:
        out["volterra_double"] = make("volterra_double", double_expo)
    out["mixed"] = make("mixed", double_expo + e_k2)

    E_left = p_left * np.exp(double_expo)
    E_right = p_right * np.exp(double_expo[imp])
    Q = e_k2
    qe = Q[-1] * E_left[-1]
    if qe < 1.0:
        scale = a[-1] * E_left[-1] / (1.0 - qe)
        out["mixed_corrected"] = BoundProfile(
            "mixed_corrected", (a + Q * scale) * E_left, (a_rl + Q[imp] * scale) * E_right)
    else:
        nan_l, nan_r = np.full_like(a, np.nan), np.full(len(imp), np.nan)
        out["mixed_corrected"] = BoundProfile("mixed_corrected", nan_l, nan_r, feasible=False)
    return out


def qe_product(inst: GronwallInstance, grid: Grid) -> float:
    """``Q(b) E(b)``: the feasibility number of the corrected mixed bound."""
    disc = _Discrete(inst, grid, _impulse_nodes(inst, grid))
    e_b, e_k1, e_k2 = disc.exponents()
    p_left, _ = disc.products()
    return float(e_k2[-1] * (p_left[-1] * np.exp(e_b[-1] + e_k1[-1])))


def _scalar_bound(inst: GronwallInstance, tau: float, name: str, h: float) -> float:
    b = inst.horizon
    if not 0.0 <= tau <= b:
        raise InvalidArgument(f"tau={tau!r} outside [0, {b!r}]")
    times = list(inst.impulse_times)
    if 0.0 < tau < b and tau not in times:
        times = sorted(times + [tau])
    grid = make_grid(b, times, h)
    prof = bound_profiles(inst, grid, _impulse_nodes(inst, grid))[name]
    if not prof.feasible:
        return math.nan
    return float(prof.left[node_position(grid, tau)])


def bound_volterra_impulse(inst: GronwallInstance, tau: float, h: float = 1e-3) -> float:
    if not (inst.k1_zero and inst.k2_zero):
        raise InvalidArgument("bound_volterra_impulse needs k1 = k2 = 0")
    return _scalar_bound(inst, tau, "volterra_impulse", h)


def bound_volterra_double(inst: GronwallInstance, tau: float, h: float = 1e-3) -> float:
    if not inst.k2_zero:
        raise InvalidArgument("bound_volterra_double needs k2 = 0")
    return _scalar_bound(inst, tau, "volterra_double", h)


def bound_mixed(inst: GronwallInstance, tau: float, h: float = 1e-3) -> float:
    return _scalar_bound(inst, tau, "mixed", h)


def bound_mixed_corrected(inst: GronwallInstance, tau: float, h: float = 1e-3) -> Optional[float]:
    """Corrected mixed bound, or ``None`` when ``Q(b) E(b) >= 1``."""
    val = _scalar_bound(inst, tau, "mixed_corrected", h)
    return None if math.isnan(val) else val


# -- equality oracle ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OracleSolution:
    u: Trajectory
    iterations: int
    defect: float


def solve_oracle(inst: GronwallInstance, grid: Grid, tol: float = 1e-13,
                 max_iter: int = 20_000, window: int = 25) -> OracleSolution:
    """Fixed-point iteration of the equality operator from ``u = a``.

    Diverges (OracleDivergence) when the iteration fails to converge within
    ``max_iter`` or the step norm stops shrinking over ``window`` iterations
    once past the initial transient.
    """
    _instance_grid_check(inst, grid)
    disc = _Discrete(inst, grid, _impulse_nodes(inst, grid))
    u, u_rl = disc.a.copy(), disc.a[disc.imp].copy()
    steps = []
    for it in range(1, max_iter + 1):
        nu, nrl = disc.apply(u, u_rl)
        step = max(float(np.max(np.abs(nu - u))), float(np.max(np.abs(nrl - u_rl), initial=0.0)))
        scale = max(1.0, float(np.max(np.abs(nu))))
        u, u_rl = nu, nrl
        steps.append(step)
        if not math.isfinite(step) or step > 1e200:
            raise OracleDivergence(f"equality operator diverged after {it} iterations")
        if step <= tol * scale:
            fu, frl = disc.apply(u, u_rl)
            defect = max(float(np.max(np.abs(fu - u))), float(np.max(np.abs(frl - u_rl), initial=0.0)))
            return OracleSolution(Trajectory(grid, u, u_rl), it, defect)
        if it > 2 * window and step >= steps[-1 - window]:
            raise OracleDivergence(
                f"equality operator is not contracting: step {step:.3e} after {it} iterations "
                f"vs {steps[-1 - window]:.3e} {window} iterations earlier")
    raise OracleDivergence(f"no convergence within {max_iter} iterations (last step {steps[-1]:.3e})")


def equality_oracle(inst: GronwallInstance, grid: Grid) -> Trajectory:
    """Discrete solution of the inequality taken with equality (scalar trajectory)."""
    return solve_oracle(inst, grid).u


def extrapolated_oracle(inst: GronwallInstance, grid: Grid) -> Trajectory:
    """Richardson combination ``(4 u_{h/2} - u_h) / 3`` restricted to ``grid``.

    Removes the O(h^2) trapezoid bias so tight bounds can be compared at
    round-off level.
    """
    coarse = equality_oracle(inst, grid)
    fine = equality_oracle(inst, grid.refine())
    vals = (4.0 * fine.values[::2] - coarse.values) / 3.0
    rl = (4.0 * fine.right_limits - coarse.right_limits) / 3.0
    return Trajectory(grid, vals, rl)


# -- verification -------------------------------------------------------------

VIOLATION_RTOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """Comparison of one bound with the oracle on every node and right limit.

    ``tau``/``bound``/``observed`` are taken where ``u - bound`` peaks, and
    ``tightness`` is ``u(b) / bound(b)``. ``advisory`` marks the verbatim
    mixed bound, whose failures are reported as findings.
    """

    name: str
    tau: float
    bound: float
    observed: float
    tightness: float
    max_violation: float
    passed: bool
    advisory: bool = False
    bound_at_end: float = math.nan
    observed_at_end: float = math.nan


def compare(name: str, u: Trajectory, prof: BoundProfile) -> BoundReport:
    grid = u.grid
    obs = np.concatenate([u.values[:, 0], u.right_limits[:, 0]])
    bnd = np.concatenate([prof.left, prof.right])
    taus = np.concatenate([grid.nodes, grid.impulse_times])
    gap = obs - bnd
    j = int(np.argmax(gap))
    end_b, end_u = float(prof.left[-1]), float(u.values[-1, 0])
    if end_b > 0:
        tightness = end_u / end_b
    else:
        tightness = 0.0 if end_u == 0 else math.inf
    passed = bool(np.all(gap <= VIOLATION_RTOL * (1.0 + np.abs(bnd))))
    return BoundReport(name=name, tau=float(taus[j]), bound=float(bnd[j]), observed=float(obs[j]),
                       tightness=tightness, max_violation=float(gap[j]), passed=passed,
                       advisory=(name == "mixed"), bound_at_end=end_b, observed_at_end=end_u)


def verify_bounds(inst: GronwallInstance, grid: Grid, extrapolate: bool = True,
                  oracle: Optional[Trajectory] = None) -> list[BoundReport]:
    """Check every applicable (and feasible) bound against the equality oracle.

    A precomputed ``oracle`` on ``grid`` may be passed to avoid solving twice.
    """
    if oracle is not None:
        u = oracle
    else:
        u = extrapolated_oracle(inst, grid) if extrapolate else equality_oracle(inst, grid)
    reports = []
    for name, prof in bound_profiles(inst, grid).items():
        if prof.feasible:
            reports.append(compare(name, u, prof))
    return reports


# -- random instances -----------------------------------------------------------

def random_instance(rng: np.random.Generator, volterra_only: bool = True, max_impulses: int = 3,
                    kernel_max: float = 2.0, max_qe: float = 0.9, horizon: float = 1.0,
                    min_gap: float = 0.05, k1_zero_prob: float = 0.25,
                    name: str = "") -> GronwallInstance:
    """Constant-kernel instance with up to ``max_impulses`` impulses, ``beta`` in [0, 1].

    With probability ``k1_zero_prob`` the double-integral kernel is switched
    off so the pure Volterra-impulse bound applies as well.

    With ``volterra_only=False`` the whole-interval kernel is drawn uniformly
    below the level that keeps ``Q(b) E(b) <= max_qe``.
    """
    b = horizon
    a = rng.uniform(0.1, 2.0)
    c_b = rng.uniform(0.0, kernel_max)
    c_k1 = rng.uniform(0.0, kernel_max)
    if rng.uniform() < k1_zero_prob:
        c_k1 = 0.0
    n = int(rng.integers(0, max_impulses + 1))
    while True:
        times = np.sort(rng.uniform(min_gap, b - min_gap, n))
        if n < 2 or np.min(np.diff(times)) >= min_gap:
            break
    times = [round(float(t), 6) for t in times]
    betas = [float(x) for x in rng.uniform(0.0, 1.0, n)]
    c_k2 = 0.0
    if not volterra_only:
        E_b = math.prod(1.0 + x for x in betas) * math.exp(c_b * b + c_k1 * b * b / 2.0)
        c_k2 = rng.uniform(0.0, min(kernel_max, max_qe / (b * b * E_b)))
    return constant_instance(a, c_b, c_k1, c_k2, list(zip(times, betas)), b, name)


def instance_stream(seed: int, count: int, **kwargs) -> list[GronwallInstance]:
    """Reproducible instances, one independent substream per index."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [random_instance(np.random.default_rng(c), name=f"random-{seed}-{i}", **kwargs)
            for i, c in enumerate(children)]


# -- files ------------------------------------------------------------------------

_GRONWALL_KEYS = {"name", "horizon", "a", "b", "k1", "k2"}


def parse_gronwall(text: str) -> GronwallInstance:
    """Parse a ``[gronwall]`` instance file (``b`` names the kernel b(tau,sigma))."""
    try:
        return _parse_gronwall(text)
    except ProblemFormatError as exc:
        raise with_line(exc, text) from None


def _parse_gronwall(text: str) -> GronwallInstance:
    doc = load_toml(text)
    for key in doc:
        if key not in ("gronwall", "impulses"):
            raise ProblemFormatError(f"unknown key {key!r}", key)
    sec = doc.get("gronwall")
    if not isinstance(sec, dict):
        raise ProblemFormatError("missing mandatory section", "gronwall")
    for key in sec:
        if key not in _GRONWALL_KEYS:
            raise ProblemFormatError(f"unknown key {key!r}", f"gronwall.{key}")
    if "horizon" not in sec:
        raise ProblemFormatError("missing mandatory field 'horizon'", "gronwall.horizon")
    horizon = sec["horizon"]
    if isinstance(horizon, bool) or not isinstance(horizon, (int, float)) or not horizon > 0:
        raise ProblemFormatError("horizon must be a positive number", "gronwall.horizon")
    horizon = float(horizon)
    if "a" not in sec:
        raise ProblemFormatError("missing mandatory field 'a'", "gronwall.a")
    a = parse_expr_field(sec["a"], A_VARS, 1, "gronwall.a")
    bker = parse_expr_field(sec.get("b", "0"), BKER_VARS, 1, "gronwall.b")
    k1 = parse_expr_field(sec.get("k1", "0"), K_VARS, 1, "gronwall.k1")
    k2 = parse_expr_field(sec.get("k2", "0"), K_VARS, 1, "gronwall.k2")
    entries = doc.get("impulses", [])
    times = parse_impulse_times(entries, horizon)
    betas = []
    for k, entry in enumerate(entries):
        for key in entry:
            if key not in ("time", "beta"):
                raise ProblemFormatError(f"unknown key {key!r}", f"impulses[{k}].{key}")
        if "beta" not in entry:
            raise ProblemFormatError("missing mandatory field 'beta'", f"impulses[{k}].beta")
        betas.append(parse_expr_field(entry["beta"], BETA_VARS, 1, f"impulses[{k}].beta"))
    name = sec.get("name", "")
    try:
        return GronwallInstance(horizon, a, bker, k1, k2, tuple(times), tuple(betas), str(name))
    except InstanceError as exc:
        raise ProblemFormatError(str(exc), "gronwall") from None


def load_gronwall(path) -> GronwallInstance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_gronwall(text)
