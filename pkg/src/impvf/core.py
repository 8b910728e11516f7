"""Impulse-aware grids, piecewise trajectories and the two sup norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import GridMismatch, InvalidArgument, InvalidSchedule


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ImpulseSchedule:
    """Impulse instants ``0 < t_1 < ... < t_n < b``."""

    times: tuple[float, ...] = ()

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        for t in times:
            if not math.isfinite(t):
                raise InvalidSchedule(f"impulse time {t!r} is not finite")
        for t0, t1 in zip(times, times[1:]):
            if not t1 > t0:
                raise InvalidSchedule(
                    f"impulse times must be strictly increasing, got {t0!r} then {t1!r}")

    @property
    def count(self) -> int:
        return len(self.times)

    def validate(self, b: float) -> None:
        for t in self.times:
            if not 0.0 < t < b:
                raise InvalidSchedule(f"impulse time {t!r} must lie in (0,b) = (0, {b!r})")


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes of ``[0, b]`` containing every impulse time as a node.

    ``impulse_index[k]`` is the node position of the k-th impulse time.
    """

    nodes: np.ndarray
    impulse_index: tuple[int, ...] = ()

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "impulse_index", tuple(int(i) for i in self.impulse_index))
        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidArgument("a grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise InvalidArgument("grid must start at 0")
        if not np.all(np.diff(nodes) > 0):
            raise InvalidArgument("grid nodes must be strictly increasing")
        idx = self.impulse_index
        if any(not 0 < i < nodes.size - 1 for i in idx):
            raise InvalidSchedule("impulse nodes must be interior grid nodes")
        if any(j - i < 1 for i, j in zip(idx, idx[1:])):
            raise InvalidSchedule("impulse nodes must be strictly increasing")

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def n_impulses(self) -> int:
        return len(self.impulse_index)

    @property
    def impulse_times(self) -> np.ndarray:
        return self.nodes[list(self.impulse_index)]

    @property
    def schedule(self) -> ImpulseSchedule:
        return ImpulseSchedule(tuple(self.impulse_times.tolist()))

    def panels(self) -> list[tuple[int, int]]:
        """Inclusive node ranges of the inter-impulse panels."""
        cuts = [0, *self.impulse_index, self.size - 1]
        return list(zip(cuts[:-1], cuts[1:]))

    def impulse_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[list(self.impulse_index)] = True
        return mask

    def same_as(self, other: "Grid") -> bool:
        return (self is other
                or (self.impulse_index == other.impulse_index
                    and self.nodes.shape == other.nodes.shape
                    and bool(np.array_equal(self.nodes, other.nodes))))

    def refine(self) -> "Grid":
        """Bisect every segment; impulse nodes keep their times."""
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        nodes = np.empty(2 * self.size - 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = mid
        return Grid(nodes, tuple(2 * i for i in self.impulse_index))

    def __eq__(self, other):
        return isinstance(other, Grid) and self.same_as(other)

    def __hash__(self):
        return hash((self.nodes.tobytes(), self.impulse_index))


def make_grid(b: float, schedule: ImpulseSchedule | Sequence[float], h: float) -> Grid:
    """Split each inter-impulse panel uniformly with step at most ``h``."""
    if not (math.isfinite(b) and b > 0):
        raise InvalidArgument(f"horizon b must be positive, got {b!r}")
    if not (math.isfinite(h) and h > 0):
        raise InvalidArgument(f"step h must be positive, got {h!r}")
    if not isinstance(schedule, ImpulseSchedule):
        schedule = ImpulseSchedule(tuple(schedule))
    schedule.validate(b)

    cuts = [0.0, *schedule.times, float(b)]
    pieces = [np.zeros(1)]
    impulse_index = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        # guard against ceil(1.0000000000000002) from rounding in (hi-lo)/h
        m = max(1, math.ceil((hi - lo) / h * (1.0 - 1e-12)))
        j = np.arange(1, m + 1)
        seg = lo + (hi - lo) * j / m
        seg[-1] = hi
        pieces.append(seg)
    nodes = np.concatenate(pieces)
    pos = 0
    for piece in pieces[1:-1]:
        pos += piece.size
        impulse_index.append(pos)
    return Grid(nodes, tuple(impulse_index))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-continuous ``R^d``-valued function sampled on a grid.

    ``values[i]`` is the (left-continuous) value at node ``i``;
    ``right_limits[k]`` is the right limit at the k-th impulse node.
    """

    grid: Grid
    values: np.ndarray
    right_limits: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != self.grid.size:
            raise GridMismatch(
                f"expected {self.grid.size} node values, got array of shape {values.shape}")
        n = self.grid.n_impulses
        if self.right_limits is None:
            right = values[list(self.grid.impulse_index)]
        else:
            right = np.asarray(self.right_limits, dtype=float).reshape(n, values.shape[1])
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "right_limits", _frozen(right))

    @classmethod
    def from_function(cls, grid: Grid, f: Callable[[float], Sequence[float]],
                      right: Callable[[float], Sequence[float]] | None = None) -> "Trajectory":
        values = np.array([np.atleast_1d(f(t)) for t in grid.nodes], dtype=float)
        rl = None
        if right is not None:
            rl = np.array([np.atleast_1d(right(t)) for t in grid.impulse_times], dtype=float)
            rl = rl.reshape(grid.n_impulses, values.shape[1])
        return cls(grid, values, rl)

    @classmethod
    def constant(cls, grid: Grid, value: Sequence[float] | float) -> "Trajectory":
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(grid, np.tile(v, (grid.size, 1)))

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def left(self, node: int) -> np.ndarray:
        return self.values[node]

    def right(self, node: int) -> np.ndarray:
        """Right evaluation: the stored right limit at impulse nodes."""
        try:
            k = self.grid.impulse_index.index(node)
        except ValueError:
            return self.values[node]
        return self.right_limits[k]

    def right_values(self) -> np.ndarray:
        """Node values with impulse nodes replaced by their right limits."""
        out = self.values.copy()
        out[list(self.grid.impulse_index)] = self.right_limits
        return out

    def _check(self, other: "Trajectory") -> None:
        if not self.grid.same_as(other.grid):
            raise GridMismatch("trajectories live on different grids")
        if self.dim != other.dim:
            raise GridMismatch(f"state dimensions differ: {self.dim} vs {other.dim}")

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.grid, self.values - other.values,
                          self.right_limits - other.right_limits)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.grid, self.values + other.values,
                          self.right_limits + other.right_limits)

    def scaled(self, c: float) -> "Trajectory":
        return Trajectory(self.grid, c * self.values, c * self.right_limits)


@dataclass(frozen=True)
class Bielecki:
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidArgument(f"Bielecki norm needs gamma > 0, got {self.gamma!r}")


@dataclass(frozen=True)
class Chebyshev:
    pass


NormKind = Union[Bielecki, Chebyshev]
CHEBYSHEV = Chebyshev()


def pointwise_norms(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean norms at nodes and at the stored right limits."""
    return (np.linalg.norm(traj.values, axis=1),
            np.linalg.norm(traj.right_limits, axis=1))


def norm(traj: Trajectory, kind: NormKind = CHEBYSHEV) -> float:
    node_n, right_n = pointwise_norms(traj)
    if isinstance(kind, Bielecki):
        g = kind.gamma
        node_n = node_n * np.exp(-g * traj.grid.nodes)
        right_n = right_n * np.exp(-g * traj.grid.impulse_times)
    elif not isinstance(kind, Chebyshev):
        raise InvalidArgument(f"unknown norm kind {kind!r}")
    top = float(node_n.max())
    if right_n.size:
        top = max(top, float(right_n.max()))
    return top


def traj_distance(u: Trajectory, v: Trajectory, kind: NormKind = CHEBYSHEV) -> float:
    return norm(u - v, kind)
