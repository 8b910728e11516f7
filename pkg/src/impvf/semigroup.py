"""Matrix-exponential semigroup ``T(t) = exp(A t)`` and its finite-horizon bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DimensionMismatch, InvalidArgument

# Pade(13) numerator coefficients and the 1-norm threshold below which no
# scaling is needed (Higham, SIAM J. Matrix Anal. Appl. 26, 2005).
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


@dataclass(frozen=True, eq=False)
class Generator:
    """Square real matrix generating the semigroup."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, copy=True)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidArgument(f"generator must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidArgument("generator has non-finite entries")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return int(self.A.shape[0])

    @property
    def is_zero(self) -> bool:
        return not self.A.any()


def _as_generator(A) -> Generator:
    return A if isinstance(A, Generator) else Generator(A)


def _pade13_expm(X: np.ndarray) -> np.ndarray:
    d = X.shape[0]
    ident = np.eye(d)
    norm1 = np.linalg.norm(X, 1)
    s = 0
    if norm1 > _THETA13:
        s = int(math.ceil(math.log2(norm1 / _THETA13)))
        X = X / 2.0 ** s
    c = _PADE13
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (c[13] * X6 + c[11] * X4 + c[9] * X2)
             + c[7] * X6 + c[5] * X4 + c[3] * X2 + c[1] * ident)
    V = (X6 @ (c[12] * X6 + c[10] * X4 + c[8] * X2)
         + c[6] * X6 + c[4] * X4 + c[2] * X2 + c[0] * ident)
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E


def matrix_exponential(A, t: float) -> np.ndarray:
    """``exp(A t)`` for ``t >= 0`` by scaling and squaring (exact when d = 1)."""
    gen = _as_generator(A)
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise InvalidArgument(f"semigroup time must be finite and >= 0, got {t!r}")
    if gen.dim == 1:
        return np.array([[math.exp(gen.A[0, 0] * t)]])
    if t == 0.0 or gen.is_zero:
        return np.eye(gen.dim)
    return _pade13_expm(gen.A * t)


def apply_semigroup(A, t: float, v) -> np.ndarray:
    gen = _as_generator(A)
    v = np.asarray(v, dtype=float)
    if v.shape != (gen.dim,):
        raise DimensionMismatch(f"state of shape {v.shape} does not match generator dimension {gen.dim}")
    return matrix_exponential(gen, t) @ v


class ExponentialCache:
    """Memoizes ``exp(A dt)`` per distinct step so sweeps reuse identical matrices."""

    def __init__(self, A):
        self.generator = _as_generator(A)
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, dt: float) -> np.ndarray:
        dt = float(dt)
        E = self._cache.get(dt)
        if E is None:
            E = matrix_exponential(self.generator, dt)
            E.setflags(write=False)
            self._cache[dt] = E
        return E


@dataclass(frozen=True)
class SemigroupBound:
    """``||T(t)|| <= M exp(omega t)`` on ``[0, b]``, estimated by sampling."""

    M: float
    omega: float = 0.0
    samples: int = 0
    horizon: float = 0.0
    tau_at_max: float = 0.0

    def __post_init__(self):
        if not self.M >= 1.0:
            raise InvalidArgument(f"M must be >= 1, got {self.M!r}")
        if not self.omega >= 0.0:
            raise InvalidArgument(f"omega must be >= 0, got {self.omega!r}")


def _opnorm(gen: Generator, t: float) -> float:
    return float(np.linalg.norm(matrix_exponential(gen, t), 2))


def estimate_semigroup_bound(A, b: float, samples: int = 200) -> SemigroupBound:
    """Sampled sup of the spectral norm of ``exp(A t)`` over ``[0, b]`` with omega = 0.

    The best sample is polished with a bounded scalar search on its two
    neighbouring sampling cells, so interior maxima are not underestimated
    by the sampling gap.
    """
    gen = _as_generator(A)
    if not b > 0:
        raise InvalidArgument(f"horizon must be positive, got {b!r}")
    if samples < 2:
        raise InvalidArgument("need at least two samples")
    taus = np.linspace(0.0, b, samples)
    norms = np.array([_opnorm(gen, t) for t in taus])
    i = int(np.argmax(norms))
    best_tau, best = float(taus[i]), float(norms[i])
    if not gen.is_zero and 0 < i < samples - 1:
        res = minimize_scalar(lambda t: -_opnorm(gen, t),
                              bounds=(float(taus[i - 1]), float(taus[i + 1])),
                              method="bounded", options={"xatol": 1e-12 * max(1.0, b)})
        if -res.fun > best:
            best_tau, best = float(res.x), float(-res.fun)
    return SemigroupBound(M=max(1.0, best), omega=0.0, samples=samples,
                          horizon=float(b), tau_at_max=best_tau)
