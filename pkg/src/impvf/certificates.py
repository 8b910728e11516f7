"""Closed-form contraction constant and data-dependence bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dsl.problem import LipschitzData, ProblemSpec
from .errors import CertificateInfeasible, InvalidArgument
from .semigroup import SemigroupBound, estimate_semigroup_bound

DEFAULT_GAMMA_RANGE = (1e-2, 200.0)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def contraction_constant(L: LipschitzData, M: float, b: float, n: int, gamma: float) -> float:
    """Lipschitz constant of the mild operator in the Bielecki(gamma) norm::

        (M L_G / g) [ (1 - e^{-g b})(1 + L_F1 / g) + L_F2 b e^{g b} ] + M e^{g b} sum_k L_Ik
    """
    if not gamma > 0:
        raise InvalidArgument(f"gamma must be positive, got {gamma!r}")
    if len(L.L_I) != n:
        raise InvalidArgument(f"expected {n} impulse constants, got {len(L.L_I)}")
    growth = math.exp(gamma * b)
    decay = -math.expm1(-gamma * b)
    volterra = decay * (1.0 + L.L_F1 / gamma) + L.L_F2 * b * growth
    return (M * L.L_G / gamma) * volterra + M * growth * math.fsum(L.L_I)


@dataclass(frozen=True)
class ContractionCertificate:
    gamma: float
    L_R: float
    M: float
    feasible: bool

    @classmethod
    def at(cls, L: LipschitzData, M: float, b: float, n: int, gamma: float) -> "ContractionCertificate":
        L_R = contraction_constant(L, M, b, n, gamma)
        return cls(gamma=float(gamma), L_R=L_R, M=float(M), feasible=L_R < 1.0)


def optimize_gamma(L: LipschitzData, M: float, b: float, n: int,
                   gamma_range: tuple[float, float] = DEFAULT_GAMMA_RANGE,
                   resolution: int = 64) -> ContractionCertificate:
    """Minimize the contraction constant over ``gamma`` in ``[lo, hi]``.

    A log-spaced scan of ``resolution`` points seeds a golden-section search
    (in log gamma) on the cell around the best scan point, refined to a
    relative gamma tolerance of 1e-6.
    """
    lo, hi = map(float, gamma_range)
    if not 0 < lo < hi:
        raise InvalidArgument(f"need 0 < lo < hi, got ({lo!r}, {hi!r})")
    resolution = max(3, int(resolution))

    def f(x: float) -> float:
        return contraction_constant(L, M, b, n, math.exp(x))

    xs = np.linspace(math.log(lo), math.log(hi), resolution)
    vals = [f(x) for x in xs]
    i = int(np.argmin(vals))
    a, c = xs[max(i - 1, 0)], xs[min(i + 1, resolution - 1)]
    best_x, best_v = xs[i], vals[i]
    # golden section on [a, c]; log-gamma width 1e-6 is relative gamma tolerance 1e-6
    x1 = c - _INV_PHI * (c - a)
    x2 = a + _INV_PHI * (c - a)
    f1, f2 = f(x1), f(x2)
    while c - a > 1e-6:
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - _INV_PHI * (c - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (c - a)
            f2 = f(x2)
    for x, v in ((x1, f1), (x2, f2)):
        if v < best_v:
            best_x, best_v = x, v
    gamma = min(max(math.exp(best_x), lo), hi)
    return ContractionCertificate.at(L, M, b, n, gamma)


def semigroup_bound_for(p: ProblemSpec, samples: int = 200) -> SemigroupBound:
    return estimate_semigroup_bound(p.A, p.b, samples)


def certify(p: ProblemSpec, gamma_range: tuple[float, float] = DEFAULT_GAMMA_RANGE,
            resolution: int = 64, samples: int = 200,
            lipschitz: Optional[LipschitzData] = None) -> tuple[ContractionCertificate, SemigroupBound]:
    L = lipschitz if lipschitz is not None else p.lipschitz
    if L is None:
        raise InvalidArgument("problem declares no Lipschitz constants")
    sg = semigroup_bound_for(p, samples)
    return optimize_gamma(L, sg.M, p.b, p.n, gamma_range, resolution), sg


@dataclass(frozen=True)
class DependenceInputs:
    """Data of a (base, perturbed) pair entering the dependence bounds."""

    M: float
    b: float
    n: int
    delta_w0: float
    mu: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        for name in ("M", "b", "delta_w0", "mu", "eta"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise InvalidArgument(f"{name} must be finite and nonnegative, got {val!r}")
        if self.n < 0:
            raise InvalidArgument("n must be nonnegative")


def _gap(inp: DependenceInputs) -> float:
    return inp.M * inp.delta_w0 + inp.b * inp.M * inp.mu + inp.n * inp.M * inp.eta


def _growth_factor(inp: DependenceInputs, L: LipschitzData) -> float:
    """``prod (1 + M L_Ik) * exp(M L_G b + M L_G L_F1 b^2/2 + M L_G L_F2 b^2)``."""
    M, b = inp.M, inp.b
    if len(L.L_I) != inp.n:
        raise InvalidArgument(f"expected {inp.n} impulse constants, got {len(L.L_I)}")
    prod = 1.0
    for li in L.L_I:
        prod *= 1.0 + M * li
    expo = M * L.L_G * b + M * L.L_G * L.L_F1 * b * b / 2.0 + M * L.L_G * L.L_F2 * b * b
    return prod * math.exp(expo)


def po_dependence_bound(inp: DependenceInputs, L_R: float) -> float:
    """``(M |w0 - w0^| + b M mu + n M eta) / (1 - L_R)``; needs ``L_R < 1``."""
    if not L_R < 1.0:
        raise CertificateInfeasible(f"contraction constant {L_R!r} >= 1: bound undefined")
    return _gap(inp) / (1.0 - L_R)


def gronwall_dependence_bound(inp: DependenceInputs, L: LipschitzData) -> float:
    return _gap(inp) * _growth_factor(inp, L)


def eps_dependence_bound(eps1: float, eps2: float, inp: DependenceInputs, L: LipschitzData) -> float:
    """Distance bound for two approximate solutions with residuals ``eps1``, ``eps2``."""
    if not (eps1 >= 0 and eps2 >= 0):
        raise InvalidArgument("epsilons must be nonnegative")
    M = inp.M
    head = (eps1 + eps2) * M * (inp.b + inp.n) + M * inp.delta_w0
    return head * _growth_factor(inp, L)


def dependence_inputs(base: ProblemSpec, perturbed: ProblemSpec, M: float,
                      mu: float = 0.0, eta: float = 0.0) -> DependenceInputs:
    delta = float(np.linalg.norm(base.w0 - perturbed.w0))
    return DependenceInputs(M=M, b=base.b, n=base.n, delta_w0=delta, mu=mu, eta=eta)
