"""Random expression trees for round-trip and evaluator tests."""

import numpy as np

from impvf.dsl.expr import FUNCTIONS, BinOp, Call, Index, Neg, Num, Var

SCALARS = ("tau", "sigma", "varsigma", "b")
STATES = ("w", "y1", "y2")
OPS = ("+", "-", "*", "/", "^")
FUNCS = tuple(sorted(FUNCTIONS))


def random_number(rng: np.random.Generator) -> float:
    kind = rng.integers(4)
    if kind == 0:
        return float(rng.integers(0, 100))
    if kind == 1:
        return float(rng.uniform(0, 10))
    if kind == 2:
        return float(10.0 ** rng.uniform(-300, 300))
    return float(rng.choice([0.5, 0.1, 1e-5, 2.5e10]))


def random_ast(rng: np.random.Generator, depth: int = 4, d: int = 3):
    if depth == 0 or rng.uniform() < 0.25:
        kind = rng.integers(3)
        if kind == 0:
            return Num(random_number(rng))
        if kind == 1:
            return Var(str(rng.choice(SCALARS)))
        return Index(str(rng.choice(STATES)), int(rng.integers(d)))
    kind = rng.integers(3)
    if kind == 0:
        return Neg(random_ast(rng, depth - 1, d))
    if kind == 1:
        return BinOp(str(rng.choice(OPS)), random_ast(rng, depth - 1, d), random_ast(rng, depth - 1, d))
    func = str(rng.choice(FUNCS))
    return Call(func, tuple(random_ast(rng, depth - 1, d) for _ in range(FUNCTIONS[func])))
