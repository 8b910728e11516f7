"""Problem files: TOML documents describing one impulsive VFIDE instance.

Layout (all keys other than those listed are rejected)::

    [problem]
    name = "cosh"            # optional
    d = 1
    b = 1.0
    w0 = [1.0]
    A = [0.0]                # row-major d*d

    [dynamics]
    G  = ["y1[0]"]           # over tau, b, w[i], y1[i], y2[i]
    F1 = ["w[0]"]            # over tau, sigma, b, w[i]
    F2 = ["0"]               # over tau, sigma, b, w[i]

    [[impulses]]             # repeated, strictly increasing times in (0, b)
    time = 0.5
    map = ["w[0]"]           # I_k over w[i], b

    [lipschitz]              # optional
    L_G = 1.0
    L_F1 = 1.0
    L_F2 = 0.0
    L_I = []                 # one entry per impulse
    mu = 0.0                 # optional, default 0
    eta = 0.0                # optional, default 0
    L_G_hat = 1.0            # optional, also L_F1_hat, L_F2_hat, L_I_hat
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..errors import ExprSyntaxError, ProblemFormatError
from .expr import Expr, parse_expression, to_source

G_VARS = frozenset({"tau", "b", "w", "y1", "y2"})
KERNEL_VARS = frozenset({"tau", "sigma", "b", "w"})
IMPULSE_VARS = frozenset({"b", "w"})

_TOP_KEYS = {"problem", "dynamics", "impulses", "lipschitz"}
_PROBLEM_KEYS = {"name", "d", "b", "w0", "A"}
_DYNAMICS_KEYS = {"G", "F1", "F2"}
_IMPULSE_KEYS = {"time", "map"}
_LIPSCHITZ_KEYS = {"L_G", "L_F1", "L_F2", "L_I", "mu", "eta",
                   "L_G_hat", "L_F1_hat", "L_F2_hat", "L_I_hat"}


@dataclass(frozen=True)
class LipschitzData:
    """Declared Lipschitz constants of G, F1, F2, I_k and perturbation gaps mu, eta."""

    L_G: float
    L_F1: float
    L_F2: float
    L_I: tuple[float, ...] = ()
    mu: float = 0.0
    eta: float = 0.0
    L_G_hat: Optional[float] = None
    L_F1_hat: Optional[float] = None
    L_F2_hat: Optional[float] = None
    L_I_hat: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "L_I", tuple(float(x) for x in self.L_I))
        if self.L_I_hat is not None:
            object.__setattr__(self, "L_I_hat", tuple(float(x) for x in self.L_I_hat))
        for name in ("L_G", "L_F1", "L_F2", "mu", "eta", "L_G_hat", "L_F1_hat", "L_F2_hat"):
            val = getattr(self, name)
            if val is not None and not (math.isfinite(val) and val >= 0):
                raise ProblemFormatError(f"must be a finite nonnegative number, got {val!r}",
                                         f"lipschitz.{name}")
        for name in ("L_I", "L_I_hat"):
            for i, val in enumerate(getattr(self, name) or ()):
                if not (math.isfinite(val) and val >= 0):
                    raise ProblemFormatError(f"must be a finite nonnegative number, got {val!r}",
                                             f"lipschitz.{name}[{i}]")

    @property
    def n(self) -> int:
        return len(self.L_I)

    def hatted(self) -> "LipschitzData":
        """Constants of the perturbed problem, falling back to the unhatted ones."""
        pick = lambda h, v: v if h is None else h  # noqa: E731
        return LipschitzData(
            L_G=pick(self.L_G_hat, self.L_G), L_F1=pick(self.L_F1_hat, self.L_F1),
            L_F2=pick(self.L_F2_hat, self.L_F2), L_I=pick(self.L_I_hat, self.L_I),
            mu=self.mu, eta=self.eta)


@dataclass(frozen=True)
class Impulse:
    time: float
    map: tuple[Expr, ...]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One instance of the impulsive problem with generator ``A`` on ``[0, b]``."""

    d: int
    b: float
    A: np.ndarray
    w0: np.ndarray
    G: tuple[Expr, ...]
    F1: tuple[Expr, ...]
    F2: tuple[Expr, ...]
    impulses: tuple[Impulse, ...] = ()
    lipschitz: Optional[LipschitzData] = None
    name: str = ""

    def __post_init__(self):
        A = np.array(self.A, dtype=float).reshape(self.d, self.d)
        w0 = np.array(self.w0, dtype=float).reshape(self.d)
        A.setflags(write=False)
        w0.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "w0", w0)

    @property
    def impulse_times(self) -> tuple[float, ...]:
        return tuple(imp.time for imp in self.impulses)

    @property
    def n(self) -> int:
        return len(self.impulses)

    def replace(self, **changes) -> "ProblemSpec":
        fields = dict(d=self.d, b=self.b, A=self.A, w0=self.w0, G=self.G, F1=self.F1,
                      F2=self.F2, impulses=self.impulses, lipschitz=self.lipschitz,
                      name=self.name)
        fields.update(changes)
        return ProblemSpec(**fields)


def _line_of(exc: Exception) -> Optional[int]:
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ProblemFormatError(f"unknown key {key!r}", f"{where}.{key}" if where else key)


def _require(table: dict, key: str, where: str) -> Any:
    if key not in table:
        raise ProblemFormatError(f"missing mandatory field {key!r}", f"{where}.{key}")
    return table[key]


def _number(val: Any, where: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ProblemFormatError(f"expected a number, got {val!r}", where)
    val = float(val)
    if not math.isfinite(val):
        raise ProblemFormatError("must be finite", where)
    return val


def _numbers(val: Any, length: Optional[int], where: str) -> list[float]:
    if not isinstance(val, list):
        raise ProblemFormatError(f"expected a list of numbers, got {val!r}", where)
    if length is not None and len(val) != length:
        raise ProblemFormatError(f"expected {length} entries, got {len(val)}", where)
    return [_number(v, f"{where}[{i}]") for i, v in enumerate(val)]


def parse_expr_field(text: Any, allowed, d: int, where: str) -> Expr:
    if not isinstance(text, str):
        raise ProblemFormatError(f"expected an expression string, got {text!r}", where)
    try:
        return parse_expression(text, allowed, d)
    except ExprSyntaxError as exc:
        raise ProblemFormatError(str(exc), where) from None


def _exprs(val: Any, allowed, d: int, where: str) -> tuple[Expr, ...]:
    if not isinstance(val, list) or len(val) != d:
        raise ProblemFormatError(f"expected a list of {d} expression strings", where)
    return tuple(parse_expr_field(t, allowed, d, f"{where}[{i}]") for i, t in enumerate(val))


def load_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = _line_of(exc)
        if line is None and "end of document" in str(exc):
            line = max(1, len(text.splitlines()))
        raise ProblemFormatError(f"syntax error: {exc}", line=line) from None


def parse_impulse_times(entries: Any, b: float, where: str = "impulses") -> list[float]:
    if not isinstance(entries, list):
        raise ProblemFormatError("expected an array of [[impulses]] tables", where)
    times = []
    for k, entry in enumerate(entries):
        here = f"{where}[{k}]"
        if not isinstance(entry, dict):
            raise ProblemFormatError("expected a table", here)
        t = _number(_require(entry, "time", here), f"{here}.time")
        if not 0.0 < t < b:
            raise ProblemFormatError("impulse time must lie in (0,b)", f"{here}.time")
        if t in times:
            raise ProblemFormatError(f"duplicate impulse time {t!r}", f"{here}.time")
        if times and t < times[-1]:
            raise ProblemFormatError("impulse times must be strictly increasing", f"{here}.time")
        times.append(t)
    return times


def _parse_lipschitz(table: Any, n: int) -> LipschitzData:
    if not isinstance(table, dict):
        raise ProblemFormatError("expected a table", "lipschitz")
    _reject_unknown(table, _LIPSCHITZ_KEYS, "lipschitz")
    vals = {}
    for key in ("L_G", "L_F1", "L_F2"):
        vals[key] = _number(_require(table, key, "lipschitz"), f"lipschitz.{key}")
    vals["L_I"] = tuple(_numbers(table.get("L_I", []), n, "lipschitz.L_I"))
    for key in ("mu", "eta"):
        vals[key] = _number(table.get(key, 0.0), f"lipschitz.{key}")
    for key in ("L_G_hat", "L_F1_hat", "L_F2_hat"):
        if key in table:
            vals[key] = _number(table[key], f"lipschitz.{key}")
    if "L_I_hat" in table:
        vals["L_I_hat"] = tuple(_numbers(table["L_I_hat"], n, "lipschitz.L_I_hat"))
    return LipschitzData(**vals)


_FIELD = re.compile(r"^([A-Za-z_]\w*)(?:\[(\d+)\])?(?:\.([A-Za-z_]\w*))?")
_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z_]\w*)\s*\]\]?")
_ASSIGN = re.compile(r"^\s*([A-Za-z_]\w*)\s*=")


def locate_field(text: str, field: Optional[str]) -> Optional[int]:
    """Best-effort 1-based line of a dotted field path such as ``impulses[1].map``.

    Falls back to the line of the enclosing table header when the key itself
    is absent (e.g. a missing mandatory field).
    """
    if not field:
        return None
    m = _FIELD.match(field)
    if m is None:
        return None
    section, index, key = m.group(1), m.group(2), m.group(3)
    want = int(index) if index is not None else 0
    current, count = None, {}
    header_line = None
    top_level_key = None if key is not None or index is not None else section
    for lineno, line in enumerate(text.splitlines(), 1):
        h = _HEADER.match(line)
        if h:
            current = h.group(2)
            count[current] = count.get(current, -1) + 1
            if current == section and count[current] == want:
                header_line = lineno
            continue
        a = _ASSIGN.match(line)
        if a is None:
            continue
        if top_level_key is not None and current is None and a.group(1) == top_level_key:
            return lineno
        if current == section and count[current] == want and a.group(1) == key:
            return lineno
    return header_line


def with_line(exc: ProblemFormatError, text: str) -> ProblemFormatError:
    if exc.line is not None:
        return exc
    line = locate_field(text, exc.field)
    if line is None:
        return exc
    return ProblemFormatError(exc.message, exc.field, line)


def parse_problem(text: str) -> ProblemSpec:
    """Parse and fully validate a problem file.

    Diagnostics carry the offending field path and, where it can be found,
    its line number.
    """
    try:
        return _parse_problem(text)
    except ProblemFormatError as exc:
        raise with_line(exc, text) from None


def _parse_problem(text: str) -> ProblemSpec:
    doc = load_toml(text)
    _reject_unknown(doc, _TOP_KEYS, "")
    prob = _require(doc, "problem", "")
    if not isinstance(prob, dict):
        raise ProblemFormatError("expected a table", "problem")
    _reject_unknown(prob, _PROBLEM_KEYS, "problem")
    d_raw = _require(prob, "d", "problem")
    if isinstance(d_raw, bool) or not isinstance(d_raw, int) or d_raw < 1:
        raise ProblemFormatError(f"dimension must be a positive integer, got {d_raw!r}", "problem.d")
    d = int(d_raw)
    b = _number(_require(prob, "b", "problem"), "problem.b")
    if b <= 0:
        raise ProblemFormatError("horizon must be positive", "problem.b")
    w0 = _numbers(_require(prob, "w0", "problem"), d, "problem.w0")
    A = _numbers(_require(prob, "A", "problem"), d * d, "problem.A")
    name = prob.get("name", "")
    if not isinstance(name, str):
        raise ProblemFormatError("expected a string", "problem.name")

    dyn = _require(doc, "dynamics", "")
    if not isinstance(dyn, dict):
        raise ProblemFormatError("expected a table", "dynamics")
    _reject_unknown(dyn, _DYNAMICS_KEYS, "dynamics")
    G = _exprs(_require(dyn, "G", "dynamics"), G_VARS, d, "dynamics.G")
    F1 = _exprs(_require(dyn, "F1", "dynamics"), KERNEL_VARS, d, "dynamics.F1")
    F2 = _exprs(_require(dyn, "F2", "dynamics"), KERNEL_VARS, d, "dynamics.F2")

    entries = doc.get("impulses", [])
    times = parse_impulse_times(entries, b)
    impulses = []
    for k, (entry, t) in enumerate(zip(entries, times)):
        _reject_unknown(entry, _IMPULSE_KEYS, f"impulses[{k}]")
        m = _exprs(_require(entry, "map", f"impulses[{k}]"), IMPULSE_VARS, d, f"impulses[{k}].map")
        impulses.append(Impulse(t, m))

    lip = None
    if "lipschitz" in doc:
        lip = _parse_lipschitz(doc["lipschitz"], len(impulses))
    return ProblemSpec(d=d, b=b, A=np.array(A), w0=np.array(w0), G=G, F1=F1, F2=F2,
                       impulses=tuple(impulses), lipschitz=lip, name=name)


def load_problem(path) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem(text)


def _toml_list(vals) -> str:
    return "[" + ", ".join(repr(float(v)) for v in vals) + "]"


def _toml_strs(exprs) -> str:
    return "[" + ", ".join('"' + to_source(e) + '"' for e in exprs) + "]"


def problem_to_toml(p: ProblemSpec) -> str:
    """Serialize a problem; ``parse_problem`` of the result reproduces it."""
    lines = ["[problem]"]
    if p.name:
        lines.append(f'name = "{p.name}"')
    lines += [f"d = {p.d}", f"b = {p.b!r}", f"w0 = {_toml_list(p.w0)}",
              f"A = {_toml_list(p.A.ravel())}", "", "[dynamics]",
              f"G = {_toml_strs(p.G)}", f"F1 = {_toml_strs(p.F1)}", f"F2 = {_toml_strs(p.F2)}"]
    for imp in p.impulses:
        lines += ["", "[[impulses]]", f"time = {imp.time!r}", f"map = {_toml_strs(imp.map)}"]
    lip = p.lipschitz
    if lip is not None:
        lines += ["", "[lipschitz]", f"L_G = {lip.L_G!r}", f"L_F1 = {lip.L_F1!r}",
                  f"L_F2 = {lip.L_F2!r}", f"L_I = {_toml_list(lip.L_I)}",
                  f"mu = {lip.mu!r}", f"eta = {lip.eta!r}"]
        for key in ("L_G_hat", "L_F1_hat", "L_F2_hat"):
            if getattr(lip, key) is not None:
                lines.append(f"{key} = {getattr(lip, key)!r}")
        if lip.L_I_hat is not None:
            lines.append(f"L_I_hat = {_toml_list(lip.L_I_hat)}")
    return "\n".join(lines) + "\n"
