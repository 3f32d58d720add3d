"""Instance model for linear equations with min and max operators.

A system has ``n`` variables.  Variables ``1..n1`` are min variables,
``n1+1..n1+n2`` are max variables and the rest are affine::

    x_i = min {x_l : l in J(i)}          1 <= i <= n1
    x_j = max {x_l : l in J(j)}          n1 < j <= n1 + n2
    x_k = q_k . x + b_k                  n1 + n2 < k <= n

Indices in choice sets, strategies, documents and error messages are
1-based.  Vectors and matrices are plain Python lists indexed from 0.
All coefficients are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

__all__ = [
    "InstanceError",
    "LemmSystem",
    "Solution",
    "DecisionQuery",
    "Var",
    "Const",
    "Affine",
    "Min",
    "Max",
    "Flattened",
    "to_fraction",
    "format_fraction",
    "parse_system",
    "load_system",
    "dump_system",
    "system_to_document",
    "flatten",
    "verify_certificate",
    "residuals",
    "strategies",
    "strategy_count",
    "strategy_matrix",
    "identity",
]

RationalLike = Union[Fraction, int, str]


class InstanceError(ValueError):
    """Raised for malformed or invalid instances and arguments."""


def to_fraction(value) -> Fraction:
    """Convert ``value`` to an exact Fraction.

    Strings may be ``"p/q"``, integers or decimals (``"0.2"`` becomes 1/5).
    Floats are converted exactly from their binary value.
    """
    if isinstance(value, bool):
        raise InstanceError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, float)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"not a rational: {value!r}") from exc
    raise InstanceError(f"not a rational: {value!r}")


def format_fraction(value: Fraction) -> str:
    return str(Fraction(value))


def identity(n: int) -> list[list[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


@dataclass(frozen=True)
class LemmSystem:
    """An immutable, validated instance.

    ``affine`` holds the rows ``q_k`` for the affine variables in order and
    ``offsets`` the full vector ``b`` of length ``n``.  Use
    :meth:`from_rows` to build one from affine rows and their offsets.
    """

    n1: int
    n2: int
    n: int
    choices: tuple[tuple[int, ...], ...]
    affine: tuple[tuple[Fraction, ...], ...]
    offsets: tuple[Fraction, ...]

    def __post_init__(self):
        n1, n2, n = self.n1, self.n2, self.n
        for name, value in (("n1", n1), ("n2", n2), ("n", n)):
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise InstanceError(f"{name} must be a nonnegative integer")
        if n < n1 + n2:
            raise InstanceError(f"n={n} is smaller than n1+n2={n1 + n2}")
        if len(self.choices) != n1 + n2:
            raise InstanceError(
                f"expected {n1 + n2} choice sets, got {len(self.choices)}")
        cleaned = []
        for i, js in enumerate(self.choices, start=1):
            js = tuple(sorted(set(int(j) for j in js)))
            if not js:
                raise InstanceError(f"row {i}: empty choice set")
            for j in js:
                if not 1 <= j <= n:
                    raise InstanceError(
                        f"row {i}: choice index {j} out of range [1, {n}]")
            cleaned.append(js)
        object.__setattr__(self, "choices", tuple(cleaned))
        if len(self.affine) != n - n1 - n2:
            raise InstanceError(
                f"expected {n - n1 - n2} affine rows, got {len(self.affine)}")
        rows = []
        for k, row in enumerate(self.affine, start=n1 + n2 + 1):
            if len(row) != n:
                raise InstanceError(
                    f"row {k}: affine row has length {len(row)}, expected {n}")
            rows.append(tuple(to_fraction(v) for v in row))
        object.__setattr__(self, "affine", tuple(rows))
        if len(self.offsets) != n:
            raise InstanceError(f"offset vector has length {len(self.offsets)}, expected {n}")
        offsets = tuple(to_fraction(v) for v in self.offsets)
        for i in range(n1 + n2):
            if offsets[i] != 0:
                raise InstanceError(f"row {i + 1}: nonzero offset on a min/max row")
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def from_rows(cls, n1, n2, choices, rows, b):
        """Build from affine rows ``rows`` and their offsets ``b`` (same length)."""
        rows = list(rows)
        b = list(b)
        if len(rows) != len(b):
            raise InstanceError("affine rows and offsets differ in length")
        n = n1 + n2 + len(rows)
        return cls(n1, n2, n, tuple(tuple(c) for c in choices),
                   tuple(tuple(r) for r in rows),
                   tuple([Fraction(0)] * (n1 + n2) + [to_fraction(v) for v in b]))

    @property
    def m(self) -> int:
        """Number of min and max variables."""
        return self.n1 + self.n2

    def kind(self, i: int) -> str:
        """``"min"``, ``"max"`` or ``"affine"`` for 1-based index ``i``."""
        if not 1 <= i <= self.n:
            raise InstanceError(f"index {i} out of range [1, {self.n}]")
        if i <= self.n1:
            return "min"
        if i <= self.m:
            return "max"
        return "affine"

    def row(self, k: int) -> tuple[Fraction, ...]:
        """Affine row ``q_k`` for 1-based affine index ``k``."""
        return self.affine[k - self.m - 1]

    def with_offsets(self, b: Sequence[RationalLike]) -> "LemmSystem":
        return LemmSystem(self.n1, self.n2, self.n, self.choices, self.affine, tuple(b))


@dataclass(frozen=True)
class Solution:
    values: tuple[Fraction, ...]
    verified: bool = False

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class DecisionQuery:
    """Asks whether some feasible ``x`` has ``x[index] < threshold`` (1-based index)."""

    index: int
    threshold: Fraction

    def __post_init__(self):
        object.__setattr__(self, "threshold", to_fraction(self.threshold))

    def check(self, system: LemmSystem) -> None:
        if not 1 <= self.index <= system.n:
            raise InstanceError(f"query index {self.index} out of range [1, {system.n}]")


# -- documents ---------------------------------------------------------------

def parse_system(text: str) -> LemmSystem:
    """Parse and validate a JSON instance document."""
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed document: {exc}") from exc
    return system_from_document(doc)


def system_from_document(doc) -> LemmSystem:
    if not isinstance(doc, dict):
        raise InstanceError("malformed document: top level must be an object")
    missing = [key for key in ("n1", "n2", "n", "choices", "affine") if key not in doc]
    if missing:
        raise InstanceError(f"malformed document: missing {', '.join(missing)}")
    n1, n2, n = doc["n1"], doc["n2"], doc["n"]
    for name, value in (("n1", n1), ("n2", n2), ("n", n)):
        if not isinstance(value, int) or isinstance(value, bool):
            raise InstanceError(f"malformed document: {name} must be an integer")
    choices = doc["choices"]
    if not isinstance(choices, list) or any(not isinstance(c, list) for c in choices):
        raise InstanceError("malformed document: choices must be a list of lists")
    for i, js in enumerate(choices, start=1):
        if any(not isinstance(j, int) or isinstance(j, bool) for j in js):
            raise InstanceError(f"row {i}: choice indices must be integers")
    affine = doc["affine"]
    if not isinstance(affine, list):
        raise InstanceError("malformed document: affine must be a list")
    rows, b = [], []
    for k, entry in enumerate(affine, start=n1 + n2 + 1):
        if not isinstance(entry, dict) or "q" not in entry or not isinstance(entry["q"], list):
            raise InstanceError(f"row {k}: affine entry needs a list 'q'")
        try:
            rows.append(tuple(to_fraction(v) for v in entry["q"]))
            b.append(to_fraction(entry.get("b", 0)))
        except InstanceError as exc:
            raise InstanceError(f"row {k}: {exc}") from None
    offsets = [Fraction(0)] * (n1 + n2) + b
    return LemmSystem(n1, n2, n, tuple(tuple(c) for c in choices), tuple(rows), tuple(offsets))


def system_to_document(system: LemmSystem) -> dict:
    return {
        "n1": system.n1,
        "n2": system.n2,
        "n": system.n,
        "choices": [list(js) for js in system.choices],
        "affine": [
            {"q": [format_fraction(v) for v in row], "b": format_fraction(system.offsets[k])}
            for k, row in enumerate(system.affine, start=system.m)
        ],
    }


def dump_system(system: LemmSystem) -> str:
    return json.dumps(system_to_document(system), sort_keys=True)


def load_system(path) -> LemmSystem:
    with open(path) as fh:
        return parse_system(fh.read())


# -- strategies ----------------------------------------------------------------

def strategy_count(system: LemmSystem) -> int:
    count = 1
    for js in system.choices:
        count *= len(js)
    return count


def strategies(system: LemmSystem) -> Iterator[tuple[int, ...]]:
    """Lazily yield every strategy in lexicographic order.

    A strategy is a tuple ``(l(1), ..., l(n1+n2))`` of 1-based choices.
    """
    return itertools.product(*system.choices)


def check_strategy(system: LemmSystem, strategy: Sequence[int]) -> None:
    if len(strategy) != system.m:
        raise InstanceError(f"strategy has {len(strategy)} entries, expected {system.m}")
    for i, (choice, js) in enumerate(zip(strategy, system.choices), start=1):
        if choice not in js:
            raise InstanceError(f"row {i}: choice {choice} not in J({i}) = {list(js)}")


def strategy_matrix(system: LemmSystem, strategy: Sequence[int]) -> list[list[Fraction]]:
    """The matrix with indicator rows ``e_l(i)`` followed by the affine rows."""
    check_strategy(system, strategy)
    n = system.n
    rows = []
    for choice in strategy:
        row = [Fraction(0)] * n
        row[choice - 1] = Fraction(1)
        rows.append(row)
    rows.extend(list(q) for q in system.affine)
    return rows


# -- certificates --------------------------------------------------------------

def residuals(system: LemmSystem, x: Sequence[RationalLike]) -> list[Fraction]:
    """``x_i - F(x)_i`` for every equation; all zero iff ``x`` is feasible."""
    if len(x) != system.n:
        raise InstanceError(f"vector has length {len(x)}, expected {system.n}")
    x = [to_fraction(v) for v in x]
    out = []
    for i, js in enumerate(system.choices):
        vals = [x[j - 1] for j in js]
        target = min(vals) if i < system.n1 else max(vals)
        out.append(x[i] - target)
    for k, q in enumerate(system.affine, start=system.m):
        out.append(x[k] - sum((c * v for c, v in zip(q, x) if c), Fraction(0)) - system.offsets[k])
    return out


def verify_certificate(system: LemmSystem, x: Sequence[RationalLike]) -> bool:
    """Exact feasibility check of ``x`` against every equation."""
    return not any(residuals(system, x))


# -- nested expressions --------------------------------------------------------

@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", to_fraction(self.value))


@dataclass(frozen=True)
class Affine:
    """``sum(coeffs[j] * children[j]) + offset``."""

    coeffs: tuple
    offset: Fraction
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(to_fraction(c) for c in self.coeffs))
        object.__setattr__(self, "offset", to_fraction(self.offset))
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.coeffs) != len(self.children):
            raise InstanceError("affine node: coeffs and children differ in length")


@dataclass(frozen=True)
class Min:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise InstanceError("min node without children")


@dataclass(frozen=True)
class Max:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise InstanceError("max node without children")


Expression = Union[Var, Const, Affine, Min, Max]


@dataclass(frozen=True)
class Flattened:
    """A flat system plus the position of every original variable in it."""

    system: LemmSystem
    index: dict = field(default_factory=dict)

    def restrict(self, x: Sequence[Fraction]) -> dict:
        """Values of the original variables in a solution of :attr:`system`."""
        return {name: x[pos - 1] for name, pos in self.index.items()}


def flatten(equations: Iterable[tuple[int, Expression]]) -> Flattened:
    """Separate nested min/max/affine expressions by substitution.

    Each nested min or max node and each distinct constant operand gets one
    auxiliary variable.  Nested affine nodes are merged into their affine
    parent; an affine operand of a min/max node gets its own auxiliary.
    Every ``Var`` must be the target of some equation.
    """
    equations = list(equations)
    targets = [t for t, _ in equations]
    if len(set(targets)) != len(targets):
        raise InstanceError("flatten: duplicate equation targets")
    known = set(targets)

    # definitions keyed by reference; refs are ("v", name) or ("a", k)
    defs: dict = {}
    aux_order: list = []
    const_cache: dict = {}

    def new_aux(definition):
        ref = ("a", len(aux_order))
        aux_order.append(ref)
        defs[ref] = definition
        return ref

    def linear(expr, scale, acc):
        # accumulate scale*expr into acc (coefficient map); returns constant part
        if isinstance(expr, Var):
            if expr.index not in known:
                raise InstanceError(f"flatten: unresolvable variable reference {expr.index}")
            ref = ("v", expr.index)
            acc[ref] = acc.get(ref, Fraction(0)) + scale
            return Fraction(0)
        if isinstance(expr, Const):
            return scale * expr.value
        if isinstance(expr, Affine):
            const = scale * expr.offset
            for c, child in zip(expr.coeffs, expr.children):
                const += linear(child, scale * c, acc)
            return const
        ref = operand(expr)
        acc[ref] = acc.get(ref, Fraction(0)) + scale
        return Fraction(0)

    def operand(expr):
        if isinstance(expr, Var):
            if expr.index not in known:
                raise InstanceError(f"flatten: unresolvable variable reference {expr.index}")
            return ("v", expr.index)
        if isinstance(expr, Const):
            if expr.value not in const_cache:
                const_cache[expr.value] = new_aux(("affine", {}, expr.value))
            return const_cache[expr.value]
        return new_aux(definition(expr))

    def definition(expr):
        if isinstance(expr, (Min, Max)):
            kind = "min" if isinstance(expr, Min) else "max"
            return (kind, [operand(c) for c in expr.children])
        if isinstance(expr, (Var, Const, Affine)):
            acc: dict = {}
            const = linear(expr, Fraction(1), acc)
            return ("affine", acc, const)
        raise InstanceError(f"flatten: unknown expression node {expr!r}")

    for target, expr in equations:
        defs[("v", target)] = definition(expr)

    refs = [("v", t) for t in targets] + aux_order
    ordered = ([r for r in refs if defs[r][0] == "min"]
               + [r for r in refs if defs[r][0] == "max"]
               + [r for r in refs if defs[r][0] == "affine"])
    pos = {r: i + 1 for i, r in enumerate(ordered)}
    n = len(ordered)
    n1 = sum(1 for r in ordered if defs[r][0] == "min")
    n2 = sum(1 for r in ordered if defs[r][0] == "max")
    choices, rows, b = [], [], []
    for r in ordered:
        d = defs[r]
        if d[0] in ("min", "max"):
            choices.append(tuple(pos[c] for c in d[1]))
        else:
            row = [Fraction(0)] * n
            for ref, c in d[1].items():
                row[pos[ref] - 1] += c
            rows.append(tuple(row))
            b.append(d[2])
    system = LemmSystem.from_rows(n1, n2, choices, rows, b)
    return Flattened(system, {t: pos[("v", t)] for t in targets})


def system_to_equations(system: LemmSystem) -> list[tuple[int, Expression]]:
    """Express a flat system as equations over its own 1-based indices."""
    eqs = []
    for i, js in enumerate(system.choices, start=1):
        node = Min if i <= system.n1 else Max
        eqs.append((i, node(tuple(Var(j) for j in js))))
    for k, q in enumerate(system.affine, start=system.m + 1):
        nz = [(c, Var(j)) for j, c in enumerate(q, start=1) if c]
        eqs.append((k, Affine(tuple(c for c, _ in nz), system.offsets[k - 1],
                              tuple(v for _, v in nz))))
    return eqs
