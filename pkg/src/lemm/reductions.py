"""Instance generators for the hardness reductions and the MLP encoding.

Each generator returns an ordinary :class:`~lemm.core.LemmSystem` so every
other tool applies to its output unchanged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (Affine, Const, InstanceError, LemmSystem, Max, Min, Var,
                   flatten, to_fraction)


# -- partition -----------------------------------------------------------------

def partition_to_lemm(a: Sequence[int]) -> LemmSystem:
    """Min-only, nonnegative system that is feasible iff ``a`` splits evenly.

    With ``m = len(a)``::

        x_i      = min{x_{i+m}, x_{2m+1}}     i <= m      (forces x_i = +-1)
        x_{m+i}  = 2 x_i + 1
        x_{2m+1} = 1
        x_{2m+2} = sum a_i x_i + x_{2m+2}     (forces sum a_i x_i = 0)
    """
    a = list(a)
    if not a:
        raise InstanceError("partition: empty input")
    for v in a:
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise InstanceError(f"partition: entries must be positive integers, got {v!r}")
    m = len(a)
    n = 2 * m + 2
    choices = [(i + m, 2 * m + 1) for i in range(1, m + 1)]
    rows, b = [], []
    for i in range(1, m + 1):
        row = [Fraction(0)] * n
        row[i - 1] = Fraction(2)
        rows.append(row)
        b.append(Fraction(1))
    rows.append([Fraction(0)] * n)
    b.append(Fraction(1))
    last = [Fraction(v) for v in a] + [Fraction(0)] * (m + 1) + [Fraction(1)]
    rows.append(last)
    b.append(Fraction(0))
    return LemmSystem.from_rows(m, 0, choices, rows, b)


def partition_sign_vector(system: LemmSystem, x) -> list[int]:
    """Read the +-1 assignment of a solution of a partition instance."""
    return [int(v) for v in x[:system.n1]]


# -- sum-to-one normalisation ----------------------------------------------------

def normalize_sum_to_1(system: LemmSystem) -> LemmSystem:
    """Append ``x_{n+1} = 0`` and give each affine row the coefficient
    ``-(q_k . 1) - b_k`` on it, so every row sums to zero.

    ``x`` solves the input iff ``x + [0]`` solves the output.
    """
    n = system.n
    rows, b = [], []
    for k, q in enumerate(system.affine, start=system.m):
        bk = system.offsets[k]
        rows.append(list(q) + [-sum(q, Fraction(0)) - bk])
        b.append(bk)
    rows.append([Fraction(0)] * (n + 1))
    b.append(Fraction(0))
    return LemmSystem.from_rows(system.n1, system.n2, system.choices, rows, b)


# -- min-only reduction --------------------------------------------------------------

def to_min_only(system: LemmSystem, check: bool = False) -> LemmSystem:
    """Equivalent min-only system on ``3n + 1`` variables.

    Blocks: ``[1, n]`` hold ``x~`` (``x`` with max and affine coordinates
    negated), ``(n, 2n]`` hold ``-x~`` and ``(2n, 3n]`` copy ``x~``; the last
    variable is a zero dummy that makes every affine row sum to zero.  See
    :func:`min_only_embedding`.  The construction is meant for halting
    inputs; with ``check`` a warning is issued when the halting search finds
    a violation.
    """
    if check:
        from .conditions import check_c1_general

        if check_c1_general(system).fails:
            warnings.warn("to_min_only: input violates the halting condition", stacklevel=2)
    n, n1, m = system.n, system.n1, system.m
    N = 3 * n + 1
    choices = []
    for i, js in enumerate(system.choices, start=1):
        is_min = i <= n1
        new = []
        for l in js:
            l_is_min = l <= n1
            # min rows read min-type successors from the copy block, the rest
            # from the negation block; max rows the other way round
            new.append(l + (2 * n if l_is_min == is_min else n))
        choices.append(tuple(new))
    rows, b = [], []
    for k, q in enumerate(system.affine, start=m):
        row = [Fraction(0)] * N
        for l, v in enumerate(q, start=1):
            if v:
                row[(n + l if l <= n1 else 2 * n + l) - 1] = v
        bk = system.offsets[k]
        row[N - 1] = -sum(q, Fraction(0)) + bk
        rows.append(row)
        b.append(-bk)
    for l in range(n + 1, 2 * n + 1):
        row = [Fraction(0)] * N
        row[l - n - 1] = Fraction(-1)
        rows.append(row)
        b.append(Fraction(0))
    for l in range(2 * n + 1, 3 * n + 1):
        row = [Fraction(0)] * N
        row[l - 2 * n - 1] = Fraction(1)
        rows.append(row)
        b.append(Fraction(0))
    rows.append([Fraction(0)] * N)
    b.append(Fraction(0))
    return LemmSystem.from_rows(m, 0, choices, rows, b)


def min_only_embedding(system: LemmSystem, x) -> tuple:
    """``[x~; -x~; x~; 0]`` where ``x~`` negates coordinates after ``n1``."""
    xt = [to_fraction(v) if i < system.n1 else -to_fraction(v) for i, v in enumerate(x)]
    return tuple(xt + [-v for v in xt] + xt + [Fraction(0)])


def min_only_index(system: LemmSystem, i: int) -> int:
    """Index of the output variable that equals ``x_i`` (1-based)."""
    return i if i <= system.n1 else i + system.n


# -- SAT ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class CnfFormula:
    """``num_vars`` variables; clauses are tuples of ``(variable, polarity)``."""

    num_vars: int
    clauses: tuple

    def __post_init__(self):
        clauses = []
        for ci, clause in enumerate(self.clauses, start=1):
            lits = tuple(sorted({(int(v), bool(p)) for v, p in clause}))
            if not lits:
                raise InstanceError(f"clause {ci} is empty")
            for v, _ in lits:
                if not 1 <= v <= self.num_vars:
                    raise InstanceError(f"clause {ci}: variable {v} out of range")
            clauses.append(lits)
        object.__setattr__(self, "clauses", tuple(clauses))

    @classmethod
    def from_ints(cls, num_vars: int, clauses) -> "CnfFormula":
        return cls(num_vars, tuple(tuple((abs(l), l > 0) for l in c) for c in clauses))

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any(assignment[v - 1] == p for v, p in c) for c in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for c in self.clauses:
            lines.append(" ".join(str(v if p else -v) for v, p in c) + " 0")
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    """Parse the DIMACS CNF subset: comment lines, one ``p cnf`` line, clauses ending in 0."""
    num_vars = None
    declared = None
    clauses, current = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf" or num_vars is not None:
                raise InstanceError(f"line {lineno}: bad problem line")
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise InstanceError(f"line {lineno}: bad problem line") from None
            continue
        if num_vars is None:
            raise InstanceError(f"line {lineno}: clause before the problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise InstanceError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                if not current:
                    raise InstanceError(f"line {lineno}: empty clause")
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if num_vars is None:
        raise InstanceError("missing problem line")
    if current:
        clauses.append(current)
    if declared is not None and declared != len(clauses):
        raise InstanceError(f"problem line declares {declared} clauses, found {len(clauses)}")
    return CnfFormula.from_ints(num_vars, clauses)


def sat_to_condition_instance(f: CnfFormula) -> LemmSystem:
    """Max-only, sum-to-one system whose halting condition fails iff ``f`` is satisfiable.

    Variables: clause selectors ``1..m``, literal selectors ``m+1..m+r`` and
    their negations ``m+r+1..m+2r``, an averaging variable ``m+2r+1`` and its
    negation ``m+2r+2``.  With no clauses the instance is still produced but
    the correspondence does not apply.
    """
    m, r = len(f.clauses), f.num_vars
    if m == 0:
        warnings.warn("sat_to_condition_instance: formula has no clauses; "
                      "the satisfiability correspondence does not apply", stacklevel=2)
    n = m + 2 * r + 2
    hub, neg_hub = m + 2 * r + 1, m + 2 * r + 2
    choices = []
    for clause in f.clauses:
        choices.append(tuple(m + v if p else m + r + v for v, p in clause))
    for _ in range(r):
        choices.append((hub, neg_hub))
    rows = []
    for k in range(m + r + 1, m + 2 * r + 1):
        row = [Fraction(0)] * n
        row[k - r - 1] = Fraction(-1)
        rows.append(row)
    avg = [Fraction(0)] * n
    for i in range(m):
        avg[i] = Fraction(1, m + 1)
    avg[hub - 1] = Fraction(1, m + 1)
    rows.append(avg)
    last = [Fraction(0)] * n
    last[hub - 1] = Fraction(-1)
    rows.append(last)
    return LemmSystem.from_rows(0, m + r, choices, rows, [0] * len(rows))


# -- neural networks ---------------------------------------------------------------------

@dataclass(frozen=True)
class MlpLemm:
    """An encoded network: the system plus positions of the inputs and the output."""

    system: LemmSystem
    output: int
    inputs: tuple


def _matrix(obj, name):
    if not isinstance(obj, list) or not obj or any(not isinstance(r, list) for r in obj):
        raise InstanceError(f"{name} must be a nonempty list of rows")
    width = len(obj[0])
    if any(len(r) != width for r in obj):
        raise InstanceError(f"{name} has ragged rows")
    return [[to_fraction(v) for v in r] for r in obj]


def mlp_to_lemm(layers, output_row, output_offset=0) -> MlpLemm:
    """Encode ``out = q . f(... f(W1 x + b1) ...) + c`` over inputs in ``[0, 1]^d``.

    ``layers`` are dicts with ``W`` and ``b`` and an optional ``activation``:
    ``"relu"`` (default), ``"maxout"`` (``W`` and ``b`` are lists of pieces,
    the unit takes the maximum over pieces) or ``"linear"``.  Inputs are
    clamped by ``x = max{0, min{x, 1}}``; a decision query on the output
    variable asks whether some input in the box yields ``out < beta``.
    """
    layers = list(layers)
    output_row = [to_fraction(v) for v in output_row]
    parsed = []
    for li, layer in enumerate(layers, start=1):
        act = layer.get("activation", "relu")
        if act == "maxout":
            pieces_w = [_matrix(w, f"layer {li} W") for w in layer["W"]]
            pieces_b = [[to_fraction(v) for v in bb] for bb in layer["b"]]
            if not pieces_w or len(pieces_w) != len(pieces_b):
                raise InstanceError(f"layer {li}: maxout needs matching W and b pieces")
        elif act in ("relu", "linear"):
            pieces_w = [_matrix(layer["W"], f"layer {li} W")]
            pieces_b = [[to_fraction(v) for v in layer["b"]]]
        else:
            raise InstanceError(f"layer {li}: unknown activation {act!r}")
        rows, cols = len(pieces_w[0]), len(pieces_w[0][0])
        for W, bb in zip(pieces_w, pieces_b):
            if len(W) != rows or len(W[0]) != cols or len(bb) != rows:
                raise InstanceError(f"layer {li}: dimension mismatch")
        parsed.append((act, pieces_w, pieces_b, rows, cols))
    d = parsed[0][4] if parsed else len(output_row)
    width = d
    for li, (_, _, _, rows, cols) in enumerate(parsed, start=1):
        if cols != width:
            raise InstanceError(f"layer {li}: expects {cols} inputs, previous width is {width}")
        width = rows
    if len(output_row) != width:
        raise InstanceError(f"output row has length {len(output_row)}, expected {width}")

    eqs = []
    inputs = list(range(1, d + 1))
    for v in inputs:
        eqs.append((v, Max((Const(0), Min((Var(v), Const(1)))))))
    prev = inputs
    next_name = d + 1
    for act, pieces_w, pieces_b, rows, _ in parsed:
        units = list(range(next_name, next_name + rows))
        next_name += rows
        for u, name in enumerate(units):
            affs = [Affine(tuple(W[u]), bb[u], tuple(Var(p) for p in prev))
                    for W, bb in zip(pieces_w, pieces_b)]
            if act == "relu":
                expr = Max((affs[0], Const(0)))
            elif act == "maxout":
                expr = Max(tuple(affs)) if len(affs) > 1 else affs[0]
            else:
                expr = affs[0]
            eqs.append((name, expr))
        prev = units
    out = next_name
    eqs.append((out, Affine(tuple(output_row), to_fraction(output_offset),
                            tuple(Var(p) for p in prev))))
    flat = flatten(eqs)
    return MlpLemm(flat.system, flat.index[out], tuple(flat.index[v] for v in inputs))


def parse_mlp(doc) -> tuple:
    """Split a JSON network document into ``(layers, output_row, output_offset)``.

    Accepts a list of layers whose last entry (one row, no activation) is the
    output, or ``{"layers": [...], "output": {"q": [...], "b": c}}``.
    """
    if isinstance(doc, dict):
        out = doc.get("output")
        if not isinstance(out, dict) or "q" not in out:
            raise InstanceError("network document needs an 'output' object with 'q'")
        return list(doc.get("layers", [])), out["q"], out.get("b", 0)
    if not isinstance(doc, list) or not doc:
        raise InstanceError("network document must be a nonempty list of layers")
    last = doc[-1]
    W, b = last.get("W"), last.get("b")
    if not isinstance(W, list) or len(W) != 1 or not isinstance(b, list) or len(b) != 1:
        raise InstanceError("last layer must have exactly one row (the output)")
    return list(doc[:-1]), W[0], b[0]
