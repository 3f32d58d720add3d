"""Exact linear algebra over the rationals for strategy matrices.

Solving uses fraction-free (Bareiss) elimination on an integer copy of the
augmented matrix.  Spectral questions are answered exactly from the
characteristic polynomial with the Schur-Cohn stability test; floating point
is only used to pick good Collatz-Wielandt test vectors and to screen
candidates cheaply.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import InstanceError, identity

Matrix = list  # list of rows of Fractions

DEFAULT_MAX_POWER = 64
DEFAULT_TOLERANCE = Fraction(1, 2 ** 30)
EXACT_SPECTRAL_LIMIT = 40


class Decay(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Unique:
    x: tuple


@dataclass(frozen=True)
class Singular:
    kernel: tuple
    particular: Optional[tuple]


# -- small helpers -------------------------------------------------------------

def mat_vec(A: Matrix, x: Sequence[Fraction]) -> list[Fraction]:
    return [sum((a * v for a, v in zip(row, x) if a), Fraction(0)) for row in A]


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    cols = list(zip(*B))
    return [[sum((a * b for a, b in zip(row, col) if a and b), Fraction(0)) for col in cols]
            for row in A]


def is_nonneg(A: Matrix) -> bool:
    return all(v >= 0 for row in A for v in row)


def abs_matrix(A: Matrix) -> Matrix:
    return [[abs(v) for v in row] for row in A]


def i_minus(Q: Matrix) -> Matrix:
    n = len(Q)
    return [[(1 if i == j else 0) - Q[i][j] for j in range(n)] for i in range(n)]


def _check_square(Q: Matrix) -> int:
    n = len(Q)
    if any(len(row) != n for row in Q):
        raise InstanceError("matrix must be square")
    return n


# -- Bareiss elimination -------------------------------------------------------

def _integer_rows(A: Matrix, rhs: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    # scale each augmented row by the lcm of its denominators
    out = []
    for i, row in enumerate(A):
        full = [Fraction(v) for v in row] + [Fraction(r[i]) for r in rhs]
        scale = 1
        for v in full:
            scale = scale * v.denominator // math.gcd(scale, v.denominator)
        out.append([int(v * scale) for v in full])
    return out


def _exact_div(a: int, b: int) -> int:
    q, r = divmod(a, b)
    assert r == 0, "Bareiss division not exact"
    return q


def _bareiss(M: list[list[int]], ncols: int) -> list[tuple[int, int]]:
    """Fraction-free forward elimination in place over the first ``ncols`` columns.

    Returns the (row, column) pivot positions of the echelon form.
    """
    rows = len(M)
    width = len(M[0]) if rows else 0
    prev = 1
    r = 0
    pivots = []
    for c in range(ncols):
        if r == rows:
            break
        p = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if p is None:
            continue
        if p != r:
            M[r], M[p] = M[p], M[r]
        piv = M[r][c]
        prow = M[r]
        for i in range(r + 1, rows):
            row = M[i]
            f = row[c]
            for j in range(c + 1, width):
                row[j] = _exact_div(piv * row[j] - f * prow[j], prev)
            row[c] = 0
        prev = piv
        pivots.append((r, c))
        r += 1
    return pivots


def _back_substitute(M, pivots, ncols, rhs_index):
    """Solve the echelon system for one right-hand side, free variables set to 0."""
    x = [Fraction(0)] * ncols
    for r, c in reversed(pivots):
        row = M[r]
        acc = Fraction(row[ncols + rhs_index])
        for j in range(c + 1, ncols):
            if row[j] and x[j]:
                acc -= row[j] * x[j]
        x[c] = acc / row[c]
    return x


def _kernel(M, pivots, ncols):
    pivot_cols = {c for _, c in pivots}
    basis = []
    for free in range(ncols):
        if free in pivot_cols:
            continue
        x = [Fraction(0)] * ncols
        x[free] = Fraction(1)
        for r, c in reversed(pivots):
            row = M[r]
            acc = Fraction(0)
            for j in range(c + 1, ncols):
                if row[j] and x[j]:
                    acc -= row[j] * x[j]
            x[c] = acc / row[c]
        basis.append(tuple(x))
    return basis


def solve_system(A: Matrix, b: Sequence[Fraction]):
    """Solve ``A x = b`` exactly for square ``A``; returns Unique or Singular."""
    n = _check_square(A)
    if len(b) != n:
        raise InstanceError("dimension mismatch between matrix and vector")
    if n == 0:
        return Unique(())
    M = _integer_rows(A, [b])
    pivots = _bareiss(M, n)
    rank = len(pivots)
    if rank == n:
        x = _back_substitute(M, pivots, n, 0)
        assert mat_vec(A, x) == [Fraction(v) for v in b], "re-substitution failed"
        return Unique(tuple(x))
    consistent = all(M[r][n] == 0 for r in range(rank, n))
    particular = None
    if consistent:
        particular = tuple(_back_substitute(M, pivots, n, 0))
        assert mat_vec(A, particular) == [Fraction(v) for v in b]
    return Singular(tuple(_kernel(M, pivots, n)), particular)


def solve_linear(Q: Matrix, b: Sequence[Fraction]):
    """Solve ``(I - Q) x = b`` exactly."""
    _check_square(Q)
    return solve_system(i_minus(Q), b)


def inverse(A: Matrix) -> Optional[Matrix]:
    """Exact inverse of ``A`` or None when singular."""
    n = _check_square(A)
    if n == 0:
        return []
    eye = identity(n)
    M = _integer_rows(A, eye)
    pivots = _bareiss(M, n)
    if len(pivots) < n:
        return None
    cols = [_back_substitute(M, pivots, n, j) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def determinant(A: Matrix) -> Fraction:
    n = _check_square(A)
    if n == 0:
        return Fraction(1)
    M = _integer_rows(A, [])
    scale = Fraction(1)
    for row_src, row_int in zip(A, M):
        j = next((j for j, v in enumerate(row_src) if v), None)
        if j is None:
            return Fraction(0)
        scale *= Fraction(row_int[j]) / Fraction(row_src[j])
    sign = 1
    prev = 1
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            sign = -sign
        for i in range(c + 1, n):
            for j in range(c + 1, n):
                M[i][j] = _exact_div(M[c][c] * M[i][j] - M[i][c] * M[c][j], prev)
            M[i][c] = 0
        prev = M[c][c]
    return sign * Fraction(M[n - 1][n - 1]) / scale


# -- characteristic polynomial and stability -----------------------------------

def charpoly(Q: Matrix) -> list[Fraction]:
    """Coefficients of ``det(t I - Q)``, lowest degree first (monic).

    Reduces to upper Hessenberg form by similarity, then uses the
    Hessenberg determinant recurrence.
    """
    n = _check_square(Q)
    H = [[Fraction(v) for v in row] for row in Q]
    for c in range(n - 2):
        p = next((i for i in range(c + 1, n) if H[i][c] != 0), None)
        if p is None:
            continue
        k = c + 1
        if p != k:
            H[p], H[k] = H[k], H[p]
            for row in H:
                row[p], row[k] = row[k], row[p]
        piv = H[k][c]
        for j in range(k + 1, n):
            u = H[j][c] / piv
            if not u:
                continue
            rj, rk = H[j], H[k]
            for t in range(n):
                if rk[t]:
                    rj[t] -= u * rk[t]
            for row in H:
                if row[j]:
                    row[k] += u * row[j]
    # polys[m] is the charpoly of the leading m x m block
    polys = [[Fraction(1)]]
    for m in range(1, n + 1):
        hmm = H[m - 1][m - 1]
        prev = polys[m - 1]
        cur = [Fraction(0)] + prev  # t * p_{m-1}
        for d, v in enumerate(prev):
            cur[d] -= hmm * v
        prod = Fraction(1)
        for i in range(m - 1, 0, -1):
            prod *= H[i][i - 1]
            if not prod:
                break
            coef = H[i - 1][m - 1] * prod
            if coef:
                for d, v in enumerate(polys[i - 1]):
                    cur[d] -= coef * v
        polys.append(cur)
    return polys[n]


def schur_stable(coeffs: Sequence[Fraction]) -> bool:
    """True iff every root of the polynomial lies strictly inside the unit disk.

    ``coeffs`` are lowest degree first.  Exact Schur-Cohn reduction.
    """
    p = [Fraction(c) for c in coeffs]
    while p and p[-1] == 0:
        p.pop()
    if not p:
        raise InstanceError("zero polynomial")
    while len(p) > 1:
        d = len(p) - 1
        a0, ad = p[0], p[d]
        if abs(a0) >= abs(ad):
            return False
        q = [ad * p[k + 1] - a0 * p[d - k - 1] for k in range(d)]
        lead = q[-1]
        p = [v / lead for v in q]
    return True


def spectral_radius_below(Q: Matrix, r: Fraction, poly=None) -> bool:
    """Exactly decide ``rho(Q) < r`` for rational ``r > 0``."""
    r = Fraction(r)
    if r <= 0:
        return False
    poly = charpoly(Q) if poly is None else poly
    scaled = []
    power = Fraction(1)
    for c in poly:
        scaled.append(c * power)
        power *= r
    return schur_stable(scaled)


def _power_vector(Q: Matrix, iterations: int) -> np.ndarray:
    A = np.array([[float(v) for v in row] for row in Q], dtype=float)
    n = A.shape[0]
    v = np.ones(n)
    # iterate with I + A so periodic matrices still converge
    for _ in range(iterations):
        w = v + A @ v
        s = np.max(np.abs(w))
        if not np.isfinite(s) or s == 0:
            break
        v = w / s
    return v


def collatz_wielandt(Q: Matrix, iterations: int = 200) -> tuple[Fraction, Fraction]:
    """Certified bounds ``lo <= rho(Q) <= hi`` for an entrywise nonnegative ``Q``."""
    n = _check_square(Q)
    if n == 0:
        return Fraction(0), Fraction(0)
    v = _power_vector(Q, iterations)
    floor = max(float(np.max(v)), 1.0) * 2.0 ** -40
    vec = [Fraction(max(float(t), floor)) for t in v]
    Qv = mat_vec(Q, vec)
    ratios = [a / b for a, b in zip(Qv, vec)]
    return min(ratios), max(ratios)


def _dyadic_floor(x: Fraction, bits: int) -> Fraction:
    return Fraction(math.floor(x * 2 ** bits), 2 ** bits)


def _dyadic_ceil(x: Fraction, bits: int) -> Fraction:
    return Fraction(math.ceil(x * 2 ** bits), 2 ** bits)


def spectral_radius_estimate(Q: Matrix, iterations: int = 200,
                             tolerance=DEFAULT_TOLERANCE) -> tuple[Fraction, Fraction]:
    """Certified interval ``[lo, hi]`` containing the spectral radius of ``Q``.

    Starts from Collatz-Wielandt bounds (of ``|Q|`` when ``Q`` has negative
    entries, which only bounds from above) and narrows by exact bisection
    on the characteristic polynomial until the width is at most
    ``tolerance``.  Matrices larger than ``EXACT_SPECTRAL_LIMIT`` skip the
    bisection.
    """
    if iterations < 1:
        raise InstanceError("iterations must be at least 1")
    n = _check_square(Q)
    tolerance = Fraction(tolerance)
    if n == 0:
        return Fraction(0), Fraction(0)
    if is_nonneg(Q):
        lo, hi = collatz_wielandt(Q, iterations)
    else:
        absQ = abs_matrix(Q)
        _, hi = collatz_wielandt(absQ, iterations)
        hi = min(hi, max(sum(row) for row in absQ))
        lo = Fraction(0)
    if hi - lo <= tolerance or n > EXACT_SPECTRAL_LIMIT:
        return lo, hi
    poly = charpoly(Q)
    if all(c == 0 for c in poly[:-1]):
        return Fraction(0), Fraction(0)  # nilpotent
    bits = max(4, math.ceil(-math.log2(tolerance)) + 2)
    lo = _dyadic_floor(lo, bits)
    hi = _dyadic_ceil(hi, bits)
    # invariant: lo <= rho <= hi
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if spectral_radius_below(Q, mid, poly):
            hi = mid
        else:
            lo = mid
    return lo, hi


def spectral_radius_float(Q) -> float:
    """Floating-point spectral radius; a screen only, never a certificate."""
    A = np.asarray(Q, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def _max_row_sum(A: Matrix) -> Fraction:
    return max(sum(abs(v) for v in row) for row in A)


def matrix_power_decays(Q: Matrix, max_power: int = DEFAULT_MAX_POWER) -> Decay:
    """Decide whether ``Q**m -> 0``.

    Nonnegative ``Q``: exact, via ``(I - Q)^-1 1 >= 0``.  Other matrices:
    exact Schur-Cohn test up to ``EXACT_SPECTRAL_LIMIT``, beyond that the
    norm of ``Q**2**j`` (``2**j <= max_power``) certifies decay and
    ``|trace(Q**2**j)| >= n`` certifies failure; otherwise UNKNOWN.
    """
    n = _check_square(Q)
    if n == 0:
        return Decay.HOLDS
    if is_nonneg(Q):
        res = solve_linear(Q, [Fraction(1)] * n)
        if isinstance(res, Unique) and all(v >= 0 for v in res.x):
            return Decay.HOLDS
        return Decay.FAILS
    if n <= EXACT_SPECTRAL_LIMIT:
        return Decay.HOLDS if spectral_radius_below(Q, 1) else Decay.FAILS
    P = [[Fraction(v) for v in row] for row in Q]
    power = 1
    while power <= max_power:
        if _max_row_sum(P) < 1:
            return Decay.HOLDS
        if abs(sum(P[i][i] for i in range(n))) >= n:
            return Decay.FAILS
        P = mat_mul(P, P)
        power *= 2
    return Decay.UNKNOWN


def inverse_nonneg(Q: Matrix) -> Optional[Matrix]:
    """``(I - Q)^-1`` for nonnegative ``Q`` when it exists and is nonnegative.

    Returns None when ``I - Q`` is singular or the inverse has a negative
    entry (both mean the powers of ``Q`` do not vanish).  A negative inverse
    for a matrix whose spectral radius is below one would contradict the
    nonnegative-inverse property and raises AssertionError.
    """
    _check_square(Q)
    if not is_nonneg(Q):
        raise InstanceError("inverse_nonneg: matrix has a negative entry")
    inv = inverse(i_minus(Q))
    if inv is None:
        return None
    if any(v < 0 for row in inv for v in row):
        assert not spectral_radius_below(Q, 1), \
            "(I - Q)^-1 has a negative entry although rho(Q) < 1"
        return None
    return inv
