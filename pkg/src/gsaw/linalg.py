"""Dense linear algebra over exact or floating scalars.

Matrices are lists of rows. The production routines (Bareiss determinant,
Gauss-Jordan inverse, Ryser permanent) each have a naive counterpart
(Laplace expansion, permutation sums) kept only for cross-checking.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .scalars import is_exact, is_zero


class SingularMatrixError(ArithmeticError):
    pass


def identity(n, one=1):
    return [[one if i == j else 0 * one for j in range(n)] for i in range(n)]


def matmul(a, b):
    n, k = len(a), len(b)
    m = len(b[0]) if k else 0
    return [[sum((a[i][t] * b[t][j] for t in range(k)), 0) for j in range(m)] for i in range(n)]


def submatrix(a, rows, cols):
    return [[a[i][j] for j in cols] for i in rows]


def transpose(a):
    return [list(r) for r in zip(*a)] if a else []


def _exact_matrix(a) -> bool:
    return all(is_exact(x) for row in a for x in row)


def det(a):
    """Determinant; fraction-free Bareiss elimination for exact input."""
    n = len(a)
    if n == 0:
        return Fraction(1)
    if not _exact_matrix(a):
        return complex(np.linalg.det(np.array(a, dtype=complex)))
    m = [list(row) for row in a]
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) / prev
            m[i][k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def det_laplace(a):
    """Cofactor expansion along the first row. Oracle only: O(n!)."""
    n = len(a)
    if n == 0:
        return 1
    if n == 1:
        return a[0][0]
    total = 0
    for j in range(n):
        if is_zero(a[0][j]):
            continue
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        term = a[0][j] * det_laplace(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def inverse(a):
    """Exact Gauss-Jordan inverse, or numpy inverse for floating input."""
    n = len(a)
    if not _exact_matrix(a):
        arr = np.array(a, dtype=complex)
        try:
            inv = np.linalg.inv(arr)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(str(exc)) from exc
        return [[complex(x) for x in row] for row in inv]
    m = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise SingularMatrixError(f"zero pivot in column {col + 1}")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def permanent(a):
    """Ryser's inclusion-exclusion formula with Gray-code column updates."""
    n = len(a)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return a[0][0]
    zero = 0 * a[0][0]
    rowsums = [zero] * n
    total = zero
    in_set = [False] * n
    size = 0
    # Gray code: step k flips the lowest set bit of k
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            in_set[j] = False
            size -= 1
            for i in range(n):
                rowsums[i] = rowsums[i] - a[i][j]
        else:
            in_set[j] = True
            size += 1
            for i in range(n):
                rowsums[i] = rowsums[i] + a[i][j]
        prod = rowsums[0]
        for i in range(1, n):
            prod = prod * rowsums[i]
        total = total - prod if size % 2 else total + prod
    return total if n % 2 == 0 else -total


def permanent_naive(a):
    """Sum over all permutations. Oracle only: O(n * n!)."""
    n = len(a)
    total = 0
    for perm in itertools.permutations(range(n)):
        prod = 1
        for i, j in enumerate(perm):
            prod = prod * a[i][j]
        total = total + prod
    return total


def permutation_sign(seq) -> int:
    """Sign of the permutation that sorts ``seq`` (distinct items)."""
    seq = list(seq)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def cycles(perm):
    """Cycle decomposition of a permutation given as a dict or sequence."""
    mapping = dict(perm) if isinstance(perm, dict) else dict(enumerate(perm))
    seen, out = set(), []
    for start in sorted(mapping):
        if start in seen:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(x)
            x = mapping[x]
        out.append(tuple(cyc))
    return out
