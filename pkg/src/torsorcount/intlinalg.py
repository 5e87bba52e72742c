"""Exact integer and rational linear algebra on small dense matrices.

Matrices are plain lists of rows holding Python ints or Fractions; nothing
here is fast, everything here is exact.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence, Tuple

Matrix = List[List[int]]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(A: Sequence[Sequence]) -> list:
    if not A:
        return []
    return [list(col) for col in zip(*A)]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def matvec(A: Sequence[Sequence], v: Sequence) -> list:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def det(A: Sequence[Sequence]) -> Fraction | int:
    """Determinant by fraction-free Gaussian elimination (Bareiss).

    Works for integer and Fraction entries; integer input gives an int.
    """
    n = len(A)
    if n == 0:
        return 1
    M = [list(row) for row in A]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = M[i][j] * M[k][k] - M[i][k] * M[k][j]
                M[i][j] = num / prev if isinstance(num, Fraction) else _exact_div(num, prev)
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def _exact_div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        q, rem = divmod(a, b)
        assert rem == 0
        return q
    return Fraction(a) / Fraction(b)


def solve(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Solve the square system A x = b over Q; None if A is singular."""
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [M[i][n] for i in range(n)]


def inverse(A: Sequence[Sequence]) -> list[list[Fraction]] | None:
    n = len(A)
    cols = []
    for k in range(n):
        e = [int(i == k) for i in range(n)]
        x = solve(A, e)
        if x is None:
            return None
        cols.append(x)
    return transpose(cols)


def unimodular_inverse(A: Sequence[Sequence[int]]) -> Matrix:
    """Inverse of an integer matrix with determinant +-1, as integers."""
    inv = inverse(A)
    if inv is None:
        raise ValueError("matrix is singular")
    out = []
    for row in inv:
        if any(x.denominator != 1 for x in row):
            raise ValueError("matrix is not unimodular")
        out.append([int(x) for x in row])
    return out


def rank(rows: Sequence[Sequence]) -> int:
    M = [[Fraction(x) for x in row] for row in rows]
    if not M:
        return 0
    ncols = len(M[0])
    rk = 0
    for c in range(ncols):
        piv = next((i for i in range(rk, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[rk], M[piv] = M[piv], M[rk]
        for i in range(rk + 1, len(M)):
            if M[i][c] != 0:
                f = M[i][c] / M[rk][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[rk])]
        rk += 1
        if rk == len(M):
            break
    return rk


def smith_normal_form(A: Sequence[Sequence[int]]) -> Tuple[Matrix, Matrix, Matrix]:
    """Return (S, P, Q) with S = P A Q diagonal and P, Q unimodular.

    The diagonal of S is nonnegative and each entry divides the next.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    S = [list(map(int, row)) for row in A]
    P = identity(m)
    Q = identity(n)

    def swap_rows(i, j):
        S[i], S[j] = S[j], S[i]
        P[i], P[j] = P[j], P[i]

    def swap_cols(i, j):
        for row in S:
            row[i], row[j] = row[j], row[i]
        for row in Q:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, f):  # row[dst] += f * row[src]
        S[dst] = [a + f * b for a, b in zip(S[dst], S[src])]
        P[dst] = [a + f * b for a, b in zip(P[dst], P[src])]

    def add_col(src, dst, f):  # col[dst] += f * col[src]
        for row in S:
            row[dst] += f * row[src]
        for row in Q:
            row[dst] += f * row[src]

    t = 0
    while t < min(m, n):
        nonzero = [(abs(S[i][j]), i, j) for i in range(t, m) for j in range(t, n) if S[i][j]]
        if not nonzero:
            break
        _, i, j = min(nonzero)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, m):
                if S[i][t]:
                    q = S[i][t] // S[t][t]
                    add_row(t, i, -q)
                    if S[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if S[t][j]:
                    q = S[t][j] // S[t][t]
                    add_col(t, j, -q)
                    if S[t][j]:
                        swap_cols(t, j)
                        done = False
            if not done:
                continue
            # divisibility: pivot must divide the rest of the block
            bad = next(
                ((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if S[i][j] % S[t][t]),
                None,
            )
            if bad is None:
                break
            add_row(bad[0], t, 1)
        if S[t][t] < 0:
            S[t] = [-x for x in S[t]]
            P[t] = [-x for x in P[t]]
        t += 1
    return S, P, Q
