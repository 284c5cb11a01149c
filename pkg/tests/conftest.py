"""Shared generators: exact block realizations and unimodular similarity.

Random systems are built from known block data and realized as real
matrices, so every expected invariant is known by construction and the
exact analysis path stays inside the decidable class (rational and
rational-complex eigenvalues).
"""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from flowclass.numkit import Matrix, RationalComplex


def realize_real(parts) -> Matrix:
    """Exact real matrix with prescribed real-Jordan structure.

    parts is a list of (a, b, m, count) with rational a, b and b >= 0:
    b == 0 contributes count Jordan blocks J_m(a); b > 0 contributes
    count real blocks of size 2m built from the 2x2 rotation cell
    [[a, b], [-b, a]] with identity cells on the superdiagonal,
    realizing the conjugate pair a +- bi with block size m.
    """
    blocks = []
    for a, b, m, count in parts:
        a = Fraction(a)
        b = Fraction(b)
        if b < 0:
            raise ValueError("b must be nonnegative; pairs are implied")
        for _ in range(count):
            if b == 0:
                blocks.append(Matrix.jordan_block(a, m, "exact"))
            else:
                size = 2 * m
                rows = [[Fraction(0)] * size for _ in range(size)]
                for cell in range(m):
                    at = 2 * cell
                    rows[at][at] = a
                    rows[at][at + 1] = b
                    rows[at + 1][at] = -b
                    rows[at + 1][at + 1] = a
                    if cell + 1 < m:
                        rows[at][at + 2] = Fraction(1)
                        rows[at + 1][at + 3] = Fraction(1)
                blocks.append(Matrix.exact(rows))
    return Matrix.block_diag(blocks)


def expected_blocks(parts) -> list:
    """Spectrum blocks (lam, m, count) matching realize_real(parts)."""
    merged: dict = {}
    for a, b, m, count in parts:
        a = Fraction(a)
        b = Fraction(b)
        if b == 0:
            merged[(a, m)] = merged.get((a, m), 0) + count
        else:
            for sgn in (1, -1):
                lam = RationalComplex(a, sgn * b)
                merged[(lam, m)] = merged.get((lam, m), 0) + count
    return [(lam, m, c) for (lam, m), c in merged.items()]


def random_parts(rng: random.Random, max_n: int = 8, center_only: bool = False):
    """Random real-Jordan structure with total dimension <= max_n.

    Repeated draws of the same (a, b, m) are deliberate: they exercise
    count merging in both the realization and the descriptor.
    """
    parts = []
    budget = rng.randint(2, max_n)
    while budget >= 1:
        if budget >= 2 and rng.random() < 0.55:
            m = rng.randint(1, min(2, budget // 2))
            b = Fraction(rng.randint(1, 6), rng.choice((1, 1, 2, 3)))
            a = Fraction(0) if center_only else Fraction(
                rng.choice((-2, -1, 0, 0, 1, 2)), rng.choice((1, 2))
            )
            parts.append((a, b, m, 1))
            budget -= 2 * m
        else:
            m = rng.randint(1, min(3, budget))
            a = Fraction(0) if center_only else Fraction(
                rng.choice((-3, -2, -1, 0, 1, 2, 3)), rng.choice((1, 2))
            )
            parts.append((a, Fraction(0), m, 1))
            budget -= m
    return parts


def random_unimodular(rng: random.Random, n: int, ops: int | None = None):
    """Exact invertible S with tracked exact inverse (determinant +-1)."""
    if ops is None:
        ops = 2 * n + 2
    s = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    s_inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for _ in range(ops):
        kind = rng.random()
        if kind < 0.75 and n >= 2:
            i, j = rng.sample(range(n), 2)
            c = rng.choice((-2, -1, 1, 2))
            # row_j += c * row_i on S; col_i -= c * col_j on S^-1
            for k in range(n):
                s[j][k] += c * s[i][k]
            for k in range(n):
                s_inv[k][i] -= c * s_inv[k][j]
        elif n >= 2:
            i, j = rng.sample(range(n), 2)
            s[i], s[j] = s[j], s[i]
            for k in range(n):
                s_inv[k][i], s_inv[k][j] = s_inv[k][j], s_inv[k][i]
    return Matrix.exact(s), Matrix.exact(s_inv)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20260816)
