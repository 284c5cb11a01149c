"""Scalar and matrix substrate.

Everything downstream runs in one of two scalar modes.  Exact mode keeps
entries as `fractions.Fraction` (real) or `RationalComplex` (a pair of
Fractions, so purely imaginary rationals stay exact).  Float mode keeps
entries as `float` / `complex`.  A matrix never mixes modes; complex
values are explicit real pairs in both modes.

Provided here: the `Matrix` and `Poly` containers, rank by Gaussian
elimination with a scaled pivot threshold, characteristic polynomials by
the Faddeev-LeVerrier recurrence, matrix exponentials by scaling and
squaring (with an exact terminating series for nilpotent generators),
rank sequences of shifted powers, and exact linear solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DiagnosticError, InputError

__all__ = [
    "RationalComplex",
    "Matrix",
    "Poly",
    "rank",
    "char_poly",
    "mat_exp",
    "mat_exp_array",
    "power_rank_sequence",
    "solve_exact",
    "inverse_exact",
    "DEFAULT_RANK_TOL",
]

DEFAULT_RANK_TOL = 1e-10

# exp series: scale so the 1-norm of the scaled matrix is at most 0.5,
# then 20 terms leave a truncation error below 1e-14
_EXP_TARGET = 0.5
_EXP_TERMS = 20


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    raise InputError(f"expected an exact rational entry, got {x!r}")


@dataclass(frozen=True)
class RationalComplex:
    """Complex scalar with exact rational real and imaginary parts."""

    re: Fraction
    im: Fraction

    @staticmethod
    def of(re, im=0) -> "RationalComplex":
        return RationalComplex(Fraction(re), Fraction(im))

    @staticmethod
    def _lift(x):
        if isinstance(x, RationalComplex):
            return x
        if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
            return RationalComplex(Fraction(x), Fraction(0))
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return RationalComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return RationalComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return RationalComplex(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero RationalComplex")
        return RationalComplex(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return RationalComplex(-self.re, -self.im)

    def conjugate(self) -> "RationalComplex":
        return RationalComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return math.sqrt(float(self.abs2()))

    def __bool__(self) -> bool:
        return self.re != 0 or self.im != 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        return f"{self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i"


def _is_exact_scalar(x) -> bool:
    return isinstance(x, (Fraction, RationalComplex)) or (
        isinstance(x, int) and not isinstance(x, bool)
    )


def _zero(mode: str, field: str):
    if mode == "exact":
        return RationalComplex.of(0) if field == "complex" else Fraction(0)
    return 0j if field == "complex" else 0.0


def _one(mode: str, field: str):
    if mode == "exact":
        return RationalComplex.of(1) if field == "complex" else Fraction(1)
    return 1 + 0j if field == "complex" else 1.0


def _normalize_entry(x, mode: str, field: str):
    if mode == "exact":
        if field == "complex":
            lifted = RationalComplex._lift(x)
            if lifted is None:
                raise InputError(f"exact complex matrix cannot hold {x!r}")
            return lifted
        return _as_fraction(x)
    # float mode: exact scalars must cross through to_float() explicitly,
    # except plain ints, which are lossless in both modes
    if isinstance(x, (Fraction, RationalComplex)):
        raise InputError(
            f"float matrix cannot hold exact entry {x!r}; convert with to_float()"
        )
    if field == "complex":
        return complex(x)
    if isinstance(x, complex):
        raise InputError(f"real float matrix cannot hold complex entry {x!r}")
    return float(x)


class Matrix:
    """Immutable square matrix over a single scalar mode."""

    __slots__ = ("rows", "n", "mode", "field")

    def __init__(self, rows, mode: str, field: str | None = None):
        if mode not in ("exact", "float"):
            raise InputError(f"unknown scalar mode {mode!r}")
        rows = [list(r) for r in rows]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise InputError("matrix must be square and nonempty")
        if field is None:
            has_complex = any(
                isinstance(x, (RationalComplex, complex)) and not isinstance(x, float)
                for r in rows
                for x in r
            )
            field = "complex" if has_complex else "real"
        if field not in ("real", "complex"):
            raise InputError(f"unknown field {field!r}")
        norm = tuple(
            tuple(_normalize_entry(x, mode, field) for x in r) for r in rows
        )
        object.__setattr__(self, "rows", norm)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "field", field)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    # ---- constructors -------------------------------------------------

    @classmethod
    def exact(cls, rows) -> "Matrix":
        return cls(rows, "exact")

    @classmethod
    def floating(cls, rows) -> "Matrix":
        return cls(rows, "float")

    @classmethod
    def identity(cls, n: int, mode: str = "exact", field: str = "real") -> "Matrix":
        one, zero = _one(mode, field), _zero(mode, field)
        return cls(
            [[one if i == j else zero for j in range(n)] for i in range(n)],
            mode,
            field,
        )

    @classmethod
    def zeros(cls, n: int, mode: str = "exact", field: str = "real") -> "Matrix":
        zero = _zero(mode, field)
        return cls([[zero] * n for _ in range(n)], mode, field)

    @classmethod
    def jordan_block(cls, lam, m: int, mode: str = "exact") -> "Matrix":
        """Single block: lam on the diagonal, ones on the superdiagonal."""
        if m < 1:
            raise InputError("block size must be at least 1")
        field = "complex" if isinstance(lam, (RationalComplex, complex)) else "real"
        zero, one = _zero(mode, field), _one(mode, field)
        rows = [[zero] * m for _ in range(m)]
        for i in range(m):
            rows[i][i] = lam
            if i + 1 < m:
                rows[i][i + 1] = one
        return cls(rows, mode, field)

    @classmethod
    def block_diag(cls, mats: Sequence["Matrix"]) -> "Matrix":
        if not mats:
            raise InputError("block_diag needs at least one block")
        mode = mats[0].mode
        if any(m.mode != mode for m in mats):
            raise InputError("cannot mix scalar modes across blocks")
        field = "complex" if any(m.field == "complex" for m in mats) else "real"
        n = sum(m.n for m in mats)
        zero = _zero(mode, field)
        rows = [[zero] * n for _ in range(n)]
        off = 0
        for m in mats:
            for i in range(m.n):
                for j in range(m.n):
                    rows[off + i][off + j] = m.rows[i][j]
            off += m.n
        return cls(rows, mode, field)

    @classmethod
    def companion(cls, poly: "Poly", mode: str = "exact") -> "Matrix":
        """Companion matrix of a monic polynomial of degree >= 1."""
        if poly.degree < 1:
            raise InputError("companion matrix needs degree >= 1")
        coeffs = poly.coeffs
        lead = coeffs[-1]
        if lead != _one(mode, "real") and lead != 1:
            raise InputError("companion matrix needs a monic polynomial")
        d = poly.degree
        zero = _zero(mode, "real")
        one = _one(mode, "real")
        rows = [[zero] * d for _ in range(d)]
        for i in range(1, d):
            rows[i][i - 1] = one
        for i in range(d):
            c = coeffs[i]
            rows[i][d - 1] = -(c if mode == "exact" else float(c))
        return cls(rows, mode)

    @classmethod
    def from_numpy(cls, arr: np.ndarray) -> "Matrix":
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            return cls([[complex(x) for x in row] for row in arr], "float", "complex")
        return cls([[float(x) for x in row] for row in arr], "float", "real")

    # ---- views and conversions ----------------------------------------

    def to_numpy(self) -> np.ndarray:
        if self.field == "complex":
            return np.array(
                [[complex(x) for x in row] for row in self.rows], dtype=complex
            )
        return np.array([[float(x) for x in row] for row in self.rows], dtype=float)

    def to_float(self) -> "Matrix":
        if self.mode == "float":
            return self
        return Matrix.from_numpy(self.to_numpy())

    def complexified(self) -> "Matrix":
        if self.field == "complex":
            return self
        return Matrix(self.rows, self.mode, "complex")

    # ---- arithmetic ----------------------------------------------------

    def _binary_prep(self, other: "Matrix"):
        if not isinstance(other, Matrix):
            raise InputError("matrix arithmetic needs two matrices")
        if self.mode != other.mode:
            raise InputError("cannot mix exact and float matrices")
        if self.n != other.n:
            raise InputError("matrix dimensions differ")
        field = "complex" if "complex" in (self.field, other.field) else "real"
        return self.complexified() if field == "complex" else self, (
            other.complexified() if field == "complex" else other
        )

    def __add__(self, other):
        a, b = self._binary_prep(other)
        return Matrix(
            [
                [a.rows[i][j] + b.rows[i][j] for j in range(a.n)]
                for i in range(a.n)
            ],
            a.mode,
            a.field,
        )

    def __sub__(self, other):
        a, b = self._binary_prep(other)
        return Matrix(
            [
                [a.rows[i][j] - b.rows[i][j] for j in range(a.n)]
                for i in range(a.n)
            ],
            a.mode,
            a.field,
        )

    def __neg__(self):
        return Matrix(
            [[-x for x in row] for row in self.rows], self.mode, self.field
        )

    def __matmul__(self, other):
        a, b = self._binary_prep(other)
        n = a.n
        bt = list(zip(*b.rows))
        zero = _zero(a.mode, a.field)
        out = []
        for i in range(n):
            ar = a.rows[i]
            out_row = []
            for j in range(n):
                bc = bt[j]
                s = zero
                for k in range(n):
                    s = s + ar[k] * bc[k]
                out_row.append(s)
            out.append(out_row)
        return Matrix(out, a.mode, a.field)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise InputError("matrix power needs a nonnegative integer")
        acc = Matrix.identity(self.n, self.mode, self.field)
        base = self
        while k:
            if k & 1:
                acc = acc @ base
            base = base @ base if k > 1 else base
            k >>= 1
        return acc

    def scaled(self, s) -> "Matrix":
        field = self.field
        if isinstance(s, (RationalComplex, complex)):
            field = "complex"
        base = self.complexified() if field == "complex" else self
        return Matrix(
            [[s * x for x in row] for row in base.rows], self.mode, field
        )

    def shifted(self, lam) -> "Matrix":
        """Return self - lam * I, promoting to the complex field if needed."""
        if self.mode == "exact" and not _is_exact_scalar(lam):
            raise InputError("exact matrix needs an exact shift value")
        if self.mode == "float" and isinstance(lam, (Fraction, RationalComplex)):
            lam = complex(lam) if isinstance(lam, RationalComplex) else float(lam)
        complex_shift = isinstance(lam, (RationalComplex, complex))
        base = self.complexified() if complex_shift else self
        rows = [list(r) for r in base.rows]
        for i in range(base.n):
            rows[i][i] = rows[i][i] - lam
        return Matrix(rows, base.mode, base.field)

    def apply(self, vec: Sequence) -> tuple:
        if len(vec) != self.n:
            raise InputError("vector length does not match matrix size")
        out = []
        for i in range(self.n):
            s = _zero(self.mode, self.field)
            for j in range(self.n):
                s = s + self.rows[i][j] * vec[j]
            out.append(s)
        return tuple(out)

    # ---- scalar summaries ----------------------------------------------

    def trace(self):
        t = _zero(self.mode, self.field)
        for i in range(self.n):
            t = t + self.rows[i][i]
        return t

    def max_abs(self) -> float:
        return max(abs(x) for row in self.rows for x in row)

    def one_norm(self) -> float:
        return max(
            sum(abs(self.rows[i][j]) for i in range(self.n)) for j in range(self.n)
        )

    def inf_norm(self) -> float:
        return max(sum(abs(x) for x in row) for row in self.rows)

    def is_zero(self) -> bool:
        if self.mode == "exact":
            return all(not x if isinstance(x, RationalComplex) else x == 0
                       for row in self.rows for x in row)
        return all(x == 0 for row in self.rows for x in row)

    # ---- equality -------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.mode == other.mode
            and self.field == other.field
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.mode, self.field, self.rows))

    def __repr__(self):
        return f"Matrix(n={self.n}, mode={self.mode}, field={self.field})"


@dataclass(frozen=True)
class Poly:
    """Polynomial with ascending coefficients; trailing zeros stripped."""

    coeffs: tuple

    @staticmethod
    def make(coeffs) -> "Poly":
        cs = list(coeffs)
        while cs and not cs[-1]:
            cs.pop()
        return Poly(tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        acc = 0 * z if self.coeffs else 0
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def derivative(self) -> "Poly":
        return Poly.make(tuple(k * c for k, c in enumerate(self.coeffs) if k))

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def float_coeffs(self) -> tuple:
        out = []
        for c in self.coeffs:
            if isinstance(c, (RationalComplex, complex)):
                out.append(complex(c))
            else:
                out.append(float(c))
        return tuple(out)

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            term = "t" if k == 1 else (f"t^{k}" if k else "")
            if k and c == 1:
                cs = ""
            elif k and c == -1:
                cs = "-"
            else:
                cs = str(c)
            parts.append(cs + ("*" if cs not in ("", "-") and term else "") + term)
        return " + ".join(parts).replace("+ -", "- ")


# ---- rank -----------------------------------------------------------------


def rank(m: Matrix, tol: float | None = None) -> int:
    """Rank by Gaussian elimination.

    Exact mode eliminates with exact pivots and requires tol = 0 (or
    omitted).  Float mode treats a pivot as zero when its magnitude is
    at most tol times the largest entry magnitude of the initial matrix;
    tol defaults to 1e-10.
    """
    if tol is not None and tol < 0:
        raise InputError("rank tolerance must be nonnegative")
    if m.mode == "exact":
        if tol not in (None, 0):
            raise InputError("exact mode requires tol = 0")
        return _rank_exact(m)
    t = DEFAULT_RANK_TOL if tol is None else float(tol)
    return _rank_float(m, t)


def _rank_exact(m: Matrix) -> int:
    rows = [list(r) for r in m.rows]
    n = m.n
    r = 0
    for col in range(n):
        piv = None
        for i in range(r, n):
            if rows[i][col]:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pval = rows[r][col]
        for i in range(r + 1, n):
            if rows[i][col]:
                f = rows[i][col] / pval
                rows[i] = [rows[i][j] - f * rows[r][j] for j in range(n)]
        r += 1
        if r == n:
            break
    return r


def _rank_float(m: Matrix, tol: float) -> int:
    rows = [list(r) for r in m.rows]
    n = m.n
    threshold = tol * m.max_abs()
    r = 0
    for col in range(n):
        piv, best = None, threshold
        for i in range(r, n):
            a = abs(rows[i][col])
            if a > best:
                piv, best = i, a
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pval = rows[r][col]
        for i in range(r + 1, n):
            if rows[i][col] != 0:
                f = rows[i][col] / pval
                rows[i] = [rows[i][j] - f * rows[r][j] for j in range(n)]
        r += 1
        if r == n:
            break
    return r


# ---- characteristic polynomial ---------------------------------------------


def char_poly(m: Matrix) -> Poly:
    """Monic characteristic polynomial det(tI - A), ascending coefficients.

    Uses the Faddeev-LeVerrier trace recurrence; divisions are only by
    integers, so exact inputs give exact coefficients.
    """
    n = m.n
    one = _one(m.mode, m.field)
    ident = Matrix.identity(n, m.mode, m.field)
    # c[0] multiplies t^n, c[k] multiplies t^(n-k)
    c = [one]
    mk = Matrix.zeros(n, m.mode, m.field)
    for k in range(1, n + 1):
        mk = (m @ mk) + ident.scaled(c[k - 1])
        c.append(-(m @ mk).trace() / k)
    return Poly.make(tuple(reversed(c)))


# ---- matrix exponential ------------------------------------------------------


def mat_exp_array(arr: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(t * arr) for a numpy square matrix by scaling and squaring."""
    a = np.asarray(arr, dtype=complex if np.iscomplexobj(arr) else float) * float(t)
    nrm = float(np.abs(a).sum(axis=0).max()) if a.size else 0.0
    s = 0 if nrm <= _EXP_TARGET else int(math.ceil(math.log2(nrm / _EXP_TARGET)))
    b = a / (2.0 ** s)
    eye = np.eye(a.shape[0], dtype=a.dtype)
    acc = eye.copy()
    term = eye.copy()
    for k in range(1, _EXP_TERMS + 1):
        term = term @ b / k
        acc = acc + term
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            acc = acc @ acc
    return acc


def _nilpotency_index(m: Matrix) -> int | None:
    p = m
    for k in range(1, m.n + 1):
        if p.is_zero():
            return k
        p = p @ m
    return None


def mat_exp(a: Matrix, t) -> Matrix:
    """exp(t * A).

    Exact matrices with exact times give an exact terminating series when
    A is nilpotent.  All other combinations are evaluated in float mode;
    entries of exp(tA) are transcendental in general.
    """
    exact_time = isinstance(t, (int, Fraction)) and not isinstance(t, bool)
    if a.mode == "exact" and exact_time:
        idx = _nilpotency_index(a)
        if idx is not None:
            tf = Fraction(t)
            ident = Matrix.identity(a.n, a.mode, a.field)
            acc = ident
            power = ident
            fact = Fraction(1)
            for k in range(1, idx):
                power = power @ a
                fact *= k
                acc = acc + power.scaled(tf ** k / fact)
            return acc
    tf = float(t)
    if not math.isfinite(tf):
        raise InputError("time must be finite")
    return Matrix.from_numpy(mat_exp_array(a.to_numpy(), tf))


# ---- rank sequences of shifted powers ---------------------------------------


def power_rank_sequence(a: Matrix, lam, kmax: int, tol: float | None = None) -> list:
    """[rank((A - lam I)^k) for k = 0..kmax].

    The sequence starts at n and never increases; it stabilizes at
    n minus the algebraic multiplicity of lam.  A sequence that rises
    under the float tolerance raises a DiagnosticError.
    """
    if kmax < 0:
        raise InputError("kmax must be nonnegative")
    shifted = a.shifted(lam)
    seq = [a.n]
    power = None
    for _ in range(kmax):
        power = shifted if power is None else power @ shifted
        seq.append(rank(power, tol))
    for i in range(1, len(seq)):
        if seq[i] > seq[i - 1]:
            raise DiagnosticError(
                f"rank sequence increased under tolerance: {seq}"
            )
    return seq


# ---- exact solves ------------------------------------------------------------


def _gauss_jordan_exact(m: Matrix, aug: list) -> list:
    """Reduce [m | aug] in place over Fraction / RationalComplex; return aug."""
    rows = [list(r) for r in m.rows]
    n = m.n
    width = len(aug[0])
    for col in range(n):
        piv = None
        for i in range(col, n):
            if rows[i][col]:
                piv = i
                break
        if piv is None:
            raise DiagnosticError("matrix is singular")
        rows[col], rows[piv] = rows[piv], rows[col]
        aug[col], aug[piv] = aug[piv], aug[col]
        pval = rows[col][col]
        rows[col] = [x / pval for x in rows[col]]
        aug[col] = [x / pval for x in aug[col]]
        for i in range(n):
            if i != col and rows[i][col]:
                f = rows[i][col]
                rows[i] = [rows[i][j] - f * rows[col][j] for j in range(n)]
                aug[i] = [aug[i][j] - f * aug[col][j] for j in range(width)]
    return aug


def solve_exact(m: Matrix, rhs: Sequence) -> tuple:
    """Solve m x = rhs exactly; m must be exact and nonsingular."""
    if m.mode != "exact":
        raise InputError("solve_exact needs an exact matrix")
    if len(rhs) != m.n:
        raise InputError("right-hand side length does not match")
    lift = (lambda x: RationalComplex._lift(x)) if m.field == "complex" else _as_fraction
    aug = [[lift(x)] for x in rhs]
    out = _gauss_jordan_exact(m, aug)
    return tuple(row[0] for row in out)


def inverse_exact(m: Matrix) -> Matrix:
    """Exact inverse; raises DiagnosticError when singular."""
    if m.mode != "exact":
        raise InputError("inverse_exact needs an exact matrix")
    one, zero = _one(m.mode, m.field), _zero(m.mode, m.field)
    aug = [
        [one if i == j else zero for j in range(m.n)] for i in range(m.n)
    ]
    out = _gauss_jordan_exact(m, aug)
    return Matrix(out, m.mode, m.field)
