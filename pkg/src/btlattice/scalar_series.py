"""Exact scalars, truncated Laurent series and matrices of series.

Scalars are Gaussian rationals a + b*i with a, b rational.  A
:class:`LaurentSeries` is z^v * (p(z) + i*q(z)) with rational polynomials p, q
(stored as ``flint.fmpq_poly``) and an absolute precision N meaning the series
is only known modulo z^N.  ``prec=None`` marks an exact Laurent polynomial.

Precision bookkeeping follows the usual rules for truncated series:

* sum:     N = min(Na, Nb)
* product: N = min(Na + v(b), Nb + v(a))
* inverse: N = N_a - 2 v(a)

Exact inputs that must be inverted get ``working_precision()`` coefficients
past their valuation.
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
import math
import os
from fractions import Fraction
from itertools import permutations

import flint

from .errors import (
    CharPolyDoesNotSplit,
    NonUnit,
    PrecisionExhausted,
    ZeroAtPrecision,
)

DEFAULT_PRECISION = 32
PRECISION_ENV = "BTLATTICE_PRECISION"

_precision_var = contextvars.ContextVar("btlattice_precision", default=None)


def working_precision() -> int:
    """Relative precision used when an exact series has to be inverted."""
    p = _precision_var.get()
    if p is not None:
        return p
    env = os.environ.get(PRECISION_ENV)
    if env:
        return int(env)
    return DEFAULT_PRECISION


@contextlib.contextmanager
def precision(n: int):
    token = _precision_var.set(int(n))
    try:
        yield n
    finally:
        _precision_var.reset(token)


INF = math.inf


def _p(x):
    """Precision as a number (None -> inf)."""
    return INF if x is None else x


def _unp(x):
    return None if x == INF else int(x)


# ---------------------------------------------------------------------------
# Gaussian rationals
# ---------------------------------------------------------------------------


def _q(x) -> flint.fmpq:
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, bool):
        return flint.fmpq(int(x))
    if isinstance(x, int):
        return flint.fmpq(x)
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    if isinstance(x, flint.fmpz):
        return flint.fmpq(x)
    if isinstance(x, str):
        f = Fraction(x)
        return flint.fmpq(f.numerator, f.denominator)
    raise TypeError(f"cannot use {type(x).__name__} as an exact rational")


class GaussianRational:
    """Element re + im*i of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            if im != 0:
                raise TypeError("imaginary part given twice")
            self.re, self.im = re.re, re.im
            return
        self.re = _q(re)
        self.im = _q(im)

    @classmethod
    def _make(cls, re, im):
        g = object.__new__(cls)
        g.re = re
        g.im = im
        return g

    # arithmetic ---------------------------------------------------------
    def __add__(self, o):
        o = gauss(o)
        return GaussianRational._make(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = gauss(o)
        return GaussianRational._make(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return gauss(o) - self

    def __neg__(self):
        return GaussianRational._make(-self.re, -self.im)

    def __mul__(self, o):
        if isinstance(o, (LaurentSeries, ConstMatrix, SeriesMatrix)):
            return NotImplemented
        o = gauss(o)
        if not self.im and not o.im:
            return GaussianRational._make(self.re * o.re, self.im)
        return GaussianRational._make(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def norm(self) -> flint.fmpq:
        return self.re * self.re + self.im * self.im

    def conj(self):
        return GaussianRational._make(self.re, -self.im)

    def inverse(self):
        n = self.norm()
        if not n:
            raise ZeroDivisionError("division by zero in Q(i)")
        return GaussianRational._make(self.re / n, -self.im / n)

    def __truediv__(self, o):
        o = gauss(o)
        if not o.im:
            if not o.re:
                raise ZeroDivisionError("division by zero in Q(i)")
            return GaussianRational._make(self.re / o.re, self.im / o.re)
        return self * o.inverse()

    def __rtruediv__(self, o):
        return gauss(o) / self

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out, base = ONE, self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # predicates ----------------------------------------------------------
    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_zero(self) -> bool:
        return not self

    def is_real(self) -> bool:
        return not self.im

    def is_integer(self) -> bool:
        return not self.im and self.re.q == 1

    def __eq__(self, o):
        try:
            o = gauss(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(Fraction(int(self.re.p), int(self.re.q)))
        return hash((int(self.re.p), int(self.re.q), int(self.im.p), int(self.im.q)))

    def __int__(self):
        if not self.is_integer():
            raise ValueError(f"{self} is not an integer")
        return int(self.re.p)

    def real_fraction(self) -> Fraction:
        return Fraction(int(self.re.p), int(self.re.q))

    def imag_fraction(self) -> Fraction:
        return Fraction(int(self.im.p), int(self.im.q))

    def sort_key(self):
        return (self.real_fraction(), self.imag_fraction())

    # I/O -------------------------------------------------------------------
    def to_json(self):
        return [int(self.re.p), int(self.re.q), int(self.im.p), int(self.im.q)]

    @classmethod
    def from_json(cls, quad):
        if isinstance(quad, (int,)) and not isinstance(quad, bool):
            return cls(quad)
        if not isinstance(quad, (list, tuple)) or len(quad) not in (2, 4):
            raise ValueError(f"expected [num, den, inum, iden], got {quad!r}")
        vals = [int(x) for x in quad]
        if vals[1] == 0 or (len(vals) == 4 and vals[3] == 0):
            raise ValueError("zero denominator")
        re = flint.fmpq(vals[0], vals[1])
        im = flint.fmpq(vals[2], vals[3]) if len(vals) == 4 else flint.fmpq(0)
        return cls._make(re, im)

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*I"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}*I"

    __str__ = __repr__

    def __abs__(self):
        return self.norm()


ZERO = GaussianRational._make(flint.fmpq(0), flint.fmpq(0))
ONE = GaussianRational._make(flint.fmpq(1), flint.fmpq(0))
I = GaussianRational._make(flint.fmpq(0), flint.fmpq(1))


def gauss(x) -> GaussianRational:
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, complex):
        raise TypeError("floating point complex numbers are not exact")
    if isinstance(x, float):
        raise TypeError("floating point numbers are not exact")
    return GaussianRational._make(_q(x), flint.fmpq(0))


def _qsqrt(x: flint.fmpq):
    """Exact square root of a nonnegative rational, or None."""
    if x < 0:
        return None
    p, q = int(x.p), int(x.q)
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return flint.fmpq(rp, rq)
    return None


# ---------------------------------------------------------------------------
# Laurent series
# ---------------------------------------------------------------------------

_ZPOLY = flint.fmpq_poly([])


def _poly_from(values):
    return flint.fmpq_poly(list(values))


def _inv_series(p: flint.fmpq_poly, n: int) -> flint.fmpq_poly:
    """Inverse of p modulo x^n (p[0] != 0), by Newton iteration."""
    x = flint.fmpq_poly([1 / p[0]])
    k = 1
    two = flint.fmpq_poly([2])
    while k < n:
        k = min(2 * k, n)
        x = x.mul_low(two - p.mul_low(x, k), k)
    return x


class LaurentSeries:
    """Truncated Laurent series over Q(i) with absolute precision."""

    __slots__ = ("_v", "_re", "_im", "_prec")

    def __init__(self, coeffs=(), val: int = 0, prec: int | None = None):
        cs = [gauss(c) for c in coeffs]
        re = _poly_from(c.re for c in cs)
        im = _poly_from(c.im for c in cs) if any(c.im for c in cs) else _ZPOLY
        s = _norm(int(val), re, im, prec)
        self._v, self._re, self._im, self._prec = s._v, s._re, s._im, s._prec

    # constructors ------------------------------------------------------------
    @staticmethod
    def monomial(k: int = 1, c=1, prec=None) -> "LaurentSeries":
        return _norm(k, _poly_from([gauss(c).re]), _poly_from([gauss(c).im]), prec)

    @staticmethod
    def const(c, prec=None) -> "LaurentSeries":
        return LaurentSeries.monomial(0, c, prec)

    @staticmethod
    def zero(prec=None) -> "LaurentSeries":
        return _zero(prec)

    @staticmethod
    def from_polys(val, re, im=None, prec=None) -> "LaurentSeries":
        return _norm(val, re, _ZPOLY if im is None else im, prec)

    # basic accessors -----------------------------------------------------------
    @property
    def prec(self):
        return self._prec

    @property
    def is_exact(self) -> bool:
        return self._prec is None

    def is_zero(self) -> bool:
        """True for exact zero and for series that vanish at their precision."""
        return self._re.length() == 0 and self._im.length() == 0

    def is_exact_zero(self) -> bool:
        return self.is_zero() and self._prec is None

    def valuation(self) -> int:
        if self.is_zero():
            raise ZeroAtPrecision(
                "series is indistinguishable from zero at its precision",
                location=f"prec={self._prec}",
            )
        return self._v

    @property
    def low(self):
        """Lower bound for the valuation (inf for exact zero)."""
        if self.is_zero():
            return _p(self._prec)
        return self._v

    def degree(self):
        if not self.is_exact:
            raise PrecisionExhausted("degree of a truncated series is undefined")
        if self.is_zero():
            return None
        return self._v + max(self._re.length(), self._im.length()) - 1

    def coeff(self, k: int) -> GaussianRational:
        if self._prec is not None and k >= self._prec:
            raise PrecisionExhausted(
                f"coefficient of z^{k} requested beyond precision {self._prec}"
            )
        j = k - self._v
        if j < 0 or self.is_zero():
            return ZERO
        return GaussianRational._make(self._re[j], self._im[j])

    def __getitem__(self, k: int) -> GaussianRational:
        return self.coeff(k)

    def coefficients(self):
        """(valuation offset, list of coefficients up to precision/degree)."""
        if self.is_zero():
            return (self._v, [])
        top = self._prec if self._prec is not None else self.degree() + 1
        return (self._v, [self.coeff(k) for k in range(self._v, top)])

    def terms(self):
        """Nonzero (exponent, coefficient) pairs."""
        if self.is_zero():
            return []
        n = max(self._re.length(), self._im.length())
        out = []
        for j in range(n):
            c = GaussianRational._make(self._re[j], self._im[j])
            if c:
                out.append((self._v + j, c))
        return out

    def is_real(self) -> bool:
        return self._im.length() == 0

    # arithmetic ----------------------------------------------------------------
    def _coerce(self, o):
        if isinstance(o, LaurentSeries):
            return o
        if isinstance(o, (SeriesMatrix, ConstMatrix)):
            return None
        return LaurentSeries.const(o)

    def __add__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        if self.is_exact_zero():
            return o
        if o.is_exact_zero():
            return self
        prec = _unp(min(_p(self._prec), _p(o._prec)))
        v0 = min(self._v, o._v)
        re = self._re.left_shift(self._v - v0) + o._re.left_shift(o._v - v0)
        if self._im.length() or o._im.length():
            im = self._im.left_shift(self._v - v0) + o._im.left_shift(o._v - v0)
        else:
            im = _ZPOLY
        return _norm(v0, re, im, prec)

    __radd__ = __add__

    def __neg__(self):
        s = object.__new__(LaurentSeries)
        s._v, s._re, s._im, s._prec = self._v, -self._re, -self._im, self._prec
        return s

    def __sub__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, (SeriesMatrix, ConstMatrix)):
            return NotImplemented
        o = self._coerce(o)
        if self.is_exact_zero() or o.is_exact_zero():
            return _zero(None)
        prec = min(_p(self._prec) + o.low, _p(o._prec) + self.low)
        if self.is_zero() or o.is_zero():
            return _zero(_unp(prec))
        v = self._v + o._v
        ar, ai, br, bi = self._re, self._im, o._re, o._im
        has_i = ai.length() or bi.length()
        if prec == INF:
            re = ar * br
            im = _ZPOLY
            if has_i:
                re = re - ai * bi
                im = ar * bi + ai * br
            return _norm(v, re, im, None)
        L = int(prec) - v
        if L <= 0:
            return _zero(int(prec))
        re = ar.mul_low(br, L)
        im = _ZPOLY
        if has_i:
            if ai.length() and bi.length():
                re = re - ai.mul_low(bi, L)
            im = (ar.mul_low(bi, L) if bi.length() else _ZPOLY) + (
                ai.mul_low(br, L) if ai.length() else _ZPOLY
            )
        return _norm(v, re, im, int(prec))

    __rmul__ = __mul__

    def inv(self, rel_prec: int | None = None) -> "LaurentSeries":
        """Multiplicative inverse in the Laurent series field."""
        if self.is_exact_zero():
            raise NonUnit("inverse of exact zero")
        if self.is_zero():
            raise PrecisionExhausted(
                "inverse of a series that is zero at its precision",
                location=f"prec={self._prec}",
            )
        v = self._v
        ar, ai = self._re, self._im
        if self._prec is None and ar.length() <= 1 and ai.length() <= 1:
            c = GaussianRational._make(ar[0], ai[0]).inverse()
            return _norm(-v, _poly_from([c.re]), _poly_from([c.im]), None)
        if self._prec is None:
            L = rel_prec if rel_prec is not None else working_precision()
        else:
            L = self._prec - v
        if not ai.length():
            return _norm(-v, _inv_series(ar, L), _ZPOLY, -v + L)
        n = ar.mul_low(ar, L) + ai.mul_low(ai, L)
        ninv = _inv_series(n, L)
        return _norm(-v, ar.mul_low(ninv, L), -ai.mul_low(ninv, L), -v + L)

    def __truediv__(self, o):
        if isinstance(o, LaurentSeries):
            return self * o.inv()
        return self * gauss(o).inverse()

    def __rtruediv__(self, o):
        return LaurentSeries.const(o) * self.inv()

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        out = LaurentSeries.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # calculus and reshaping ------------------------------------------------------
    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by z^k (exact)."""
        if self.is_exact_zero():
            return self
        s = object.__new__(LaurentSeries)
        s._v = self._v + k
        s._re, s._im = self._re, self._im
        s._prec = None if self._prec is None else self._prec + k
        return s

    def theta(self) -> "LaurentSeries":
        """z d/dz."""
        if self.is_zero():
            return self
        v = self._v
        re = self._re * v + self._re.derivative().left_shift(1)
        im = self._im * v + self._im.derivative().left_shift(1) if self._im.length() else _ZPOLY
        return _norm(v, re, im, self._prec)

    def derivative(self) -> "LaurentSeries":
        return self.theta().shift(-1)

    def truncate(self, n: int) -> "LaurentSeries":
        """Forget everything from z^n on (precision becomes min(prec, n))."""
        return _norm(self._v, self._re, self._im, _unp(min(_p(self._prec), n)))

    def polynomial_part(self, n: int) -> "LaurentSeries":
        """Exact Laurent polynomial made of the terms of degree < n."""
        if _p(self._prec) < n:
            raise PrecisionExhausted(
                f"terms below z^{n} requested from a series known mod z^{self._prec}"
            )
        t = _norm(self._v, self._re, self._im, n)
        return _norm(t._v, t._re, t._im, None)

    def with_precision(self, n: int | None) -> "LaurentSeries":
        """Same coefficients, declared precision n (only ever shrinks)."""
        if n is None:
            return self
        return self.truncate(n)

    def conj(self) -> "LaurentSeries":
        return _norm(self._v, self._re, -self._im, self._prec)

    def evaluate(self, x):
        """Value of an exact Laurent polynomial at a Gaussian rational."""
        if not self.is_exact:
            raise PrecisionExhausted("cannot evaluate a truncated series")
        x = gauss(x)
        if self.is_zero():
            return ZERO
        acc = ZERO
        n = max(self._re.length(), self._im.length())
        for j in range(n - 1, -1, -1):
            acc = acc * x + GaussianRational._make(self._re[j], self._im[j])
        if self._v:
            acc = acc * x ** self._v
        return acc

    def substitute_inverse(self) -> "LaurentSeries":
        """p(z) -> p(1/z) for an exact Laurent polynomial."""
        if not self.is_exact:
            raise PrecisionExhausted("substitution z -> 1/z needs an exact input")
        if self.is_zero():
            return self
        d = self.degree()
        n = d - self._v + 1
        re = _poly_from([self._re[n - 1 - j] for j in range(n)])
        im = _poly_from([self._im[n - 1 - j] for j in range(n)]) if self._im.length() else _ZPOLY
        return _norm(-d, re, im, None)

    def divmod_linear(self, a):
        """Exact division of a polynomial by (z - a): returns (quotient, remainder)."""
        if not self.is_exact or (not self.is_zero() and self._v < 0):
            raise ValueError("divmod_linear needs an exact polynomial")
        if self.is_zero():
            return self, ZERO
        a = gauss(a)
        cs = [c for c in self.coefficients()[1]]
        cs = [ZERO] * self._v + cs
        q = [ZERO] * (len(cs) - 1)
        acc = ZERO
        for k in range(len(cs) - 1, -1, -1):
            acc = acc * a + cs[k]
            if k:
                q[k - 1] = acc
        return LaurentSeries(q), acc

    # comparison --------------------------------------------------------------------
    def compare(self, other, required: int | None = None) -> str:
        """Three-valued comparison: 'equal', 'unequal' or 'undecidable'."""
        d = self - other
        if not d.is_zero():
            return "unequal"
        if d.is_exact:
            return "equal"
        if required is not None and d._prec < required:
            return "undecidable"
        return "equal"

    def equals(self, other, required: int | None = None) -> bool:
        r = self.compare(other, required)
        if r == "undecidable":
            raise PrecisionExhausted(
                "equality undecidable at the available precision",
                location=f"need {required}",
            )
        return r == "equal"

    def __eq__(self, other):
        if isinstance(other, (SeriesMatrix, ConstMatrix)):
            return NotImplemented
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        d = self - o
        if not d.is_zero():
            return False
        # zero up to the available precision counts as equal
        return True

    def __hash__(self):
        if not self.is_exact:
            raise TypeError("truncated series are not hashable")
        return hash((self._v, tuple(self._re.coeffs()), tuple(self._im.coeffs())))

    # I/O -----------------------------------------------------------------------------
    def to_json(self):
        v, cs = self.coefficients()
        return {"val": v if cs else 0, "coeffs": [c.to_json() for c in cs], "prec": self._prec}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict):
            try:
                cs = [GaussianRational.from_json(c) for c in obj["coeffs"]]
                val = int(obj.get("val", 0))
                prec = obj.get("prec")
            except (KeyError, TypeError) as exc:
                raise ValueError(f"bad series object: {obj!r}") from exc
            return cls(cs, val, None if prec is None else int(prec))
        return cls.const(GaussianRational.from_json(obj))

    def __repr__(self):
        parts = []
        for k, c in self.terms():
            cs = str(c)
            if ("+" in cs[1:] or "-" in cs[1:]) and c.re and c.im:
                cs = f"({cs})"
            if k == 0:
                parts.append(cs)
            else:
                mon = "z" if k == 1 else f"z^{k}"
                parts.append(mon if c == 1 else (f"-{mon}" if c == -1 else f"{cs}*{mon}"))
        body = " + ".join(parts) if parts else "0"
        body = body.replace("+ -", "- ")
        if self._prec is not None:
            body += f" + O(z^{self._prec})"
        return body


def _zero(prec):
    s = object.__new__(LaurentSeries)
    s._v = 0 if prec is None else prec
    s._re = _ZPOLY
    s._im = _ZPOLY
    s._prec = prec
    return s


def _norm(v, re, im, prec):
    if prec is not None:
        L = prec - v
        if L <= 0:
            return _zero(prec)
        if re.length() > L:
            re = re.truncate(L)
        if im.length() > L:
            im = im.truncate(L)
    if re.length() == 0 and im.length() == 0:
        return _zero(prec)
    k = 0
    while re[k] == 0 and im[k] == 0:
        k += 1
    if k:
        re = re.right_shift(k)
        im = im.right_shift(k) if im.length() else im
        v += k
    s = object.__new__(LaurentSeries)
    s._v, s._re, s._im, s._prec = v, re, im, prec
    return s


def series(x) -> LaurentSeries:
    if isinstance(x, LaurentSeries):
        return x
    return LaurentSeries.const(x)


Z = LaurentSeries.monomial(1)


# ---------------------------------------------------------------------------
# Constant matrices
# ---------------------------------------------------------------------------


class ConstMatrix:
    """Immutable matrix over Q(i) with exact linear algebra."""

    __slots__ = ("rows", "nrows", "ncols", "_hash")

    def __init__(self, rows, ncols: int | None = None):
        rs = tuple(tuple(gauss(x) for x in r) for r in rows)
        self.rows = rs
        self.nrows = len(rs)
        if ncols is None:
            ncols = len(rs[0]) if rs else 0
        if any(len(r) != ncols for r in rs):
            raise ValueError("ragged matrix")
        self.ncols = ncols
        self._hash = None

    @classmethod
    def _make(cls, rows, ncols):
        m = object.__new__(cls)
        m.rows = rows
        m.nrows = len(rows)
        m.ncols = ncols
        m._hash = None
        return m

    # constructors ----------------------------------------------------------
    @classmethod
    def identity(cls, n):
        return cls._make(
            tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)), n
        )

    @classmethod
    def zeros(cls, n, m=None):
        m = n if m is None else m
        return cls._make(tuple(tuple(ZERO for _ in range(m)) for _ in range(n)), m)

    @classmethod
    def diag(cls, values):
        vals = [gauss(v) for v in values]
        n = len(vals)
        return cls._make(
            tuple(tuple(vals[i] if i == j else ZERO for j in range(n)) for i in range(n)), n
        )

    @classmethod
    def from_cols(cls, cols, nrows: int | None = None):
        cols = [tuple(gauss(x) for x in c) for c in cols]
        if not cols:
            if nrows is None:
                raise ValueError("need nrows for an empty column list")
            return cls._make(tuple(() for _ in range(nrows)), 0)
        n = len(cols[0])
        return cls._make(tuple(tuple(c[i] for c in cols) for i in range(n)), len(cols))

    @classmethod
    def permutation(cls, perm):
        """Matrix P with P e_j = e_{perm[j]}."""
        n = len(perm)
        rows = [[ZERO] * n for _ in range(n)]
        for j, i in enumerate(perm):
            rows[i][j] = ONE
        return cls._make(tuple(tuple(r) for r in rows), n)

    # access ------------------------------------------------------------------------
    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def col(self, j):
        return tuple(r[j] for r in self.rows)

    def cols(self):
        return [self.col(j) for j in range(self.ncols)]

    def row(self, i):
        return self.rows[i]

    @property
    def T(self):
        return ConstMatrix._make(
            tuple(tuple(self.rows[i][j] for i in range(self.nrows)) for j in range(self.ncols)),
            self.nrows,
        )

    def submatrix(self, rows, cols):
        return ConstMatrix._make(
            tuple(tuple(self.rows[i][j] for j in cols) for i in rows), len(list(cols))
        )

    def hstack(self, other):
        return ConstMatrix._make(
            tuple(a + b for a, b in zip(self.rows, other.rows)), self.ncols + other.ncols
        )

    def vstack(self, other):
        return ConstMatrix._make(self.rows + other.rows, self.ncols)

    def select_cols(self, idx):
        idx = list(idx)
        return ConstMatrix._make(tuple(tuple(r[j] for j in idx) for r in self.rows), len(idx))

    def trace(self):
        return sum((self.rows[i][i] for i in range(self.nrows)), ZERO)

    # arithmetic --------------------------------------------------------------------
    def __add__(self, o):
        return ConstMatrix._make(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, o.rows)),
            self.ncols,
        )

    def __sub__(self, o):
        return ConstMatrix._make(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, o.rows)),
            self.ncols,
        )

    def __neg__(self):
        return ConstMatrix._make(tuple(tuple(-a for a in r) for r in self.rows), self.ncols)

    def scale(self, c):
        c = gauss(c)
        return ConstMatrix._make(tuple(tuple(a * c for a in r) for r in self.rows), self.ncols)

    def __mul__(self, c):
        if isinstance(c, (ConstMatrix, SeriesMatrix)):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, o):
        if isinstance(o, SeriesMatrix):
            return SeriesMatrix.from_const(self) @ o
        if self.ncols != o.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {o.shape}")
        ocols = o.cols()
        out = []
        for r in self.rows:
            row = []
            for c in ocols:
                acc = ZERO
                for a, b in zip(r, c):
                    if a and b:
                        acc = acc + a * b
                row.append(acc)
            out.append(tuple(row))
        return ConstMatrix._make(tuple(out), o.ncols)

    def apply(self, v):
        return tuple(
            sum((a * b for a, b in zip(r, v) if a and b), ZERO) for r in self.rows
        )

    def __eq__(self, o):
        if not isinstance(o, ConstMatrix):
            return NotImplemented
        return self.shape == o.shape and self.rows == o.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nrows, self.ncols, self.rows))
        return self._hash

    def is_zero(self) -> bool:
        return all(not a for r in self.rows for a in r)

    def is_diagonal(self) -> bool:
        return all(not self.rows[i][j] for i in range(self.nrows) for j in range(self.ncols) if i != j)

    def is_identity(self) -> bool:
        return self == ConstMatrix.identity(self.nrows)

    # elimination ----------------------------------------------------------------------
    def rref(self):
        """Reduced row echelon form and pivot columns."""
        m = [list(r) for r in self.rows]
        piv = []
        r = 0
        for c in range(self.ncols):
            p = next((i for i in range(r, self.nrows) if m[i][c]), None)
            if p is None:
                continue
            m[r], m[p] = m[p], m[r]
            inv = m[r][c].inverse()
            m[r] = [x * inv for x in m[r]]
            for i in range(self.nrows):
                if i != r and m[i][c]:
                    f = m[i][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[r])]
            piv.append(c)
            r += 1
            if r == self.nrows:
                break
        return ConstMatrix._make(tuple(tuple(x) for x in m), self.ncols), tuple(piv)

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self):
        """Basis of the kernel as a matrix whose columns span it."""
        R, piv = self.rref()
        free = [c for c in range(self.ncols) if c not in piv]
        vecs = []
        for f in free:
            v = [ZERO] * self.ncols
            v[f] = ONE
            for i, p in enumerate(piv):
                v[p] = -R.rows[i][f]
            vecs.append(v)
        return ConstMatrix.from_cols(vecs, nrows=self.ncols)

    def column_basis(self):
        """Columns of self forming a basis of its column space."""
        _, piv = self.rref()
        return self.select_cols(piv)

    def det(self):
        if self.nrows != self.ncols:
            raise ValueError("det of non-square matrix")
        m = [list(r) for r in self.rows]
        n = self.nrows
        d = ONE
        for c in range(n):
            p = next((i for i in range(c, n) if m[i][c]), None)
            if p is None:
                return ZERO
            if p != c:
                m[c], m[p] = m[p], m[c]
                d = -d
            d = d * m[c][c]
            inv = m[c][c].inverse()
            for i in range(c + 1, n):
                if m[i][c]:
                    f = m[i][c] * inv
                    m[i] = [a - f * b for a, b in zip(m[i], m[c])]
        return d

    def inv(self):
        n = self.nrows
        if n != self.ncols:
            raise ValueError("inverse of non-square matrix")
        aug = self.hstack(ConstMatrix.identity(n))
        R, piv = aug.rref()
        if piv[:n] != tuple(range(n)) or len(piv) < n:
            raise NonUnit("singular constant matrix")
        return R.select_cols(range(n, 2 * n))

    def solve(self, b):
        """Solve self @ X = b (b a ConstMatrix); raises NonUnit if inconsistent."""
        aug = self.hstack(b)
        R, piv = aug.rref()
        if any(p >= self.ncols for p in piv):
            raise NonUnit("inconsistent linear system")
        X = [[ZERO] * b.ncols for _ in range(self.ncols)]
        for i, p in enumerate(piv):
            for j in range(b.ncols):
                X[p][j] = R.rows[i][self.ncols + j]
        return ConstMatrix(X, b.ncols)

    def charpoly(self):
        """Coefficients c_0..c_n (low to high) of det(x I - A), via Faddeev-LeVerrier."""
        n = self.nrows
        c = [ZERO] * (n + 1)
        c[n] = ONE
        M = ConstMatrix.zeros(n)
        Id = ConstMatrix.identity(n)
        for k in range(1, n + 1):
            M = self @ M + Id.scale(c[n - k + 1])
            c[n - k] = -(self @ M).trace() / k
        return c

    def map(self, f):
        return ConstMatrix._make(tuple(tuple(f(a) for a in r) for r in self.rows), self.ncols)

    # I/O ------------------------------------------------------------------------------
    def to_json(self):
        return [[a.to_json() for a in r] for r in self.rows]

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
            raise ValueError("matrix must be a list of rows")
        return cls([[GaussianRational.from_json(a) for a in r] for r in obj])

    def __repr__(self):
        return "ConstMatrix(" + repr([list(r) for r in self.rows]) + ")"


def const_matrix(rows) -> ConstMatrix:
    return ConstMatrix(rows)


# subspaces are ConstMatrix objects whose columns form a basis ---------------------


def span(vectors, n: int) -> ConstMatrix:
    """Basis (as columns) of the span of the given vectors in Q(i)^n."""
    vectors = [tuple(gauss(x) for x in v) for v in vectors]
    if not vectors:
        return ConstMatrix.from_cols([], nrows=n)
    return ConstMatrix.from_cols(vectors).column_basis()


def subspace_dim(U: ConstMatrix) -> int:
    return U.rank() if U.ncols else 0


def subspace_sum(U: ConstMatrix, W: ConstMatrix) -> ConstMatrix:
    return span(U.cols() + W.cols(), U.nrows)


def subspace_intersection(U: ConstMatrix, W: ConstMatrix) -> ConstMatrix:
    n = U.nrows
    if U.ncols == 0 or W.ncols == 0:
        return ConstMatrix.from_cols([], nrows=n)
    K = U.hstack(-W).nullspace()
    vecs = [U.apply(c[: U.ncols]) for c in K.cols()]
    return span(vecs, n)


def in_subspace(U: ConstMatrix, v) -> bool:
    if U.ncols == 0:
        return all(not x for x in v)
    return U.hstack(ConstMatrix.from_cols([v])).rank() == U.rank()


def subspace_contains(U: ConstMatrix, W: ConstMatrix) -> bool:
    return all(in_subspace(U, w) for w in W.cols())


def subspace_equal(U: ConstMatrix, W: ConstMatrix) -> bool:
    return subspace_dim(U) == subspace_dim(W) and subspace_contains(U, W)


def is_invariant(A: ConstMatrix, U: ConstMatrix) -> bool:
    return all(in_subspace(U, A.apply(u)) for u in U.cols())


def complete_basis(U: ConstMatrix, n: int):
    """Columns of U followed by standard vectors completing them to a basis."""
    cols = list(U.cols())
    cur = span(cols, n) if cols else ConstMatrix.from_cols([], nrows=n)
    for i in range(n):
        e = tuple(ONE if k == i else ZERO for k in range(n))
        if len(cols) == n:
            break
        if not in_subspace(cur, e):
            cols.append(e)
            cur = span(cols, n)
    return cols


# ---------------------------------------------------------------------------
# Roots over Q(i) and eigen data
# ---------------------------------------------------------------------------


def _poly_eval(cs, x):
    acc = ZERO
    for c in reversed(cs):
        acc = acc * x + c
    return acc


def _poly_div_root(cs, r):
    """Divide sum cs[k] x^k by (x - r); returns (quotient, remainder)."""
    n = len(cs) - 1
    q = [ZERO] * n
    acc = ZERO
    for k in range(n, -1, -1):
        acc = acc * r + cs[k]
        if k:
            q[k - 1] = acc
    return q, acc


def _rational_candidates(p: flint.fmpq_poly):
    """Roots in Q(i) of the irreducible factors of degree <= 2 of p."""
    out = []
    if p.degree() <= 0:
        return out
    _, facs = p.factor()
    for f, _m in facs:
        d = f.degree()
        if d == 1:
            out.append(gauss(-f[0] / f[1]))
        elif d == 2:
            a, b, c = f[2], f[1], f[0]
            disc = b * b - 4 * a * c
            s = _qsqrt(-disc)
            if s is not None:
                out.append(GaussianRational._make(-b / (2 * a), s / (2 * a)))
                out.append(GaussianRational._make(-b / (2 * a), -s / (2 * a)))
    return out


def roots_gaussian(cs):
    """Roots with multiplicities of a polynomial over Q(i) (coefficients low->high).

    Raises CharPolyDoesNotSplit when the roots are not all in Q(i).
    """
    cs = [gauss(c) for c in cs]
    while len(cs) > 1 and not cs[-1]:
        cs.pop()
    deg = len(cs) - 1
    if deg <= 0:
        return []
    re = flint.fmpq_poly([c.re for c in cs])
    im = flint.fmpq_poly([c.im for c in cs])
    if im.length() == 0:
        norm = re
    else:
        norm = re * re + im * im
    cands = []
    for r in _rational_candidates(norm):
        if r not in cands:
            cands.append(r)
    found = []
    rest = cs
    for r in cands:
        m = 0
        while len(rest) > 1:
            q, rem = _poly_div_root(rest, r)
            if rem:
                break
            rest = q
            m += 1
        if m:
            found.append((r, m))
    if sum(m for _, m in found) != deg:
        raise CharPolyDoesNotSplit(
            "characteristic polynomial does not split over Q(i)",
            location="charpoly",
            coefficients=[str(c) for c in cs],
        )
    found.sort(key=lambda rm: rm[0].sort_key())
    return found


class EigenData:
    """Exact additive Jordan decomposition of a constant matrix."""

    def __init__(self, A, eigenvalues, chains):
        self.matrix = A
        self.eigenvalues = eigenvalues  # list of (value, algebraic multiplicity)
        self.chains = chains  # list of (value, [v_1, ..., v_k]) with (A - value) v_{j+1} = v_j
        cols, vals = [], []
        for lam, ch in chains:
            for v in ch:
                cols.append(v)
                vals.append(lam)
        n = A.nrows
        self.jordan_basis = ConstMatrix.from_cols(cols, nrows=n)
        S = self.jordan_basis
        Sinv = S.inv()
        self.semisimple = S @ ConstMatrix.diag(vals) @ Sinv
        self.nilpotent = A - self.semisimple
        self.jordan_form = Sinv @ A @ S
        self.jordan_blocks = [(lam, len(ch)) for lam, ch in chains]

    @property
    def is_diagonalizable(self) -> bool:
        return self.nilpotent.is_zero()

    def eigenspace(self, lam) -> ConstMatrix:
        lam = gauss(lam)
        n = self.matrix.nrows
        return (self.matrix - ConstMatrix.identity(n).scale(lam)).nullspace()

    def generalized_eigenspace(self, lam) -> ConstMatrix:
        lam = gauss(lam)
        vecs = [v for mu, ch in self.chains if mu == lam for v in ch]
        return ConstMatrix.from_cols(vecs, nrows=self.matrix.nrows)

    def to_json(self):
        return {
            "eigenvalues": [[v.to_json(), m] for v, m in self.eigenvalues],
            "jordan_blocks": [[v.to_json(), k] for v, k in self.jordan_blocks],
            "jordan_basis": self.jordan_basis.to_json(),
            "semisimple": self.semisimple.to_json(),
            "nilpotent": self.nilpotent.to_json(),
        }


def _jordan_chains(A: ConstMatrix, lam, mult):
    n = A.nrows
    N = A - ConstMatrix.identity(n).scale(lam)
    kernels = [ConstMatrix.from_cols([], nrows=n)]
    P = ConstMatrix.identity(n)
    while subspace_dim(kernels[-1]) < mult:
        P = P @ N
        kernels.append(P.nullspace())
        if len(kernels) > n + 1:
            raise CharPolyDoesNotSplit("generalized eigenspace did not stabilise")
    top = len(kernels) - 1
    tops = []  # (length, vector)
    for j in range(top, 0, -1):
        base = list(kernels[j - 1].cols())
        for L, x in tops:
            v = x
            for _ in range(L - j):
                v = N.apply(v)
            base.append(v)
        cur = span(base, n) if base else ConstMatrix.from_cols([], nrows=n)
        for v in kernels[j].cols():
            if not in_subspace(cur, v):
                tops.append((j, v))
                base.append(v)
                cur = span(base, n)
    chains = []
    for L, x in tops:
        ch = [x]
        for _ in range(L - 1):
            ch.append(N.apply(ch[-1]))
        chains.append((lam, list(reversed(ch))))
    return chains


@functools.lru_cache(maxsize=4096)
def _eigen_data_cached(A: ConstMatrix) -> EigenData:
    roots = roots_gaussian(A.charpoly())
    chains = []
    for lam, m in roots:
        chains.extend(_jordan_chains(A, lam, m))
    return EigenData(A, roots, chains)


def eigen_data(A) -> EigenData:
    """Eigenvalues, Jordan chains and the additive Jordan decomposition of A."""
    if isinstance(A, SeriesMatrix):
        A = A.as_constant()
    elif not isinstance(A, ConstMatrix):
        A = ConstMatrix(A)
    if A.nrows != A.ncols:
        raise ValueError("eigen_data needs a square matrix")
    return _eigen_data_cached(A)


# ---------------------------------------------------------------------------
# Matrices of series
# ---------------------------------------------------------------------------


class SeriesMatrix:
    """Immutable matrix with LaurentSeries entries."""

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows):
        rs = tuple(tuple(series(x) for x in r) for r in rows)
        self.rows = rs
        self.nrows = len(rs)
        self.ncols = len(rs[0]) if rs else 0
        if any(len(r) != self.ncols for r in rs):
            raise ValueError("ragged matrix")

    @classmethod
    def _make(cls, rows):
        m = object.__new__(cls)
        m.rows = rows
        m.nrows = len(rows)
        m.ncols = len(rows[0]) if rows else 0
        return m

    # constructors ---------------------------------------------------------------------
    @classmethod
    def from_const(cls, C: ConstMatrix, prec=None):
        return cls._make(
            tuple(tuple(LaurentSeries.const(a, prec) for a in r) for r in C.rows)
        )

    @classmethod
    def identity(cls, n):
        return cls.from_const(ConstMatrix.identity(n))

    @classmethod
    def zeros(cls, n, m=None, prec=None):
        m = n if m is None else m
        return cls._make(tuple(tuple(_zero(prec) for _ in range(m)) for _ in range(n)))

    @classmethod
    def diag(cls, entries):
        ents = [series(e) for e in entries]
        n = len(ents)
        return cls._make(
            tuple(tuple(ents[i] if i == j else _zero(None) for j in range(n)) for i in range(n))
        )

    @classmethod
    def z_power(cls, kappa):
        return cls.diag([LaurentSeries.monomial(int(k)) for k in kappa])

    @classmethod
    def from_coeffs(cls, coeffs, val: int = 0, prec=None):
        """sum_k coeffs[k] z^(val+k) for a list of ConstMatrix."""
        n, m = coeffs[0].shape
        rows = []
        for i in range(n):
            row = []
            for j in range(m):
                row.append(LaurentSeries([C[i, j] for C in coeffs], val, prec))
            rows.append(tuple(row))
        return cls._make(tuple(rows))

    @classmethod
    def permutation(cls, perm):
        return cls.from_const(ConstMatrix.permutation(perm))

    # access -----------------------------------------------------------------------------
    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def col(self, j):
        return tuple(r[j] for r in self.rows)

    def cols(self):
        return [self.col(j) for j in range(self.ncols)]

    @classmethod
    def from_cols(cls, cols):
        n = len(cols[0])
        return cls._make(tuple(tuple(series(c[i]) for c in cols) for i in range(n)))

    @property
    def T(self):
        return SeriesMatrix._make(
            tuple(tuple(self.rows[i][j] for i in range(self.nrows)) for j in range(self.ncols))
        )

    def map(self, f):
        return SeriesMatrix._make(tuple(tuple(f(a) for a in r) for r in self.rows))

    def select_cols(self, idx):
        idx = list(idx)
        return SeriesMatrix._make(tuple(tuple(r[j] for j in idx) for r in self.rows))

    def select_rows(self, idx):
        return SeriesMatrix._make(tuple(self.rows[i] for i in idx))

    def hstack(self, other):
        return SeriesMatrix._make(tuple(a + b for a, b in zip(self.rows, other.rows)))

    def block(self, rows, cols):
        return SeriesMatrix._make(tuple(tuple(self.rows[i][j] for j in cols) for i in rows))

    @property
    def prec(self):
        """Smallest entry precision (None when exact)."""
        return _unp(min((_p(a.prec) for r in self.rows for a in r), default=INF))

    @property
    def is_exact(self) -> bool:
        return all(a.is_exact for r in self.rows for a in r)

    # arithmetic --------------------------------------------------------------------------
    def _coerce(self, o):
        if isinstance(o, SeriesMatrix):
            return o
        if isinstance(o, ConstMatrix):
            return SeriesMatrix.from_const(o)
        return None

    def __add__(self, o):
        o = self._coerce(o)
        return SeriesMatrix._make(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, o.rows))
        )

    def __sub__(self, o):
        o = self._coerce(o)
        return SeriesMatrix._make(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, o.rows))
        )

    def __neg__(self):
        return self.map(lambda a: -a)

    def __mul__(self, c):
        if isinstance(c, (SeriesMatrix, ConstMatrix)):
            return NotImplemented
        c = series(c)
        return self.map(lambda a: a * c)

    __rmul__ = __mul__

    def __matmul__(self, o):
        o = self._coerce(o)
        if self.ncols != o.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {o.shape}")
        ocols = o.cols()
        out = []
        for r in self.rows:
            row = []
            for c in ocols:
                acc = _zero(None)
                for a, b in zip(r, c):
                    if a.is_exact_zero() or b.is_exact_zero():
                        continue
                    acc = acc + a * b
                row.append(acc)
            out.append(tuple(row))
        return SeriesMatrix._make(tuple(out))

    def __rmatmul__(self, o):
        if isinstance(o, ConstMatrix):
            return SeriesMatrix.from_const(o) @ self
        return NotImplemented

    def shift(self, k: int):
        return self.map(lambda a: a.shift(k))

    def theta(self):
        return self.map(lambda a: a.theta())

    def truncate(self, n: int):
        return self.map(lambda a: a.truncate(n))

    def polynomial_part(self, n: int):
        return self.map(lambda a: a.polynomial_part(n))

    def scale_rows_by_power(self, kappa, sign=1):
        """diag(z^(sign*k_i)) @ self."""
        return SeriesMatrix._make(
            tuple(tuple(a.shift(sign * int(k)) for a in r) for r, k in zip(self.rows, kappa))
        )

    def scale_cols_by_power(self, kappa, sign=1):
        """self @ diag(z^(sign*k_j))."""
        return SeriesMatrix._make(
            tuple(tuple(a.shift(sign * int(k)) for a, k in zip(r, kappa)) for r in self.rows)
        )

    def conj_power(self, kappa):
        """z^(-kappa) @ self @ z^(kappa)."""
        return SeriesMatrix._make(
            tuple(
                tuple(a.shift(int(kj) - int(ki)) for a, kj in zip(r, kappa))
                for r, ki in zip(self.rows, kappa)
            )
        )

    def permute_rows(self, perm):
        """Row i of the result is row perm[i] of self."""
        return SeriesMatrix._make(tuple(self.rows[p] for p in perm))

    def permute_cols(self, perm):
        """Column j of the result is column perm[j] of self."""
        return SeriesMatrix._make(tuple(tuple(r[p] for p in perm) for r in self.rows))

    # coefficients --------------------------------------------------------------------------
    def coeff(self, k: int) -> ConstMatrix:
        return ConstMatrix._make(
            tuple(tuple(a.coeff(k) for a in r) for r in self.rows), self.ncols
        )

    def const_term(self) -> ConstMatrix:
        return self.coeff(0)

    def as_constant(self) -> ConstMatrix:
        """The matrix itself when all entries are constants."""
        for r in self.rows:
            for a in r:
                if not a.is_zero() and (a.low != 0 or (a.is_exact and a.degree() != 0)):
                    raise ValueError("matrix is not constant")
                if not a.is_exact and not a.is_zero() and a.prec is not None and a.prec < 1:
                    raise PrecisionExhausted("constant term unknown")
        return self.coeff(0)

    def valuation_grid(self):
        return [[a.valuation() if not a.is_zero() else None for a in r] for r in self.rows]

    def valuation(self) -> int:
        vals = [a.valuation() for r in self.rows for a in r if not a.is_zero()]
        if not vals:
            raise ZeroAtPrecision("matrix is zero at its precision", location=f"prec={self.prec}")
        return min(vals)

    def low_valuation(self):
        """min over entries of the valuation lower bound (inf for exact zero)."""
        return min((a.low for r in self.rows for a in r), default=INF)

    def degree(self):
        degs = [a.degree() for r in self.rows for a in r if not a.is_zero()]
        return max(degs) if degs else None

    def evaluate(self, x) -> ConstMatrix:
        return ConstMatrix._make(
            tuple(tuple(a.evaluate(x) for a in r) for r in self.rows), self.ncols
        )

    def substitute_inverse(self):
        return self.map(lambda a: a.substitute_inverse())

    # linear algebra over the Laurent field -------------------------------------------------
    def _eliminate(self, rhs=None):
        """Gauss-Jordan with lowest-valuation pivots; returns (det, inverse or None)."""
        n = self.nrows
        if n != self.ncols:
            raise ValueError("square matrix required")
        m = [list(r) for r in self.rows]
        inv = [list(r) for r in SeriesMatrix.identity(n).rows] if rhs else None
        det = LaurentSeries.const(1)
        for c in range(n):
            best = None
            for i in range(c, n):
                a = m[i][c]
                if a.is_zero():
                    continue
                if best is None or a.low < m[best][c].low:
                    best = i
            if best is None:
                if all(m[i][c].is_exact_zero() for i in range(c, n)):
                    raise NonUnit("matrix is singular", location=f"column {c}")
                raise PrecisionExhausted(
                    "no pivot distinguishable from zero", location=f"column {c}"
                )
            if best != c:
                m[c], m[best] = m[best], m[c]
                det = -det
                if inv is not None:
                    inv[c], inv[best] = inv[best], inv[c]
            p = m[c][c]
            det = det * p
            pinv = p.inv()
            m[c] = [a * pinv for a in m[c]]
            if inv is not None:
                inv[c] = [a * pinv for a in inv[c]]
            for i in range(n):
                if i == c or (i < c and inv is None):
                    continue
                f = m[i][c]
                if f.is_exact_zero():
                    continue
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
                if inv is not None:
                    inv[i] = [a - f * b for a, b in zip(inv[i], inv[c])]
        return det, (SeriesMatrix._make(tuple(tuple(r) for r in inv)) if inv is not None else None)

    def det(self) -> LaurentSeries:
        if self.is_exact and self.nrows <= 4:
            return self._det_exact()
        return self._eliminate()[0]

    def _det_exact(self) -> LaurentSeries:
        n = self.nrows
        rows = self.rows

        @functools.lru_cache(maxsize=None)
        def minor(r, cols):
            if r == n:
                return LaurentSeries.const(1)
            acc = _zero(None)
            sign = 1
            for idx, c in enumerate(cols):
                a = rows[r][c]
                if not a.is_exact_zero():
                    sub = minor(r + 1, cols[:idx] + cols[idx + 1 :])
                    term = a * sub
                    acc = acc + term if sign > 0 else acc - term
                sign = -sign
            return acc

        return minor(0, tuple(range(n)))

    def inv(self) -> "SeriesMatrix":
        """Inverse over the Laurent series field."""
        if self.is_exact:
            d = self.det()
            if d.is_exact_zero():
                raise NonUnit("matrix is singular")
            if len(d.terms()) == 1:
                return self.adjugate() * d.inv()
        return self._eliminate(rhs=True)[1]

    def adjugate(self) -> "SeriesMatrix":
        n = self.nrows
        if n == 1:
            return SeriesMatrix.identity(1)
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                sub = SeriesMatrix._make(
                    tuple(
                        tuple(self.rows[r][c] for c in range(n) if c != i)
                        for r in range(n)
                        if r != j
                    )
                )
                d = sub.det()
                out[i][j] = d if (i + j) % 2 == 0 else -d
        return SeriesMatrix._make(tuple(tuple(r) for r in out))

    # membership predicates ----------------------------------------------------------------------
    def is_holomorphic(self) -> bool:
        for r in self.rows:
            for a in r:
                if a.is_zero():
                    if a.prec is not None and a.prec < 0:
                        raise PrecisionExhausted("entry unknown below z^0")
                    continue
                if a.low < 0:
                    return False
        return True

    def in_GL_h(self) -> bool:
        """Lattice gauge: holomorphic entries and unit determinant."""
        if not self.is_holomorphic():
            return False
        d0 = self.const_term().det()
        return bool(d0)

    def is_monopole(self) -> bool:
        """Unimodular in C[z^{-1}]: exact, no positive powers, nonzero constant determinant."""
        if not self.is_exact:
            return False
        for r in self.rows:
            for a in r:
                if not a.is_zero() and a.degree() > 0:
                    return False
        d = self.det()
        return (not d.is_zero()) and d.degree() == 0 and d.low == 0

    def is_unimodular_polynomial(self) -> bool:
        """Unimodular in C[z]: exact, no negative powers, nonzero constant determinant."""
        if not self.is_exact:
            return False
        for r in self.rows:
            for a in r:
                if not a.is_zero() and a.low < 0:
                    return False
        d = self.det()
        return (not d.is_zero()) and d.degree() == 0 and d.low == 0

    def in_frak_G(self, kappa) -> bool:
        """P in GL_n(h) with v(P_ij) >= k_i - k_j."""
        if not self.in_GL_h():
            return False
        for i, r in enumerate(self.rows):
            for j, a in enumerate(r):
                if not a.is_zero() and a.low < kappa[i] - kappa[j]:
                    return False
                if a.is_zero() and a.prec is not None and a.prec < kappa[i] - kappa[j]:
                    raise PrecisionExhausted("entry unknown at the required order")
        return True

    def in_G_parabolic(self, kappa) -> bool:
        """Constant invertible P with P_ij != 0 only if k_i <= k_j."""
        try:
            C = self.as_constant()
        except ValueError:
            return False
        if not C.det():
            return False
        return all(
            not C[i, j] or kappa[i] <= kappa[j] for i in range(C.nrows) for j in range(C.ncols)
        )

    def is_strongly_parabolic(self, K) -> bool:
        """Strongly K-parabolic for a nonincreasing K (blocks of equal entries)."""
        K = [int(k) for k in K]
        if any(K[i] < K[i + 1] for i in range(len(K) - 1)):
            raise ValueError("K must be nonincreasing")
        if not self.is_exact:
            return False
        n = self.nrows
        for i in range(n):
            for j in range(n):
                a = self.rows[i][j]
                if K[i] == K[j]:
                    want = LaurentSeries.monomial(K[i]) if i == j else _zero(None)
                    if not (a - want).is_exact_zero():
                        return False
                elif K[i] < K[j]:
                    if not a.is_exact_zero():
                        return False
                else:
                    if a.is_exact_zero():
                        continue
                    if a.low < K[j] or a.degree() >= K[i]:
                        return False
        return True

    # comparison ----------------------------------------------------------------------------------
    def compare(self, other, required=None) -> str:
        other = self._coerce(other)
        res = "equal"
        for r, s in zip(self.rows, other.rows):
            for a, b in zip(r, s):
                c = a.compare(b, required)
                if c == "unequal":
                    return "unequal"
                if c == "undecidable":
                    res = "undecidable"
        return res

    def equals(self, other, required=None) -> bool:
        c = self.compare(other, required)
        if c == "undecidable":
            raise PrecisionExhausted("matrix equality undecidable at available precision")
        return c == "equal"

    def __eq__(self, other):
        if not isinstance(other, (SeriesMatrix, ConstMatrix)):
            return NotImplemented
        other = self._coerce(other)
        return self.shape == other.shape and all(
            a == b for r, s in zip(self.rows, other.rows) for a, b in zip(r, s)
        )

    __hash__ = None

    # I/O ---------------------------------------------------------------------------------------------
    def to_json(self):
        return [[a.to_json() for a in r] for r in self.rows]

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
            raise ValueError("matrix must be a non-empty list of rows")
        return cls([[LaurentSeries.from_json(a) for a in r] for r in obj])

    def __repr__(self):
        return "SeriesMatrix(" + repr([list(r) for r in self.rows]) + ")"


def series_matrix(rows) -> SeriesMatrix:
    return SeriesMatrix(rows)


# ---------------------------------------------------------------------------
# Operation-level entry points
# ---------------------------------------------------------------------------


def series_arith(a, b=None, op: str = "mul"):
    """Add, multiply or invert series / series matrices with precision tracking.

    For ``op='inv'`` a matrix must be a lattice gauge (determinant of valuation 0).
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a @ b if isinstance(a, SeriesMatrix) else a * b
    if op == "inv":
        if isinstance(a, SeriesMatrix):
            d = a.det()
            if d.is_exact_zero():
                raise NonUnit("singular matrix")
            if d.is_zero():
                raise PrecisionExhausted("determinant indistinguishable from zero")
            if d.valuation() != 0:
                raise NonUnit(
                    "determinant is not a unit of the valuation ring",
                    location=f"v(det)={d.valuation()}",
                )
            return a.inv()
        return series(a).inv()
    raise ValueError(f"unknown op {op!r}")


def matrix_valuation(M: SeriesMatrix):
    """Minimum entry valuation together with the entrywise grid."""
    return M.valuation(), M.valuation_grid()


def all_permutations(n):
    return permutations(range(n))
