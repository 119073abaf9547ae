"""Lattices in K^n, Smith decompositions, distances, quotients and relative flags.

A lattice is a free rank-n module over h = C[[z]] inside K^n, K = C((z)),
stored by a basis matrix whose columns span it.  For two lattices lam and M
there is a basis (e) of lam and integers k_1 <= ... <= k_n with
M = span(z^{k_i} e_i); this is the Smith decomposition of M relative to lam.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotNested, PrecisionExhausted, SignatureMismatch
from .scalar_series import (
    ConstMatrix,
    LaurentSeries,
    SeriesMatrix,
    span,
    subspace_contains,
    subspace_dim,
    subspace_equal,
    INF,
)


class Lattice:
    """Full-rank h-module given by the columns of ``basis``."""

    __slots__ = ("basis",)

    def __init__(self, basis):
        if isinstance(basis, ConstMatrix):
            basis = SeriesMatrix.from_const(basis)
        elif not isinstance(basis, SeriesMatrix):
            basis = SeriesMatrix(basis)
        if basis.nrows != basis.ncols:
            raise ValueError("lattice basis must be square")
        self.basis = basis

    @classmethod
    def standard(cls, n: int) -> "Lattice":
        return cls(SeriesMatrix.identity(n))

    @classmethod
    def diagonal(cls, kappa) -> "Lattice":
        """span(z^{k_i} e_i)."""
        return cls(SeriesMatrix.z_power(kappa))

    @property
    def n(self) -> int:
        return self.basis.nrows

    def scaled(self, k: int) -> "Lattice":
        """z^k times the lattice."""
        return Lattice(self.basis.shift(k))

    def gauge_to(self, other: "Lattice") -> SeriesMatrix:
        """Matrix g with other.basis = self.basis @ g."""
        return self.basis.inv() @ other.basis

    def contains(self, other: "Lattice") -> bool:
        return self.gauge_to(other).is_holomorphic()

    def equals(self, other: "Lattice") -> bool:
        return self.gauge_to(other).in_GL_h()

    def homothetic(self, other: "Lattice") -> bool:
        k = smith_decomposition(self, other).kappa
        return k[0] == k[-1]

    def to_json(self):
        return self.basis.to_json()

    @classmethod
    def from_json(cls, obj) -> "Lattice":
        return cls(SeriesMatrix.from_json(obj))

    def __repr__(self):
        return f"Lattice({self.basis!r})"


@dataclass(frozen=True)
class SmithData:
    """Elementary divisors of M in lam and a Smith basis of lam."""

    kappa: tuple
    smith_basis: SeriesMatrix
    gauge: SeriesMatrix  # U with smith_basis = lam.basis @ U

    @property
    def multiplicities(self):
        out = []
        for k in self.kappa:
            if out and out[-1][0] == k:
                out[-1][1] += 1
            else:
                out.append([k, 1])
        return [tuple(x) for x in out]

    @property
    def v(self) -> int:
        return self.kappa[0]

    @property
    def d(self) -> int:
        return self.kappa[-1] - self.kappa[0]

    @property
    def index(self) -> int:
        return sum(k - self.kappa[0] for k in self.kappa)

    def to_json(self):
        return {
            "kappa": list(self.kappa),
            "d": self.d,
            "index": self.index,
            "v": self.v,
            "smith_basis": self.smith_basis.to_json(),
        }


def _as_lattice(x) -> Lattice:
    return x if isinstance(x, Lattice) else Lattice(x)


def smith_reduce(C: SeriesMatrix):
    """Reduce C over h to z^kappa.

    Returns (kappa, U) with C = U z^kappa W for some W in GL_n(h) and
    U in GL_n(h).  Pivot: lowest valuation, ties by row then column.
    """
    n = C.nrows
    m = [list(r) for r in C.rows]
    U = [list(r) for r in SeriesMatrix.identity(n).rows]
    kappa = []

    def swap_cols(mat, a, b):
        for r in mat:
            r[a], r[b] = r[b], r[a]

    for t in range(n):
        best = None
        bestv = INF
        for i in range(t, n):
            for j in range(t, n):
                a = m[i][j]
                if a.is_zero():
                    continue
                if a.low < bestv:
                    best, bestv = (i, j), a.low
        if best is None:
            raise PrecisionExhausted(
                "remaining block is zero at the available precision",
                location=f"step {t}",
            )
        i, j = best
        if i != t:
            m[i], m[t] = m[t], m[i]
            swap_cols(U, i, t)
        if j != t:
            swap_cols(m, j, t)
        k = int(bestv)
        unit = m[t][t].shift(-k)
        uinv = unit.inv()
        m[t] = [a * uinv for a in m[t]]
        for r in U:
            r[t] = r[t] * unit
        m[t][t] = LaurentSeries.monomial(k)
        for r in range(t + 1, n):
            a = m[r][t]
            if a.is_exact_zero():
                continue
            f = a.shift(-k)
            m[r] = [x - f * y for x, y in zip(m[r], m[t])]
            m[r][t] = LaurentSeries.zero()
            for row in U:
                row[t] = row[t] + f * row[r]
        # column operations over h only touch row t once column t is cleared
        for c in range(t + 1, n):
            m[t][c] = LaurentSeries.zero()
        kappa.append(k)
    return tuple(kappa), SeriesMatrix._make(tuple(tuple(r) for r in U))


def smith_decomposition(lam, M, verify: bool = False) -> SmithData:
    """Elementary divisors kappa of M in lam with a Smith basis of lam."""
    lam, M = _as_lattice(lam), _as_lattice(M)
    C = lam.gauge_to(M)
    kappa, U = smith_reduce(C)
    basis = lam.basis @ U
    sd = SmithData(kappa, basis, U)
    if verify:
        check = basis.scale_cols_by_power(kappa).inv() @ M.basis
        if not check.in_GL_h():
            raise PrecisionExhausted("Smith basis does not reconstruct M at this precision")
    return sd


def distance_index(lam, M) -> dict:
    """Distance d, index and the valuations v_lam(M), v_M(lam)."""
    fwd = smith_decomposition(lam, M)
    back = smith_decomposition(M, lam)
    d = fwd.d
    if back.d != d or d != -fwd.v - back.v:
        raise PrecisionExhausted("forward and backward Smith data disagree")
    return {"d": d, "index": fwd.index, "v": fwd.v, "v_reverse": back.v, "kappa": list(fwd.kappa)}


def normalize(lam, M) -> tuple[Lattice, int]:
    """z^{-v} M with v = v_lam(M), together with v."""
    v = smith_decomposition(lam, M).v
    return _as_lattice(M).scaled(-v), v


def lattice_sum(A, B) -> Lattice:
    """The module A + B."""
    A, B = _as_lattice(A), _as_lattice(B)
    sd = smith_decomposition(A, B)
    return Lattice(sd.smith_basis.scale_cols_by_power([min(k, 0) for k in sd.kappa]))


def lattice_intersection(A, B) -> Lattice:
    """The module A cap B."""
    A, B = _as_lattice(A), _as_lattice(B)
    sd = smith_decomposition(A, B)
    return Lattice(sd.smith_basis.scale_cols_by_power([max(k, 0) for k in sd.kappa]))


def m_power(lam, k: int) -> Lattice:
    """m^k lam = z^k lam."""
    return _as_lattice(lam).scaled(k)


# ---------------------------------------------------------------------------
# quotients lam / lam'
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quotient:
    """The residue-field vector space lam/lam' with its nilpotent z-action.

    Coordinates are indexed by (i, j) meaning z^j e_i, 0 <= j < k_i, where
    (e) is a Smith basis of lam for lam'.
    """

    smith: SmithData
    labels: tuple
    z_action: ConstMatrix

    @property
    def dim(self) -> int:
        return len(self.labels)

    def coordinates(self, X: SeriesMatrix):
        """Quotient coordinates of the columns of X (given in the Smith basis)."""
        out = []
        for c in range(X.ncols):
            out.append(tuple(X[i, c].coeff(j) for i, j in self.labels))
        return out


@dataclass(frozen=True)
class QuotientImage:
    quotient: Quotient
    subspace: ConstMatrix  # columns: basis of the image

    @property
    def dim(self) -> int:
        return subspace_dim(self.subspace)

    def contains(self, other: "QuotientImage") -> bool:
        return subspace_contains(self.subspace, other.subspace)

    def equals(self, other: "QuotientImage") -> bool:
        return subspace_equal(self.subspace, other.subspace)

    def to_json(self):
        return {
            "dim_quotient": self.quotient.dim,
            "labels": [list(x) for x in self.quotient.labels],
            "z_action": self.quotient.z_action.to_json(),
            "basis": self.subspace.to_json(),
        }


def quotient_space(lam, lamp) -> Quotient:
    lam, lamp = _as_lattice(lam), _as_lattice(lamp)
    sd = smith_decomposition(lam, lamp)
    if sd.kappa[0] < 0:
        raise NotNested("lam' is not contained in lam", location=f"kappa={list(sd.kappa)}")
    labels = tuple((i, j) for i, k in enumerate(sd.kappa) for j in range(k))
    pos = {lab: p for p, lab in enumerate(labels)}
    D = len(labels)
    rows = [[0] * D for _ in range(D)]
    for (i, j), p in pos.items():
        if (i, j + 1) in pos:
            rows[pos[(i, j + 1)]][p] = 1
    return Quotient(sd, labels, ConstMatrix(rows, D) if D else ConstMatrix.zeros(0))


def quotient_psi(lam, lamp, N) -> QuotientImage:
    """Image of (N + lam') cap lam in lam/lam'."""
    lam, lamp, N = _as_lattice(lam), _as_lattice(lamp), _as_lattice(N)
    Q = quotient_space(lam, lamp)
    return _psi_in(Q, lamp, N)


def _psi_in(Q: Quotient, lamp: Lattice, N: Lattice) -> QuotientImage:
    D = Q.dim
    if D == 0:
        return QuotientImage(Q, ConstMatrix.from_cols([], nrows=0))
    L = lattice_intersection(Lattice(Q.smith.smith_basis), lattice_sum(N, lamp))
    X = Q.smith.smith_basis.inv() @ L.basis
    top = max(Q.smith.kappa)
    vecs = []
    for s in range(top):
        vecs.extend(Q.coordinates(X.shift(s)))
    return QuotientImage(Q, span(vecs, D))


# ---------------------------------------------------------------------------
# flags and admissible pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissiblePair:
    """A flag 0 < F_1 < ... < F_s = V and a sequence kappa adapted to it.

    ``flag`` holds bases (as ConstMatrix columns) of F_1, ..., F_s; ``kappa``
    is nondecreasing with the value kappa^(j) repeated dim F_j - dim F_{j-1}
    times.
    """

    flag: tuple
    kappa: tuple

    def __post_init__(self):
        dims = [subspace_dim(F) for F in self.flag]
        sig = [b - a for a, b in zip([0] + dims[:-1], dims)]
        mult = [m for _, m in _multiplicities(self.kappa)]
        if sig != mult or any(m <= 0 for m in sig):
            raise SignatureMismatch(
                "flag signature does not match the multiplicities of kappa",
                location=f"signature={sig}, multiplicities={mult}",
            )

    @property
    def n(self) -> int:
        return len(self.kappa)

    @property
    def signature(self):
        return tuple(m for _, m in _multiplicities(self.kappa))

    @property
    def values(self):
        return tuple(k for k, _ in _multiplicities(self.kappa))

    @property
    def delta(self) -> int:
        return max(self.kappa) - min(self.kappa)

    @property
    def triviality_index(self) -> int:
        return index_of(self.kappa)

    def to_json(self):
        return {
            "flag": [F.to_json() for F in self.flag],
            "kappa": list(self.kappa),
            "signature": list(self.signature),
        }


def _multiplicities(kappa):
    out = []
    for k in kappa:
        if out and out[-1][0] == k:
            out[-1][1] += 1
        else:
            out.append([k, 1])
    return out


def delta_of(kappa) -> int:
    return max(kappa) - min(kappa)


def index_of(kappa) -> int:
    """i(kappa) = sum (max kappa - k_j)."""
    m = max(kappa)
    return sum(m - k for k in kappa)


def relative_flag(lam, M) -> AdmissiblePair:
    """Flag of M in lam/m lam: F_j spanned by Smith vectors with k_i <= kappa^(j)."""
    sd = smith_decomposition(lam, M)
    U0 = sd.gauge.const_term()
    n = len(sd.kappa)
    flag = []
    for val, _ in _multiplicities(sd.kappa):
        cols = [U0.col(i) for i in range(n) if sd.kappa[i] <= val]
        flag.append(span(cols, n))
    return AdmissiblePair(tuple(flag), sd.kappa)


def flag_is_prefix(short: AdmissiblePair, long: AdmissiblePair) -> bool:
    """Every component of ``short`` except the last is a component of ``long``."""
    comps = list(long.flag)
    for F in short.flag[:-1]:
        if not any(subspace_equal(F, G) for G in comps):
            return False
    return True
