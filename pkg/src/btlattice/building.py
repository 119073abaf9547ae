"""Geometry of the affine building of SL_n: geodesics, forms, apartments, abacus."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import (
    CombinatorialBlowup,
    FlagNotAdmissible,
    NotNormalized,
    PrecisionExhausted,
    SignatureMismatch,
)
from .lattice import (
    AdmissiblePair,
    Lattice,
    delta_of,
    index_of,
    lattice_sum,
    smith_decomposition,
    _as_lattice,
)
from .scalar_series import (
    INF,
    ConstMatrix,
    SeriesMatrix,
    complete_basis,
    in_subspace,
    span,
    subspace_dim,
)

__all__ = [
    "AdmissiblePair",
    "Form",
    "GeodesicPath",
    "geodesic",
    "elementary_splitting",
    "form_lift",
    "flag_respecting_basis",
    "truncated_smith_form",
    "z_distance",
    "abacus",
    "abacus_count",
    "Frame",
    "in_apartment",
]


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------


def elementary_splitting(kappa):
    """T_1, ..., T_d with T_k = min(kappa, k) - min(kappa, k - 1)."""
    kappa = [int(k) for k in kappa]
    if not kappa or min(kappa) != 0:
        raise NotNormalized("kappa must have minimum 0", location=f"kappa={kappa}")
    if any(a > b for a, b in zip(kappa, kappa[1:])):
        raise NotNormalized("kappa must be nondecreasing", location=f"kappa={kappa}")
    d = max(kappa)
    return [tuple(1 if k >= j else 0 for k in kappa) for j in range(1, d + 1)]


@dataclass(frozen=True)
class GeodesicPath:
    """Vertices L_0 = lam, ..., L_d = z^{-v} M and the splitting of kappa."""

    vertices: tuple
    splitting: tuple
    kappa: tuple  # normalised elementary divisors of the endpoint
    shift: int  # v_lam(M) removed by normalisation

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def partial_sums(self):
        n = len(self.kappa)
        acc = [0] * n
        out = [tuple(acc)]
        for T in self.splitting:
            acc = [a + t for a, t in zip(acc, T)]
            out.append(tuple(acc))
        return out

    def to_json(self):
        return {
            "length": self.length,
            "kappa": list(self.kappa),
            "shift": self.shift,
            "splitting": [list(T) for T in self.splitting],
            "vertices": [L.to_json() for L in self.vertices],
        }


def geodesic(L, Lp) -> GeodesicPath:
    """Vertices L_k = lam' + m^k lam from lam to the normalised lam'."""
    L, Lp = _as_lattice(L), _as_lattice(Lp)
    sd = smith_decomposition(L, Lp)
    v = sd.v
    M = Lp.scaled(-v)
    kappa = tuple(k - v for k in sd.kappa)
    d = kappa[-1]
    vertices = [L]
    for k in range(1, d):
        vertices.append(lattice_sum(M, L.scaled(k)))
    if d > 0:
        vertices.append(M)
    return GeodesicPath(tuple(vertices), tuple(elementary_splitting(kappa)), kappa, v)


# ---------------------------------------------------------------------------
# forms
# ---------------------------------------------------------------------------


class Form:
    """The constant-coefficient span of an h-basis of a lattice."""

    __slots__ = ("basis",)

    def __init__(self, basis):
        if isinstance(basis, Lattice):
            basis = basis.basis
        elif isinstance(basis, ConstMatrix):
            basis = SeriesMatrix.from_const(basis)
        elif not isinstance(basis, SeriesMatrix):
            basis = SeriesMatrix(basis)
        self.basis = basis

    @classmethod
    def standard(cls, n: int) -> "Form":
        return cls(SeriesMatrix.identity(n))

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.basis)

    @property
    def n(self) -> int:
        return self.basis.nrows

    def to_json(self):
        return self.basis.to_json()


def _coerce_pair(pair) -> AdmissiblePair:
    if isinstance(pair, AdmissiblePair):
        return pair
    flag, kappa = pair
    try:
        return AdmissiblePair(tuple(flag), tuple(int(k) for k in kappa))
    except SignatureMismatch as exc:
        raise FlagNotAdmissible(exc.message, location=exc.location) from exc


def flag_respecting_basis(flag, n: int) -> ConstMatrix:
    """Constant basis whose first dim F_j vectors span F_j for every j."""
    cols = []
    for F in flag:
        cur = span(cols, n) if cols else ConstMatrix.from_cols([], nrows=n)
        for v in F.cols():
            if len(cols) >= subspace_dim(F):
                break
            ext = span(cols + [v], n)
            if subspace_dim(ext) > subspace_dim(cur):
                cols.append(v)
                cur = ext
    cols = complete_basis(ConstMatrix.from_cols(cols, nrows=n), n)
    return ConstMatrix.from_cols(cols, nrows=n)


def form_lift(Y: Form, pair, basis: ConstMatrix | None = None) -> Lattice:
    """The lattice span(z^{k_i} y_i) for a flag-respecting basis (y) of Y.

    The flag lives in lam/m lam with coordinates taken w.r.t. Y's basis.
    ``basis`` may supply a specific flag-respecting constant basis.
    """
    Y = Y if isinstance(Y, Form) else Form(Y)
    try:
        pair = _coerce_pair(pair)
    except SignatureMismatch as exc:
        raise FlagNotAdmissible(exc.message, location=exc.location) from exc
    n = Y.n
    if pair.n != n:
        raise FlagNotAdmissible("kappa length differs from the rank", location=f"n={n}")
    if basis is None:
        basis = flag_respecting_basis(pair.flag, n)
    else:
        start = 0
        for F in pair.flag:
            dim = subspace_dim(F)
            if span(basis.cols()[:dim], n).rank() != dim or not all(
                in_subspace(F, c) for c in basis.cols()[start:dim]
            ):
                raise FlagNotAdmissible("supplied basis does not respect the flag")
            start = dim
    B = Y.basis @ SeriesMatrix.from_const(basis)
    return Lattice(B.scale_cols_by_power(pair.kappa))


@dataclass(frozen=True)
class TruncatedSmithForm:
    form: Form
    gauge: SeriesMatrix  # polynomial gauge of degree <= d - 1 from Y
    kappa: tuple
    z_distance_bound: int

    def to_json(self):
        return {
            "kappa": list(self.kappa),
            "gauge": self.gauge.to_json(),
            "basis": self.form.to_json(),
            "z_distance_bound": self.z_distance_bound,
        }


def truncated_smith_form(Y: Form, M) -> TruncatedSmithForm:
    """A Smith form for M reached from Y by a polynomial gauge of degree <= d - 1."""
    Y = Y if isinstance(Y, Form) else Form(Y)
    M = _as_lattice(M)
    sd = smith_decomposition(Y.lattice, M)
    d = sd.d
    n = Y.n
    if d == 0:
        return TruncatedSmithForm(Y, SeriesMatrix.identity(n), sd.kappa, 0)
    P = sd.gauge
    if P.prec is not None and P.prec < d:
        raise PrecisionExhausted(
            f"Smith gauge known only modulo z^{P.prec}, need degree {d - 1}",
            location=f"d={d}",
        )
    Pbar = P.polynomial_part(d)
    Pinv = P.inv()
    Q = (Pinv @ Pbar).conj_power(sd.kappa)
    if not Q.in_GL_h():
        raise PrecisionExhausted("truncated gauge does not give a Smith form at this precision")
    return TruncatedSmithForm(Form(Y.basis @ Pbar), Pbar, sd.kappa, d - 1)


def _poly_degree(P: SeriesMatrix):
    if not P.is_exact or not P.is_holomorphic():
        return INF
    deg = P.degree()
    return 0 if deg is None else deg


def z_distance(Y: Form, Yt: Form):
    """min(deg P, deg P^{-1}) for the gauge P between the two forms (inf if not polynomial)."""
    P = Y.basis.inv() @ Yt.basis
    if not P.in_GL_h():
        raise ValueError("forms live in different lattices")
    dp = _poly_degree(P)
    di = INF
    if P.is_exact:
        det = P.det()
        if len(det.terms()) == 1 and det.low == 0:
            di = _poly_degree(P.adjugate() * det.inv())
    return min(dp, di)


# ---------------------------------------------------------------------------
# apartments
# ---------------------------------------------------------------------------


class Frame:
    """n independent K-lines, each given by a spanning vector (columns of ``vectors``)."""

    def __init__(self, vectors):
        if not isinstance(vectors, SeriesMatrix):
            vectors = SeriesMatrix(vectors)
        self.vectors = vectors

    def lattice(self, m) -> Lattice:
        """span(z^{m_i} d_i)."""
        return Lattice(self.vectors.scale_cols_by_power(m))

    def line_exponents(self, lam) -> list:
        """m_i with lam cap K d_i = z^{m_i} h d_i."""
        lam = _as_lattice(lam)
        C = lam.basis.inv() @ self.vectors
        out = []
        for j in range(C.ncols):
            vals = [C[i, j].valuation() for i in range(C.nrows) if not C[i, j].is_zero()]
            out.append(-min(vals))
        return out


def in_apartment(frame: Frame, lam) -> bool:
    """lam equals the direct sum of its intersections with the lines of the frame."""
    lam = _as_lattice(lam)
    return frame.lattice(frame.line_exponents(lam)).equals(lam)


# ---------------------------------------------------------------------------
# abacus
# ---------------------------------------------------------------------------


def _columns(kappa):
    """Box counts per column of the tableau with rows kappa sorted decreasingly."""
    ks = sorted((int(k) for k in kappa), reverse=True)
    d = ks[0] if ks else 0
    return ks, [sum(1 for k in ks if k >= j) for j in range(1, d + 1)]


def abacus_count(kappa, fix_first_column: bool = True) -> int:
    ks, cols = _columns(kappa)
    n = len(ks)
    movable = cols[1:] if fix_first_column else cols
    return math.prod(math.comb(n, c) for c in movable)


@dataclass(frozen=True)
class AbacusDiagram:
    columns: tuple  # for each column, the sorted tuple of rows holding boxes
    row_counts: tuple

    @property
    def delta(self) -> int:
        return delta_of(self.row_counts)

    @property
    def index(self) -> int:
        return index_of(self.row_counts)

    def to_json(self):
        return {
            "columns": [list(c) for c in self.columns],
            "row_counts": list(self.row_counts),
            "delta": self.delta,
            "index": self.index,
        }


DEFAULT_ABACUS_LIMIT = 100_000


def abacus(
    kappa,
    limit: int = DEFAULT_ABACUS_LIMIT,
    dedupe: bool = False,
    fix_first_column: bool = True,
):
    """All box diagrams reachable from the tableau of kappa by vertical moves.

    Rows are indexed by kappa sorted decreasingly; column j (1-based) holds
    #{k_i >= j} boxes.  The first column stays put unless
    ``fix_first_column`` is False.  Order is lexicographic in the box
    positions column by column.
    """
    kappa = [int(k) for k in kappa]
    if kappa and min(kappa) != 0:
        raise NotNormalized("kappa must have minimum 0", location=f"kappa={kappa}")
    total = abacus_count(kappa, fix_first_column)
    if total > limit:
        raise CombinatorialBlowup(
            f"abacus of {kappa} has {total} diagrams, limit {limit}",
            location=f"limit={limit}",
        )
    ks, cols = _columns(kappa)
    n = len(ks)
    choices = []
    for j, c in enumerate(cols):
        if j == 0 and fix_first_column:
            choices.append([tuple(range(c))])
        else:
            choices.append(list(itertools.combinations(range(n), c)))
    out = []
    seen = set()
    for combo in itertools.product(*choices):
        rc = [0] * n
        for col in combo:
            for r in col:
                rc[r] += 1
        rc = tuple(rc)
        if dedupe:
            if rc in seen:
                continue
            seen.add(rc)
        out.append(AbacusDiagram(tuple(combo), rc))
    return out
