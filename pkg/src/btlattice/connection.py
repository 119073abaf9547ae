"""Local meromorphic connections in theta-form and their logarithmic lattices.

A connection germ is stored by L = mat(nabla_theta) in a basis (e), with
theta = z d/dz, so that the connection matrix is L dz/z.  Under a basis
change (e) -> (e) P the matrix becomes P^{-1} L P - P^{-1} theta(P).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import FlagNotStable, PrecisionExhausted, ResonantResidue
from .lattice import AdmissiblePair, Lattice, _as_lattice
from .building import Form, flag_respecting_basis
from .scalar_series import (
    ConstMatrix,
    LaurentSeries,
    NonUnit,
    SeriesMatrix,
    eigen_data,
    gauss,
    is_invariant,
    span,
    subspace_dim,
    working_precision,
)


@dataclass(frozen=True)
class ConnectionGerm:
    """theta-matrix L of a connection in the basis whose span is ``base``."""

    theta_matrix: SeriesMatrix
    base: Lattice

    @classmethod
    def from_matrix(cls, L, base=None) -> "ConnectionGerm":
        if isinstance(L, ConstMatrix):
            L = SeriesMatrix.from_const(L)
        elif not isinstance(L, SeriesMatrix):
            L = SeriesMatrix(L)
        base = Lattice.standard(L.nrows) if base is None else _as_lattice(base)
        return cls(L, base)

    @property
    def n(self) -> int:
        return self.theta_matrix.nrows

    def valuation(self):
        return self.theta_matrix.valuation() if not _all_zero(self.theta_matrix) else None

    @property
    def poincare_rank(self) -> int:
        if _all_zero(self.theta_matrix):
            return 0
        return max(0, -self.theta_matrix.valuation())

    def is_logarithmic(self) -> bool:
        return self.theta_matrix.is_holomorphic()

    def residue(self) -> ConstMatrix:
        if not self.is_logarithmic():
            raise ValueError("residue is only defined for a logarithmic matrix")
        return self.theta_matrix.const_term()

    def to_json(self):
        return {"L": self.theta_matrix.to_json(), "base": self.base.to_json()}


def _all_zero(M: SeriesMatrix) -> bool:
    return all(a.is_zero() for r in M.rows for a in r)


def _germ(A) -> ConnectionGerm:
    return A if isinstance(A, ConnectionGerm) else ConnectionGerm.from_matrix(A)


def gauge_matrix(L: SeriesMatrix, P: SeriesMatrix, Pinv: SeriesMatrix | None = None) -> SeriesMatrix:
    """P^{-1} L P - P^{-1} theta(P)."""
    if Pinv is None:
        Pinv = P.inv()
    return Pinv @ (L @ P - P.theta())


def gauge_transform(A, P) -> ConnectionGerm:
    """Matrix of the connection in the basis (e) P."""
    A = _germ(A)
    if isinstance(P, ConstMatrix):
        P = SeriesMatrix.from_const(P)
    elif not isinstance(P, SeriesMatrix):
        P = SeriesMatrix(P)
    d = P.det()
    if d.is_exact_zero():
        raise NonUnit("gauge matrix is singular")
    return ConnectionGerm(gauge_matrix(A.theta_matrix, P), Lattice(A.base.basis @ P))


@dataclass(frozen=True)
class LogTest:
    logarithmic: bool
    witness: SeriesMatrix
    gauge: SeriesMatrix

    def __bool__(self):
        return self.logarithmic

    def to_json(self):
        return {"logarithmic": self.logarithmic, "witness": self.witness.to_json()}


def is_logarithmic_lattice(A, M) -> LogTest:
    """Transform A to a basis of M and test for a simple pole."""
    A = _germ(A)
    M = _as_lattice(M)
    P = A.base.gauge_to(M)
    W = gauge_matrix(A.theta_matrix, P)
    return LogTest(W.is_holomorphic(), W, P)


def adjacent_log_subspace_test(A, W: ConstMatrix) -> bool:
    """Residue-stability of W inside lam/m lam."""
    R = _germ(A).residue()
    if W.ncols == 0:
        return True
    return is_invariant(R, W)


def adjacent_lattice(base, W: ConstMatrix) -> Lattice:
    """The lattice M with m lam < M < lam and M / m lam = W."""
    base = _as_lattice(base)
    n = base.n
    C = flag_respecting_basis([W] if W.ncols else [], n) if W.ncols else ConstMatrix.identity(n)
    k = subspace_dim(W) if W.ncols else 0
    T = [0] * k + [1] * (n - k)
    return Lattice((base.basis @ SeriesMatrix.from_const(C)).scale_cols_by_power(T))


# ---------------------------------------------------------------------------
# Birkhoff forms
# ---------------------------------------------------------------------------


def solve_sylvester(U: ConstMatrix, V: ConstMatrix, Qk: ConstMatrix) -> ConstMatrix:
    """X with X U - V X = Qk, solved as an n^2 x n^2 linear system."""
    n = U.nrows
    N = n * n
    rows = []
    for i in range(n):
        for j in range(n):
            # (XU - VX)_{ij} = sum_k X_ik U_kj - sum_k V_ik X_kj
            row = [0] * N
            for k in range(n):
                row[i * n + k] = row[i * n + k] + U[k, j]
                row[k * n + j] = row[k * n + j] - V[i, k]
            rows.append(row)
    Mx = ConstMatrix(rows, N)
    b = ConstMatrix([[Qk[i, j]] for i in range(n) for j in range(n)], 1)
    if Mx.rank() < N:
        raise ResonantResidue(
            "Sylvester system is singular: residue eigenvalues differ by an integer",
        )
    x = Mx.solve(b)
    return ConstMatrix([[x[i * n + j, 0] for j in range(n)] for i in range(n)])


def birkhoff_gauge(A, N: int | None = None) -> SeriesMatrix:
    """P = I + P_1 z + ... + P_{N-1} z^{N-1} with A_[P] = A_0 modulo z^N."""
    A = _germ(A)
    L = A.theta_matrix
    if not A.is_logarithmic():
        raise ValueError("birkhoff_gauge needs a logarithmic matrix")
    N = working_precision() if N is None else int(N)
    if L.prec is not None and L.prec < N:
        raise PrecisionExhausted(f"matrix known modulo z^{L.prec}, need {N}", location="A")
    n = A.n
    coeffs = [L.coeff(k) for k in range(N)]
    A0 = coeffs[0]
    Id = ConstMatrix.identity(n)
    P = [Id]
    for k in range(1, N):
        Qk = ConstMatrix.zeros(n)
        for i in range(1, k + 1):
            if not coeffs[i].is_zero():
                Qk = Qk + coeffs[i] @ P[k - i]
        if Qk.is_zero():
            # still need the system to be regular for uniqueness
            _check_nonresonant(A0, k)
            P.append(ConstMatrix.zeros(n))
            continue
        P.append(solve_sylvester(A0, A0 - Id.scale(k), Qk))
    return SeriesMatrix.from_coeffs(P, 0, N)


def _check_nonresonant(A0: ConstMatrix, k: int) -> None:
    n = A0.nrows
    solve_sylvester(A0, A0 - ConstMatrix.identity(n).scale(k), ConstMatrix.zeros(n))


def birkhoff_coordinate_change(A0, u, N: int | None = None) -> SeriesMatrix:
    """Gauge taking A0 u dt/t to A0 dt/t; coefficients are polynomials in A0."""
    A0 = A0 if isinstance(A0, ConstMatrix) else ConstMatrix(A0)
    u = u if isinstance(u, LaurentSeries) else LaurentSeries.const(u)
    N = working_precision() if N is None else int(N)
    if u.coeff(0) != 1 or u.low < 0:
        raise ValueError("u must be a unit with constant term 1")
    if u.prec is not None and u.prec < N:
        raise PrecisionExhausted(f"u known modulo t^{u.prec}, need {N}", location="u")
    n = A0.nrows
    us = [u.coeff(i) for i in range(N)]
    P = [ConstMatrix.identity(n)]
    for k in range(1, N):
        acc = ConstMatrix.zeros(n)
        for i in range(1, k + 1):
            if us[i]:
                acc = acc + (A0 @ P[k - i]).scale(us[i])
        P.append(acc.scale(gauss(1) / k))
    return SeriesMatrix.from_coeffs(P, 0, N)


def is_deligne_normalized(A) -> bool:
    """Residue eigenvalues have real part in [0, 1)."""
    R = _germ(A).residue() if not isinstance(A, ConstMatrix) else A
    ed = eigen_data(R)
    return all(0 <= lam.real_fraction() < 1 for lam, _ in ed.eigenvalues)


# ---------------------------------------------------------------------------
# stable flags and logarithmic lattices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StableFlagSpec:
    """Flag in the residue fibre plus an adapted sequence kappa."""

    flag: tuple
    kappa: tuple

    def pair(self) -> AdmissiblePair:
        return AdmissiblePair(tuple(self.flag), tuple(self.kappa))


def unstable_component(f: ConstMatrix, flag):
    """Index of the first component not invariant under f, or None."""
    for i, F in enumerate(flag):
        if F.ncols and not is_invariant(f, F):
            return i
    return None


class StableFlagTools:
    """Stability predicate and Jordan-basis samples of f-stable flags."""

    def __init__(self, f):
        self.f = f if isinstance(f, ConstMatrix) else ConstMatrix(f)
        self.eigen = eigen_data(self.f)

    def is_stable(self, flag) -> bool:
        return unstable_component(self.f, flag) is None

    def _closed_subsets(self):
        lens = [len(ch) for _, ch in self.eigen.chains]
        return list(itertools.product(*[range(L + 1) for L in lens]))

    def jordan_samples(self, signature=None):
        """Flags spanned by prefixes of Jordan chains, filtered by signature."""
        n = self.f.nrows
        chains = [ch for _, ch in self.eigen.chains]
        if signature is None:
            signature = (1,) * n
        dims = list(itertools.accumulate(signature))
        if dims[-1] != n:
            raise ValueError("signature must sum to n")
        subsets = self._closed_subsets()
        by_size = {}
        for s in subsets:
            by_size.setdefault(sum(s), []).append(s)
        out = []

        def extend(prefix, j):
            if j == len(dims):
                out.append(prefix)
                return
            for s in by_size.get(dims[j], []):
                if prefix and any(a < b for a, b in zip(s, prefix[-1])):
                    continue
                extend(prefix + [s], j + 1)

        extend([], 0)
        flags = []
        for seq in out:
            flag = []
            for s in seq:
                vecs = [v for ch, m in zip(chains, s) for v in ch[:m]]
                flag.append(span(vecs, n))
            flags.append(tuple(flag))
        return flags


def stable_flag_tools(f) -> StableFlagTools:
    return StableFlagTools(f)


def log_lattice_from_flag(A, spec, Y: Form | None = None) -> Lattice:
    """Logarithmic lattice attached to a residue-stable flag and a sequence kappa.

    The base lattice of A is taken as the Deligne lattice; the flag lives in
    its fibre with coordinates w.r.t. the basis of Y (default: A's basis).
    """
    A = _germ(A)
    if isinstance(spec, StableFlagSpec):
        pair = spec.pair()
    elif isinstance(spec, AdmissiblePair):
        pair = spec
    else:
        pair = AdmissiblePair(tuple(spec[0]), tuple(spec[1]))
    n = A.n
    if Y is None:
        Y = Form(A.base.basis)
    G = A.base.gauge_to(Y.lattice)
    if not G.in_GL_h():
        raise ValueError("Y must be a form of the base lattice")
    AY = gauge_transform(A, G)
    R = AY.residue()
    bad = unstable_component(R, pair.flag)
    if bad is not None:
        raise FlagNotStable(
            "flag component is not stable under the residue", location=f"component {bad}"
        )
    C = flag_respecting_basis(pair.flag, n)
    Ae = gauge_transform(AY, C)
    d = pair.delta
    if d == 0:
        return Lattice((Ae.base.basis).scale_cols_by_power(pair.kappa))
    P = birkhoff_gauge(Ae, max(d, 1))
    Pbar = P.polynomial_part(d)
    Q = Pbar.scale_cols_by_power(pair.kappa)
    return Lattice(Ae.base.basis @ Q)
