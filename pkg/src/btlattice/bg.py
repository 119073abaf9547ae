"""Birkhoff-Grothendieck trivialisations on the projective line.

Working model: a bundle equals the standard trivial bundle away from one
point x, where its stalk is a lattice lam in K^n, z a local coordinate at x.
Sections away from x are vectors with entries in C[1/z].  A lattice
B z^K h^n with B a monopole (entries in C[1/z], constant nonzero determinant)
gives the bundle O(-K_1) + ... + O(-K_n); its type is -K sorted decreasingly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    DeterminantMismatch,
    NonUnit,
    NotFactorable,
    NotTrivialising,
    PrecisionExhausted,
    SignatureMismatch,
)
from .lattice import Lattice, lattice_sum, smith_decomposition, _as_lattice
from .scalar_series import (
    ONE,
    ZERO,
    ConstMatrix,
    LaurentSeries,
    SeriesMatrix,
    gauss,
    subspace_dim,
    subspace_intersection,
)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeVector:
    """Nonincreasing sequence a_1 >= ... >= a_n of line-bundle degrees."""

    values: tuple

    def __post_init__(self):
        vals = tuple(int(a) for a in self.values)
        object.__setattr__(self, "values", tuple(sorted(vals, reverse=True)))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def degree(self) -> int:
        return sum(self.values)

    @property
    def triviality_index(self) -> int:
        return sum(self.values[0] - a for a in self.values)

    @property
    def multiplicities(self):
        out = []
        for a in self.values:
            if out and out[-1][0] == a:
                out[-1][1] += 1
            else:
                out.append([a, 1])
        return [tuple(x) for x in out]

    def to_json(self):
        return list(self.values)

    def __iter__(self):
        return iter(self.values)


def _type(x) -> TypeVector:
    return x if isinstance(x, TypeVector) else TypeVector(tuple(x))


def gs_modify_type(a, hn_flag, W: ConstMatrix) -> TypeVector:
    """Type after the adjacent modification with fibre subspace W.

    ``hn_flag`` is the Harder-Narasimhan flag F_1 < ... < F_s of the fibre,
    with dim F_j - dim F_{j-1} equal to the multiplicity of the j-th largest
    value of ``a``.
    """
    a = _type(a)
    mult = a.multiplicities
    dims = [subspace_dim(F) for F in hn_flag]
    cum = list(itertools.accumulate(m for _, m in mult))
    if dims != cum:
        raise SignatureMismatch(
            "flag dimensions do not match the multiplicities of the type",
            location=f"dims={dims}, expected={cum}",
        )
    out = []
    prev = 0
    for (val, nj), F in zip(mult, hn_flag):
        cur = subspace_dim(subspace_intersection(F, W)) if W.ncols else 0
        mj = cur - prev
        prev = cur
        out.extend([val] * mj + [val - 1] * (nj - mj))
    return TypeVector(tuple(out))


def hn_flag_of(K) -> list:
    """Coordinate HN flag for a basis whose exponents K are nondecreasing."""
    n = len(K)
    flag = []
    for k in sorted(set(K)):
        cols = [tuple(ONE if r == i else ZERO for r in range(n)) for i in range(n) if K[i] <= k]
        flag.append(ConstMatrix.from_cols(cols, nrows=n))
    return flag


# ---------------------------------------------------------------------------
# Bruhat decomposition of a constant matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BruhatDecomposition:
    """U0 = Q @ P_w @ R with Q, R upper triangular and P_w e_j = e_{w[j]}."""

    Q: ConstMatrix
    w: tuple
    R: ConstMatrix

    @property
    def Pw(self) -> ConstMatrix:
        return ConstMatrix.permutation(self.w)


def bruhat_decomposition(U0: ConstMatrix) -> BruhatDecomposition:
    """Bruhat cell of an invertible constant matrix (lowest-row pivots, left to right)."""
    n = U0.nrows
    A = [list(r) for r in U0.rows]
    Q = [list(r) for r in ConstMatrix.identity(n).rows]
    R = [list(r) for r in ConstMatrix.identity(n).rows]
    used = set()
    w = [None] * n
    for j in range(n):
        i = next((r for r in range(n - 1, -1, -1) if r not in used and A[r][j]), None)
        if i is None:
            raise NonUnit("singular matrix has no Bruhat cell", location=f"column {j}")
        used.add(i)
        p = A[i][j]
        # rows above: row_k -= c row_i  (Q col i += c col k)
        for k in range(i):
            c = A[k][j]
            if not c:
                continue
            c = c / p
            A[k] = [x - c * y for x, y in zip(A[k], A[i])]
            for row in Q:
                row[i] = row[i] + c * row[k]
        # columns right: col_l -= c col_j  (R row j += c row l)
        for l in range(j + 1, n):
            c = A[i][l]
            if not c:
                continue
            c = c / p
            for row in A:
                row[l] = row[l] - c * row[j]
            R[j] = [x + c * y for x, y in zip(R[j], R[l])]
        # scale: A col j /= p, R row j *= p
        for row in A:
            row[j] = row[j] / p
        R[j] = [x * p for x in R[j]]
        w[j] = i
    Qm = ConstMatrix(Q)
    Rm = ConstMatrix(R)
    return BruhatDecomposition(Qm, tuple(w), Rm)


# ---------------------------------------------------------------------------
# BG trivialisation by walking the geodesic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BGStep:
    w: tuple
    twist: tuple
    splitting: tuple
    K_before: tuple
    K_after: tuple
    gs_type: tuple

    def to_json(self):
        return {
            "w": list(self.w),
            "twist": list(self.twist),
            "splitting": list(self.splitting),
            "K_before": list(self.K_before),
            "K_after": list(self.K_after),
        }


@dataclass(frozen=True)
class BGTrivialisation:
    """lam = monopole @ z^K h^n; the type is -K sorted."""

    monopole: SeriesMatrix
    K: tuple  # nondecreasing exponents, already including the shift
    type: TypeVector
    shift: int
    steps: tuple = field(default=())

    @property
    def trivial_lattice(self) -> Lattice:
        return Lattice(self.monopole)

    @property
    def global_form(self):
        from .building import Form

        return Form(self.monopole)

    @property
    def bg_basis(self) -> SeriesMatrix:
        return self.monopole.scale_cols_by_power(self.K)

    def to_json(self):
        return {
            "type": self.type.to_json(),
            "K": list(self.K),
            "shift": self.shift,
            "monopole": self.monopole.to_json(),
            "bg_basis": self.bg_basis.to_json(),
            "steps": [s.to_json() for s in self.steps],
        }


def _monopole_inverse(B: SeriesMatrix) -> SeriesMatrix:
    d = B.det()
    return B.adjugate() * d.inv()


def _sort_perm(K):
    return sorted(range(len(K)), key=lambda i: (K[i], i))


def bg_trivialise(lam, trivial=None, verify: bool = True) -> BGTrivialisation:
    """Birkhoff-Grothendieck trivialisation of lam starting from a trivial lattice.

    ``trivial`` is a monopole whose columns span the global form of the
    starting trivialising lattice (identity by default).
    """
    lam = _as_lattice(lam)
    n = lam.n
    B = SeriesMatrix.identity(n) if trivial is None else trivial
    if not isinstance(B, SeriesMatrix):
        B = SeriesMatrix(B)
    if not B.is_monopole():
        raise NotTrivialising("starting basis is not a monopole", location="trivial")
    K = [0] * n
    sd0 = smith_decomposition(Lattice(B), lam)
    v = sd0.v
    target = lam.scaled(-v)
    steps = []
    while True:
        y = B.scale_cols_by_power(K)
        sd = smith_decomposition(Lattice(y), target)
        Tp = sd.kappa
        if Tp[0] != 0:
            raise NotTrivialising("geodesic left the normalised interval", location=f"T'={Tp}")
        if Tp[-1] == 0:
            break
        T1 = tuple(min(t, 1) for t in Tp)
        U0 = sd.gauge.const_term()
        br = bruhat_decomposition(U0)
        winv = [0] * n
        for j, i in enumerate(br.w):
            winv[i] = j
        twist = tuple(T1[winv[i]] for i in range(n))
        # B z^K Q z^{-K} is again a monopole because Q is upper triangular and K sorted
        Bt = B @ SeriesMatrix.from_const(br.Q).conj_power([-k for k in K])
        Kt = [k + t for k, t in zip(K, twist)]
        gs = None
        if verify:
            W = ConstMatrix.from_cols([U0.col(i) for i in range(n) if T1[i] == 0], nrows=n)
            gs = gs_modify_type([-k for k in K], hn_flag_of(K), W)
        perm = _sort_perm(Kt)
        Bt = Bt.permute_cols(perm)
        Kt = [Kt[p] for p in perm]
        if verify:
            expected = lattice_sum(target, Lattice(y).scaled(1))
            if not Lattice(Bt.scale_cols_by_power(Kt)).equals(expected):
                raise NotTrivialising("step does not land on the next geodesic vertex")
            if TypeVector(tuple(-k for k in Kt)) != gs:
                raise NotTrivialising("step type disagrees with the modification rule")
            if not Bt.is_monopole():
                raise NotTrivialising("updated basis is not a monopole")
        steps.append(BGStep(br.w, twist, T1, tuple(K), tuple(Kt), tuple(gs) if gs else ()))
        B, K = Bt, Kt
    Kf = tuple(k + v for k in K)
    final = B.scale_cols_by_power(Kf)
    check = final.inv() @ lam.basis
    if not check.in_GL_h():
        raise NotTrivialising("final basis does not span the input lattice")
    return BGTrivialisation(B, Kf, TypeVector(tuple(-k for k in Kf)), v, tuple(steps))


def bundle_type(lam, trivial=None) -> TypeVector:
    return bg_trivialise(lam, trivial).type


def k_staged_parabolic_member(P, kappa) -> bool:
    """P in GL_n(h) polynomial with deg P_ij <= k_i - k_j (and constant determinant)."""
    if not isinstance(P, SeriesMatrix):
        P = SeriesMatrix(P)
    if not P.is_exact:
        return False
    n = P.nrows
    for i in range(n):
        for j in range(n):
            a = P[i, j]
            if a.is_zero():
                continue
            if a.low < 0 or a.degree() > kappa[i] - kappa[j]:
                return False
    d = P.det()
    return (not d.is_zero()) and d.low == 0 and d.degree() == 0


# ---------------------------------------------------------------------------
# Birkhoff factorisation oracle (row reduction over C[1/z])
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BirkhoffFactorisation:
    """G = G_minus @ z^kappa @ G_plus, G_minus unimodular over C[1/z], G_plus in GL_n(h)."""

    G_minus: SeriesMatrix
    kappa: tuple
    G_plus: SeriesMatrix

    @property
    def type(self) -> TypeVector:
        return TypeVector(tuple(-k for k in self.kappa))

    def to_json(self):
        return {
            "kappa": list(self.kappa),
            "type": self.type.to_json(),
            "G_minus": self.G_minus.to_json(),
            "G_plus": self.G_plus.to_json(),
        }


def birkhoff_factor_oracle(G, max_steps: int = 10_000) -> BirkhoffFactorisation:
    """Birkhoff factorisation of a Laurent-polynomial matrix by leading-row reduction."""
    if not isinstance(G, SeriesMatrix):
        G = SeriesMatrix(G)
    if not G.is_exact:
        raise NotFactorable("oracle needs Laurent polynomial entries")
    n = G.nrows
    det = G.det()
    if det.is_zero() or len(det.terms()) != 1:
        raise NotFactorable("determinant is not a unit times a power of z")
    dv = det.valuation()
    rows = [list(r) for r in G.rows]
    Einv = [list(r) for r in SeriesMatrix.identity(n).rows]  # G = Einv @ current
    for _ in range(max_steps):
        vals = []
        for r in rows:
            vs = [a.valuation() for a in r if not a.is_zero()]
            if not vs:
                raise NotFactorable("zero row")
            vals.append(min(vs))
        L = ConstMatrix([[a.coeff(v) for a in r] for r, v in zip(rows, vals)])
        if sum(vals) > dv:
            raise NotFactorable("row valuations exceed the determinant valuation")
        dep = L.T.nullspace()
        if dep.ncols == 0:
            break
        c = dep.col(0)
        i0 = min((i for i in range(n) if c[i]), key=lambda i: (vals[i], i))
        new = [LaurentSeries.zero() for _ in range(n)]
        for i in range(n):
            if not c[i]:
                continue
            f = LaurentSeries.monomial(vals[i0] - vals[i], c[i] / c[i0])
            new = [x + f * y for x, y in zip(new, rows[i])]
            if i != i0:
                # G = Einv @ E^{-1} @ (E @ cur): column ops on Einv
                for row in Einv:
                    row[i] = row[i] - row[i0] * f
        rows[i0] = new
    else:
        raise NotFactorable("row reduction did not terminate")
    perm = _sort_perm(vals)
    kappa = tuple(vals[p] for p in perm)
    H = SeriesMatrix._make(tuple(tuple(a.shift(-v) for a in r) for r, v in zip(rows, vals)))
    Gm = SeriesMatrix._make(tuple(tuple(r) for r in Einv)).permute_cols(perm)
    Gp = H.permute_rows(perm)
    return BirkhoffFactorisation(Gm, kappa, Gp)


# ---------------------------------------------------------------------------
# permutation lemma
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PermutationLemmaResult:
    """Pi = t^{-kappa} P^{-1} t^{kappa_sigma} P_tilde and t^kappa Pi = Q t^kappa."""

    sigma: tuple
    Pi: SeriesMatrix
    Q: SeriesMatrix
    P_tilde: SeriesMatrix
    kappa: tuple

    def kappa_sigma(self):
        return tuple(self.kappa[s] for s in self.sigma)

    def to_json(self):
        return {
            "sigma": list(self.sigma),
            "kappa": list(self.kappa),
            "Pi": self.Pi.to_json(),
            "Q": self.Q.to_json(),
            "P_tilde": self.P_tilde.to_json(),
        }


def _greedy_rows(C: ConstMatrix):
    """Row order x with all leading principal minors of C[x, :] nonzero."""
    n = C.nrows
    chosen = []
    for k in range(n):
        for r in range(n):
            if r in chosen:
                continue
            sub = C.submatrix(chosen + [r], range(k + 1))
            if sub.det():
                chosen.append(r)
                break
        else:
            raise NonUnit("constant term is singular")
    return chosen


def permutation_lemma(P, kappa, verify: bool = True) -> PermutationLemmaResult:
    """Constructive permutation lemma for a lattice gauge P and integers kappa."""
    if not isinstance(P, SeriesMatrix):
        P = SeriesMatrix(P)
    kappa = tuple(int(k) for k in kappa)
    n = P.nrows
    if not P.in_GL_h():
        raise NonUnit("P is not a lattice gauge")
    # S e_j = e_{s(j)} sorts kappa into decreasing K
    s = sorted(range(n), key=lambda i: (-kappa[i], i))
    K = [kappa[s[j]] - min(kappa) for j in range(n)]
    m = K[0] if n else 0
    if P.prec is not None and P.prec < m + 1:
        raise PrecisionExhausted(
            f"gauge known modulo t^{P.prec}, need at least {m + 1}", location=f"delta={m}"
        )
    PS = P.permute_cols(s)
    x = _greedy_rows(PS.const_term())
    H = PS.permute_rows(x)  # H = X^{-1} P S with X e_j = e_{x(j)}
    Hi = H
    Hbar = SeriesMatrix.identity(n)
    for i in range(1, m + 1):
        b = sum(1 for k in K if k >= i)
        H0 = Hi.const_term()
        A0 = H0.submatrix(range(b), range(b))
        B0 = H0.submatrix(range(b), range(b, n))
        Pt = -(A0.inv() @ B0) if b < n else None
        rows = []
        for r in range(n):
            row = []
            for c in range(n):
                if r < b:
                    if c < b:
                        row.append(LaurentSeries.monomial(1) if r == c else LaurentSeries.zero())
                    else:
                        row.append(LaurentSeries.const(Pt[r, c - b]))
                else:
                    row.append(LaurentSeries.const(1) if r == c else LaurentSeries.zero())
            rows.append(tuple(row))
        Hbar_i = SeriesMatrix._make(tuple(rows))
        Hbar = Hbar @ Hbar_i
        Ti = [1 if r < b else 0 for r in range(n)]
        Hi = (Hi @ Hbar_i).scale_rows_by_power(Ti, sign=-1)
    negK = [-k for k in K]
    Pi_H = Hbar.scale_rows_by_power(negK)
    Q_H = Hbar.scale_cols_by_power(negK)
    sinv = [0] * n
    for j, i in enumerate(s):
        sinv[i] = j
    # conjugation by S: (S A S^{-1})_{s(a), s(b)} = A_{a, b}
    Pi = Pi_H.permute_rows(sinv).permute_cols(sinv)
    Q = Q_H.permute_rows(sinv).permute_cols(sinv)
    # P_tilde = X H_{m+1} S^{-1}
    xinv = [0] * n
    for j, i in enumerate(x):
        xinv[i] = j
    P_tilde = Hi.permute_rows(xinv).permute_cols(sinv)
    sigma = tuple(s[xinv[i]] for i in range(n))
    res = PermutationLemmaResult(sigma, Pi, Q, P_tilde, kappa)
    if verify:
        check_permutation_lemma(P, res)
    return res


def check_permutation_lemma(P: SeriesMatrix, res: PermutationLemmaResult) -> None:
    """Raise unless both identities and the valuation/degree box hold."""
    kappa = res.kappa
    n = len(kappa)
    Pi, Q = res.Pi, res.Q
    if not Pi.is_monopole():
        raise NotFactorable("Pi is not unimodular over C[1/t]")
    if not Q.in_GL_h():
        raise NotFactorable("Q is not a lattice gauge")
    if not res.P_tilde.in_GL_h():
        raise NotFactorable("P_tilde is not a lattice gauge")
    ks = res.kappa_sigma()
    lhs = P.inv().scale_rows_by_power(kappa, sign=-1).scale_cols_by_power(ks) @ res.P_tilde
    if lhs.compare(Pi) == "unequal":
        raise NotFactorable("first identity fails")
    left = Pi.scale_rows_by_power(kappa)
    right = Q.scale_cols_by_power(kappa)
    if not left.equals(right):
        raise NotFactorable("second identity fails")
    for i in range(n):
        for j in range(n):
            a = Pi[i, j]
            if a.is_zero():
                continue
            if not (kappa[j] - kappa[i] <= a.valuation() <= a.degree() <= 0):
                raise NotFactorable("degree box violated", location=f"entry ({i},{j})")


# ---------------------------------------------------------------------------
# monopole interpolation
# ---------------------------------------------------------------------------


def _word(n):
    """Fixed transvection word (target row, source row) for n x n reduction."""
    w = []
    for j in range(n):
        for r in range(j + 1, n):
            w.append((j, r))  # pivot repair
        for r in range(j + 1, n):
            w.append((r, j))  # elimination below
    for j in range(n - 1):
        a, b = j, j + 1
        w.extend([(a, b), (b, a), (a, b), (a, b), (b, a), (a, b)])
    for j in range(n - 1, 0, -1):
        for r in range(j):
            w.append((r, j))
    return w


def transvection_parameters(A: ConstMatrix):
    """Parameters p_k with A = prod_k (I + p_k E_{word_k}) for an SL_n matrix A."""
    n = A.nrows
    M = [list(r) for r in A.rows]
    ops = []  # row ops applied to M: row_a += p * row_b

    def apply(a, b, p):
        p = gauss(p)
        if p:
            M[a] = [x + p * y for x, y in zip(M[a], M[b])]
        ops.append(p)

    for j in range(n):
        fixed = bool(M[j][j])
        for r in range(j + 1, n):
            if not fixed and M[r][j]:
                apply(j, r, 1)
                fixed = True
            else:
                apply(j, r, 0)
        if not M[j][j]:
            raise NonUnit("matrix is singular")
        for r in range(j + 1, n):
            apply(r, j, -M[r][j] / M[j][j])
    for j in range(n - 1):
        a = M[j][j].inverse()
        # diag(a, 1/a) on rows j, j+1 as six transvections, rightmost first
        for (t, s_), p in zip(
            [(j, j + 1), (j + 1, j), (j, j + 1), (j, j + 1), (j + 1, j), (j, j + 1)],
            [-1, 1, -1, a, -a.inverse(), a],
        ):
            apply(t, s_, p)
    for j in range(n - 1, 0, -1):
        for r in range(j):
            apply(r, j, -M[r][j])
    if not ConstMatrix(M).is_identity():
        raise NotFactorable("transvection reduction failed")
    # ops_N ... ops_1 A = I  =>  A = ops_1^{-1} ... ops_N^{-1}
    return [-p for p in ops]


def _transvection(n, a, b, p: LaurentSeries) -> SeriesMatrix:
    rows = []
    for r in range(n):
        row = []
        for c in range(n):
            if r == c:
                row.append(LaurentSeries.const(1))
            elif r == a and c == b:
                row.append(p)
            else:
                row.append(LaurentSeries.zero())
        rows.append(tuple(row))
    return SeriesMatrix._make(tuple(rows))


def lagrange(points, values) -> LaurentSeries:
    """Polynomial of degree < len(points) through (points[i], values[i])."""
    pts = [gauss(p) for p in points]
    out = LaurentSeries.zero()
    z = LaurentSeries.monomial(1)
    for i, (xi, yi) in enumerate(zip(pts, values)):
        yi = gauss(yi)
        if not yi:
            continue
        term = LaurentSeries.const(yi)
        for j, xj in enumerate(pts):
            if j != i:
                term = term * (z - xj) * (xi - xj).inverse()
        out = out + term
    return out


def interpolate_monopole(points, C) -> SeriesMatrix:
    """Polynomial Pi with constant determinant and Pi(s_i) = C_i."""
    pts = [gauss(p) for p in points]
    if len(set(pts)) != len(pts):
        raise ValueError("interpolation points must be distinct")
    if len(pts) != len(C) or not pts:
        raise ValueError("need one matrix per point")
    C = [c if isinstance(c, ConstMatrix) else ConstMatrix(c) for c in C]
    dets = [c.det() for c in C]
    if not dets[0] or any(d != dets[0] for d in dets):
        raise DeterminantMismatch(
            "matrices must share one nonzero determinant",
            location="C",
            dets=[str(d) for d in dets],
        )
    n = C[0].nrows
    delta = dets[0]
    Dinv = ConstMatrix.diag([delta.inverse()] + [1] * (n - 1))
    params = [transvection_parameters(c @ Dinv) for c in C]
    word = _word(n)
    Pi = SeriesMatrix.identity(n)
    for k, (a, b) in enumerate(word):
        p = lagrange(pts, [ps[k] for ps in params])
        if p.is_zero():
            continue
        Pi = Pi @ _transvection(n, a, b, p)
    Pi = Pi @ SeriesMatrix.from_const(ConstMatrix.diag([delta] + [1] * (n - 1)))
    for s, c in zip(pts, C):
        if Pi.evaluate(s) != c:
            raise NotFactorable("interpolated product misses a prescribed value")
    return Pi
