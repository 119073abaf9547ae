"""Fuchsian systems on the projective line with the apparent point at infinity.

A system is Omega = sum_a R_a / (z - a) dz in a global frame (e); the
gauge rule is Omega -> G^{-1} Omega G - G^{-1} dG.  With t = 1/z the
theta_t-matrix at infinity is -sum_k (sum_a a^k R_a) t^k and the residue there
is B = -sum_a R_a.  In read-off form B = diag(b) with b integer and
nondecreasing; the lattice span(t^{b_i} e_i) is then the (holomorphic)
Deligne lattice at infinity and the type of the bundle is -b.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .bg import TypeVector, bg_trivialise, gs_modify_type, hn_flag_of, permutation_lemma
from .building import flag_respecting_basis
from .connection import ConnectionGerm, birkhoff_gauge, gauge_matrix, stable_flag_tools
from .errors import (
    BudgetExceeded,
    CertificateInconsistent,
    CharPolyDoesNotSplit,
    NotDiagonalizable,
    NotFound,
    NotLogarithmicAtInfinity,
    NotTrivialising,
    SubspaceNotStable,
)
from .lattice import Lattice
from .scalar_series import (
    ONE,
    ZERO,
    ConstMatrix,
    GaussianRational,
    LaurentSeries,
    SeriesMatrix,
    eigen_data,
    gauss,
    is_invariant,
    subspace_dim,
    subspace_equal,
    subspace_intersection,
    working_precision,
)

Z = LaurentSeries.monomial(1)


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FuchsianSystem:
    poles: tuple
    residues: tuple

    def __post_init__(self):
        poles = tuple(gauss(a) for a in self.poles)
        res = tuple(r if isinstance(r, ConstMatrix) else ConstMatrix(r) for r in self.residues)
        if len(set(poles)) != len(poles):
            raise ValueError("poles must be distinct")
        if len(poles) != len(res):
            raise ValueError("one residue per pole")
        if res and any(r.shape != res[0].shape or r.nrows != r.ncols for r in res):
            raise ValueError("residues must be square of equal size")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", res)

    @property
    def n(self) -> int:
        return self.residues[0].nrows

    @property
    def p(self) -> int:
        return len(self.poles)

    def residue_at_infinity(self) -> ConstMatrix:
        acc = ConstMatrix.zeros(self.n)
        for R in self.residues:
            acc = acc + R
        return -acc

    def moment(self, k: int) -> ConstMatrix:
        """Omega_k = sum_a a^k R_a."""
        acc = ConstMatrix.zeros(self.n)
        for a, R in zip(self.poles, self.residues):
            acc = acc + R.scale(a**k)
        return acc

    def theta_matrix_at_infinity(self, N: int | None = None) -> SeriesMatrix:
        N = working_precision() if N is None else N
        return SeriesMatrix.from_coeffs([-self.moment(k) for k in range(N)], 0, N)

    def local_theta_matrix(self, i: int, N: int | None = None) -> SeriesMatrix:
        """theta_u-matrix in u = z - s_i: R_s - sum_{a != s} R_a sum_{k>=1} (u/(a-s))^k."""
        N = working_precision() if N is None else N
        s = self.poles[i]
        coeffs = [self.residues[i]] + [ConstMatrix.zeros(self.n) for _ in range(N - 1)]
        for a, R in zip(self.poles, self.residues):
            if a == s:
                continue
            inv = (a - s).inverse()
            for k in range(1, N):
                coeffs[k] = coeffs[k] - R.scale(inv**k)
        return SeriesMatrix.from_coeffs(coeffs, 0, N)

    def b(self):
        B = self.residue_at_infinity()
        return [int(B[i, i]) for i in range(self.n)]

    def is_read_off(self) -> bool:
        B = self.residue_at_infinity()
        if not B.is_diagonal():
            return False
        d = [B[i, i] for i in range(self.n)]
        if not all(x.is_integer() for x in d):
            return False
        vals = [int(x) for x in d]
        return vals == sorted(vals)

    def is_apparent_at_infinity(self) -> bool:
        """In read-off form: t^{b} e spans a lattice on which the connection is regular."""
        if not self.is_read_off():
            return False
        b = self.b()
        d = max(b) - min(b)
        L = self.theta_matrix_at_infinity(d + 2)
        H = gauge_matrix(L, SeriesMatrix.z_power(b), SeriesMatrix.z_power([-x for x in b]))
        return H.is_holomorphic() and H.const_term().is_zero()

    def charpolys(self):
        return tuple(tuple(R.charpoly()) for R in self.residues)

    def conjugate(self, C: ConstMatrix) -> "FuchsianSystem":
        Ci = C.inv()
        return FuchsianSystem(self.poles, tuple(Ci @ R @ C for R in self.residues))

    def pole_index(self, pole) -> int:
        if isinstance(pole, int) and not isinstance(pole, bool):
            if not 0 <= pole < self.p:
                raise ValueError(f"pole index {pole} out of range")
            return pole
        a = gauss(pole)
        if a not in self.poles:
            raise ValueError(f"{a} is not a pole")
        return self.poles.index(a)

    def to_json(self):
        return {
            "dim": self.n,
            "poles": [a.to_json() for a in self.poles],
            "residues": [R.to_json() for R in self.residues],
        }

    @classmethod
    def from_json(cls, obj) -> "FuchsianSystem":
        sys = cls(
            tuple(GaussianRational.from_json(a) for a in obj["poles"]),
            tuple(ConstMatrix.from_json(R) for R in obj["residues"]),
        )
        if "dim" in obj and obj["dim"] != sys.n:
            raise ValueError("dim does not match the residues")
        return sys


@dataclass(frozen=True)
class LinearFuchsianModel:
    """Residue maps psi_s at the poles and psi_x = -sum psi_s at the apparent point."""

    n: int
    maps: tuple
    psi_x: ConstMatrix

    @classmethod
    def from_system(cls, sys: FuchsianSystem) -> "LinearFuchsianModel":
        return cls(sys.n, sys.residues, sys.residue_at_infinity())

    def total(self) -> ConstMatrix:
        acc = self.psi_x
        for R in self.maps:
            acc = acc + R
        return acc

    def is_balanced(self) -> bool:
        return self.total().is_zero()


# ---------------------------------------------------------------------------
# read-off
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeAndHN:
    type: TypeVector
    hn_flag: tuple
    conjugation: ConstMatrix
    system: FuchsianSystem

    def to_json(self):
        return {
            "type": self.type.to_json(),
            "hn_flag": [F.to_json() for F in self.hn_flag],
            "conjugation": self.conjugation.to_json(),
            "system": self.system.to_json(),
        }


def type_and_hn(sys: FuchsianSystem) -> TypeAndHN:
    """Type and HN flag from the residue at infinity, conjugating to read-off form."""
    n = sys.n
    if sys.is_read_off():
        C = ConstMatrix.identity(n)
        ro = sys
    else:
        B = sys.residue_at_infinity()
        try:
            ed = eigen_data(B)
        except CharPolyDoesNotSplit as exc:
            raise NotLogarithmicAtInfinity(
                "residue at infinity has non-rational eigenvalues", location="infinity"
            ) from exc
        if not ed.is_diagonalizable:
            raise NotLogarithmicAtInfinity("residue at infinity is not semisimple", location="infinity")
        if not all(lam.is_integer() for lam, _ in ed.eigenvalues):
            raise NotLogarithmicAtInfinity(
                "residue at infinity has non-integer eigenvalues", location="infinity"
            )
        cols = []
        for lam, _ in sorted(ed.eigenvalues, key=lambda e: int(e[0])):
            cols.extend(ed.eigenspace(lam).cols())
        C = ConstMatrix.from_cols(cols, nrows=n)
        ro = sys.conjugate(C)
    b = ro.b()
    return TypeAndHN(TypeVector(tuple(-x for x in b)), tuple(hn_flag_of(b)), C, ro)


# ---------------------------------------------------------------------------
# weak solution states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModificationRecord:
    pole: int
    subspace: ConstMatrix
    type_before: TypeVector
    type_after: TypeVector
    predicted: TypeVector
    gauge: SeriesMatrix | None = field(default=None, compare=False, repr=False)
    direction: str = "down"

    def to_json(self):
        return {
            "pole": self.pole,
            "direction": self.direction,
            "subspace": self.subspace.to_json(),
            "type_before": self.type_before.to_json(),
            "type_after": self.type_after.to_json(),
            "predicted": self.predicted.to_json(),
        }


@dataclass(frozen=True)
class WeakSolutionState:
    system: FuchsianSystem
    type: TypeVector
    hn_flag: tuple
    log: tuple = ()

    @classmethod
    def from_system(cls, sys: FuchsianSystem) -> "WeakSolutionState":
        th = type_and_hn(sys)
        return cls(th.system, th.type, th.hn_flag, ())

    @property
    def is_balanced(self) -> bool:
        return len(set(self.type.values)) <= 1

    @property
    def is_strong(self) -> bool:
        return all(k == 0 for k in self.type.values)

    def to_json(self):
        return {
            "system": self.system.to_json(),
            "type": self.type.to_json(),
            "hn_flag": [F.to_json() for F in self.hn_flag],
            "log": [r.to_json() for r in self.log],
        }


def _state(x) -> WeakSolutionState:
    if isinstance(x, WeakSolutionState):
        return x
    return WeakSolutionState.from_system(x)


def _subspace(W, n: int) -> ConstMatrix:
    if W is None:
        return ConstMatrix.from_cols([], nrows=n)
    if not isinstance(W, ConstMatrix):
        W = ConstMatrix.from_cols([list(v) for v in W], nrows=n) if W else ConstMatrix.from_cols([], nrows=n)
    if W.nrows != n:
        raise ValueError("subspace vectors have the wrong length")
    if W.ncols == 0:
        return W
    return W.column_basis()


def taylor_shift(p: LaurentSeries, s) -> LaurentSeries:
    """p(s + u) as a polynomial in u."""
    s = gauss(s)
    if p.is_zero():
        return p
    if p.low < 0 or not p.is_exact:
        raise ValueError("taylor_shift needs an exact polynomial")
    cs = []
    q = p
    fact = 1
    for k in range(p.degree() + 1):
        if k:
            fact *= k
            q = q.derivative()
        cs.append(q.evaluate(s) / fact)
    return LaurentSeries(cs, 0)


def _shift_matrix(M: SeriesMatrix, s) -> SeriesMatrix:
    return M.map(lambda a: taylor_shift(a, s))


def _poly_matrix_eval(M: SeriesMatrix, a) -> ConstMatrix:
    return ConstMatrix([[x.evaluate(a) for x in r] for r in M.rows])


def _unipotent_diagonaliser(Bn: ConstMatrix, c) -> ConstMatrix:
    """Upper unitriangular C with C^{-1} Bn C = diag(c), Bn = diag(c) + block-strictly-upper."""
    n = len(c)
    cols = []
    for j in range(n):
        unknown = [i for i in range(j) if c[i] != c[j]]
        M = Bn - ConstMatrix.identity(n).scale(c[j])
        rhs = ConstMatrix([[-M[r, j]] for r in range(n)], 1)
        v = [ZERO] * n
        v[j] = ONE
        if unknown:
            A = M.select_cols(unknown)
            try:
                x = A.solve(rhs)
            except Exception as exc:
                raise NotLogarithmicAtInfinity(
                    "residue at infinity is not semisimple after the modification"
                ) from exc
            for idx, i in enumerate(unknown):
                v[i] = x[idx, 0]
        elif not rhs.is_zero():
            raise NotLogarithmicAtInfinity("residue at infinity is not semisimple after the modification")
        cols.append(v)
    C = ConstMatrix.from_cols(cols, nrows=n)
    if C.inv() @ Bn @ C != ConstMatrix.diag(list(c)):
        raise NotLogarithmicAtInfinity("residue at infinity could not be diagonalised")
    return C


def _fuchsian_identity_holds(sys: FuchsianSystem, new: FuchsianSystem, G: SeriesMatrix) -> bool:
    """G * sum R''_a D_a == (sum R_a D_a) G - G' D as polynomial matrices, D = prod (z - a)."""
    n = sys.n
    D = LaurentSeries.const(1)
    Da = []
    for a in sys.poles:
        D = D * (Z - a)
    for i, a in enumerate(sys.poles):
        acc = LaurentSeries.const(1)
        for j, b in enumerate(sys.poles):
            if j != i:
                acc = acc * (Z - b)
        Da.append(acc)
    lhs_sum = SeriesMatrix.zeros(n)
    rhs_sum = SeriesMatrix.zeros(n)
    for R, Rn, d in zip(sys.residues, new.residues, Da):
        lhs_sum = lhs_sum + SeriesMatrix.from_const(R) * d
        rhs_sum = rhs_sum + SeriesMatrix.from_const(Rn) * d
    Gp = G.map(lambda x: x.derivative())
    lhs = lhs_sum @ G - Gp * D
    rhs = G @ rhs_sum
    diff = lhs - rhs
    return all(x.is_exact_zero() for r in diff.rows for x in r)


def modify_adjacent(state, pole, W, verify: bool = True, direction: str = "down") -> WeakSolutionState:
    """Adjacent logarithmic modification at a pole, returned in read-off form.

    W is a residue-stable subspace of the fibre at the pole (columns in the
    coordinates of the current global frame).  ``direction="down"`` replaces
    the stalk lam by W + m lam; ``"up"`` by z^{-1}(W + m lam), which is the
    down move followed by a twist and raises the type by one.  The new frame is
    e C0 (z - s)^T B(z) Pi(z) C where C0 respects W, B is the monopole of a
    BG trivialisation of the Deligne lattice at infinity, Pi the
    permutation-lemma monopole that makes the frame logarithmic there, and
    C a unitriangular constant diagonalising the new residue at infinity.
    """
    state = _state(state)
    if direction == "up":
        down = modify_adjacent(state, pole, W, verify)
        rec = down.log[-1]
        up = twist_at_pole(down, rec.pole)
        shifted = TypeVector(tuple(x + 1 for x in rec.predicted))
        rec = ModificationRecord(rec.pole, rec.subspace, state.type, up.type, shifted, rec.gauge, "up")
        return WeakSolutionState(up.system, up.type, up.hn_flag, state.log + (rec,))
    if direction != "down":
        raise ValueError("direction must be 'down' or 'up'")
    sys = state.system
    if not sys.is_read_off():
        raise NotLogarithmicAtInfinity("system is not in read-off form; run type_and_hn first")
    n = sys.n
    i = sys.pole_index(pole)
    W = _subspace(W, n)
    k = W.ncols
    R_s = sys.residues[i]
    if k and not is_invariant(R_s, W):
        raise SubspaceNotStable("subspace is not stable under the residue", location=f"pole {i}")
    predicted = gs_modify_type(state.type, state.hn_flag, W)
    if k == n:
        rec = ModificationRecord(i, W, state.type, state.type, predicted, SeriesMatrix.identity(n))
        return WeakSolutionState(sys, state.type, state.hn_flag, state.log + (rec,))
    s = sys.poles[i]
    b = sys.b()
    C0 = flag_respecting_basis([W], n) if k else ConstMatrix.identity(n)
    T = [0] * k + [1] * (n - k)
    G = SeriesMatrix.from_const(C0) @ SeriesMatrix.diag([(Z - s) if x else LaurentSeries.const(1) for x in T])
    N = working_precision()
    # everything below lives at infinity in the coordinate t = 1/z
    one_minus_st = LaurentSeries([1, -s], 0)
    zs_inv = one_minus_st.inv().shift(1)  # 1/(z - s) = t / (1 - s t)
    Ginv_t = SeriesMatrix.diag([zs_inv if x else LaurentSeries.const(1) for x in T]) @ SeriesMatrix.from_const(
        C0.inv()
    )
    lam = Ginv_t @ SeriesMatrix.z_power(b)
    bgt = bg_trivialise(Lattice(lam))
    B1 = bgt.monopole
    c = list(bgt.K)
    L_e = sys.theta_matrix_at_infinity(N)
    X = G.substitute_inverse() @ B1 @ SeriesMatrix.z_power(c)
    Xinv = SeriesMatrix.z_power([-x for x in c]) @ B1.inv() @ Ginv_t
    H = gauge_matrix(L_e, X, Xinv)
    if not H.is_holomorphic() or not H.const_term().is_zero():
        raise NotLogarithmicAtInfinity("infinity is not an apparent point of this system")
    d = c[-1] - c[0]
    if d > 0:
        P = birkhoff_gauge(ConnectionGerm(H, Lattice.standard(n)), d + 3)
        pl = permutation_lemma(P.inv(), [-x for x in c])
        mono = B1 @ pl.Pi
    else:
        mono = B1
    Gtot = G @ mono.substitute_inverse()
    # new residues at the other poles by constant conjugation
    new_res = list(sys.residues)
    for j, a in enumerate(sys.poles):
        if j == i:
            continue
        Ga = _poly_matrix_eval(Gtot, a)
        new_res[j] = Ga.inv() @ sys.residues[j] @ Ga
    # residue at s from the local expansion in u = z - s
    Gu = _shift_matrix(Gtot, s)
    Lu = sys.local_theta_matrix(i, N)
    new_res[i] = gauge_matrix(Lu, Gu).const_term()
    Bn = -sum(new_res[1:], new_res[0])
    C = _unipotent_diagonaliser(Bn, c)
    Gfin = Gtot @ SeriesMatrix.from_const(C)
    new_res = [C.inv() @ R @ C for R in new_res]
    new_sys = FuchsianSystem(sys.poles, tuple(new_res))
    if verify:
        if not _fuchsian_identity_holds(sys, new_sys, Gfin):
            raise NotTrivialising("modified frame does not give a Fuchsian system")
        if new_sys.b() != c or not new_sys.is_read_off():
            raise NotTrivialising("residue at infinity differs from the trivialisation exponents")
        chk = Gfin.substitute_inverse().scale_rows_by_power(b, sign=-1).scale_cols_by_power(c)
        if not chk.in_GL_h():
            raise NotTrivialising("new frame is not a BG trivialisation of the Deligne lattice")
    new_type = TypeVector(tuple(-x for x in c))
    rec = ModificationRecord(i, W, state.type, new_type, predicted, Gfin)
    return WeakSolutionState(new_sys, new_type, tuple(hn_flag_of(c)), state.log + (rec,))


def twist_at_pole(state, pole) -> WeakSolutionState:
    """Scalar gauge (z - s)^{-1}: residue at s goes up by 1, type goes up by 1."""
    state = _state(state)
    sys = state.system
    i = sys.pole_index(pole)
    res = list(sys.residues)
    res[i] = res[i] + ConstMatrix.identity(sys.n)
    new = FuchsianSystem(sys.poles, tuple(res))
    return WeakSolutionState(new, TypeVector(tuple(x + 1 for x in state.type)), state.hn_flag, state.log)


def replay(state, log) -> WeakSolutionState:
    """Re-apply a modification log (JSON records or ModificationRecords)."""
    st = _state(state)
    for rec in log:
        if isinstance(rec, ModificationRecord):
            pole, W, direction = rec.pole, rec.subspace, rec.direction
        else:
            pole = rec["pole"]
            W = ConstMatrix.from_json(rec["subspace"]) if rec["subspace"] else None
            direction = rec.get("direction", "down")
        st = modify_adjacent(st, pole, W, direction=direction)
    return st


# ---------------------------------------------------------------------------
# Plemelj search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlemeljResult:
    state: WeakSolutionState
    depth: int
    explored: int

    def to_json(self):
        return {
            "found": True,
            "depth": self.depth,
            "explored": self.explored,
            "type": self.state.type.to_json(),
            "infinity_residue": self.state.system.residue_at_infinity().to_json(),
            "state": self.state.to_json(),
        }


def _eigenbasis(R: ConstMatrix, where: str):
    ed = eigen_data(R)
    if not ed.is_diagonalizable:
        raise NotDiagonalizable("residue is not diagonalizable", location=where)
    return list(ed.jordan_basis.cols())


def plemelj_search(state, diag_pole, max_depth: int | None = None) -> PlemeljResult:
    """Breadth-first search through the eigen-apartment at a diagonalizable pole."""
    state = _state(state)
    sys = state.system
    i = sys.pole_index(diag_pole)
    n = sys.n
    _eigenbasis(sys.residues[i], f"pole {i}")
    if state.is_balanced:
        return PlemeljResult(state, 0, 0)
    spread = state.type.values[0] - state.type.values[-1]
    bound = (n - 1) * spread if max_depth is None else max_depth
    frontier = [state]
    explored = 0
    seen = set()
    for depth in range(1, bound + 1):
        nxt = []
        for st in frontier:
            vecs = _eigenbasis(st.system.residues[i], f"pole {i}")
            for r in range(1, n):
                for S in itertools.combinations(range(n), r):
                    W = ConstMatrix.from_cols([vecs[j] for j in S], nrows=n)
                    new = modify_adjacent(st, i, W)
                    explored += 1
                    if new.is_balanced:
                        return PlemeljResult(new, depth, explored)
                    key = (new.type.values, new.system.charpolys(), _canon(new.system))
                    if key in seen:
                        continue
                    seen.add(key)
                    nxt.append(new)
        frontier = nxt
    raise NotFound("no balanced type in the eigen-apartment within the bound", location=f"depth<={bound}", bound=bound)


def _canon(sys: FuchsianSystem):
    return tuple(R for R in sys.residues)


# ---------------------------------------------------------------------------
# reducibility certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpreadCertificate:
    within_bound: bool
    p: int
    spread: int
    blocks: tuple | None = None  # (l, m) block indices with k_m - k_l >= p - 1
    subspace: ConstMatrix | None = None

    def to_json(self):
        out = {"within_bound": self.within_bound, "p": self.p, "spread": self.spread}
        if not self.within_bound:
            out["blocks"] = list(self.blocks)
            out["invariant_subspace"] = None if self.subspace is None else self.subspace.to_json()
        return out


def _blocks(type_values):
    """Index ranges of equal entries of a nonincreasing type."""
    out = []
    start = 0
    for j in range(1, len(type_values) + 1):
        if j == len(type_values) or type_values[j] != type_values[start]:
            out.append((start, j))
            start = j
    return out


def spread_certificate(state) -> SpreadCertificate:
    """Within k_1 - k_n <= p - 2, or a verified common invariant subspace of the residues."""
    state = _state(state)
    sys = state.system
    k = list(state.type.values)
    p = sys.p
    n = sys.n
    spread = k[0] - k[-1]
    if spread <= p - 2:
        return SpreadCertificate(True, p, spread)
    blocks = _blocks(k)
    val = [k[a] for a, _ in blocks]

    def check_zero(rows, cols):
        for R in sys.residues:
            for r in rows:
                for c in cols:
                    if R[r, c]:
                        raise CertificateInconsistent(
                            "claimed zero block of a residue is nonzero",
                            location=f"entry ({r},{c})",
                        )

    # an adjacent gap >= p - 1 gives the invariant subspace spanned by the top blocks
    for m in range(len(blocks) - 1):
        if val[m] - val[m + 1] >= p - 1:
            top = blocks[m][1]
            check_zero(range(top, n), range(top))
            U = ConstMatrix.from_cols(
                [[ONE if r == j else ZERO for r in range(n)] for j in range(top)], nrows=n
            )
            if not all(is_invariant(R, U) for R in sys.residues):
                raise CertificateInconsistent("extracted subspace is not invariant")
            return SpreadCertificate(False, p, spread, (m + 1, m), U)
    # otherwise only the extreme lower-left block is forced to vanish
    l, m = len(blocks) - 1, 0
    check_zero(range(*blocks[l]), range(*blocks[m]))
    return SpreadCertificate(False, p, spread, (l, m), None)


# ---------------------------------------------------------------------------
# index reduction
# ---------------------------------------------------------------------------


def stable_subspace_samples(R: ConstMatrix, dims=None):
    """Residue-stable subspaces from Jordan-chain prefixes, deduplicated."""
    n = R.nrows
    dims = range(0, n + 1) if dims is None else dims
    try:
        tools = stable_flag_tools(R)
    except CharPolyDoesNotSplit:
        # no eigenvectors over Q(i): only the trivial subspaces are sampled
        tools = None
    out = []
    for d in dims:
        if d == 0:
            cands = [ConstMatrix.from_cols([], nrows=n)]
        elif d == n:
            cands = [ConstMatrix.identity(n)]
        elif tools is None:
            cands = []
        else:
            cands = [f[0] for f in tools.jordan_samples((d, n - d))]
        for W in cands:
            if not any(subspace_dim(U) == subspace_dim(W) and (W.ncols == 0 or subspace_equal(U, W)) for U in out):
                out.append(W)
    return out


@dataclass(frozen=True)
class IndexCandidate:
    subspace: ConstMatrix
    index_before: int
    index_after: int
    state: WeakSolutionState = field(compare=False, repr=False)

    def to_json(self):
        return {
            "subspace": self.subspace.to_json(),
            "index_before": self.index_before,
            "index_after": self.index_after,
            "type_after": self.state.type.to_json(),
        }


def index_reduction_candidates(state, pole) -> list:
    """Sampled stable W with W cap F_1 = 0; each strictly lowers the triviality index."""
    state = _state(state)
    sys = state.system
    i = sys.pole_index(pole)
    n = sys.n
    if state.is_balanced:
        return []
    F1 = state.hn_flag[0]
    before = state.type.triviality_index
    out = []
    for W in stable_subspace_samples(sys.residues[i], range(1, n)):
        if subspace_dim(subspace_intersection(W, F1)) != 0:
            continue
        new = modify_adjacent(state, i, W)
        after = new.type.triviality_index
        if after >= before:
            raise CertificateInconsistent(
                "modification did not lower the triviality index", location=f"pole {i}"
            )
        out.append(IndexCandidate(W, before, after, new))
    return out


# ---------------------------------------------------------------------------
# exploration
# ---------------------------------------------------------------------------

UNIVERSE = "Jordan-chain prefix subspaces of the residue at each pole"


def _conjugate_match(a: FuchsianSystem, b: FuchsianSystem) -> bool:
    """Look for an invertible constant C with R_a C = C R'_a at every pole."""
    n = a.n
    rows = []
    for R, Rp in zip(a.residues, b.residues):
        for r in range(n):
            for c in range(n):
                row = [ZERO] * (n * n)
                # (R C - C R')_{rc} = sum_m R_rm C_mc - C_rm R'_mc
                for m in range(n):
                    row[m * n + c] = row[m * n + c] + R[r, m]
                    row[r * n + m] = row[r * n + m] - Rp[m, c]
                rows.append(row)
    if not rows:
        return True
    K = ConstMatrix(rows, n * n).nullspace()
    if K.ncols == 0:
        return False
    for coeffs in itertools.product(range(1, 4), repeat=min(K.ncols, 3)):
        cs = list(coeffs) + [1] * (K.ncols - len(coeffs))
        v = [sum((K[r, j] * cs[j] for j in range(K.ncols)), ZERO) for r in range(n * n)]
        C = ConstMatrix([[v[r * n + c] for c in range(n)] for r in range(n)])
        if C.det():
            return True
    return False


def explore(state, max_depth: int = 2, kappa_box: int | None = None, max_nodes: int = 500) -> dict:
    """Breadth-first walk of adjacent modifications over sampled stable subspaces."""
    root = _state(state)
    n = root.system.n
    nodes = []
    buckets = {}

    def add(st, depth, parent):
        key = (st.type.values, st.system.charpolys())
        for other in buckets.get(key, []):
            if _conjugate_match(nodes[other]["state"].system, st.system):
                return None
        nid = len(nodes)
        nodes.append({"id": nid, "depth": depth, "parent": parent, "state": st})
        buckets.setdefault(key, []).append(nid)
        return nid

    def report(complete):
        out_nodes = []
        for nd in nodes:
            st = nd["state"]
            out_nodes.append(
                {
                    "id": nd["id"],
                    "depth": nd["depth"],
                    "parent": nd["parent"],
                    "type": st.type.to_json(),
                    "balanced": st.is_balanced,
                    "strong": st.is_strong,
                    "log": [r.to_json() for r in st.log],
                    "system": st.system.to_json(),
                }
            )
        types = sorted({tuple(nd["state"].type.values) for nd in nodes}, reverse=True)
        strong = [nd["id"] for nd in nodes if nd["state"].is_strong]
        balanced = [nd["id"] for nd in nodes if nd["state"].is_balanced]
        return {
            "universe": UNIVERSE,
            "bounds": {"max_depth": max_depth, "kappa_box": kappa_box, "max_nodes": max_nodes},
            "complete": complete,
            "root": root.system.to_json(),
            "nodes": out_nodes,
            "reached_types": [list(t) for t in types],
            "strong_solutions": strong,
            "balanced_solutions": balanced,
            "note": "results are relative to the sampled universe and bounds"
            if not strong
            else "strong solution found",
        }

    add(root, 0, None)
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        nd = nodes[nid]
        if nd["depth"] >= max_depth:
            continue
        st = nd["state"]
        moves = []
        for i in range(st.system.p):
            for W in stable_subspace_samples(st.system.residues[i]):
                if W.ncols < n:
                    moves.append((i, W, "down"))
                if W.ncols > 0:
                    moves.append((i, W, "up"))
        for i, W, direction in moves:
            new = modify_adjacent(st, i, W, direction=direction)
            if kappa_box is not None and new.type.values[0] - new.type.values[-1] > kappa_box:
                continue
            child = add(new, nd["depth"] + 1, nid)
            if child is None:
                continue
            if len(nodes) > max_nodes:
                raise BudgetExceeded(
                    "exploration exceeded the node budget",
                    location=f"max_nodes={max_nodes}",
                    partial=report(False),
                )
            queue.append(child)
    return report(True)
