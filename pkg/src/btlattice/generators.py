"""Seeded random instances used by tests, the acceptance suite and the CLI."""

from __future__ import annotations

import random

from .scalar_series import (
    ConstMatrix,
    GaussianRational,
    LaurentSeries,
    SeriesMatrix,
)


def rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def small_scalar(r: random.Random, lo: int = -3, hi: int = 3, complex_: bool = False):
    re = r.randint(lo, hi)
    im = r.randint(lo, hi) if complex_ else 0
    return GaussianRational(re, im)


def laurent_poly(r: random.Random, lo: int, hi: int, coeff: int = 3, density: float = 0.6):
    """Random exact Laurent polynomial with exponents in [lo, hi]."""
    cs = [r.randint(-coeff, coeff) if r.random() < density else 0 for _ in range(hi - lo + 1)]
    return LaurentSeries(cs, lo)


def invertible_const(r: random.Random, n: int, coeff: int = 3) -> ConstMatrix:
    while True:
        M = ConstMatrix([[r.randint(-coeff, coeff) for _ in range(n)] for _ in range(n)])
        if M.det():
            return M


def transvection(n, a, b, p) -> SeriesMatrix:
    rows = [[LaurentSeries.const(1 if i == j else 0) for j in range(n)] for i in range(n)]
    rows[a][b] = p if isinstance(p, LaurentSeries) else LaurentSeries.const(p)
    return SeriesMatrix(rows)


def random_laurent_gauge(r, n: int, degree: int = 2, factors: int = 3, zpow: int = 2):
    """Product of transvections with Laurent-polynomial parameters, z-power diagonals,
    permutations and constants; the determinant is a constant times a power of z."""
    r = rng(r)
    G = SeriesMatrix.from_const(invertible_const(r, n))
    for _ in range(factors):
        kind = r.random()
        if kind < 0.55 and n > 1:
            a, b = r.sample(range(n), 2)
            G = G @ transvection(n, a, b, laurent_poly(r, -degree, degree))
        elif kind < 0.8:
            G = G @ SeriesMatrix.z_power([r.randint(-zpow, zpow) for _ in range(n)])
        else:
            perm = list(range(n))
            r.shuffle(perm)
            G = G @ SeriesMatrix.permutation(perm)
    return G


def random_holomorphic_gauge(r, n: int, degree: int = 3, prec: int | None = None):
    """Polynomial P in GL_n(h): random invertible constant term plus higher terms."""
    r = rng(r)
    C0 = invertible_const(r, n)
    coeffs = [C0] + [
        ConstMatrix([[r.randint(-2, 2) for _ in range(n)] for _ in range(n)]) for _ in range(degree)
    ]
    return SeriesMatrix.from_coeffs(coeffs, 0, prec)


def random_monopole(r, n: int, degree: int = 2, factors: int = 3) -> SeriesMatrix:
    """Unimodular matrix over C[1/z]."""
    r = rng(r)
    G = SeriesMatrix.from_const(invertible_const(r, n))
    for _ in range(factors):
        if n == 1:
            break
        a, b = r.sample(range(n), 2)
        G = G @ transvection(n, a, b, laurent_poly(r, -degree, 0))
    return G


# pairwise differences are never nonzero integers, so residues stay non-resonant
EIGEN_POOL = (
    GaussianRational(0),
    GaussianRational(1, 1) / 4,
    GaussianRational(1) / 2,
    GaussianRational(1) / 3,
    GaussianRational(2) / 3,
    GaussianRational(1) / 4,
    GaussianRational(0, 1) / 3,
)


def _splits(M: ConstMatrix) -> bool:
    from .scalar_series import eigen_data
    from .errors import CharPolyDoesNotSplit

    try:
        eigen_data(M)
    except CharPolyDoesNotSplit:
        return False
    return True


def random_residue(r, n: int, pool=EIGEN_POOL, jordan: bool = False, distinct: bool = True):
    """C D C^{-1} with eigenvalues from ``pool``; a single Jordan block of size 2 if asked."""
    r = rng(r)
    vals = r.sample(list(pool), n) if distinct and n <= len(pool) else [r.choice(pool) for _ in range(n)]
    rows = [[vals[i] if i == j else GaussianRational(0) for j in range(n)] for i in range(n)]
    if jordan and n >= 2:
        rows[1][1] = rows[0][0]
        rows[0][1] = GaussianRational(1)
    D = ConstMatrix(rows)
    C = invertible_const(r, n, 2)
    return C @ D @ C.inv()


def random_fuchsian_system(seed, n: int = 2, p: int = 2, pool=EIGEN_POOL, jordan=(), tries: int = 200):
    """Residues summing to zero with split characteristic polynomials at every pole.

    Poles are 0, 1, -1, 2, ...; the residue at the last pole is minus the sum
    of the others.  Residues at poles listed in ``jordan`` carry a Jordan block.
    """
    from .rh import FuchsianSystem

    r = rng(seed)
    poles = [0, 1, -1, 2, -2, 3][:p]
    for _ in range(tries):
        res = [random_residue(r, n, pool, jordan=(i in jordan)) for i in range(p - 1)]
        last = ConstMatrix.zeros(n)
        for R in res:
            last = last - R
        res.append(last)
        if all(_splits(R) for R in res):
            return FuchsianSystem(tuple(poles), tuple(res))
    # fall back to a common upper triangular shape, which always splits
    C = invertible_const(r, n, 2)
    res = []
    for i in range(p - 1):
        vals = [r.choice(pool) for _ in range(n)]
        U = ConstMatrix(
            [[vals[a] if a == b else (GaussianRational(r.randint(-2, 2)) if a < b else GaussianRational(0)) for b in range(n)] for a in range(n)]
        )
        res.append(C @ U @ C.inv())
    last = ConstMatrix.zeros(n)
    for R in res:
        last = last - R
    res.append(last)
    return FuchsianSystem(tuple(poles), tuple(res))


def plemelj_instance(seed, n: int = 2, p: int = 2):
    """A system one inverse modification away from a zero-type system.

    Starts from residues summing to zero, applies an adjacent modification at
    pole 0 along a span of residue eigenvectors and twists back up by one.
    """
    from .rh import WeakSolutionState, modify_adjacent, twist_at_pole
    from .scalar_series import eigen_data

    r = rng(seed)
    base = random_fuchsian_system(r, n, p)
    vecs = list(eigen_data(base.residues[0]).jordan_basis.cols())
    k = r.randint(1, n - 1)
    W = ConstMatrix.from_cols(r.sample(vecs, k), nrows=n)
    st = modify_adjacent(WeakSolutionState.from_system(base), 0, W)
    st = twist_at_pole(st, 0)
    return WeakSolutionState(st.system, st.type, st.hn_flag, ())
