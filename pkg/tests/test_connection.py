import itertools
import random

import pytest
from hypothesis import given, strategies as st

from btlattice.connection import (
    ConnectionGerm,
    adjacent_lattice,
    adjacent_log_subspace_test,
    birkhoff_coordinate_change,
    birkhoff_gauge,
    gauge_matrix,
    gauge_transform,
    is_deligne_normalized,
    is_logarithmic_lattice,
    log_lattice_from_flag,
    solve_sylvester,
    stable_flag_tools,
)
from btlattice.errors import FlagNotStable, ResonantResidue
from btlattice.generators import EIGEN_POOL, invertible_const
from btlattice.lattice import AdmissiblePair, Lattice
from btlattice.scalar_series import (
    ConstMatrix,
    GaussianRational,
    LaurentSeries,
    SeriesMatrix,
    span,
    subspace_equal,
)

Z = LaurentSeries.monomial(1)
HALF = GaussianRational(1) / 2
J2 = ConstMatrix([[0, 1], [0, 0]])
J3 = ConstMatrix([[0, 1, 0], [0, 0, 1], [0, 0, 0]])


def germ(*coeffs):
    return ConnectionGerm.from_matrix(SeriesMatrix.from_coeffs([ConstMatrix(c) if not isinstance(c, ConstMatrix) else c for c in coeffs], 0))


def constant_mod(H: SeriesMatrix, N: int) -> bool:
    return all(H.coeff(k).is_zero() for k in range(1, N))


# --- gauge action -------------------------------------------------------------------


def test_identity_gauge():
    A = germ(J2, [[1, 2], [3, 4]])
    assert gauge_transform(A, SeriesMatrix.identity(2)).theta_matrix.equals(A.theta_matrix)


def test_scalar_gauge_example():
    c = 3
    A = ConnectionGerm.from_matrix(SeriesMatrix([[c * Z]]))
    B = gauge_transform(A, SeriesMatrix([[1 + c * Z]]))
    expected = (c * c * Z * Z) * LaurentSeries([1, c], 0).inv()
    assert B.theta_matrix[0, 0].equals(expected)
    assert B.valuation() == 2


def test_power_gauge_of_zero():
    A = ConnectionGerm.from_matrix(SeriesMatrix.zeros(2))
    B = gauge_transform(A, SeriesMatrix.z_power([2, -1]))
    assert B.theta_matrix.equals(SeriesMatrix.diag([-2, 1]))


# --- logarithmic lattices ------------------------------------------------------------


def test_log_lattice_examples():
    A = germ(ConstMatrix.diag([0, HALF]), [[1, 1], [1, 1]])
    assert is_logarithmic_lattice(A, A.base)
    assert is_logarithmic_lattice(A, Lattice.diagonal([0, 1]))
    N = germ(J2)
    # the nilpotent residue survives z^(0,1); the other order creates a pole
    assert is_logarithmic_lattice(N, Lattice.diagonal([0, 1]))
    assert not is_logarithmic_lattice(N, Lattice.diagonal([1, 0]))


def test_adjacent_subspace_examples():
    A = germ(J2, [[0, 0], [1, 0]])
    assert adjacent_log_subspace_test(A, ConstMatrix.identity(2))
    assert adjacent_log_subspace_test(A, ConstMatrix.from_cols([], nrows=2))
    assert adjacent_log_subspace_test(A, span([[1, 0]], 2))
    for c in (0, 1, -1, 2):
        assert not adjacent_log_subspace_test(A, span([[c, 1]], 2))


@given(st.integers(0, 10_000))
def test_adjacent_test_agrees_with_direct_test(seed):
    r = random.Random(seed)
    vals = r.sample(list(EIGEN_POOL), 2) if r.random() < 0.7 else [0, 0]
    C = invertible_const(r, 2, 2)
    R = C @ (J2 if vals == [0, 0] and r.random() < 0.5 else ConstMatrix.diag(vals)) @ C.inv()
    A = germ(R, [[r.randint(-2, 2) for _ in range(2)] for _ in range(2)])
    for a, b in itertools.product(range(-2, 3), repeat=2):
        if (a, b) == (0, 0):
            continue
        W = span([[a, b]], 2)
        direct = is_logarithmic_lattice(A, adjacent_lattice(A.base, W)).logarithmic
        assert direct == adjacent_log_subspace_test(A, W)


# --- Birkhoff gauges ---------------------------------------------------------------


def test_constant_matrix_needs_no_gauge():
    A = germ(ConstMatrix.diag([0, HALF]))
    assert birkhoff_gauge(A, 6).equals(SeriesMatrix.identity(2))


def test_exponential_series():
    A = ConnectionGerm.from_matrix(SeriesMatrix([[2 * Z]]))
    P = birkhoff_gauge(A, 8)
    expected = [1, 2, 2, GaussianRational(4) / 3, GaussianRational(2) / 3, GaussianRational(4) / 15]
    assert [P[0, 0].coeff(k) for k in range(6)] == expected


def test_first_step_solves_sylvester():
    A0 = ConstMatrix.diag([0, HALF])
    A1 = ConstMatrix([[1, 2], [3, 4]])
    P = birkhoff_gauge(germ(A0, A1), 2)
    P1 = P.coeff(1)
    # P1 A0 - (A0 - I) P1 = A1
    assert P1 @ A0 - (A0 - ConstMatrix.identity(2)) @ P1 == A1
    assert P1 == solve_sylvester(A0, A0 - ConstMatrix.identity(2), A1)
    assert constant_mod(gauge_matrix(germ(A0, A1).theta_matrix, P), 2)


def test_resonance_is_named():
    with pytest.raises(ResonantResidue):
        birkhoff_gauge(germ(ConstMatrix.diag([0, 1]), [[0, 1], [1, 0]]), 4)


@given(st.integers(0, 10_000))
def test_birkhoff_gauge_constant_mod_n(seed):
    r = random.Random(seed)
    n = r.randint(1, 3)
    C = invertible_const(r, n, 2)
    R = C @ ConstMatrix.diag(r.sample(list(EIGEN_POOL), n)) @ C.inv()
    A1 = ConstMatrix([[r.randint(-2, 2) for _ in range(n)] for _ in range(n)])
    A = germ(R, A1)
    P = birkhoff_gauge(A, 6)
    H = gauge_matrix(A.theta_matrix, P)
    assert H.coeff(0) == R and constant_mod(H, 6)


def test_coordinate_change():
    assert birkhoff_coordinate_change(ConstMatrix.diag([1, 2]), 1, 5).equals(SeriesMatrix.identity(2))
    u = LaurentSeries([1, 1], 0)
    assert birkhoff_coordinate_change(ConstMatrix.zeros(2), u, 5).equals(SeriesMatrix.identity(2))
    A0 = ConstMatrix.diag([1, 2])
    P = birkhoff_coordinate_change(A0, u, 6)
    assert P.coeff(1) == A0
    L = SeriesMatrix.from_const(A0) * u
    assert constant_mod(gauge_matrix(L, P), 6)


def test_deligne_normalisation():
    assert is_deligne_normalized(ConstMatrix.diag([0, HALF]))
    assert not is_deligne_normalized(ConstMatrix.diag([0, 1]))


# --- stable flags and lattices from flags ------------------------------------------


def test_stable_flag_counts():
    diag = stable_flag_tools(ConstMatrix.diag([0, HALF, GaussianRational(1) / 3]))
    assert len(diag.jordan_samples((1, 1, 1))) == 6
    assert len(stable_flag_tools(J3).jordan_samples((1, 1, 1))) == 1
    ident = stable_flag_tools(ConstMatrix.identity(2))
    assert ident.is_stable((span([[1, 7]], 2), ConstMatrix.identity(2)))


def test_unique_nilpotent_flag_is_kernel_chain():
    (flag,) = stable_flag_tools(J3).jordan_samples((1, 1, 1))
    assert subspace_equal(flag[0], span([[1, 0, 0]], 3))
    assert subspace_equal(flag[1], span([[1, 0, 0], [0, 1, 0]], 3))


def test_lattice_from_flag_examples():
    A = germ(J2, [[1, 0], [2, -1]])
    assert log_lattice_from_flag(A, ((ConstMatrix.identity(2),), (0, 0))).equals(A.base)
    flag = (span([[1, 0]], 2), ConstMatrix.identity(2))
    L = log_lattice_from_flag(A, AdmissiblePair(flag, (0, 1)))
    assert is_logarithmic_lattice(A, L)
    with pytest.raises(FlagNotStable):
        log_lattice_from_flag(A, AdmissiblePair((span([[0, 1]], 2), ConstMatrix.identity(2)), (0, 1)))


@given(st.integers(0, 10_000))
def test_lattices_from_sampled_flags_are_logarithmic(seed):
    r = random.Random(seed)
    n = r.randint(2, 3)
    C = invertible_const(r, n, 2)
    R = C @ ConstMatrix.diag(r.sample(list(EIGEN_POOL), n)) @ C.inv()
    A = germ(R, [[r.randint(-1, 1) for _ in range(n)] for _ in range(n)])
    flags = stable_flag_tools(R).jordan_samples((1,) * n)
    flag = r.choice(flags)
    kappa = tuple(sorted(r.sample(range(4), n)))
    L = log_lattice_from_flag(A, AdmissiblePair(flag, kappa))
    assert is_logarithmic_lattice(A, L)
