import math
import random

import pytest
from hypothesis import given, strategies as st

from btlattice.building import (
    Form,
    Frame,
    abacus,
    abacus_count,
    elementary_splitting,
    flag_respecting_basis,
    form_lift,
    geodesic,
    in_apartment,
    truncated_smith_form,
    z_distance,
)
from btlattice.errors import CombinatorialBlowup, FlagNotAdmissible, NotNormalized
from btlattice.generators import random_laurent_gauge
from btlattice.lattice import Lattice, smith_decomposition
from btlattice.scalar_series import ConstMatrix, LaurentSeries, SeriesMatrix, span, subspace_dim

Z = LaurentSeries.monomial(1)
kappas = st.lists(st.integers(0, 4), min_size=1, max_size=4).map(lambda k: sorted(x - min(k) for x in k))


# --- geodesics ------------------------------------------------------------------


def test_diagonal_geodesic():
    g = geodesic(Lattice.standard(2), Lattice.diagonal([0, 3]))
    assert g.length == 3
    for k, L in enumerate(g.vertices):
        assert L.equals(Lattice.diagonal([0, k]))


def test_trivial_geodesic():
    lam = Lattice.standard(3)
    assert geodesic(lam, lam).length == 0


def test_non_diagonal_geodesic_length_two():
    M = Lattice(SeriesMatrix([[1, 0], [1 + Z, Z * Z]]))
    g = geodesic(Lattice.standard(2), M)
    assert g.length == 2 and g.kappa == (0, 2)
    for a, b in zip(g.vertices, g.vertices[1:]):
        k = smith_decomposition(a, b).kappa
        assert k[-1] - k[0] == 1


@given(st.integers(0, 5000))
def test_geodesic_steps_are_adjacent_and_nested(seed):
    r = random.Random(seed)
    n = r.randint(2, 3)
    lam = Lattice(random_laurent_gauge(r, n, degree=1))
    M = Lattice(random_laurent_gauge(r, n, degree=1))
    g = geodesic(lam, M)
    assert g.length == smith_decomposition(lam, M).d
    for a, b in zip(g.vertices, g.vertices[1:]):
        assert a.contains(b) and b.contains(a.scaled(1))
    assert list(g.partial_sums()[-1]) == list(g.kappa)


# --- elementary splitting -------------------------------------------------------


def test_splitting_examples():
    assert elementary_splitting([0, 1, 3]) == [(0, 1, 1), (0, 0, 1), (0, 0, 1)]
    assert elementary_splitting([0, 0]) == []
    assert elementary_splitting([0, 2, 2]) == [(0, 1, 1), (0, 1, 1)]
    with pytest.raises(NotNormalized):
        elementary_splitting([1, 2])


@given(kappas)
def test_splitting_sums_to_kappa(k):
    T = elementary_splitting(k)
    assert [sum(col) for col in zip(*T)] == (list(k) if T else [])
    assert all(a <= b for t in T for a, b in zip(t, t[1:]))


# --- forms ----------------------------------------------------------------------


def test_form_lift_examples():
    Y = Form.standard(2)
    full = (span([[1, 0]], 2), ConstMatrix.identity(2))
    assert form_lift(Y, ((ConstMatrix.identity(2),), (0, 0))).equals(Y.lattice)
    assert form_lift(Y, (full, (0, 1))).equals(Lattice.diagonal([0, 1]))


def test_form_lift_independent_of_flag_basis():
    Y = Form.standard(2)
    flag = (span([[1, 1]], 2), ConstMatrix.identity(2))
    a = form_lift(Y, (flag, (0, 2)), ConstMatrix([[1, 0], [1, 1]]))
    b = form_lift(Y, (flag, (0, 2)), ConstMatrix([[2, 3], [2, -1]]))
    assert a.equals(b)


def test_form_lift_rejects_bad_basis():
    flag = (span([[1, 1]], 2), ConstMatrix.identity(2))
    with pytest.raises(FlagNotAdmissible):
        form_lift(Form.standard(2), (flag, (0, 2)), ConstMatrix.identity(2))


def test_truncated_smith_form_degree_bound():
    # gauge with an infinite tail: columns (1, 1/(1 - z)) and (0, z^3)
    tail = LaurentSeries([1, -1], 0).inv()
    M = Lattice(SeriesMatrix([[1, 0], [tail, Z**3]]))
    tsf = truncated_smith_form(Form.standard(2), M)
    assert tsf.kappa == (0, 3)
    assert tsf.gauge.is_exact and (tsf.gauge.degree() or 0) <= 2
    lifted = tsf.form.basis.scale_cols_by_power(tsf.kappa)
    assert Lattice(lifted).equals(M)


def test_truncated_smith_form_trivial_cases():
    Y = Form.standard(2)
    assert truncated_smith_form(Y, Y.lattice).z_distance_bound == 0
    tsf = truncated_smith_form(Y, Lattice(SeriesMatrix([[1, 0], [1, Z]])))
    assert tsf.gauge.degree() in (0, None)


def test_z_distance():
    Y = Form.standard(2)
    assert z_distance(Y, Y) == 0
    assert z_distance(Y, Form(SeriesMatrix([[1, Z * Z], [0, 1]]))) == 2


def test_flag_respecting_basis():
    F1 = span([[1, 2, 0]], 3)
    F2 = span([[1, 2, 0], [0, 0, 1]], 3)
    C = flag_respecting_basis([F1, F2, ConstMatrix.identity(3)], 3)
    assert C.det()
    assert subspace_dim(span(C.cols()[:1], 3)) == 1


# --- apartments -------------------------------------------------------------------


def test_apartment_membership():
    frame = Frame(SeriesMatrix.identity(2))
    assert in_apartment(frame, Lattice.diagonal([1, -2]))
    assert not in_apartment(frame, Lattice(SeriesMatrix([[1, 0], [1, Z]])))


# --- abacus -----------------------------------------------------------------------


def test_abacus_small_cases():
    assert [d.row_counts for d in abacus([1, 0])] == [(1, 0)]
    assert abacus_count([0, 1, 2]) == 3
    assert sorted(d.row_counts for d in abacus([0, 2])) == [(1, 1), (2, 0)]


@given(kappas)
def test_abacus_bounds_and_count(k):
    ds = abacus(k)
    n = len(k)
    delta = max(k)
    cols = [sum(1 for x in k if x >= j) for j in range(1, delta + 1)]
    assert len(ds) == math.prod(math.comb(n, c) for c in cols[1:])
    idx = sum(delta - x for x in k)
    for d in ds:
        assert d.delta <= delta and d.index <= idx
        assert sum(d.row_counts) == sum(k)


def test_abacus_blowup_and_normalisation():
    with pytest.raises(CombinatorialBlowup):
        abacus([0, 5, 5, 5, 5, 5, 5], limit=10)
    with pytest.raises(NotNormalized):
        abacus([1, 2])
