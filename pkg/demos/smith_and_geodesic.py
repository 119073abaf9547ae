"""Relative position of two lattices and the geodesic between them."""

from btlattice import Lattice, LaurentSeries, SeriesMatrix, geodesic, smith_decomposition

z = LaurentSeries.monomial(1)
t = LaurentSeries.monomial(-1)

L = Lattice.standard(2)
M = Lattice(SeriesMatrix([[1, 0], [t, z]]))

sd = smith_decomposition(L, M, verify=True)
print("kappa:", sd.kappa, "distance:", sd.d, "index:", sd.index)

path = geodesic(L, M)
print("geodesic length:", path.length, "shift:", path.shift)
for k, step in enumerate(path.partial_sums()):
    print(" step", k, step)
