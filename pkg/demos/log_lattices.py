"""Logarithmic lattices of a local connection built from stable flags."""

from btlattice import (
    AdmissiblePair,
    ConnectionGerm,
    ConstMatrix,
    SeriesMatrix,
    is_logarithmic_lattice,
    log_lattice_from_flag,
    stable_flag_tools,
)

R = ConstMatrix([[0, 1], [0, 0]])
A = ConnectionGerm.from_matrix(SeriesMatrix.from_coeffs([R, ConstMatrix([[1, 0], [2, -1]])], 0))

for flag in stable_flag_tools(R).jordan_samples((1, 1)):
    for kappa in [(0, 1), (0, 2), (-1, 1)]:
        L = log_lattice_from_flag(A, AdmissiblePair(flag, kappa))
        print(kappa, "logarithmic:", bool(is_logarithmic_lattice(A, L)))
