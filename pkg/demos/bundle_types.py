"""Birkhoff-Grothendieck type of a lattice, checked against the factorisation oracle."""

import random

from btlattice import Lattice, bg_trivialise, birkhoff_factor_oracle
from btlattice.generators import random_laurent_gauge

r = random.Random(3)
for _ in range(4):
    G = random_laurent_gauge(r, 3, degree=2)
    res = bg_trivialise(Lattice(G))
    oracle = birkhoff_factor_oracle(G)
    print("type", res.type.values, "oracle", oracle.type.values, "agree", res.type == oracle.type)
