"""Exact lattice computations in the affine building of SL_n over C((z)).

Smith forms of lattice pairs, geodesics and forms, Birkhoff-Grothendieck
trivialisations, logarithmic lattices of local connections and adjacent
modifications of Fuchsian systems on the projective line.
"""

from .errors import DomainError, SchemaError
from .scalar_series import (
    ConstMatrix,
    GaussianRational,
    LaurentSeries,
    SeriesMatrix,
    Z,
    eigen_data,
    gauss,
    precision,
    working_precision,
)
from .lattice import (
    AdmissiblePair,
    Lattice,
    SmithData,
    distance_index,
    lattice_intersection,
    lattice_sum,
    quotient_space,
    relative_flag,
    smith_decomposition,
)
from .building import (
    Form,
    Frame,
    abacus,
    abacus_count,
    elementary_splitting,
    form_lift,
    geodesic,
    in_apartment,
    truncated_smith_form,
    z_distance,
)
from .bg import (
    TypeVector,
    bg_trivialise,
    birkhoff_factor_oracle,
    bruhat_decomposition,
    bundle_type,
    gs_modify_type,
    interpolate_monopole,
    k_staged_parabolic_member,
    permutation_lemma,
)
from .connection import (
    ConnectionGerm,
    StableFlagSpec,
    adjacent_log_subspace_test,
    birkhoff_coordinate_change,
    birkhoff_gauge,
    gauge_transform,
    is_deligne_normalized,
    is_logarithmic_lattice,
    log_lattice_from_flag,
    stable_flag_tools,
)
from .rh import (
    FuchsianSystem,
    LinearFuchsianModel,
    WeakSolutionState,
    explore,
    index_reduction_candidates,
    modify_adjacent,
    plemelj_search,
    replay,
    spread_certificate,
    type_and_hn,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "SchemaError",
    "ConstMatrix",
    "GaussianRational",
    "LaurentSeries",
    "SeriesMatrix",
    "Z",
    "eigen_data",
    "gauss",
    "precision",
    "working_precision",
    "AdmissiblePair",
    "Lattice",
    "SmithData",
    "distance_index",
    "lattice_intersection",
    "lattice_sum",
    "quotient_space",
    "relative_flag",
    "smith_decomposition",
    "Form",
    "Frame",
    "abacus",
    "abacus_count",
    "elementary_splitting",
    "form_lift",
    "geodesic",
    "in_apartment",
    "truncated_smith_form",
    "z_distance",
    "TypeVector",
    "bg_trivialise",
    "birkhoff_factor_oracle",
    "bruhat_decomposition",
    "bundle_type",
    "gs_modify_type",
    "interpolate_monopole",
    "k_staged_parabolic_member",
    "permutation_lemma",
    "ConnectionGerm",
    "StableFlagSpec",
    "adjacent_log_subspace_test",
    "birkhoff_coordinate_change",
    "birkhoff_gauge",
    "gauge_transform",
    "is_deligne_normalized",
    "is_logarithmic_lattice",
    "log_lattice_from_flag",
    "stable_flag_tools",
    "FuchsianSystem",
    "LinearFuchsianModel",
    "WeakSolutionState",
    "explore",
    "index_reduction_candidates",
    "modify_adjacent",
    "plemelj_search",
    "replay",
    "spread_certificate",
    "type_and_hn",
]
