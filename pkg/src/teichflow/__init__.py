"""Deformation flows on a Teichmüller disc, a flat-torus model, and
discrete extremal length on square complexes."""

from .halfplane import (
    DiscDirectionFrame,
    HalfPlanePoint,
    HoroPolar,
    MoebiusMap,
    ORIGIN,
    cayley_roundtrip,
    disc_to_halfplane,
    gromov_product,
    halfplane_to_disc,
    horo_displacement_consistency,
    horo_flow,
    horo_polar,
    hyp_distance,
    polar_travel_distance,
    ray_flow,
)
from .torus import (
    BASE_POINT,
    GMVector,
    TorusFoliation,
    TorusPoint,
    converge_experiment,
    dehn_twist,
    disc_embed,
    ext_length,
    gm_vector,
    horo_connect,
    horo_point,
    intersection,
    intersection_vector,
    kerckhoff_distance,
    primitive_slopes,
    projective_distance,
    ray_point,
)
from .mesh import (
    EdgeCycle,
    QuadMesh,
    cylinder_mesh,
    load_mesh,
    rectangle_mesh,
    slit_square_mesh,
    torus_mesh,
    torus_slope_cycle,
)
from .solver import (
    ExtResult,
    MulticurveResult,
    SolverError,
    discrete_ext_length,
    modulus_resistance,
    multicurve_ext,
    richardson_extrapolate,
    shortest_cycle,
)
from .genus2 import (
    Genus2Report,
    SymmetricSurface,
    build_disjoint_tori,
    build_x0d,
    counterexample_verdict,
    epsilon_limits,
    twist_curve,
)

__version__ = "0.1.0"
