"""Weakly periodic boundary laws of the Ising model on Cayley trees.

The package splits into a group/geometry layer (cayley_group), the
field recursion and its four-component reduction (ising_field), the
polynomial machinery that makes the antisymmetric branch countable in
closed form (reduction), numeric multistart and scan drivers
(solvers), and an exact-enumeration referee (gibbs_oracle). The CLI in
cli ties them together.
"""
from .cayley_group import (
    Ball,
    IDENTITY,
    ResourceLimitError,
    SubgroupSpec,
    Word,
    ball,
    children,
    in_HA,
    letter_count,
    level_size,
    multiply,
    parent,
    reduce_word,
)
from .gibbs_oracle import (
    Eq4Report,
    ProbabilityTable,
    check_compatibility,
    check_eq4,
    hamiltonian,
    mu_n_table,
)
from .ising_field import (
    ClassFlags,
    FieldQuad,
    ModelParams,
    SolutionRecord,
    W_map,
    W_map_z,
    ZQuad,
    alpha_from_theta,
    assign_field,
    classify,
    f_field,
    f_mobius,
    fixed_point_residual,
    theta_from_alpha,
    w_components,
)
from .reduction import (
    ALPHA_PRIME,
    AlphaBand,
    I3Count,
    alpha_band,
    alpha_critical,
    count_I3_solutions,
    deflate_u2_minus_1,
    gamma_cubic,
    i3_scalar_residual,
    lift_phi_fixed_point,
    lift_z2_to_quad,
    phi,
    phi_prime_at_1,
    poly_u,
    psi,
    psi_prime,
    theta_band,
    u_from_z2,
    xi_reduce,
    xi_star,
    z2_from_u,
)
from .solvers import (
    PhiCrossings,
    ScanReport,
    SolveResult,
    Transition,
    count_phi_crossings,
    default_seed_box,
    isolate_and_refine,
    scan_alpha,
    solve_full_system,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # cayley_group
    "Ball", "IDENTITY", "ResourceLimitError", "SubgroupSpec", "Word",
    "ball", "children", "in_HA", "letter_count", "level_size", "multiply",
    "parent", "reduce_word",
    # ising_field
    "ClassFlags", "FieldQuad", "ModelParams", "SolutionRecord", "W_map",
    "W_map_z", "ZQuad", "alpha_from_theta", "assign_field", "classify",
    "f_field", "f_mobius", "fixed_point_residual", "theta_from_alpha",
    "w_components",
    # reduction
    "ALPHA_PRIME", "AlphaBand", "I3Count", "alpha_band", "alpha_critical",
    "count_I3_solutions", "deflate_u2_minus_1", "gamma_cubic",
    "i3_scalar_residual", "lift_phi_fixed_point", "lift_z2_to_quad", "phi",
    "phi_prime_at_1", "poly_u", "psi", "psi_prime", "theta_band", "u_from_z2",
    "xi_reduce", "xi_star", "z2_from_u",
    # solvers
    "PhiCrossings", "ScanReport", "SolveResult", "Transition",
    "count_phi_crossings", "default_seed_box", "isolate_and_refine",
    "scan_alpha", "solve_full_system",
    # gibbs_oracle
    "Eq4Report", "ProbabilityTable", "check_compatibility", "check_eq4",
    "hamiltonian", "mu_n_table",
]
