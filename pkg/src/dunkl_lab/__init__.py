"""Desk-scale numerical laboratory for Dunkl harmonic analysis."""

from .geometry import (
    GridFunction,
    RootData,
    WeightedGrid,
    ball_volume,
    maximal_function,
    orbit_distance,
    p_gamma_kernel,
    weight_at,
)
from .transform import (
    dunkl_convolution,
    dunkl_kernel,
    dunkl_transform,
    dunkl_translation,
    get_plan,
    inverse_transform,
)
from .calculus import (
    EvenSymbol,
    finite_propagation_audit,
    functional_calculus,
    gaussian_bound_audit,
    heat_apply,
    heat_kernel,
    kernel_of_calculus,
    lusin_square_function,
    propagation_bump,
)
from .dyadic import (
    DyadicSystem,
    ScalePartition,
    audit_dyadic,
    build_dyadic,
    inject_center_shift,
    locate,
)
from .spaces import (
    AtiFamily,
    HeatLadder,
    InadmissibleParamsError,
    PartitionOfUnity,
    SpaceParams,
    ati_audit,
    band_function,
    besov_norm,
    build_ati,
    build_partition,
    calderon_reconstruct,
    equivalence_audit,
    p_threshold,
    reference_family,
    tl_norm,
)
from .multipliers import (
    apply_multiplier,
    atomic_audit,
    decompose_atoms,
    hormander_norm,
    imaginary_power_symbol,
    multiplier_boundedness_audit,
    riesz_symbol,
    riesz_transform,
    t1_identity_audit,
    validate_atom,
)
from .reports import AuditReport, NormReport

__version__ = "0.1.0"
