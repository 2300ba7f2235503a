"""Exact homological filling volumes on finite group complexes, metric
small-cancellation verification, and desk-scale coarse-embedding
experiments."""

from .presentation import (
    CyclicWord,
    Presentation,
    Word,
    check_small_cancellation,
    compute_pieces,
    dehn_reduce,
    free_reduce,
    greendlinger_step,
    is_proper_power,
    parse_presentation,
    serialize_presentation,
)
from .chains import Chain, SparseIntMatrix, apply_boundary, is_cycle, kernel_rank, solve_exact
from .complexes import (
    CellComplex,
    GroupOracle,
    SubdivisionPattern,
    build_cayley_ball,
    build_grid_complex,
    subdivide_cell,
)
from .filling import (
    FillingResult,
    GrowthProfile,
    SolverBudget,
    compare_growth,
    fvol,
    growth_fit,
    padding_check,
    restricted_fill,
)
from .embedding import (
    EmbeddingSpec,
    build_extended_complex,
    builtin_axis_inclusion,
    builtin_logmap,
    builtin_plane_inclusion,
    collision_bound,
    compare_fillings,
    estimate_moduli,
    qi_verify,
)

__version__ = "0.1.0"
