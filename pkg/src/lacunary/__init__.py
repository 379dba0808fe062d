"""Random subsets of polynomial-growth integer sequences: generators,
annular partitions, arithmetic-relation independence checking, reproducible
random selection, and Weyl equidistribution diagnostics."""

from .equidistribution import (
    CirclePoint,
    GridSupReport,
    PsiPoint,
    PsiSeries,
    ScanReport,
    SummingMatrixReport,
    WeylReport,
    bernstein_bound,
    equidistribution_scan,
    monte_carlo_bernstein,
    psi,
    psi_series,
    rational_points,
    summing_matrix_check,
    sup_norm_via_grid,
    weyl_means,
)
from .experiments import (
    ExperimentConfig,
    ExperimentRecord,
    run_block_independence,
    run_certification,
    save_record,
)
from .integer_sets import (
    GrowthReport,
    IntegerSet,
    classify_growth,
    distribution_function,
    generate_geometric,
    generate_integers,
    generate_polynomial,
    generate_primes,
    generate_sumset,
)
from .partitions import (
    BlockDecomposition,
    BlockGrowthReport,
    Partition,
    decompose,
    dyadic_partition,
    gross_partition,
    verify_block_growth,
)
from .relations import (
    IndependenceReport,
    Relation,
    RelationExplosionError,
    RelationSet,
    RepresentationCounts,
    count_representations,
    dependence_probability_bound,
    enumerate_relations,
    is_s_independent,
    relation_count,
)
from .selection import (
    BlockDensity,
    DensitySchedule,
    DependenceEstimate,
    SelectionTrial,
    blockwise_schedule,
    decreasing_density_schedule,
    factorial_block_schedule,
    mix64,
    monte_carlo_dependence,
    select,
    trial_seed,
    uniform_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "BlockDecomposition",
    "BlockDensity",
    "BlockGrowthReport",
    "CirclePoint",
    "DensitySchedule",
    "DependenceEstimate",
    "ExperimentConfig",
    "ExperimentRecord",
    "GridSupReport",
    "GrowthReport",
    "IndependenceReport",
    "IntegerSet",
    "Partition",
    "PsiPoint",
    "PsiSeries",
    "Relation",
    "RelationExplosionError",
    "RelationSet",
    "RepresentationCounts",
    "ScanReport",
    "SelectionTrial",
    "SummingMatrixReport",
    "WeylReport",
    "bernstein_bound",
    "blockwise_schedule",
    "classify_growth",
    "count_representations",
    "decompose",
    "decreasing_density_schedule",
    "dependence_probability_bound",
    "distribution_function",
    "dyadic_partition",
    "enumerate_relations",
    "equidistribution_scan",
    "factorial_block_schedule",
    "generate_geometric",
    "generate_integers",
    "generate_polynomial",
    "generate_primes",
    "generate_sumset",
    "gross_partition",
    "is_s_independent",
    "mix64",
    "monte_carlo_bernstein",
    "monte_carlo_dependence",
    "psi",
    "psi_series",
    "rational_points",
    "relation_count",
    "run_block_independence",
    "run_certification",
    "save_record",
    "select",
    "summing_matrix_check",
    "sup_norm_via_grid",
    "trial_seed",
    "uniform_schedule",
    "verify_block_growth",
    "weyl_means",
]
