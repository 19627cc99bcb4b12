"""Grid path planning toolkit: random environments, an optimal A* oracle,
fully convolutional value-map inference, bidirectional path reconstruction,
and a metrics/runtime benchmark harness."""

from .astar import Cost, Path, SearchStats, astar_search, path_length
from .dataio import Dataset, Sample, path_mask, read_dataset, render_problem, write_dataset
from .errors import (
    ChecksumError,
    DegenerateFit,
    FormatError,
    InsufficientSamples,
    LengthMismatch,
    ShapeError,
    SizeMismatch,
    Unsatisfiable,
)
from .evalharness import (
    MetricsReport,
    MultiMetricsReport,
    RuntimeStudy,
    evaluate_multi,
    evaluate_single,
    fit_polynomial,
    runtime_study,
)
from .gridworld import (
    GenConfig,
    GridMap,
    PlanProblem,
    count_forbidden_patterns,
    fixed_layout_problem,
    from_maps,
    generate_environment,
    generate_problem,
    make_rng,
    sample_problem,
    to_maps,
)
from .netinfer import (
    LayerKind,
    LayerWeights,
    NetworkWeights,
    ValueMap,
    fold_batchnorm,
    forward,
    load_weights,
    save_weights,
    validate_architecture,
)
from .reconstruct import (
    ReconstructionConfig,
    ReconstructionOutcome,
    reconstruct_multi,
    reconstruct_path,
)

__version__ = "0.1.0"
