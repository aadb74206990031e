from .selection import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_GAMMA_GRID,
    PERFECT_FIT,
    CvConfig,
    CvReport,
    CvScore,
    grid_search_cv,
    kfold_split,
    nmse,
    nmse_ratio,
    select_best,
)
from .data import (
    Dataset,
    Standardization,
    SynthMode,
    add_noise_snr,
    geodesic_graph,
    great_circle_distance,
    load_adjacency,
    load_dataset,
    node_split,
    read_matrix,
    save_dataset,
    standardize,
    synth_smooth_dataset,
    synthetic_problem,
    write_matrix,
)
from .artifact import ModelArtifact
from .bench import BenchmarkResults, BenchmarkSpec, CvMode, Method, run_benchmark
