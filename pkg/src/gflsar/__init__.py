"""Graph fused lasso imaging for spotlight SAR."""

from .config import ExperimentConfig, load_config, load_preset
from .forward import ApertureSpec, make_selection, simulate
from .graph import KernelParams, build_difference, en_graph, nltv_graph, tv2d_graph
from .pipeline import compute_metrics, fuse, run_experiment
from .scene import GroundTruth, SceneGrid, make_extended_target, make_grid, make_point_targets
from .solver import GflParams, backprojection, solve_gfl

__version__ = "0.1.0"
