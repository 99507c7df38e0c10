from .config import ExperimentConfig, GridConfig, config_from_dict, grid_from_dict, load_config, load_grid
from .runner import RunArtifacts, prepare_data, run, run_grid, stage_seeds

__all__ = [
    "ExperimentConfig", "GridConfig", "RunArtifacts", "config_from_dict", "grid_from_dict",
    "load_config", "load_grid", "prepare_data", "run", "run_grid", "stage_seeds",
]
