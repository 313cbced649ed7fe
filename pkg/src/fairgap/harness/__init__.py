"""Config-driven experiment harness and CLI."""

from .config import (ExperimentConfig, PredictorConfig, RealDataConfig, SweepConfig,
                     config_from_dict, config_to_dict, load_config)
from .runner import (RESULT_COLUMNS, RunPaths, prepare_contexts, read_results, run,
                     run_task, summarize_file, summarize_rows)
from .sampling import draw_with_cc_targets
