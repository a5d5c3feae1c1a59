from .config import ExperimentConfig, load_config
from .experiments import cmd_eval, cmd_oracle_check, cmd_sweep_gamma, cmd_trace, cmd_train

__all__ = ["ExperimentConfig", "load_config", "cmd_eval", "cmd_oracle_check", "cmd_sweep_gamma",
           "cmd_trace", "cmd_train"]
