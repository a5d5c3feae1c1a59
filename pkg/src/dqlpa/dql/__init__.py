from .agent import (TrainConfig, TrainResult, act_eps_greedy, centralized_train, distributed_execute,
                    greedy_policy, make_network, run_policy, schedules, td_target, train_step)
from .checkpoint import load_checkpoint, save_checkpoint
from .network import Adam, QNetwork
from .replay import Batch, Experience, ReplayMemory

__all__ = [
    "Adam", "Batch", "Experience", "QNetwork", "ReplayMemory", "TrainConfig", "TrainResult",
    "act_eps_greedy", "centralized_train", "distributed_execute", "greedy_policy", "load_checkpoint",
    "make_network", "run_policy", "save_checkpoint", "schedules", "td_target", "train_step",
]
