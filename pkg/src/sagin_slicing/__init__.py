"""Multi-objective RAN slicing over a ground / UAV / satellite network.

A central DDPG agent sets inter-slice shares and UAV positions; three
distributed agents allocate components, subchannels and power per slice.
"""

from .config import ScenarioConfig, load_config, parse_config
from .orchestrator import (run_maddpg_baseline, run_scalar_utility_baseline,
                           run_training)

__all__ = ["ScenarioConfig", "load_config", "parse_config", "run_training",
           "run_maddpg_baseline", "run_scalar_utility_baseline"]
__version__ = "0.1.0"
