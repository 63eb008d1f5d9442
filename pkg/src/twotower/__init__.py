"""Two-tower implicit policies trained by evolutionary search.

Policies score latent action representations against latent states; action
selection is a maximum-inner-product search that sublinear backends (signed
random projections, random feature trees) accelerate.  Training uses the
antithetic orthogonal ES gradient estimator.
"""

from ._backend import BACKEND
from .config import ConfigError, TrainConfig, build_arch, load_config, make_config
from .envs import env_spec, make_env, rollout
from .es import EsConfig, QuadraticObjective, at_gradient, es_step, fd_gradient
from .harness import compare, evaluate, train
from .policy import ActionSet, ActionSpace
from .rng import Rng, derive
from .stats import paired_t_test
from .towers import TowerSpec, forward, init_params, param_count, split_params

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ActionSet",
    "ActionSpace",
    "ConfigError",
    "EsConfig",
    "QuadraticObjective",
    "Rng",
    "TowerSpec",
    "TrainConfig",
    "at_gradient",
    "build_arch",
    "compare",
    "derive",
    "env_spec",
    "es_step",
    "evaluate",
    "fd_gradient",
    "forward",
    "init_params",
    "load_config",
    "make_config",
    "make_env",
    "paired_t_test",
    "param_count",
    "rollout",
    "split_params",
    "train",
]
