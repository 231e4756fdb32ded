"""Information-aware Dirichlet networks: deterministic classifiers that emit
Dirichlet concentration parameters, trained with a max-norm-approximating loss
plus an information regularizer, and evaluated for within-distribution,
out-of-distribution and adversarial predictive uncertainty."""

from .dirichlet import DirichletParams
from .losses import LossConfig
from .training import TrainConfig

__version__ = "0.1.0"

__all__ = ["DirichletParams", "LossConfig", "TrainConfig", "__version__"]
