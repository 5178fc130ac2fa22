"""Self-supervised time-series representation learning with frequency- and
time-domain contrastive modules, on a self-contained float64 autodiff
engine."""

from .augment import AugmentConfig, augment_view, series_stats
from .ctcm import CtcmConfig
from .encoder import BackboneConfig
from .facm import FacmConfig
from .model import Model, ModelConfig
from .tensor import Parameter, Tensor
from .training import AblationFlags, TrainConfig, fit, fine_tune, total_loss

__all__ = [
    "AblationFlags",
    "AugmentConfig",
    "BackboneConfig",
    "CtcmConfig",
    "FacmConfig",
    "Model",
    "ModelConfig",
    "Parameter",
    "Tensor",
    "TrainConfig",
    "augment_view",
    "fine_tune",
    "fit",
    "series_stats",
    "total_loss",
]
