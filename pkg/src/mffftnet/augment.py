"""Adaptive noise augmentation: the two contrastive views of a window.

Each view multiplies every feature column by one scaling draw
eps_s ~ Normal(1, (alpha*sigma_d)^2) and adds one shift draw
eps_b ~ Normal(0, (beta*sigma_d)^2), where sigma_d is the window's own
per-feature standard deviation. One draw per feature per view, not per
timestep, so within-window temporal structure is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AugmentConfig:
    alpha: float = 0.5
    beta: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("augmentation strengths must be non-negative")


def series_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population standard deviation over time."""
    x = np.asarray(x, dtype=np.float64)
    return x.mean(axis=0), x.std(axis=0)


def draw_factors(
    cfg: AugmentConfig, sigma: np.ndarray, draw_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """The (eps_s, eps_b) factor vectors for one view, seeded by
    (cfg.seed, draw_index)."""
    rng = np.random.default_rng([cfg.seed, draw_index])
    eps_s = rng.normal(1.0, cfg.alpha * sigma)
    eps_b = rng.normal(0.0, cfg.beta * sigma)
    return eps_s, eps_b


def augment_view(x: np.ndarray, cfg: AugmentConfig, draw_index: int) -> np.ndarray:
    """One augmented copy of a T x D window; deterministic in
    (x, cfg, draw_index)."""
    x = np.asarray(x, dtype=np.float64)
    _, sigma = series_stats(x)
    eps_s, eps_b = draw_factors(cfg, sigma, draw_index)
    return eps_s * x + eps_b
