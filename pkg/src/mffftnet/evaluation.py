"""Frozen-representation forecasting probe and report emission.

Each valid position contributes the backbone representation at the last
timestep of its lookback window (no augmentation, dropout off) paired with
the next P standardized values. A closed-form ridge regressor is fitted on
the train split, its regularization chosen on the validation split, and
scored on the test split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import SeriesTable, SplitSpec
from .errors import ConfigurationError
from .model import Model
from .tensor import Tensor, no_grad

DEFAULT_ALPHA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

HOURLY_HORIZONS = [24, 48, 168, 336, 720]
QUARTER_HOUR_HORIZONS = [24, 48, 96, 288, 672]


def horizon_grid(dataset_name: str) -> list[int]:
    """Conventional horizon grid: 15-minute datasets (ETTm*) get the short
    grid, everything else the hourly one."""
    if dataset_name.lower().startswith("ettm"):
        return list(QUARTER_HOUR_HORIZONS)
    return list(HOURLY_HORIZONS)


@dataclass
class RidgeProbe:
    weights: np.ndarray  # K x (P * D_out)
    intercept: np.ndarray  # P * D_out
    ridge_alpha: float


@dataclass
class ForecastReport:
    dataset: str
    mode: str  # "multivariate" | "univariate"
    entries: list[dict] = field(default_factory=list)  # {horizon, mse, mae}
    warnings: list[str] = field(default_factory=list)
    avg_mse: float = 0.0
    avg_mae: float = 0.0
    config: dict = field(default_factory=dict)
    timestamp: str = ""
    note: str = "metrics computed on standardized data"

    def finalize(self) -> None:
        if self.entries:
            self.avg_mse = float(np.mean([e["mse"] for e in self.entries]))
            self.avg_mae = float(np.mean([e["mae"] for e in self.entries]))

    def to_json(self) -> str:
        payload = {
            "dataset": self.dataset,
            "mode": self.mode,
            "entries": self.entries,
            "warnings": self.warnings,
            "avg_mse": self.avg_mse,
            "avg_mae": self.avg_mae,
            "config": self.config,
            "timestamp": self.timestamp,
            "note": self.note,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ForecastReport":
        payload = json.loads(text)
        return cls(**payload)

    def console_table(self) -> str:
        lines = [f"{self.dataset} ({self.mode})", f"{'horizon':>8} {'MSE':>10} {'MAE':>10}"]
        for e in self.entries:
            lines.append(f"{e['horizon']:>8} {e['mse']:>10.4f} {e['mae']:>10.4f}")
        lines.append(f"{'avg':>8} {self.avg_mse:>10.4f} {self.avg_mae:>10.4f}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


def extract_features(
    model: Model,
    values: np.ndarray,
    T: int,
    P: int,
    target_index: int,
    mode: str = "multivariate",
    chunk: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """(features M x K, targets M x (P*D_out)) over one split's rows."""
    n = len(values)
    m = n - T - P + 1
    if m < 1:
        raise ConfigurationError(
            f"split of {n} rows too short for lookback {T} + horizon {P}"
        )
    cols = [target_index] if mode == "univariate" else list(range(values.shape[1]))
    feats, targs = [], []
    with no_grad():
        for lo in range(0, m, chunk):
            idx = np.arange(lo, min(lo + chunk, m))
            batch = np.stack([values[i : i + T] for i in idx])
            r = model.encode(Tensor(batch), training=False)
            feats.append(r.data[:, -1, :])
            targs.append(
                np.stack([values[i + T : i + T + P][:, cols].ravel() for i in idx])
            )
    return np.concatenate(feats), np.concatenate(targs)


def _solve_ridge(X: np.ndarray, Y: np.ndarray, alpha: float) -> RidgeProbe:
    xm, ym = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - xm, Y - ym
    A = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    W = np.linalg.solve(A, Xc.T @ Yc)
    return RidgeProbe(weights=W, intercept=ym - xm @ W, ridge_alpha=alpha)


def predict(probe: RidgeProbe, X: np.ndarray) -> np.ndarray:
    return X @ probe.weights + probe.intercept


def score(probe: RidgeProbe, X: np.ndarray, Y: np.ndarray) -> tuple[float, float]:
    err = predict(probe, X) - Y
    return float(np.mean(err**2)), float(np.mean(np.abs(err)))


def fit_ridge(
    train: tuple[np.ndarray, np.ndarray],
    valid: tuple[np.ndarray, np.ndarray],
    alpha_grid=DEFAULT_ALPHA_GRID,
) -> RidgeProbe:
    """Closed-form solve per alpha on train; pick the validation-MSE winner."""
    if len(train[0]) < 2:
        raise ConfigurationError("ridge probe needs at least 2 training rows")
    best: RidgeProbe | None = None
    best_mse = np.inf
    for alpha in alpha_grid:
        probe = _solve_ridge(train[0], train[1], alpha)
        mse, _ = score(probe, valid[0], valid[1])
        if mse < best_mse:
            best, best_mse = probe, mse
    assert best is not None
    return best


def evaluate_horizons(
    model: Model,
    table: SeriesTable,
    split_spec: SplitSpec,
    T: int,
    horizons: list[int],
    mode: str = "multivariate",
    alpha_grid=DEFAULT_ALPHA_GRID,
    dataset_name: str = "",
    config_snapshot: dict | None = None,
    timestamp: str = "",
) -> ForecastReport:
    """Per horizon: extract, fit on train, select alpha on valid, score on
    test. Horizons that do not fit in a split become warning entries."""
    report = ForecastReport(
        dataset=dataset_name or "unnamed",
        mode=mode,
        config=config_snapshot or {},
        timestamp=timestamp,
    )
    ranges = [split_spec.train_range, split_spec.valid_range, split_spec.test_range]
    for P in horizons:
        try:
            parts = [
                extract_features(
                    model, table.values[a:b], T, P, table.target_index, mode
                )
                for a, b in ranges
            ]
        except ConfigurationError as exc:
            report.warnings.append(f"horizon {P} skipped: {exc}")
            continue
        probe = fit_ridge(parts[0], parts[1], alpha_grid)
        mse, mae = score(probe, parts[2][0], parts[2][1])
        report.entries.append(
            {"horizon": P, "mse": mse, "mae": mae, "ridge_alpha": probe.ridge_alpha}
        )
    report.finalize()
    return report


def train_mean_baseline(
    train_targets: np.ndarray, test_targets: np.ndarray
) -> tuple[float, float]:
    """MSE/MAE of predicting the train-split mean target everywhere."""
    pred = train_targets.mean(axis=0)
    err = test_targets - pred
    return float(np.mean(err**2)), float(np.mean(np.abs(err)))
