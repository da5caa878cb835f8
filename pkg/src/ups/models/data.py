"""Bundled datasets and the synthetic logistic-regression generator.

CSV files are UTF-8, comma-separated, with a header row:

- ``leukemia.csv``: time (weeks), wbc (white blood cell count),
  ag (1 if the AG test is positive, else 0)
- ``mammals.csv``: animal, body (kg), brain (g)
- ``stackloss.csv``: Air.Flow, Water.Temp, Acid.Conc., stack.loss
"""
from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .linear import LinearModel
from .logistic import LogisticModel

SYNTHETIC_BETA = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
PRIOR_VARIANCE = 10.0
LEUKEMIA_THRESHOLD = 50.0


def read_csv(name_or_path) -> dict[str, list[str]]:
    """Columns of a bundled CSV (by file name) or of any CSV path."""
    path = Path(name_or_path)
    if path.exists():
        handle = path.open(encoding="utf-8", newline="")
    else:
        try:
            handle = resources.files("ups.data").joinpath(str(name_or_path)).open(
                encoding="utf-8", newline=""
            )
        except FileNotFoundError as exc:
            raise ConfigError(f"dataset file {name_or_path!r} not found") from exc
    with handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ConfigError(f"dataset {name_or_path!r} is empty")
    header, body = rows[0], rows[1:]
    return {col: [r[j] for r in body] for j, col in enumerate(header)}


def _floats(cols, name):
    try:
        return np.array([float(v) for v in cols[name]])
    except KeyError as exc:
        raise ConfigError(f"missing column {name!r}") from exc


def load_leukemia(path=None, prior_variance: float = PRIOR_VARIANCE) -> LogisticModel:
    """Outcome 1{time >= 50}; covariates wbc and ag (no intercept)."""
    cols = read_csv(path or "leukemia.csv")
    y = (_floats(cols, "time") >= LEUKEMIA_THRESHOLD).astype(float)
    design = np.column_stack([_floats(cols, "wbc"), _floats(cols, "ag")])
    return LogisticModel.with_isotropic_prior(design, y, prior_variance)


def load_mammals(path=None) -> LinearModel:
    """log brain weight on (1, log body weight)."""
    cols = read_csv(path or "mammals.csv")
    body, brain = _floats(cols, "body"), _floats(cols, "brain")
    return LinearModel(np.column_stack([np.ones(body.size), np.log(body)]), np.log(brain))


def load_stackloss(path=None) -> LinearModel:
    """stack.loss on (1, Air.Flow, Water.Temp, Acid.Conc.)."""
    cols = read_csv(path or "stackloss.csv")
    x = [_floats(cols, c) for c in ("Air.Flow", "Water.Temp", "Acid.Conc.")]
    return LinearModel(np.column_stack([np.ones(x[0].size)] + x), _floats(cols, "stack.loss"))


def synthetic_logistic(seed: int = 1, n: int = 1000, beta=SYNTHETIC_BETA,
                       prior_variance: float = PRIOR_VARIANCE) -> LogisticModel:
    """Standard-normal covariates, outcomes drawn from the model at ``beta``."""
    beta = np.asarray(beta, dtype=float)
    rng = np.random.default_rng(seed)
    design = rng.standard_normal((n, beta.size))
    prob = 1.0 / (1.0 + np.exp(-(design @ beta)))
    y = (rng.random(n) < prob).astype(float)
    return LogisticModel.with_isotropic_prior(design, y, prior_variance)
