"""Tuning of the per-lambda estimators and of the lambda proposal q.

The procedure: survey meeting times on a grid of lambda values, set k from
an upper quantile of the meeting times, set m so that the expected cost
m + E[tau] is the same at every grid point, estimate the second moment
m2(lambda) of the per-lambda estimator and take q piecewise uniform with
interval masses proportional to width times the average of sqrt(m2) at
the two ends.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateProposalError, NoMeetingError
from .mathutils import type7_quantile
from .unbiased import DEFAULT_MAX_ITERATIONS, EstimatorConfig, h_km, meeting_time, run_coupled

SQRT_M2_FLOOR = 1e-8


@dataclass(frozen=True)
class LambdaGrid:
    points: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise ConfigError("a lambda grid needs at least two points")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise ConfigError("a lambda grid must start at 0 and end at 1")
        if np.any(np.diff(pts) < 0):
            raise ConfigError("lambda grid points must be sorted")
        object.__setattr__(self, "points", pts)

    @classmethod
    def equispaced(cls, L: int) -> "LambdaGrid":
        if L < 1:
            raise ConfigError("L must be at least 1")
        pts = np.arange(L + 1) / L
        pts[-1] = 1.0
        return cls(pts, "equispaced")

    @classmethod
    def log_equispaced(cls, L: int) -> "LambdaGrid":
        """Points exp(l - L), l = 0..L, preceded by 0 so that q covers [0, 1]."""
        if L < 1:
            raise ConfigError("L must be at least 1")
        pts = np.concatenate([[0.0], np.exp(np.arange(L + 1) - float(L))])
        pts[-1] = 1.0
        return cls(pts, "log")

    @classmethod
    def make(cls, kind: str, L: int) -> "LambdaGrid":
        if kind == "equispaced":
            return cls.equispaced(L)
        if kind == "log":
            return cls.log_equispaced(L)
        raise ConfigError(f"unknown grid kind {kind!r}")

    @property
    def L(self) -> int:
        return self.points.size - 1

    def __len__(self):
        return self.points.size

    def nearest_index(self, lam: float) -> int:
        """Index of the closest grid point; ties go to the smaller index."""
        return int(np.argmin(np.abs(self.points - lam)))


def _rng_for(seed_seq, *keys):
    return np.random.default_rng(
        np.random.SeedSequence(seed_seq.entropy, spawn_key=tuple(seed_seq.spawn_key) + tuple(keys))
    )


def _child(seed_seq, key):
    return np.random.SeedSequence(seed_seq.entropy, spawn_key=tuple(seed_seq.spawn_key) + (key,))


def _as_seedseq(rng):
    """Turn a seed, SeedSequence or Generator into a SeedSequence."""
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(0, 2**63)))
    return np.random.SeedSequence(rng)


def survey_meetings(kernel_factory: Callable, grid: LambdaGrid, R: int, rng,
                    max_iterations: int = DEFAULT_MAX_ITERATIONS) -> list[np.ndarray]:
    """R independent meeting times at each grid point.

    Replicate r at grid point l uses its own stream keyed by (l, r), so the
    result does not depend on evaluation order.
    """
    if R < 2:
        raise ConfigError("need at least two replicates per grid point")
    ss = _as_seedseq(rng)
    out = []
    for l, lam in enumerate(grid.points):
        pair = kernel_factory(float(lam))
        taus = np.empty(R, dtype=int)
        for r in range(R):
            try:
                taus[r] = meeting_time(pair, _rng_for(ss, 0, l, r), max_iterations)
            except NoMeetingError as exc:
                raise exc.with_context(grid_index=l, lam=float(lam), replicate=r) from exc
        out.append(taus)
    return out


def choose_k(samples, quantile: float = 0.99, multiplier: float = 1.0) -> int:
    """ceil(multiplier * type-7 empirical quantile of the meeting times)."""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ConfigError("no meeting times to choose k from")
    if not 0.0 < quantile < 1.0 or multiplier <= 0:
        raise ConfigError("need 0 < quantile < 1 and a positive multiplier")
    # guard against 2.9999999 style round-off before the ceiling
    return int(math.ceil(round(multiplier * type7_quantile(samples, quantile), 9)))


def choose_m(ks: Sequence[int], mean_taus: Sequence[float]) -> np.ndarray:
    """m_l = ceil(5 max(k) + max(mean tau) - mean tau_l)."""
    ks = np.asarray(ks, dtype=float)
    taus = np.asarray(mean_taus, dtype=float)
    if ks.shape != taus.shape or not (np.all(np.isfinite(ks)) and np.all(np.isfinite(taus))):
        raise ConfigError("ks and mean_taus must be finite and of equal length")
    return np.ceil(np.round(5.0 * ks.max() + taus.max() - taus, 9)).astype(int)


def per_lambda_estimate(pair, h: Callable, k: int, m: int, rng, max_iterations=DEFAULT_MAX_ITERATIONS):
    """One H_{k:m} estimate with test function h; returns (estimate, run)."""
    cfg = EstimatorConfig(int(k), int(m), max_iterations)
    run = run_coupled(pair, h, cfg, rng)
    return float(np.asarray(h_km(run, cfg)).reshape(-1)[0]), run


def estimate_m2(kernel_factory: Callable, path, grid: LambdaGrid, ks, ms, R: int, rng,
                max_iterations: int = DEFAULT_MAX_ITERATIONS, estimator: Callable | None = None):
    """m2_hat(lambda_l) = mean of R squared H_{k_l:m_l} estimates of E(lambda_l).

    ``estimator(lam, k, m, rng)`` can replace the default coupled-chain
    estimate (used by tests with deterministic estimators).
    Returns (m2 per grid point, raw estimates of shape (L+1, R)).
    """
    if R < 2:
        raise ConfigError("need at least two replicates per grid point")
    ss = _as_seedseq(rng)
    est = np.empty((len(grid), R))
    for l, lam in enumerate(grid.points):
        lam = float(lam)
        if estimator is None:
            pair = kernel_factory(lam)
            h = lambda x, lam=lam: path.grad_lambda(lam, x)  # noqa: E731
        for r in range(R):
            sub = _rng_for(ss, 1, l, r)
            try:
                if estimator is None:
                    est[l, r] = per_lambda_estimate(pair, h, ks[l], ms[l], sub, max_iterations)[0]
                else:
                    est[l, r] = estimator(lam, int(ks[l]), int(ms[l]), sub)
            except NoMeetingError as exc:
                raise exc.with_context(grid_index=l, lam=lam, replicate=r) from exc
    return np.mean(est**2, axis=1), est


@dataclass(frozen=True)
class LambdaProposal:
    """Piecewise-uniform density on [0, 1] over the cells of a grid."""

    grid: np.ndarray
    masses: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        masses = np.asarray(self.masses, dtype=float).ravel()
        if masses.size != grid.size - 1:
            raise ConfigError("need one mass per grid interval")
        if np.any(masses < 0) or not np.isclose(masses.sum(), 1.0, rtol=0, atol=1e-12):
            raise ConfigError("masses must be nonnegative and sum to one")
        if np.any((np.diff(grid) == 0) & (masses > 0)):
            raise ConfigError("a zero-width interval cannot carry mass")
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        cum[-1] = 1.0
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "cumulative", cum)

    @classmethod
    def uniform(cls) -> "LambdaProposal":
        return cls(np.array([0.0, 1.0]), np.array([1.0]))

    @property
    def densities(self) -> np.ndarray:
        widths = np.diff(self.grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(widths > 0, self.masses / widths, 0.0)

    def interval_of(self, lam) -> np.ndarray:
        idx = np.searchsorted(self.grid, lam, side="right") - 1
        return np.clip(idx, 0, self.masses.size - 1)

    def pdf(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = self.densities[self.interval_of(lam)]
        return np.where((lam >= 0) & (lam <= 1), out, 0.0)

    def sample(self, rng) -> tuple[float, float]:
        """(lambda, q(lambda)): binary search over the cumulative masses, then
        a uniform draw in the selected interval."""
        u = rng.random()
        idx = int(np.searchsorted(self.cumulative, u, side="right")) - 1
        idx = min(max(idx, 0), self.masses.size - 1)
        while self.masses[idx] == 0.0:  # u landed on a boundary of an empty cell
            idx += 1
        lo, hi = self.grid[idx], self.grid[idx + 1]
        lam = lo + (hi - lo) * rng.random()
        return float(lam), float(self.masses[idx] / (hi - lo))


def build_proposal(grid, sqrt_m2) -> LambdaProposal:
    """Interval masses ∝ width x mean of sqrt(m2) at the two ends.

    Values below 1e-8 x max(sqrt_m2) are raised to that floor so that q is
    strictly positive on (0, 1).
    """
    pts = grid.points if isinstance(grid, LambdaGrid) else np.asarray(grid, dtype=float)
    s = np.asarray(sqrt_m2, dtype=float).ravel()
    if s.size != pts.size:
        raise ConfigError("need one sqrt(m2) value per grid point")
    if np.any(~np.isfinite(s)) or np.any(s < 0):
        raise ConfigError("sqrt(m2) values must be finite and nonnegative")
    if s.max() <= 0:
        raise DegenerateProposalError("all sqrt(m2) estimates are zero")
    # rescale first so tiny (even subnormal) inputs keep their shape
    s = np.maximum(s / s.max(), SQRT_M2_FLOOR)
    raw = np.diff(pts) * 0.5 * (s[:-1] + s[1:])
    return LambdaProposal(pts, raw / raw.sum())


def sample_lambda(q: LambdaProposal, rng) -> tuple[float, float]:
    return q.sample(rng)


@dataclass
class TuningReport:
    """Everything the estimation phase needs, per grid point."""

    grid: np.ndarray
    kind: str
    k: np.ndarray
    m: np.ndarray
    tau_mean: np.ndarray
    tau_q99: np.ndarray
    sqrt_m2: np.ndarray
    masses: np.ndarray
    meeting_times: list | None = None
    m2_replicates: int = 0
    survey_replicates: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("grid", "tau_mean", "tau_q99", "sqrt_m2", "masses"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.k = np.asarray(self.k, dtype=int)
        self.m = np.asarray(self.m, dtype=int)
        if np.any(self.k < 0) or np.any(self.m < self.k) or np.any(self.sqrt_m2 < 0):
            raise ConfigError("tuning report violates k >= 0, m >= k or m2 >= 0")

    @property
    def lambda_grid(self) -> LambdaGrid:
        return LambdaGrid(self.grid, self.kind)

    @property
    def proposal(self) -> LambdaProposal:
        return LambdaProposal(self.grid, self.masses)

    def lookup(self, lam: float) -> tuple[int, int, int]:
        """(grid index, k, m) of the grid point nearest to lambda."""
        l = self.lambda_grid.nearest_index(lam)
        return l, int(self.k[l]), int(self.m[l])

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, np.ndarray):
                d[key] = val.tolist()
        if self.meeting_times is not None:
            d["meeting_times"] = [np.asarray(t).tolist() for t in self.meeting_times]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TuningReport":
        d = dict(d)
        if d.get("meeting_times") is not None:
            d["meeting_times"] = [np.asarray(t, dtype=int) for t in d["meeting_times"]]
        return cls(**d)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "TuningReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def tune(kernel_factory: Callable, path, grid: LambdaGrid, survey_R: int, m2_R: int, rng,
         quantile: float = 0.99, multiplier: float = 1.0,
         max_iterations: int = DEFAULT_MAX_ITERATIONS) -> TuningReport:
    """Survey, choose k and m, estimate m2 and build q."""
    ss = _as_seedseq(rng)
    taus = survey_meetings(kernel_factory, grid, survey_R, _child(ss, 0), max_iterations)
    ks = np.array([choose_k(t, quantile, multiplier) for t in taus])
    mean_taus = np.array([t.mean() for t in taus])
    ms = choose_m(ks, mean_taus)
    m2, _ = estimate_m2(kernel_factory, path, grid, ks, ms, m2_R, _child(ss, 1), max_iterations)
    sqrt_m2 = np.sqrt(m2)
    q = build_proposal(grid, sqrt_m2)
    return TuningReport(
        grid=grid.points, kind=grid.kind, k=ks, m=ms, tau_mean=mean_taus,
        tau_q99=np.array([type7_quantile(t, 0.99) for t in taus]),
        sqrt_m2=sqrt_m2, masses=q.masses, meeting_times=taus,
        m2_replicates=m2_R, survey_replicates=survey_R,
    )
