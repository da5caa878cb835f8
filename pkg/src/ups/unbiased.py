"""Coupled chains run to their meeting time and the H_{k:m} estimator.

The pair of chains (X_n) and (Y_n) is lagged by one step: X_1 is drawn from
the single kernel, then (X_{n+1}, Y_n) from the coupled kernel until the
first n (the meeting time tau) with X_n == Y_{n-1}.  Afterwards only the X
chain is advanced, up to iteration max(tau, m).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .errors import ConfigError, NoMeetingError

DEFAULT_MAX_ITERATIONS = 100_000


class CoupledKernelPair(Protocol):
    """A Markov kernel P, a coupling of P with itself and an initial law.

    Kernels may additionally provide ``trajectories(m, max_iterations, rng)``
    returning ``(tau, xs, ys)``; :func:`run_coupled` then uses it instead of
    stepping through ``coupled_step`` from Python.
    """

    def initial_sampler(self, rng) -> np.ndarray: ...

    def single_step(self, x, rng) -> np.ndarray: ...

    def coupled_step(self, x, y, rng) -> tuple[np.ndarray, np.ndarray, bool]: ...


@dataclass(frozen=True)
class EstimatorConfig:
    k: int
    m: int
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if not (0 <= self.k <= self.m < self.max_iterations):
            raise ConfigError(
                f"need 0 <= k <= m < max_iterations, got k={self.k}, m={self.m}, "
                f"max_iterations={self.max_iterations}"
            )


@dataclass
class CoupledRun:
    tau: int
    h_values_x: np.ndarray
    h_values_y: np.ndarray
    cost_units: int
    states_x: np.ndarray | None = field(default=None, repr=False)
    states_y: np.ndarray | None = field(default=None, repr=False)


def cost_of(tau: int, m: int) -> int:
    """Cost in units of single-kernel draws; a coupled draw counts as two."""
    return int(tau) - 1 + max(int(tau), int(m))


def _simulate(pair, m, max_iterations, rng):
    trajectories = getattr(pair, "trajectories", None)
    if trajectories is not None:
        return trajectories(m, max_iterations, rng)

    xs = [np.asarray(pair.initial_sampler(rng), dtype=float)]
    ys = [np.asarray(pair.initial_sampler(rng), dtype=float)]
    xs.append(np.asarray(pair.single_step(xs[0], rng), dtype=float))
    tau = 1 if np.array_equal(xs[1], ys[0]) else None
    n = 1
    while tau is None or n < max(tau, m):
        if tau is None:
            if n >= max_iterations:
                raise NoMeetingError(
                    f"chains did not meet within {max_iterations} iterations",
                    partial=(np.array(xs), np.array(ys)),
                )
            x_next, y_next, _ = pair.coupled_step(xs[n], ys[n - 1], rng)
            xs.append(np.asarray(x_next, dtype=float))
            ys.append(np.asarray(y_next, dtype=float))
            if np.array_equal(xs[-1], ys[-1]):
                tau = n + 1
        else:
            xs.append(np.asarray(pair.single_step(xs[n], rng), dtype=float))
        n += 1
    return tau, np.array(xs), np.array(ys)


def _apply(h, states):
    if len(states) == 0:
        return np.zeros((0,))
    return np.asarray(h(states), dtype=float)


def run_coupled(pair: CoupledKernelPair, h: Callable, cfg: EstimatorConfig, rng) -> CoupledRun:
    """Run the lagged pair of chains to iteration max(tau, m).

    ``h`` maps a stacked ``(N, d)`` array of states to an ``(N,)`` or
    ``(N, r)`` array.
    """
    tau, xs, ys = _simulate(pair, cfg.m, cfg.max_iterations, rng)
    return CoupledRun(
        tau=tau,
        h_values_x=_apply(h, xs),
        h_values_y=_apply(h, ys),
        cost_units=cost_of(tau, cfg.m),
        states_x=xs,
        states_y=ys,
    )


def meeting_time(pair: CoupledKernelPair, rng, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> int:
    """Run the pair only until it meets and return tau."""
    tau, _, _ = _simulate(pair, 0, max_iterations, rng)
    return tau


def h_km(run: CoupledRun, cfg: EstimatorConfig):
    """Bias-corrected estimator: ergodic average over k..m plus the
    telescoping correction over n = k+1..tau-1."""
    k, m, tau = cfg.k, cfg.m, run.tau
    hx, hy = run.h_values_x, run.h_values_y
    if hx.shape[0] < max(m, tau - 1) + 1:
        raise ValueError("run is shorter than max(m, tau - 1) + 1 iterations")
    estimate = hx[k : m + 1].mean(axis=0)
    if tau - 1 >= k + 1:
        ns = np.arange(k + 1, tau)
        weights = np.minimum(1.0, (ns - k) / (m - k + 1))
        estimate = estimate + np.tensordot(weights, hx[ns] - hy[ns - 1], axes=(0, 0))
    return estimate
