"""Random-walk Metropolis-Hastings with coupled Normal proposals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _pycore, backend
from ..errors import ConfigError, NumericDomainError


@dataclass(frozen=True, eq=False)
class RwmhConfig:
    """Proposal N(x, L L') and initial law N(init_mean, C C').

    ``reflect`` selects the reflection-maximal coupling of the proposals
    instead of the plain maximal coupling.
    """

    proposal_chol: np.ndarray
    init_mean: np.ndarray
    init_chol: np.ndarray
    reflect: bool = False

    def __post_init__(self):
        for name in ("proposal_chol", "init_chol"):
            a = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if a.shape[0] != a.shape[1] or not np.all(np.diag(a) > 0):
                raise ConfigError(f"{name} must be square lower-triangular with a positive diagonal")
            object.__setattr__(self, name, np.ascontiguousarray(np.tril(a)))
        mean = np.atleast_1d(np.asarray(self.init_mean, dtype=float))
        object.__setattr__(self, "init_mean", mean)
        if not (mean.size == self.proposal_chol.shape[0] == self.init_chol.shape[0]):
            raise ConfigError("proposal, initial mean and initial covariance dimensions differ")

    @classmethod
    def isotropic(cls, proposal_sd, init_mean, init_sd, reflect=False):
        mean = np.atleast_1d(np.asarray(init_mean, dtype=float))
        eye = np.eye(mean.size)
        return cls(proposal_sd * eye, mean, init_sd * eye, reflect)

    @classmethod
    def from_covariances(cls, proposal_cov, init_mean, init_cov, reflect=False):
        return cls(np.linalg.cholesky(proposal_cov), init_mean, np.linalg.cholesky(init_cov), reflect)

    @property
    def dim(self):
        return self.init_mean.size


class RwmhKernel:
    """Coupled RWMH pair for a fixed target; accept/reject shares one uniform."""

    def __init__(self, target, cfg: RwmhConfig, native: bool | None = None):
        if target.dim != cfg.dim:
            raise ConfigError(f"target dimension {target.dim} != config dimension {cfg.dim}")
        self.target = target
        self.cfg = cfg
        self.native = native

    def _logpdf(self, x):
        lp = float(self.target.log_density(x))
        if np.isnan(lp) or lp == np.inf or lp == -np.inf:
            raise NumericDomainError(f"log-density is {lp} at the current state")
        return lp

    def initial_sampler(self, rng):
        return self.cfg.init_mean + self.cfg.init_chol @ rng.standard_normal(self.cfg.dim)

    def single_step(self, x, rng):
        x = np.asarray(x, dtype=float)
        return _pycore.rwmh_step(self.target, x, self._logpdf(x), self.cfg.proposal_chol, rng)[0]

    def coupled_step(self, x, y, rng):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.array_equal(x, y):
            x_new = self.single_step(x, rng)
            return x_new, x_new.copy(), True
        x_new, _, y_new, _ = _pycore.rwmh_coupled_step(
            self.target, x, self._logpdf(x), y, self._logpdf(y),
            self.cfg.proposal_chol, self.cfg.reflect, rng,
        )
        return x_new, y_new, bool(np.array_equal(x_new, y_new))

    def trajectories(self, m, max_iterations, rng):
        x0 = self.initial_sampler(rng)
        y0 = self.initial_sampler(rng)
        self._logpdf(x0)
        self._logpdf(y0)
        return backend.rwmh_run(
            self.target, x0, y0, self.cfg.proposal_chol, self.cfg.reflect,
            int(m), int(max_iterations), rng, native=self.native,
        )


def rwmh_kernel(path, lam: float, cfg: RwmhConfig, native: bool | None = None) -> RwmhKernel:
    return RwmhKernel(path.target_at(lam), cfg, native)
