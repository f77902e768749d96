"""Simultaneous data + moment updating on a finite parameter grid.

Given a joint prior ``P_old(x, theta) = P_old(theta) P_old(x | theta)``, an
observed outcome ``x'`` and a moment constraint ``<f(theta)> = F``, the
updated distribution is

    P_new(theta) = P_old(theta) P_old(x' | theta) exp(beta f(theta)) / zeta

with beta fixed by ``d log zeta / d beta = F``. Without a constraint beta is 0
and this is Bayes' rule. The observed outcome enters by slicing the
likelihood table; the normalisation and data multipliers never appear
explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import (
    DegenerateConstraint,
    DimensionMismatch,
    InvalidOutcome,
    UnattainableTarget,
    ZeroEvidence,
)
from .solver import BetaSolution, SolverConfig, solve_beta

DEFAULT_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Gridded parameter space with prior weights and a likelihood table.

    Parameters
    ----------
    theta_grid : sequence
        Parameter points; labels or numbers.
    prior : array_like
        Nonnegative weights per grid point, normalised on construction.
    likelihood : array_like, shape (n_outcomes, n_grid)
        ``likelihood[x, j] = P_old(x | theta_j)``; each column sums to 1.
    outcomes : sequence, optional
        Outcome labels for the rows; defaults to ``0 .. n_outcomes - 1``.
    """

    theta_grid: tuple
    prior: np.ndarray
    likelihood: np.ndarray
    outcomes: tuple = field(default=None)

    def __post_init__(self):
        grid = tuple(self.theta_grid)
        if not grid:
            raise ValueError("theta grid must be non-empty")
        prior = np.array(self.prior, dtype=np.float64)
        lik = np.array(self.likelihood, dtype=np.float64)
        if lik.ndim == 1:
            lik = lik[None, :]
        if prior.shape != (len(grid),) or lik.ndim != 2 or lik.shape[1] != len(grid):
            raise DimensionMismatch(
                f"grid of {len(grid)} points, prior {prior.shape}, likelihood {lik.shape}"
            )
        if not (np.isfinite(prior).all() and (prior >= 0).all()):
            raise ValueError("prior weights must be finite and nonnegative")
        if prior.sum() <= 0:
            raise ValueError("prior weights must not all be zero")
        if not (np.isfinite(lik).all() and (lik >= 0).all()):
            raise ValueError("likelihood entries must be finite and nonnegative")
        col = lik.sum(axis=0)
        if np.abs(col - 1.0).max() > 1e-9:
            raise ValueError("likelihood must sum to 1 over outcomes for every theta")
        outcomes = tuple(range(lik.shape[0])) if self.outcomes is None else tuple(self.outcomes)
        if len(outcomes) != lik.shape[0] or len(set(outcomes)) != len(outcomes):
            raise DimensionMismatch("outcome labels must be unique, one per likelihood row")
        prior = prior / prior.sum()
        prior.setflags(write=False)
        lik.setflags(write=False)
        object.__setattr__(self, "theta_grid", grid)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "likelihood", lik)
        object.__setattr__(self, "outcomes", outcomes)

    def row(self, observed: Hashable) -> np.ndarray:
        try:
            i = self.outcomes.index(observed)
        except ValueError:
            raise InvalidOutcome(f"unknown outcome {observed!r}") from None
        return self.likelihood[i]

    def joint(self, observed: Hashable) -> np.ndarray:
        """Unnormalised ``P_old(theta) P_old(x' | theta)`` over the grid."""
        return self.prior * self.row(observed)


@dataclass(frozen=True)
class MomentSpecDiscrete:
    f_values: np.ndarray
    target: float

    def __post_init__(self):
        f = np.array(self.f_values, dtype=np.float64)
        if f.ndim != 1 or not np.isfinite(f).all() or not np.isfinite(self.target):
            raise ValueError("f values and target must be finite")
        f.setflags(write=False)
        object.__setattr__(self, "f_values", f)
        object.__setattr__(self, "target", float(self.target))


@dataclass(frozen=True)
class DiscretePosterior:
    weights: np.ndarray
    beta: float
    log_zeta: float
    residual: float = 0.0
    solution: BetaSolution | None = None


def bayes_update(model: DiscreteModel, observed: Hashable) -> DiscretePosterior:
    """Plain Bayes' rule on the grid."""
    joint = model.joint(observed)
    evidence = joint.sum()
    if evidence <= 0:
        raise ZeroEvidence(f"outcome {observed!r} is impossible under every grid point")
    return DiscretePosterior(weights=joint / evidence, beta=0.0, log_zeta=float(np.log(evidence)))


def _support_log_weights(joint) -> np.ndarray:
    joint = np.asarray(joint, dtype=np.float64)
    if joint.ndim != 1 or not (np.isfinite(joint).all() and (joint >= 0).all()):
        raise ValueError("joint weights must be a finite nonnegative vector")
    if not (joint > 0).any():
        raise ZeroEvidence("joint weights vanish on the whole grid")
    with np.errstate(divide="ignore"):
        return np.log(joint)


def _tilt(logq, f, beta):
    """Normalised tilted weights, log normaliser, mean and variance of f."""
    support = np.isfinite(logq)
    lw = np.full(logq.shape, -np.inf)
    lw[support] = logq[support] + beta * f[support]
    shift = lw[support].max()
    w = np.zeros(logq.shape)
    w[support] = np.exp(lw[support] - shift)
    s = w.sum()
    w /= s
    mean = float(w @ f)
    var = float(w @ (f - mean) ** 2)
    return w, float(shift + np.log(s)), mean, var


def _range(logq, f):
    fs = f[np.isfinite(logq)]
    return float(fs.min()), float(fs.max())


def tilted_update(
    joint,
    f_values=None,
    target: float | None = None,
    tol: float = DEFAULT_TOLERANCE,
    config: SolverConfig | None = None,
) -> DiscretePosterior:
    """Tilt unnormalised joint weights so that ``<f> = target``.

    This is the engine behind :func:`me_update`; ``joint`` is the sliced
    ``P_old(theta) P_old(x' | theta)`` and need not be normalised.
    """
    logq = _support_log_weights(joint)
    if f_values is None:
        w, log_zeta, _, _ = _tilt(logq, np.zeros_like(logq), 0.0)
        return DiscretePosterior(weights=w, beta=0.0, log_zeta=log_zeta)
    f = np.asarray(f_values, dtype=np.float64)
    if f.shape != logq.shape:
        raise DimensionMismatch(f"{f.size} f values for a grid of {logq.size}")
    if target is None or not np.isfinite(target):
        raise ValueError("a finite target is required with f values")
    if not tol > 0:
        raise ValueError("tol must be positive")
    target = float(target)
    lo, hi = _range(logq, f)
    if lo == hi:
        if abs(target - lo) > tol:
            raise DegenerateConstraint(
                f"f is constant ({lo:g}) on the support but target is {target:g}"
            )
        w, log_zeta, mean, _ = _tilt(logq, f, 0.0)
        return DiscretePosterior(w, 0.0, log_zeta, abs(mean - target))
    if not lo < target < hi:
        raise UnattainableTarget(target, (lo, hi))

    def objective(beta):
        _, _, mean, var = _tilt(logq, f, beta)
        return mean, var

    if config is None:
        config = SolverConfig(tolerance=tol)
    else:
        config = SolverConfig(tol, config.max_iterations,
                              config.initial_bracket_halfwidth, config.beta_bound)
    sol = solve_beta(objective, target, config)
    w, log_zeta, mean, _ = _tilt(logq, f, sol.beta)
    return DiscretePosterior(w, sol.beta, log_zeta, abs(mean - target), sol)


def me_update(
    model: DiscreteModel,
    observed: Hashable,
    moment: MomentSpecDiscrete | None = None,
    tol: float = DEFAULT_TOLERANCE,
) -> DiscretePosterior:
    """Update on observed data and (optionally) one moment constraint at once.

    With ``moment=None`` beta is 0 and the result is Bayes' rule.

    Raises
    ------
    ZeroEvidence, InvalidOutcome, UnattainableTarget, DegenerateConstraint
    """
    joint = model.joint(observed)
    if not (joint > 0).any():
        raise ZeroEvidence(f"outcome {observed!r} is impossible under every grid point")
    if moment is None:
        return tilted_update(joint, tol=tol)
    return tilted_update(joint, moment.f_values, moment.target, tol)


def attainable_range(model: DiscreteModel, observed: Hashable, f_values) -> tuple[float, float]:
    """Min and max of f over grid points with positive Bayes posterior weight."""
    joint = model.joint(observed)
    if not (joint > 0).any():
        raise ZeroEvidence(f"outcome {observed!r} is impossible under every grid point")
    f = np.asarray(f_values, dtype=np.float64)
    if f.shape != joint.shape:
        raise DimensionMismatch(f"{f.size} f values for a grid of {joint.size}")
    return _range(_support_log_weights(joint), f)


def coin_model(biases: Sequence[float], prior: Sequence[float] | None = None) -> DiscreteModel:
    """Bernoulli model over a grid of head probabilities; outcomes 'heads'/'tails'."""
    theta = np.asarray(biases, dtype=np.float64)
    if prior is None:
        prior = np.ones_like(theta)
    return DiscreteModel(tuple(theta), prior, np.vstack([theta, 1.0 - theta]),
                         outcomes=("heads", "tails"))
