"""Safeguarded root finding for the tilt multiplier beta.

The objective maps beta to the tilted mean ``<f>_beta`` and its derivative,
the tilted variance ``var(f)_beta``. Log-convexity of the partition function
makes the mean nondecreasing in beta, so a sign-change bracket followed by
Newton steps (falling back to bisection) always converges when the target is
attainable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

from .errors import (
    MaxIterationsWarning,
    StalledAtDegenerate,
    ToleranceClampWarning,
    UnattainableTarget,
)

EXACT_TOLERANCE = 1e-8
MONTE_CARLO_TOLERANCE = 1e-4
#: Variance below this is treated as zero when diagnosing a constant f.
DEGENERATE_VARIANCE = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = EXACT_TOLERANCE
    max_iterations: int = 200
    initial_bracket_halfwidth: float = 1.0
    beta_bound: float = 1e6

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.initial_bracket_halfwidth > 0:
            raise ValueError("initial_bracket_halfwidth must be positive")
        if not self.beta_bound > 0:
            raise ValueError("beta_bound must be positive")


@dataclass(frozen=True)
class BetaSolution:
    beta: float
    residual: float
    iterations: int
    bracket: tuple
    converged: bool
    mean: float
    variance: float
    ess_at_solution: float = float("nan")


class _Tracker:
    """Evaluates the objective and keeps the best point seen."""

    def __init__(self, objective, target, tolerance):
        self.objective = objective
        self.target = target
        self.tolerance = tolerance
        self.max_variance = 0.0
        self.best = None

    def __call__(self, beta):
        out = self.objective(beta)
        mean, var = float(out[0]), float(out[1])
        tol = self.tolerance
        if len(out) > 2 and out[2] is not None and out[2] > tol:
            tol = float(out[2])
        r = mean - self.target
        self.max_variance = max(self.max_variance, var)
        point = (beta, r, mean, var, tol)
        if self.best is None or abs(r) < abs(self.best[1]):
            self.best = point
        return point


def solve_beta(
    objective: Callable,
    target: float,
    config: SolverConfig | None = None,
    beta0: float = 0.0,
) -> BetaSolution:
    """Find beta with ``|<f>_beta - target| <= tolerance``.

    Parameters
    ----------
    objective : callable
        ``beta -> (mean, variance)`` or ``(mean, variance, stderr)``. When a
        stderr is supplied (Monte Carlo backends) the tolerance is floored at
        it, with a :class:`ToleranceClampWarning`.
    target : float
        The moment target F.
    config : SolverConfig, optional
    beta0 : float
        Starting point; 0 is the minimal-update choice.

    Raises
    ------
    UnattainableTarget
        No sign change before ``|beta|`` reaches ``config.beta_bound``.
    StalledAtDegenerate
        As above, but the variance stayed below 1e-14 throughout: f is constant.
    """
    config = config or SolverConfig()
    target = float(target)
    if not math.isfinite(target):
        raise ValueError("target must be finite")
    ev = _Tracker(objective, target, config.tolerance)
    bound = config.beta_bound
    iterations = 0

    def finish(point, lo, hi, converged):
        if converged and abs(point[1]) > config.tolerance:
            warnings.warn(
                f"tolerance {config.tolerance:g} is below the Monte Carlo noise "
                "floor; clamped to the standard error of the tilted mean",
                ToleranceClampWarning,
                stacklevel=3,
            )
        beta, r, mean, var, _ = point
        return BetaSolution(
            beta=beta,
            residual=abs(r),
            iterations=iterations,
            bracket=(lo, hi),
            converged=converged,
            mean=mean,
            variance=var,
        )

    x = float(beta0)
    pt = ev(x)
    if abs(pt[1]) <= pt[4]:
        return finish(pt, x, x, True)

    # Grow the bracket away from beta0 in the direction that moves the mean
    # toward the target.
    step = 1.0 if pt[1] < 0 else -1.0
    near = pt
    h = config.initial_bracket_halfwidth
    while True:
        if iterations >= config.max_iterations:
            warnings.warn("bracket expansion hit max_iterations", MaxIterationsWarning,
                          stacklevel=2)
            b = ev.best
            return finish(b, b[0], b[0], False)
        b = min(max(x + step * h, -bound), bound)
        far = ev(b)
        iterations += 1
        if abs(far[1]) <= far[4]:
            lo, hi = sorted((near[0], far[0]))
            return finish(far, lo, hi, True)
        if (far[1] > 0) != (near[1] > 0):
            break
        if abs(b) >= bound:
            if ev.max_variance < DEGENERATE_VARIANCE:
                raise StalledAtDegenerate(
                    f"f is constant on the support (variance < {DEGENERATE_VARIANCE:g}) "
                    f"and the residual {abs(far[1]):.3g} exceeds the tolerance"
                )
            lo_v = float(objective(-bound)[0])
            hi_v = float(objective(bound)[0])
            raise UnattainableTarget(target, (lo_v, hi_v))
        near = far
        h *= 2.0

    lo_pt, hi_pt = (near, far) if near[1] < 0 else (far, near)
    lo, hi = lo_pt[0], hi_pt[0]
    cur = near if abs(near[1]) <= abs(far[1]) else far
    dx_old = hi - lo
    dx = dx_old
    while iterations < config.max_iterations:
        beta, r, _, var, _ = cur
        newton_ok = var > 0 and math.isfinite(var)
        if newton_ok:
            xn = beta - r / var
            newton_ok = lo < xn < hi and abs(2.0 * r) <= abs(dx_old * var)
        dx_old = dx
        if newton_ok:
            dx = xn - beta
        else:
            xn = 0.5 * (lo + hi)
            dx = hi - lo
        if xn in (lo, hi):
            break  # bracket exhausted at floating point resolution
        cur = ev(xn)
        iterations += 1
        if abs(cur[1]) <= cur[4]:
            return finish(cur, lo, hi, True)
        if cur[1] < 0:
            lo = xn
        else:
            hi = xn
    if iterations >= config.max_iterations:
        warnings.warn(f"beta solver stopped after {iterations} iterations",
                      MaxIterationsWarning, stacklevel=2)
    b = ev.best
    return finish(b, min(lo, b[0]), max(hi, b[0]), False)
