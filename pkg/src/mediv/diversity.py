"""Diversity measures: frequency-based Shannon and Simpson, and the ME measure.

The ME diversity of a sample is ``S_ME = log zeta(beta) - beta * F`` where
zeta is the partition function of the tilted multinomial posterior (see
:mod:`mediv.simplex`). With no constraint beta = 0 and ``S_ME = log zeta(0)``,
which for the flat prior is ``log[n! / (n + k - 1)!]``. All logarithms are
natural.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConstraint, DimensionMismatch, EmptySample, UnattainableTarget
from .simplex import (
    MomentConstraint,
    PriorSpec,
    SampleBank,
    SpeciesCounts,
    draw_bank,
    posterior_means,
    tilted_objective,
    zeta_at,
)
from .solver import MONTE_CARLO_TOLERANCE, BetaSolution, SolverConfig, solve_beta

FREQUENCY_CAVEAT = (
    "S_traditional treats sample frequencies m_i/n as species probabilities; "
    "a frequency is only an estimate of a probability, so the value describes "
    "the counted sample rather than the population, and samples with the same "
    "frequency ratios get the same value regardless of abundance."
)

SIGN_CONVENTION_NOTE = (
    "S_ME = log(zeta) - beta*F with Lagrange multipliers added to the entropy; "
    "the thermodynamic convention of subtracting multipliers flips the sign of "
    "beta and gives log(zeta) + beta*F for the same distribution."
)

ZETA_CONVENTION_NOTE = (
    "zeta includes the multinomial coefficient n!/prod(m_i!) and a flat prior of "
    "density 1 on the simplex; other prior normalisations shift S_ME by a constant."
)


def shannon(counts: SpeciesCounts) -> float:
    """Shannon entropy of the sample frequencies, in nats.

    Zero counts contribute nothing (``0 log 0 = 0``). Counts are reduced by
    their gcd and summed with ``math.fsum`` so the result is bit-identical
    under species permutation and integer rescaling of the counts.
    """
    m = [int(c) for c in counts.counts if c > 0]
    if not m:
        raise EmptySample("no individuals counted (n = 0)")
    g = math.gcd(*m)
    m = [c // g for c in m]
    n = sum(m)
    log_n = math.log(n)
    return 0.0 - math.fsum(c / n * (math.log(c) - log_n) for c in m)


def simpson(counts: SpeciesCounts) -> float:
    """Simpson concentration ``sum (m_i/n)^2``; 1 minus this is the diversity form."""
    m = [int(c) for c in counts.counts if c > 0]
    if not m:
        raise EmptySample("no individuals counted (n = 0)")
    n = sum(m)
    return math.fsum(c * c for c in m) / (n * n)


@dataclass(frozen=True)
class SamplingConfig:
    n_samples: int = 10**6
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True, eq=False)
class DiversityReport:
    labels: tuple
    counts: np.ndarray
    s_traditional: float | None
    simpson: float | None
    s_me: float
    beta: float
    log_zeta: float
    target_F: float | None
    posterior_means: np.ndarray
    posterior_stderr: np.ndarray
    log_zeta_stderr: float
    ess: float
    n_samples: int
    seed: int
    solver: BetaSolution | None = None

    @property
    def simpson_complement(self) -> float | None:
        return None if self.simpson is None else 1.0 - self.simpson


def me_diversity(
    counts: SpeciesCounts,
    prior: PriorSpec | None = None,
    constraint: MomentConstraint | None = None,
    sampling: SamplingConfig | None = None,
    tolerance: float = MONTE_CARLO_TOLERANCE,
    bank: SampleBank | None = None,
) -> DiversityReport:
    """Infer the tilted posterior for ``counts`` and report both diversities.

    Draws a sample bank from the beta = 0 posterior, solves for beta on it,
    then evaluates ``log zeta`` and the posterior means at that beta.

    Raises
    ------
    UnattainableTarget
        F is outside the open range of ``f.p`` over the simplex, or outside
        what the bank can reach.
    DegenerateConstraint
        All coefficients are equal and F differs from them.
    """
    sampling = sampling or SamplingConfig()
    if bank is None:
        bank = draw_bank(counts, prior, sampling.n_samples, sampling.seed, sampling.threads)
    k = counts.k

    solution = None
    if constraint is None:
        f = np.zeros(k)
        beta, target = 0.0, None
    else:
        f = constraint.coefficients
        if f.size != k:
            raise DimensionMismatch(f"constraint has {f.size} coefficients for {k} species")
        target = constraint.target
        lo, hi = constraint.attainable_interval()
        if lo == hi:
            if target != lo:
                raise DegenerateConstraint(
                    f"f is constant (all coefficients equal {lo:g}), so <f> = {lo:g} for any beta; "
                    f"target {target:g} cannot be met"
                )
            beta = 0.0
        elif not lo < target < hi:
            raise UnattainableTarget(target, (lo, hi))
        else:
            solution = solve_beta(
                tilted_objective(bank, counts, f), target, SolverConfig(tolerance=tolerance)
            )
            beta = solution.beta

    z = zeta_at(bank, counts, f, beta)
    means, se = posterior_means(bank, counts, f, beta)
    if solution is not None:
        solution = dataclasses.replace(solution, ess_at_solution=z.ess)
    s_me = z.log_zeta - beta * (target or 0.0)
    if counts.n > 0:
        s_trad, simp = shannon(counts), simpson(counts)
    else:
        s_trad = simp = None
    return DiversityReport(
        labels=counts.labels,
        counts=counts.counts,
        s_traditional=s_trad,
        simpson=simp,
        s_me=s_me,
        beta=beta,
        log_zeta=z.log_zeta,
        target_F=target,
        posterior_means=means,
        posterior_stderr=se,
        log_zeta_stderr=z.stderr_log_zeta,
        ess=z.ess,
        n_samples=bank.n_samples,
        seed=bank.seed,
        solver=solution,
    )
