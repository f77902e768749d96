"""Partition function of the tilted multinomial posterior over the simplex.

The quantity of interest is

    zeta(beta) = int dp exp(beta * f.p) * P(m | p, n) * prior(p)

taken over the probability simplex with Lebesgue measure on the first
``k - 1`` coordinates. With the flat prior the density is the constant 1, so
``zeta(0) = n! / (n + k - 1)!``. A Dirichlet(alpha) prior uses the density
``prod p_i^(alpha_i - 1) * B(1) / B(alpha)``, which is a proper Dirichlet
density rescaled to the same total mass ``1 / (k - 1)!`` as the flat one, so
alpha = 1 reproduces the flat case exactly.

Monte Carlo evaluation draws one bank of points from the beta = 0 posterior
Dirichlet(m + alpha) and reweights it by ``exp(beta * f.p)`` for every beta
(common random numbers), which turns ``log zeta`` into a smooth deterministic
function of beta for a fixed bank.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import (
    DimensionMismatch,
    ImportanceWeightWarning,
    NumericalOverflow,
    UnsupportedDimension,
)
from .kernels import tilt_means, tilt_stats

#: Draws per independently seeded chunk. Fixed so banks do not depend on
#: the number of worker threads.
CHUNK_SIZE = 1 << 16

#: ESS below this fraction of the bank size triggers ImportanceWeightWarning.
ESS_WARN_FRACTION = 0.01


@dataclass(frozen=True, eq=False)
class SpeciesCounts:
    """Observed species counts ``m`` with labels.

    ``n`` is derived from the counts. At least two species are required; zero
    counts are allowed for species known to be present but not observed.
    """

    labels: tuple
    counts: np.ndarray = field(repr=False)

    def __init__(self, labels: Sequence, counts: Sequence[int]):
        counts = np.asarray(counts)
        if counts.ndim != 1:
            raise DimensionMismatch("counts must be one-dimensional")
        if counts.size and not np.issubdtype(counts.dtype, np.integer):
            as_int = counts.astype(np.int64)
            if not np.array_equal(as_int, counts):
                raise ValueError("counts must be integers")
            counts = as_int
        counts = counts.astype(np.int64)
        labels = tuple(labels)
        if len(labels) != counts.size:
            raise DimensionMismatch(
                f"{len(labels)} labels for {counts.size} counts"
            )
        if counts.size < 2:
            raise ValueError("at least two species are required (k >= 2)")
        if len(set(labels)) != len(labels):
            raise ValueError("species labels must be unique")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "SpeciesCounts":
        """Label species ``s1 .. sk`` in order."""
        return cls([f"s{i + 1}" for i in range(len(counts))], counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def k(self) -> int:
        return int(self.counts.size)

    def scaled(self, factor: int) -> "SpeciesCounts":
        return SpeciesCounts(self.labels, self.counts * int(factor))


@dataclass(frozen=True, eq=False)
class MomentConstraint:
    """Linear moment constraint ``<sum_i f_i p_i> = F``."""

    coefficients: np.ndarray
    target: float

    def __post_init__(self):
        f = np.array(self.coefficients, dtype=np.float64)
        if f.ndim != 1:
            raise DimensionMismatch("coefficients must be one-dimensional")
        if not np.isfinite(f).all() or not np.isfinite(self.target):
            raise ValueError("constraint coefficients and target must be finite")
        f.setflags(write=False)
        object.__setattr__(self, "coefficients", f)
        object.__setattr__(self, "target", float(self.target))

    def attainable_interval(self) -> tuple[float, float]:
        """Range of ``f.p`` over the simplex; its interior is solvable."""
        return float(self.coefficients.min()), float(self.coefficients.max())


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Dirichlet prior concentrations; all ones is the flat prior."""

    concentration: np.ndarray

    def __post_init__(self):
        a = np.array(self.concentration, dtype=np.float64)
        if a.ndim != 1 or a.size == 0:
            raise DimensionMismatch("concentration must be a non-empty vector")
        if not (np.isfinite(a).all() and (a > 0).all()):
            raise ValueError("prior concentrations must be positive and finite")
        a.setflags(write=False)
        object.__setattr__(self, "concentration", a)

    @classmethod
    def flat(cls, k: int) -> "PriorSpec":
        return cls(np.ones(k))

    @classmethod
    def symmetric(cls, k: int, alpha: float) -> "PriorSpec":
        return cls(np.full(k, float(alpha)))

    @property
    def is_flat(self) -> bool:
        return bool((self.concentration == 1.0).all())

    def log_density(self, p: np.ndarray) -> np.ndarray:
        """Log prior density on the simplex (see module docstring)."""
        a = self.concentration
        k = a.size
        const = gammaln(a.sum()) - gammaln(a).sum() - gammaln(k)
        if self.is_flat:
            return np.zeros(np.shape(p)[:-1])
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(a == 1.0, 0.0, (a - 1.0) * np.log(p))
            return const + terms.sum(axis=-1)


@dataclass(frozen=True)
class ZetaEstimate:
    log_zeta: float
    dlog_dbeta: float
    d2log_dbeta2: float
    stderr_log_zeta: float
    samples_used: int
    stderr_dlog_dbeta: float = 0.0
    ess: float = float("nan")


@dataclass(frozen=True, eq=False)
class SampleBank:
    """Seeded draws from the beta = 0 posterior Dirichlet(m + alpha).

    All draws carry unit importance weight at beta = 0; tilting supplies the
    weights ``exp(beta * f.p)``.
    """

    seed: int
    points: np.ndarray = field(repr=False)
    counts: SpeciesCounts = field(repr=False)
    prior: PriorSpec = field(repr=False)

    @property
    def n_samples(self) -> int:
        return int(self.points.shape[0])

    def projections(self, f) -> np.ndarray:
        """``f.p`` for every draw."""
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (self.points.shape[1],):
            raise DimensionMismatch(
                f"constraint has {f.size} coefficients, bank has {self.points.shape[1]} species"
            )
        return self.points @ f


def _check_prior(counts: SpeciesCounts, prior: PriorSpec | None) -> PriorSpec:
    if prior is None:
        return PriorSpec.flat(counts.k)
    if prior.concentration.size != counts.k:
        raise DimensionMismatch(
            f"prior has {prior.concentration.size} concentrations for {counts.k} species"
        )
    return prior


def log_multinomial(counts: SpeciesCounts, p) -> float:
    """Log multinomial probability ``log[n!/prod(m_i!) prod p_i^m_i]``.

    Returns ``-inf`` when some ``p_i = 0`` has ``m_i > 0``.
    """
    p = np.asarray(p, dtype=np.float64)
    m = counts.counts
    if p.shape != m.shape:
        raise DimensionMismatch(f"p has shape {p.shape}, counts have {m.shape}")
    if (p[m > 0] == 0).any():
        return float("-inf")
    mask = m > 0
    coef = gammaln(counts.n + 1) - gammaln(m + 1).sum()
    return float(coef + (m[mask] * np.log(p[mask])).sum())


def log_zeta_at_zero(counts: SpeciesCounts, prior: PriorSpec | None = None) -> float:
    """Closed-form ``log zeta(0)``; ``log[n!/(n+k-1)!]`` for the flat prior."""
    prior = _check_prior(counts, prior)
    m = counts.counts
    n, k = counts.n, counts.k
    if prior.is_flat:
        return float(gammaln(n + 1) - gammaln(n + k))
    a = prior.concentration
    log_beta_post = gammaln(m + a).sum() - gammaln(n + a.sum())
    log_beta_prior = gammaln(a).sum() - gammaln(a.sum())
    return float(
        gammaln(n + 1) - gammaln(m + 1).sum() + log_beta_post - log_beta_prior - gammaln(k)
    )


def _draw_chunk(seed: int, index: int, size: int, shape: np.ndarray) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
    g = rng.standard_gamma(shape, size=(size, shape.size))
    return g / g.sum(axis=1, keepdims=True)


def draw_bank(
    counts: SpeciesCounts,
    prior: PriorSpec | None = None,
    n_samples: int = 10**6,
    seed: int = 0,
    threads: int = 1,
) -> SampleBank:
    """Draw ``n_samples`` points from Dirichlet(m + alpha).

    Draws are generated in chunks of :data:`CHUNK_SIZE`, chunk ``c`` seeded
    from ``(seed, c)``, so the bank is identical for any ``threads``.
    """
    prior = _check_prior(counts, prior)
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    shape = counts.counts + prior.concentration
    sizes = [min(CHUNK_SIZE, n_samples - start) for start in range(0, n_samples, CHUNK_SIZE)]
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda a: _draw_chunk(seed, a[0], a[1], shape),
                                   enumerate(sizes)))
    else:
        chunks = [_draw_chunk(seed, i, s, shape) for i, s in enumerate(sizes)]
    points = np.ascontiguousarray(np.concatenate(chunks, axis=0))
    points.setflags(write=False)
    return SampleBank(seed=seed, points=points, counts=counts, prior=prior)


def _check_bank(bank: SampleBank, counts: SpeciesCounts):
    if bank.counts is not counts and not (
        bank.counts.labels == counts.labels
        and np.array_equal(bank.counts.counts, counts.counts)
    ):
        raise ValueError("sample bank was drawn for different counts")


def _check_beta(beta: float, g: np.ndarray):
    span = float(np.abs(g).max()) * abs(beta) if g.size else 0.0
    if not np.isfinite(beta) or not np.isfinite(span) or span > 1e300:
        raise NumericalOverflow(f"beta={beta!r} overflows the log-domain tilt")


def zeta_at(bank: SampleBank, counts: SpeciesCounts, f, beta: float) -> ZetaEstimate:
    """Estimate ``log zeta(beta)`` and its first two beta-derivatives.

    The first derivative is the tilted mean of ``f.p`` and the second its
    variance. The constant ``log zeta(0)`` is exact; only the tilt factor is
    sampled, so beta = 0 returns the closed form with zero stderr.
    """
    _check_bank(bank, counts)
    g = bank.projections(f)
    beta = float(beta)
    _check_beta(beta, g)
    log_mean_w, mean, var, ess, se_log, se_mean = tilt_stats(g, beta)
    if ess < ESS_WARN_FRACTION * g.size:
        warnings.warn(
            f"effective sample size {ess:.1f} is below {ESS_WARN_FRACTION:.0%} of "
            f"{g.size} draws at beta={beta:g}",
            ImportanceWeightWarning,
            stacklevel=2,
        )
    base = log_zeta_at_zero(counts, bank.prior)
    return ZetaEstimate(
        log_zeta=base + log_mean_w,
        dlog_dbeta=mean,
        d2log_dbeta2=var,
        stderr_log_zeta=se_log,
        samples_used=int(g.size),
        stderr_dlog_dbeta=se_mean,
        ess=ess,
    )


def posterior_means(bank: SampleBank, counts: SpeciesCounts, f, beta: float):
    """Tilted-posterior means ``<p_i>`` and their standard errors."""
    _check_bank(bank, counts)
    g = bank.projections(f)
    beta = float(beta)
    _check_beta(beta, g)
    return tilt_means(bank.points, g, beta)


def tilted_objective(bank: SampleBank, counts: SpeciesCounts, f):
    """Solver objective ``beta -> (<f.p>, var(f.p), stderr)`` on a fixed bank."""
    _check_bank(bank, counts)
    g = bank.projections(f)

    def objective(beta):
        _check_beta(beta, g)
        _, mean, var, _, _, se_mean = tilt_stats(g, float(beta))
        return mean, var, se_mean

    return objective


def _trapezoid(resolution: int):
    x = np.linspace(0.0, 1.0, resolution + 1)
    w = np.full(resolution + 1, 1.0 / resolution)
    w[0] = w[-1] = 0.5 / resolution
    return x, w


def _grid_quadrature(counts, prior, f, beta, resolution):
    """Trapezoid quadrature over the simplex for k = 2 or 3.

    k = 3 maps the triangle to the unit square with ``p1 = x``,
    ``p2 = (1 - x) t``, ``p3 = (1 - x)(1 - t)``; the Jacobian ``1 - x`` is
    folded into the exponent of ``1 - x``. Everything is built by
    broadcasting two 1-D node vectors.
    """
    prior = _check_prior(counts, prior)
    k = counts.k
    if k not in (2, 3):
        raise UnsupportedDimension(f"grid oracle supports k in {{2, 3}}, got k={k}")
    if resolution < 100:
        raise ValueError("resolution must be >= 100")
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (k,):
        raise DimensionMismatch("constraint length must equal number of species")
    # exponent of each coordinate: counts plus prior concentration minus 1
    e = counts.counts + prior.concentration - 1.0
    const = gammaln(counts.n + 1) - gammaln(counts.counts + 1).sum()
    if not prior.is_flat:
        a = prior.concentration
        const += gammaln(a.sum()) - gammaln(a).sum() - gammaln(k)
    x, wx = _trapezoid(int(resolution))
    beta = float(beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        if k == 2:
            logf = xlogy(e[0], x) + xlogy(e[1], 1.0 - x) + beta * (f[0] * x + f[1] * (1.0 - x))
            w = wx
            coords = [x, 1.0 - x]
        else:
            t, wt = x, wx
            lx = xlogy(e[0], x) + xlogy(e[1] + e[2] + 1.0, 1.0 - x)
            lt = xlogy(e[1], t) + xlogy(e[2], 1.0 - t)
            mix = f[1] * t + f[2] * (1.0 - t)
            logf = (lx[:, None] + lt[None, :]
                    + beta * (f[0] * x[:, None] + (1.0 - x)[:, None] * mix[None, :]))
            w = wx[:, None] * wt[None, :]
            coords = [x[:, None], (1.0 - x)[:, None] * t[None, :],
                      (1.0 - x)[:, None] * (1.0 - t)[None, :]]
    logf = np.where(np.isfinite(logf) & (w > 0), logf, -np.inf)
    shift = logf.max()
    mass = w * np.exp(logf - shift)
    total = mass.sum()
    g = sum(fi * c for fi, c in zip(f, coords))
    mean = float((mass * g).sum() / total)
    var = float((mass * (g - mean) ** 2).sum() / total)
    means = np.array([(mass * c).sum() for c in coords]) / total
    return float(const + shift + np.log(total)), mean, var, means


def grid_oracle(counts, prior, f, beta, resolution=2000) -> ZetaEstimate:
    """Deterministic trapezoid quadrature of ``zeta(beta)`` for k <= 3.

    Cost is ``O(resolution^(k-1))``. Intended as an independent check on
    :func:`zeta_at`; priors with ``alpha < 1`` have integrable endpoint
    singularities the trapezoid rule does not resolve well.
    """
    log_zeta, mean, var, _ = _grid_quadrature(counts, prior, f, beta, resolution)
    return ZetaEstimate(
        log_zeta=log_zeta,
        dlog_dbeta=mean,
        d2log_dbeta2=var,
        stderr_log_zeta=0.0,
        samples_used=0,
    )


def grid_oracle_means(counts, prior, f, beta, resolution=2000) -> np.ndarray:
    """Quadrature estimate of the tilted-posterior means ``<p_i>``."""
    return _grid_quadrature(counts, prior, f, beta, resolution)[3]


def prior_sampling_log_zeta(
    counts: SpeciesCounts,
    prior: PriorSpec | None = None,
    n_samples: int = 10**5,
    seed: int = 0,
) -> tuple[float, float]:
    """Naive Monte Carlo ``log zeta(0)`` by averaging the likelihood over the prior.

    Independent of the closed form used by :func:`zeta_at`: draws
    ``p ~ Dirichlet(alpha)`` and averages ``P(m | p, n)``, scaled by the prior
    mass ``1 / (k - 1)!``. Returns ``(log_zeta, stderr)`` with the stderr from
    the delta method. High-variance for large n; a cross-check, not a method.
    """
    prior = _check_prior(counts, prior)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0x5A17])))
    g = rng.standard_gamma(prior.concentration, size=(int(n_samples), counts.k))
    p = g / g.sum(axis=1, keepdims=True)
    m = counts.counts
    coef = gammaln(counts.n + 1) - gammaln(m + 1).sum()
    with np.errstate(divide="ignore"):
        loglik = coef + np.where(m > 0, m * np.log(p), 0.0).sum(axis=1)
    shift = loglik.max()
    lik = np.exp(loglik - shift)
    mean = lik.mean()
    n = lik.size
    se = lik.std(ddof=1) / np.sqrt(n) / mean if n > 1 else 0.0
    return float(shift + np.log(mean) - gammaln(counts.k)), float(se)
