"""Gibbs-sampling impulse response estimation under Laplacian noise.

Each sweep draws, in order and each conditioned on the latest values:

1. per-sample noise variances tau_i ~ GIG(2/sigma2, r_i^2, 1/2), with
   r = y - U g the current residual vector;
2. the prior scale through lambda^{-1} ~ Gamma(n/2 + 1, g'K^{-1}g / 2)
   (lambda depends on the other variables only through g);
3. g from its Gaussian conditional given (lambda, tau).

The chain starts from the Gaussian-noise estimate (see
:func:`stablespline.ssml.run_ssml`), discards a burn-in prefix, and
averages the remaining g draws.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .distributions import RngHandle, as_generator, sample_gamma, sample_gig_half, sample_mvn
from .errors import ConfigError, NumericError
from .kernels import (
    KernelOrder,
    KernelSpec,
    _kernel_array,
    build_kernel,
    kernel_factor,
    kernel_quadratic_form,
)
from .model import Dataset, build_regressor
from .ssml import IllConditionedWarning, SsmlResult, posterior_moments

__all__ = [
    "GibbsConfig",
    "GibbsChain",
    "QuantileReport",
    "conditional_tau",
    "conditional_lambda",
    "conditional_g",
    "conditional_g_moments",
    "run_gibbs",
    "quantile_diagnostics",
    "RATE_CONVENTIONS",
]

# Gamma-rate conventions for the lambda conditional.  "half" is the
# conjugate-derivation rate g'K^{-1}g / 2; "literal" drops the 1/2 and is
# kept as a sensitivity switch.
RATE_CONVENTIONS = ("half", "literal")

# Relative floor for the Gamma rate when g'K^{-1}g collapses to zero.
LAMBDA_RATE_FLOOR_FACTOR = 1e-12

# Split-half quantile discrepancies above this (in IQR units) flag a
# coordinate as poorly mixed.
QUANTILE_FLAG_THRESHOLD = 0.2
DIAG_QUANTILES = (0.25, 0.5, 0.75)
IQR_FLOOR_FACTOR = 1e-12

TAU_THIN = 10  # store every TAU_THIN-th tau vector; the estimate needs none


@dataclass(frozen=True)
class GibbsConfig:
    """Sampler settings: M total sweeps, M0 burn-in, seeded stream.

    ``beta`` and ``sigma2`` are treated as known during sampling; leave
    them None to take both from the initializing SS-ML result.
    """

    M: int = 1500
    M0: int = 500
    seed: RngHandle | None = None
    beta: float | None = None
    sigma2: float | None = None
    rate_convention: str = "half"

    def __post_init__(self):
        if self.M < 1 or self.M0 < 1 or self.M0 >= self.M:
            raise ConfigError(
                f"need 1 <= M0 < M, got M={self.M}, M0={self.M0}"
            )
        if self.rate_convention not in RATE_CONVENTIONS:
            raise ConfigError(
                f"rate_convention must be one of {RATE_CONVENTIONS}, "
                f"got {self.rate_convention!r}"
            )


@dataclass(frozen=True)
class QuantileReport:
    """Split-half quantile stability check over the post-burn-in chain.

    ``quantiles``    (n, 3): 0.25/0.5/0.75 empirical quantiles of each g
                     coordinate over the post-burn-in samples.
    ``discrepancy``  (n, 3): |first-half - second-half| quantile gap,
                     normalized by the coordinate's post-burn-in IQR.
    ``flagged``      (n,) bool: any normalized gap above the threshold.
    """

    quantiles: np.ndarray
    discrepancy: np.ndarray
    flagged: np.ndarray
    threshold: float = QUANTILE_FLAG_THRESHOLD

    @property
    def flagged_count(self) -> int:
        return int(np.count_nonzero(self.flagged))


@dataclass(frozen=True)
class GibbsChain:
    """Stored draws of one chain: g (M x n), lambda (M,), thinned tau.

    ``burn_in`` marks M0: the estimate averages 1-based sweeps
    M0..M, i.e. rows burn_in - 1 onward.
    """

    g_samples: np.ndarray
    lambda_samples: np.ndarray
    tau_samples: np.ndarray | None
    burn_in: int
    diagnostics: "QuantileReport | None" = None

    def post_burn_in(self) -> np.ndarray:
        return self.g_samples[self.burn_in - 1 :]


def conditional_tau(
    g: np.ndarray,
    dataset: Dataset,
    U: np.ndarray,
    sigma2: float,
    rng,
) -> np.ndarray:
    """Draw all N noise variances from their GIG full conditionals.

    Coordinates are conditionally independent: tau_i depends on the state
    only through the i-th residual y_i - U_i g.
    """
    if not (sigma2 > 0 and np.isfinite(sigma2)):
        raise ConfigError(f"sigma2 must be positive, got {sigma2}")
    r = dataset.y - np.asarray(U, dtype=float) @ np.asarray(g, dtype=float)
    return sample_gig_half(2.0 / sigma2, r * r, rng)


def _draw_lambda(
    quad: float,
    n: int,
    gen: np.random.Generator,
    convention: str,
    rate_floor: float,
) -> float:
    rate = quad / 2.0 if convention == "half" else quad
    if rate < rate_floor:
        warnings.warn(
            f"lambda conditional rate {rate:.3g} floored to {rate_floor:.3g} "
            "(near-zero g'K^{-1}g)",
            IllConditionedWarning,
        )
        rate = rate_floor
    x = sample_gamma(n / 2.0 + 1.0, rate, gen)
    return 1.0 / float(x)


def conditional_lambda(g: np.ndarray, K, rng, rate_convention: str = "half") -> float:
    """Draw lambda by sampling lambda^{-1} ~ Gamma(n/2 + 1, rate).

    ``rate_convention="half"`` uses rate g'K^{-1}g / 2 (flat prior on
    lambda^{-1}); "literal" uses rate g'K^{-1}g.
    """
    if rate_convention not in RATE_CONVENTIONS:
        raise ConfigError(f"unknown rate convention {rate_convention!r}")
    gv = np.asarray(g, dtype=float)
    quad = kernel_quadratic_form(K, gv)
    floor = LAMBDA_RATE_FLOOR_FACTOR * float(np.trace(_kernel_array(K)))
    return _draw_lambda(quad, gv.size, as_generator(rng), rate_convention, floor)


def conditional_g_moments(
    lam: float,
    tau: np.ndarray,
    K,
    U: np.ndarray,
    y: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance factor of the Gaussian g conditional.

    Equals the posterior of g under noise covariance D = diag(tau):
    mean lam K U' (lam U K U' + D)^{-1} y, covariance
    lam K - lam^2 K U' (lam U K U' + D)^{-1} U K, both evaluated through
    the information form.
    """
    Karr = K.K if hasattr(K, "K") else np.asarray(K, dtype=float)
    L_K = kernel_factor(Karr)
    return posterior_moments(lam, L_K, U, y, tau)


def conditional_g(
    lam: float,
    tau: np.ndarray,
    K,
    U: np.ndarray,
    y: np.ndarray,
    rng,
) -> np.ndarray:
    """Draw g from its Gaussian full conditional given (lambda, tau)."""
    if not (lam > 0 and np.isfinite(lam)):
        raise ConfigError(f"conditional_g requires lambda > 0, got {lam}")
    mean, F = conditional_g_moments(lam, tau, K, U, y)
    return sample_mvn(mean, F, rng)


def run_gibbs(
    dataset: Dataset,
    n: int,
    order: KernelOrder,
    config: GibbsConfig,
    init: SsmlResult,
    fix_tau: float | None = None,
) -> tuple[np.ndarray, GibbsChain]:
    """Run the full sampler and return (g_hat, chain).

    ``init`` supplies the starting point (g0 = SS-ML estimate, lambda0 =
    fitted lambda) and, unless overridden in ``config``, the fixed beta
    and sigma2.  The estimate is the mean of the g draws from sweep M0
    through M inclusive.

    ``fix_tau`` is a test hook: when set, every tau update is replaced by
    the constant vector fix_tau * ones, which reduces the model to the
    Gaussian-noise posterior with lambda marginalized.
    """
    if config.seed is None:
        raise ConfigError("GibbsConfig.seed must be set to run the sampler")
    order = KernelOrder.parse(order)
    beta = config.beta if config.beta is not None else init.hyper.beta
    sigma2 = config.sigma2 if config.sigma2 is not None else init.hyper.sigma2
    if not (sigma2 > 0 and np.isfinite(sigma2)):
        raise ConfigError(f"sigma2 must be positive, got {sigma2}")

    N = dataset.N
    U = build_regressor(dataset.u, N, n)
    K = build_kernel(KernelSpec(order, beta, n))
    L_K = kernel_factor(K)
    rate_floor = LAMBDA_RATE_FLOOR_FACTOR * float(np.trace(K.K))
    gen = as_generator(config.seed)

    g = np.asarray(init.g_hat, dtype=float).copy()
    if g.shape != (n,):
        raise ConfigError(
            f"init.g_hat must have length n={n}, got shape {g.shape}"
        )
    a_gig = 2.0 / sigma2

    M, M0 = config.M, config.M0
    g_samples = np.empty((M, n))
    lambda_samples = np.empty(M)
    tau_stored = []
    fixed_tau = None if fix_tau is None else np.full(N, float(fix_tau))

    for k in range(1, M + 1):
        if fixed_tau is not None:
            tau = fixed_tau
        else:
            r = dataset.y - U @ g
            tau = sample_gig_half(a_gig, r * r, gen)
            if np.any(tau <= 0) or not np.all(np.isfinite(tau)):
                raise NumericError(
                    f"non-positive/non-finite tau at sweep {k}",
                    context="gibbs.conditional_tau",
                )

        w = solve_triangular(L_K, g, lower=True)
        lam = _draw_lambda(float(w @ w), n, gen, config.rate_convention, rate_floor)
        if not (lam > 0 and np.isfinite(lam)):
            raise NumericError(
                f"non-positive/non-finite lambda at sweep {k}",
                context="gibbs.conditional_lambda",
            )

        mean, F = posterior_moments(lam, L_K, U, dataset.y, tau)
        g = sample_mvn(mean, F, gen)
        if not np.all(np.isfinite(g)):
            raise NumericError(
                f"non-finite g draw at sweep {k}",
                context="gibbs.conditional_g",
            )

        g_samples[k - 1] = g
        lambda_samples[k - 1] = lam
        if k % TAU_THIN == 0:
            tau_stored.append(tau.copy())

    chain = GibbsChain(
        g_samples=g_samples,
        lambda_samples=lambda_samples,
        tau_samples=np.array(tau_stored) if tau_stored else None,
        burn_in=M0,
    )
    if M - M0 >= 100:
        chain = GibbsChain(
            g_samples=chain.g_samples,
            lambda_samples=chain.lambda_samples,
            tau_samples=chain.tau_samples,
            burn_in=M0,
            diagnostics=quantile_diagnostics(chain),
        )
    g_hat = chain.post_burn_in().mean(axis=0)
    return g_hat, chain


def quantile_diagnostics(chain: GibbsChain) -> QuantileReport:
    """Split-half quantile stability report for every g coordinate.

    The post-burn-in samples are split into two halves; the 0.25/0.5/0.75
    quantile gaps between halves, normalized by the full post-burn-in IQR
    (floored at IQR_FLOOR_FACTOR times the sample range to avoid 0/0),
    flag coordinates above QUANTILE_FLAG_THRESHOLD.
    """
    post = chain.post_burn_in()
    if post.shape[0] < 100:
        raise ConfigError(
            f"need at least 100 post-burn-in samples, got {post.shape[0]}"
        )
    half = post.shape[0] // 2
    first, second = post[:half], post[half : 2 * half]
    qs = np.quantile(post, DIAG_QUANTILES, axis=0).T       # (n, 3)
    q1 = np.quantile(first, DIAG_QUANTILES, axis=0).T
    q2 = np.quantile(second, DIAG_QUANTILES, axis=0).T
    gap = np.abs(q1 - q2)
    iqr = qs[:, 2] - qs[:, 0]
    rng_span = post.max(axis=0) - post.min(axis=0)
    denom = np.maximum(iqr, IQR_FLOOR_FACTOR * rng_span)
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(gap == 0.0, 0.0, gap / denom[:, None])
    flagged = np.any(normalized > QUANTILE_FLAG_THRESHOLD, axis=1)
    return QuantileReport(quantiles=qs, discrepancy=normalized, flagged=flagged)
