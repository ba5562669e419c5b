"""Seeded random sampling and density oracles for the Gibbs machinery.

All samplers draw from a counter-based Philox bitstream addressed by an
(seed, stream) pair, so independent Monte Carlo runs get provably
non-overlapping streams and identical handles reproduce identical draws
bit for bit.

The generalized inverse Gaussian sampler only covers the p = 1/2 case
(the per-sample noise-variance conditional) and its b -> 0 Gamma limit;
nothing more general is needed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "RngHandle",
    "as_generator",
    "sample_gamma",
    "sample_gig_half",
    "gig_pdf_half",
    "sample_mvn",
    "sample_laplace",
    "sample_noise_mixture",
    "GIG_B_FLOOR_FACTOR",
]

# b below GIG_B_FLOOR_FACTOR * (2/a) switches the GIG(a, b, 1/2) draw to its
# exact b -> 0 limit, Gamma(shape 1/2, rate a/2).  b is a squared residual,
# so the floor triggers on (near-)interpolated data points.
GIG_B_FLOOR_FACTOR = 1e-12


@dataclass(frozen=True)
class RngHandle:
    """Addressable, reproducible random stream.

    Identical (seed, stream, path) always reproduce identical draw
    sequences.  ``child(k)`` derives an independent sub-stream, used to
    give every purpose inside a benchmark run (system, input, noise,
    sampler) its own lane.
    """

    seed: int
    stream: int = 0
    path: tuple = field(default=())

    def __post_init__(self):
        if int(self.seed) < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream", int(self.stream))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngHandle":
        return RngHandle(self.seed, self.stream, (*self.path, int(index)))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngHandle (fresh stream) or a live numpy Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngHandle):
        return rng.generator()
    raise ConfigError(f"expected RngHandle or numpy Generator, got {type(rng)!r}")


def sample_gamma(shape: float, rate: float, rng, size=None):
    """Gamma draw(s) with mean shape/rate and variance shape/rate^2."""
    if not (shape > 0 and np.isfinite(shape)):
        raise ConfigError(f"gamma shape must be positive, got {shape}")
    if not (rate > 0 and np.isfinite(rate)):
        raise ConfigError(f"gamma rate must be positive, got {rate}")
    gen = as_generator(rng)
    return gen.gamma(shape, scale=1.0 / rate, size=size)


def _inverse_gaussian(mu, lam: float, gen: np.random.Generator, size):
    """Michael-Schucany-Haas transform with root selection.

    The smaller root is evaluated in the cancellation-free form
    mu / (1 + w + sqrt(w(w+2))) with w = mu*y/(2*lam), which stays
    accurate for large mu (tiny b in the GIG use below).
    """
    y = gen.standard_normal(size) ** 2
    w = mu * y / (2.0 * lam)
    x_small = mu / (1.0 + w + np.sqrt(w * (w + 2.0)))
    u = gen.uniform(size=size)
    return np.where(u <= mu / (mu + x_small), x_small, mu * mu / x_small)


def sample_gig_half(a: float, b, rng, size=None):
    """Draw from GIG(a, b, p=1/2), density proportional to
    tau^{-1/2} exp(-(a*tau + b/tau)/2) on tau > 0.

    If X is inverse Gaussian with mean sqrt(a/b) and shape a, then 1/X has
    exactly this law; below the degeneracy floor the b -> 0 limit
    Gamma(1/2, a/2) is drawn instead.  ``b`` may be an array, in which
    case one draw per entry is returned.

    Parameters
    ----------
    a : float
        Rate-like parameter, > 0.
    b : float or array_like
        Nonnegative parameter(s); squared residuals in the sampler.
    """
    if not (a > 0 and np.isfinite(a)):
        raise ConfigError(f"GIG parameter a must be positive, got {a}")
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < 0) or not np.all(np.isfinite(b_arr)):
        raise ConfigError("GIG parameter b must be finite and >= 0")
    if size is not None and b_arr.ndim != 0:
        raise ConfigError("size may only be given with scalar b")
    gen = as_generator(rng)

    scalar = b_arr.ndim == 0 and size is None
    shape = b_arr.shape if b_arr.ndim else ((size,) if size is not None else (1,))
    b_full = np.broadcast_to(b_arr, shape)
    out = np.empty(shape, dtype=float)

    floor = GIG_B_FLOOR_FACTOR * (2.0 / a)
    low = b_full < floor
    n_low = int(low.sum())
    if n_low:
        out[low] = gen.gamma(0.5, scale=2.0 / a, size=n_low)
    if n_low < b_full.size:
        bb = b_full[~low]
        mu = np.sqrt(a / bb)
        out[~low] = 1.0 / _inverse_gaussian(mu, a, gen, bb.shape)
    return float(out[0]) if scalar else out


def gig_pdf_half(tau, a: float, b: float):
    """Normalized GIG(a, b, 1/2) density; a density/test oracle, not a
    sampling path.

    Uses the closed form K_{1/2}(z) = sqrt(pi/2) e^{-z} z^{-1/2} for the
    modified Bessel normalizer (a/b)^{p/2} / (2 K_p(sqrt(ab))).
    """
    if not (a > 0 and np.isfinite(a)):
        raise ConfigError(f"GIG parameter a must be positive, got {a}")
    if not (b > 0 and np.isfinite(b)):
        raise ConfigError(f"gig_pdf_half requires b > 0, got {b}")
    t = np.asarray(tau, dtype=float)
    if np.any(t <= 0):
        raise ConfigError("tau must be positive")
    z = np.sqrt(a * b)
    k_half = np.sqrt(np.pi / 2.0) * np.exp(-z) / np.sqrt(z)
    norm = (a / b) ** 0.25 / (2.0 * k_half)
    return norm * t ** (-0.5) * np.exp(-0.5 * (a * t + b / t))


def sample_mvn(mean, cov_factor, rng) -> np.ndarray:
    """mean + L z with z i.i.d. standard normal; draw covariance is L L^T."""
    m = np.asarray(mean, dtype=float)
    L = np.asarray(cov_factor, dtype=float)
    if m.ndim != 1 or L.ndim != 2 or L.shape != (m.size, m.size):
        raise ConfigError(
            f"dimension mismatch: mean {m.shape}, cov_factor {L.shape}"
        )
    gen = as_generator(rng)
    z = gen.standard_normal(m.size)
    return m + L @ z


def sample_laplace(sigma2: float, rng, size=None):
    """Zero-mean Laplace draw(s) with density (1/(sqrt(2) sigma)) e^{-sqrt(2)|v|/sigma}.

    The scale is chosen so the variance equals sigma2 exactly.
    """
    if not (sigma2 > 0 and np.isfinite(sigma2)):
        raise ConfigError(f"sigma2 must be positive, got {sigma2}")
    gen = as_generator(rng)
    return gen.laplace(0.0, np.sqrt(sigma2 / 2.0), size=size)


def sample_noise_mixture(
    N: int,
    sigma2: float,
    c1: float,
    variance_ratio: float,
    rng,
    return_outlier_mask: bool = False,
):
    """Two-component Gaussian mixture noise: N(0, sigma2) with probability
    c1, else N(0, variance_ratio * sigma2), independently per sample.

    With ``return_outlier_mask=True`` also returns the boolean mask of
    high-variance draws (used for audit metadata).
    """
    if N < 1:
        raise ConfigError(f"N must be positive, got {N}")
    if not (0.0 <= c1 <= 1.0):
        raise ConfigError(f"c1 must lie in [0, 1], got {c1}")
    if not (sigma2 > 0 and np.isfinite(sigma2)):
        raise ConfigError(f"sigma2 must be positive, got {sigma2}")
    if not (variance_ratio > 0 and np.isfinite(variance_ratio)):
        raise ConfigError(f"variance_ratio must be positive, got {variance_ratio}")
    gen = as_generator(rng)
    z = gen.standard_normal(N)
    outlier = gen.uniform(size=N) >= c1
    scale = np.where(outlier, np.sqrt(variance_ratio * sigma2), np.sqrt(sigma2))
    v = z * scale
    if return_outlier_mask:
        return v, outlier
    return v
