"""Random-system Monte Carlo harness comparing the two estimators.

Each run draws a random stable transfer function (30 zeros, 30 poles
inside radius 0.95, unit delay), truncates its impulse response at n,
excites it with white or low-pass-filtered noise, corrupts the output
with two-component Gaussian mixture noise, and scores both estimators
with the percent-fit metric.  Runs are seed-isolated: run i consumes the
same sub-streams no matter how many runs the experiment contains.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import RngHandle, as_generator, sample_noise_mixture
from .errors import ConfigError, NumericError
from .gibbs import GibbsConfig, run_gibbs
from .kernels import KernelOrder
from .model import Dataset, build_regressor, fit_score
from .ssml import run_ssml

__all__ = [
    "InputKind",
    "TransferFunction",
    "ExperimentConfig",
    "RunResult",
    "generate_system",
    "impulse_response",
    "generate_input",
    "run_experiment",
    "summarize",
]

POLE_RADIUS = 0.95
POLE_MAG_MIN = 0.4          # avoids trivially short responses
N_PAIRS = 15                # 15 conjugate pairs = 30 roots each
LP_POLE_RANGE = (0.75, 0.95)
INSTABILITY_LIMIT = 1e6
MAX_FAILURE_FRACTION = 0.2


class InputKind(str, enum.Enum):
    WN = "wn"
    LP = "lp"

    @classmethod
    def parse(cls, value) -> "InputKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown input kind {value!r} (expected 'wn' or 'lp')"
            ) from None


@dataclass(frozen=True)
class TransferFunction:
    """Rational system G = gain * z^{-delay} B(z^{-1}) / A(z^{-1}).

    Zeros/poles are the roots of B/A; both sets are closed under complex
    conjugation and all poles lie strictly inside radius 0.95.
    """

    zeros: np.ndarray
    poles: np.ndarray
    gain: float
    delay: int = 1

    def __post_init__(self):
        z = np.array(self.zeros, dtype=complex)
        p = np.array(self.poles, dtype=complex)
        if p.size and np.max(np.abs(p)) >= POLE_RADIUS:
            raise ConfigError(
                f"poles must satisfy |p| < {POLE_RADIUS}, got max {np.max(np.abs(p)):.4f}"
            )
        if self.delay < 1:
            raise ConfigError(f"delay must be >= 1, got {self.delay}")
        for roots, name in ((z, "zeros"), (p, "poles")):
            coeffs = np.poly(roots) if roots.size else np.array([1.0])
            if np.max(np.abs(coeffs.imag)) > 1e-9 * max(1.0, np.max(np.abs(coeffs))):
                raise ConfigError(f"{name} are not closed under conjugation")
        z.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "zeros", z)
        object.__setattr__(self, "poles", p)


def _conjugate_pairs(mags: np.ndarray, angles: np.ndarray) -> np.ndarray:
    roots = mags * np.exp(1j * angles)
    return np.concatenate([roots, np.conj(roots)])


def _polynomials(tf: TransferFunction) -> tuple[np.ndarray, np.ndarray]:
    """Real coefficient arrays of B and A in ascending powers of z^{-1}."""
    b = np.poly(tf.zeros).real if tf.zeros.size else np.array([1.0])
    a = np.poly(tf.poles).real if tf.poles.size else np.array([1.0])
    return b, a


def _impulse_recursion(b: np.ndarray, a: np.ndarray, n: int) -> np.ndarray:
    """First n response samples of B/A via the direct difference equation."""
    h = np.zeros(n)
    for t in range(n):
        acc = b[t] if t < b.size else 0.0
        jmax = min(t, a.size - 1)
        if jmax >= 1:
            acc -= a[1 : jmax + 1] @ h[t - 1 :: -1][:jmax]
        h[t] = acc
        if abs(h[t]) > INSTABILITY_LIMIT:
            raise NumericError(
                f"response sample {t + 1} exceeds {INSTABILITY_LIMIT:g} before scaling",
                context="benchmark.impulse_response",
            )
    return h


def generate_system(rng, n: int = 50) -> TransferFunction:
    """Draw a random stable system and scale it to a unit-norm response.

    15 conjugate pole pairs (magnitude U(0.4, 0.95), angle U(0, pi)) and
    15 conjugate zero pairs (magnitude U(0, 0.95), angle U(0, pi)); the
    gain normalizes the length-n truncated impulse response to unit
    Euclidean norm.
    """
    gen = as_generator(rng)
    pole_mags = gen.uniform(POLE_MAG_MIN, POLE_RADIUS, N_PAIRS)
    pole_angles = gen.uniform(0.0, np.pi, N_PAIRS)
    zero_mags = gen.uniform(0.0, POLE_RADIUS, N_PAIRS)
    zero_angles = gen.uniform(0.0, np.pi, N_PAIRS)
    tf = TransferFunction(
        zeros=_conjugate_pairs(zero_mags, zero_angles),
        poles=_conjugate_pairs(pole_mags, pole_angles),
        gain=1.0,
    )
    b, a = _polynomials(tf)
    h = _impulse_recursion(b, a, n)
    norm = float(np.linalg.norm(h))
    if norm == 0.0:
        raise NumericError(
            "generated system has an identically zero truncated response",
            context="benchmark.generate_system",
        )
    return replace(tf, gain=1.0 / norm)


def impulse_response(tf: TransferFunction, n: int) -> np.ndarray:
    """First n samples after the unit delay: g(k) = gain * h(k-1), where h
    is the recursion response of B/A.  The instability guard applies to
    the unscaled recursion."""
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    if tf.delay != 1:
        raise ConfigError("only unit input-output delay is supported")
    b, a = _polynomials(tf)
    return tf.gain * _impulse_recursion(b, a, n)


def generate_input(kind, N: int, rng) -> np.ndarray:
    """White-noise input, or white noise through a random low-pass filter.

    LP: second-order all-pole filter with a double real pole at
    rho ~ U(0.75, 0.95) and unit DC gain.
    """
    if N < 1:
        raise ConfigError(f"N must be positive, got {N}")
    kind = InputKind.parse(kind)
    gen = as_generator(rng)
    if kind is InputKind.WN:
        return gen.standard_normal(N)
    rho = gen.uniform(*LP_POLE_RANGE)
    e = gen.standard_normal(N)
    return lowpass_filter(e, rho)


def lowpass_filter(e: np.ndarray, rho: float) -> np.ndarray:
    """x(t) = 2 rho x(t-1) - rho^2 x(t-2) + (1-rho)^2 e(t), zero initial state."""
    from scipy.signal import lfilter

    return lfilter([(1.0 - rho) ** 2], [1.0, -2.0 * rho, rho**2], e)


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte Carlo protocol settings (desk-scale defaults)."""

    runs: int = 20
    N: int = 200
    input_kind: InputKind = InputKind.WN
    n: int = 50
    c1: float = 0.7
    variance_ratio: float = 100.0
    snr_divisor: float = 100.0
    order: KernelOrder = KernelOrder.FIRST
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "input_kind", InputKind.parse(self.input_kind))
        object.__setattr__(self, "order", KernelOrder.parse(self.order))
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not (0.0 <= self.c1 <= 1.0):
            raise ConfigError(f"c1 must lie in [0, 1], got {self.c1}")
        if self.N <= self.n:
            raise ConfigError(f"need N > n, got N={self.N}, n={self.n}")
        if not (self.variance_ratio > 0 and self.snr_divisor > 0):
            raise ConfigError("variance_ratio and snr_divisor must be positive")

    @property
    def c2(self) -> float:
        return 1.0 - self.c1


@dataclass(frozen=True)
class RunResult:
    run_index: int
    fit_ssml: float
    fit_ssgs: float
    sigma2: float           # noise variance used by the estimators
    beta_hat: float
    warnings: tuple = ()


def _single_run(config: ExperimentConfig, run_index: int) -> RunResult:
    handle = RngHandle(config.master_seed, stream=run_index)
    tf = generate_system(handle.child(0), n=config.n)
    g_true = impulse_response(tf, config.n)
    u = generate_input(config.input_kind, config.N, handle.child(1))
    U = build_regressor(u, config.N, config.n)
    y0 = U @ g_true
    var0 = float(np.var(y0))
    if var0 <= 0.0:
        raise NumericError(
            "noiseless output has zero variance", context="benchmark.run"
        )
    sigma2_true = var0 / config.snr_divisor
    v = sample_noise_mixture(
        config.N, sigma2_true, config.c1, config.variance_ratio, handle.child(2)
    )
    dataset = Dataset(u, y0 + v)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ssml = run_ssml(dataset, config.n, config.order)
        gibbs_cfg = replace(config.gibbs, seed=handle.child(3))
        g_gs, _chain = run_gibbs(dataset, config.n, config.order, gibbs_cfg, ssml)

    return RunResult(
        run_index=run_index,
        fit_ssml=fit_score(g_true, ssml.g_hat),
        fit_ssgs=fit_score(g_true, g_gs),
        sigma2=ssml.hyper.sigma2,
        beta_hat=ssml.hyper.beta,
        warnings=tuple(str(w.message) for w in caught),
    )


def _five_number(values: np.ndarray) -> dict:
    q = np.percentile(values, [0, 25, 50, 75, 100])
    return {
        "min": float(q[0]),
        "q1": float(q[1]),
        "median": float(q[2]),
        "q3": float(q[3]),
        "max": float(q[4]),
    }


def summarize(results: list[RunResult]) -> dict:
    """Five-number FIT statistics per estimator plus the pairwise win rate."""
    if not results:
        raise ConfigError("cannot summarize an empty result list")
    ssml = np.array([r.fit_ssml for r in results])
    ssgs = np.array([r.fit_ssgs for r in results])
    return {
        "n_completed": len(results),
        "fit_ssml": _five_number(ssml),
        "fit_ssgs": _five_number(ssgs),
        "win_rate_ssgs": float(np.mean(ssgs > ssml)),
    }


def run_experiment(
    config: ExperimentConfig,
    progress=None,
) -> tuple[list[RunResult], dict]:
    """Execute all runs and return (results, summary).

    Individual run failures are recorded with their reason and excluded
    from the summary; more than MAX_FAILURE_FRACTION of the runs failing
    aborts the experiment.  ``progress`` (if given) is called as
    progress(run_index, result_or_None) after each run.
    """
    results: list[RunResult] = []
    failures: list[dict] = []
    for i in range(config.runs):
        try:
            res = _single_run(config, i)
            results.append(res)
        except (NumericError, ConfigError, np.linalg.LinAlgError) as exc:
            failures.append({"run_index": i, "reason": str(exc)})
            res = None
        if progress is not None:
            progress(i, res)
    if len(failures) > MAX_FAILURE_FRACTION * config.runs:
        raise NumericError(
            f"{len(failures)}/{config.runs} runs failed "
            f"(limit {MAX_FAILURE_FRACTION:.0%}); first: {failures[0]['reason']}",
            context="benchmark.run_experiment",
        )
    if not results:
        raise NumericError(
            "no runs completed", context="benchmark.run_experiment"
        )
    summary = summarize(results)
    summary["failures"] = failures
    summary["n_failed"] = len(failures)
    summary["runs_requested"] = config.runs
    return results, summary
