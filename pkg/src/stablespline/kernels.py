"""Stable spline kernel construction and factorization utilities.

Two kernel families are provided, both parameterized by a decay rate
``beta`` in [0, 1) and indexed 1-based in the defining formulas (mapped to
0-based storage internally):

* first order (TC):   K[i, j] = beta^max(i, j)
* second order:       K[i, j] = beta^(i+j) * beta^max(i, j) / 2
                                - beta^(3 max(i, j)) / 6

The second-order matrix is near-singular for small beta and large n, so
every factorization goes through a trace-scaled jitter ladder rather than
a bare Cholesky.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, NumericError

__all__ = [
    "KernelOrder",
    "KernelSpec",
    "KernelMatrix",
    "build_kernel",
    "kernel_factor",
    "kernel_quadratic_form",
]

# Jitter ladder: start at JITTER_BASE * trace(K)/n, multiply by 10 until
# Cholesky succeeds or JITTER_MAX * trace(K)/n is exceeded.
JITTER_BASE = 1e-12
JITTER_MAX = 1e-6


class KernelOrder(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"

    @classmethod
    def parse(cls, value) -> "KernelOrder":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown kernel order {value!r} (expected 'first' or 'second')"
            ) from None


@dataclass(frozen=True)
class KernelSpec:
    order: KernelOrder
    beta: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "order", KernelOrder.parse(self.order))
        if not (0.0 <= self.beta < 1.0):
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")


@dataclass(frozen=True)
class KernelMatrix:
    """Realized n x n covariance together with the spec that produced it."""

    K: np.ndarray
    spec: KernelSpec

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        K.flags.writeable = False
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.spec.n


def build_kernel(spec: KernelSpec) -> KernelMatrix:
    """Evaluate the stable spline kernel matrix for ``spec``.

    Symmetry is exact by construction: entries (i, j) and (j, i) are
    produced from identical integer index arrays.
    """
    idx = np.arange(1, spec.n + 1)
    m = np.maximum.outer(idx, idx)
    beta = spec.beta
    if spec.order is KernelOrder.FIRST:
        K = np.float_power(beta, m)
    else:
        s = np.add.outer(idx, idx)
        K = np.float_power(beta, s + m) / 2.0 - np.float_power(beta, 3 * m) / 6.0
    return KernelMatrix(K=K, spec=spec)


def _kernel_array(K) -> np.ndarray:
    if isinstance(K, KernelMatrix):
        return K.K
    A = np.asarray(K, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"kernel matrix must be square, got shape {A.shape}")
    return A


def kernel_factor(K) -> np.ndarray:
    """Lower-triangular L with L L^T = K + eps*I, eps from the jitter ladder.

    Raises NumericError once eps would exceed JITTER_MAX * trace(K)/n,
    which signals a degenerate kernel (e.g. beta = 0).
    """
    A = _kernel_array(K)
    n = A.shape[0]
    scale = float(np.trace(A)) / n
    if not (scale > 0 and np.isfinite(scale)):
        raise NumericError(
            f"kernel trace {scale * n:g} is not positive; cannot factor",
            context="kernels.kernel_factor",
        )
    eps = JITTER_BASE * scale
    eps_max = JITTER_MAX * scale
    eye = np.eye(n)
    while True:
        try:
            return np.linalg.cholesky(A + eps * eye)
        except np.linalg.LinAlgError:
            eps *= 10.0
            if eps > eps_max:
                raise NumericError(
                    f"Cholesky failed up to jitter {eps_max:g}",
                    context="kernels.kernel_factor",
                ) from None


def kernel_quadratic_form(K, g) -> float:
    """g^T K^{-1} g via the jittered Cholesky factor and a triangular solve.

    Never forms an explicit inverse; the result is nonnegative by
    construction (it is a squared norm of the whitened vector).
    """
    A = _kernel_array(K)
    gv = np.asarray(g, dtype=float)
    if gv.ndim != 1 or gv.size != A.shape[0]:
        raise ConfigError(
            f"g must be a vector of length {A.shape[0]}, got shape {gv.shape}"
        )
    L = kernel_factor(A)
    w = solve_triangular(L, gv, lower=True)
    return float(w @ w)
