"""Seedable heavy-tailed noise and covariate samplers with declared moments.

Each noise family declares the supremum of finite absolute moment orders
(`declared_m`), which downstream rate formulas consume.  The symmetric
Pareto family is parameterized so that its conditional moment bound
constant v_m is available in closed form for m < alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .rng import RngStream

NOISE_FAMILIES = ("Gaussian", "StudentT", "SymmetricPareto", "Cauchy")
COVARIATE_FAMILIES = ("UniformCube", "Gaussian")


class ParameterError(ValueError):
    pass


class MomentError(ValueError):
    """Raised when a moment-requiring code path gets declared_m <= threshold."""


def _declared_m(family: str, tail_param: float) -> float:
    if family == "Gaussian":
        return math.inf
    if family == "StudentT":
        return tail_param  # sup, not attained
    if family == "SymmetricPareto":
        return tail_param  # sup, not attained
    if family == "Cauchy":
        return 1.0  # sup, not attained: no finite first moment
    raise ParameterError(f"unknown noise family {family!r}")


@dataclass(frozen=True)
class NoiseSpec:
    family: str
    scale: float = 1.0
    tail_param: float = 0.0  # nu for StudentT, alpha for SymmetricPareto
    declared_m: float = field(init=False)

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ParameterError(f"unknown noise family {self.family!r}")
        if self.scale < 0:
            raise ParameterError("scale must be >= 0")
        if self.family in ("StudentT", "SymmetricPareto") and self.tail_param <= 0:
            raise ParameterError("tail_param must be > 0")
        object.__setattr__(self, "declared_m", _declared_m(self.family, self.tail_param))

    def usable_m(self, margin: float = 0.05) -> float:
        """A moment order safely below declared_m for rate formulas.

        declared_m is a supremum that the heavy-tailed families do not
        attain, so theorem inputs back off by a small margin.
        """
        if self.declared_m == math.inf:
            return math.inf
        m = self.declared_m - margin
        if m <= 1.0:
            raise MomentError(
                f"{self.family} noise has declared_m={self.declared_m}; "
                "no moment order m > 1 is available"
            )
        return m

    def require_moments(self, threshold: float = 1.0) -> None:
        if self.declared_m <= threshold:
            raise MomentError(
                f"{self.family} noise declares sup moment {self.declared_m} <= {threshold}"
            )

    def moment(self, m: float) -> float:
        """E|xi|^m in closed form; requires m < declared_m."""
        if m <= 0:
            raise ParameterError("moment order must be positive")
        if m >= self.declared_m:
            return math.inf
        c = self.scale
        if self.family == "Gaussian":
            return c**m * 2 ** (m / 2) * special.gamma((m + 1) / 2) / math.sqrt(math.pi)
        if self.family == "StudentT":
            nu = self.tail_param
            return (
                c**m
                * nu ** (m / 2)
                * special.gamma((m + 1) / 2)
                * special.gamma((nu - m) / 2)
                / (math.sqrt(math.pi) * special.gamma(nu / 2))
            )
        if self.family == "SymmetricPareto":
            # |xi|/c = U^{-1/alpha} - 1 with U uniform; E[t^m] = alpha*B(m+1, alpha-m)
            a = self.tail_param
            return c**m * a * special.beta(m + 1, a - m)
        raise MomentError("Cauchy has no finite moments of order >= 1")

    def moment_mc(self, m: float, n: int = 1_000_000, seed: int = 20_240_601) -> float:
        """Monte-Carlo estimate of E|xi|^m, the cross-check for `moment`."""
        xs = sample_noise(self, RngStream(seed, 0), n)
        return float(np.mean(np.abs(xs) ** m))


@dataclass(frozen=True)
class CovariateSpec:
    dim: int
    family: str = "UniformCube"
    support_note: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        if self.family not in COVARIATE_FAMILIES:
            raise ParameterError(f"unknown covariate family {self.family!r}")


def sample_noise(spec: NoiseSpec, stream: RngStream, n: int, negate: bool = False) -> np.ndarray:
    """Draw n i.i.d. noise values.

    All families are generated as sign * magnitude from a uniform sign
    driver, so flipping that driver (negate=True) negates the sample
    exactly.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = stream.generator()
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    if negate:
        sign = -sign
    if spec.family == "Gaussian":
        mag = np.abs(rng.standard_normal(n)) * spec.scale
    elif spec.family == "StudentT":
        mag = np.abs(rng.standard_t(spec.tail_param, size=n)) * spec.scale
    elif spec.family == "Cauchy":
        mag = np.abs(rng.standard_cauchy(n)) * spec.scale
    elif spec.family == "SymmetricPareto":
        u = rng.random(n)
        mag = spec.scale * (u ** (-1.0 / spec.tail_param) - 1.0)
    else:  # pragma: no cover - guarded in __post_init__
        raise ParameterError(spec.family)
    return sign * mag


def sample_covariates(spec: CovariateSpec, stream: RngStream, n: int) -> np.ndarray:
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = stream.generator()
    if spec.family == "UniformCube":
        return rng.random((n, spec.dim))
    return rng.standard_normal((n, spec.dim))
