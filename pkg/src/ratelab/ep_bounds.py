"""Numeric evaluators for empirical-process maximal inequalities.

Includes the parametric covering-entropy model, greedy/exact empirical
covering estimators over finite dictionaries, a Monte-Carlo oracle for
the sup of the empirical process, and the two published maximal
inequalities evaluated verbatim (published constants 13.2043 / 15.0850
and 127.63/kappa / 104.37/kappa).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .noise import CovariateSpec, sample_covariates
from .rng import RngStream


class IntegrabilityError(ValueError):
    """Covering integral diverges at 0; retry with a smaller effective m."""


class NumericalError(RuntimeError):
    pass


def log_plus(z):
    """max(1, log z); the convention used by every entropy model here."""
    z = np.asarray(z, dtype=float)
    return np.maximum(1.0, np.log(np.maximum(z, 1e-300)))


@dataclass(frozen=True)
class EntropyModel:
    """Covering-entropy upper bound H(x) = D_F x^{-gamma} log_+(U_F/x)^{gamma'}."""

    D_F: float
    gamma: float = 0.0
    gamma_prime: float = 0.0
    U_F: float = 1.0

    def __post_init__(self):
        if self.D_F <= 0:
            raise ValueError("D_F must be positive")
        if self.gamma < 0 or self.gamma_prime < 0:
            raise ValueError("gamma and gamma_prime must be >= 0")
        if self.U_F <= 0:
            raise ValueError("U_F must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.D_F * x ** (-self.gamma) * log_plus(self.U_F / x) ** self.gamma_prime


@dataclass(frozen=True)
class TabulatedEntropy:
    """Empirically estimated entropy, interpolated in log-radius.

    Below the tabulated range the value is clamped at log of the
    dictionary size (the largest value a covering of a finite dictionary
    can reach); above it the last value is held.
    """

    radii: np.ndarray
    values: np.ndarray
    ceiling: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(np.log(np.maximum(x, 1e-300)), np.log(self.radii), self.values)
        out = np.where(x < self.radii[0], self.ceiling, out)
        return out


@dataclass
class BoundInputs:
    sigma: float
    kappa: float
    n: int
    entropy: Callable[[float], float]
    tail_expectation: Callable[[float], float]
    truncation_M: float | None = None  # fixes M instead of optimizing over a grid
    m_grid: np.ndarray | None = None

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass
class FiniteDictionary:
    """A small explicit function class on a 1-d (or product) domain.

    Members and envelope are vectorized callables; population means come
    from closed forms or high-precision quadrature supplied by the caller.
    """

    functions: Sequence[Callable[[np.ndarray], np.ndarray]]
    population_means: np.ndarray
    envelope: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if len(self.functions) > 64:
            raise ValueError("dictionary capped at 64 members for oracle tractability")
        self.population_means = np.asarray(self.population_means, dtype=float)
        if len(self.population_means) != len(self.functions):
            raise ValueError("one population mean per member required")

    def evaluate_all(self, x: np.ndarray) -> np.ndarray:
        """|F| x n matrix of member values on flattened 1-d inputs."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.stack([np.asarray(f(x), dtype=float) for f in self.functions])

    def check_envelope(self, grid_size: int = 10_000) -> bool:
        xs = np.linspace(self.support[0], self.support[1], grid_size)
        vals = np.abs(self.evaluate_all(xs))
        env = np.asarray(self.envelope(xs), dtype=float)
        return bool(np.all(vals <= env + 1e-12))

    def sup_lp_norm(self, p: float, grid_size: int = 20_000) -> float:
        """sup_f ||f||_{L^p(P)} on the uniform support, by Simpson quadrature."""
        xs = np.linspace(self.support[0], self.support[1], grid_size + 1)
        vals = np.abs(self.evaluate_all(xs)) ** p
        width = self.support[1] - self.support[0]
        means = integrate.simpson(vals, x=xs, axis=1) / width
        return float(np.max(means) ** (1.0 / p))

    def envelope_tail_map(self, grid_size: int = 20_000) -> Callable[[float], float]:
        """M -> E[F 1(F > M)] for the envelope, by deterministic quadrature."""
        xs = np.linspace(self.support[0], self.support[1], grid_size + 1)
        env = np.asarray(self.envelope(xs), dtype=float)
        width = self.support[1] - self.support[0]

        def tail(M: float) -> float:
            vals = np.where(env > M, env, 0.0)
            return float(integrate.simpson(vals, x=xs) / width)

        return tail


# ---------------------------------------------------------------------------
# Covering estimators
# ---------------------------------------------------------------------------


def _pairwise_lp(values: np.ndarray, kappa: float) -> np.ndarray:
    p = 1.0 + kappa
    diff = np.abs(values[:, None, :] - values[None, :, :]) ** p
    return np.mean(diff, axis=2) ** (1.0 / p)


def empirical_covering_number(values: np.ndarray, h: float, kappa: float) -> int:
    """Greedy L^{1+kappa}(P_n) covering count over rows of `values`.

    Upper-bounds the minimal covering number and certifies coverage: every
    row ends up within h of some chosen center.
    """
    if h <= 0:
        raise ValueError("radius h must be positive")
    values = np.asarray(values, dtype=float)
    dist = _pairwise_lp(values, kappa)
    n_fun = values.shape[0]
    covered = np.zeros(n_fun, dtype=bool)
    centers = []
    while not covered.all():
        i = int(np.argmin(covered))  # first uncovered
        centers.append(i)
        covered |= dist[i] <= h
    return len(centers)


def greedy_cover_certificate(values: np.ndarray, h: float, kappa: float) -> bool:
    """Re-verify post hoc that a greedy cover of radius h really covers."""
    values = np.asarray(values, dtype=float)
    dist = _pairwise_lp(values, kappa)
    covered = np.zeros(values.shape[0], dtype=bool)
    for i in range(values.shape[0]):
        if not covered[i]:
            covered |= dist[i] <= h
    return bool(covered.all())


def exact_covering_number(values: np.ndarray, h: float, kappa: float) -> int:
    """Minimal covering number by exhaustive subset search (|F| <= 10)."""
    values = np.asarray(values, dtype=float)
    n_fun = values.shape[0]
    if n_fun > 10:
        raise ValueError("exact cover oracle limited to 10 functions")
    dist = _pairwise_lp(values, kappa)
    balls = dist <= h
    for k in range(1, n_fun + 1):
        for centers in itertools.combinations(range(n_fun), k):
            if balls[list(centers)].any(axis=0).all():
                return k
    return n_fun  # unreachable: every point covers itself


def expected_entropy_estimate(
    dictionary: FiniteDictionary,
    covariate_spec: CovariateSpec,
    n: int,
    h: float,
    kappa: float,
    reps: int,
    stream: RngStream | None = None,
) -> tuple[float, float]:
    """Monte-Carlo (mean, stderr) of log greedy-cover count at radius h."""
    if reps < 30:
        raise ValueError("need reps >= 30 for a stable entropy estimate")
    stream = stream or RngStream(1_234_567, 0)
    logs = np.empty(reps)
    for r in range(reps):
        x = sample_covariates(covariate_spec, stream.child(r), n)[:, 0]
        vals = dictionary.evaluate_all(x)
        logs[r] = math.log(empirical_covering_number(vals, h, kappa))
    return float(logs.mean()), float(logs.std(ddof=1) / math.sqrt(reps))


def tabulate_expected_entropy(
    dictionary: FiniteDictionary,
    covariate_spec: CovariateSpec,
    n: int,
    kappa: float,
    reps: int = 40,
    radii: np.ndarray | None = None,
    stream: RngStream | None = None,
) -> TabulatedEntropy:
    """Estimate E[log N(h, F, L^{1+kappa}(P_n))] on a log grid of radii."""
    stream = stream or RngStream(1_234_567, 0)
    if radii is None:
        diam = 2.0 * dictionary.sup_lp_norm(1.0 + kappa)
        radii = np.geomspace(max(diam * 1e-3, 1e-6), max(diam, 1e-3), 24)
    means = np.array(
        [
            expected_entropy_estimate(
                dictionary, covariate_spec, n, float(h), kappa, reps, stream.child(j)
            )[0]
            for j, h in enumerate(radii)
        ]
    )
    # enforce monotone nonincreasing tabulation (MC noise only)
    means = np.maximum.accumulate(means[::-1])[::-1]
    return TabulatedEntropy(np.asarray(radii, dtype=float), means, math.log(len(dictionary.functions)))


def mc_sup_ep(
    dictionary: FiniteDictionary,
    covariate_spec: CovariateSpec,
    n: int,
    reps: int,
    stream: RngStream,
) -> tuple[float, float]:
    """(mean, stderr) of sup_j |P_n f_j - P f_j| over `reps` fresh samples."""
    sups = np.empty(reps)
    for r in range(reps):
        x = sample_covariates(covariate_spec, stream.child(r), n)[:, 0]
        vals = dictionary.evaluate_all(x)
        sups[r] = np.max(np.abs(vals.mean(axis=1) - dictionary.population_means))
    return float(sups.mean()), float(sups.std(ddof=1) / math.sqrt(reps))


# ---------------------------------------------------------------------------
# Maximal-inequality evaluators
# ---------------------------------------------------------------------------

_C1 = 13.2043
_C2 = 15.0850


def _entropy_integral(entropy, lo: float, hi: float, kappa: float) -> float:
    if lo >= hi:
        return 0.0

    def integrand(x):
        return math.sqrt(max(float(entropy(x)), 0.0) / x ** (1.0 - kappa))

    with warnings.catch_warnings():
        # tabulated entropies are piecewise linear; quad reports roundoff
        # near the interpolation knots even though the value is converged
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, lo, hi, epsrel=1e-6, limit=200)
    if not math.isfinite(val):
        raise NumericalError(f"covering integral did not converge on [{lo}, {hi}]")
    return val


def theorem1_bound(inputs: BoundInputs, breakdown: bool = False):
    """Six-term maximal-inequality bound with expected L^{1+kappa}(P_n) entropy.

    The free parameters (epsilon, M) are optimized over 64-point log grids;
    the bound is valid at every grid point, so the grid minimum stays valid.
    """
    sig, kap, n = inputs.sigma, inputs.kappa, inputs.n
    H = inputs.entropy
    h_anchor = min(sig / 2.0, 0.125)
    H_anchor = float(H(h_anchor))
    log2_term = math.sqrt(math.ceil(math.log2(max(1.0 / sig, 4.0))))

    # T2's inner integral does not depend on M: precompute per epsilon.
    eps_hi = min(sig, 0.25)
    eps_grid = np.geomspace(eps_hi * 1e-6, eps_hi * (1.0 - 1e-9), 64)
    integrals = np.array([_entropy_integral(H, e / 8.0, h_anchor, kap) for e in eps_grid])

    if inputs.truncation_M is not None:
        m_grid = np.array([float(inputs.truncation_M)])
    elif inputs.m_grid is not None:
        m_grid = np.asarray(inputs.m_grid, dtype=float)
    else:
        m_grid = np.geomspace(1e-2, 1e6, 64)

    best = math.inf
    best_parts = None
    for M in m_grid:
        root = math.sqrt(M ** (1.0 - kap) / n)
        t1 = _C1 * root * log2_term * min(sig ** ((1.0 + kap) / 2.0), 2.0 ** (-(1.0 + kap)))
        t2_candidates = 2.0 * eps_grid + _C2 * root * integrals
        i_eps = int(np.argmin(t2_candidates))
        t2 = float(t2_candidates[i_eps])
        t3 = 2.0 * math.sqrt(2.0) * root * sig ** ((1.0 + kap) / 2.0) * math.sqrt(
            math.log(2.0) + H_anchor
        )
        t4 = (2.0 * M / (3.0 * n)) * (math.log(2.0) + H_anchor)
        t5 = 2.0 * float(inputs.tail_expectation(M))
        total = t1 + t2 + t3 + t4 + t5
        if total < best:
            best = total
            best_parts = {
                "M": float(M),
                "epsilon": float(eps_grid[i_eps]),
                "T1": t1,
                "T2": t2,
                "T3": t3,
                "T4": t4,
                "T5": t5,
                "total": total,
            }
    if breakdown:
        return best_parts
    return best


def theorem2_bound(
    sigma: float,
    kappa: float,
    m: float,
    inv_w_norms: tuple[float, float],
    F_winf: float,
    entropy_P: EntropyModel,
    entropy_w: EntropyModel,
    n: int,
) -> float:
    """Weighted-L^infty maximal inequality with constants 127.63/k, 104.37/k.

    Raises IntegrabilityError when a covering integral diverges at 0; the
    remedy is to rerun with a smaller effective m in (1, 2).
    """
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    if m <= 1:
        raise ValueError("m must exceed 1")
    p_first = kappa / (1.0 + kappa)
    p_last = 1.0 - 1.0 / m

    def check(model: EntropyModel, power: float, label: str):
        if model.gamma * power >= 1.0:
            raise IntegrabilityError(
                f"{label} integrand behaves like x^(-{model.gamma * power:.4g}) near 0 "
                "and is not integrable; replace m with a smaller value in (1, 2)"
            )

    check(entropy_P, p_first, "L^{1+kappa}(P) entropy")
    check(entropy_w, p_last, "weighted L^inf entropy (L^m term)")
    if kappa < 1.0:
        check(entropy_w, p_first, "weighted L^inf entropy (cross term)")

    def integral(model: EntropyModel, upper: float, power: float) -> float:
        def integrand(x):
            return 1.0 + float(model(x)) ** power

        val, _ = integrate.quad(integrand, 0.0, upper, epsrel=1e-8, limit=400)
        return val

    norm_1k, norm_m = inv_w_norms
    first = (
        (127.63 / kappa)
        * norm_1k ** ((1.0 - kappa) / 2.0)
        / n ** (kappa / (1.0 + kappa))
        * integral(entropy_P, 2.0 * sigma, p_first) ** ((1.0 + kappa) / 2.0)
    )
    if kappa < 1.0:
        first *= integral(entropy_w, 2.0 * F_winf, p_first) ** ((1.0 - kappa) / 2.0)
    second = (
        (104.37 / kappa)
        * norm_m
        / n ** (1.0 - 1.0 / m)
        * integral(entropy_w, 2.0 * F_winf, p_last)
    )
    return first + second


def prop_s3_closed_form(
    sigma: float,
    kappa: float,
    m: float,
    gamma: float,
    gamma_prime: float,
    U_F: float,
    M: float,
    n_tilde: float,
    F_Lm_norm: float,
) -> float:
    """Closed-form four-branch evaluation of the entropy-model bound.

    The suppressed constant (depending on kappa, gamma, gamma') is set to 1,
    so absolute levels are shape-only.
    """
    if sigma > 0.25:
        raise ValueError("closed form requires sigma <= 1/4")
    if gamma >= 1.0 + kappa:
        anchor = (M ** (1.0 - kappa) / n_tilde) ** (1.0 / (gamma + 1.0 - kappa))
        if anchor > sigma / 8.0:
            raise ValueError(
                "closed form requires (M^(1-kappa)/n_tilde)^(1/(gamma+1-kappa)) <= sigma/8"
            )
    lp = lambda z: max(1.0, math.log(z))
    frac_m = (m - 1.0) / m
    tail_term = (
        F_Lm_norm * n_tilde ** (-frac_m) * sigma ** (-gamma * frac_m) * lp(2 * U_F / sigma) ** (gamma_prime * frac_m)
    )
    if kappa == 1.0 and gamma < 2.0:
        return (
            n_tilde ** -0.5 * sigma ** (1.0 - gamma / 2.0) * lp(2 * U_F / sigma) ** (gamma_prime / 2.0)
            + tail_term
        )
    if kappa == 1.0:
        return (
            n_tilde ** (-1.0 / gamma) * lp(U_F * n_tilde ** (gamma / 2.0)) ** (gamma_prime / 2.0)
            + tail_term
        )
    common = (M / n_tilde) * sigma ** (-gamma) * lp(2 * U_F / sigma) ** gamma_prime + F_Lm_norm ** m / M ** (m - 1.0)
    if gamma < 1.0 + kappa:
        return (
            math.sqrt(M ** (1.0 - kappa) / n_tilde)
            * sigma ** ((kappa + 1.0 - gamma) / 2.0)
            * lp(2 * U_F / sigma) ** (gamma_prime / 2.0)
            + common
        )
    anchor = (M ** (1.0 - kappa) / n_tilde) ** (1.0 / (gamma + 1.0 - kappa))
    return anchor * lp(U_F / anchor) ** (gamma_prime / 2.0) + common
