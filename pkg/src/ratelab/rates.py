"""Closed-form convergence rates, regime classification and phase boundaries.

All exponents are reported for the effective sample size n_tilde, without
suppressed constants and without log factors unless the log correction is
requested explicitly (see log_rate_solve).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DONSKER = "Donsker"
NON_DONSKER = "NonDonsker"
HEAVY_TAIL = "HeavyTail"

MODE_FULL = "a"  # this work: all m > 1, all gamma >= 0, s in [0,1]
MODE_S0 = "b"  # earlier independence-based rates: s = 0, gamma < 2
MODE_S_AWARE = "c"  # earlier s-aware Donsker-only rates: m >= 2, gamma < 2


class DomainError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    def __init__(self, msg, profile=None):
        super().__init__(msg)
        self.profile = profile


@dataclass(frozen=True)
class RateInputs:
    m: float
    gamma: float
    s: float
    n_tilde: float
    M: float
    v_m: float
    tau: float | None = None
    v_2: float = math.inf
    delta: float = 0.05

    def __post_init__(self):
        if self.m <= 1:
            raise DomainError("moment order m must exceed 1")
        if self.gamma < 0 or not 0 <= self.s <= 1:
            raise DomainError("need gamma >= 0 and s in [0, 1]")
        if self.n_tilde <= 0 or self.M <= 0 or self.v_m <= 0:
            raise DomainError("n_tilde, M, v_m must be positive")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if self.m < 2 and math.isfinite(self.v_2):
            # v_2 is forced to infinity below the second-moment threshold
            object.__setattr__(self, "v_2", math.inf)

    @property
    def kappa(self) -> float:
        return min(self.m, 2.0) - 1.0


@dataclass
class RateResult:
    exponent: float
    regime: str
    components: dict = field(default_factory=dict)
    notes: str = ""


def complexity_exponent(gamma: float) -> float:
    """1/(2+gamma) in the Donsker regime, 1/(2 gamma) beyond."""
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    if gamma == 0.0:
        return 0.5
    return min(1.0 / (2.0 + gamma), 1.0 / (2.0 * gamma))


def heavy_tail_exponent(m: float, gamma: float, s: float) -> float:
    """1 / ((2-s)/(1-1/m) + s*gamma)."""
    if m <= 1:
        raise DomainError("moment order m must exceed 1")
    if math.isinf(m):
        denom = (2.0 - s) + s * gamma
    else:
        denom = (2.0 - s) / (1.0 - 1.0 / m) + s * gamma
    return 1.0 / denom


def nplse_exponent(m: float, gamma: float, s: float) -> RateResult:
    """Least-squares estimation-error exponent and its governing regime."""
    e_complex = complexity_exponent(gamma)
    e_heavy = heavy_tail_exponent(m, gamma, s)
    if e_heavy < e_complex:
        regime = HEAVY_TAIL
    elif gamma < 2.0:
        regime = DONSKER
    else:
        regime = NON_DONSKER
    return RateResult(
        exponent=min(e_complex, e_heavy),
        regime=regime,
        components={"e_complex": e_complex, "e_heavy": e_heavy},
        notes="log factors suppressed",
    )


def phase_boundary_m(gamma: float, s: float) -> float:
    """Smallest moment order at which tails stop dominating the rate."""
    if gamma < 0 or not 0 <= s <= 1:
        raise DomainError("need gamma >= 0 and s in [0, 1]")
    if gamma == 0.0:
        return 2.0 / s if s > 0 else math.inf
    if gamma < 2.0:
        return (2.0 + (1.0 - s) * gamma) / (s + (1.0 - s) * gamma)
    return gamma / (gamma - 1.0)


def huber_error_decomposition(inputs: RateInputs) -> RateResult:
    """Statistical error, Huberization bias, and the confidence term.

    Requires the robustness threshold tau >= 2 max{2M, (2 v_m)^{1/m}};
    the branch threshold n_tilde^{1/m} (M + v_m^{1/m}) vs tau is applied
    with constant 1.
    """
    if inputs.tau is None or inputs.tau <= 0:
        raise DomainError("Huber decomposition needs tau > 0")
    tau, m, M, v_m = inputs.tau, inputs.m, inputs.M, inputs.v_m
    floor = 2.0 * max(2.0 * M, (2.0 * v_m) ** (1.0 / m))
    if tau < floor:
        raise DomainError(f"tau={tau:.6g} below the robustness threshold {floor:.6g}")
    nt = inputs.n_tilde
    delta_b = v_m * tau ** (1.0 - m)
    envelope = min(tau, math.sqrt(inputs.v_2) + M) if math.isfinite(inputs.v_2) else tau
    moderate_tau = nt ** (1.0 / m) * (M + v_m ** (1.0 / m)) >= tau
    if moderate_tau:
        delta_s = math.sqrt(tau) * math.sqrt(envelope) / math.sqrt(nt)
    else:
        delta_s = math.sqrt(M * (M + v_m ** (1.0 / m))) * nt ** (1.0 / (2.0 * m) - 0.5)
    n = nt  # confidence term is stated in the raw sample size; callers pass n_tilde=n when needed
    confidence = math.sqrt(tau) * math.sqrt(envelope) * math.sqrt(math.log(2.0 / inputs.delta) / n)
    if moderate_tau:
        exponent = 0.5
    else:
        exponent = 0.5 - 1.0 / (2.0 * m)
    return RateResult(
        exponent=exponent,
        regime=HEAVY_TAIL if m < 2 else DONSKER,
        components={
            "delta_s": delta_s,
            "delta_b": delta_b,
            "confidence": confidence,
            "moderate_tau_branch": moderate_tau,
            "tau_floor": floor,
        },
        notes="log factors suppressed; branch threshold uses constant 1",
    )


def quantile_rate(n_tilde: float, delta: float) -> float:
    """sqrt(log(2/delta)) / sqrt(n_tilde); needs no moment assumptions."""
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if n_tilde <= 0:
        raise DomainError("n_tilde must be positive")
    return math.sqrt(math.log(2.0 / delta)) / math.sqrt(n_tilde)


def set_structured_exponent(gamma: float) -> float:
    """Minimax exponent 1/(2+gamma) available under set structure, any gamma."""
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    return 1.0 / (2.0 + gamma)


def fixed_point_solve(
    phi: Callable[[float], float],
    w_inverse: Callable[[float], float],
    tau_max: float,
    rel_tol: float = 1e-8,
    probe_points: int = 64,
) -> float:
    """inf{tau > 0 : w^{-1}(phi(tau)) <= tau/4} by bisection.

    The localized-process profile g(tau) = w^{-1}(phi(tau)) must be
    nondecreasing and cross tau/4 once on (0, tau_max]; both are verified
    on a log grid before bisecting.
    """
    if tau_max <= 0:
        raise DomainError("tau_max must be positive")
    grid = np.geomspace(tau_max * 1e-12, tau_max, probe_points)
    g = np.array([float(w_inverse(float(phi(float(t))))) for t in grid])
    if np.any(np.diff(g) < -1e-12 * max(1.0, float(np.max(np.abs(g))))):
        raise InfeasibleError("profile w^{-1}(phi(tau)) is not nondecreasing", profile=(grid, g))
    excess = g - grid / 4.0
    if excess[-1] > 0:
        raise InfeasibleError(
            f"no crossing of tau/4 on (0, {tau_max}]: g(tau_max)={g[-1]:.6g} > tau_max/4",
            profile=(grid, g),
        )
    feasible = np.nonzero(excess <= 0)[0]
    first = int(feasible[0])
    hi = float(grid[first])
    lo = 0.0 if first == 0 else float(grid[first - 1])
    while hi - lo > rel_tol * hi and hi > 1e-300:
        mid = 0.5 * (lo + hi)
        if float(w_inverse(float(phi(mid)))) <= mid / 4.0:
            hi = mid
        else:
            lo = mid
    if hi <= 1e-300:
        return 0.0
    return hi


def log_rate_solve(a: float, b: float, c: float, U: float, n: float) -> float:
    """n^{-1/b} * log(n^c * U^b)^{a/b}, the closed-form log-corrected rate."""
    if b <= 0 or c <= 0 or U <= 0:
        raise DomainError("b, c, U must be positive")
    if a < 0:
        raise DomainError("a must be >= 0")
    if n <= 1:
        raise DomainError("n must exceed 1")
    if a == 0:
        return n ** (-1.0 / b)
    log_arg = c * math.log(n) + b * math.log(U)
    if log_arg <= 0:
        raise DomainError("log(n^c * U^b) must be positive")
    return n ** (-1.0 / b) * log_arg ** (a / b)


def phase_diagram(
    m_values,
    gamma_values,
    s: float,
    mode: str = MODE_FULL,
) -> list[dict]:
    """Exponent/regime classification over an (m, gamma) grid.

    Mode 'b' applies the s=0 formula and mode 'c' the s-aware Donsker-only
    formula; both are restricted to gamma < 2, and mode 'c' to m >= 2.
    Cells where the two error exponents coincide within grid resolution
    are flagged as boundary cells.
    """
    if mode not in (MODE_FULL, MODE_S0, MODE_S_AWARE):
        raise DomainError(f"unknown phase-diagram mode {mode!r}")
    m_values = np.asarray(list(m_values), dtype=float)
    gamma_values = np.asarray(list(gamma_values), dtype=float)
    if mode in (MODE_S0, MODE_S_AWARE) and np.any(gamma_values >= 2.0):
        raise DomainError(f"mode {mode!r} allows only Donsker classes (gamma < 2)")
    if mode == MODE_S_AWARE and np.any(m_values < 2.0):
        raise DomainError("mode 'c' requires m >= 2")
    s_eff = 0.0 if mode == MODE_S0 else s
    rows = []
    for gamma in gamma_values:
        for m in m_values:
            res = nplse_exponent(float(m), float(gamma), s_eff)
            e_c = res.components["e_complex"]
            e_h = res.components["e_heavy"]
            rows.append(
                {
                    "m": float(m),
                    "gamma": float(gamma),
                    "s": s_eff,
                    "exponent": res.exponent,
                    "regime": res.regime,
                    "e_complex": e_c,
                    "e_heavy": e_h,
                    "on_boundary": bool(abs(e_c - e_h) <= 1e-3 * max(e_c, e_h)),
                }
            )
    return rows
