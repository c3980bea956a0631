"""Self-contained statistics for the validation pipeline.

Correlation (Pearson, tau-b), top-weighted ranking overlap, OLS with
classical inference, and linear product-of-coefficients mediation with a
seeded nonparametric bootstrap. Implementations are written against
numpy directly; the test suite checks them against independent oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .corpus import ControlVars
from .errors import (
    AllTied,
    ConstantSeries,
    DuplicateIds,
    InsufficientObservations,
    LengthMismatch,
    RankDeficient,
)
from .metrics import NoveltyScores


@dataclass(frozen=True)
class AnalysisRow:
    """One scored variation joined with controls and the four distances."""

    product: str
    kb_culture: str
    variation_id: str
    variation_culture: str
    scores: NoveltyScores
    controls: ControlVars
    iw: Optional[float] = None
    geo: Optional[float] = None
    linguistic: Optional[float] = None
    religious: Optional[float] = None


@dataclass(frozen=True)
class RegressionResult:
    """OLS estimates with classical (or sandwich) inference."""

    coefficients: dict[str, float]
    std_errors: dict[str, float]
    t_stats: dict[str, float]
    p_values: dict[str, float]
    r_squared: float
    n_obs: int


@dataclass(frozen=True)
class MediationResult:
    """Linear mediation decomposition with bootstrap intervals.

    total_effect always equals acme + ade exactly; intervals and p-values
    are None when the bootstrap was disabled (n_boot=0).
    """

    total_effect: float
    acme: float
    ade: float
    acme_ci: Optional[tuple[float, float]]
    ade_ci: Optional[tuple[float, float]]
    total_ci: Optional[tuple[float, float]]
    acme_p: Optional[float]
    ade_p: Optional[float]
    total_p: Optional[float]
    n_boot: int


def _paired(x: Sequence[float], y: Sequence[float], min_n: int) -> tuple[np.ndarray, np.ndarray]:
    if len(x) != len(y):
        raise LengthMismatch(f"series lengths differ: {len(x)} vs {len(y)}")
    if len(x) < min_n:
        raise InsufficientObservations(f"need at least {min_n} observations, got {len(x)}")
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def _t_p_value(t: float, df: int) -> float:
    """Two-sided p of a t statistic via the regularized incomplete beta."""
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson correlation with its two-sided t-test p-value."""
    xa, ya = _paired(x, y, min_n=3)
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantSeries("correlation is undefined for a constant series")
    cov = float(xc @ yc)
    # ratio of squares keeps perfectly collinear integer series at exactly +-1
    r = math.copysign(math.sqrt(min(1.0, cov * cov / (sxx * syy))), cov)
    n = len(xa)
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, _t_p_value(t, n - 2)


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Tau-b with tie correction; p from the tie-adjusted normal approximation."""
    xa, ya = _paired(x, y, min_n=3)
    n = len(xa)
    concordant_minus_discordant = 0
    for i in range(n - 1):
        dx = xa[i + 1 :] - xa[i]
        dy = ya[i + 1 :] - ya[i]
        sign_products = np.sign(dx) * np.sign(dy)
        concordant_minus_discordant += int(np.sum(sign_products > 0) - np.sum(sign_products < 0))

    def tie_counts(arr: np.ndarray) -> list[int]:
        _, counts = np.unique(arr, return_counts=True)
        return [int(c) for c in counts if c > 1]

    ties_x = tie_counts(xa)
    ties_y = tie_counts(ya)
    n0 = n * (n - 1) // 2
    n1 = sum(t * (t - 1) // 2 for t in ties_x)
    n2 = sum(t * (t - 1) // 2 for t in ties_y)
    if n1 == n0 or n2 == n0:
        raise AllTied("tau-b is undefined when a whole series is tied")
    tau = concordant_minus_discordant / math.sqrt((n0 - n1) * (n0 - n2))
    tau = max(-1.0, min(1.0, tau))

    v0 = n * (n - 1) * (2 * n + 5)
    vt = sum(t * (t - 1) * (2 * t + 5) for t in ties_x)
    vu = sum(u * (u - 1) * (2 * u + 5) for u in ties_y)
    v1 = (
        sum(t * (t - 1) for t in ties_x)
        * sum(u * (u - 1) for u in ties_y)
        / (2.0 * n * (n - 1))
    )
    v2 = (
        sum(t * (t - 1) * (t - 2) for t in ties_x)
        * sum(u * (u - 1) * (u - 2) for u in ties_y)
        / (9.0 * n * (n - 1) * (n - 2))
    )
    var = (v0 - vt - vu) / 18.0 + v1 + v2
    if var <= 0.0:
        return tau, 1.0
    z = concordant_minus_discordant / math.sqrt(var)
    p = float(special.erfc(abs(z) / math.sqrt(2.0)))
    return tau, min(1.0, p)


def rbo(list_a: Sequence[str], list_b: Sequence[str], p: float = 0.9) -> float:
    """Extrapolated rank-biased overlap of two duplicate-free rankings.

    Overlap fractions at increasing depth are weighted geometrically by p
    and extrapolated past the end of the shorter list, so the result stays
    in [0, 1] for rankings of unequal length.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("persistence p must lie strictly inside (0, 1)")
    for name, lst in (("a", list_a), ("b", list_b)):
        if len(set(lst)) != len(lst):
            raise DuplicateIds(f"ranking {name} repeats an id")
    if not list_a or not list_b:
        return 0.0
    if list(list_a) == list(list_b):
        return 1.0
    short, long_ = sorted((list(list_a), list(list_b)), key=len)
    s, l = len(short), len(long_)

    seen_short: set[str] = set()
    seen_long: set[str] = set()
    overlap = 0
    overlap_at: dict[int, int] = {}
    sum1 = 0.0
    for depth in range(1, l + 1):
        long_item = long_[depth - 1]
        short_item = short[depth - 1] if depth <= s else None
        if short_item == long_item:
            overlap += 1
        else:
            if short_item is not None:
                if short_item in seen_long:
                    overlap += 1
                seen_short.add(short_item)
            if long_item in seen_short:
                overlap += 1
            seen_long.add(long_item)
        overlap_at[depth] = overlap
        sum1 += overlap / depth * p**depth

    x_s = overlap_at[s]
    x_l = overlap_at[l]
    sum2 = sum(
        x_s * (depth - s) / (s * depth) * p**depth for depth in range(s + 1, l + 1)
    )
    sum3 = ((x_l - x_s) / l + x_s / s) * p**l
    return (1.0 - p) / p * (sum1 + sum2) + sum3


def ols(
    design: np.ndarray,
    y: Sequence[float],
    names: Optional[Sequence[str]] = None,
    robust: bool = False,
) -> RegressionResult:
    """Least squares through a QR decomposition, with classical inference.

    The design matrix must already include its intercept column. With
    robust=True, standard errors switch to the HC1 sandwich estimator.
    """
    X = np.asarray(design, dtype=float)
    yv = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("design must be a 2-d matrix")
    n, k = X.shape
    if len(yv) != n:
        raise LengthMismatch(f"{n} design rows vs {len(yv)} responses")
    if n < k + 1:
        raise InsufficientObservations(f"{n} rows cannot identify {k} parameters")
    if names is None:
        names = ["const"] + [f"x{i}" for i in range(1, k)]
    if len(names) != k:
        raise ValueError("one name per design column required")

    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= max(n, k) * np.finfo(float).eps * diag.max():
        raise RankDeficient("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ yv)

    residuals = yv - X @ beta
    ssr = float(residuals @ residuals)
    sst = float(np.sum((yv - yv.mean()) ** 2))
    df = n - k
    r_inv = np.linalg.solve(r, np.eye(k))
    xtx_inv = r_inv @ r_inv.T
    if robust:
        meat = (X * (residuals**2)[:, None]).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / df)
    else:
        cov = ssr / df * xtx_inv
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, beta / se, np.inf)
    p_values = [_t_p_value(float(t), df) for t in t_stats]
    r_squared = 1.0 - ssr / sst if sst > 0.0 else 1.0

    return RegressionResult(
        coefficients=dict(zip(names, map(float, beta))),
        std_errors=dict(zip(names, map(float, se))),
        t_stats=dict(zip(names, map(float, t_stats))),
        p_values=dict(zip(names, p_values)),
        r_squared=max(0.0, min(1.0, r_squared)),
        n_obs=n,
    )


def _mediation_point(
    t: np.ndarray, m: np.ndarray, y: np.ndarray, controls: np.ndarray
) -> tuple[float, float]:
    """(acme, ade) from the two OLS fits, via lstsq for speed in the bootstrap."""
    n = len(t)
    ones = np.ones(n)
    design_m = np.column_stack([ones, t, controls]) if controls.size else np.column_stack([ones, t])
    a = float(np.linalg.lstsq(design_m, m, rcond=None)[0][1])
    design_y = (
        np.column_stack([ones, t, m, controls])
        if controls.size
        else np.column_stack([ones, t, m])
    )
    coef_y = np.linalg.lstsq(design_y, y, rcond=None)[0]
    c_prime, b = float(coef_y[1]), float(coef_y[2])
    return a * b, c_prime


def _percentile_ci(samples: np.ndarray) -> tuple[float, float]:
    lo, hi = np.percentile(samples, [2.5, 97.5])
    return float(lo), float(hi)


def _bootstrap_p(samples: np.ndarray) -> float:
    below = float(np.mean(samples <= 0.0))
    above = float(np.mean(samples >= 0.0))
    return min(1.0, 2.0 * min(below, above))


def mediate(
    treatment: Sequence[float],
    mediator: Sequence[float],
    outcome: Sequence[float],
    controls: Optional[Sequence[Sequence[float]]] = None,
    n_boot: int = 1000,
    seed: int = 0,
) -> MediationResult:
    """Linear product-of-coefficients mediation with bootstrap inference.

    Fits mediator ~ treatment (+controls) and outcome ~ treatment +
    mediator (+controls); the mediated effect is the product a*b, the
    direct effect is the treatment coefficient of the second fit, and the
    total is their sum. Percentile intervals and p-values come from a
    seeded nonparametric bootstrap whose per-replicate substreams make the
    result independent of evaluation order.
    """
    t, m = _paired(treatment, mediator, min_n=10)
    _, y = _paired(treatment, outcome, min_n=10)
    if controls is None:
        ctrl = np.empty((len(t), 0))
    else:
        ctrl = np.column_stack([np.asarray(c, dtype=float) for c in controls]) if len(controls) else np.empty((len(t), 0))
        if ctrl.shape[0] != len(t):
            raise LengthMismatch("control series length differs from treatment")

    acme, ade = _mediation_point(t, m, y, ctrl)
    total = acme + ade

    if n_boot <= 0:
        return MediationResult(
            total_effect=total, acme=acme, ade=ade,
            acme_ci=None, ade_ci=None, total_ci=None,
            acme_p=None, ade_p=None, total_p=None, n_boot=0,
        )

    n = len(t)
    children = np.random.SeedSequence(seed).spawn(n_boot)
    acme_samples = np.empty(n_boot)
    ade_samples = np.empty(n_boot)
    for i in range(n_boot):
        rng = np.random.default_rng(children[i])
        idx = rng.integers(0, n, size=n)
        acme_samples[i], ade_samples[i] = _mediation_point(t[idx], m[idx], y[idx], ctrl[idx])
    total_samples = acme_samples + ade_samples

    return MediationResult(
        total_effect=total,
        acme=acme,
        ade=ade,
        acme_ci=_percentile_ci(acme_samples),
        ade_ci=_percentile_ci(ade_samples),
        total_ci=_percentile_ci(total_samples),
        acme_p=_bootstrap_p(acme_samples),
        ade_p=_bootstrap_p(ade_samples),
        total_p=_bootstrap_p(total_samples),
        n_boot=n_boot,
    )
