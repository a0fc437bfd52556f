"""Closed-form and semi-analytic companions to the capacity solver.

Covers the norm threshold below which the two-point axis input is optimal,
the water-filling allocation under an average-power constraint with the same
budget, entropy-power / support-volume capacity bounds, the small-radius
capacity law, and a Monte-Carlo mutual-information estimator for inputs
uniform on the sphere (the degrees-of-freedom achiever at large radius).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import (
    LN_2PIE,
    Channel,
    DiscreteCircularDistribution,
    marginal_entropy_profile,
    output_log_pdf_grid,
)
from .quadrature import auto_node_counts, build_polar_grid, integrate_line

__all__ = [
    "ThresholdResult",
    "WaterfillingResult",
    "BoundsResult",
    "ThresholdComparisonRow",
    "MutualInformationEstimate",
    "BracketingError",
    "threshold_residual",
    "threshold_residual_line",
    "norm_threshold",
    "waterfilling",
    "capacity_bounds",
    "asymptotic_capacity",
    "uniform_sphere_mi",
    "threshold_vs_waterfilling",
]


@dataclass(frozen=True)
class ThresholdResult:
    """Root of the threshold equation for one channel gain ratio."""

    lam: float
    r_threshold: float
    residual: float
    bracket: tuple[float, float]


@dataclass(frozen=True)
class WaterfillingResult:
    """Average-power-optimal allocation with budget R^2 on two branches."""

    p1: float
    p2: float
    capacity_nats: float
    activation_level: float


@dataclass(frozen=True)
class BoundsResult:
    """Capacity bounds for a norm-R input into an n-dimensional channel.

    The lower bound comes from the entropy-power inequality with a
    uniform-phase input; the upper bound from the support volume of the
    transmitted sphere. The two cross at small R, where the upper bound
    diverges to -inf; the pair brackets capacity only once R is moderate.
    """

    n: int
    det_h: float
    radius: float
    lower_nats: float
    upper_nats: float


@dataclass(frozen=True)
class ThresholdComparisonRow:
    """One lambda of the threshold vs water-filling activation comparison."""

    lam: float
    r_threshold: float | None
    activation_level: float
    gap: float | None
    error: str | None = None


@dataclass(frozen=True)
class MutualInformationEstimate:
    """Monte-Carlo I(X;Y) estimate with its standard error."""

    value_nats: float
    std_error: float
    samples: int


class BracketingError(RuntimeError):
    """Root bracketing failed; carries the sampled residuals."""

    def __init__(self, message, samples):
        detail = ", ".join(f"g({r:.4g})={g:.3e}" for r, g in samples)
        super().__init__(f"{message} [residual samples: {detail}]")
        self.samples = samples


def _lncosh(x: np.ndarray) -> np.ndarray:
    # ln cosh via logaddexp, safe for large |x|
    return np.logaddexp(x, -x) - math.log(2.0)


def threshold_residual(
    lam: float,
    radius: float,
    n_radial: int | None = None,
    n_angular: int | None = None,
) -> float:
    """Signed optimality defect of the two-point axis input at a radius.

    The marginal entropy density of the equal axis pair is evaluated at the
    orthogonal angle pi/2 and on the support at 0; the difference is negative
    while the pair is optimal, zero at the threshold, positive above it.
    """
    ch = Channel(lam=lam, radius=radius)
    dist = DiscreteCircularDistribution.two_point()
    grid = build_polar_grid(ch, n_radial, n_angular)
    _, logf = output_log_pdf_grid(dist, ch, grid)
    prof = marginal_entropy_profile([0.5 * math.pi, 0.0], dist, ch, grid, logf=logf)
    return float(prof[0] - prof[1])


def threshold_residual_line(lam: float, radius: float, n_nodes: int = 2000) -> float:
    """Single-integral form of the threshold defect (independent cross-check).

    Computes (1/sqrt(2 pi)) * int (e^{-(y - lam R)^2/2} - e^{-y^2/2})
    ln cosh(lam R y) dy - (lam^2 - 1) R^2 / 2, which carries the same sign
    and root as threshold_residual.
    """
    a = lam * radius

    def integrand(y):
        return (
            (np.exp(-0.5 * (y - a) ** 2) - np.exp(-0.5 * y * y))
            * _lncosh(a * y)
            / math.sqrt(2.0 * math.pi)
        )

    half_width = a + 12.0
    lhs = integrate_line(integrand, half_width, n_nodes).value
    return lhs - 0.5 * (lam * lam - 1.0) * radius * radius


def norm_threshold(lam: float, r_start: float = 0.01, r_cap: float = 8.0) -> ThresholdResult:
    """Radius at which the two-point axis input stops being optimal.

    Bisects the threshold residual on a bracket grown geometrically from
    r_start (excluding the trivial root at R=0). During bisection the
    quadrature resolution is pinned to the bracket's upper end so the residual
    is a fixed smooth function of the radius.
    """
    if not (math.isfinite(lam) and lam > 1.0):
        raise ValueError(f"lam must be > 1, got {lam}")
    samples = []
    r_lo = r_start
    g_lo = threshold_residual(lam, r_lo)
    samples.append((r_lo, g_lo))
    r_hi = r_lo
    g_hi = g_lo
    while g_hi * g_lo > 0.0:
        r_hi_next = r_hi * 1.6
        if r_hi_next > r_cap:
            raise BracketingError(
                f"no sign change of the threshold residual in [{r_start}, {r_cap}] at lam={lam}",
                samples,
            )
        r_hi = r_hi_next
        g_hi = threshold_residual(lam, r_hi)
        samples.append((r_hi, g_hi))
        if g_hi * g_lo <= 0.0:
            break
        r_lo, g_lo = r_hi, g_hi
    bracket = (r_lo, r_hi)
    n_radial, n_angular = auto_node_counts(lam, r_hi)
    residual = lambda r: threshold_residual(lam, r, n_radial, n_angular)  # noqa: E731
    g_lo = residual(r_lo)
    while r_hi - r_lo > 1e-12:
        mid = 0.5 * (r_lo + r_hi)
        g_mid = residual(mid)
        if g_mid == 0.0:
            r_lo = r_hi = mid
            break
        if g_mid * g_lo > 0.0:
            r_lo, g_lo = mid, g_mid
        else:
            r_hi = mid
    root = 0.5 * (r_lo + r_hi)
    return ThresholdResult(
        lam=lam,
        r_threshold=root,
        residual=residual(root),
        bracket=bracket,
    )


def waterfilling(lam: float, radius: float) -> WaterfillingResult:
    """Optimal two-branch power split under an average-power budget R^2."""
    if not (math.isfinite(lam) and lam >= 1.0):
        raise ValueError(f"lam must be >= 1, got {lam}")
    if not (math.isfinite(radius) and radius > 0.0):
        raise ValueError(f"radius must be > 0, got {radius}")
    budget = radius * radius
    knee = 1.0 - 1.0 / (lam * lam)
    if budget <= knee:
        p1, p2 = budget, 0.0
    else:
        p1 = 0.5 * (budget + knee)
        p2 = 0.5 * (budget - knee)
    cap = 0.5 * math.log1p(lam * lam * p1) + 0.5 * math.log1p(p2)
    return WaterfillingResult(
        p1=p1, p2=p2, capacity_nats=cap, activation_level=math.sqrt(knee)
    )


def capacity_bounds(n: int, det_h: float, radius: float) -> BoundsResult:
    """Entropy-power lower and support-volume upper capacity bounds (nats).

    upper = ln(2 pi^{n/2} R^{n-1} / Gamma(n/2)) + ln det_h grows as
    (n-1) ln R; lower = (n/2) ln((2 R^{n-1} pi^{n/2} det_h / Gamma(n/2))^{2/n}
    + 2 pi e) - (n/2) ln(2 pi e) vanishes as R -> 0.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if not (math.isfinite(det_h) and det_h > 0.0):
        raise ValueError(f"det_h must be > 0, got {det_h}")
    if not (math.isfinite(radius) and radius > 0.0):
        raise ValueError(f"radius must be > 0, got {radius}")
    n = int(n)
    ln_surface = (
        math.log(2.0)
        + 0.5 * n * math.log(math.pi)
        + (n - 1.0) * math.log(radius)
        - math.lgamma(0.5 * n)
    )
    upper = ln_surface + math.log(det_h)
    ln_power = (2.0 / n) * (ln_surface + math.log(det_h))
    lower = 0.5 * n * math.log(math.exp(ln_power) + 2.0 * math.pi * math.e) - 0.5 * n * LN_2PIE
    return BoundsResult(n=n, det_h=det_h, radius=radius, lower_nats=lower, upper_nats=upper)


def asymptotic_capacity(lam: float, radius: float) -> float:
    """Leading small-radius capacity, lam^2 R^2 / 2 nats."""
    if not (math.isfinite(lam) and lam >= 1.0):
        raise ValueError(f"lam must be >= 1, got {lam}")
    if not (math.isfinite(radius) and radius > 0.0):
        raise ValueError(f"radius must be > 0, got {radius}")
    return 0.5 * lam * lam * radius * radius


def _sphere_node_counts(c_max: float) -> int:
    n = max(64.0, 1.35 * math.sqrt(74.0 * max(c_max, 1.0)))
    return 1 << int(math.ceil(math.log2(n)))


def uniform_sphere_mi(
    n: int,
    singular_values,
    radius: float,
    samples: int,
    seed: int,
) -> MutualInformationEstimate:
    """Monte-Carlo I(X;Y) for X uniform on the radius-R sphere.

    Y = S X + W with S = diag(singular_values) and white unit-variance noise.
    Each sample scores -ln f_Y(y) by spherical quadrature; the mutual
    information is the mean score minus the noise entropy (n/2) ln(2 pi e).
    Node counts scale with s_max * R so the angular average stays resolved;
    intended for moderate radii in the n=3 case.
    """
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    svals = [float(s) for s in singular_values]
    if len(svals) != n:
        raise ValueError(f"need {n} singular values, got {len(svals)}")
    if any(not (math.isfinite(s) and s > 0.0) for s in svals):
        raise ValueError(f"singular values must be positive and finite, got {svals}")
    if not (math.isfinite(radius) and radius > 0.0):
        raise ValueError(f"radius must be > 0, got {radius}")
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    rng = np.random.Generator(np.random.Philox(seed))
    s_max = max(svals)
    c_max = s_max * radius * (s_max * radius + 8.0)
    if n == 2:
        phi = rng.uniform(0.0, 2.0 * math.pi, size=samples)
        x1 = radius * np.cos(phi)
        x2 = radius * np.sin(phi)
        y1 = svals[0] * x1 + rng.standard_normal(samples)
        y2 = svals[1] * x2 + rng.standard_normal(samples)
        m = _sphere_node_counts(c_max)
        scores = -_kernels.sphere_log_pdf_2(y1, y2, svals[0], svals[1], radius, m)
    else:
        g = rng.standard_normal((samples, 3))
        x = radius * g / np.linalg.norm(g, axis=1, keepdims=True)
        y = x * np.array(svals)[None, :] + rng.standard_normal((samples, 3))
        m = _sphere_node_counts(c_max)
        n_mu = max(64, m // 2)
        mu, w_mu = np.polynomial.legendre.leggauss(n_mu)
        scores = -_kernels.sphere_log_pdf_3(y, np.array(svals), radius, mu, w_mu, m)
    value = float(np.mean(scores)) - 0.5 * n * LN_2PIE
    se = float(np.std(scores, ddof=1) / math.sqrt(samples))
    return MutualInformationEstimate(value_nats=value, std_error=se, samples=samples)


def threshold_vs_waterfilling(lambda_grid) -> list[ThresholdComparisonRow]:
    """Norm threshold vs water-filling activation level per lambda.

    Rows carry (lambda, R^t, sqrt(1 - 1/lambda^2), R^t - activation); a failed
    threshold solve is recorded in the row instead of aborting the table.
    """
    rows: list[ThresholdComparisonRow] = []
    for lam in lambda_grid:
        lam = float(lam)
        if not (math.isfinite(lam) and lam > 1.0):
            raise ValueError(f"lambda grid entries must be > 1, got {lam}")
        level = math.sqrt(1.0 - 1.0 / (lam * lam))
        try:
            thr = norm_threshold(lam)
            rows.append(
                ThresholdComparisonRow(
                    lam=lam,
                    r_threshold=thr.r_threshold,
                    activation_level=level,
                    gap=thr.r_threshold - level,
                )
            )
        except (BracketingError, ValueError) as exc:
            rows.append(
                ThresholdComparisonRow(
                    lam=lam,
                    r_threshold=None,
                    activation_level=level,
                    gap=None,
                    error=str(exc),
                )
            )
    return rows
