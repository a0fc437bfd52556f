"""Channel model, discrete circular input distributions, and entropy functionals.

The channel is diag(lambda, 1) with unit white Gaussian noise; inputs live on
the circle of radius R, so a distribution is a finite set of angle atoms. The
primary computational coordinates are polar outputs (v, psi) with v = rho^2/2,
where the conditional kernel is an entire function and the change of variables
has unit Jacobian (so entropies match the Cartesian ones directly). Cartesian
kernels are kept for cross-checks and the threshold line integral.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .quadrature import QuadratureGrid, build_polar_grid, legendre_nodes

__all__ = [
    "LN_2PI",
    "LN_2PIE",
    "Channel",
    "DiscreteCircularDistribution",
    "EntropyReport",
    "kernel_cartesian",
    "kernel_polar",
    "output_pdf",
    "output_log_pdf_grid",
    "marginal_entropy_density",
    "marginal_entropy_profile",
    "output_entropy",
    "output_entropy_cartesian",
    "monte_carlo_output_entropy",
    "odd_symmetry_residual",
    "distribution_to_json",
    "distribution_from_json",
]

LN_2PI = math.log(2.0 * math.pi)
LN_2PIE = 1.0 + LN_2PI

DEFAULT_MERGE_EPS = 1e-4


@dataclass(frozen=True)
class Channel:
    """Diagonal 2x2 Gaussian channel diag(lam, 1) with envelope radius R.

    lam >= 1 is admitted (lam = 1 only makes sense for asymptotics and DoF
    work; the finite-support solver requires lam > 1 and checks separately).
    """

    lam: float
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 1.0):
            raise ValueError(f"lam must be finite and >= 1, got {self.lam}")
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"radius must be finite and > 0, got {self.radius}")

    @classmethod
    def from_matrix(cls, h: np.ndarray, radius: float) -> "Channel":
        """Reduce an arbitrary full-rank 2x2 matrix to the diagonal form.

        Rotations preserve both the white noise and the input sphere, so only
        the singular values matter; the smaller one is absorbed into the
        radius (Y' = diag(s1/s2, 1) (s2 X) + W).
        """
        h = np.asarray(h, dtype=np.float64)
        if h.shape != (2, 2) or not np.all(np.isfinite(h)):
            raise ValueError("channel matrix must be a finite 2x2 array")
        s = np.linalg.svd(h, compute_uv=False)
        if s[1] <= 1e-12 * s[0]:
            raise ValueError("channel matrix is rank deficient")
        return cls(lam=float(s[0] / s[1]), radius=float(s[1] * radius))


@dataclass(frozen=True)
class DiscreteCircularDistribution:
    """Finite set of (theta, prob) atoms on the radius-R circle.

    Angles are normalized into [0, 2pi) and sorted. Probabilities must be
    positive and sum to 1 within 1e-12; atoms closer than merge_eps (in
    circular distance) are rejected. Closure under theta -> -theta and
    theta -> pi - theta is a property of solver outputs, exposed as the
    is_canonical predicate rather than enforced here (non-canonical instances
    are legitimate inputs to the verifier and the symmetry diagnostics).
    """

    atoms: tuple[tuple[float, float], ...]
    merge_eps: float = DEFAULT_MERGE_EPS

    def __post_init__(self):
        if len(self.atoms) == 0:
            raise ValueError("distribution needs at least one atom")
        norm = []
        for theta, prob in self.atoms:
            if not (math.isfinite(theta) and math.isfinite(prob)):
                raise ValueError(f"atom ({theta}, {prob}) is not finite")
            if not 0.0 < prob <= 1.0:
                raise ValueError(f"atom probability {prob} outside (0, 1]")
            norm.append((theta % (2.0 * math.pi), prob))
        norm.sort()
        total = math.fsum(p for _, p in norm)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1 within 1e-12")
        thetas = [t for t, _ in norm]
        gaps = [b - a for a, b in zip(thetas, thetas[1:])]
        if len(thetas) > 1:
            gaps.append(thetas[0] + 2.0 * math.pi - thetas[-1])
        if gaps and min(gaps) < self.merge_eps:
            raise ValueError(
                f"atoms closer than merge_eps={self.merge_eps}: min gap {min(gaps):.3e}"
            )
        object.__setattr__(self, "atoms", tuple(norm))

    @property
    def thetas(self) -> np.ndarray:
        return np.array([t for t, _ in self.atoms])

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms])

    def __len__(self) -> int:
        return len(self.atoms)

    @classmethod
    def two_point(cls) -> "DiscreteCircularDistribution":
        """Equiprobable atoms at theta = 0 and pi (the small-R optimum)."""
        return cls(atoms=((0.0, 0.5), (math.pi, 0.5)))

    def is_canonical(self, angle_tol: float = 1e-9, prob_tol: float = 1e-9) -> bool:
        """True if the atom set is closed under theta -> -theta and pi - theta
        with matching probabilities."""
        thetas = self.thetas
        probs = self.probs
        two_pi = 2.0 * math.pi
        for image in (-thetas, math.pi - thetas):
            im = np.mod(image, two_pi)
            for t, p in zip(im, probs):
                d = np.abs(np.mod(thetas - t + math.pi, two_pi) - math.pi)
                j = int(np.argmin(d))
                if d[j] > angle_tol or abs(probs[j] - p) > prob_tol:
                    return False
        return True


@dataclass(frozen=True)
class EntropyReport:
    """Output entropy h(V, Psi) = h(Y) in nats plus the derived capacity."""

    h_output: float
    err_hint: float
    capacity: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "capacity", self.h_output - LN_2PIE)


def kernel_cartesian(y1, y2, x, ch: Channel):
    """Conditional output density K(y1, y2, x) for first coordinate x.

    The second input coordinate is +-sqrt(R^2 - x^2) with probability 1/2
    each, so K is the two-branch Gaussian mixture. Integrates to 1 over the
    plane. |x| <= R required.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > ch.radius):
        raise ValueError(f"|x| must not exceed radius {ch.radius}")
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    s = np.sqrt(np.maximum(ch.radius**2 - x * x, 0.0))
    out = (
        np.exp(-0.5 * (y1 - ch.lam * x) ** 2)
        * 0.5
        * (np.exp(-0.5 * (y2 - s) ** 2) + np.exp(-0.5 * (y2 + s) ** 2))
        / (2.0 * math.pi)
    )
    return out if out.ndim else float(out)


def kernel_polar(v, psi, theta, ch: Channel):
    """Polar kernel Ktilde(v, psi, theta); v = rho^2/2, unit Jacobian.

    Equals the conditional density of (V, Psi) given input angle theta. The
    Cartesian kernel is the equal mixture over {theta, -theta}:
    0.5*(Ktilde(v,psi,theta) + Ktilde(v,psi,-theta))
      = K(sqrt(2v) cos psi, sqrt(2v) sin psi, R cos theta).
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0.0):
        raise ValueError("v must be nonnegative")
    psi = np.asarray(psi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    lam, radius = ch.lam, ch.radius
    u = np.sqrt(2.0 * v)
    expo = (
        -0.5 * (lam * lam - 1.0) * radius * radius * np.cos(theta) ** 2
        - 0.5 * radius * radius
        + radius * u * (lam * np.cos(psi) * np.cos(theta) + np.sin(psi) * np.sin(theta))
        - v
    )
    out = np.exp(expo) / (2.0 * math.pi)
    return out if out.ndim else float(out)


def output_pdf(v, psi, dist: DiscreteCircularDistribution, ch: Channel):
    """Mixture output density f_{V,Psi}(v, psi) = sum_k p_k Ktilde(v, psi, theta_k)."""
    v = np.asarray(v, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    out = np.zeros(np.broadcast(v, psi).shape)
    for theta, prob in dist.atoms:
        out = out + prob * kernel_polar(v, psi, theta, ch)
    return out if out.ndim else float(out)


def output_log_pdf_grid(dist: DiscreteCircularDistribution, ch: Channel, grid: QuadratureGrid):
    """(f, log f) of the output mixture on the grid; log floored at 1e-300."""
    return _kernels.mixture_log_pdf_grid(
        grid.u_nodes, grid.psi_nodes, dist.thetas, dist.probs, ch.lam, ch.radius
    )


def marginal_entropy_profile(
    thetas,
    dist: DiscreteCircularDistribution,
    ch: Channel,
    grid: QuadratureGrid,
    logf: np.ndarray | None = None,
) -> np.ndarray:
    """Marginal entropy density htilde at each angle in thetas.

    Passing a precomputed logf (from output_log_pdf_grid) skips rebuilding the
    mixture; useful when many angles are evaluated against one distribution.
    """
    if logf is None:
        _, logf = output_log_pdf_grid(dist, ch, grid)
    return _kernels.entropy_profile(
        grid.u_nodes,
        grid.v_weights,
        grid.psi_nodes,
        grid.psi_weights,
        logf,
        np.atleast_1d(np.asarray(thetas, dtype=np.float64)),
        ch.lam,
        ch.radius,
    )


def marginal_entropy_density(
    theta: float,
    dist: DiscreteCircularDistribution,
    ch: Channel,
    grid: QuadratureGrid,
) -> float:
    """htilde(theta; F) = -int Ktilde(theta) ln f, the per-angle entropy share."""
    return float(marginal_entropy_profile([theta], dist, ch, grid)[0])


def output_entropy(
    dist: DiscreteCircularDistribution, ch: Channel, grid: QuadratureGrid
) -> EntropyReport:
    """Output entropy h(V, Psi) by direct quadrature of -f ln f.

    err_hint compares against a half-resolution grid.
    """
    f, logf = output_log_pdf_grid(dist, ch, grid)
    h = _kernels.grid_entropy(grid.v_weights, grid.psi_weights, f, logf)
    half = build_polar_grid(
        ch,
        n_radial=max(2, grid.n_radial // 2),
        n_angular=max(4, grid.n_angular // 2),
        v_max=grid.v_max,
    )
    f_h, logf_h = output_log_pdf_grid(dist, ch, half)
    h_half = _kernels.grid_entropy(half.v_weights, half.psi_weights, f_h, logf_h)
    return EntropyReport(h_output=h, err_hint=abs(h - h_half))


def output_entropy_cartesian(
    dist: DiscreteCircularDistribution, ch: Channel, n_nodes: int | None = None
) -> float:
    """Output entropy via the Cartesian plane integral; cross-check path."""
    half_width = ch.lam * ch.radius + 10.0
    if n_nodes is None:
        n_nodes = max(220, int(math.ceil(8.0 * half_width)))
    y, w = legendre_nodes(n_nodes, -half_width, half_width)
    c1 = ch.lam * ch.radius * np.cos(dist.thetas)
    c2 = ch.radius * np.sin(dist.thetas)
    f = np.zeros((n_nodes, n_nodes))
    for k, p in enumerate(dist.probs):
        f += p * np.exp(
            -0.5 * (y[:, None] - c1[k]) ** 2 - 0.5 * (y[None, :] - c2[k]) ** 2
        )
    f /= 2.0 * math.pi
    logf = np.log(np.maximum(f, 1e-300))
    return float(-(w @ (f * logf) @ w))


def monte_carlo_output_entropy(
    dist: DiscreteCircularDistribution,
    ch: Channel,
    n_samples: int,
    seed: int,
) -> tuple[float, float]:
    """Seeded Monte-Carlo estimate of h(Y): (estimate, standard error).

    Samples the output directly and averages -ln f(Y) with f evaluated in
    closed form (Gaussian mixture), using a counter-based Philox stream.
    """
    if n_samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {n_samples}")
    rng = np.random.Generator(np.random.Philox(seed))
    centers = np.column_stack(
        (ch.lam * ch.radius * np.cos(dist.thetas), ch.radius * np.sin(dist.thetas))
    )
    idx = rng.choice(len(dist), size=n_samples, p=dist.probs)
    y = centers[idx] + rng.standard_normal((n_samples, 2))
    logp = np.log(dist.probs)
    lnf = np.empty(n_samples)
    chunk = max(1, int(4e6) // max(1, len(dist)))
    for lo in range(0, n_samples, chunk):
        hi = min(lo + chunk, n_samples)
        e = (
            logp[None, :]
            - 0.5 * (y[lo:hi, 0:1] - centers[None, :, 0]) ** 2
            - 0.5 * (y[lo:hi, 1:2] - centers[None, :, 1]) ** 2
        )
        m = e.max(axis=1)
        lnf[lo:hi] = m + np.log(np.exp(e - m[:, None]).sum(axis=1)) - LN_2PI
    h = float(-lnf.mean())
    se = float(lnf.std(ddof=1) / math.sqrt(n_samples))
    return h, se


def odd_symmetry_residual(
    t: float, dist: DiscreteCircularDistribution, ch: Channel, grid: QuadratureGrid
) -> float:
    """Sine-weighted output-log integral that vanishes for canonical inputs.

    residual(t) = -(1/2pi) e^{-R^2/2} II e^{-((lam^2-1)/2) R^2 t^2
                  + R sqrt(2v) lam t cos psi - v}
                  * sin(sin psi * R sqrt(2v (t^2-1))) * ln f dpsi dv,  t >= 1.

    Evaluated in extended precision on its own grid (the t > 1 saddle sits at
    u ~ lam R t, beyond the solver grid) with the psi-grid pair (psi, 2pi-psi)
    accumulated jointly: the integrand magnitude reaches e^{R^2 t^2 / 2}, so
    float64 node-by-node summation would drown the 1e-8-scale result in
    cancellation noise. ln f is evaluated independently at both angles of a
    pair; no symmetry of f is assumed.
    """
    if not (math.isfinite(t) and t >= 1.0):
        raise ValueError(f"t must be >= 1, got {t}")
    if t == 1.0:
        # the sine factor is identically zero
        return 0.0
    ld = np.longdouble
    lam, radius = ld(ch.lam), ld(ch.radius)
    t_ld = ld(t)
    two_pi = ld(2) * np.arccos(ld(-1))
    u_max = float(ch.lam * ch.radius * t + 10.0)
    n_u = max(grid.n_radial, int(math.ceil(9.0 * u_max)))
    c = max(float(ch.lam * ch.radius * t) * u_max, 1.0)
    n_psi = max(
        grid.n_angular, 32 * int(math.ceil((1.45 * math.sqrt(74.0 * c) + 48.0) / 32.0))
    )
    x64, w64 = np.polynomial.legendre.leggauss(n_u)
    u = (ld(0.5) * ld(u_max)) * (x64.astype(ld) + ld(1))
    w_u = (ld(0.5) * ld(u_max)) * w64.astype(ld) * u  # dv = u du
    j = np.arange(1, n_psi // 2)  # skip psi = 0 and pi where sin psi = 0
    psi = two_pi * j.astype(ld) / ld(n_psi)
    psi_mirror = two_pi * (n_psi - j).astype(ld) / ld(n_psi)
    w_psi = two_pi / ld(n_psi)

    def log_mixture(psi_row):
        cp, sp = np.cos(psi_row), np.sin(psi_row)
        f = np.zeros((n_u, psi_row.size), dtype=ld)
        for theta, prob in dist.atoms:
            th = ld(theta)
            base = -ld(0.5) * (lam * lam - 1) * radius * radius * np.cos(th) ** 2 - ld(
                0.5
            ) * radius * radius
            coef = radius * (lam * np.cos(th) * cp + np.sin(th) * sp)
            f += ld(prob) * np.exp(
                base + u[:, None] * coef[None, :] - ld(0.5) * u[:, None] ** 2
            )
        return np.log(f) - np.log(two_pi)

    diff = log_mixture(psi) - log_mixture(psi_mirror)
    pref = (
        -ld(0.5) * radius * radius
        - ld(0.5) * (lam * lam - 1) * radius * radius * t_ld * t_ld
        + radius * lam * t_ld * u[:, None] * np.cos(psi)[None, :]
        - ld(0.5) * u[:, None] ** 2
    )
    sin_fac = np.sin(np.sin(psi)[None, :] * (radius * np.sqrt(t_ld * t_ld - 1)) * u[:, None])
    total = np.sum(w_u[:, None] * w_psi * np.exp(pref) * sin_fac * diff)
    return float(-total / two_pi)


def distribution_to_json(dist: DiscreteCircularDistribution, ch: Channel) -> str:
    """Serialize {lambda, radius, atoms} with round-trip-exact floats."""
    payload = {
        "lambda": ch.lam,
        "radius": ch.radius,
        "atoms": [{"theta": t, "prob": p} for t, p in dist.atoms],
    }
    return json.dumps(payload, indent=2)


def distribution_from_json(text: str) -> tuple[DiscreteCircularDistribution, Channel]:
    """Parse the serialization from distribution_to_json; validates everything."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError("distribution file must be a JSON object")
    missing = {"lambda", "radius", "atoms"} - set(obj)
    if missing:
        raise ValueError(f"distribution file missing keys: {sorted(missing)}")
    ch = Channel(lam=float(obj["lambda"]), radius=float(obj["radius"]))
    atoms = obj["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise ValueError("atoms must be a non-empty list")
    pairs = []
    for entry in atoms:
        if not isinstance(entry, dict) or "theta" not in entry or "prob" not in entry:
            raise ValueError(f"malformed atom entry: {entry!r}")
        pairs.append((float(entry["theta"]), float(entry["prob"])))
    return DiscreteCircularDistribution(atoms=tuple(pairs)), ch
