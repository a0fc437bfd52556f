"""Finite-support capacity solver: optimize, verify, grow.

The optimal input is closed under theta -> -theta and theta -> pi - theta, so
the search runs over symmetry orbits: the axis pairs {0, pi} and
{pi/2, 3pi/2}, and interior quadruples {a, -a, pi-a, pi+a} with a in
(0, pi/2). Probabilities live on the simplex over orbits, positions in the
open interval; both are updated by projected gradient ascent with a
backtracking line search. A solution is accepted when the marginal entropy
density is level on the support and nowhere above it (checked on a dense
angle grid); otherwise a new orbit is inserted where the violation peaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import (
    Channel,
    DiscreteCircularDistribution,
    EntropyReport,
    output_entropy,
    output_log_pdf_grid,
)
from .quadrature import QuadratureGrid, build_polar_grid

__all__ = [
    "SolverConfig",
    "KktReport",
    "CapacityResult",
    "SweepEntry",
    "SolverError",
    "entropy_gradient",
    "optimize_fixed_support",
    "verify_conditions",
    "solve_capacity",
    "sweep_radius",
    "capacity_result_to_dict",
]


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and limits for the solver."""

    kkt_tol: float = 1e-6
    theta_grid_size: int = 2048
    max_atoms: int = 64
    merge_eps: float = 1e-4
    max_iterations: int = 500
    grad_tol: float = 1e-8
    h_improvement_tol: float = 1e-12
    fd_step: float = 1e-5
    new_atom_prob: float = 1e-3
    warm_start: bool = True
    n_radial: int | None = None
    n_angular: int | None = None

    def __post_init__(self):
        for name in (
            "kkt_tol",
            "merge_eps",
            "grad_tol",
            "h_improvement_tol",
            "fd_step",
            "new_atom_prob",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_atoms < 2:
            raise ValueError("max_atoms must be >= 2")
        if self.theta_grid_size < 8 or self.max_iterations < 1:
            raise ValueError("theta_grid_size and max_iterations must be sensible positives")


@dataclass(frozen=True)
class KktReport:
    """Worst-case optimality violation over a dense angle grid.

    max_violation is the signed sup of htilde(theta) - h (negative when the
    conditions hold with slack); support_gap is max |htilde(theta_i) - h| over
    the atoms. satisfied is derived from the two comparisons against kkt_tol.
    """

    max_violation: float
    support_gap: float
    argmax_theta: float
    kkt_tol: float
    grid_size: int
    satisfied: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "satisfied",
            bool(self.max_violation <= self.kkt_tol and self.support_gap <= self.kkt_tol),
        )


@dataclass(frozen=True)
class CapacityResult:
    """Verified solve output for one channel."""

    channel: Channel
    distribution: DiscreteCircularDistribution
    entropy: EntropyReport
    kkt: KktReport
    trace: tuple[int, ...]


@dataclass(frozen=True)
class SweepEntry:
    """One radius of a sweep; either a result or an error message."""

    radius: float
    result: CapacityResult | None
    error: str | None


class SolverError(RuntimeError):
    """Raised on non-convergence; carries the best iterate found."""

    def __init__(self, message, best=None, entropy=None, kkt=None):
        super().__init__(message)
        self.best = best
        self.entropy = entropy
        self.kkt = kkt


# ---------------------------------------------------------------------------
# symmetry orbits


@dataclass(frozen=True)
class _Orbit:
    kind: str  # "axis0", "axis90", "generic"
    alpha: float = 0.0

    def angles(self) -> tuple[float, ...]:
        if self.kind == "axis0":
            return (0.0, math.pi)
        if self.kind == "axis90":
            return (0.5 * math.pi, 1.5 * math.pi)
        a = self.alpha
        return (a, 2.0 * math.pi - a, math.pi - a, math.pi + a)

    @property
    def rep(self) -> float:
        if self.kind == "axis0":
            return 0.0
        if self.kind == "axis90":
            return 0.5 * math.pi
        return self.alpha

    @property
    def size(self) -> int:
        return 2 if self.kind in ("axis0", "axis90") else 4


def _fold(theta: float) -> float:
    a = theta % math.pi
    return min(a, math.pi - a)


def _classify(theta: float, snap: float) -> _Orbit:
    a = _fold(theta)
    if a < snap:
        return _Orbit("axis0")
    if a > 0.5 * math.pi - snap:
        return _Orbit("axis90")
    return _Orbit("generic", a)


def _expand(orbits: list[_Orbit], q: np.ndarray) -> DiscreteCircularDistribution:
    atoms = []
    for orbit, weight in zip(orbits, q):
        share = weight / orbit.size
        for angle in orbit.angles():
            atoms.append((angle, share))
    # remove float drift in the total
    total = math.fsum(p for _, p in atoms)
    atoms = [(t, p / total) for t, p in atoms]
    return DiscreteCircularDistribution(atoms=tuple(atoms))


def _decompose(dist: DiscreteCircularDistribution, snap: float) -> tuple[list[_Orbit], np.ndarray]:
    """Project a distribution onto orbit structure (symmetrizes if needed)."""
    orbits: list[_Orbit] = []
    weights: list[float] = []
    for theta, prob in dist.atoms:
        orbit = _classify(theta, snap)
        for i, existing in enumerate(orbits):
            if existing.kind == orbit.kind and (
                existing.kind != "generic" or abs(existing.alpha - orbit.alpha) < snap
            ):
                weights[i] += prob
                break
        else:
            orbits.append(orbit)
            weights.append(prob)
    q = np.array(weights)
    return orbits, q / q.sum()


def _default_orbits(n_atoms: int) -> list[_Orbit]:
    orbits = [_Orbit("axis0")]
    budget = n_atoms - 2
    if budget >= 2:
        orbits.append(_Orbit("axis90"))
        budget -= 2
    n_generic = budget // 4
    for i in range(n_generic):
        orbits.append(_Orbit("generic", (i + 1) * 0.5 * math.pi / (n_generic + 1)))
    return orbits


def _project_simplex(x: np.ndarray) -> np.ndarray:
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(x) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(x - tau, 0.0)


# ---------------------------------------------------------------------------
# gradients


def entropy_gradient(
    dist: DiscreteCircularDistribution,
    ch: Channel,
    grid: QuadratureGrid,
    fd_step: float = 1e-5,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-atom derivatives of the output entropy.

    d_prob[i] = htilde(theta_i) - h is the weak derivative toward a point mass
    at theta_i; d_theta[i] = p_i * dhtilde/dtheta by central differences.
    """
    from .channel import marginal_entropy_profile

    f, logf = output_log_pdf_grid(dist, ch, grid)
    h = _kernels.grid_entropy(grid.v_weights, grid.psi_weights, f, logf)
    thetas = dist.thetas
    probs = dist.probs
    h_at = marginal_entropy_profile(thetas, dist, ch, grid, logf=logf)
    shifted = np.concatenate([thetas + fd_step, thetas - fd_step])
    h_shift = marginal_entropy_profile(shifted, dist, ch, grid, logf=logf)
    n = len(thetas)
    d_theta = probs * (h_shift[:n] - h_shift[n:]) / (2.0 * fd_step)
    return h_at - h, d_theta


# ---------------------------------------------------------------------------
# fixed-support optimization


class _OrbitProblem:
    """Entropy and gradients as functions of (q, alphas) for fixed orbits."""

    def __init__(self, ch: Channel, grid: QuadratureGrid, cfg: SolverConfig):
        self.ch = ch
        self.grid = grid
        self.cfg = cfg

    def entropy(self, orbits, q) -> float:
        dist = _expand(orbits, q)
        f, logf = output_log_pdf_grid(dist, self.ch, self.grid)
        return _kernels.grid_entropy(self.grid.v_weights, self.grid.psi_weights, f, logf)

    def entropy_and_gradients(self, orbits, q):
        """Entropy, weight gradient, and unscaled position slopes.

        The true position gradient is q_j * slope_j; the slope is returned
        unscaled so the ascent direction stays well conditioned when an orbit
        carries little weight.
        """
        from .channel import marginal_entropy_profile

        dist = _expand(orbits, q)
        f, logf = output_log_pdf_grid(dist, self.ch, self.grid)
        h = _kernels.grid_entropy(self.grid.v_weights, self.grid.psi_weights, f, logf)
        reps = np.array([o.rep for o in orbits])
        gen_idx = [i for i, o in enumerate(orbits) if o.kind == "generic"]
        delta = self.cfg.fd_step
        eval_angles = list(reps)
        for i in gen_idx:
            eval_angles.extend((orbits[i].alpha + delta, orbits[i].alpha - delta))
        prof = marginal_entropy_profile(eval_angles, dist, self.ch, self.grid, logf=logf)
        d_q = prof[: len(orbits)] - h
        slope = np.zeros(len(gen_idx))
        for j, i in enumerate(gen_idx):
            plus = prof[len(orbits) + 2 * j]
            minus = prof[len(orbits) + 2 * j + 1]
            slope[j] = (plus - minus) / (2.0 * delta)
        return h, d_q, slope, gen_idx


def _optimize_orbits(
    orbits: list[_Orbit],
    q: np.ndarray,
    ch: Channel,
    grid: QuadratureGrid,
    cfg: SolverConfig,
) -> tuple[list[_Orbit], np.ndarray, float, bool]:
    """Projected gradient ascent over orbit weights and positions."""
    problem = _OrbitProblem(ch, grid, cfg)
    alpha_lo = cfg.merge_eps
    alpha_hi = 0.5 * math.pi - cfg.merge_eps
    pos_step = 0.1
    ba_step = 1.0
    h = -math.inf
    # Weights follow the multiplicative capacity iteration with an adaptive
    # temperature, q_i <- q_i exp(beta (htilde_i - h)) / norm: its fixed point
    # is a level profile on the support, superfluous atoms shrink
    # geometrically, and the line-searched beta covers both the far regime
    # (tiny seeds must grow by orders of magnitude) and the flat tail.
    # Positions take line-searched slope steps; they only need the profile
    # slope small enough that the local peak excess slope^2/(2 curvature)
    # clears kkt_tol.
    gap_target = max(cfg.grad_tol, 0.25 * cfg.kkt_tol)
    slope_target = 0.5 * math.sqrt(cfg.kkt_tol)
    snap_state = None
    snap_it = -10**9
    converged = False
    tighten_left = 8
    for it in range(cfg.max_iterations):
        h, d_q, slope, gen_idx = problem.entropy_and_gradients(orbits, q)
        support_gap = float(np.max(np.abs(d_q)))
        slope_resid = float(np.max(np.abs(slope))) if gen_idx else 0.0
        if support_gap < gap_target and slope_resid < slope_target:
            # cheap criteria met: confirm on the dense angular grid, since a
            # nearly flat profile valley can hide an off-atom bump above
            # kkt_tol behind a tiny position slope
            report = verify_conditions(_expand(orbits, q), ch, cfg, grid)
            if report.satisfied:
                converged = True
                break
            fold = _fold(report.argmax_theta)
            near_generic = any(
                o.kind == "generic" and abs(o.alpha - fold) < 0.2 for o in orbits
            )
            if not (near_generic and tighten_left > 0):
                # bump is not reachable by sliding an existing orbit; exit
                # and let support growth place a new one there
                break
            tighten_left -= 1
            slope_target *= 0.25
        h_base = h
        if len(q) > 1:
            shifted = d_q - np.max(d_q)
            beta = ba_step
            while beta > 1e-10:
                w = q * np.exp(beta * shifted)
                q_new = w / w.sum()
                h_new = problem.entropy(orbits, q_new)
                gain = float(d_q @ (q_new - q))
                if h_new >= h + 1e-4 * gain - 5e-14:
                    q = q_new
                    h_base = h_new
                    # shifted <= 0 so huge beta cannot overflow; the Armijo
                    # check above rejects any overshoot, and near the level
                    # profile the gaps are ~kkt_tol, so beta must reach
                    # ~1/kkt_tol for weight transport to finish quickly
                    ba_step = min(beta * 2.0, 1e8)
                    break
                beta *= 0.5
        keep = q > 1e-15
        if not np.all(keep):
            gen_keep = np.array([keep[i] for i in gen_idx], dtype=bool)
            slope = slope[gen_keep]
            orbits = [o for o, k in zip(orbits, keep) if k]
            q = q[keep] / q[keep].sum()
            gen_idx = [i for i, o in enumerate(orbits) if o.kind == "generic"]
        # position update with a backtracking safeguard
        if gen_idx and slope_resid > 0.5 * slope_target:
            alphas = np.array([orbits[i].alpha for i in gen_idx])
            q_gen = np.array([q[i] for i in gen_idx])
            eta = pos_step
            while eta > 1e-12:
                a_new = np.clip(alphas + eta * slope, alpha_lo, alpha_hi)
                trial_orbits = list(orbits)
                for j, i in enumerate(gen_idx):
                    trial_orbits[i] = _Orbit("generic", float(a_new[j]))
                h_new = problem.entropy(trial_orbits, q)
                gain = float((q_gen * slope) @ (a_new - alphas))
                if h_new >= h_base + 1e-4 * gain - 5e-14:
                    orbits = trial_orbits
                    pos_step = min(eta * 1.5, 2.0)
                    break
                eta *= 0.5
        orbits, q = _merge_orbits(orbits, q, cfg)
        # Secant extrapolation every 20 iterations: alternating small weight
        # and position steps zigzag along coupled valleys at a linear rate,
        # so periodically jump along the recent displacement direction.
        if it - snap_it >= 20:
            gen_now = [i for i, o in enumerate(orbits) if o.kind == "generic"]
            kinds = tuple(o.kind for o in orbits)
            if snap_state is not None and snap_state[0] == kinds:
                _, q_old, a_old = snap_state
                alphas = np.array([orbits[i].alpha for i in gen_now])
                dq_dir = q - q_old
                da_dir = alphas - a_old
                if float(np.max(np.abs(dq_dir))) > 0 or (
                    gen_now and float(np.max(np.abs(da_dir))) > 0
                ):
                    h_cur = problem.entropy(orbits, q)
                    best = None
                    for gamma in (32.0, 16.0, 8.0, 4.0, 2.0):
                        q_ext = np.maximum(q + gamma * dq_dir, 0.0)
                        total = q_ext.sum()
                        if total <= 0:
                            continue
                        q_ext = q_ext / total
                        live = q_ext > 1e-15
                        a_ext = np.clip(alphas + gamma * da_dir, alpha_lo, alpha_hi)
                        trial_orbits = list(orbits)
                        for j, i in enumerate(gen_now):
                            trial_orbits[i] = _Orbit("generic", float(a_ext[j]))
                        trial_orbits = [o for o, k in zip(trial_orbits, live) if k]
                        q_trial = q_ext[live] / q_ext[live].sum()
                        trial_orbits, q_trial = _merge_orbits(trial_orbits, q_trial, cfg)
                        h_ext = problem.entropy(trial_orbits, q_trial)
                        if h_ext > h_cur and (best is None or h_ext > best[0]):
                            best = (h_ext, trial_orbits, q_trial)
                    if best is not None:
                        _, orbits, q = best
                        gen_now = [i for i, o in enumerate(orbits) if o.kind == "generic"]
            snap_state = (
                tuple(o.kind for o in orbits),
                q.copy(),
                np.array([orbits[i].alpha for i in gen_now]),
            )
            snap_it = it
    return orbits, q, h, converged


def _merge_orbits(orbits, q, cfg: SolverConfig):
    """Collapse boundary-pinned or coincident orbits."""
    merged: list[_Orbit] = []
    weights: list[float] = []

    def add(orbit, weight):
        for i, existing in enumerate(merged):
            same = existing.kind == orbit.kind and (
                orbit.kind != "generic" or abs(existing.alpha - orbit.alpha) < cfg.merge_eps
            )
            if same:
                weights[i] += weight
                return
        merged.append(orbit)
        weights.append(weight)

    for orbit, weight in zip(orbits, q):
        if orbit.kind == "generic" and orbit.alpha <= 1.5 * cfg.merge_eps:
            add(_Orbit("axis0"), weight)
        elif orbit.kind == "generic" and orbit.alpha >= 0.5 * math.pi - 1.5 * cfg.merge_eps:
            add(_Orbit("axis90"), weight)
        else:
            add(orbit, weight)
    w = np.array(weights)
    return merged, w / w.sum()


def optimize_fixed_support(
    n_atoms: int,
    ch: Channel,
    cfg: SolverConfig | None = None,
    init: DiscreteCircularDistribution | None = None,
) -> tuple[DiscreteCircularDistribution, EntropyReport]:
    """Locally maximize output entropy over canonical distributions with at
    most n_atoms atoms.

    A given init is projected onto orbit structure (which symmetrizes it);
    otherwise a default layout (axis pairs first, then equispaced interior
    quadruples) fills the atom budget.
    """
    cfg = cfg or SolverConfig()
    if n_atoms < 2:
        raise ValueError("need at least two atoms")
    if n_atoms > cfg.max_atoms:
        raise ValueError(f"n_atoms={n_atoms} exceeds max_atoms={cfg.max_atoms}")
    grid = build_polar_grid(ch, cfg.n_radial, cfg.n_angular)
    if init is not None:
        orbits, q = _decompose(init, cfg.merge_eps)
    else:
        orbits = _default_orbits(n_atoms)
        q = np.full(len(orbits), 1.0 / len(orbits))
        if n_atoms < 4:
            # two-atom budget: pick the better axis pair
            problem = _OrbitProblem(ch, grid, cfg)
            h0 = problem.entropy([_Orbit("axis0")], np.array([1.0]))
            h90 = problem.entropy([_Orbit("axis90")], np.array([1.0]))
            orbits = [_Orbit("axis0") if h0 >= h90 else _Orbit("axis90")]
            q = np.array([1.0])
    if sum(o.size for o in orbits) > n_atoms:
        raise ValueError("initial distribution uses more atoms than n_atoms")
    orbits, q, _, _ = _optimize_orbits(orbits, q, ch, grid, cfg)
    dist = _expand(orbits, q)
    return dist, output_entropy(dist, ch, grid)


# ---------------------------------------------------------------------------
# verification and support growth


def verify_conditions(
    dist: DiscreteCircularDistribution,
    ch: Channel,
    cfg: SolverConfig | None = None,
    grid: QuadratureGrid | None = None,
) -> KktReport:
    """Check the level-on-support / below-elsewhere optimality conditions.

    Evaluates htilde on a uniform grid of theta_grid_size angles plus the atom
    angles and compares against the output entropy.
    """
    from .channel import marginal_entropy_profile

    cfg = cfg or SolverConfig()
    if grid is None:
        grid = build_polar_grid(ch, cfg.n_radial, cfg.n_angular)
    f, logf = output_log_pdf_grid(dist, ch, grid)
    h = _kernels.grid_entropy(grid.v_weights, grid.psi_weights, f, logf)
    n = cfg.theta_grid_size
    grid_angles = 2.0 * math.pi * np.arange(n) / n
    angles = np.concatenate([grid_angles, dist.thetas])
    prof = marginal_entropy_profile(angles, dist, ch, grid, logf=logf)
    violations = prof - h
    worst = int(np.argmax(violations))
    support_gap = float(np.max(np.abs(violations[n:])))
    return KktReport(
        max_violation=float(violations[worst]),
        support_gap=support_gap,
        argmax_theta=float(angles[worst]),
        kkt_tol=cfg.kkt_tol,
        grid_size=n,
    )


def solve_capacity(
    ch: Channel,
    cfg: SolverConfig | None = None,
    init: DiscreteCircularDistribution | None = None,
) -> CapacityResult:
    """Smallest-support verified optimum: optimize, verify, grow.

    Starts from the two-point axis distribution (or a warm-start init), checks
    the optimality conditions on a dense grid, and inserts a new orbit at the
    worst violation until the conditions hold or max_atoms is exhausted.
    """
    cfg = cfg or SolverConfig()
    if ch.lam <= 1.0:
        raise ValueError(
            "solver requires lam > 1: at lam = 1 the optimal input is a continuous "
            "uniform phase, outside the finite-support search"
        )
    grid = build_polar_grid(ch, cfg.n_radial, cfg.n_angular)
    if init is not None:
        orbits, q = _decompose(init, cfg.merge_eps)
    else:
        orbits, q = [_Orbit("axis0")], np.array([1.0])
    trace: list[int] = []
    best: tuple[DiscreteCircularDistribution, KktReport] | None = None
    while True:
        orbits, q, _, converged = _optimize_orbits(orbits, q, ch, grid, cfg)
        dist = _expand(orbits, q)
        trace.append(len(dist))
        report = verify_conditions(dist, ch, cfg, grid)
        best = (dist, report)
        if report.satisfied:
            return CapacityResult(
                channel=ch,
                distribution=dist,
                entropy=output_entropy(dist, ch, grid),
                kkt=report,
                trace=tuple(trace),
            )
        new_orbit = _classify(report.argmax_theta, max(cfg.merge_eps, 1e-3))
        clash = any(
            o.kind == new_orbit.kind
            and (o.kind != "generic" or abs(o.alpha - new_orbit.alpha) < 10 * cfg.merge_eps)
            for o in orbits
        )
        if clash:
            detail = (
                "coincides with existing support after the inner optimization "
                "hit max_iterations"
                if not converged
                else "coincides with existing support"
            )
            raise SolverError(
                f"support growth stalled: violation argmax {report.argmax_theta:.6f} "
                f"{detail}",
                best=dist,
                entropy=output_entropy(dist, ch, grid),
                kkt=report,
            )
        if sum(o.size for o in orbits) + new_orbit.size > cfg.max_atoms:
            raise SolverError(
                f"max_atoms={cfg.max_atoms} exhausted without satisfying conditions",
                best=dist,
                entropy=output_entropy(dist, ch, grid),
                kkt=report,
            )
        orbits = orbits + [new_orbit]
        q = np.concatenate([q * (1.0 - cfg.new_atom_prob), [cfg.new_atom_prob]])


def sweep_radius(lam: float, r_values, cfg: SolverConfig | None = None) -> list[SweepEntry]:
    """Solve along an ascending radius grid, warm-starting from the previous
    solution; failures are recorded per radius and the sweep continues."""
    cfg = cfg or SolverConfig()
    r_list = [float(r) for r in r_values]
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("r_values must be strictly ascending")
    entries: list[SweepEntry] = []
    prev: DiscreteCircularDistribution | None = None
    for r in r_list:
        ch = Channel(lam=lam, radius=r)
        init = prev if cfg.warm_start else None
        try:
            result = solve_capacity(ch, cfg, init=init)
            entries.append(SweepEntry(radius=r, result=result, error=None))
            prev = result.distribution
        except (SolverError, ValueError) as exc:
            entries.append(SweepEntry(radius=r, result=None, error=str(exc)))
            prev = None
    return entries


def capacity_result_to_dict(result: CapacityResult) -> dict:
    """JSON-ready view of a CapacityResult."""
    return {
        "channel": {"lambda": result.channel.lam, "radius": result.channel.radius},
        "atoms": [{"theta": t, "prob": p} for t, p in result.distribution.atoms],
        "capacity_nats": result.entropy.capacity,
        "entropy_nats": result.entropy.h_output,
        "kkt": {
            "max_violation": result.kkt.max_violation,
            "support_gap": result.kkt.support_gap,
            "argmax_theta": result.kkt.argmax_theta,
            "kkt_tol": result.kkt.kkt_tol,
            "grid_size": result.kkt.grid_size,
            "satisfied": result.kkt.satisfied,
        },
        "trace": list(result.trace),
    }
