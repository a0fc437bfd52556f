"""Command-line front end: solves, sweeps, analyses, and result persistence.

Every command validates its parameters before any computation, echoes the
full effective configuration (defaults included) into a result envelope, and
writes output files atomically. Information quantities are stored in nats;
--bits only changes the printed summary. Exit codes: 0 success, 1 bad input,
2 computation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone

from . import __version__
from .analysis import (
    BracketingError,
    capacity_bounds,
    threshold_vs_waterfilling,
    uniform_sphere_mi,
    waterfilling,
)
from .channel import Channel, distribution_from_json
from .optimizer import (
    SolverConfig,
    SolverError,
    capacity_result_to_dict,
    solve_capacity,
    sweep_radius,
    verify_conditions,
)

ENV_OUTPUT_DIR = "CECAP_OUTPUT_DIR"
_LN2 = math.log(2.0)

_SOLVER_FIELDS = (
    "kkt_tol",
    "theta_grid_size",
    "max_atoms",
    "merge_eps",
    "max_iterations",
    "n_radial",
    "n_angular",
)


class _CliError(Exception):
    """Input or validation problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; route through the 1=bad-input contract
    def error(self, message):
        raise _CliError(message)


def _floats_csv(text: str) -> list[float]:
    try:
        vals = [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise _CliError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise _CliError(f"expected at least one number, got {text!r}")
    return vals


def _add_common(sp):
    sp.add_argument("--config", default=None, help="key = value file; flags win over it")
    sp.add_argument("--output-dir", dest="output_dir", default=None,
                    help=f"where result files go (default ${ENV_OUTPUT_DIR} or '.')")
    sp.add_argument("--bits", action="store_true", default=None,
                    help="print information quantities in bits (files stay in nats)")


def _add_solver_flags(sp):
    sp.add_argument("--kkt-tol", dest="kkt_tol", type=float, default=None)
    sp.add_argument("--theta-grid-size", dest="theta_grid_size", type=int, default=None)
    sp.add_argument("--max-atoms", dest="max_atoms", type=int, default=None)
    sp.add_argument("--merge-eps", dest="merge_eps", type=float, default=None)
    sp.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)
    sp.add_argument("--n-radial", dest="n_radial", type=int, default=None,
                    help="radial quadrature nodes (default: auto-sized)")
    sp.add_argument("--n-angular", dest="n_angular", type=int, default=None,
                    help="angular quadrature nodes (default: auto-sized)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cecap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    solve = sub.add_parser("solve", help="verified capacity optimum for one channel")
    solve.add_argument("--lambda", dest="lam", type=float, default=None, help="gain ratio > 1")
    solve.add_argument("--radius", type=float, default=None, help="input norm > 0")
    solve.add_argument("--format", choices=("json",), default=None)
    _add_solver_flags(solve)
    _add_common(solve)

    sweep = sub.add_parser("sweep", help="capacity across an ascending radius grid")
    sweep.add_argument("--lambda", dest="lam", type=float, default=None)
    sweep.add_argument("--radii", type=_floats_csv, default=None,
                       help="comma-separated radii, ascending")
    sweep.add_argument("--r-min", dest="r_min", type=float, default=None)
    sweep.add_argument("--r-max", dest="r_max", type=float, default=None)
    sweep.add_argument("--r-count", dest="r_count", type=int, default=None)
    sweep.add_argument("--no-warm-start", dest="no_warm_start", action="store_true", default=None)
    sweep.add_argument("--format", choices=("csv", "json"), default=None)
    _add_solver_flags(sweep)
    _add_common(sweep)

    threshold = sub.add_parser("threshold", help="norm threshold vs water-filling activation")
    threshold.add_argument("--lambda", dest="lam", type=_floats_csv, default=None,
                           help="one or more gain ratios > 1, comma-separated")
    threshold.add_argument("--format", choices=("csv", "json"), default=None)
    _add_common(threshold)

    bounds = sub.add_parser("bounds", help="capacity lower/upper bounds")
    bounds.add_argument("--n", type=int, default=None, help="dimension >= 2")
    bounds.add_argument("--det", type=float, default=None, help="determinant magnitude > 0")
    bounds.add_argument("--radius", action="append", type=float, default=None,
                        help="input norm; repeatable")
    bounds.add_argument("--format", choices=("csv", "json"), default=None)
    _add_common(bounds)

    waterfill = sub.add_parser("waterfill", help="average-power water-filling allocation")
    waterfill.add_argument("--lambda", dest="lam", type=float, default=None)
    waterfill.add_argument("--radius", type=float, default=None)
    waterfill.add_argument("--format", choices=("json",), default=None)
    _add_common(waterfill)

    dof = sub.add_parser("dof", help="Monte-Carlo mutual information, uniform-sphere input")
    dof.add_argument("--n", type=int, default=None, help="dimension, 2 or 3")
    dof.add_argument("--lambda", dest="lam", type=float, default=None)
    dof.add_argument("--svals", type=_floats_csv, default=None,
                     help="singular values (default: lambda,1[,1])")
    dof.add_argument("--radii", type=_floats_csv, default=None)
    dof.add_argument("--samples", type=int, default=None)
    dof.add_argument("--seed", type=int, default=None)
    dof.add_argument("--format", choices=("csv", "json"), default=None)
    _add_common(dof)

    verify = sub.add_parser("verify", help="check optimality of a stored distribution")
    verify.add_argument("distribution", help="distribution JSON file")
    verify.add_argument("--format", choices=("json",), default=None)
    _add_solver_flags(verify)
    _add_common(verify)

    return p


# ---------------------------------------------------------------------------
# config file + defaults


def _apply_config_file(ns, parser: argparse.ArgumentParser):
    """Merge key = value entries under the flags (flags win)."""
    sub_actions = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    command_parser = sub_actions.choices[ns.command]
    actions = {a.dest: a for a in command_parser._actions if a.dest not in ("help",)}
    try:
        with open(ns.config, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise _CliError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise _CliError(f"{ns.config}:{lineno}: expected 'key = value', got {text!r}")
        key, _, raw = text.partition("=")
        dest = key.strip().lower().replace("-", "_")
        if dest == "lambda":
            dest = "lam"
        raw = raw.strip()
        action = actions.get(dest)
        if action is None or dest in ("config", "command", "distribution"):
            raise _CliError(f"{ns.config}:{lineno}: unknown config key '{key.strip()}'")
        if getattr(ns, dest, None) is not None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            value = [action.type(part) for part in raw.split(",") if part.strip()]
        elif action.type is not None:
            try:
                value = action.type(raw)
            except (TypeError, ValueError):
                raise _CliError(f"{ns.config}:{lineno}: bad value for '{key.strip()}'") from None
        else:
            value = raw
        setattr(ns, dest, value)


def _require(value, flag):
    if value is None:
        raise _CliError(f"missing required option {flag}")
    return value


def _resolve_common(ns, default_format):
    ns.output_dir = ns.output_dir or os.environ.get(ENV_OUTPUT_DIR) or "."
    ns.bits = bool(ns.bits)
    ns.format = ns.format or default_format


def _solver_config(ns) -> SolverConfig:
    overrides = {
        name: getattr(ns, name)
        for name in _SOLVER_FIELDS
        if getattr(ns, name, None) is not None
    }
    if getattr(ns, "no_warm_start", None):
        overrides["warm_start"] = False
    try:
        return SolverConfig(**overrides)
    except ValueError as exc:
        raise _CliError(str(exc)) from None


def _solver_echo(cfg: SolverConfig) -> dict:
    return {
        "kkt_tol": cfg.kkt_tol,
        "theta_grid_size": cfg.theta_grid_size,
        "max_atoms": cfg.max_atoms,
        "merge_eps": cfg.merge_eps,
        "max_iterations": cfg.max_iterations,
        "n_radial": cfg.n_radial,
        "n_angular": cfg.n_angular,
        "warm_start": cfg.warm_start,
    }


# ---------------------------------------------------------------------------
# output helpers


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cecap-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def payload_checksum(payload) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_envelope(command: str, echo: dict, payload, out_dir: str) -> str:
    envelope = {
        "tool": "cecap",
        "version": __version__,
        "command": command,
        "config": echo,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "payload": payload,
        "payload_sha256": payload_checksum(payload),
    }
    path = os.path.join(out_dir, f"{command}.json")
    _atomic_write(path, json.dumps(envelope, indent=2, sort_keys=True) + "\n")
    return path


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(x) for x in row) + "\n")
    _atomic_write(path, buf.getvalue())
    return path


def _fmt_nats(x: float, bits: bool) -> str:
    return f"{x / _LN2:.6f} bits" if bits else f"{x:.6f} nats"


# ---------------------------------------------------------------------------
# commands


def _cmd_solve(ns) -> int:
    lam = _require(ns.lam, "--lambda")
    radius = _require(ns.radius, "--radius")
    if not lam > 1.0:
        raise _CliError(
            "--lambda must be > 1: the identity channel is excluded because its "
            "optimal input is a continuous uniform phase, not a finite atom set"
        )
    if not radius > 0.0:
        raise _CliError("--radius must be > 0")
    cfg = _solver_config(ns)
    echo = {
        "lambda": lam,
        "radius": radius,
        **_solver_echo(cfg),
        "output_dir": ns.output_dir,
        "format": ns.format,
        "bits": ns.bits,
    }
    try:
        result = solve_capacity(Channel(lam=lam, radius=radius), cfg)
    except SolverError as exc:
        payload = {"error": str(exc)}
        if exc.best is not None:
            payload["best"] = {
                "atoms": [{"theta": t, "prob": p} for t, p in exc.best.atoms],
                "entropy_nats": exc.entropy.h_output if exc.entropy else None,
                "capacity_nats": exc.entropy.capacity if exc.entropy else None,
            }
        if exc.kkt is not None:
            payload["kkt"] = {
                "max_violation": exc.kkt.max_violation,
                "support_gap": exc.kkt.support_gap,
                "satisfied": exc.kkt.satisfied,
            }
        path = _write_envelope("solve", echo, payload, ns.output_dir)
        print(f"solve failed: {exc}", file=sys.stderr)
        print(f"wrote {path}")
        return 2
    path = _write_envelope("solve", echo, capacity_result_to_dict(result), ns.output_dir)
    print(
        f"capacity {_fmt_nats(result.entropy.capacity, ns.bits)}, "
        f"{len(result.distribution)} atoms, max violation {result.kkt.max_violation:.3e}"
    )
    print(f"wrote {path}")
    return 0


def _sweep_radii(ns) -> list[float]:
    if ns.radii is not None:
        if ns.r_min is not None or ns.r_max is not None or ns.r_count is not None:
            raise _CliError("give either --radii or the --r-min/--r-max/--r-count trio, not both")
        return list(ns.radii)
    if ns.r_min is None or ns.r_max is None or ns.r_count is None:
        raise _CliError("missing radius grid: give --radii or all of --r-min/--r-max/--r-count")
    if ns.r_count < 1:
        raise _CliError("--r-count must be >= 1")
    if not 0.0 < ns.r_min <= ns.r_max:
        raise _CliError("need 0 < --r-min <= --r-max")
    if ns.r_count == 1:
        return [ns.r_min]
    step = (ns.r_max - ns.r_min) / (ns.r_count - 1)
    return [ns.r_min + i * step for i in range(ns.r_count)]


def _cmd_sweep(ns) -> int:
    lam = _require(ns.lam, "--lambda")
    if not lam > 1.0:
        raise _CliError("--lambda must be > 1 (identity channel excluded)")
    radii = _sweep_radii(ns)
    cfg = _solver_config(ns)
    echo = {
        "lambda": lam,
        "radii": radii,
        **_solver_echo(cfg),
        "output_dir": ns.output_dir,
        "format": ns.format,
        "bits": ns.bits,
    }
    try:
        entries = sweep_radius(lam, radii, cfg)
    except ValueError as exc:
        raise _CliError(str(exc)) from None
    rows = []
    payload_rows = []
    failures = 0
    for e in entries:
        if e.result is not None:
            rows.append(
                (
                    float(e.radius),
                    float(e.result.entropy.capacity),
                    len(e.result.distribution),
                    float(e.result.kkt.max_violation),
                )
            )
            payload_rows.append(
                {"radius": e.radius, **capacity_result_to_dict(e.result)}
            )
            print(
                f"R={e.radius:g}: capacity {_fmt_nats(e.result.entropy.capacity, ns.bits)}, "
                f"{len(e.result.distribution)} atoms"
            )
        else:
            failures += 1
            rows.append((float(e.radius), None, None, None))
            payload_rows.append({"radius": e.radius, "error": e.error})
            print(f"R={e.radius:g}: failed: {e.error}", file=sys.stderr)
    payload = {"rows": payload_rows, "failures": failures}
    path = _write_envelope("sweep", echo, payload, ns.output_dir)
    print(f"wrote {path}")
    if ns.format == "csv":
        csv_path = _write_csv(
            os.path.join(ns.output_dir, "sweep.csv"),
            ("radius", "capacity", "n_atoms", "max_violation"),
            rows,
        )
        print(f"wrote {csv_path}")
    return 2 if failures else 0


def _cmd_threshold(ns) -> int:
    lams = _require(ns.lam, "--lambda")
    for lam in lams:
        if not lam > 1.0:
            raise _CliError(f"--lambda values must be > 1, got {lam:g}")
    echo = {
        "lambda": list(lams),
        "output_dir": ns.output_dir,
        "format": ns.format,
        "bits": ns.bits,
    }
    table = threshold_vs_waterfilling(lams)
    rows = []
    payload_rows = []
    failures = 0
    for row in table:
        rows.append((float(row.lam), row.r_threshold, float(row.activation_level), row.gap))
        payload_rows.append(
            {
                "lambda": row.lam,
                "r_threshold": row.r_threshold,
                "wf_level": row.activation_level,
                "gap": row.gap,
                "error": row.error,
            }
        )
        if row.error is not None:
            failures += 1
            print(f"lambda={row.lam:g}: failed: {row.error}", file=sys.stderr)
        else:
            print(
                f"lambda={row.lam:g}: r_threshold={row.r_threshold:.6f}, "
                f"wf_level={row.activation_level:.6f}"
            )
    path = _write_envelope("threshold", echo, {"rows": payload_rows}, ns.output_dir)
    print(f"wrote {path}")
    if ns.format == "csv":
        csv_path = _write_csv(
            os.path.join(ns.output_dir, "threshold.csv"),
            ("lambda", "r_threshold", "wf_level", "gap"),
            rows,
        )
        print(f"wrote {csv_path}")
    return 2 if failures else 0


def _cmd_bounds(ns) -> int:
    n = _require(ns.n, "--n")
    det = _require(ns.det, "--det")
    radii = _require(ns.radius, "--radius")
    try:
        results = [capacity_bounds(n, det, r) for r in radii]
    except ValueError as exc:
        raise _CliError(str(exc)) from None
    echo = {
        "n": n,
        "det": det,
        "radius": list(radii),
        "output_dir": ns.output_dir,
        "format": ns.format,
        "bits": ns.bits,
    }
    rows = [
        (b.n, float(b.det_h), float(b.radius), float(b.lower_nats), float(b.upper_nats))
        for b in results
    ]
    payload_rows = [
        {
            "n": b.n,
            "det_h": b.det_h,
            "radius": b.radius,
            "lower_nats": b.lower_nats,
            "upper_nats": b.upper_nats,
        }
        for b in results
    ]
    slopes = [
        (b2.upper_nats - b1.upper_nats) / (math.log(b2.radius) - math.log(b1.radius))
        for b1, b2 in zip(results, results[1:])
        if b2.radius != b1.radius
    ]
    for b in results:
        print(
            f"n={b.n} R={b.radius:g}: lower {_fmt_nats(b.lower_nats, ns.bits)}, "
            f"upper {_fmt_nats(b.upper_nats, ns.bits)}"
        )
    if slopes:
        print("upper-bound slope vs ln R: " + ", ".join(f"{s:.6f}" for s in slopes))
    payload = {"rows": payload_rows, "upper_slope_vs_ln_r": slopes}
    path = _write_envelope("bounds", echo, payload, ns.output_dir)
    print(f"wrote {path}")
    if ns.format == "csv":
        csv_path = _write_csv(
            os.path.join(ns.output_dir, "bounds.csv"),
            ("n", "det_h", "radius", "lower", "upper"),
            rows,
        )
        print(f"wrote {csv_path}")
    return 0


def _cmd_waterfill(ns) -> int:
    lam = _require(ns.lam, "--lambda")
    radius = _require(ns.radius, "--radius")
    try:
        result = waterfilling(lam, radius)
    except ValueError as exc:
        raise _CliError(str(exc)) from None
    echo = {
        "lambda": lam,
        "radius": radius,
        "output_dir": ns.output_dir,
        "format": ns.format,
        "bits": ns.bits,
    }
    payload = {
        "p1": result.p1,
        "p2": result.p2,
        "capacity_nats": result.capacity_nats,
        "activation_level": result.activation_level,
    }
    print(
        f"p1={result.p1:.6f}, p2={result.p2:.6f}, "
        f"capacity {_fmt_nats(result.capacity_nats, ns.bits)}, "
        f"activation level {result.activation_level:.6f}"
    )
    path = _write_envelope("waterfill", echo, payload, ns.output_dir)
    print(f"wrote {path}")
    return 0


def _cmd_dof(ns) -> int:
    n = _require(ns.n, "--n")
    if n not in (2, 3):
        raise _CliError("--n must be 2 or 3")
    if ns.svals is not None:
        svals = list(ns.svals)
    else:
        lam = _require(ns.lam, "--lambda (or --svals)")
        svals = [lam] + [1.0] * (n - 1)
    if len(svals) != n:
        raise _CliError(f"--svals must list exactly {n} values")
    radii = _require(ns.radii, "--radii")
    samples = ns.samples if ns.samples is not None else 200000
    seed = ns.seed if ns.seed is not None else 0
    if samples < 1000:
        raise _CliError("--samples must be >= 1000")
    echo = {
        "n": n,
        "svals": svals,
        "radii": list(radii),
        "samples": samples,
        "seed": seed,
        "output_dir": ns.output_dir,
        "format": ns.format,
        "bits": ns.bits,
    }
    rows = []
    payload_rows = []
    estimates = []
    for i, r in enumerate(radii):
        try:
            est = uniform_sphere_mi(n, svals, r, samples, seed + 1000003 * i)
        except ValueError as exc:
            raise _CliError(str(exc)) from None
        estimates.append(est)
        rows.append((float(r), float(est.value_nats), float(est.std_error), est.samples))
        payload_rows.append(
            {
                "radius": r,
                "mi_nats": est.value_nats,
                "std_error": est.std_error,
                "samples": est.samples,
            }
        )
        print(
            f"R={r:g}: I = {_fmt_nats(est.value_nats, ns.bits)} "
            f"(std error {est.std_error:.2e})"
        )
    slope = None
    if len(radii) >= 2 and radii[-1] != radii[0]:
        slope = (estimates[-1].value_nats - estimates[0].value_nats) / (
            math.log(radii[-1]) - math.log(radii[0])
        )
        print(f"slope vs ln R: {slope:.4f}")
    payload = {"rows": payload_rows, "slope_vs_ln_r": slope}
    path = _write_envelope("dof", echo, payload, ns.output_dir)
    print(f"wrote {path}")
    if ns.format == "csv":
        csv_path = _write_csv(
            os.path.join(ns.output_dir, "dof.csv"),
            ("radius", "mi_nats", "std_error", "samples"),
            rows,
        )
        print(f"wrote {csv_path}")
    return 0


def _cmd_verify(ns) -> int:
    try:
        with open(ns.distribution, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _CliError(f"cannot read distribution file: {exc}") from None
    try:
        dist, channel = distribution_from_json(text)
    except ValueError as exc:
        raise _CliError(f"invalid distribution file: {exc}") from None
    cfg = _solver_config(ns)
    echo = {
        "distribution": ns.distribution,
        **_solver_echo(cfg),
        "output_dir": ns.output_dir,
        "format": ns.format,
        "bits": ns.bits,
    }
    report = verify_conditions(dist, channel, cfg)
    payload = {
        "channel": {"lambda": channel.lam, "radius": channel.radius},
        "atoms": [{"theta": t, "prob": p} for t, p in dist.atoms],
        "kkt": {
            "max_violation": report.max_violation,
            "support_gap": report.support_gap,
            "argmax_theta": report.argmax_theta,
            "kkt_tol": report.kkt_tol,
            "grid_size": report.grid_size,
            "satisfied": report.satisfied,
        },
    }
    verdict = "satisfied" if report.satisfied else "violated"
    print(
        f"optimality {verdict}: max violation {report.max_violation:.3e} at "
        f"theta={report.argmax_theta:.6f}, support gap {report.support_gap:.3e}"
    )
    path = _write_envelope("verify", echo, payload, ns.output_dir)
    print(f"wrote {path}")
    return 0 if report.satisfied else 1


_DISPATCH = {
    "solve": (_cmd_solve, "json"),
    "sweep": (_cmd_sweep, "csv"),
    "threshold": (_cmd_threshold, "csv"),
    "bounds": (_cmd_bounds, "csv"),
    "waterfill": (_cmd_waterfill, "json"),
    "dof": (_cmd_dof, "csv"),
    "verify": (_cmd_verify, "json"),
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.config:
            _apply_config_file(ns, parser)
        handler, default_format = _DISPATCH[ns.command]
        _resolve_common(ns, default_format)
        return handler(ns)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, BracketingError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
