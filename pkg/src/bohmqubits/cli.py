"""Command-line experiment driver.

Runs are described by a JSON config file; flags override file values.
Numeric config values may be arithmetic expressions such as "sqrt(3)" or
"sqrt(2)/2", evaluated safely (no general code execution).  Progress and
errors are emitted as JSON lines on stderr; artifacts carry the digest of
the canonicalized config in a manifest sidecar.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, dynamics, nodal, serialization, wavefunction
from .errors import BohmQubitsError, ConfigError, NodesAtInfinityError
from .manifest import RunManifest, spec_digest_bytes

LONG_RUN_THRESHOLD = 1e5

_ALLOWED_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log,
                  "sin": math.sin, "cos": math.cos}
_ALLOWED_NAMES = {"pi": math.pi, "e": math.e}


def eval_number(value):
    """Evaluate a numeric config entry; strings may be safe expressions."""
    if isinstance(value, (int, float)):
        return value
    if not isinstance(value, str):
        raise ConfigError(f"expected a number, got {value!r}")
    try:
        node = ast.parse(value, mode="eval").body
        return _eval_node(node)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad numeric expression {value!r}: {exc}") from exc


def _eval_node(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name):
        if node.id in _ALLOWED_NAMES:
            return _ALLOWED_NAMES[node.id]
        raise ConfigError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        v = _eval_node(node.operand)
        return v if isinstance(node.op, ast.UAdd) else -v
    if isinstance(node, ast.BinOp) and isinstance(
        node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
    ):
        a = _eval_node(node.left)
        b = _eval_node(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        return a ** b
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        if node.func.id not in _ALLOWED_FUNCS or node.keywords:
            raise ConfigError(f"disallowed call in expression: {node.func.id}")
        args = [_eval_node(a) for a in node.args]
        return _ALLOWED_FUNCS[node.func.id](*args)
    raise ConfigError("disallowed construct in numeric expression")


def progress(event: str, **fields):
    print(json.dumps({"event": event, **fields}, sort_keys=True),
          file=sys.stderr, flush=True)


def _load_config(args) -> dict:
    config: dict = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError("config root must be an object")
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cursor = config
        parts = key.split(".")
        for part in parts[:-1]:
            cursor = cursor.setdefault(part, {})
            if not isinstance(cursor, dict):
                raise ConfigError(f"--set path {key!r} crosses a non-object")
        cursor[parts[-1]] = value
    return config


def _build_spec(config: dict) -> wavefunction.SystemSpec:
    section = config.get("spec")
    if not isinstance(section, dict):
        raise ConfigError("config needs a 'spec' object")
    known = {"a0", "b0", "omega_x", "omega_y", "c1", "c2", "n_in", "n_f",
             "renormalize"}
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown spec key: {key!r}")
    kwargs = {
        "a0": eval_number(section.get("a0", 2.5)),
        "b0": eval_number(section.get("b0", section.get("a0", 2.5))),
        "omega_x": eval_number(section.get("omega_x", 1.0)),
        "omega_y": eval_number(section.get("omega_y", "sqrt(3)")),
        "n_in": int(section.get("n_in", 0)),
        "n_f": None if section.get("n_f") is None else int(section["n_f"]),
        "renormalize": bool(section.get("renormalize", False)),
    }
    try:
        if "c1" in section:
            return wavefunction.SystemSpec(
                c1=eval_number(section["c1"]),
                c2=eval_number(section.get("c2", 0.0)), **kwargs,
            )
        return wavefunction.SystemSpec.with_entanglement(
            eval_number(section.get("c2", 0.0)), **kwargs
        )
    except ValueError as exc:
        raise ConfigError(f"invalid spec: {exc}") from exc


def _build_settings(config: dict, long_ok: bool) -> dynamics.IntegratorSettings:
    section = dict(config.get("integrator", {}))
    known = {"t_end", "rel_tol", "abs_tol", "dt_init", "dt_min", "v_cap",
             "sample_dt", "box_half"}
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown integrator key: {key!r}")
    kwargs = {k: eval_number(v) for k, v in section.items()}
    settings = dynamics.IntegratorSettings(**kwargs)
    if settings.t_end >= LONG_RUN_THRESHOLD and not long_ok:
        raise ConfigError(
            f"t_end={settings.t_end:g} is a long run; pass --long to confirm"
        )
    return settings


def _bounds(config: dict):
    raw = config.get("analysis", {}).get("bounds", analysis.DEFAULT_BOUNDS)
    vals = tuple(eval_number(v) for v in raw)
    if len(vals) != 4:
        raise ConfigError("bounds must be [x0, x1, y0, y1]")
    return vals


def _resolution(config: dict) -> int:
    return int(config.get("analysis", {}).get("resolution",
                                              analysis.DEFAULT_RESOLUTION))


def _write_manifest(config: dict, out_dir: Path, name: str) -> RunManifest:
    manifest = RunManifest.from_config(config)
    (out_dir / f"{name}.manifest.json").write_text(manifest.to_json())
    return manifest


def _start_point(config: dict, section: str):
    sec = config.get(section, {})
    return (eval_number(sec.get("x0", 0.1)), eval_number(sec.get("y0", 0.4)))


# ------------------------------------------------------------- subcommands

def cmd_trajectory(config: dict, out_dir: Path, long_ok: bool) -> int:
    spec = _build_spec(config)
    settings = _build_settings(config, long_ok)
    x0, y0 = _start_point(config, "trajectory")
    section = config.get("trajectory", {})
    progress("trajectory.start", x0=x0, y0=y0, t_end=settings.t_end)
    record = dynamics.integrate(
        spec, x0, y0, settings,
        t0=eval_number(section.get("t0", 0.0)),
        time_sign=int(section.get("time_sign", 1)),
    )
    manifest = _write_manifest(config, out_dir, "trajectory")
    serialization.write_trajectory_csv(record, out_dir / "trajectory.csv")
    serialization.save_trajectory(
        record, out_dir / "trajectory.bqtr",
        spec_digest_bytes(serialization.spec_to_dict(spec)),
    )
    serialization.write_point_cloud_pgm(
        record.samples, out_dir / "trajectory.pgm", _bounds(config)
    )
    if section.get("lyapunov"):
        est = dynamics.lyapunov(
            spec, x0, y0, settings,
            renorm_interval=eval_number(section.get("renorm_interval", 1.0)),
        )
        serialization.write_matrix_csv(est.lcn_series, out_dir / "lcn.csv")
        progress("trajectory.lyapunov", final_lcn=est.final_lcn,
                 ordered=dynamics.ordered_envelope(est.final_lcn, settings.t_end))
    progress("trajectory.done", status=record.status,
             out_of_box=record.out_of_box, samples=len(record.samples),
             manifest=manifest.config_hash)
    if record.status != dynamics.COMPLETED:
        progress("trajectory.failed", diagnostics=str(record.diagnostics))
        return 1
    return 0


def cmd_grid(config: dict, out_dir: Path, long_ok: bool) -> int:
    spec = _build_spec(config)
    settings = _build_settings(config, long_ok)
    section = config.get("grid", {})
    starts = section.get("starts")
    if starts is None:
        starts = [[section.get("x0", 0.1), section.get("y0", 0.4)]]
    starts = [(eval_number(x), eval_number(y)) for x, y in starts]
    bounds = _bounds(config)
    grid = analysis.OccupancyGrid(
        bounds=bounds, resolution=_resolution(config),
        stride=settings.sample_dt,
    )
    if section.get("resume_from"):
        loaded, _ = serialization.load_grid(section["resume_from"])
        grid = loaded
        progress("grid.resume", source=section["resume_from"],
                 total_time=grid.total_time)
    progress("grid.start", starts=len(starts), t_end=settings.t_end)
    records = dynamics.integrate_ensemble(spec, starts, settings)
    failures = 0
    for record in records:
        if record.status != dynamics.COMPLETED or record.out_of_box:
            failures += 1
            continue
        analysis.accumulate(grid, record)
    manifest = _write_manifest(config, out_dir, "grid")
    serialization.save_grid(grid, out_dir / "grid.bqgr",
                            bytes.fromhex(manifest.config_hash))
    serialization.write_ppm(grid.counts, out_dir / "grid.ppm", log_scale=True)
    progress("grid.done", accumulated=len(records) - failures,
             failed=failures, total_time=grid.total_time,
             manifest=manifest.config_hash)
    return 1 if failures == len(records) else 0


def cmd_nodes(config: dict, out_dir: Path, long_ok: bool) -> int:
    spec = _build_spec(config)
    section = config.get("nodes", {})
    mode = section.get("mode", "auto")
    t = eval_number(section.get("t", 1.0))
    box = tuple(eval_number(v) for v in section.get("box", nodal.DEFAULT_BOX))
    manifest = _write_manifest(config, out_dir, "nodes")
    if mode in ("trace", "contour"):
        t_range = tuple(eval_number(v) for v in section.get("t_range", (0.0, 10.0)))
        dt = eval_number(section.get("dt", 0.01))
        if mode == "trace":
            traces = nodal.trace_nodes(spec, t_range, dt=dt, box=box)
            cloud = nodal.trace_cloud(traces)
        else:
            cloud = nodal.velocity_contour_nodes(
                spec, t_range, dt,
                speed_level=eval_number(section.get("speed_level", 500.0)),
                box=box,
            )
        serialization.write_matrix_csv(cloud, out_dir / "nodes.csv")
        serialization.write_point_cloud_pgm(cloud, out_dir / "nodes.pgm", box)
        progress("nodes.done", points=len(cloud), manifest=manifest.config_hash)
        return 0
    nodes = []
    report: dict = {}
    if mode in ("auto", "analytic"):
        try:
            nodes = nodal.nodes_analytic(spec, t, int(section.get("k_max", 13)))
            report["analytic"] = len(nodes)
        except NodesAtInfinityError as exc:
            report["analytic"] = "at-infinity"
            progress("nodes.at_infinity", t=t, detail=str(exc))
        except ValueError:
            if mode == "analytic":
                raise ConfigError(
                    "analytic nodes need a full-band spec with a0 == b0"
                )
    if mode in ("auto", "numeric"):
        numeric = nodal.nodes_numeric(
            spec, t, box=box, seed_grid=int(section.get("seed_grid", 120))
        )
        report["numeric"] = len(numeric)
        if nodes and numeric:
            worst = max(
                min(math.hypot(q.x - p.x, q.y - p.y) for p in nodes)
                for q in numeric
            )
            report["cross_check_worst_distance"] = worst
        if not nodes:
            nodes = numeric
    serialization.write_nodes_csv(nodes, out_dir / "nodes.csv")
    progress("nodes.done", manifest=manifest.config_hash, **report)
    return 0


def cmd_density(config: dict, out_dir: Path, long_ok: bool) -> int:
    spec = _build_spec(config)
    section = config.get("density", {})
    t = eval_number(section.get("t", 0.0))
    snap = analysis.density_snapshot(
        spec, t, bounds=_bounds(config), resolution=_resolution(config),
        floor=eval_number(section.get("floor", analysis.DEFAULT_FLOOR)),
    )
    manifest = _write_manifest(config, out_dir, "density")
    serialization.write_matrix_csv(snap.values, out_dir / "density.csv")
    serialization.write_ppm(
        np.maximum(snap.values, snap.floor), out_dir / "density.ppm",
        log_scale=True,
    )
    support_area = float(snap.support_mask.sum()) * snap.cell_area
    progress("density.done", t=t, support_area=support_area,
             integral=snap.integral(), manifest=manifest.config_hash)
    return 0


def cmd_overlap(config: dict, out_dir: Path, long_ok: bool) -> int:
    section = config.get("overlap", {})
    amplitudes = [eval_number(a) for a in section.get(
        "amplitudes", [2.5, 2.0, 1.5, 1.0]
    )]
    n_f_values = [int(n) for n in section.get("n_f_values", range(0, 26))]
    omega = eval_number(section.get("omega", 1.0))
    n_in = int(section.get("n_in", 0))
    manifest = _write_manifest(config, out_dir, "overlap")
    rows = []
    for a0 in amplitudes:
        for n_f in n_f_values:
            rows.append((
                a0, n_f,
                wavefunction.overlap_1d(a0, omega=omega, n_in=n_in, n_f=n_f),
                wavefunction.poisson_coverage(a0, n_in, n_f),
            ))
    with open(out_dir / "overlap.csv", "w") as fh:
        fh.write("a0,n_f,overlap,coverage\n")
        for a0, n_f, ov, cov in rows:
            fh.write(f"{a0!r},{n_f},{ov!r},{cov!r}\n")
    progress("overlap.done", rows=len(rows), manifest=manifest.config_hash)
    return 0


def cmd_sweep(config: dict, out_dir: Path, long_ok: bool) -> int:
    spec = _build_spec(config)
    settings = _build_settings(config, long_ok)
    section = config.get("sweep", {})
    n_f_list = [int(v) for v in section.get("n_f_list", [2, 4, 6, 8, 10, 12])]
    c2_list = [eval_number(v) for v in section.get(
        "c2_list", [0.2, 0.5, "sqrt(2)/2"]
    )]
    x0, y0 = _start_point(config, "sweep")
    progress("sweep.start", cells=len(n_f_list) * len(c2_list),
             t_end=settings.t_end)
    matrix, diag = analysis.truncation_sweep(
        spec, n_f_list, c2_list, x0=x0, y0=y0, settings=settings,
        bounds=_bounds(config), resolution=_resolution(config),
    )
    manifest = _write_manifest(config, out_dir, "sweep")
    serialization.write_sweep_csv(matrix, n_f_list, c2_list, spec.n_in,
                                  out_dir / "sweep.csv")
    progress("sweep.done", failures=len(diag), manifest=manifest.config_hash)
    return 1 if np.isnan(matrix).all() else 0


def cmd_compare(config: dict, out_dir: Path, long_ok: bool) -> int:
    paths = config.get("compare", {}).get("grids", [])
    if len(paths) < 2:
        raise ConfigError("compare needs at least two grid files")
    grids = [serialization.load_grid(p)[0] for p in paths]
    n = len(grids)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = analysis.frobenius_distance(grids[i], grids[j])
            matrix[i, j] = matrix[j, i] = d
    manifest = _write_manifest(config, out_dir, "compare")
    serialization.write_matrix_csv(matrix, out_dir / "compare.csv")
    progress("compare.done", pairs=n * (n - 1) // 2,
             max_distance=float(matrix.max()), manifest=manifest.config_hash)
    return 0


_COMMANDS = {
    "trajectory": cmd_trajectory,
    "grid": cmd_grid,
    "nodes": cmd_nodes,
    "density": cmd_density,
    "overlap": cmd_overlap,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bohmqubits",
        description="Bohmian trajectories of entangled coherent-state "
                    "qubits: simulation and analysis runs.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (dotted path)")
        p.add_argument("--out", default=".", help="artifact output directory")
        p.add_argument("--long", action="store_true",
                       help="allow long runs (t_end >= 1e5)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](config, out_dir, args.long)
    except ConfigError as exc:
        progress("error", kind="config", detail=str(exc))
        return 2
    except BohmQubitsError as exc:
        progress("error", kind="runtime", detail=str(exc))
        return 1
    except Exception as exc:  # invariant violations still exit cleanly
        progress("error", kind="internal", detail=f"{type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
