"""Command-line front end.

Subcommands: torus-flow, props, ext-solve, genus2, mesh-info.  Configuration
comes from an optional JSON file (schema version 1, unknown keys rejected)
with command-line flags taking precedence.  Exit codes: 0 success, 1
usage/config error, 2 contract or verdict failure.

CSV output uses a header row, '.' decimals and 17 significant digits so
doubles round-trip; JSON output is key-sorted.  TEICHFLOW_THREADS caps
internal parallelism - the solvers run sequentially and deterministically,
so results are identical for any setting.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

CONFIG_VERSION = 1

_CONFIG_KEYS = {
    "torus-flow": {"kind", "slope", "tmax", "steps", "sample_size", "depth", "threshold", "out", "seed"},
    "props": {"trials", "seed", "out"},
    "ext-solve": {"mesh", "cycle", "refinement", "sweep", "tol", "out", "seed"},
    "genus2": {"slit", "refinement", "nmax", "tol", "control", "out", "seed"},
    "mesh-info": {"mesh", "refinement"},
}


class ConfigError(ValueError):
    pass


def _fmt(x):
    return f"{x:.17g}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_config(path, command):
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if data.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}")
    allowed = _CONFIG_KEYS[command] | {"version"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    return {k: v for k, v in data.items() if k != "version"}


def _merged(args, command, defaults):
    """File config overlaid with explicitly provided flags, then defaults."""
    cfg = dict(defaults)
    cfg.update(_load_config(getattr(args, "config", None), command))
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _parse_slope(text):
    from .torus import TorusFoliation

    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"slope must be 'p,q', got {text!r}")
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    vals = []
    for part in parts:
        part = part.strip().lower()
        vals.append(golden if part in ("phi", "golden") else float(part))
    try:
        return TorusFoliation(vals[0], vals[1])
    except ValueError as err:
        raise ConfigError(f"invalid foliation: {err}") from err


# ---------------------------------------------------------------------------


def cmd_torus_flow(args):
    from . import torus as tt

    defaults = {
        "kind": "horo",
        "slope": "1,0",
        "tmax": 1.0e4,
        "steps": 25,
        "sample_size": 20,
        "depth": 12,
        "threshold": None,
        "out": None,
        "seed": 0,
    }
    cfg = _merged(args, "torus-flow", defaults)
    if cfg["kind"] not in ("ray", "horo"):
        raise ConfigError(f"kind must be ray or horo, got {cfg['kind']!r}")
    f = _parse_slope(cfg["slope"]) if isinstance(cfg["slope"], str) else _parse_slope(",".join(map(str, cfg["slope"])))
    threshold = cfg["threshold"]
    if threshold is None:
        threshold = 1e-3 if cfg["kind"] == "ray" else 1e-2
    tmax = float(cfg["tmax"])
    steps = int(cfg["steps"])
    if tmax <= 0 or steps < 3:
        raise ConfigError("tmax must be positive and steps >= 3")
    t0 = min(1.0, tmax / 100.0)
    times = [t0 * (tmax / t0) ** (i / (steps - 1)) for i in range(steps)]
    sample = tt.default_sample(int(cfg["sample_size"]))
    rows = tt.converge_experiment(cfg["kind"], f, tt.BASE_POINT, times, sample, int(cfg["depth"]))
    _write_csv(
        cfg["out"],
        ("t", "d_T_to_base", "projdist_to_target"),
        [(r.t, r.dist_to_base, r.proj_dist) for r in rows],
    )
    tail = [r.proj_dist for r in rows[-max(3, len(rows) // 4):]]
    monotone = all(b < a for a, b in zip(tail, tail[1:]))
    final_ok = rows[-1].proj_dist < threshold
    if monotone and final_ok:
        return 0
    sys.stderr.write(
        f"contract failed: final projdist {rows[-1].proj_dist:.3e} "
        f"(threshold {threshold:.1e}), monotone tail: {monotone}\n"
    )
    return 2


def cmd_props(args):
    from .checks import run_all

    defaults = {"trials": None, "seed": 0, "out": None}
    cfg = _merged(args, "props", defaults)
    results = run_all(trials=cfg["trials"], seed=int(cfg["seed"]))
    report = {r.name: r.as_dict() for r in results}
    text = json.dumps(report, sort_keys=True, indent=1, default=float) + "\n"
    if cfg["out"] in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    failed = [r.name for r in results if not r.passed]
    if failed:
        sys.stderr.write("failed: " + ", ".join(failed) + "\n")
        return 2
    return 0


def cmd_ext_solve(args):
    from .mesh import MeshError, load_mesh
    from .solver import SolverError, discrete_ext_length

    defaults = {"mesh": None, "cycle": None, "refinement": 1, "sweep": None, "tol": 1e-6,
                "out": None, "seed": 0}
    cfg = _merged(args, "ext-solve", defaults)
    if not cfg["mesh"]:
        raise ConfigError("a mesh file is required")
    if not cfg["cycle"]:
        raise ConfigError("a cycle name is required")
    base = load_mesh(cfg["mesh"])
    if cfg["cycle"] not in base.marks:
        raise ConfigError(f"mesh has no mark {cfg['cycle']!r}; available: {sorted(base.marks)}")
    refinements = (
        [int(r) for r in str(cfg["sweep"]).split(",")] if cfg["sweep"] else [int(cfg["refinement"])]
    )
    rows = []
    for r in refinements:
        mesh = base.refine(r)
        res = discrete_ext_length(mesh, mesh.cycle(cfg["cycle"]), tol=float(cfg["tol"]))
        rows.append((r, res.value, res.lower, res.upper))
        print(
            f"refinement {r}: value {_fmt(res.value)} "
            f"lower {_fmt(res.lower)} upper {_fmt(res.upper)} rounds {res.rounds}"
        )
    if cfg["out"]:
        _write_csv(cfg["out"], ("refinement", "value", "lower", "upper"), rows)
    return 0


def cmd_genus2(args):
    from .genus2 import build_disjoint_tori, build_x0d, counterexample_verdict

    defaults = {"slit": 0.5, "refinement": 16, "nmax": 4, "tol": 1e-6, "control": False,
                "out": None, "seed": 0}
    cfg = _merged(args, "genus2", defaults)
    if cfg["control"]:
        surface = build_disjoint_tori(int(cfg["refinement"]))
    else:
        surface = build_x0d(float(cfg["slit"]), int(cfg["refinement"]))
    rep = counterexample_verdict(surface, nmax=int(cfg["nmax"]), tol=float(cfg["tol"]))
    if cfg["out"] and rep.table.rows:
        _write_csv(
            cfg["out"],
            ("n", "E_beta1", "E_beta2", "E_delta", "c", "E_F", "err_low", "err_high"),
            rep.table.csv_rows(),
        )
    print(f"verdict: {rep.verdict}")
    print(f"reason: {rep.reason}")
    print(
        f"ratio E_F/c: point {_fmt(rep.ratio_point)} certified "
        f"[{_fmt(rep.ratio_low)}, {_fmt(rep.ratio_high)}]"
    )
    print(f"note: {rep.cluster_note}")
    return 0 if rep.verdict == "PASS" else 2


def cmd_mesh_info(args):
    from .mesh import genus_from_characteristic, load_mesh

    defaults = {"mesh": None, "refinement": 1}
    cfg = _merged(args, "mesh-info", defaults)
    if not cfg["mesh"]:
        raise ConfigError("a mesh file is required")
    mesh = load_mesh(cfg["mesh"]).refine(int(cfg["refinement"]))
    loops = mesh.boundary_loops()
    chi = mesh.euler_characteristic()
    info = {
        "faces": mesh.n_faces,
        "edges": mesh.n_edges,
        "vertices": mesh.n_vertices,
        "euler_characteristic": chi,
        "boundary_loops": len(loops),
        "genus": genus_from_characteristic(chi, len(loops)),
        "homology_rank": mesh.homology_rank(),
        "marks": {name: len(steps) for name, steps in sorted(mesh.marks.items())},
        "refinement": mesh.refinement,
    }
    sys.stdout.write(json.dumps(info, sort_keys=True, indent=1) + "\n")
    return 0


# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file (version 1); flags override")
    p.add_argument("--seed", type=int, help="RNG seed for randomized suites (default 0)")


def build_parser():
    parser = argparse.ArgumentParser(prog="teichflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("torus-flow", help="convergence of a deformation flow to its direction")
    p.add_argument("--kind", choices=("ray", "horo"))
    p.add_argument("--slope", help="direction 'p,q'; 'phi' gives the golden ratio")
    p.add_argument("--tmax", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", help="CSV path ('-' for stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_torus_flow)

    p = sub.add_parser("props", help="run the invariant suites, JSON report")
    p.add_argument("--trials", type=int)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_props)

    p = sub.add_parser("ext-solve", help="discrete extremal length of a marked class")
    p.add_argument("mesh", nargs="?", help="mesh JSON file")
    p.add_argument("--cycle", help="mark name")
    p.add_argument("--refinement", type=int)
    p.add_argument("--sweep", help="comma list of refinements, e.g. 16,32,64")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_ext_solve)

    p = sub.add_parser("genus2", help="reproduce the genus-2 rational-direction contradiction")
    p.add_argument("--slit", type=float)
    p.add_argument("--refinement", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--control", action="store_const", const=True,
                   help="run the no-slit control (two disjoint tori)")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_genus2)

    p = sub.add_parser("mesh-info", help="inspect a mesh file")
    p.add_argument("mesh", nargs="?")
    p.add_argument("--refinement", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_mesh_info)

    return parser


def main(argv=None):
    threads = os.environ.get("TEICHFLOW_THREADS")
    if threads is not None:
        try:
            cap = int(threads)
            if cap < 1:
                raise ValueError
        except ValueError:
            sys.stderr.write("TEICHFLOW_THREADS must be a positive integer\n")
            return 1
        os.environ.setdefault("OMP_NUM_THREADS", str(cap))

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        sys.stderr.write(f"config error: {err}\n")
        return 1
    except FileNotFoundError as err:
        sys.stderr.write(f"missing file: {err}\n")
        return 1
    except Exception as err:
        from .mesh import MeshError

        if isinstance(err, MeshError):
            sys.stderr.write(f"mesh error: {err}\n")
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
