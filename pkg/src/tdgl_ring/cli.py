"""Command-line front end.

Every subcommand resolves its configuration as built-in defaults, overlaid by
``--config FILE`` (a plain JSON object or a manifest written by an earlier
run), overlaid by explicit flags.  Outputs go to ``--out`` together with a
``<subcommand>_manifest.json`` recording the resolved config and the SHA-256 of
each output, so ``--config <manifest>`` replays a run byte-for-byte.

Exit codes: 0 success, 1 runtime/domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import AnalyticParams, DomainError, classify_mode, lambda_n, rho_closed_form, supercurrent, winding_selector
from .causal import CausalScenario, InvalidGeometryError, detector_window, feasibility_report, light_time_per_lambda
from .experiment import (
    AmplitudeMeasure,
    SweepSpec,
    equilibration_from_trajectory,
    linear_symbol,
    resolve_threads,
    run_ensemble,
    simulate,
    sweep,
    tail_current,
)
from .tdgl import NoiseSpec, NumericalBlowup, RingConfig, make_rng, target_mode
from .units import InvalidMaterialError, MaterialNotFoundError, get_material, load_materials, material_table, time_from_normalized

log = logging.getLogger("tdgl_ring")

TOOL = "tdgl-ring"

RING_DEFAULTS = {
    "radius_norm": 1.5,
    "flux_norm": 1.2,
    "kappa": 0.8,
    "grid_points": None,
    "dt": 1e-2,
    "t_max": 60.0,
    "sigma": 1e-6,
    "noise_points": 200,
    "noise_scaling": "per_step",
    "coarse_grid": False,
    "snapshot_every": 10,
    "measure": "mean_abs",
    "seed": 42,
}

DEFAULTS = {
    "simulate": dict(RING_DEFAULTS),
    "ensemble": dict(RING_DEFAULTS, runs=50, control=False),
    "sweep": dict(RING_DEFAULTS, indices=[0, 1, 2, 3], runs=50),
    "analytic": {
        "flux_ratio": 1000.2,
        "n": None,
        "radius_norm": 1500.0,
        "kappa": 0.8,
        "material": "niobium-impure",
        "epsilon": 1e-6,
        "t_max": 50.0,
        "t_points": 11,
        "alpha": None,
        "beta": None,
        "gamma": None,
        "mass": None,
        "radius_m": None,
    },
    "causal": {
        "materials": None,
        "t_eq": None,
        "sweep_csv": None,
        "gap": None,
        "detector": None,
    },
    "materials": {},
}


class UsageError(Exception):
    pass


# -- formatting --------------------------------------------------------------


def fmt(v) -> str:
    """Shortest round-trip text for numbers, empty for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render_table(header: list[str], rows: list[list], fmt_name: str) -> bytes:
    if fmt_name == "json":
        data = [{h: _jsonable(v) for h, v in zip(header, row)} for row in rows]
        return (json.dumps(data, indent=1, allow_nan=False) + "\n").encode()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue().encode()


class Outputs:
    def __init__(self, out_dir: Path, subcommand: str):
        self.dir = out_dir
        self.subcommand = subcommand
        self.files: list[dict] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, data: bytes) -> Path:
        path = self.dir / name
        path.write_bytes(data)
        self.files.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        return path

    def table(self, stem: str, header, rows, fmt_name: str) -> Path:
        ext = "json" if fmt_name == "json" else "csv"
        return self.write(f"{self.subcommand}_{stem}.{ext}", render_table(header, rows, fmt_name))

    def manifest(self, config: dict, seed, extra: dict | None = None) -> Path:
        doc = {
            "tool": TOOL,
            "version": __version__,
            "subcommand": self.subcommand,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "master_seed": seed,
            "config": config,
            "outputs": self.files,
        }
        doc.update(extra or {})
        path = self.dir / f"{self.subcommand}_manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
        return path


# -- config resolution ---------------------------------------------------------


def load_config_file(path: str, subcommand: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must be a JSON object")
    if "config" in doc and "subcommand" in doc:
        if doc["subcommand"] != subcommand:
            raise UsageError(f"manifest {path} is for '{doc['subcommand']}', not '{subcommand}'")
        doc = doc["config"]
    unknown = set(doc) - set(DEFAULTS[subcommand]) - {"materials_file"}
    if unknown:
        raise UsageError(f"unknown config keys for {subcommand}: {', '.join(sorted(unknown))}")
    return doc


def resolve(subcommand: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[subcommand])
    cfg["materials_file"] = None
    if args.config:
        cfg.update(load_config_file(args.config, subcommand))
    for key in cfg:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def ring_config(cfg: dict) -> RingConfig:
    noise = NoiseSpec(sigma=cfg["sigma"], sample_points=cfg["noise_points"], scaling=cfg["noise_scaling"])
    return RingConfig(
        radius_norm=cfg["radius_norm"],
        flux_norm=cfg["flux_norm"],
        kappa=cfg["kappa"],
        grid_points=cfg["grid_points"],
        dt=cfg["dt"],
        t_max=cfg["t_max"],
        noise=noise,
        seed=cfg["seed"],
        coarse_grid=cfg["coarse_grid"],
    )


def _extra_materials(cfg: dict):
    return load_materials(cfg["materials_file"]) if cfg.get("materials_file") else None


# -- subcommands ------------------------------------------------------------------


def cmd_analytic(args, cfg, out: Outputs) -> int:
    mat = get_material(cfg["material"], _extra_materials(cfg))
    params = AnalyticParams.from_normalized(
        radius_norm=cfg["radius_norm"],
        kappa=cfg["kappa"],
        flux_norm=cfg["flux_ratio"],
        epsilon=cfg["epsilon"],
        material=mat,
    )
    overrides = {k: cfg[c] for k, c in [("alpha", "alpha"), ("beta", "beta"), ("gamma", "gamma"), ("mass_eff", "mass"), ("radius", "radius_m")] if cfg[c] is not None}
    if overrides:
        params = AnalyticParams(**{**params.__dict__, **overrides})
    n0 = winding_selector(params.flux_ratio)
    n = n0 if cfg["n"] is None else int(cfg["n"])
    lam = lambda_n(params, n)
    regime = classify_mode(params, n)
    npts = int(cfg["t_points"])
    if npts < 1:
        raise UsageError("--t-points must be >= 1")
    t_norm = np.linspace(0.0, cfg["t_max"], npts) if npts > 1 else np.array([0.0])
    rows = []
    for tn in t_norm:
        t_si = time_from_normalized(float(tn), mat)
        rows.append([float(tn), t_si, rho_closed_form(params, n, t_si), supercurrent(params, n, t_si)])
    out.table("series", ["t_norm", "t_s", "rho", "supercurrent"], rows, args.format)
    summary = {"n0": n0, "n": n, "lambda_n_J": lam, "regime": regime.value, "flux_ratio": params.flux_ratio}
    print(f"n0={n0}")
    print(f"n={n}")
    print(f"lambda_n={fmt(lam)} J")
    print(f"regime={regime.value}")
    print("t_norm,rho,supercurrent")
    for r in rows:
        print(f"{fmt(r[0])},{fmt(r[2])},{fmt(r[3])}")
    out.manifest(_public(cfg), None, {"summary": summary})
    return 0


TRAJ_HEADER = ["time", "mode_amp_n0", "J", "winding", "mean_abs"]


def cmd_simulate(args, cfg, out: Outputs) -> int:
    config = ring_config(cfg)
    traj = simulate(config, make_rng(config.seed, 0), snapshot_every=int(cfg["snapshot_every"]))
    rows = [
        [t, a, j, w, m] for t, a, j, w, m in zip(traj.times, traj.mode_amp, traj.J, traj.winding, traj.mean_abs)
    ]
    extra = {"target_mode": traj.target}
    if traj.blowup is not None:
        rows.append(["truncated", traj.blowup.step_index, traj.blowup.reason, "", ""])
        extra["failures"] = [str(traj.blowup)]
    out.table("trajectory", TRAJ_HEADER, rows, args.format)
    phi = 2 * np.pi * np.arange(config.grid_points) / config.grid_points
    out.table("field", ["phi", "re_psi", "im_psi"], [[p, z.real, z.imag] for p, z in zip(phi, traj.final.psi)], args.format)
    if traj.blowup is None and linear_symbol(config, target_mode(config)) > 0:
        eq = equilibration_from_trajectory(traj, config, cfg["measure"])
        extra["t99"] = eq.t99
        extra["final_winding"] = eq.final_winding
    out.manifest(_public(cfg, resolved=config), config.seed, extra)
    if traj.blowup is not None:
        print(f"error: {traj.blowup}", file=sys.stderr)
        return 1
    print(f"final J={fmt(float(traj.J[-1]))} winding={fmt(traj.winding[-1])}")
    return 0


def _ensemble_tables(out: Outputs, stem: str, st, fmt_name: str):
    out.table(
        f"{stem}_J",
        ["time", "mean_J", "std_J"],
        [[t, m, s if st.n_completed >= 2 else None] for t, m, s in zip(st.times, st.mean_J, st.std_J)],
        fmt_name,
    )
    out.table(
        f"{stem}_runs",
        ["run", "t99", "reached", "final_winding", "error"],
        [[r.run_index, r.t99, r.t99 is not None, r.final_winding, r.error or ""] for r in st.runs],
        fmt_name,
    )


def _ensemble_summary(st) -> dict:
    return {
        "n_runs": st.n_runs,
        "n_completed": st.n_completed,
        "n_reached": st.n_reached,
        "mean_t99": st.mean_t99,
        "std_t99": st.std_t99,
    }


def cmd_ensemble(args, cfg, out: Outputs) -> int:
    config = ring_config(cfg)
    threads = resolve_threads(cfg.get("threads"))
    runs = int(cfg["runs"])
    if runs < 1:
        raise UsageError("--runs must be >= 1")
    st = run_ensemble(config, runs, config.seed, cfg["measure"], int(cfg["snapshot_every"]), threads)
    _ensemble_tables(out, "ensemble", st, args.format)
    extra = {"summary": _ensemble_summary(st), "failures": st.failures}
    if st.n_completed:
        tc = tail_current(st)
        extra["summary"]["tail_J_mean"] = tc.mean
        extra["summary"]["tail_J_stderr"] = tc.stderr
    if cfg["control"]:
        ctl = run_ensemble(config.with_(flux_norm=0.0), runs, config.seed, cfg["measure"], int(cfg["snapshot_every"]), threads)
        _ensemble_tables(out, "control", ctl, args.format)
        extra["control"] = _ensemble_summary(ctl)
        extra["failures"] += [dict(f, ensemble="control") for f in ctl.failures]
        if ctl.n_completed:
            tc = tail_current(ctl)
            extra["control"]["tail_J_mean"] = tc.mean
            extra["control"]["tail_J_stderr"] = tc.stderr
    out.manifest(_public(cfg, resolved=config), config.seed, extra)
    print(f"mean_t99={fmt(st.mean_t99)} std_t99={fmt(st.std_t99)} n_reached={st.n_reached}/{st.n_runs}")
    return 0 if st.n_completed else 1


SWEEP_HEADER = ["i", "radius_norm", "flux_norm", "mean_t99", "std_t99", "n_reached", "n_runs"]


def cmd_sweep(args, cfg, out: Outputs) -> int:
    indices = [int(i) for i in cfg["indices"]]
    # point radius/flux come from the sweep rules; placeholders keep the base valid
    base = ring_config(dict(cfg, radius_norm=1.5, flux_norm=0.2))
    spec = SweepSpec(tuple(indices), base, int(cfg["runs"]), base.seed, cfg["measure"])
    rows = sweep(spec, threads=resolve_threads(cfg.get("threads")))
    out.table("sweep", SWEEP_HEADER, [[r.i, r.radius_norm, r.flux_norm, r.mean_t99, r.std_t99, r.n_reached, r.n_runs] for r in rows], args.format)
    failures = [{"i": r.i, "error": r.error} for r in rows if r.error]
    for r in rows:
        if r.stats is not None:
            failures += [dict(f, i=r.i) for f in r.stats.failures]
    out.manifest(_public(cfg), base.seed, {"failures": failures})
    for r in rows:
        print(f"i={r.i} R={fmt(r.radius_norm)} Phi={fmt(r.flux_norm)} mean_t99={fmt(r.mean_t99)} std_t99={fmt(r.std_t99)}")
    if rows and all(r.error for r in rows):
        return 1
    return 0


def _read_sweep_t99(path: str) -> list[float]:
    vals = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            if path.endswith(".json"):
                data = json.load(fh)
            else:
                data = list(csv.DictReader(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sweep results {path}: {exc}") from None
    for row in data:
        v = row.get("mean_t99")
        if v not in (None, ""):
            vals.append(float(v))
    return vals


def cmd_causal(args, cfg, out: Outputs) -> int:
    extra = _extra_materials(cfg)
    names = cfg["materials"] or list(material_table(extra))
    mats = [get_material(n, extra) for n in names]
    if cfg["t_eq"] is not None:
        t99 = [float(cfg["t_eq"])]
    elif cfg["sweep_csv"]:
        t99 = _read_sweep_t99(cfg["sweep_csv"])
    else:
        raise UsageError("causal needs --t-eq or --sweep-csv")
    reports = feasibility_report(mats, t99)
    doc = []
    for mat, rep in zip(mats, reports):
        entry = rep.to_json()
        entry["light_time_per_lambda"] = light_time_per_lambda(mat)
        if cfg["gap"] is not None and rep.t_eq_norm is not None:
            scen = CausalScenario(mat, ring_radius_norm=1.0, gap_norm=float(cfg["gap"]), equilibration_time_norm=rep.t_eq_norm)
            x = float(cfg["detector"]) if cfg["detector"] is not None else scen.gap_norm / 2
            entry["detector_position"] = x
            entry["window"] = list(detector_window(scen, x))
        doc.append(entry)
    if args.format == "json":
        out.write("causal_report.json", (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode())
    else:
        header = ["material", "t_eq_norm", "light_time_per_lambda", "r_min_lambda", "d_min_m", "plausible", "inconclusive"]
        out.table("report", header, [[e[h] for h in header] for e in doc], "csv")
    out.manifest(_public(cfg), None, {"reports": doc})
    for e in doc:
        print(
            f"{e['material']}: tau_lambda={fmt(e['light_time_per_lambda'])} r_min={fmt(e['r_min_lambda'])} lambda "
            f"d_min={fmt(e['d_min_m'])} m plausible={fmt(e['plausible'])}"
        )
    return 1 if all(r.inconclusive for r in reports) else 0


def cmd_materials(args, cfg, out: Outputs) -> int:
    table = material_table(_extra_materials(cfg))
    rows = [[m.name, m.xi, m.lam, m.diffusion, m.kappa(), m.time_unit] for m in table.values()]
    out.table("list", ["name", "xi_m", "lambda_m", "diffusion_m2s", "kappa", "time_unit_s"], rows, args.format)
    out.manifest(_public(cfg), None)
    for r in rows:
        print(f"{r[0]}: xi={fmt(r[1])} m lambda={fmt(r[2])} m D={fmt(r[3])} m^2/s")
    return 0


def _public(cfg: dict, resolved: RingConfig | None = None) -> dict:
    d = {k: v for k, v in cfg.items() if k != "threads"}
    if resolved is not None:
        d["grid_points"] = resolved.grid_points
    return d


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
    "causal": cmd_causal,
    "materials": cmd_materials,
}


# -- parser -----------------------------------------------------------------------


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _ring_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("ring")
    g.add_argument("--radius", dest="radius_norm", type=float, help="ring radius in penetration depths")
    g.add_argument("--flux", dest="flux_norm", type=float, help="enclosed flux in flux quanta")
    g.add_argument("--kappa", type=float, help="GL parameter lambda/xi (default 0.8)")
    g.add_argument("--grid-points", type=int, help="grid size M (default: resolution rule)")
    g.add_argument("--dt", type=float, help="time step in xi^2/D (default 1e-2)")
    g.add_argument("--t-max", type=float, help="simulated time in xi^2/D")
    g.add_argument("--sigma", type=float, help="noise standard deviation per component (default 1e-6)")
    g.add_argument("--noise-points", type=int, help="noise anchor points (default 200)")
    g.add_argument("--noise-scaling", choices=["per_step", "sqrt_dt"])
    g.add_argument("--coarse-grid", action="store_const", const=True, help="allow M too small for the winding")
    g.add_argument("--snapshot-every", type=_pos_int, help="steps between recorded snapshots (default 10)")
    g.add_argument("--measure", choices=[m.value for m in AmplitudeMeasure], help="equilibration amplitude measure")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config or manifest to start from")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=_u64, help="master seed")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--threads", type=_pos_int, help="worker processes (env TDGL_RING_THREADS, default: all cores)")
    common.add_argument("--materials-file", help="extra materials JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog=TOOL, description="Stochastic TDGL simulations of a superconducting ring around a solenoid.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", parents=[common], help="closed-form single-mode solution")
    p.add_argument("--flux-ratio", type=float, help="Phi / Phi_Q")
    p.add_argument("--n", type=int, help="winding to evaluate (default: selected n0)")
    p.add_argument("--radius", dest="radius_norm", type=float, help="ring radius in penetration depths")
    p.add_argument("--kappa", type=float)
    p.add_argument("--material")
    p.add_argument("--epsilon", type=float, help="initial density rho(0)")
    p.add_argument("--t-max", type=float, help="last sample time in xi^2/D")
    p.add_argument("--t-points", type=int)
    p.add_argument("--alpha", type=float, help="override alpha (J)")
    p.add_argument("--beta", type=float, help="override beta")
    p.add_argument("--gamma", type=float, help="override Gamma (1/(J s))")
    p.add_argument("--mass", type=float, help="override m* (kg)")
    p.add_argument("--radius-m", type=float, help="override R (m)")

    p = sub.add_parser("simulate", parents=[common], help="one stochastic trajectory")
    _ring_flags(p)

    p = sub.add_parser("ensemble", parents=[common], help="run-averaged statistics")
    _ring_flags(p)
    p.add_argument("--runs", type=_pos_int, help="number of runs (default 50)")
    p.add_argument("--control", action="store_const", const=True, help="also run the zero-flux control")

    p = sub.add_parser("sweep", parents=[common], help="equilibration time versus radius")
    _ring_flags(p)
    p.add_argument("--i", dest="indices", type=int, nargs="*", help="sweep indices (R = 1.5 sqrt(10)^i)")
    p.add_argument("--runs", type=_pos_int, help="runs per point (default 50)")

    p = sub.add_parser("causal", parents=[common], help="light-cone timing and feasibility")
    p.add_argument("--material", dest="materials", action="append", help="material name (repeatable)")
    p.add_argument("--t-eq", type=float, help="equilibration time in xi^2/D")
    p.add_argument("--sweep-csv", help="sweep output to take mean_t99 from")
    p.add_argument("--gap", type=float, help="ring-solenoid distance in lambda (adds a detector window)")
    p.add_argument("--detector", type=float, help="detector distance from the ring in lambda")

    sub.add_parser("materials", parents=[common], help="list materials")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args.command, args)
        cfg["threads"] = args.threads
        out = Outputs(Path(args.out), args.command)
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except (DomainError, InvalidGeometryError, InvalidMaterialError, MaterialNotFoundError, NumericalBlowup, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
