"""Command-line front end.

    optowigner pulsed --alpha 2 --g0-over-kappa 2 --preset paper-repro --out run1
    optowigner sweep --sweep-command steady --axis g0_over_kappa 1 10 46 --k 0.1

Settings are merged in this order, later ones winning: built-in defaults,
``--preset``, ``--config`` file, explicit flags.  Exit status is 0 on
success, 2 on a configuration error and 3 on a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AccuracyError, DomainError, OptoWignerError, PreconditionError,
                     SolverError, StepSizeError, TruncationError, UnsupportedError)
from .gaussian import squeezed_thermal
from .kernels import (BaselineNoCavity, Coherent, DeterministicCoherent,
                      DeterministicSqueezedVac, PhotonCount, SqueezedVac,
                      baseline_no_cavity, lossy_kernel_spec)
from .negativity import negative_volume, nonclassical_depth, refine_minimum
from .presets import FIGURES, preset as figure_preset
from .response import SystemParams
from .steady_state import (default_steady_grid, fock_diagonal_wigner, solve_steady_state,
                           validate_rwa, witness, write_populations)
from .wigner import (GRID_PRESETS, PhaseSpaceGrid, QuadratureSettings, compute_wigner,
                     default_grid, write_csv)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

COMMANDS = ("pulsed", "photon-count", "baseline", "depth", "steady", "validate-rwa", "sweep")

DEFAULTS = {
    "g0_over_kappa": 1.0, "detuning": 0.0, "gamma_hz": 1e-3, "omega_m_hz": 1e5,
    "n_bath": 0.0, "k": 0.0, "k2": 0.0,
    "alpha": None, "r_l": None, "theta": 0.0, "n": None, "eta": 1.0,
    "n_bar": 0.0, "r_m": 0.0,
    "grid": "default", "x_min": None, "x_max": None, "p_min": None, "p_max": None,
    "n_x": None, "n_p": None, "nodes": None, "workers": 1, "refine": False,
    "truncation": 100, "escalations": 8, "tail_eps": 1e-10, "tail_policy": "error",
    "n_levels": 100, "periods": 100, "steps_per_period": 200,
    "sweep_command": None, "axis": [],
    "out": ".",
}

# parameters a sweep axis may vary
SWEEPABLE = ("g0_over_kappa", "detuning", "gamma_hz", "omega_m_hz", "n_bath", "k",
             "alpha", "r_l", "n", "eta", "n_bar", "r_m", "truncation")

_FLOAT = float
_TYPES = {
    **{k: _FLOAT for k in ("g0_over_kappa", "detuning", "gamma_hz", "omega_m_hz", "n_bath",
                           "k", "k2", "alpha", "r_l", "theta", "eta", "n_bar", "r_m",
                           "x_min", "x_max", "p_min", "p_max", "tail_eps")},
    **{k: int for k in ("n", "n_x", "n_p", "nodes", "workers", "truncation", "escalations",
                        "n_levels", "periods", "steps_per_period")},
    "grid": str, "tail_policy": str, "sweep_command": str, "out": str,
}


class ConfigError(OptoWignerError):
    pass


# ---------------------------------------------------------------------------
# configuration

def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_axis(tokens):
    if len(tokens) != 4:
        raise ValueError("axis needs NAME MIN MAX COUNT")
    name, lo, hi, count = tokens
    return [name, float(lo), float(hi), int(count)]


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment; ``axis`` may repeat."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            if key == "axis":
                out.setdefault("axis", []).append(_parse_axis(value.split()))
            elif key == "refine":
                out[key] = _parse_bool(value)
            elif key in ("command", "preset", "config"):
                out[key] = value
            elif key in _TYPES:
                out[key] = _TYPES[key](value)
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return out


def _add_common(sp):
    S = argparse.SUPPRESS
    a = sp.add_argument
    a("--config", default=S, help="key = value file; flags override it")
    a("--preset", default=S, help="figure preset or grid preset (%s)" % ", ".join(GRID_PRESETS))
    a("--out", default=S, help="output directory")
    a("--g0-over-kappa", type=float, default=S)
    a("--detuning", type=float, default=S, help="normalised detuning")
    a("--gamma-hz", type=float, default=S, help="mechanical damping gamma/2pi in Hz")
    a("--omega-m-hz", type=float, default=S, help="mechanical frequency omega_m/2pi in Hz")
    a("--n-bath", type=float, default=S, help="bath occupation")
    a("--k", type=float, default=S, help="photon flux parameter in 1/s")
    a("--k2", type=float, default=S)
    a("--alpha", type=float, default=S, help="coherent amplitude")
    a("--r-l", type=float, default=S, help="optical squeezing (squeezed-vacuum input)")
    a("--theta", type=float, default=S, help="optical squeezing angle (no effect)")
    a("--n", type=int, default=S, help="detected photon number")
    a("--eta", type=float, default=S, help="detection efficiency")
    a("--n-bar", type=float, default=S, help="initial thermal occupation")
    a("--r-m", type=float, default=S, help="initial momentum squeezing")
    a("--grid", default=S, help="grid preset name")
    for b in ("x_min", "x_max", "p_min", "p_max"):
        a("--" + b.replace("_", "-"), type=float, default=S)
    a("--n-x", type=int, default=S)
    a("--n-p", type=int, default=S)
    a("--nodes", type=int, default=S, help="fixed number of u-quadrature nodes")
    a("--workers", type=int, default=S)
    a("--refine", action="store_const", const=True, default=S,
      help="refine the Wigner minimum off-grid")
    a("--truncation", type=int, default=S, help="Fock levels N")
    a("--escalations", type=int, default=S)
    a("--tail-eps", type=float, default=S)
    a("--tail-policy", choices=("error", "warn"), default=S)
    a("--n-levels", type=int, default=S, help="odd levels summed by the witness")
    a("--periods", type=int, default=S)
    a("--steps-per-period", type=int, default=S)


def build_parser():
    parser = argparse.ArgumentParser(prog="optowigner", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--list-presets", action="store_true",
                        help="print preset names and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        _add_common(sp)
        if name == "sweep":
            sp.add_argument("--sweep-command", "--command", dest="sweep_command",
                            default=argparse.SUPPRESS,
                            choices=[c for c in COMMANDS if c not in ("sweep", "validate-rwa")])
            sp.add_argument("--axis", nargs=4, action="append", default=argparse.SUPPRESS,
                            metavar=("NAME", "MIN", "MAX", "COUNT"))
    return parser


def resolve_config(ns: dict) -> dict:
    """Merge defaults, preset, config file and flags into one flat dict."""
    flags = dict(ns)
    command = flags.pop("command")
    if "axis" in flags:
        try:
            flags["axis"] = [_parse_axis(a) for a in flags["axis"]]
        except ValueError as exc:
            raise ConfigError(f"--axis: {exc}")
    filecfg = read_config_file(flags.pop("config")) if "config" in flags else {}
    name = flags.pop("preset", None) or filecfg.pop("preset", None)
    file_cmd = filecfg.pop("command", None)
    if file_cmd and file_cmd != command:
        raise ConfigError(f"config file is for {file_cmd!r}, not {command!r}")
    cfg = dict(DEFAULTS)
    if name is not None:
        if name in GRID_PRESETS:
            cfg["grid"] = name
        else:
            try:
                frag = figure_preset(name)
            except DomainError as exc:
                raise ConfigError(f"{exc}; grid presets: {', '.join(GRID_PRESETS)}")
            if frag.pop("command") != command:
                raise ConfigError(f"preset {name} belongs to command "
                                  f"{FIGURES[name]['command']!r}")
            frag.pop("expected", None)
            cfg.update(frag)
        cfg["preset"] = name
    cfg.update(filecfg)
    cfg.update(flags)
    cfg["command"] = command
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg["grid"] not in GRID_PRESETS:
        raise ConfigError(f"unknown grid preset {cfg['grid']!r}; valid: {', '.join(GRID_PRESETS)}")
    if cfg["command"] == "sweep":
        if not cfg["sweep_command"]:
            raise ConfigError("sweep needs --sweep-command")
        if not 1 <= len(cfg["axis"]) <= 2:
            raise ConfigError("sweep needs one or two --axis entries")
        for name, lo, hi, count in cfg["axis"]:
            if name not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {name!r}; sweepable: {', '.join(SWEEPABLE)}")
            if count < 1:
                raise ConfigError("axis count must be >= 1")
    if cfg["alpha"] is not None and cfg["r_l"] is not None:
        raise ConfigError("give either --alpha or --r-l, not both")


# ---------------------------------------------------------------------------
# computations

def system_params(cfg) -> SystemParams:
    return SystemParams.from_hz(cfg["g0_over_kappa"], gamma_hz=cfg["gamma_hz"],
                                omega_m_hz=cfg["omega_m_hz"], delta_bar=cfg["detuning"],
                                n_bath=cfg["n_bath"], flux_k=cfg["k"], flux_k2=cfg["k2"])


def _source(cfg):
    if cfg["r_l"] is not None:
        return SqueezedVac(cfg["r_l"], cfg["theta"])
    return Coherent(2.0 if cfg["alpha"] is None else cfg["alpha"])


def build_kernel(cfg, params, command):
    src = _source(cfg)
    if command == "photon-count" or (command == "depth" and cfg["n"] is not None):
        n = 1 if cfg["n"] is None else cfg["n"]
        if cfg["eta"] < 1.0:
            return lossy_kernel_spec(params, n, cfg["eta"], src)
        return PhotonCount(params, n)
    if command == "baseline":
        return BaselineNoCavity(params, src)
    if isinstance(src, SqueezedVac):
        return DeterministicSqueezedVac(params, src.r_l, src.theta)
    return DeterministicCoherent(params, src.alpha)


def build_grid(cfg, state, kernel):
    opts = dict(GRID_PRESETS[cfg["grid"]])
    g = default_grid(state, kernel, **opts)
    bounds = {k: cfg[k] for k in ("x_min", "x_max", "p_min", "p_max", "n_x", "n_p")}
    if any(v is not None for v in bounds.values()):
        base = g.to_dict()
        base.update({k: v for k, v in bounds.items() if v is not None})
        g = PhaseSpaceGrid(**base)
    return g


def _pulsed_state(cfg, command):
    params = system_params(cfg)
    state = squeezed_thermal(cfg["n_bar"], cfg["r_m"])
    kernel = build_kernel(cfg, params, command)
    grid = build_grid(cfg, state, kernel)
    quad = QuadratureSettings(nodes=cfg["nodes"])
    if command == "baseline":
        w = baseline_no_cavity(grid, kernel.source, state, params)
    else:
        w = compute_wigner(grid, kernel, state, quad, workers=cfg["workers"])
    return params, state, kernel, quad, w


def _metrics_from_grid(w, cfg, kernel=None, state=None, quad=None):
    rep = negative_volume(w)
    min_w, (mx, mp) = rep.min_value, rep.min_location
    if cfg["refine"] and kernel is not None and rep.min_value < 0:
        min_w, (mx, mp) = refine_minimum(w, kernel, state, quad)
    return {"delta": rep.delta, "min_w": min_w, "min_x": mx, "min_p": mp,
            "neg_to_pos_ratio": rep.neg_to_pos_ratio, "witness": None, "tau_inf": None}


def compute(cfg):
    """Run one non-sweep command; returns ``(metrics, diagnostics, artifacts)``.

    ``artifacts`` maps file names to writer callables taking a path.
    """
    command = cfg["command"]
    diag, artifacts = {}, {}
    if command in ("pulsed", "photon-count", "baseline", "depth"):
        params, state, kernel, quad, w = _pulsed_state(cfg, command)
        metrics = _metrics_from_grid(w, cfg, None if command == "baseline" else kernel,
                                     state, quad)
        if command == "depth":
            depth = nonclassical_depth(w)
            metrics["tau_inf"] = depth.tau_inf
            diag["depth"] = depth.to_dict()
        if command == "photon-count":
            diag["heralding_probability"] = _heralding(cfg, kernel)
        diag.update({"grid": {**w.grid.to_dict(), "preset": cfg["grid"]},
                     "quadrature": w.meta.get("quadrature"), "kernel": kernel.describe(),
                     "state": state.to_dict(), "total": w.total,
                     "normalization_ok": w.normalization_ok,
                     "max_imag_residual": w.max_imag_residual})
        artifacts["wigner.csv"] = lambda path, w=w: write_csv(w, path)
        return params, metrics, diag, artifacts
    params = system_params(cfg)
    strict = cfg["tail_policy"] == "error"
    pop = solve_steady_state(params, cfg["truncation"], escalations=cfg["escalations"],
                             tail_eps=cfg["tail_eps"], strict_tail=strict)
    wit = witness(pop, cfg["n_levels"], strict=False)
    metrics = {"delta": None, "min_w": None, "min_x": None, "min_p": None,
               "witness": wit.value, "tau_inf": None}
    diag["truncation"] = {"N": pop.truncation_n, "tail_mass": pop.tail_mass,
                          "witness_levels": wit.levels_used, **pop.diagnostics}
    if command == "steady":
        grid = default_steady_grid(pop)
        w = fock_diagonal_wigner(pop, grid)
        rep = negative_volume(w)
        metrics.update(delta=rep.delta, min_w=rep.min_value, min_x=rep.min_location[0],
                       min_p=rep.min_location[1])
        diag["grid"] = grid.to_dict()
        artifacts["populations.csv"] = lambda path, pop=pop: write_populations(
            pop, path, cfg["n_levels"])
        artifacts["wigner.csv"] = lambda path, w=w: write_csv(w, path)
    elif command == "validate-rwa":
        val = validate_rwa(pop, params, cfg["periods"], steps_per_period=cfg["steps_per_period"])
        metrics["min_fidelity"] = val.min_fidelity
        diag["rwa"] = val.to_dict()
        artifacts["populations.csv"] = lambda path, pop=pop: write_populations(
            pop, path, cfg["n_levels"])
    return params, metrics, diag, artifacts


def _heralding(cfg, kernel):
    from .kernels import heralding_probability
    if isinstance(kernel, PhotonCount) and cfg["r_l"] is None:
        alpha = 2.0 if cfg["alpha"] is None else cfg["alpha"]
        return heralding_probability(kernel.n, 1.0, alpha)
    if hasattr(kernel, "probability"):
        return kernel.probability
    return None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _provenance(cfg, params):
    return {"version": __version__, "config": _jsonable(cfg),
            "params": _jsonable(params.to_dict()) if params else None}


def run_single(cfg):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    params, metrics, diag, artifacts = compute(cfg)
    diag["runtime_ms"] = 1e3 * (time.perf_counter() - t0)
    prov = _provenance(cfg, params)
    for fname, writer in artifacts.items():
        writer(out / fname)
        side = out / (fname + ".json")
        extra = {}
        if side.exists():                       # populations writer adds its own block
            extra = json.loads(side.read_text())
        side.write_text(json.dumps(_jsonable({**extra, **prov, "metrics": metrics,
                                              "diagnostics": diag}), indent=2))
    report = {"command": cfg["command"], "params": prov["params"], "metrics": metrics,
              "diagnostics": diag, "provenance": prov}
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2))
    return report


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = ("axis1", "axis2", "delta", "min_w", "min_x", "min_p", "witness", "tau_inf")


def axis_values(axis):
    name, lo, hi, count = axis
    vals = np.linspace(lo, hi, count)
    return [int(round(v)) for v in vals] if _TYPES.get(name) is int else vals.tolist()


def _sweep_point(cfg):
    try:
        _, metrics, _, _ = compute(cfg)
        return metrics, None
    except OptoWignerError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_sweep(cfg):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    axes = cfg["axis"]
    grids = [axis_values(a) for a in axes]
    points = []
    for v1 in grids[0]:
        for v2 in (grids[1] if len(grids) > 1 else [None]):
            pc = dict(cfg, command=cfg["sweep_command"], axis=[])
            pc[axes[0][0]] = v1
            if v2 is not None:
                pc[axes[1][0]] = v2
            points.append((v1, v2, pc))
    workers = cfg["workers"] if cfg["workers"] and cfg["workers"] > 0 else (os.cpu_count() or 1)
    path = out / "sweep.csv"
    failure = None
    done = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        if workers > 1:
            ex = ProcessPoolExecutor(max_workers=workers)
            results = ex.map(_sweep_point, [p[2] for p in points])
        else:
            ex = None
            results = map(_sweep_point, [p[2] for p in points])
        try:
            for (v1, v2, _), (metrics, err) in zip(points, results):
                if err is not None:
                    failure = {"axis1": v1, "axis2": v2, "error": err}
                    break
                writer.writerow([_fmt(v1), _fmt(v2)] + [_fmt(metrics.get(c)) for c in SWEEP_COLUMNS[2:]])
                fh.flush()
                done += 1
        finally:
            if ex is not None:
                ex.shutdown(cancel_futures=True)
    side = {**_provenance(cfg, None), "axes": [a[0] for a in axes], "points": len(points),
            "completed": done, "partial": failure is not None, "failure": failure}
    (out / "sweep.csv.json").write_text(json.dumps(_jsonable(side), indent=2))
    return side


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------

def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        for name in sorted(FIGURES):
            print(f"{name:12s} {FIGURES[name]['command']}")
        for name in GRID_PRESETS:
            print(f"{name:12s} grid")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    ns = {k: v for k, v in vars(args).items() if k != "list_presets"}
    try:
        cfg = resolve_config(ns)
        if cfg["command"] == "sweep":
            side = run_sweep(cfg)
            if side["partial"]:
                print(f"sweep stopped early: {side['failure']['error']}", file=sys.stderr)
                return EXIT_NUMERIC
            print(f"wrote {side['completed']} rows to {Path(cfg['out']) / 'sweep.csv'}")
        else:
            report = run_single(cfg)
            print(json.dumps(_jsonable(report["metrics"])))
    except (ConfigError, DomainError, PreconditionError, UnsupportedError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AccuracyError, SolverError, TruncationError, StepSizeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
