"""Command-line front end: ``dtcsim <subcommand> [options]``.

Every run writes CSV data plus a ``manifest.json`` into its own directory under
the output root (``$DTCSIM_OUTPUT_ROOT``, default ``./dtcsim-output``) unless
``--out`` is given. Passing a manifest back through ``--config`` repeats the run.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import _core
from .analysis import (ENGINES, dominance_ratio, is_split, local_maxima_near_half,
                       power_spectrum, scan_delta, subharmonic_peak)
from .io import (RunManifest, check_keys, load_config, output_root, read_series_csv, write_csv,
                 write_manifest)
from .model import ConfigError, MagnetizationAxis, ProductStateSpec, build_params
from .recipes import (FIGURES, PSOS_PERIODS, QUANTUM_DEFAULTS, SCAN_DELTAS,
                      SEMICLASSICAL_PERIODS)

log = logging.getLogger("dtcsim")

MODEL_KEYS = {"T", "N", "phi", "h", "hT", "epsilon", "epsilonT", "J", "JT",
              "lambda", "lam", "lambdaT"}
MF_KEYS = (MODEL_KEYS - {"N"}) | {"n_periods", "steps_per_period", "P0", "Q0", "convention"}
PSOS_KEYS = MF_KEYS | {"seeds_p", "seeds_q", "q_max"}
MPS_KEYS = MODEL_KEYS | {"n_periods", "dt_over_T", "M", "sign", "budget"}
ED_KEYS = MODEL_KEYS | {"n_periods", "dt_over_T", "sign", "method"}
SCAN_KEYS = {"T", "N", "phi", "J", "JT", "engine", "n_periods", "deltas", "delta_min",
             "delta_max", "delta_step", "steps_per_period", "dt_over_T", "M", "convention",
             "workers"}


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _model_part(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k in MODEL_KEYS}


def _int(cfg: dict, key: str, lo: int = 1) -> int:
    v = cfg[key]
    if isinstance(v, bool) or not float(v).is_integer() or int(v) < lo:
        raise ConfigError(f"key {key!r}: expected an integer >= {lo}, got {v!r}")
    return int(v)


def _run_dir(subcommand: str, cfg: dict, out: str | None) -> Path:
    if out:
        return Path(out)
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:10]
    return output_root() / subcommand / digest


def _spectrum_columns(series) -> tuple[dict, dict]:
    spec = power_spectrum(series)
    cols = {"omega_over_omega_drive": spec.relative_omegas, "magnitude_sq": spec.magnitudes}
    summary: dict[str, Any] = {"n_samples": spec.n_samples}
    if spec.n_samples % 2 == 0:
        summary.update(subharmonic_peak=subharmonic_peak(spec),
                       dominance_ratio=dominance_ratio(spec),
                       split=is_split(spec),
                       side_maxima=len(local_maxima_near_half(spec)))
    return cols, summary


def _finish(subcommand, cfg, params, engine, out_dir: Path, tables: dict, t0: float,
            summary=None, extra=None, criterion=None) -> RunManifest:
    outputs = []
    for name, cols in tables.items():
        _stage("write", write_csv, out_dir / name, cols)
        outputs.append(name)
    manifest = RunManifest(
        subcommand=subcommand, config=cfg,
        parameters=params.as_dict() if params is not None else {},
        engine=engine, outputs=outputs, wall_time=time.perf_counter() - t0,
        criterion=criterion, summary=summary or {},
        extra={"backend": _core.BACKEND, **(extra or {})},
    )
    _stage("write", write_manifest, out_dir / "manifest.json", manifest)
    return manifest


# --- pipelines -----------------------------------------------------------------

def run_mf_evolve(cfg: dict, out_dir: Path, criterion=None) -> RunManifest:
    from .meanfield import MeanFieldState, stroboscopic

    check_keys(cfg, MF_KEYS, "mf-evolve")
    cfg = {"n_periods": SEMICLASSICAL_PERIODS, "steps_per_period": 1000, "P0": math.pi / 2,
           "Q0": 0.0, "convention": "pauli", **cfg}
    params = build_params(_model_part(cfg))
    t0 = time.perf_counter()
    series = _stage("evolve", stroboscopic, MeanFieldState(float(cfg["Q0"]), float(cfg["P0"])),
                    _int(cfg, "n_periods"), params, _int(cfg, "steps_per_period", 100),
                    convention=cfg["convention"])
    spec_cols, summary = _stage("analysis", _spectrum_columns, series)
    return _finish("mf-evolve", cfg, params, "meanfield", out_dir,
                   {"series.csv": series.columns, "spectrum.csv": spec_cols}, t0, summary,
                   {"convention": cfg["convention"]}, criterion)


def run_psos(cfg: dict, out_dir: Path, criterion=None) -> RunManifest:
    from .meanfield import MeanFieldState, default_seed_grid, psos, stroboscopic

    check_keys(cfg, PSOS_KEYS, "psos")
    cfg = {"n_periods": PSOS_PERIODS, "steps_per_period": 1000, "seeds_p": 24, "seeds_q": 24,
           "q_max": 0.95, "P0": math.pi / 2, "Q0": 0.0, "convention": "pauli", **cfg}
    params = build_params(_model_part(cfg))
    n, steps = _int(cfg, "n_periods"), _int(cfg, "steps_per_period", 100)
    seeds = default_seed_grid(_int(cfg, "seeds_p"), _int(cfg, "seeds_q"), float(cfg["q_max"]))
    t0 = time.perf_counter()
    cloud = _stage("evolve", psos, seeds, n, params, steps, convention=cfg["convention"])
    orbit = _stage("evolve", stroboscopic, MeanFieldState(float(cfg["Q0"]), float(cfg["P0"])),
                   n, params, steps, convention=cfg["convention"])
    idx = cloud.seed_index
    tables = {
        "psos.csv": {"seed_P": cloud.seeds[idx, 0], "seed_Q": cloud.seeds[idx, 1],
                     "n": cloud.n, "P": cloud.points[:, 0], "Q": cloud.points[:, 1]},
        "orbit.csv": orbit.columns,
    }
    return _finish("psos", cfg, params, "meanfield", out_dir, tables, t0,
                   {"seeds": len(seeds), "skipped": cloud.skipped},
                   {"convention": cfg["convention"]}, criterion)


def _quantum_common(cfg: dict):
    params = build_params(_model_part(cfg))
    sign = int(cfg["sign"])
    if sign not in (1, -1):
        raise ConfigError(f"key 'sign': expected +1 or -1, got {cfg['sign']!r}")
    spec = ProductStateSpec(phi=params.phi, sign=sign, N=params.N)
    return params, spec, MagnetizationAxis(params.phi), float(cfg["dt_over_T"]) * params.T


def run_mps_evolve(cfg: dict, out_dir: Path, criterion=None) -> RunManifest:
    from .mps import SCHEME_NAME, evolve_periods, mps_from_product

    check_keys(cfg, MPS_KEYS, "mps-evolve")
    cfg = {"N": QUANTUM_DEFAULTS["N"], "M": QUANTUM_DEFAULTS["M"],
           "dt_over_T": QUANTUM_DEFAULTS["dt_over_T"], "n_periods": QUANTUM_DEFAULTS["n_periods"],
           "sign": 1, "budget": 1e-2, **cfg}
    params, spec, axis, dt = _quantum_common(cfg)
    t0 = time.perf_counter()
    state = mps_from_product(spec, _int(cfg, "M"))
    series = _stage("evolve", evolve_periods, state, params, dt, _int(cfg, "n_periods"), axis,
                    float(cfg["budget"]))
    spec_cols, summary = _stage("analysis", _spectrum_columns, series)
    cols = {k: series.columns[k] for k in ("n", "magnetization", "cumulative_truncation_weight")}
    return _finish("mps-evolve", cfg, params, "mps", out_dir,
                   {"series.csv": cols, "spectrum.csv": spec_cols}, t0, summary,
                   {"scheme": SCHEME_NAME, "dt": dt, "M": state.max_bond,
                    "final_bond_dims": state.bond_dims,
                    "max_norm_drift": state.max_norm_drift}, criterion)


def run_ed_evolve(cfg: dict, out_dir: Path, criterion=None) -> RunManifest:
    from .ed import DenseState, ed_evolve

    check_keys(cfg, ED_KEYS, "ed-evolve")
    cfg = {"N": 8, "dt_over_T": QUANTUM_DEFAULTS["dt_over_T"],
           "n_periods": QUANTUM_DEFAULTS["n_periods"], "sign": 1, "method": "magnus4", **cfg}
    params, spec, axis, dt = _quantum_common(cfg)
    t0 = time.perf_counter()
    state = _stage("config", DenseState.from_product, spec)
    series = _stage("evolve", ed_evolve, state, params, dt, _int(cfg, "n_periods"), axis,
                    cfg["method"])
    spec_cols, summary = _stage("analysis", _spectrum_columns, series)
    return _finish("ed-evolve", cfg, params, "ed", out_dir,
                   {"series.csv": series.columns, "spectrum.csv": spec_cols}, t0, summary,
                   {"dt": dt, "method": cfg["method"]}, criterion)


def _scan_deltas(cfg: dict) -> list[float]:
    if "deltas" in cfg:
        if any(k in cfg for k in ("delta_min", "delta_max", "delta_step")):
            raise ConfigError("give either 'deltas' or 'delta_min'/'delta_max'/'delta_step', not both")
        return [float(d) for d in cfg["deltas"]]
    lo, hi, step = (float(cfg.get(k, v)) for k, v in
                    (("delta_min", 0.01), ("delta_max", 0.20), ("delta_step", 0.01)))
    if step <= 0 or hi < lo:
        raise ConfigError("delta range needs delta_step > 0 and delta_max >= delta_min")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def run_scan(cfg: dict, out_dir: Path, criterion=None) -> RunManifest:
    check_keys(cfg, SCAN_KEYS, "scan-delta")
    cfg = {"engine": "meanfield", "workers": 1, **cfg}
    engine = cfg["engine"]
    if engine not in ENGINES:
        raise ConfigError(f"key 'engine': expected one of {ENGINES}, got {engine!r}")
    deltas = _scan_deltas(cfg)
    cfg.pop("delta_min", None), cfg.pop("delta_max", None), cfg.pop("delta_step", None)
    cfg["deltas"] = deltas
    options: dict[str, Any] = {}
    if engine == "meanfield":
        cfg = {"n_periods": SEMICLASSICAL_PERIODS, "steps_per_period": 1000,
               "convention": "pauli", **cfg}
        options = {"steps_per_period": _int(cfg, "steps_per_period", 100),
                   "convention": cfg["convention"]}
    else:
        cfg = {"n_periods": QUANTUM_DEFAULTS["n_periods"], "dt_over_T": QUANTUM_DEFAULTS["dt_over_T"],
               "N": 8 if engine == "ed" else QUANTUM_DEFAULTS["N"], **cfg}
        options = {"dt_over_T": float(cfg["dt_over_T"])}
        if engine == "mps":
            cfg.setdefault("M", QUANTUM_DEFAULTS["M"])
            options["max_bond"] = _int(cfg, "M")
    params = build_params({k: cfg[k] for k in ("T", "N", "phi", "J", "JT") if k in cfg})
    t0 = time.perf_counter()
    points = _stage("evolve", scan_delta, params, deltas, _int(cfg, "n_periods"), engine,
                    _int(cfg, "workers"), **options)
    table = {"delta": [p.delta for p in points], "peak": [p.peak for p in points]}
    failed = {repr(p.delta): p.error for p in points if p.error}
    return _finish("scan-delta", cfg, params, engine, out_dir, {"scan.csv": table}, t0,
                   {"failed_deltas": failed}, None, criterion)


def run_spectrum(input_path: str, column: str | None, period: float, out_dir: Path) -> RunManifest:
    t0 = time.perf_counter()
    series = _stage("read", read_series_csv, input_path, column, period)
    cols, summary = _stage("analysis", _spectrum_columns, series)
    cfg = {"input": str(input_path), "column": column, "T": period}
    return _finish("spectrum", cfg, None, None, out_dir, {"spectrum.csv": cols}, t0, summary)


PIPELINES = {"psos": run_psos, "mf-evolve": run_mf_evolve, "mps-evolve": run_mps_evolve,
             "ed-evolve": run_ed_evolve, "scan-delta": run_scan}


# --- reproduce -----------------------------------------------------------------

def reproduce(figure: str, out_dir: Path | None, engine: str | None = None,
              sites: int | None = None, bond: int | None = None, periods: int | None = None,
              dt_over_T: float | None = None, convention: str | None = None,
              workers: int = 1) -> RunManifest:
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure id {figure!r}; choose from {', '.join(FIGURES)}")
    recipe = FIGURES[figure]
    out_dir = out_dir or output_root() / "reproduce" / figure
    t0 = time.perf_counter()
    quantum = recipe.kind == "quantum"
    allowed = ("mps", "ed") if quantum else ("meanfield",)
    engine = engine or allowed[0]
    if engine not in allowed:
        raise ConfigError(f"{figure} supports --engine {' or '.join(allowed)}, got {engine!r}")
    if not quantum and (sites or bond or dt_over_T):
        raise ConfigError(f"{figure} is semiclassical; --sites/--bond/--dt-over-T do not apply")
    if quantum and convention:
        raise ConfigError(f"{figure} is a quantum figure; --convention does not apply")

    runs = []
    sizes = recipe.sizes or (None,)
    if sites is not None and recipe.sizes:
        sizes = (sites,)
    for N in sizes:
        for tag, base in recipe.runs:
            cfg = dict(base)
            if quantum:
                cfg.setdefault("n_periods", QUANTUM_DEFAULTS["n_periods"])
                cfg["N"] = sites or N or QUANTUM_DEFAULTS["N"]
                cfg["dt_over_T"] = dt_over_T or QUANTUM_DEFAULTS["dt_over_T"]
                if engine == "mps":
                    cfg["M"] = bond or QUANTUM_DEFAULTS["M"]
                sub = "mps-evolve" if engine == "mps" else "ed-evolve"
                run_tag = f"N{cfg['N']}_{tag}"
            elif recipe.kind == "scan":
                cfg.update(engine="meanfield", deltas=list(SCAN_DELTAS), workers=workers)
                sub, run_tag = "scan-delta", tag
            else:
                sub, run_tag = ("psos" if recipe.kind == "psos" else "mf-evolve"), tag
            if periods is not None:
                cfg["n_periods"] = periods
            if convention is not None:
                cfg["convention"] = convention
            runs.append((sub, run_tag, cfg))

    members = []
    for sub, run_tag, cfg in runs:
        log.info("%s: running %s %s", figure, sub, run_tag)
        m = PIPELINES[sub](cfg, out_dir / run_tag, criterion=list(recipe.criteria))
        members.append({"tag": run_tag, "subcommand": sub, "directory": run_tag,
                        "outputs": m.outputs, "summary": m.summary})
    bundle = RunManifest(
        subcommand="reproduce", config={"figure": figure, "engine": engine, "sites": sites,
                                        "bond": bond, "periods": periods, "dt_over_T": dt_over_T,
                                        "convention": convention},
        parameters={}, engine=engine, outputs=[m["directory"] for m in members],
        wall_time=time.perf_counter() - t0, criterion=list(recipe.criteria),
        summary={"description": recipe.description}, extra={"runs": members},
    )
    _stage("write", write_manifest, out_dir / "manifest.json", bundle)
    return bundle


# --- argument parsing ------------------------------------------------------------

def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out[key.strip()] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtcsim", description="Driven Ising chain: semiclassical "
                                "and quantum time-crystal diagnostics.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat TOML file or a run manifest (JSON)")
        s.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        s.add_argument("--out", help="output directory (default: under the output root)")
    s = sub.add_parser("spectrum")
    s.add_argument("--input", required=True, help="CSV with a stroboscopic series")
    s.add_argument("--column", help="series column (default: magnetization/sigma_y/value)")
    s.add_argument("--period", type=float, default=1.0)
    s.add_argument("--out")
    s = sub.add_parser("reproduce")
    s.add_argument("figure", help=", ".join(FIGURES))
    s.add_argument("--engine", choices=ENGINES)
    s.add_argument("--sites", type=int)
    s.add_argument("--bond", type=int)
    s.add_argument("--periods", type=int)
    s.add_argument("--dt-over-T", dest="dt_over_T", type=float)
    s.add_argument("--convention", choices=("pauli", "spin"))
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "spectrum":
            out = Path(args.out) if args.out else _run_dir(
                "spectrum", {"input": str(Path(args.input).resolve()), "column": args.column}, None)
            m = run_spectrum(args.input, args.column, args.period, out)
        elif args.command == "reproduce":
            m = reproduce(args.figure, Path(args.out) if args.out else None, args.engine,
                          args.sites, args.bond, args.periods, args.dt_over_T, args.convention,
                          args.workers)
            out = Path(args.out) if args.out else output_root() / "reproduce" / args.figure
        else:
            cfg = load_config(args.config) if args.config else {}
            cfg.update(_parse_set(args.set))
            out = _run_dir(args.command, cfg, args.out)
            m = PIPELINES[args.command](cfg, out)
    except ConfigError as exc:
        print(f"dtcsim: configuration error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"dtcsim: stage {exc}", file=sys.stderr)
        return 1
    print(f"{m.subcommand}: wrote {', '.join(m.outputs)} and manifest.json to {out}")
    return 0


def main() -> None:
    sys.exit(run())
