"""Command-line front end.

Exit status: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .bath import BathSpec
from .classical import crossover_distance
from .config import COUPLINGS, ConfigError, GridSpec, RunConfig, config_to_dict, parse_document
from .mcf import SolverError, StationaryStateError
from .oracle import OracleError, compare, oracle_sweep
from .presets import PRESETS, preset
from .response import (CoverageWarning, LinearResponse, MatchError, Spectrum, SweepError,
                       ground_line_height, match_lambda, static_susceptibility_check, sum_rule)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
CSV_MAGIC = "# spinline v1"
CSV_COLUMNS = "omega,omega_scaled,chi_real,chi_imag,chi_imag_scaled"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spinline",
                description="AC susceptibility of a dissipative uniaxial spin by matrix continued fractions.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", metavar="NAME",
                     help=f"named parameter set ({', '.join(sorted(PRESETS))}); "
                          "NAME:key=value overrides top-level keys")
    src.add_argument("--config", metavar="PATH", help="JSON run document")
    p.add_argument("--output", metavar="PATH", default="spinline-out",
                   help="output directory (default: %(default)s)")
    p.add_argument("--grid", metavar="MIN:MAX:N[,scaled]",
                   help="frequency grid; bounds in units of 2DS when ',scaled' is given")
    p.add_argument("--verify", action="store_true",
                   help="compare against the dense oracle when S is within its cap")
    p.add_argument("--distance-window", metavar="A:B",
                   help="report distance to the classical curve over reduced frequencies [A, B]")
    p.add_argument("--workers", type=int, metavar="N", help="threads for the frequency sweep")
    p.add_argument("--echo", action="store_true",
                   help="print the resolved configuration and exit")
    return p


def parse_grid(text: str) -> GridSpec:
    body, _, flag = text.partition(",")
    if flag not in ("", "scaled"):
        raise UsageError(f"--grid: unknown flag {flag!r}")
    parts = body.split(":")
    if len(parts) != 3:
        raise UsageError("--grid expects MIN:MAX:N")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--grid: cannot parse {text!r}") from None
    if n < 1 or not 0 < lo <= hi or (n > 1 and lo == hi):
        raise UsageError("--grid needs 0 < MIN < MAX and N >= 1")
    return GridSpec(lo, hi, n, flag == "scaled")


def parse_window(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError("--distance-window expects A:B") from None
    if not 0 < a < b:
        raise UsageError("--distance-window needs 0 < A < B")
    return a, b


def resolve_runs(args) -> list[RunConfig]:
    if args.preset:
        runs = preset(args.preset)
    elif args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc.strerror}") from exc
        runs = parse_document(text)
    else:
        raise UsageError("one of --preset or --config is required")
    override = {}
    if args.grid:
        override["grid"] = parse_grid(args.grid)
    if args.verify:
        override["verify"] = True
    if args.distance_window:
        override["distance_window"] = parse_window(args.distance_window)
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        override["workers"] = args.workers
    out = []
    for cfg in runs:
        cfg = RunConfig(**{**cfg.__dict__, **override})
        if cfg.grid.scaled and cfg.D == 0:
            raise ConfigError("a scaled grid needs D > 0")
        out.append(cfg)
    labels = [c.label for c in out]
    if len(set(labels)) != len(labels):
        raise ConfigError("run labels must be unique")
    return out


# -- writers ---------------------------------------------------------------
def format_csv(spec: Spectrum) -> str:
    unit = spec.model.anisotropy_frequency
    scaled = spec.omega / unit if unit > 0 else np.full_like(spec.omega, np.nan)
    lines = [CSV_MAGIC, CSV_COLUMNS]
    for w, u, c, cs in zip(spec.omega, scaled, spec.chi, spec.chi_scaled):
        lines.append(",".join("%.14e" % x for x in (w, u, c.real, c.imag, cs.imag)))
    return "\n".join(lines) + "\n"


def read_csv(path) -> np.ndarray:
    """Rows of a spectrum CSV as an ``(n, 5)`` array (header checked)."""
    with open(path) as fh:
        if fh.readline().rstrip("\n") != CSV_MAGIC or fh.readline().rstrip("\n") != CSV_COLUMNS:
            raise ValueError(f"{path} is not a spinline v1 spectrum")
        return np.loadtxt(fh, delimiter=",", ndmin=2)


def format_json_spectrum(spec: Spectrum) -> str:
    unit = spec.model.anisotropy_frequency
    doc = {"omega": spec.omega.tolist(),
           "omega_scaled": (spec.omega / unit).tolist() if unit > 0 else None,
           "chi_real": spec.chi.real.tolist(), "chi_imag": spec.chi.imag.tolist(),
           "chi_imag_scaled": spec.chi_scaled.imag.tolist()}
    return json.dumps(doc, indent=1) + "\n"


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# -- execution -------------------------------------------------------------
def execute(cfg: RunConfig, cache: dict | None = None) -> tuple[Spectrum, dict]:
    """Run one configuration; returns the spectrum and its metadata."""
    cache = {} if cache is None else cache
    model, cpl = cfg.model(), cfg.coupling_spec()
    lam = cfg.lam
    meta = {"config": config_to_dict(cfg), "derived": cfg.derived()}
    if cfg.match is not None:
        key = (cfg.S, cfg.D, cfg.T, cfg.B, cfg.match)
        if key not in cache:
            ref_bath = BathSpec(cfg.match.s, cfg.match.lam, cfg.T)
            cache[key] = ground_line_height(model, COUPLINGS[cfg.match.coupling][0](), ref_bath)
        lam = match_lambda(model, cpl, cfg.s, cache[key], cfg.lam)
        meta["matched"] = {"lam": lam, "target_height": cache[key]}
    bath = cfg.bath(lam)
    lr = LinearResponse(model, cpl, bath)
    spec = lr.sweep(cfg.frequencies(), method=cfg.method, workers=cfg.workers)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoverageWarning)
        kk = sum_rule(spec)
    low, thermo = static_susceptibility_check(model, cpl, bath, response=lr)
    meta["checks"] = {
        "sum_rule": kk.value, "sum_rule_truncated": kk.truncated,
        "chi_low_frequency": low, "chi_thermodynamic": thermo,
        "passivity_violation": spec.passivity_violation(),
    }
    if cfg.distance_window is not None and model.D > 0:
        meta["distance"] = {"window": list(cfg.distance_window),
                            "value": crossover_distance(spec, model.sigma, cfg.distance_window)}
    if cfg.verify:
        if model.S <= cfg.oracle_cap:
            ref = oracle_sweep(model, cpl, bath, spec.omega, s_cap=cfg.oracle_cap)
            meta["verify"] = compare(spec, ref).as_dict()
        else:
            meta["verify"] = {"skipped": f"S={model.S:g} above oracle cap {cfg.oracle_cap:g}"}
    return spec, meta


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def run(runs: list[RunConfig], outdir, stream=sys.stdout) -> int:
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {outdir}: {exc.strerror}") from exc
    results, cache = [], {}
    for cfg in runs:
        spec, meta = execute(cfg, cache)
        results.append((cfg, spec, meta))
        line = f"{cfg.label}: {len(spec)} points"
        if "distance" in meta:
            line += f", distance {meta['distance']['value']:.6g}"
        if "verify" in meta and "max_relative" in meta["verify"]:
            line += f", oracle max deviation {meta['verify']['max_relative']:.3g}"
        print(line, file=stream)

    # single writer, after all runs have finished
    files = []
    for cfg, spec, meta in results:
        name = f"{cfg.label}.{cfg.format}"
        _write(outdir / name, format_csv(spec) if cfg.format == "csv" else format_json_spectrum(spec))
        _write(outdir / f"{cfg.label}.meta.json", _dump(meta))
        files += [name, f"{cfg.label}.meta.json"]
    distances = [{"label": c.label, "S": c.S, "lam": m.get("matched", {}).get("lam", c.lam),
                  "window": m["distance"]["window"], "distance": m["distance"]["value"]}
                 for c, _, m in results if "distance" in m]
    if distances:
        report = {"distances": distances}
        by_S = sorted(distances, key=lambda d: d["S"])
        if len({d["S"] for d in by_S}) == len(by_S) > 1:
            vals = [d["distance"] for d in by_S]
            report["strictly_decreasing_in_S"] = all(b < a for a, b in zip(vals, vals[1:]))
        _write(outdir / "distances.json", _dump(report))
        files.append("distances.json")
    _write(outdir / "manifest.json", _dump({"format": "spinline v1", "files": files}))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        runs = resolve_runs(args)
        if args.echo:
            docs = [config_to_dict(c) for c in runs]
            print(json.dumps(docs[0] if len(docs) == 1 else {"runs": docs}, sort_keys=True, indent=2))
            return EXIT_OK
        return run(runs, args.output)
    except (UsageError, ConfigError) as exc:
        print(f"spinline: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, SweepError, StationaryStateError, OracleError, MatchError) as exc:
        where = ""
        omega = getattr(exc, "omega", None)
        block = getattr(exc, "block_index", None)
        if omega is not None:
            where += f" [Omega={omega:g}]"
        if block is not None:
            where += f" [block {block}]"
        print(f"spinline: numerical failure: {exc}{where}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"spinline: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
