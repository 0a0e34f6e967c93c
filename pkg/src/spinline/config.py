"""Run configuration: parsing, resolution, echo.

A run document is a JSON object. Model parameters are given either as
``D`` or as the reduced barrier ``sigma = D S^2 / T``; the static field as
``B = [Bx, By, Bz]`` or as ``xi = S |B| / T`` with an optional
``field_direction``; coupling strength as ``lam`` or ``lam_over_S``. The
resolved :class:`RunConfig` keeps only the primary quantities, and its
echo is again a valid document that resolves to the same config.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bath import BathSpec, CouplingSpec
from .spin import SpinModel, _as_spin

COUPLINGS = {
    "phonon": (CouplingSpec.phonon, 3),
    "hybrid": (CouplingSpec.bilinear, 3),
    "electron-hole": (CouplingSpec.bilinear, 1),
}

_KEYS = {"label", "S", "D", "sigma", "T", "B", "xi", "field_direction", "coupling", "s",
         "lam", "lam_over_S", "grid", "verify", "distance_window", "match", "method",
         "workers", "format", "oracle_cap"}
_GRID_KEYS = {"min", "max", "count", "scaled"}
_MATCH_KEYS = {"coupling", "s", "lam", "lam_over_S"}
_REL = 1e-12


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """``count`` uniform frequencies from ``min`` to ``max`` (both included).

    With ``scaled`` the bounds are in units of ``2 D S``.
    """

    min: float
    max: float
    count: int
    scaled: bool = True

    def frequencies(self, model: SpinModel) -> np.ndarray:
        unit = model.anisotropy_frequency if self.scaled else 1.0
        if self.count == 1:
            return np.array([self.min * unit])
        return np.linspace(self.min, self.max, self.count) * unit

    @classmethod
    def default(cls) -> "GridSpec":
        # 600 points on (0, 1.2] in reduced frequency
        return cls(1.2 / 600, 1.2, 600, True)


@dataclass(frozen=True)
class MatchSpec:
    """Reference model whose ground-state peak height fixes this run's ``lam``."""

    coupling: str
    s: int
    lam: float


@dataclass(frozen=True)
class RunConfig:
    S: float
    D: float
    T: float
    B: tuple[float, float, float] = (0.0, 0.0, 0.0)
    coupling: str = "phonon"
    s: int = 3
    lam: float = 0.0
    grid: GridSpec = field(default_factory=GridSpec.default)
    label: str = "run"
    verify: bool = False
    distance_window: tuple[float, float] | None = None
    match: MatchSpec | None = None
    method: str = "auto"
    workers: int = 1
    format: str = "csv"
    oracle_cap: float = 8.0

    def model(self) -> SpinModel:
        return SpinModel(self.S, self.D, self.B, self.T)

    def coupling_spec(self) -> CouplingSpec:
        return COUPLINGS[self.coupling][0]()

    def bath(self, lam: float | None = None) -> BathSpec:
        return BathSpec(self.s, self.lam if lam is None else lam, self.T)

    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies(self.model())

    def derived(self) -> dict:
        m = self.model()
        return {"sigma": m.sigma, "xi": m.xi, "chi0": m.chi0,
                "anisotropy_frequency": m.anisotropy_frequency,
                "lam_over_S": self.lam / self.S}


def _num(doc, key, where="") -> float:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}{key}: must be finite")
    return float(v)


def _agree(a: float, b: float) -> bool:
    return abs(a - b) <= _REL * max(abs(a), abs(b), 1e-300)


def _unknown(doc: dict, allowed: set, where: str):
    extra = sorted(set(doc) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {where}{', '.join(extra)}")


def _coupling(doc, where=""):
    name = doc.get("coupling", "phonon")
    if name not in COUPLINGS:
        raise ConfigError(f"{where}coupling: expected one of {sorted(COUPLINGS)}, got {name!r}")
    s = COUPLINGS[name][1]
    if "s" in doc:
        s = doc["s"]
        if isinstance(s, bool) or not isinstance(s, int) or s < 1 or s % 2 == 0:
            raise ConfigError(f"{where}s: expected a positive odd integer, got {s!r}")
    return name, s


def _strength(doc, S, where="", required=True):
    lam = _num(doc, "lam", where) if "lam" in doc else None
    if "lam_over_S" in doc:
        from_ratio = _num(doc, "lam_over_S", where) * S
        if lam is not None and not _agree(lam, from_ratio):
            raise ConfigError(f"{where}lam={lam} contradicts lam_over_S (gives {from_ratio})")
        lam = from_ratio
    if lam is None:
        if required:
            raise ConfigError(f"{where}lam or lam_over_S is required")
        return 0.0
    if lam < 0:
        raise ConfigError(f"{where}lam must be >= 0, got {lam}")
    return lam


def parse_mapping(doc: dict) -> RunConfig:
    """Resolve one run document (already decoded) into a :class:`RunConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("run document must be a JSON object")
    _unknown(doc, _KEYS, "")
    if "S" not in doc:
        raise ConfigError("S is required")
    try:
        S = _as_spin(_num(doc, "S"))
    except ValueError as exc:
        raise ConfigError(f"S: {exc}") from None
    T = _num(doc, "T") if "T" in doc else 1.0
    if not T > 0:
        raise ConfigError(f"T must be > 0, got {T}")

    if "D" not in doc and "sigma" not in doc:
        raise ConfigError("one of D or sigma is required")
    D = _num(doc, "D") if "D" in doc else None
    if "sigma" in doc:
        from_sigma = _num(doc, "sigma") * T / S**2
        if D is not None and not _agree(D, from_sigma):
            raise ConfigError(f"D={D} contradicts sigma={doc['sigma']} at T={T}")
        D = from_sigma
    if D < 0:
        raise ConfigError(f"D must be >= 0, got {D}")

    B = (0.0, 0.0, 0.0)
    if "B" in doc:
        b = doc["B"]
        if not isinstance(b, list) or len(b) != 3:
            raise ConfigError("B: expected a list [Bx, By, Bz]")
        B = tuple(_num({"B": x}, "B") for x in b)
    if "xi" in doc:
        direction = doc.get("field_direction", [0.0, 0.0, 1.0])
        if not isinstance(direction, list) or len(direction) != 3:
            raise ConfigError("field_direction: expected a list of three numbers")
        d = np.array([_num({"field_direction": x}, "field_direction") for x in direction])
        if not np.linalg.norm(d) > 0:
            raise ConfigError("field_direction must be nonzero")
        from_xi = tuple(float(x) for x in d / np.linalg.norm(d) * (_num(doc, "xi") * T / S))
        if "B" in doc and not all(_agree(a, b) or abs(a - b) < 1e-15 for a, b in zip(B, from_xi)):
            raise ConfigError(f"B={list(B)} contradicts xi={doc['xi']}")
        B = from_xi
    elif "field_direction" in doc:
        raise ConfigError("field_direction requires xi")

    coupling, s = _coupling(doc)
    match = None
    if doc.get("match") is not None:
        m = doc["match"]
        if not isinstance(m, dict):
            raise ConfigError("match: expected an object")
        _unknown(m, _MATCH_KEYS, "in match: ")
        mc, ms = _coupling(m, "match.")
        match = MatchSpec(mc, ms, _strength(m, S, "match."))
        if match.lam <= 0:
            raise ConfigError("match.lam must be > 0")
    lam = _strength(doc, S, required=match is None)
    if match is not None and lam == 0.0:
        lam = match.lam          # starting guess for the search

    grid = GridSpec.default()
    if "grid" in doc:
        g = doc["grid"]
        if not isinstance(g, dict):
            raise ConfigError("grid: expected an object")
        _unknown(g, _GRID_KEYS, "in grid: ")
        gmin = _num(g, "min", "grid.") if "min" in g else grid.min
        gmax = _num(g, "max", "grid.") if "max" in g else grid.max
        count = g.get("count", grid.count)
        scaled = g.get("scaled", True)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError(f"grid.count: expected a positive integer, got {count!r}")
        if not isinstance(scaled, bool):
            raise ConfigError("grid.scaled: expected true or false")
        grid = GridSpec(gmin, gmax, count, scaled)
    if not 0 < grid.min <= grid.max or (grid.count > 1 and grid.min == grid.max):
        raise ConfigError(f"grid: need 0 < min < max, got min={grid.min}, max={grid.max}")
    if grid.scaled and D == 0:
        raise ConfigError("grid.scaled needs D > 0")

    window = doc.get("distance_window")
    if window is not None:
        if not isinstance(window, list) or len(window) != 2:
            raise ConfigError("distance_window: expected [a, b]")
        window = tuple(_num({"w": x}, "w", "distance_window.") for x in window)
        if not 0 < window[0] < window[1]:
            raise ConfigError("distance_window: need 0 < a < b")

    verify = doc.get("verify", False)
    if not isinstance(verify, bool):
        raise ConfigError("verify: expected true or false")
    method = doc.get("method", "auto")
    if method not in ("auto", "full", "sector"):
        raise ConfigError(f"method: expected auto, full or sector, got {method!r}")
    workers = doc.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers: expected a positive integer")
    fmt = doc.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format: expected csv or json, got {fmt!r}")
    label = doc.get("label", "run")
    if not isinstance(label, str) or not label or any(c in label for c in "/\\"):
        raise ConfigError("label: expected a non-empty name without path separators")
    cap = _num(doc, "oracle_cap") if "oracle_cap" in doc else 8.0

    return RunConfig(S=S, D=D, T=T, B=B, coupling=coupling, s=s, lam=lam, grid=grid,
                     label=label, verify=verify, distance_window=window, match=match,
                     method=method, workers=workers, format=fmt, oracle_cap=cap)


def _decode(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_config(text: str) -> RunConfig:
    """Parse a single-run JSON document."""
    return parse_mapping(_decode(text))


def parse_document(text: str) -> list[RunConfig]:
    """Parse either one run object or ``{"runs": [...]}``."""
    doc = _decode(text)
    if isinstance(doc, dict) and "runs" in doc:
        if set(doc) != {"runs"} or not isinstance(doc["runs"], list) or not doc["runs"]:
            raise ConfigError("a multi-run document holds only a non-empty 'runs' list")
        runs = []
        for k, item in enumerate(doc["runs"]):
            try:
                runs.append(parse_mapping(item))
            except ConfigError as exc:
                raise ConfigError(f"runs[{k}]: {exc}") from None
        return runs
    return [parse_mapping(doc)]


def config_to_dict(cfg: RunConfig) -> dict:
    """Explicit document for ``cfg``; every default is spelled out."""
    d = asdict(cfg)
    d["B"] = list(cfg.B)
    d["distance_window"] = list(cfg.distance_window) if cfg.distance_window else None
    return d


def echo(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=2)
