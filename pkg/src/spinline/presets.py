"""Named parameter sets for the reference spectra families.

``fig2`` and ``fig3`` use ``T = 1`` so that ``D = sigma / S^2``; the bare
coupling follows ``lam / S = 1e-2`` unless stated. In ``fig3`` the hybrid
and electron-hole couplings get the ``lam`` that reproduces the phonon
model's ground-state peak height.
"""

from __future__ import annotations

from .config import ConfigError, RunConfig, parse_mapping

FIG2_SPINS = (5, 25, 50, 100)
FIG2_BOTTOM_RATIOS = (1e-2, 3e-2, 1e-1)
CROSSOVER_WINDOW = [0.5, 1.1]
LOW_FREQUENCY_WINDOW = [0.05, 0.4]


def _fig1():
    return [{"label": "fig1", "S": 10, "D": 0.5, "sigma": 5, "T": 10.0,
             "coupling": "phonon", "s": 3, "lam": 3e-8}]


def _fig2_top(spins=FIG2_SPINS):
    return [{"label": f"fig2-top_S{S}", "S": S, "sigma": 1.0, "T": 1.0,
             "coupling": "phonon", "lam_over_S": 1e-2,
             "distance_window": CROSSOVER_WINDOW} for S in spins]


def _fig2_bottom():
    return [{"label": f"fig2-bottom_lamS{r:g}", "S": 50, "sigma": 1.0, "T": 1.0,
             "coupling": "phonon", "lam_over_S": r,
             "distance_window": CROSSOVER_WINDOW} for r in FIG2_BOTTOM_RATIOS]


def _fig3():
    base = {"S": 10, "sigma": 1.0, "T": 1.0, "distance_window": LOW_FREQUENCY_WINDOW}
    ref = {"coupling": "phonon", "s": 3, "lam_over_S": 1e-2}
    return [
        dict(base, label="fig3_phonon", **ref),
        dict(base, label="fig3_hybrid", coupling="hybrid", s=3, match=ref),
        dict(base, label="fig3_electron-hole", coupling="electron-hole", s=1, match=ref),
    ]


PRESETS = {
    "fig1": _fig1,
    "fig2-top": _fig2_top,
    "fig2-bottom": _fig2_bottom,
    "fig3": _fig3,
}


def _value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text in ("true", "false"):
        return text == "true"
    return text


def preset_documents(spec: str) -> list[dict]:
    """Raw documents for ``NAME`` or ``NAME:key=value[,key=value]``.

    Overrides replace top-level keys of every run. ``fig2-top:S=N`` selects a
    single spin instead of the sequence.
    """
    name, _, rest = spec.partition(":")
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    overrides = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigError(f"preset override {item!r} is not key=value")
            overrides[key.strip()] = _value(value.strip())
    if name == "fig2-top" and "S" in overrides:
        docs = _fig2_top((overrides.pop("S"),))
    else:
        docs = PRESETS[name]()
    out = []
    for d in docs:
        d = dict(d, **overrides)
        # a replaced D or lam must not be contradicted by the preset's alternative
        if "D" in overrides:
            d.pop("sigma", None)
        if "sigma" in overrides:
            d.pop("D", None)
        if "lam" in overrides:
            d.pop("lam_over_S", None)
        if "lam_over_S" in overrides:
            d.pop("lam", None)
        out.append(d)
    return out


def preset(spec: str) -> list[RunConfig]:
    return [parse_mapping(d) for d in preset_documents(spec)]
