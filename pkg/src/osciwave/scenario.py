"""Scenario files: TOML documents describing one experiment.

Grammar (all numbers decimal; every table except ``[coefficient]`` optional)::

    name = "ex11-headline"

    [coefficient]
    mu0 = 0.5
    principal = "canonical"   # mu0 / (1 + t); "constant" gives b = mu0 + sigma
    m = 2                     # smoothness order
    sigma = { kind = "sine", p = 0.5, q = 4.0 }
    # or { kind = "zero" }, or { kind = "bumptrain", p, q, r, h }

    [rates]           # omit (or auto = true) for the example formulas
    alpha = -1.0
    beta = 0.0
    scale = 1.0

    [weight]
    kind = "gevrey"   # "unit" | "log" | "gevrey"
    nu = 2.0

    [data]
    family = "gevrey" # "sobolev" (s) | "gevrey" (nu, kappa) | "bandlimited" (r_max)
    nu = 2.0
    kappa = 1.0
    n = 1

    [run]
    stages = ["verify", "zones", "simulate", "volterra", "diag", "decay"]
    N = 10.0
    t_end = 1000.0
    samples = 512
    nodes = 256
    rtol = 1e-10
    max_phase = 20000.0       # averaged frame beyond this oscillation phase; 0 disables
    xi = [0.1, 1.0, 10.0]     # modes for "simulate"
    volterra_xi = [0.01, 0.1, 1.0]
    diag_grid = 8             # points per axis for "diag"
    window = [100.0, 10000.0] # decay-fit window
    kappa_cap = 1.0           # bound-ratio cap for the kappa0 scan
    bound_start = 1.0         # boundedness sup taken over t >= bound_start

    [outputs]
    directory = "out/ex11-headline"   # overridden by --out
    formats = ["csv", "json"]
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .coeffs import (
    BumpProfile,
    BumpTrain,
    ConstantDamping,
    DissipationCoefficient,
    PrincipalPart,
    Sine,
    Zero,
)
from .errors import ConfigError, ContractViolation
from .rates import RateFunctions
from .spectral import Bandlimited, GevreyExp, InitialData, Sobolev
from .zones import Gevrey, Log, Unit, WeightFunction

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STAGES = ("verify", "zones", "simulate", "volterra", "diag", "decay")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunSettings:
    stages: tuple[str, ...] = STAGES
    N: float = 10.0
    t_end: float = 100.0
    samples: int = 512
    nodes: int = 256
    rtol: float = 1e-10
    max_phase: float | None = 2e4
    xi: tuple[float, ...] = (0.1, 1.0, 10.0)
    volterra_xi: tuple[float, ...] = (0.01, 0.1, 1.0)
    diag_grid: int = 8
    window: tuple[float, float] = (1e2, 1e4)
    kappa_cap: float = 1.0
    bound_start: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    coefficient: DissipationCoefficient
    rates: RateFunctions
    weight: WeightFunction
    data: InitialData
    run: RunSettings
    formats: tuple[str, ...] = FORMATS
    directory: str | None = None
    raw: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)


def bundled_names() -> list[str]:
    root = resources.files("osciwave") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def _read(source: str | Path) -> tuple[dict[str, Any], str]:
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
        default_name = path.stem
    elif str(source) in bundled_names():
        text = (resources.files("osciwave") / "scenarios" / f"{source}.toml").read_text(encoding="utf-8")
        default_name = str(source)
    else:
        raise ConfigError(f"no scenario file or bundled scenario named {source!r}")
    try:
        return tomllib.loads(text), default_name
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc


def _table(doc: dict, key: str, required: bool = False) -> dict:
    val = doc.get(key, {} if not required else None)
    if not isinstance(val, dict):
        raise ConfigError(f"[{key}] must be a table")
    return val


def _number(tbl: dict, key: str, default: float | None = None) -> float:
    if key not in tbl:
        if default is None:
            raise ConfigError(f"missing numeric field {key!r}")
        return default
    val = tbl[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field {key!r} must be a number, got {val!r}")
    return float(val)


def _coefficient(tbl: dict) -> DissipationCoefficient:
    m = int(_number(tbl, "m", 1))
    mu0 = _number(tbl, "mu0")
    kind = tbl.get("principal", "canonical")
    if kind == "canonical":
        principal = PrincipalPart(mu0)
    elif kind == "constant":
        principal = ConstantDamping(mu0)
    else:
        raise ConfigError(f"unknown principal kind {kind!r}")
    sig = tbl.get("sigma", {"kind": "zero"})
    if not isinstance(sig, dict):
        raise ConfigError("sigma must be a table")
    kind = sig.get("kind", "zero")
    if kind == "zero":
        osc = Zero()
    elif kind == "sine":
        osc = Sine(_number(sig, "p"), _number(sig, "q"))
    elif kind == "bumptrain":
        osc = BumpTrain(
            _number(sig, "p"), _number(sig, "q"), _number(sig, "r"), _number(sig, "h"),
            BumpProfile(int(_number(sig, "profile_m", max(m, 1)))),
        )
    else:
        raise ConfigError(f"unknown sigma kind {kind!r}")
    return DissipationCoefficient(principal, osc, m)


def auto_rates(c: DissipationCoefficient, scale: float = 1.0) -> RateFunctions:
    """Rates of the worked examples; ``sigma = 0`` uses ``Theta = 1 + t`` and ``Xi = (1 + t)^{-1}``."""
    op = c.oscillating
    m = max(c.m, 1)
    if isinstance(op, Sine):
        return RateFunctions.for_sine(op.p, op.q, m, scale)
    if isinstance(op, BumpTrain):
        return RateFunctions.for_bump_train(op.p, op.q, op.r, op.h, m, scale)
    return RateFunctions(-1.0, 1.0, scale)


def _rates(tbl: dict, c: DissipationCoefficient) -> RateFunctions:
    scale = _number(tbl, "scale", 1.0)
    if tbl.get("auto", "alpha" not in tbl):
        return auto_rates(c, scale)
    return RateFunctions(_number(tbl, "alpha"), _number(tbl, "beta"), scale)


def _weight(tbl: dict) -> WeightFunction:
    kind = tbl.get("kind", "unit")
    if kind == "unit":
        return Unit()
    if kind == "log":
        return Log()
    if kind == "gevrey":
        return Gevrey(_number(tbl, "nu"))
    raise ConfigError(f"unknown weight kind {kind!r}")


def _data(tbl: dict) -> InitialData:
    family = tbl.get("family", "sobolev")
    n = int(_number(tbl, "n", 1))
    amp = _number(tbl, "amplitude", 1.0)
    if family == "sobolev":
        fam = Sobolev(_number(tbl, "s", 2.0))
    elif family == "gevrey":
        fam = GevreyExp(_number(tbl, "nu"), _number(tbl, "kappa"))
    elif family == "bandlimited":
        fam = Bandlimited(_number(tbl, "r_max"))
    else:
        raise ConfigError(f"unknown data family {family!r}")
    return InitialData(fam, n, amp)


def _floats(tbl: dict, key: str, default: tuple) -> tuple:
    val = tbl.get(key, list(default))
    if not isinstance(val, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        raise ConfigError(f"{key!r} must be a list of numbers")
    return tuple(float(v) for v in val)


def _run(tbl: dict) -> RunSettings:
    stages = tbl.get("stages", list(STAGES))
    if not isinstance(stages, list) or any(s not in STAGES for s in stages):
        raise ConfigError(f"stages must be a subset of {STAGES}, got {stages!r}")
    window = _floats(tbl, "window", (1e2, 1e4))
    if len(window) != 2 or not 0 <= window[0] < window[1]:
        raise ConfigError("window must be [start, end] with start < end")
    mp = tbl.get("max_phase", RunSettings.max_phase)
    return RunSettings(
        stages=tuple(s for s in STAGES if s in stages),
        N=_number(tbl, "N", 10.0),
        t_end=_number(tbl, "t_end", 100.0),
        samples=int(_number(tbl, "samples", 512)),
        nodes=int(_number(tbl, "nodes", 256)),
        rtol=_number(tbl, "rtol", 1e-10),
        max_phase=None if mp in (None, 0) else _number(tbl, "max_phase", mp),
        xi=_floats(tbl, "xi", (0.1, 1.0, 10.0)),
        volterra_xi=_floats(tbl, "volterra_xi", (0.01, 0.1, 1.0)),
        diag_grid=int(_number(tbl, "diag_grid", 8)),
        window=window,
        kappa_cap=_number(tbl, "kappa_cap", 1.0),
        bound_start=_number(tbl, "bound_start", 0.0),
    )


def check_stages(c: DissipationCoefficient, stages: tuple[str, ...]) -> None:
    """Every stage except ``simulate`` works in the zone picture, which needs ``mu0 / (1 + t)``."""
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ConfigError(f"unknown stages {sorted(unknown)}")
    needs_zones = set(stages) - {"simulate"}
    if isinstance(c.principal, ConstantDamping) and needs_zones:
        raise ConfigError(f"stages {sorted(needs_zones)} need the canonical principal part")


def load_scenario(source: str | Path) -> Scenario:
    """Parse and validate a scenario; every problem surfaces as :class:`ConfigError`."""
    doc, default_name = _read(source)
    try:
        c = _coefficient(_table(doc, "coefficient", required=True))
        rates = _rates(_table(doc, "rates"), c)
        weight = _weight(_table(doc, "weight"))
        data = _data(_table(doc, "data"))
        run = _run(_table(doc, "run"))
        outputs = _table(doc, "outputs")
        formats = outputs.get("formats", list(FORMATS))
        directory = outputs.get("directory")
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise ConfigError(f"formats must be a subset of {FORMATS}")
    check_stages(c, run.stages)
    if run.N < 1 or run.t_end <= 0 or run.samples < 2 or run.nodes < 2:
        raise ConfigError("run settings out of range")
    if directory is not None and not isinstance(directory, str):
        raise ConfigError("outputs.directory must be a string")
    return Scenario(str(doc.get("name", default_name)), c, rates, weight, data, run, tuple(formats), directory, doc)
