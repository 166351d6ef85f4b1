"""JSON scenario configuration.

A config document has the sections ``network``, ``demand``, ``fleet``,
``engine`` and optionally ``sweep``::

    {
      "network": {"grid": {"rows": 5, "cols": 5}},          # or {"file": "net.json"}
      "demand": {"od": {"uniform_boundary": 40.0},          # or {"file": "od.csv"}
                 "profile": {"kind": "real-shaped", "slot_s": 600},
                 "horizon": 14400},
      "fleet": {"av_penetration": 0.5},
      "engine": {"time_step": 0.5},
      "sweep": {"penetrations": [0.0, 0.5, 1.0], "seeds": 10}
    }

:func:`resolve` fills every default so the emitted document fully
describes a run.  Relative paths are resolved against the config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .demand import INFLATED, DemandProfile, FleetMix, load_od, uniform_boundary_od
from .engine import EngineParams, ScenarioConfig
from .errors import ConfigError, LanesimError, ParseError
from .network import generate_grid, load_network

SECTIONS = ("network", "demand", "fleet", "engine", "sweep", "seed")
GRID_DEFAULTS = {"rows": 5, "cols": 5, "block_len": 200.0, "two_lane_share": 0.5,
                 "signalized_share": 0.5, "seed": 0}
DEFAULT_PENETRATIONS = [round(0.1 * i, 1) for i in range(11)]
DEFAULT_SEEDS = {"real-shaped": 20, INFLATED: 25}


def load_config(path) -> dict:
    """Read a config file and resolve it; paths are made absolute."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return resolve(doc, path.parent)


def _abs(p, base: Path) -> str:
    q = Path(p)
    return str(q if q.is_absolute() else (base / q).resolve())


def resolve(doc: dict, base_dir=".") -> dict:
    base = Path(base_dir)
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    out: dict = {}

    net = dict(doc.get("network") or {"grid": {}})
    if "file" in net:
        out["network"] = {"file": _abs(net["file"], base)}
    elif "grid" in net:
        g = dict(GRID_DEFAULTS)
        extra = set(net["grid"]) - set(g)
        if extra:
            raise ConfigError(f"network.grid: unknown keys {sorted(extra)}")
        g.update(net["grid"])
        out["network"] = {"grid": g}
    else:
        raise ConfigError("network section needs 'file' or 'grid'")

    dem = dict(doc.get("demand") or {})
    od = dem.get("od", {"uniform_boundary": 20.0})
    if "file" in od:
        od = {"file": _abs(od["file"], base)}
    elif "uniform_boundary" in od:
        od = {"uniform_boundary": float(od["uniform_boundary"])}
    else:
        raise ConfigError("demand.od needs 'file' or 'uniform_boundary'")
    prof = dem.get("profile", {"kind": "real-shaped"})
    if "file" in prof:
        ppath = Path(_abs(prof["file"], base))
        try:
            prof = json.loads(ppath.read_text())
        except FileNotFoundError:
            raise ConfigError(f"profile file not found: {ppath}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{ppath}: invalid JSON ({exc})") from None
    try:
        profile = DemandProfile.from_dict(prof)
    except ParseError as exc:
        raise ConfigError(str(exc)) from None
    except LanesimError as exc:
        raise ConfigError(f"demand.profile: {exc}") from None
    horizon = float(dem.get("horizon", profile.coverage))
    out["demand"] = {"od": od, "profile": profile.to_dict(), "horizon": horizon}

    fleet = dict(doc.get("fleet") or {})
    try:
        mix = FleetMix(float(fleet.get("av_penetration", 0.0)),
                       tuple(fleet.get("style_shares", FleetMix().style_shares)))
    except (LanesimError, TypeError, ValueError) as exc:
        raise ConfigError(f"fleet: {exc}") from None
    out["fleet"] = {"av_penetration": mix.av_penetration, "style_shares": list(mix.style_shares)}

    out["engine"] = EngineParams.from_dict(doc.get("engine") or {}).to_dict()

    sw = dict(doc.get("sweep") or {})
    pens = [float(x) for x in sw.get("penetrations", DEFAULT_PENETRATIONS)]
    if any(not 0.0 <= x <= 1.0 for x in pens) or not pens:
        raise ConfigError("sweep.penetrations must be a nonempty list in [0, 1]")
    seeds = sw.get("seeds", DEFAULT_SEEDS[profile.kind])
    seeds = list(range(int(sw.get("seed_base", 0)), int(sw.get("seed_base", 0)) + int(seeds))) \
        if isinstance(seeds, (int, float)) else [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("sweep.seeds must be >= 1")
    out["sweep"] = {"penetrations": pens, "seeds": seeds}
    out["seed"] = int(doc.get("seed", 0))
    return out


def build_network(resolved: dict):
    net = resolved["network"]
    if "file" in net:
        return load_network(net["file"])
    return generate_grid(**net["grid"])


def build_scenario(resolved: dict, seed: int | None = None, penetration: float | None = None,
                   network=None) -> ScenarioConfig:
    """Instantiate a :class:`ScenarioConfig`; load failures surface as LanesimError."""
    network = network or build_network(resolved)
    dem = resolved["demand"]
    od = load_od(dem["od"]["file"]) if "file" in dem["od"] else \
        uniform_boundary_od(network, dem["od"]["uniform_boundary"])
    fl = resolved["fleet"]
    p = fl["av_penetration"] if penetration is None else penetration
    return ScenarioConfig(
        network, od, DemandProfile.from_dict(dem["profile"]),
        FleetMix(p, tuple(fl["style_shares"])), dem["horizon"],
        resolved["seed"] if seed is None else seed,
        EngineParams.from_dict(resolved["engine"]),
    )


def run_config(resolved: dict, seed: int, penetration: float | None = None) -> dict:
    """The resolved document of one concrete run (seed and penetration pinned)."""
    out = json.loads(json.dumps(resolved))
    out["seed"] = int(seed)
    if penetration is not None:
        out["fleet"]["av_penetration"] = float(penetration)
    return out


def dumps(resolved: dict) -> str:
    return json.dumps(resolved, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class SweepSpec:
    base: dict
    penetrations: tuple[float, ...]
    seeds: tuple[int, ...]

    @classmethod
    def from_resolved(cls, resolved: dict) -> "SweepSpec":
        sw = resolved["sweep"]
        return cls(resolved, tuple(sw["penetrations"]), tuple(sw["seeds"]))

    def runs(self) -> list[tuple[float, int, str]]:
        """(penetration, seed, directory name) for every run, in a fixed order."""
        return [(p, s, run_dir_name(p, s)) for p in self.penetrations for s in self.seeds]


def run_dir_name(penetration: float, seed: int) -> str:
    return f"p{penetration:.2f}_s{seed:03d}"
