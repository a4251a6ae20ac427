"""Scenario bundles and their on-disk YAML form.

A scenario is everything needed to reproduce one experiment: antenna
positions, the true target motion, radar constants, the intra-interval
pulse schedule and the seed of the frozen path gains.  Two presets,
``example1`` (second-order planar motion) and ``example2`` (first-order
planar motion), are compiled in so nothing has to be shipped alongside
the package.

File schema (units are part of the key names)::

    name: my-scene
    transmitters_m:
      - [0.0, -5000.0]
      - [0.0, 5000.0]
    receivers_m:
      - [0.0, -5000.0]
      - [0.0, 0.0]
      - [0.0, 5000.0]
    motion:
      planar: true
      x_coefficients: [9800.0, 100.0, -20.0]   # m, m/s, m/s^2, ...
      y_coefficients: [0.0, 0.0, 0.0]
      # z_coefficients: only for non-planar scenes
    radar:
      carrier_frequency_hz: 3.0e8
      propagation_speed_m_per_s: 3.0e8
      snapshot_interval_s: 0.01
      snapshot_count: 50
      energy_ratio: 1.0                         # optional, default 1.0
    pulses:
      repetition_time_s: 1.25e-3
      per_interval: 8
    reflection_seed: 0                          # optional, default 0

Schema violations are reported with the full key path of the offending
entry, e.g. ``missing key: radar.snapshot_count``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from ..scene import AntennaGeometry, MotionCoefficients, RadarParams

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "preset_names",
]


class ScenarioError(ValueError):
    """A config file failed schema validation or scenario invariants."""


@dataclass(frozen=True)
class Scenario:
    """One fully specified experiment.

    ``pulse_repetition_time`` and ``pulses_per_interval`` describe how each
    virtual snapshot was integrated; they only matter for the Doppler
    spread check, estimation itself sees one snapshot per interval.
    """

    name: str
    geometry: AntennaGeometry
    motion: MotionCoefficients
    radar: RadarParams
    pulse_repetition_time: float
    pulses_per_interval: int
    reflection_seed: int = 0

    def __post_init__(self):
        if not self.pulse_repetition_time > 0:
            raise ScenarioError("pulses.repetition_time_s must be > 0")
        p = self.pulses_per_interval
        if int(p) != p or p < 1:
            raise ScenarioError("pulses.per_interval must be a positive integer")
        object.__setattr__(self, "pulses_per_interval", int(p))
        # pulses of one interval must fit inside that interval
        span = (self.pulses_per_interval - 1) * self.pulse_repetition_time
        if span > self.radar.snapshot_interval:
            raise ScenarioError(
                f"pulse train spans {span} s but the snapshot interval is "
                f"{self.radar.snapshot_interval} s")
        if int(self.reflection_seed) != self.reflection_seed or self.reflection_seed < 0:
            raise ScenarioError("reflection_seed must be a non-negative integer")
        object.__setattr__(self, "reflection_seed", int(self.reflection_seed))


# ---------------------------------------------------------------------------
# schema walking
# ---------------------------------------------------------------------------

def _joined(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require(mapping, key, path: str):
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{path or 'top level'}: expected a mapping")
    if key not in mapping:
        raise ScenarioError(f"missing key: {_joined(path, key)}")
    return mapping[key]


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_float_list(value, where: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{where}: expected a non-empty list of numbers")
    return [_as_float(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _as_point_list(value, where: str) -> list[list[float]]:
    if not isinstance(value, list) or not value:
        raise ScenarioError(f"{where}: expected a non-empty list of points")
    points = []
    for i, row in enumerate(value):
        coords = _as_float_list(row, f"{where}[{i}]")
        if len(coords) not in (2, 3):
            raise ScenarioError(f"{where}[{i}]: points need 2 or 3 coordinates")
        points.append(coords)
    return points


def _reject_unknown(mapping: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ScenarioError(
            f"unknown key: {_joined(path, unknown[0])}"
            + (f" (and {len(unknown) - 1} more)" if len(unknown) > 1 else ""))


def scenario_from_dict(raw: dict, name: str = "scenario") -> Scenario:
    """Validate a parsed config mapping and build the Scenario.

    Raises
    ------
    ScenarioError
        Naming the key path of the first violation found.
    """
    if not isinstance(raw, dict):
        raise ScenarioError("top level: expected a mapping")
    _reject_unknown(raw, {"name", "transmitters_m", "receivers_m", "motion",
                          "radar", "pulses", "reflection_seed"}, "")

    tx = _as_point_list(_require(raw, "transmitters_m", ""), "transmitters_m")
    rx = _as_point_list(_require(raw, "receivers_m", ""), "receivers_m")

    mot = _require(raw, "motion", "")
    _reject_unknown(mot if isinstance(mot, dict) else {},
                    {"planar", "x_coefficients", "y_coefficients",
                     "z_coefficients"}, "motion")
    cx = _as_float_list(_require(mot, "x_coefficients", "motion"),
                        "motion.x_coefficients")
    cy = _as_float_list(_require(mot, "y_coefficients", "motion"),
                        "motion.y_coefficients")
    cz = mot.get("z_coefficients")
    if cz is not None:
        cz = _as_float_list(cz, "motion.z_coefficients")
    planar = mot.get("planar", cz is None)
    if not isinstance(planar, bool):
        raise ScenarioError("motion.planar: expected a boolean")

    rad = _require(raw, "radar", "")
    _reject_unknown(rad if isinstance(rad, dict) else {},
                    {"carrier_frequency_hz", "propagation_speed_m_per_s",
                     "snapshot_interval_s", "snapshot_count", "energy_ratio"},
                    "radar")
    f_c = _as_float(_require(rad, "carrier_frequency_hz", "radar"),
                    "radar.carrier_frequency_hz")
    speed = _as_float(_require(rad, "propagation_speed_m_per_s", "radar"),
                      "radar.propagation_speed_m_per_s")
    interval = _as_float(_require(rad, "snapshot_interval_s", "radar"),
                         "radar.snapshot_interval_s")
    count = _as_int(_require(rad, "snapshot_count", "radar"),
                    "radar.snapshot_count")
    er = _as_float(rad.get("energy_ratio", 1.0), "radar.energy_ratio")

    pul = _require(raw, "pulses", "")
    _reject_unknown(pul if isinstance(pul, dict) else {},
                    {"repetition_time_s", "per_interval"}, "pulses")
    prt = _as_float(_require(pul, "repetition_time_s", "pulses"),
                    "pulses.repetition_time_s")
    per = _as_int(_require(pul, "per_interval", "pulses"), "pulses.per_interval")

    seed = _as_int(raw.get("reflection_seed", 0), "reflection_seed")
    got_name = raw.get("name", name)
    if not isinstance(got_name, str) or not got_name:
        raise ScenarioError("name: expected a non-empty string")

    try:
        return Scenario(
            name=got_name,
            geometry=AntennaGeometry(transmitters=tx, receivers=rx),
            motion=MotionCoefficients(cx=cx, cy=cy, cz=cz, planar=planar),
            radar=RadarParams(carrier_frequency=f_c, propagation_speed=speed,
                              snapshot_interval=interval, snapshot_count=count,
                              energy_ratio=er),
            pulse_repetition_time=prt,
            pulses_per_interval=per,
            reflection_seed=seed,
        )
    except ScenarioError:
        raise
    except ValueError as exc:  # invariant failures from the domain types
        raise ScenarioError(str(exc)) from exc


def scenario_to_dict(scenario: Scenario) -> dict:
    """Plain mapping mirror of the file schema; floats keep full precision."""
    motion: dict = {
        "planar": scenario.motion.planar,
        "x_coefficients": [float(v) for v in scenario.motion.cx],
        "y_coefficients": [float(v) for v in scenario.motion.cy],
    }
    if not scenario.motion.planar:
        motion["z_coefficients"] = [float(v) for v in scenario.motion.cz]
    return {
        "name": scenario.name,
        "transmitters_m": np.asarray(scenario.geometry.transmitters, dtype=float).tolist(),
        "receivers_m": np.asarray(scenario.geometry.receivers, dtype=float).tolist(),
        "motion": motion,
        "radar": {
            "carrier_frequency_hz": float(scenario.radar.carrier_frequency),
            "propagation_speed_m_per_s": float(scenario.radar.propagation_speed),
            "snapshot_interval_s": float(scenario.radar.snapshot_interval),
            "snapshot_count": int(scenario.radar.snapshot_count),
            "energy_ratio": float(scenario.radar.energy_ratio),
        },
        "pulses": {
            "repetition_time_s": float(scenario.pulse_repetition_time),
            "per_interval": int(scenario.pulses_per_interval),
        },
        "reflection_seed": int(scenario.reflection_seed),
    }


def save_scenario(scenario: Scenario, path) -> None:
    """Write the YAML form; ``load_scenario`` restores it losslessly."""
    with open(Path(path), "w") as fh:
        yaml.safe_dump(scenario_to_dict(scenario), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# built-in presets
# ---------------------------------------------------------------------------

def _example1() -> Scenario:
    # Accelerating target, second-order planar motion, 3x5 antennas.
    return Scenario(
        name="example1",
        geometry=AntennaGeometry(
            transmitters=[(0.0, -5000.0), (0.0, 5000.0), (5000.0, 5000.0)],
            receivers=[(0.0, -5000.0), (0.0, 0.0), (0.0, 5000.0),
                       (2500.0, 5000.0), (5000.0, 5000.0)],
        ),
        motion=MotionCoefficients(cx=[9800.0, 100.0, -20.0],
                                  cy=[0.0, 0.0, 0.0]),
        radar=RadarParams(carrier_frequency=3.0e8, propagation_speed=3.0e8,
                          snapshot_interval=0.01, snapshot_count=50,
                          energy_ratio=1.0),
        pulse_repetition_time=1.25e-3,
        pulses_per_interval=8,
        reflection_seed=0,
    )


def _example2() -> Scenario:
    # Constant-velocity target, first-order planar motion, longer intervals.
    return Scenario(
        name="example2",
        geometry=AntennaGeometry(
            transmitters=[(0.0, 0.0), (4000.0, 0.0), (0.0, 4000.0)],
            receivers=[(0.0, 0.0), (2000.0, 0.0), (0.0, 2000.0),
                       (6000.0, 0.0), (0.0, 6000.0)],
        ),
        motion=MotionCoefficients(cx=[8400.0, 40.0], cy=[9800.0, -50.0]),
        radar=RadarParams(carrier_frequency=3.0e8, propagation_speed=3.0e8,
                          snapshot_interval=0.04, snapshot_count=50,
                          energy_ratio=1.0),
        pulse_repetition_time=1.25e-3,
        pulses_per_interval=32,
        reflection_seed=0,
    )


_PRESETS = {"example1": _example1, "example2": _example2}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def load_scenario(source) -> Scenario:
    """Scenario from a preset name or a YAML config file path.

    Parameters
    ----------
    source : str or Path
        Either one of :func:`preset_names` or a path to a config file.

    Raises
    ------
    ScenarioError
        Unknown preset / missing file, or any schema violation (reported
        with the key path).
    """
    if isinstance(source, str) and source in _PRESETS:
        return _PRESETS[source]()
    path = Path(source)
    if not path.is_file():
        raise ScenarioError(
            f"no such scenario: {source!r} is neither a preset "
            f"({', '.join(preset_names())}) nor an existing file")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{path}: not valid YAML: {exc}") from exc
    return scenario_from_dict(raw, name=path.stem)
