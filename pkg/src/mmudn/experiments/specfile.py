"""Experiment spec files: ``key = value`` lines with comma-separated lists.

Example::

    campaign = element_budget
    snapshots = 100
    snr_values = 10, 20, 30
    budget_pairs = 2x250, 4x125, 6x83, 10x50
    solver = search
    # any ScenarioConfig field other than the swept ones
    shadowing_sigma_db = 0
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from ..scenario import ScenarioConfig, _coerce, parse_key_values
from .harness import ExperimentError, ExperimentSpec

_SCENARIO_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t, 0) for t in _items(text))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in _items(text))


def _items(text: str) -> list[str]:
    return [t.strip() for t in text.replace(";", ",").split(",") if t.strip()]


def _pairs(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in _items(text):
        parts = item.lower().split("x")
        if len(parts) != 2:
            raise ExperimentError(f"budget pair {item!r} is not of the form MxL")
        out.append((int(parts[0]), int(parts[1])))
    return tuple(out)


def _opt_float(text: str):
    return None if text.lower() in ("", "none") else float(text)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ExperimentError(f"expected a boolean, got {text!r}")


PARSERS = {
    "campaign": str,
    "num_ues": lambda t: int(t, 0),
    "m_values": _ints,
    "l_values": _ints,
    "snr_values": _floats,
    "budget_pairs": _pairs,
    "snapshots": lambda t: int(t, 0),
    "solver": str,
    "out_dir": str,
    "base_seed": lambda t: int(t, 0),
    "time_limit": _opt_float,
    "jobs": lambda t: int(t, 0),
    "plots": _bool,
}


def spec_from_mapping(values: dict[str, str], **overrides) -> ExperimentSpec:
    kwargs, scenario = {}, {}
    for key, raw in values.items():
        try:
            if key in PARSERS:
                kwargs[key] = PARSERS[key](raw)
            elif key in _SCENARIO_TYPES:
                scenario[key] = _coerce(raw, _SCENARIO_TYPES[key])
            else:
                raise ExperimentError(f"unknown experiment key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ExperimentError):
                raise
            raise ExperimentError(f"bad value for {key!r}: {raw!r}") from exc
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if scenario:
        kwargs["scenario"] = scenario
    return ExperimentSpec(**kwargs)


def parse_spec(text: str, **overrides) -> ExperimentSpec:
    return spec_from_mapping(parse_key_values(text), **overrides)


def load_spec(path, **overrides) -> ExperimentSpec:
    return parse_spec(Path(path).read_text(), **overrides)


def dump_spec(spec: ExperimentSpec) -> str:
    lines = [
        f"campaign = {spec.campaign}",
        f"num_ues = {spec.num_ues}",
        "m_values = " + ", ".join(map(str, spec.m_values)),
        "l_values = " + ", ".join(map(str, spec.l_values)),
        "snr_values = " + ", ".join(map(str, spec.snr_list)),
        "budget_pairs = " + ", ".join(f"{m}x{l}" for m, l in spec.budget_pairs),
        f"snapshots = {spec.snapshots}",
        f"solver = {spec.solver}",
        f"base_seed = {spec.base_seed}",
        f"time_limit = {spec.time_limit}",
        f"jobs = {spec.jobs}",
        f"plots = {spec.plots}",
    ]
    if spec.out_dir is not None:
        lines.append(f"out_dir = {spec.out_dir}")
    lines += [f"{k} = {v}" for k, v in spec.scenario.items()]
    return "\n".join(lines) + "\n"
