"""Run configuration for the command-line interface.

A config file is a JSON object with optional sections; every key has a
default, so an empty file (or no file) is valid:

    {
      "lsh":     {"k": 4, "w": 0.5, "seed": 42},
      "weights": {"alpha": 0.5, "beta": 0.5},
      "window":  {"w": 3},
      "forest":  {"n_trees": 100, "max_depth": 16, "min_leaf": 5, "seed": 42},
      "stop_set": ["transform", "trainer"],
      "gen":     {"preset": "default", "n_pipelines": 150, "seed": 42, ...}
    }

The CLI --seed flag fills every seed that the file does not set explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .features import WindowConfig
from .forest import ForestConfig
from .segmentation import StopSet
from .similarity import LshParams, SimWeights
from .synth import GenConfig, preset
from .trace import OperatorKind

__all__ = ["RunConfig", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    lsh: LshParams
    weights: SimWeights
    window: WindowConfig
    forest: ForestConfig
    stop: StopSet
    gen: GenConfig
    split_seed: int


def _section(payload: dict[str, Any], name: str) -> dict[str, Any]:
    value = payload.get(name, {})
    if not isinstance(value, dict):
        raise ValueError(f"config section {name!r} must be an object")
    return dict(value)


def load_config(path: str | Path | None, seed: int = 42) -> RunConfig:
    payload: dict[str, Any] = {}
    if path is not None:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(payload, dict):
            raise ValueError("config file must hold a JSON object")

    lsh_kw = _section(payload, "lsh")
    lsh_kw.setdefault("seed", seed)
    weights_kw = _section(payload, "weights")
    window_kw = _section(payload, "window")
    forest_kw = _section(payload, "forest")
    forest_kw.setdefault("seed", seed)

    stop_kinds = payload.get("stop_set")
    if stop_kinds is None:
        stop = StopSet()
    else:
        stop = StopSet(kinds=frozenset(OperatorKind(k) for k in stop_kinds))

    gen_kw = _section(payload, "gen")
    gen_preset = gen_kw.pop("preset", "default")
    gen_seed = gen_kw.pop("seed", seed)
    gen = preset(gen_preset, seed=gen_seed)
    if gen_kw:
        if "graphlets_per_pipeline" in gen_kw:
            gen_kw["graphlets_per_pipeline"] = tuple(gen_kw["graphlets_per_pipeline"])
        gen = replace(gen, **gen_kw)

    return RunConfig(
        lsh=LshParams(**lsh_kw),
        weights=SimWeights(**weights_kw),
        window=WindowConfig(**window_kw),
        forest=ForestConfig(**forest_kw),
        stop=stop,
        gen=gen,
        split_seed=int(payload.get("split_seed", seed)),
    )
