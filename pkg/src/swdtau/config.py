"""JSON run configuration shared by the CLI subcommands.

Layout::

    {
      "synth":      {... SynthConfig fields ...},
      "detector":   {"tau_threshold": 0.5, "p_threshold": 0.05, "k": 5,
                     "alpha": -1, "beta": 1, "patient_filter": null,
                     "filter_scope": "per_segment", "variant": "tau_b",
                     "two_sided": true, "overlap_frac": 0.5},
      "classifier": {"kind": "all"},
      "paths":      {"recording": ..., "templates_dir": ..., "annotations": ...,
                     "scan_report": ..., "features": ..., "out": ...}
    }

Every section and key is optional; unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .detector import DetectorConfig
from .errors import ConfigError
from .preprocess import FilterConfig, ScaleParams
from .synthgen import SynthConfig

DETECTOR_KEYS = {"tau_threshold", "p_threshold", "k", "alpha", "beta", "patient_filter",
                 "filter_scope", "variant", "two_sided", "overlap_frac"}
PATH_KEYS = {"recording", "templates_dir", "annotations", "scan_report", "features", "out"}
CLASSIFIER_KINDS = ("lda", "qda", "svm", "all")


@dataclass
class RunConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    overlap_frac: float = 0.5
    kind: str = "all"
    paths: dict = field(default_factory=dict)


def _section(raw: dict, name: str, allowed: Optional[set] = None) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: must be an object")
    if allowed is not None:
        unknown = sorted(set(value) - allowed)
        if unknown:
            raise ConfigError(f"{name}: unknown key(s) {unknown}")
    return value


def _detector(raw: dict) -> tuple[DetectorConfig, float]:
    kwargs = {k: raw[k] for k in ("tau_threshold", "p_threshold", "patient_filter",
                                  "filter_scope", "variant", "two_sided") if k in raw}
    overlap = float(raw.get("overlap_frac", 0.5))
    if not 0.0 < overlap <= 1.0:
        raise ConfigError(f"detector.overlap_frac: must lie in (0, 1], got {overlap}")
    try:
        cfg = DetectorConfig(
            filter=FilterConfig(raw.get("k", 5)),
            scale=ScaleParams(float(raw.get("alpha", -1.0)), float(raw.get("beta", 1.0))),
            **kwargs,
        )
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith("detector.") else f"detector.{msg}") from None
    return cfg, overlap


def run_config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - {"synth", "detector", "classifier", "paths"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {unknown}")
    try:
        synth = SynthConfig.from_dict(_section(raw, "synth"))
    except TypeError as exc:
        raise ConfigError(f"synth: {exc}") from None
    detector, overlap = _detector(_section(raw, "detector", DETECTOR_KEYS))
    kind = _section(raw, "classifier", {"kind"}).get("kind", "all")
    if kind not in CLASSIFIER_KINDS:
        raise ConfigError(f"classifier.kind: must be one of {CLASSIFIER_KINDS}, got {kind!r}")
    paths = _section(raw, "paths", PATH_KEYS)
    return RunConfig(synth, detector, overlap, kind, dict(paths))


def load_run_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return run_config_from_dict(raw)
