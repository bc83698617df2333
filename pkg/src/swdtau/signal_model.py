"""Core data types shared by the detection pipeline.

All containers are frozen dataclasses; array payloads are stored as
read-only float64 numpy arrays so instances can be shared between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyRecording,
    InputError,
    NonPositiveRate,
    RaggedRows,
    TooShort,
)

# 22-electrode 10-20 montage, used when a file carries no header.
DEFAULT_CHANNELS: tuple[str, ...] = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz", "C4",
    "T4", "T5", "P3", "Pz", "P4", "T6", "O1", "O2", "Oz", "FT10", "FT9",
)

DEFAULT_SAMPLE_RATE_HZ = 256.0
SWD_LABEL = "SWD"
NON_SWD_LABEL = "non-SWD"


def default_channel_labels(count: int) -> list[str]:
    """First `count` labels of the 10-20 list, then ``ch<i>`` beyond 22."""
    labels = list(DEFAULT_CHANNELS[:count])
    labels += [f"ch{i}" for i in range(len(labels), count)]
    return labels


def _frozen_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def _check_rows(data) -> None:
    if isinstance(data, np.ndarray):
        if data.ndim != 2:
            raise RaggedRows(f"recording data must be 2-D, got ndim={data.ndim}")
        return
    lengths = {len(row) for row in data}
    if len(lengths) > 1:
        raise RaggedRows(f"rows differ in length: {sorted(lengths)}")


@dataclass(frozen=True)
class Recording:
    """Multichannel EEG: row ``m`` of `data` holds channel ``channels[m]``.

    Amplitudes are in microvolts.
    """

    channels: tuple[str, ...]
    data: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        _check_rows(self.data)
        object.__setattr__(self, "channels", tuple(self.channels))
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(len(self.channels), 0)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        validate_recording(self)

    @property
    def num_channels(self) -> int:
        return self.data.shape[0]

    @property
    def num_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate_hz

    def scaled(self, factor: float) -> "Recording":
        return Recording(self.channels, self.data * factor, self.sample_rate_hz)


def validate_recording(rec: Recording) -> None:
    """Raise if `rec` violates a Recording invariant; return None otherwise."""
    data = rec.data
    _check_rows(data)
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
        raise EmptyRecording("recording has no channels or no samples")
    if data.shape[0] != len(rec.channels):
        raise InputError(
            f"{len(rec.channels)} channel labels for {data.shape[0]} data rows"
        )
    if len(set(rec.channels)) != len(rec.channels):
        raise InputError("channel labels must be unique")
    if not rec.sample_rate_hz > 0:
        raise NonPositiveRate(f"sample_rate_hz must be > 0, got {rec.sample_rate_hz}")


@dataclass(frozen=True)
class Template:
    """Single-channel SWD reference waveform."""

    id: str
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    patient_id: Optional[str] = None

    def __post_init__(self):
        samples = _frozen_vector(self.samples)
        if samples.ndim != 1 or samples.size < 3:
            raise TooShort(f"template {self.id!r} needs at least 3 samples")
        if not self.sample_rate_hz > 0:
            raise NonPositiveRate(f"template {self.id!r}: sample_rate_hz must be > 0")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def length(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Segment:
    """One channel's window ``[start_sample, end_sample)``."""

    channel_index: int
    segment_index: int
    samples: np.ndarray
    start_sample: int
    end_sample: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_vector(self.samples))
        if self.end_sample - self.start_sample != self.samples.size:
            raise InputError("segment span does not match its sample count")

    @property
    def length(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class AnnotationEvent:
    start_s: float
    end_s: float
    label: str = SWD_LABEL
    channel: Optional[str] = None

    def __post_init__(self):
        if self.start_s < 0 or not self.start_s < self.end_s:
            raise InputError(
                f"annotation needs 0 <= start_s < end_s, got [{self.start_s}, {self.end_s})"
            )

    def applies_to(self, channel_label: str) -> bool:
        # channel-less events cover the whole scalp
        return self.channel is None or self.channel == channel_label


@dataclass(frozen=True)
class AnnotationSet:
    events: tuple[AnnotationEvent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self):
        return len(self.events)

    def check_channels(self, channels: Sequence[str]) -> None:
        known = set(channels)
        for ev in self.events:
            if ev.channel is not None and ev.channel not in known:
                raise InputError(f"annotation references unknown channel {ev.channel!r}")


@dataclass(frozen=True)
class FeaturePoint:
    """Classifier input ``[tau, p]`` with a binary label (True = SWD)."""

    tau: float
    p: float
    label: Optional[bool] = None

    def __post_init__(self):
        if not -1.0 <= self.tau <= 1.0:
            raise InputError(f"tau must lie in [-1, 1], got {self.tau}")
        if not 0.0 <= self.p <= 1.0:
            raise InputError(f"p must lie in [0, 1], got {self.p}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.tau, self.p])


@dataclass(frozen=True)
class DetectionResult:
    channel_index: int
    segment_index: int
    start_s: float
    end_s: float
    tau: float
    p: float
    best_template_id: Optional[str]
    positive: bool
    z: float = 0.0
    length: int = 0
    start_sample: int = 0
    end_sample: int = 0
    degenerate: bool = False
    channel: str = field(default="")
