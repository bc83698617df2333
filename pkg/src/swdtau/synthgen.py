"""Deterministic synthetic EEG with injected spike-and-wave bursts.

Randomness comes from SplitMix64, a counter-based 64-bit generator with
published constants, so a seed reproduces the same streams on any platform.
Channel ``m`` draws from the stream seeded with ``seed ^ m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, EventOutOfBounds, InputError, OverlappingEvents
from .signal_model import (
    DEFAULT_SAMPLE_RATE_HZ,
    SWD_LABEL,
    AnnotationEvent,
    AnnotationSet,
    Recording,
    Template,
    default_channel_labels,
)

_MASK64 = (1 << 64) - 1
_PINK_ROWS = 16


class SplitMix64:
    """Vectorised SplitMix64 stream (Steele, Lea & Flood constants)."""

    GAMMA = 0x9E3779B97F4A7C15
    MUL1 = 0xBF58476D1CE4E5B9
    MUL2 = 0x94D049BB133111EB

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self, count: int) -> np.ndarray:
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self.state) + steps * np.uint64(self.GAMMA)
        self.state = (self.state + count * self.GAMMA) & _MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(self.MUL1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(self.MUL2)
        return z ^ (z >> np.uint64(31))

    def uniform(self, count: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, count: int) -> np.ndarray:
        """Standard normals by Box-Muller, two per uniform pair."""
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        angle = 2.0 * math.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count]


@dataclass(frozen=True)
class SwdEvent:
    channel: str
    start_s: float
    cycles: int = 3


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    swd_freq_hz: float = 2.5
    spike_width_ms: float = 40.0
    wave_amplitude_ratio: float = 0.5
    spike_amplitude_uv: float = 100.0
    noise_kind: str = "pink"
    snr_db: float = 20.0
    num_channels: int = 22
    duration_s: float = 60.0
    events: tuple[SwdEvent, ...] = ()
    patient_id: str = "P01"
    num_templates: int = 10
    template_cycles: int = 3
    freq_jitter: float = 0.15

    def __post_init__(self):
        events = tuple(
            ev if isinstance(ev, SwdEvent) else SwdEvent(**ev) for ev in self.events
        )
        object.__setattr__(self, "events", events)
        checks = [
            ("seed", self.seed >= 0, "must be a non-negative integer"),
            ("sample_rate_hz", self.sample_rate_hz > 0, "must be > 0"),
            ("swd_freq_hz", 1.0 <= self.swd_freq_hz <= 3.0, "must lie in [1, 3] Hz"),
            ("spike_width_ms", self.spike_width_ms > 0, "must be > 0"),
            ("wave_amplitude_ratio", self.wave_amplitude_ratio >= 0, "must be >= 0"),
            ("spike_amplitude_uv", self.spike_amplitude_uv > 0, "must be > 0"),
            ("noise_kind", self.noise_kind in ("white", "pink"), "must be 'white' or 'pink'"),
            ("num_channels", self.num_channels >= 1, "must be >= 1"),
            ("duration_s", self.duration_s > 0, "must be > 0"),
            ("num_templates", self.num_templates >= 1, "must be >= 1"),
            ("template_cycles", self.template_cycles >= 1, "must be >= 1"),
            ("freq_jitter", 0 <= self.freq_jitter < 1, "must lie in [0, 1)"),
        ]
        for name, ok, why in checks:
            if not ok:
                raise ConfigError(f"synth.{name}: {why} (got {getattr(self, name)!r})")
        for i, ev in enumerate(events):
            if ev.cycles < 1:
                raise ConfigError(f"synth.events[{i}].cycles: must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"synth: unknown key(s) {unknown}")
        raw = dict(raw)
        if "events" in raw:
            evs = []
            for i, ev in enumerate(raw["events"]):
                extra = sorted(set(ev) - {"channel", "start_s", "cycles"})
                if extra:
                    raise ConfigError(f"synth.events[{i}]: unknown key(s) {extra}")
                evs.append(SwdEvent(**ev))
            raw["events"] = tuple(evs)
        return cls(**raw)

    @property
    def channels(self) -> list[str]:
        return default_channel_labels(self.num_channels)

    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


def template_length(cfg: SynthConfig, cycles: int, freq_hz: float | None = None) -> int:
    freq = cfg.swd_freq_hz if freq_hz is None else freq_hz
    return int(round(cycles * cfg.sample_rate_hz / freq))


def swd_waveform(cfg: SynthConfig, cycles: int, freq_hz: float | None = None) -> np.ndarray:
    """Spike-and-wave train resting at zero, spike amplitude `spike_amplitude_uv`.

    Each cycle is a Gaussian spike (FWHM `spike_width_ms`) followed by a
    negative half-sine wave that fills the rest of the cycle and returns to
    rest at the cycle boundary.
    """
    if cycles < 1:
        raise ConfigError("cycles must be >= 1")
    freq = cfg.swd_freq_hz if freq_hz is None else freq_hz
    n = template_length(cfg, cycles, freq)
    period = 1.0 / freq
    sigma = cfg.spike_width_ms / 1000.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    spike_at = 2.5 * sigma
    wave_from = spike_at + 2.5 * sigma
    if wave_from >= period:
        raise ConfigError("synth.spike_width_ms: spike does not fit inside one cycle")
    t = np.arange(n) / cfg.sample_rate_hz
    amp = cfg.spike_amplitude_uv
    out = np.zeros(n)
    for k in range(cycles):
        out += amp * np.exp(-0.5 * ((t - k * period - spike_at) / sigma) ** 2)
    phase = np.mod(t, period)
    in_wave = (phase >= wave_from) & (t < cycles * period)
    wave = np.sin(math.pi * (phase - wave_from) / (period - wave_from))
    out -= np.where(in_wave, cfg.wave_amplitude_ratio * amp * wave, 0.0)
    return out


def make_template(cfg: SynthConfig, cycles: int, freq_hz: float | None = None) -> Template:
    """Zero-mean SWD template of ``round(cycles * fs / freq)`` samples."""
    freq = cfg.swd_freq_hz if freq_hz is None else freq_hz
    shape = swd_waveform(cfg, cycles, freq)
    return Template(
        id=f"swd_{cycles}c_{freq:.3f}hz",
        samples=shape - shape.mean(),
        sample_rate_hz=cfg.sample_rate_hz,
        patient_id=cfg.patient_id,
    )


def template_set(cfg: SynthConfig) -> list[Template]:
    """The patient's template bank.

    One template per distinct event cycle count at the base frequency
    (these generate the injected bursts), then frequency-jittered variants
    ``base * (1 +/- j * step)`` until `num_templates` distinct templates exist.
    """
    bank: dict[str, Template] = {}
    for cycles in sorted({cfg.template_cycles, *(ev.cycles for ev in cfg.events)}):
        tpl = make_template(cfg, cycles)
        bank.setdefault(tpl.id, tpl)
    half = max(1, cfg.num_templates // 2)
    step = cfg.freq_jitter / half
    i = 1
    while len(bank) < cfg.num_templates and i <= 4 * cfg.num_templates:
        m, sign = (i + 1) // 2, (1 if i % 2 else -1)
        freq = min(3.0, max(1.0, cfg.swd_freq_hz * (1 + sign * m * step)))
        tpl = make_template(cfg, cfg.template_cycles, freq)
        bank.setdefault(tpl.id, tpl)
        i += 1
    return sorted(bank.values(), key=lambda t: t.id)


def background_noise(cfg: SynthConfig, channel_index: int, n_samples: int) -> np.ndarray:
    """Zero-mean, unit-variance background for one channel."""
    rng = SplitMix64(cfg.seed ^ channel_index)
    if cfg.noise_kind == "white":
        noise = rng.normal(n_samples)
    else:
        # Voss-McCartney: row r holds a value refreshed every 2**r samples.
        idx = np.arange(n_samples)
        noise = rng.normal(n_samples)
        for r in range(1, _PINK_ROWS):
            held = rng.normal(((n_samples - 1) >> r) + 1)
            noise += held[idx >> r]
    noise = noise - noise.mean()
    std = noise.std()
    return noise / std if std > 0 else noise


def noise_std_uv(cfg: SynthConfig) -> float:
    burst = swd_waveform(cfg, cfg.template_cycles)
    rms = float(np.sqrt(np.mean(burst**2)))
    return rms / 10.0 ** (cfg.snr_db / 20.0)


def aligned_starts(cfg: SynthConfig, slots, cycles: int | None = None) -> list[float]:
    """Start times that put bursts exactly on the segmentation grid of their template."""
    length = template_length(cfg, cfg.template_cycles if cycles is None else cycles)
    return [slot * length / cfg.sample_rate_hz for slot in slots]


def make_recording(cfg: SynthConfig) -> tuple[Recording, AnnotationSet]:
    """Background noise on every channel plus the configured SWD bursts.

    Raises
    ------
    EventOutOfBounds
        If a burst does not fit inside the recording.
    OverlappingEvents
        If two bursts on one channel overlap.
    """
    labels = cfg.channels
    n = cfg.num_samples
    if n < 1:
        raise ConfigError("synth.duration_s: recording would have no samples")
    fs = cfg.sample_rate_hz
    placed: list[tuple[int, int, int, SwdEvent]] = []
    for ev in cfg.events:
        if ev.channel not in labels:
            raise InputError(f"event channel {ev.channel!r} is not one of the {len(labels)} channels")
        start = int(round(ev.start_s * fs))
        stop = start + template_length(cfg, ev.cycles)
        if start < 0 or stop > n:
            raise EventOutOfBounds(
                f"event on {ev.channel} at {ev.start_s}s spans samples [{start}, {stop}) outside [0, {n})"
            )
        placed.append((labels.index(ev.channel), start, stop, ev))
    by_channel: dict[int, list[tuple[int, int]]] = {}
    for ch, start, stop, _ in placed:
        by_channel.setdefault(ch, []).append((start, stop))
    for ch, spans in by_channel.items():
        spans.sort()
        for (_, prev_stop), (nxt_start, _) in zip(spans, spans[1:]):
            if nxt_start < prev_stop:
                raise OverlappingEvents(f"overlapping events on channel {labels[ch]}")

    sigma = noise_std_uv(cfg)
    data = np.empty((len(labels), n))
    for ch in range(len(labels)):
        data[ch] = sigma * background_noise(cfg, ch, n)
    events = []
    for ch, start, stop, ev in sorted(placed, key=lambda item: (item[1], item[0])):
        data[ch, start:stop] += swd_waveform(cfg, ev.cycles)
        events.append(AnnotationEvent(start / fs, stop / fs, SWD_LABEL, ev.channel))
    return Recording(labels, data, fs), AnnotationSet(events)
