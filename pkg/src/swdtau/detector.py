"""Template scanning: score every segment of every channel against SWD templates.

For each distinct template length ``L`` the channels are cut into
``floor(N / L)`` windows, smoothed and scaled, and compared with every
template of that length by Kendall tau. The best template (max tau, ties to
the lexicographically smallest id) decides the segment: positive when
``tau >= tau_threshold`` and ``p <= p_threshold``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classify import ConfusionMatrix
from .errors import ConfigError, InputError, NoCompatibleTemplate
from .kendall import significance, tau_matrix
from .preprocess import (
    FilterConfig,
    ScaleParams,
    condition,
    minmax_scale_rows,
    moving_average,
    segment_windows,
)
from .signal_model import (
    AnnotationSet,
    DetectionResult,
    Recording,
    Segment,
    Template,
    validate_recording,
)

log = logging.getLogger(__name__)

FILTER_SCOPES = ("per_segment", "whole_channel")


@dataclass(frozen=True)
class DetectorConfig:
    tau_threshold: float = 0.5
    p_threshold: float = 0.05
    filter: FilterConfig = FilterConfig()
    scale: ScaleParams = ScaleParams()
    template_aggregation: str = "max_tau"
    patient_filter: Optional[str] = None
    filter_scope: str = "per_segment"
    variant: str = "tau_b"
    two_sided: bool = True

    def __post_init__(self):
        if not -1.0 <= self.tau_threshold <= 1.0:
            raise ConfigError(f"detector.tau_threshold: must lie in [-1, 1], got {self.tau_threshold}")
        if not 0.0 < self.p_threshold <= 1.0:
            raise ConfigError(f"detector.p_threshold: must lie in (0, 1], got {self.p_threshold}")
        if self.template_aggregation != "max_tau":
            raise ConfigError("detector.template_aggregation: only 'max_tau' is supported")
        if self.filter_scope not in FILTER_SCOPES:
            raise ConfigError(f"detector.filter_scope: must be one of {FILTER_SCOPES}")
        if self.variant not in ("tau_a", "tau_b"):
            raise ConfigError("detector.variant: must be 'tau_a' or 'tau_b'")

    def is_positive(self, tau: float, p: float) -> bool:
        return tau >= self.tau_threshold and p <= self.p_threshold


@dataclass
class ScanReport:
    channels: tuple[str, ...]
    sample_rate_hz: float
    results: list[DetectionResult] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def segments_scanned(self) -> int:
        return len(self.results)

    @property
    def positives(self) -> int:
        return sum(r.positive for r in self.results)

    def per_channel(self) -> dict[str, dict[str, int]]:
        counts = {label: {"scanned": 0, "positives": 0} for label in self.channels}
        for r in self.results:
            entry = counts[self.channels[r.channel_index]]
            entry["scanned"] += 1
            entry["positives"] += int(r.positive)
        return counts


def select_templates(templates: Sequence[Template], patient: Optional[str]) -> list[Template]:
    """Templates for `patient` (all when None), ordered by id."""
    chosen = [t for t in templates if patient is None or t.patient_id == patient]
    return sorted(chosen, key=lambda t: t.id)


def _prepare_bank(templates: Sequence[Template], cfg: DetectorConfig):
    """Conditioned template rows and ids, grouped by length."""
    bank: dict[int, tuple[list[str], np.ndarray]] = {}
    for length in sorted({t.length for t in templates}):
        group = [t for t in templates if t.length == length]
        rows, flags = condition(np.stack([t.samples for t in group]), cfg.filter, cfg.scale)
        for tpl, flat in zip(group, flags):
            if flat:
                raise InputError(f"template {tpl.id!r} is flat and carries no SWD morphology")
        bank[length] = ([t.id for t in group], rows)
    return bank


def _score_rows(
    windows: np.ndarray,
    ids: list[str],
    tpl_rows: np.ndarray,
    cfg: DetectorConfig,
    smoothed: bool = False,
):
    """Best-template tau, z, p, template id, positive and degenerate flag per row."""
    if smoothed:
        x, flat = minmax_scale_rows(windows, cfg.scale)
    else:
        x, flat = condition(windows, cfg.filter, cfg.scale)
    length = windows.shape[1]
    taus = tau_matrix(x, tpl_rows, cfg.variant) if len(x) else np.empty((0, len(ids)))
    out = []
    for row, is_flat in zip(taus, flat):
        if is_flat or np.all(np.isnan(row)):
            out.append((0.0, 0.0, 1.0, None, False, True))
            continue
        best = int(np.nanargmax(row))  # first max wins; ids are sorted
        tau = float(row[best])
        z, p = significance(tau, length, cfg.two_sided)
        out.append((tau, z, p, ids[best], cfg.is_positive(tau, p), False))
    return out


def score_segment(
    seg: Segment,
    templates: Sequence[Template],
    cfg: DetectorConfig = DetectorConfig(),
    sample_rate_hz: float = 256.0,
) -> DetectionResult:
    """Score one segment against every template of matching length.

    Raises
    ------
    NoCompatibleTemplate
        If no template (after patient filtering) has the segment's length.
    """
    usable = [t for t in select_templates(templates, cfg.patient_filter) if t.length == seg.length]
    if not usable:
        raise NoCompatibleTemplate(f"no template of length {seg.length}")
    ids, rows = _prepare_bank(usable, cfg)[seg.length]
    tau, z, p, best, positive, flat = _score_rows(seg.samples[None, :], ids, rows, cfg)[0]
    return DetectionResult(
        channel_index=seg.channel_index,
        segment_index=seg.segment_index,
        start_s=seg.start_sample / sample_rate_hz,
        end_s=seg.end_sample / sample_rate_hz,
        tau=tau,
        p=p,
        best_template_id=best,
        positive=positive,
        z=z,
        length=seg.length,
        start_sample=seg.start_sample,
        end_sample=seg.end_sample,
        degenerate=flat,
    )


def scan_recording(
    rec: Recording,
    templates: Sequence[Template],
    cfg: DetectorConfig = DetectorConfig(),
    max_workers: Optional[int] = None,
) -> ScanReport:
    """Segment and score every channel for every distinct template length.

    Template lengths longer than the recording are skipped with a warning.
    Rows are ordered by ``(channel_index, segment_index, L)``.

    Raises
    ------
    NoCompatibleTemplate
        If no template survives patient filtering and sample-rate matching.
    """
    validate_recording(rec)
    chosen = select_templates(templates, cfg.patient_filter)
    usable = [t for t in chosen if t.sample_rate_hz == rec.sample_rate_hz]
    for t in chosen:
        if t.sample_rate_hz != rec.sample_rate_hz:
            log.warning("template %s sampled at %s Hz, recording at %s Hz; skipped",
                        t.id, t.sample_rate_hz, rec.sample_rate_hz)
    if not usable:
        who = f" for patient {cfg.patient_filter!r}" if cfg.patient_filter else ""
        raise NoCompatibleTemplate(f"no usable templates{who}")
    bank = _prepare_bank(usable, cfg)
    report = ScanReport(rec.channels, rec.sample_rate_hz)
    fs = rec.sample_rate_hz
    n = rec.num_samples

    lengths = []
    for length in bank:
        if length > n:
            msg = f"template length {length} exceeds recording length {n}; skipped"
            log.warning(msg)
            report.warnings.append(msg)
        else:
            lengths.append(length)

    if cfg.filter_scope == "whole_channel":
        source = moving_average(rec.data, cfg.filter.k)
    else:
        source = rec.data

    def unit(ch: int, length: int):
        windows = segment_windows(source[ch], length)
        ids, rows = bank[length]
        scored = _score_rows(windows, ids, rows, cfg, smoothed=cfg.filter_scope == "whole_channel")
        results = []
        for i, (tau, z, p, best, positive, flat) in enumerate(scored):
            start, stop = i * length, (i + 1) * length
            results.append(DetectionResult(
                channel_index=ch,
                segment_index=i,
                start_s=start / fs,
                end_s=stop / fs,
                tau=tau,
                p=p,
                best_template_id=best,
                positive=positive,
                z=z,
                length=length,
                start_sample=start,
                end_sample=stop,
                degenerate=flat,
                channel=rec.channels[ch],
            ))
        return results

    work = [(ch, length) for ch in range(rec.num_channels) for length in lengths]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            chunks = list(pool.map(lambda w: unit(*w), work))
    else:
        chunks = [unit(*w) for w in work]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.channel_index, r.segment_index, r.length))
    report.results = rows
    return report


def segment_truth(report: ScanReport, truth: AnnotationSet, overlap_frac: float = 0.5) -> list[bool]:
    """Ground-truth label of every report row.

    A segment is SWD when an annotated SWD event on its channel (or a
    channel-less event) covers at least `overlap_frac` of its duration.
    """
    if not 0.0 < overlap_frac <= 1.0:
        raise ConfigError(f"overlap_frac must lie in (0, 1], got {overlap_frac}")
    truth.check_channels(report.channels)
    swd_events = [ev for ev in truth.events if ev.label.upper() == "SWD"]
    labels = []
    for r in report.results:
        label = report.channels[r.channel_index]
        need = overlap_frac * (r.end_s - r.start_s)
        hit = False
        for ev in swd_events:
            if not ev.applies_to(label):
                continue
            overlap = min(r.end_s, ev.end_s) - max(r.start_s, ev.start_s)
            # relative slack absorbs sample-to-seconds rounding at exact boundaries
            if overlap > 0 and overlap >= need * (1 - 1e-9):
                hit = True
                break
        labels.append(hit)
    return labels


def match_annotations(report: ScanReport, truth: AnnotationSet, overlap_frac: float = 0.5) -> ConfusionMatrix:
    """Confusion matrix of report decisions against annotated SWD events."""
    cm = ConfusionMatrix()
    for r, is_swd in zip(report.results, segment_truth(report, truth, overlap_frac)):
        cm = cm.add(predicted=r.positive, actual=is_swd)
    return cm


def event_hits(report: ScanReport, truth: AnnotationSet) -> list[bool]:
    """For each SWD event, whether any positive segment overlaps it at all."""
    out = []
    for ev in truth.events:
        hit = any(
            r.positive
            and ev.applies_to(report.channels[r.channel_index])
            and min(r.end_s, ev.end_s) > max(r.start_s, ev.start_s)
            for r in report.results
        )
        out.append(hit)
    return out
