"""Readers and writers for the CSV/JSON files the pipeline exchanges.

Floats are written with 12 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ParseError
from .signal_model import (
    DEFAULT_SAMPLE_RATE_HZ,
    AnnotationEvent,
    AnnotationSet,
    DetectionResult,
    FeaturePoint,
    Recording,
    Template,
    default_channel_labels,
)

FLOAT_FMT = "{:.12g}"


def fmt(value: float) -> str:
    return FLOAT_FMT.format(float(value))


def json_float(value: float):
    """Round to 12 significant digits for JSON; non-finite becomes a string."""
    value = float(value)
    if not math.isfinite(value):
        return str(value)
    return float(FLOAT_FMT.format(value))


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _split_comments(text: str) -> tuple[dict[str, str], list[str]]:
    """``# key=value`` comment lines become metadata; other lines are data."""
    meta: dict[str, str] = {}
    lines = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            for part in stripped[1:].split(","):
                if "=" in part:
                    key, value = part.split("=", 1)
                    meta[key.strip()] = value.strip()
            continue
        lines.append(line)
    return meta, lines


# --- recordings -----------------------------------------------------------

def write_recording(rec: Recording, path, with_time: bool = False) -> None:
    buf = io.StringIO()
    buf.write(f"# unit=uV, sample_rate_hz={fmt(rec.sample_rate_hz)}\n")
    header = (["t_s"] if with_time else []) + list(rec.channels)
    buf.write(",".join(header) + "\n")
    for n in range(rec.num_samples):
        row = [fmt(n / rec.sample_rate_hz)] if with_time else []
        row += [fmt(v) for v in rec.data[:, n]]
        buf.write(",".join(row) + "\n")
    Path(path).write_text(buf.getvalue())


def parse_recording(text: str, sample_rate_hz: Optional[float] = None) -> Recording:
    """Parse recording CSV text.

    A non-numeric first row is the header; a leading ``t_s`` column is
    dropped (and used to infer the rate when no ``sample_rate_hz`` comment or
    argument is given). Without a header, all columns are channels named
    from the 10-20 list.
    """
    meta, lines = _split_comments(text)
    rows = list(csv.reader(lines))
    if not rows:
        raise ParseError("recording file has no data rows")
    header = None
    if not all(_is_number(cell) for cell in rows[0]):
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
    if not rows:
        raise ParseError("recording file has a header but no samples")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"row {i + 1} has {len(row)} columns, expected {width}")
    try:
        matrix = np.array([[float(c) for c in row] for row in rows])
    except ValueError as exc:
        raise ParseError(f"non-numeric sample: {exc}") from None
    times = None
    if header is not None:
        if len(header) != width:
            raise ParseError(f"header has {len(header)} names for {width} columns")
        if header[0] == "t_s":
            times = matrix[:, 0]
            matrix = matrix[:, 1:]
            header = header[1:]
        labels = header
    else:
        labels = default_channel_labels(width)
    rate = sample_rate_hz
    if rate is None and "sample_rate_hz" in meta:
        rate = float(meta["sample_rate_hz"])
    if rate is None and times is not None and times.size > 1:
        rate = 1.0 / float(np.median(np.diff(times)))
    if rate is None:
        rate = DEFAULT_SAMPLE_RATE_HZ
    return Recording(tuple(labels), matrix.T, rate)


def read_recording(path, sample_rate_hz: Optional[float] = None) -> Recording:
    return parse_recording(Path(path).read_text(), sample_rate_hz)


# --- templates --------------------------------------------------------------

def write_template(tpl: Template, path) -> None:
    lines = [f"# id={tpl.id}, sample_rate_hz={fmt(tpl.sample_rate_hz)}"]
    if tpl.patient_id is not None:
        lines.append(f"# patient_id={tpl.patient_id}")
    lines += [fmt(v) for v in tpl.samples]
    Path(path).write_text("\n".join(lines) + "\n")


def read_template(path, sample_rate_hz: Optional[float] = None) -> Template:
    path = Path(path)
    meta, lines = _split_comments(path.read_text())
    values = []
    for i, line in enumerate(lines):
        cell = line.split(",")[0].strip()
        if i == 0 and not _is_number(cell):
            continue  # column name
        try:
            values.append(float(cell))
        except ValueError:
            raise ParseError(f"{path.name}: non-numeric sample {cell!r}") from None
    rate = sample_rate_hz or float(meta.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ))
    return Template(meta.get("id", path.stem), np.array(values), rate, meta.get("patient_id"))


def read_template_dir(directory) -> list[Template]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ParseError(f"template directory {directory} does not exist")
    return [read_template(p) for p in sorted(directory.glob("*.csv"))]


# --- annotations ------------------------------------------------------------

def annotations_to_dict(ann: AnnotationSet) -> dict:
    return {
        "events": [
            {"channel": ev.channel, "start_s": json_float(ev.start_s),
             "end_s": json_float(ev.end_s), "label": ev.label}
            for ev in ann.events
        ]
    }


def write_annotations(ann: AnnotationSet, path) -> None:
    Path(path).write_text(json.dumps(annotations_to_dict(ann), indent=2) + "\n")


def parse_annotations(doc: dict) -> AnnotationSet:
    if not isinstance(doc, dict) or not isinstance(doc.get("events"), list):
        raise ParseError('annotation JSON must be an object with an "events" list')
    events = []
    for i, ev in enumerate(doc["events"]):
        try:
            events.append(AnnotationEvent(
                start_s=float(ev["start_s"]),
                end_s=float(ev["end_s"]),
                label=str(ev.get("label", "SWD")),
                channel=ev.get("channel"),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"events[{i}]: {exc}") from None
    return AnnotationSet(events)


def read_annotations(path) -> AnnotationSet:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_annotations(doc)


# --- scan reports -------------------------------------------------------------

REPORT_COLUMNS = ["channel", "segment", "L", "start_s", "end_s", "tau", "z", "p",
                  "best_template", "positive", "degenerate"]


def write_scan_report(report, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in report.results:
        writer.writerow([
            report.channels[r.channel_index], r.segment_index, r.length,
            fmt(r.start_s), fmt(r.end_s), fmt(r.tau), fmt(r.z), fmt(r.p),
            r.best_template_id or "", int(r.positive), int(r.degenerate),
        ])
    Path(path).write_text(buf.getvalue())


def read_scan_report(path, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ):
    """Rebuild a ScanReport; channel order is order of first appearance."""
    from .detector import ScanReport

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_COLUMNS:
            raise ParseError(f"{path}: expected columns {REPORT_COLUMNS}")
        channels: list[str] = []
        results = []
        for i, row in enumerate(reader):
            try:
                label = row["channel"]
                if label not in channels:
                    channels.append(label)
                start_s, end_s = float(row["start_s"]), float(row["end_s"])
                results.append(DetectionResult(
                    channel_index=channels.index(label),
                    segment_index=int(row["segment"]),
                    start_s=start_s,
                    end_s=end_s,
                    tau=float(row["tau"]),
                    p=float(row["p"]),
                    best_template_id=row["best_template"] or None,
                    positive=row["positive"] == "1",
                    z=float(row["z"]),
                    length=int(row["L"]),
                    start_sample=int(round(start_s * sample_rate_hz)),
                    end_sample=int(round(end_s * sample_rate_hz)),
                    degenerate=row["degenerate"] == "1",
                    channel=label,
                ))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"{path}: row {i + 2}: {exc}") from None
    return ScanReport(tuple(channels), sample_rate_hz, results)


def detection_to_dict(r: DetectionResult, channels: Sequence[str]) -> dict:
    return {
        "channel_index": r.channel_index,
        "channel": channels[r.channel_index],
        "segment_index": r.segment_index,
        "L": r.length,
        "start_s": json_float(r.start_s),
        "end_s": json_float(r.end_s),
        "tau": json_float(r.tau),
        "z": json_float(r.z),
        "p": json_float(r.p),
        "best_template_id": r.best_template_id,
        "positive": bool(r.positive),
    }


def detections_document(report) -> dict:
    return {
        "segments_scanned": report.segments_scanned,
        "positives": report.positives,
        "detections": [detection_to_dict(r, report.channels) for r in report.results if r.positive],
    }


# --- features -------------------------------------------------------------------

_TRUE_LABELS = {"1", "swd", "true"}
_FALSE_LABELS = {"0", "non-swd", "non_swd", "false"}


def write_features(points: Iterable[FeaturePoint], path) -> None:
    lines = ["tau,p,label"]
    lines += [f"{fmt(pt.tau)},{fmt(pt.p)},{int(bool(pt.label))}" for pt in points]
    Path(path).write_text("\n".join(lines) + "\n")


def read_features(path) -> list[FeaturePoint]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or set(reader.fieldnames) != {"tau", "p", "label"}:
            raise ParseError(f"{path}: expected columns tau,p,label")
        points = []
        for i, row in enumerate(reader):
            label = row["label"].strip().lower()
            if label in _TRUE_LABELS:
                flag = True
            elif label in _FALSE_LABELS:
                flag = False
            else:
                raise ParseError(f"{path}: row {i + 2}: unknown label {row['label']!r}")
            try:
                points.append(FeaturePoint(float(row["tau"]), float(row["p"]), flag))
            except ValueError as exc:
                raise ParseError(f"{path}: row {i + 2}: {exc}") from None
    return points


def write_roc(curve, path) -> None:
    lines = ["threshold,fpr,tpr"]
    lines += [f"{fmt(th)},{fmt(f)},{fmt(t)}" for f, t, th in curve.points]
    Path(path).write_text("\n".join(lines) + "\n")
