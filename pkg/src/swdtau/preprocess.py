"""Segmentation, moving-average smoothing and min-max scaling.

These are the three conditioning stages applied to EEG segments and SWD
templates before they are compared by rank correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, LengthMismatch, TooShort, WindowLongerThanSignal
from .signal_model import Segment, Template


@dataclass(frozen=True)
class SegmentationPlan:
    window_len: int
    num_segments: int
    remainder_samples: int

    @classmethod
    def for_length(cls, n_samples: int, window_len: int) -> "SegmentationPlan":
        if window_len < 3:
            raise TooShort(f"window length must be >= 3, got {window_len}")
        if n_samples < window_len:
            raise WindowLongerThanSignal(
                f"window of {window_len} samples exceeds signal of {n_samples}"
            )
        count, rest = divmod(n_samples, window_len)
        return cls(window_len, count, rest)


@dataclass(frozen=True)
class FilterConfig:
    k: int = 5

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"filter.k must be an integer >= 1, got {self.k}")


@dataclass(frozen=True)
class ScaleParams:
    alpha: float = -1.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha < self.beta:
            raise ConfigError(f"scale.alpha must be < scale.beta, got {self.alpha}, {self.beta}")


def segment_windows(samples, window_len: int) -> np.ndarray:
    """Non-overlapping windows as a ``(num_segments, window_len)`` view."""
    samples = np.asarray(samples, dtype=np.float64)
    plan = SegmentationPlan.for_length(samples.shape[-1], window_len)
    used = plan.num_segments * window_len
    return samples[..., :used].reshape(samples.shape[:-1] + (plan.num_segments, window_len))


def segment_channel(samples, window_len: int, channel_index: int = 0) -> list[Segment]:
    """Split one channel into ``floor(N / L)`` contiguous windows of length ``L``.

    The trailing ``N mod L`` samples are dropped.

    Raises
    ------
    WindowLongerThanSignal
        If the channel is shorter than the window.
    """
    windows = segment_windows(samples, window_len)
    return [
        Segment(channel_index, i, row, i * window_len, (i + 1) * window_len)
        for i, row in enumerate(windows)
    ]


def moving_average(x, k: int = 5) -> np.ndarray:
    """Causal k-point moving average along the last axis.

    ``out[n] = mean(x[max(0, n-k+1) : n+1])``; the window grows over the
    first ``k-1`` samples, so the output keeps the input length. Works row
    by row on 2-D input with results identical to the 1-D call.
    """
    if int(k) != k or k < 1:
        raise ConfigError(f"k must be an integer >= 1, got {k}")
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n == 0 or k == 1:
        return x.copy()
    # Work on offsets from the first sample: constant input then sums exact zeros
    # and comes back unchanged, which keeps flat segments detectably flat.
    base = x[..., :1]
    d = x - base
    acc = d.copy()
    for lag in range(1, min(k, n)):
        acc[..., lag:] += d[..., :-lag]
    counts = np.minimum(np.arange(1, n + 1), k).astype(np.float64)
    return acc / counts + base


def minmax_scale(v, params: ScaleParams = ScaleParams()) -> tuple[np.ndarray, bool]:
    """Affine map of `v` onto ``[alpha, beta]`` (min to alpha, max to beta).

    Returns the scaled vector and a degenerate flag. A constant input has no
    range to stretch; it maps to the midpoint and the flag is set.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise TooShort("minmax_scale needs a non-empty 1-D vector")
    out, flags = minmax_scale_rows(v[None, :], params)
    return out[0], bool(flags[0])


def minmax_scale_rows(V, params: ScaleParams = ScaleParams()) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`minmax_scale`; returns ``(scaled, degenerate_flags)``."""
    V = np.asarray(V, dtype=np.float64)
    lo = V.min(axis=1, keepdims=True)
    hi = V.max(axis=1, keepdims=True)
    span = hi - lo
    degenerate = span[:, 0] == 0
    safe = np.where(span == 0, 1.0, span)
    out = (V - lo) * (params.beta - params.alpha) / safe + params.alpha
    out[degenerate] = 0.5 * (params.alpha + params.beta)
    return out, degenerate


def condition(x, filt: FilterConfig = FilterConfig(), scale: ScaleParams = ScaleParams()):
    """Smooth then scale rows of `x` (1-D or 2-D); returns ``(values, degenerate)``."""
    x = np.asarray(x, dtype=np.float64)
    smoothed = moving_average(x, filt.k)
    if x.ndim == 1:
        return minmax_scale(smoothed, scale)
    return minmax_scale_rows(smoothed, scale)


def preprocess_pair(
    segment: Segment,
    template: Template,
    filt: FilterConfig = FilterConfig(),
    scale: ScaleParams = ScaleParams(),
    *,
    return_flags: bool = False,
):
    """Filter then scale a segment and a template with identical parameters.

    With ``return_flags=True`` the two degenerate flags are appended to the
    returned tuple.

    Raises
    ------
    LengthMismatch
        If the segment and template lengths differ.
    """
    seg = segment.samples if isinstance(segment, Segment) else np.asarray(segment, dtype=float)
    tpl = template.samples if isinstance(template, Template) else np.asarray(template, dtype=float)
    if seg.size != tpl.size:
        raise LengthMismatch(f"segment length {seg.size} != template length {tpl.size}")
    xs, xflag = condition(seg, filt, scale)
    ys, yflag = condition(tpl, filt, scale)
    if return_flags:
        return xs, ys, xflag, yflag
    return xs, ys
