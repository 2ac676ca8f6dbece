"""Fixation detection and gaze-shift extraction on aligned trials.

Fixations are runs where smoothed gaze yaw velocity stays under a threshold
for long enough; everything between two consecutive fixations is a gaze
shift. Shift amplitudes are read off the *raw* traces at the fixation
boundaries (last sample of the earlier fixation, first sample of the later
one) so smoothing never attenuates the measured displacement - the filtered
signal is used only to decide where fixations are. Reading the boundary
samples also means head motion after gaze has settled (stabilized by the
vestibulo-ocular reflex) is not counted as contribution to the shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewFixationsError, TooFewSamplesError
from .ingest import AlignedTrace, FilterConfig, ShiftSet, one_euro


@dataclass(frozen=True)
class FixationConfig:
    """Velocity-threshold fixation criteria (degrees/s and seconds)."""

    vel_threshold: float = 15.0
    min_duration_s: float = 0.060
    pad_s: float = 0.010
    merge_gap_s: float = 0.020


@dataclass(frozen=True)
class Fixation:
    """Inclusive sample-index span [start, end] on the trial timebase."""

    start: int
    end: int


def angular_velocity(t: np.ndarray, yaw: np.ndarray) -> np.ndarray:
    """Yaw velocity in degrees/s: central differences inside, one-sided at ends."""
    t = np.asarray(t, dtype=float)
    yaw = np.asarray(yaw, dtype=float)
    if t.size < 2:
        raise TooFewSamplesError(f"velocity needs at least 2 samples, got {t.size}")
    v = np.empty_like(yaw)
    v[1:-1] = (yaw[2:] - yaw[:-2]) / (t[2:] - t[:-2])
    v[0] = (yaw[1] - yaw[0]) / (t[1] - t[0])
    v[-1] = (yaw[-1] - yaw[-2]) / (t[-1] - t[-2])
    return v


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (start, end) index pairs of the True runs in mask."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    return [(int(idx[a]), int(idx[b])) for a, b in zip(starts, ends)]


def detect_fixations(
    t: np.ndarray,
    velocity: np.ndarray,
    cfg: FixationConfig = FixationConfig(),
) -> list[Fixation]:
    """Threshold fixation detector.

    1. keep runs with |velocity| < vel_threshold lasting >= min_duration_s,
    2. pad each run outward by pad_s (clamped to the trace),
    3. merge runs whose remaining gap is shorter than merge_gap_s.
    """
    t = np.asarray(t, dtype=float)
    if t.size < 3:
        raise TooFewSamplesError(f"fixation detection needs >= 3 samples, got {t.size}")
    slow = np.abs(np.asarray(velocity, dtype=float)) < cfg.vel_threshold
    spans = [
        (a, b) for a, b in _runs(slow) if t[b] - t[a] >= cfg.min_duration_s
    ]

    padded: list[tuple[int, int]] = []
    for a, b in spans:
        a2 = int(np.searchsorted(t, t[a] - cfg.pad_s, side="left"))
        b2 = int(np.searchsorted(t, t[b] + cfg.pad_s, side="right")) - 1
        padded.append((max(a2, 0), min(b2, t.size - 1)))

    merged: list[tuple[int, int]] = []
    for a, b in padded:
        if merged and t[a] - t[merged[-1][1]] < cfg.merge_gap_s:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return [Fixation(a, b) for a, b in merged]


def total_fixation_time(t: np.ndarray, fixations: list[Fixation]) -> float:
    return float(sum(t[f.end] - t[f.start] for f in fixations))


def extract_shifts(trace: AlignedTrace, fixations: list[Fixation]) -> ShiftSet:
    """One signed shift per consecutive fixation pair, anchored on raw yaw.

    x = gaze displacement between the end of one fixation and the start of
    the next; y = head displacement between the same two samples.
    """
    if len(fixations) < 2:
        raise TooFewFixationsError(
            f"need >= 2 fixations to form a shift, got {len(fixations)}"
        )
    a_idx = np.array([f.end for f in fixations[:-1]])
    b_idx = np.array([f.start for f in fixations[1:]])
    x = trace.gaze_yaw[b_idx] - trace.gaze_yaw[a_idx]
    y = trace.head_yaw[b_idx] - trace.head_yaw[a_idx]
    n = x.size
    return ShiftSet(
        participant_id=[trace.participant_id] * n,
        trial_id=[trace.trial_id] * n,
        x=x,
        y=y,
    )


def preprocess_trial(
    trace: AlignedTrace,
    filter_cfg: FilterConfig = FilterConfig(),
    fixation_cfg: FixationConfig = FixationConfig(),
) -> ShiftSet:
    """Smooth gaze, detect fixations, and extract signed shifts for one trial."""
    smoothed = one_euro(trace.t, trace.gaze_yaw, filter_cfg)
    velocity = angular_velocity(trace.t, smoothed)
    fixations = detect_fixations(trace.t, velocity, fixation_cfg)
    return extract_shifts(trace, fixations)
