"""Ground-truth-known synthetic data for oracle-based tests and demos.

Two generators:

* `synth_shifts` draws (eccentricity, head contribution) pairs straight
  from a soft-hinge curve plus optional Gaussian noise, clamped to the
  feasible wedge 0 <= y <= x.
* `synth_trace` builds full raw gaze/head yaw recordings: stationary
  fixation plateaus joined by raised-cosine velocity ramps, with the head
  ramp amplitude per shift set by the curve. The raised cosine has
  analytically known peak velocity 2*A/d (amplitude A, duration d), so
  plateau samples sit below any sane fixation threshold and ramp interiors
  sit above it by construction. The generator emits the true segmentation
  and shift list for comparison against the detector.

Everything is deterministic given the seed; random streams are keyed by
(seed, participant, purpose) so generation order cannot change results.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .ingest import RawStream, ShiftSet
from .models import SoftHingeParams, eval_model, params_to_dict

ECC_DISTRIBUTIONS = ("uniform", "bin-balanced")


@dataclass(frozen=True)
class SynthConfig:
    params: SoftHingeParams
    n_shifts: int = 100
    noise_sd: float = 0.0
    ecc_distribution: str = "uniform"
    seed: int = 0
    participant_id: str = "synth"
    trial_id: str = "t01"
    # trace construction
    fixation_duration_ms: float = 400.0
    shift_duration_ms: float = 150.0
    sample_rate_hz: float = 120.0
    head_rate_hz: float = 90.0
    head_offset_s: float = 0.003
    amp_min_deg: float = 5.0
    amp_max_deg: float = 45.0
    position_bound_deg: float = 150.0
    start_yaw_deg: float = 0.0
    wrap_output: bool = False

    def __post_init__(self) -> None:
        if self.n_shifts < 1:
            raise ValueError(f"n_shifts must be >= 1, got {self.n_shifts}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.ecc_distribution not in ECC_DISTRIBUTIONS:
            raise ValueError(
                f"ecc_distribution must be one of {ECC_DISTRIBUTIONS}, "
                f"got {self.ecc_distribution!r}"
            )


def _rng(seed: int, participant_id: str, purpose: str) -> np.random.Generator:
    pid_key = int.from_bytes(hashlib.sha256(participant_id.encode()).digest()[:8], "big")
    purpose_key = int.from_bytes(hashlib.sha256(purpose.encode()).digest()[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([seed, pid_key, purpose_key]))


# ---------------------------------------------------------------------------
# shift-level generation
# ---------------------------------------------------------------------------

def _draw_eccentricities(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.ecc_distribution == "uniform":
        return rng.uniform(0.0, 50.0, cfg.n_shifts)
    # bin-balanced: equal counts per 5-degree bin (remainder spread low-first)
    n_bins = 10
    counts = np.full(n_bins, cfg.n_shifts // n_bins)
    counts[: cfg.n_shifts % n_bins] += 1
    xs = [
        rng.uniform(5.0 * b, 5.0 * (b + 1), c)
        for b, c in enumerate(counts)
    ]
    x = np.concatenate(xs)
    rng.shuffle(x)
    return x


def synth_shifts(cfg: SynthConfig) -> tuple[ShiftSet, dict]:
    """Draw shifts on (or noisily around) the configured curve.

    y = model(x) + Normal(0, noise_sd), then clamped into [0, x]; the clamp
    censors the noise near x = 0 where the feasible wedge is thin.
    """
    rng = _rng(cfg.seed, cfg.participant_id, "shifts")
    x = _draw_eccentricities(cfg, rng)
    y = eval_model(cfg.params, x)
    if cfg.noise_sd > 0:
        y = y + rng.normal(0.0, cfg.noise_sd, cfg.n_shifts)
    y = np.clip(y, 0.0, x)
    shifts = ShiftSet(
        participant_id=[cfg.participant_id] * cfg.n_shifts,
        trial_id=[cfg.trial_id] * cfg.n_shifts,
        x=x,
        y=y,
    )
    truth = {
        "participant_id": cfg.participant_id,
        "trial_id": cfg.trial_id,
        "params": params_to_dict(cfg.params),
        "noise_sd": cfg.noise_sd,
        "ecc_distribution": cfg.ecc_distribution,
        "seed": cfg.seed,
        "n_shifts": cfg.n_shifts,
    }
    return shifts, truth


# ---------------------------------------------------------------------------
# trace-level generation
# ---------------------------------------------------------------------------

def _ramp_fraction(u: np.ndarray) -> np.ndarray:
    """Displacement fraction of a raised-cosine velocity ramp, u in [0, 1]."""
    return u - np.sin(2.0 * np.pi * u) / (2.0 * np.pi)


def _piecewise_position(
    ts: np.ndarray,
    ramp_starts: np.ndarray,
    ramp_dur: float,
    levels: np.ndarray,
    amplitudes: np.ndarray,
) -> np.ndarray:
    """Evaluate the plateau/ramp trajectory at arbitrary times.

    levels[i] is the plateau before ramp i (levels has one more entry than
    ramp_starts); during ramp i the position eases from levels[i] by
    amplitudes[i] along the raised-cosine displacement curve.
    """
    seg = np.searchsorted(ramp_starts, ts, side="right") - 1
    pos = np.empty_like(ts)
    before = seg < 0
    pos[before] = levels[0]
    active = ~before
    i = seg[active]
    dt = ts[active] - ramp_starts[i]
    frac = np.where(dt >= ramp_dur, 1.0, _ramp_fraction(np.minimum(dt, ramp_dur) / ramp_dur))
    pos[active] = levels[i] + amplitudes[i] * frac
    return pos


def _wrap(yaw: np.ndarray) -> np.ndarray:
    return (yaw + 180.0) % 360.0 - 180.0


def synth_trace(cfg: SynthConfig) -> tuple[RawStream, RawStream, dict]:
    """Build one trial's gaze and head recordings with known segmentation.

    Gaze shift amplitudes are drawn uniform in [amp_min_deg, amp_max_deg]
    with signs chosen to keep the cumulative position inside
    +-position_bound_deg; the head moves synchronously with each gaze ramp
    by model(|amplitude|), capped at the gaze amplitude. Gaze and head are
    sampled on their own clocks (different rates, small offset). With
    wrap_output the emitted yaw wraps into [-180, 180) like a real device.
    """
    n = cfg.n_shifts
    rng = _rng(cfg.seed, cfg.participant_id, f"trace:{cfg.trial_id}")
    fix_s = cfg.fixation_duration_ms / 1000.0
    ramp_s = cfg.shift_duration_ms / 1000.0

    amps = rng.uniform(cfg.amp_min_deg, cfg.amp_max_deg, n)
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    gaze_amp = np.empty(n)
    pos = cfg.start_yaw_deg
    for i in range(n):
        step = signs[i] * amps[i]
        if abs(pos + step) > cfg.position_bound_deg:
            step = -step
        gaze_amp[i] = step
        pos += step

    head_amp = np.clip(eval_model(cfg.params, amps), 0.0, amps) * np.sign(gaze_amp)

    gaze_levels = cfg.start_yaw_deg + np.concatenate(([0.0], np.cumsum(gaze_amp)))
    head_levels = cfg.start_yaw_deg + np.concatenate(([0.0], np.cumsum(head_amp)))
    ramp_starts = fix_s + np.arange(n) * (fix_s + ramp_s)
    total_s = (n + 1) * fix_s + n * ramp_s

    t_gaze = np.arange(0.0, total_s, 1.0 / cfg.sample_rate_hz)
    t_head = np.arange(cfg.head_offset_s, total_s, 1.0 / cfg.head_rate_hz)
    gaze_yaw = _piecewise_position(t_gaze, ramp_starts, ramp_s, gaze_levels, gaze_amp)
    head_yaw = _piecewise_position(t_head, ramp_starts, ramp_s, head_levels, head_amp)
    if cfg.wrap_output:
        gaze_yaw = _wrap(gaze_yaw)
        head_yaw = _wrap(head_yaw)

    fixation_truth = [[0.0, float(ramp_starts[0])]]
    for i in range(n - 1):
        fixation_truth.append([float(ramp_starts[i] + ramp_s), float(ramp_starts[i + 1])])
    fixation_truth.append([float(ramp_starts[-1] + ramp_s), float(total_s)])

    truth = {
        "participant_id": cfg.participant_id,
        "trial_id": cfg.trial_id,
        "params": params_to_dict(cfg.params),
        "seed": cfg.seed,
        "shifts": [
            {
                "t_on": float(ramp_starts[i]),
                "t_off": float(ramp_starts[i] + ramp_s),
                "gaze_amplitude": float(gaze_amp[i]),
                "head_amplitude": float(head_amp[i]),
            }
            for i in range(n)
        ],
        "fixations": fixation_truth,
        "total_duration_s": float(total_s),
    }
    gaze = RawStream(cfg.participant_id, cfg.trial_id, "gaze", t_gaze, gaze_yaw)
    head = RawStream(cfg.participant_id, cfg.trial_id, "head", t_head, head_yaw)
    return gaze, head, truth


# ---------------------------------------------------------------------------
# population helper
# ---------------------------------------------------------------------------

def draw_population(
    n_participants: int,
    seed: int,
    beta_range: tuple[float, float] = (0.4, 0.95),
    tau_range: tuple[float, float] = (5.0, 30.0),
    s_range: tuple[float, float] = (2.0, 8.0),
) -> list[tuple[str, SoftHingeParams]]:
    """Participant ids with per-participant true curve parameters."""
    out = []
    for i in range(n_participants):
        pid = f"synth{i + 1:03d}"
        rng = _rng(seed, pid, "population")
        params = SoftHingeParams(
            beta=float(rng.uniform(*beta_range)),
            tau=float(rng.uniform(*tau_range)),
            s=float(rng.uniform(*s_range)),
        )
        out.append((pid, params))
    return out
