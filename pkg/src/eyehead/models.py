"""Head-contribution models over target eccentricity.

Three parametric curves describe how much the head rotates as a function of
the horizontal size x of a gaze shift, all defined on x in [0, 50] degrees:

* linear baseline   y = gamma * max(0, x - alpha), with alpha the eye-only
  range (EOR) and gamma the eye-head-range slope, both precomputed from the
  participant's data rather than optimized,
* hinge             y = beta * softplus(x - tau),
* soft hinge        y = beta * softplus((x - tau) / s),

where softplus(z) = log(1 + exp(z)). The soft hinge with s = 1 reduces to
the hinge exactly; its asymptotic slope for large x is beta / s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DomainError, TooFewPointsError

X_MIN = 0.0
X_MAX = 50.0

# Lower bound on the softness parameter: the soft hinge divides by s.
S_MIN = 1e-3

# Search range for the knee; values far outside the data domain are
# unidentifiable.
TAU_RANGE = (-20.0, 70.0)


@dataclass(frozen=True)
class LinearParams:
    """Eye-only breakpoint alpha (degrees) and post-breakpoint slope gamma."""

    alpha: float
    gamma: float

    def __post_init__(self) -> None:
        if not (X_MIN <= self.alpha <= X_MAX):
            raise DomainError(f"alpha must lie in [0, 50], got {self.alpha}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class HingeParams:
    """Scale beta (unitless, in [0, 1]) and threshold tau (degrees)."""

    beta: float
    tau: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.beta <= 1.0):
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class SoftHingeParams:
    """Scale beta in [0, 1], knee tau (degrees), softness s >= S_MIN (degrees)."""

    beta: float
    tau: float
    s: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.beta <= 1.0):
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if self.s < S_MIN:
            raise DomainError(f"s must be >= {S_MIN}, got {self.s}")


ModelParams = LinearParams | HingeParams | SoftHingeParams


def softplus(z):
    """Numerically safe softplus, log(1 + exp(z)).

    Computed as z + log1p(exp(-z)) for z > 0 and log1p(exp(z)) otherwise,
    so neither branch overflows for any finite z. Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=float)
    ez = np.exp(-np.abs(z))
    out = np.where(z > 0.0, z + np.log1p(ez), np.log1p(ez))
    return out if out.ndim else float(out)


def _check_domain(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    bad = ~((x >= X_MIN) & (x <= X_MAX))  # catches non-finite values too
    if np.any(bad):
        raise DomainError(f"eccentricity outside [0, 50]: {x[bad].flat[0]}")
    return x


def eval_model(params: ModelParams, x):
    """Evaluate a head-contribution model at eccentricity x (degrees).

    x may be scalar or array; values must lie in [0, 50].
    """
    xa = _check_domain(x)
    if isinstance(params, LinearParams):
        out = params.gamma * np.maximum(0.0, xa - params.alpha)
    elif isinstance(params, HingeParams):
        out = params.beta * softplus(xa - params.tau)
    elif isinstance(params, SoftHingeParams):
        out = params.beta * softplus((xa - params.tau) / params.s)
    else:
        raise TypeError(f"unsupported params type {type(params).__name__}")
    out = np.asarray(out)
    return out if out.ndim else float(out)


def model_gradient(params: SoftHingeParams, x):
    """Partials of the soft hinge wrt (beta, tau, s) at eccentricity x.

    With u = (x - tau) / s and sigma the logistic function:
        dy/dbeta = softplus(u)
        dy/dtau  = -(beta / s) * sigma(u)
        dy/ds    = -(beta * u / s) * sigma(u)
    Returns three arrays shaped like x.
    """
    xa = np.asarray(x, dtype=float)
    u = (xa - params.tau) / params.s
    sig = expit(u)
    d_beta = softplus(u)
    d_tau = -(params.beta / params.s) * sig
    d_s = -(params.beta * u / params.s) * sig
    return np.asarray(d_beta), d_tau, d_s


def hinge_gradient(params: HingeParams, x):
    """Partials of the hinge wrt (beta, tau); the hinge is the s = 1 soft hinge."""
    xa = np.asarray(x, dtype=float)
    u = xa - params.tau
    return np.asarray(softplus(u)), -params.beta * expit(u)


def compute_eor(x, y, bin_width: float = 5.0) -> float:
    """Eye-only range: eccentricity where P(eye-only shift) first drops to 0.5.

    A shift is eye-only when its head contribution is at most 10% of its
    amplitude. Shifts are binned by eccentricity into bins centered on
    multiples of bin_width; the 50% crossing is located by linear
    interpolation between adjacent non-empty bin centers and clamped to
    [0, 50].
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        raise TooFewPointsError("EOR needs at least one shift")

    eye_only = y <= 0.1 * x
    centers = np.arange(0.0, X_MAX + bin_width / 2, bin_width)
    probs = []
    kept_centers = []
    for c in centers:
        mask = (x >= c - bin_width / 2) & (x < c + bin_width / 2)
        if not np.any(mask):
            continue
        kept_centers.append(c)
        probs.append(float(np.mean(eye_only[mask])))

    if not kept_centers:
        raise TooFewPointsError("EOR needs at least one populated bin")

    if probs[0] < 0.5:
        return 0.0
    for (c1, p1), (c2, p2) in zip(
        zip(kept_centers, probs), zip(kept_centers[1:], probs[1:])
    ):
        if p1 >= 0.5 and p2 < 0.5:
            alpha = c1 + (p1 - 0.5) / (p1 - p2) * (c2 - c1)
            return float(min(max(alpha, X_MIN), X_MAX))
    return X_MAX


def compute_ehr_slope(x, y, alpha: float) -> float:
    """Through-origin slope of head contribution against (x - alpha), x > alpha.

    gamma = sum(y * (x - alpha)) / sum((x - alpha)^2) over shifts beyond the
    breakpoint, matching the linear model's functional form exactly.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    beyond = x > alpha
    if np.count_nonzero(beyond) < 2:
        raise TooFewPointsError(
            f"EHR slope needs at least 2 shifts with x > {alpha}, "
            f"got {np.count_nonzero(beyond)}"
        )
    dx = x[beyond] - alpha
    return float(np.dot(y[beyond], dx) / np.dot(dx, dx))


def params_to_dict(params: ModelParams) -> dict:
    """JSON-ready representation, tagged with the model name."""
    if isinstance(params, LinearParams):
        return {"model": "linear", "alpha": params.alpha, "gamma": params.gamma}
    if isinstance(params, HingeParams):
        return {"model": "hinge", "beta": params.beta, "tau": params.tau}
    if isinstance(params, SoftHingeParams):
        return {
            "model": "soft-hinge",
            "beta": params.beta,
            "tau": params.tau,
            "s": params.s,
        }
    raise TypeError(f"unsupported params type {type(params).__name__}")


def params_from_dict(d: dict) -> ModelParams:
    kind = d.get("model")
    if kind == "linear":
        return LinearParams(alpha=float(d["alpha"]), gamma=float(d["gamma"]))
    if kind == "hinge":
        return HingeParams(beta=float(d["beta"]), tau=float(d["tau"]))
    if kind == "soft-hinge":
        return SoftHingeParams(beta=float(d["beta"]), tau=float(d["tau"]), s=float(d["s"]))
    raise ValueError(f"unknown model tag {kind!r}")
