"""Functional PCA over per-participant head-contribution curves.

Every participant's fitted curve is sampled on a common eccentricity grid
(0..50 degrees, 1-degree steps), the pointwise mean is removed, and the
eigenvectors of the sample covariance give the population's dominant modes
of variation. A participant's coordinates along those modes ("scores")
place them on the eye-mover / head-mover spectrum; percentiles are taken
against a reference score distribution by linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyReferenceError,
    GridMismatchError,
    IndexOutOfRangeError,
    TooFewCurvesError,
)
from .models import SoftHingeParams, eval_model

GRID_STEP = 1.0
DEFAULT_GRID = np.arange(0.0, 50.0 + GRID_STEP / 2, GRID_STEP)

# Each component is flipped, if needed, so its mean loading over the grid is
# nonnegative: positive score = more head contribution than the mean curve.
SIGN_CONVENTION = "mean-loading-nonnegative"


@dataclass
class CurveGrid:
    """Curves sampled on a shared eccentricity grid, one row per curve."""

    curve_ids: list[str]
    grid: np.ndarray
    values: np.ndarray  # (n_curves, len(grid))


def sample_curves(
    params: list[SoftHingeParams],
    curve_ids: list[str],
    grid: np.ndarray | None = None,
) -> CurveGrid:
    """Evaluate each participant's fitted curve on the common grid."""
    if grid is None:
        grid = DEFAULT_GRID
    if len(params) != len(curve_ids):
        raise GridMismatchError(
            f"{len(params)} parameter sets but {len(curve_ids)} curve ids"
        )
    if not params:
        raise TooFewCurvesError("no curves to sample")
    values = np.vstack([eval_model(p, grid) for p in params])
    return CurveGrid(curve_ids=list(curve_ids), grid=np.asarray(grid, float), values=values)


@dataclass
class Spectrum:
    """Population modes: grid, mean curve, and orthonormal components.

    Fit-time artifacts (training curve ids and their scores) ride along for
    projection-consistency checks and percentile references.
    """

    grid: np.ndarray
    mean_curve: np.ndarray
    components: np.ndarray  # (n_components, len(grid))
    eigenvalues: np.ndarray  # (n_components,)
    explained_ratio: np.ndarray  # (n_components,), fractions of *total* variance
    sign_convention: str = SIGN_CONVENTION
    curve_ids: list[str] = field(default_factory=list)
    scores: np.ndarray | None = None  # (n_curves, n_components)

    def to_dict(self) -> dict:
        out = {
            "grid": self.grid.tolist(),
            "mean_curve": self.mean_curve.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_ratio": self.explained_ratio.tolist(),
            "sign_convention": self.sign_convention,
        }
        if self.scores is not None:
            # Training PC1 scores double as the percentile reference when the
            # spectrum file is reused to place new curves.
            out["reference_scores_pc1"] = self.scores[:, 0].tolist()
        return out

    @staticmethod
    def from_dict(d: dict) -> "Spectrum":
        ref = d.get("reference_scores_pc1")
        scores = None
        if ref is not None:
            scores = np.asarray(ref, dtype=float)[:, None]
        return Spectrum(
            grid=np.asarray(d["grid"], dtype=float),
            mean_curve=np.asarray(d["mean_curve"], dtype=float),
            components=np.asarray(d["components"], dtype=float),
            eigenvalues=np.asarray(d["eigenvalues"], dtype=float),
            explained_ratio=np.asarray(d["explained_ratio"], dtype=float),
            sign_convention=d.get("sign_convention", SIGN_CONVENTION),
            scores=scores,
        )

    def reference_scores(self) -> np.ndarray:
        if self.scores is None or self.scores.size == 0:
            raise EmptyReferenceError(
                "spectrum carries no training scores to rank against"
            )
        return np.asarray(self.scores)[:, 0]


def fit_fpca(curves: CurveGrid, n_components: int = 2) -> Spectrum:
    """Eigendecompose the sample covariance of the curves.

    Rows are centered by the pointwise mean; the grid-sized covariance uses
    divisor n-1. Components are orthonormal, ordered by decreasing
    eigenvalue, and sign-fixed per SIGN_CONVENTION. explained_ratio is each
    kept eigenvalue over the sum of *all* eigenvalues, so it does not change
    when n_components does.
    """
    values = np.asarray(curves.values, dtype=float)
    grid = curves.grid
    if values.ndim != 2 or values.shape[1] != grid.size:
        raise GridMismatchError(f"curves must be (n, {grid.size}), got {values.shape}")
    n = values.shape[0]
    if n < 2:
        raise TooFewCurvesError(f"need >= 2 curves for a covariance, got {n}")
    max_components = min(n - 1, grid.size)
    if not (1 <= n_components <= max_components):
        raise IndexOutOfRangeError(
            f"n_components must be in [1, {max_components}] for {n} curves, "
            f"got {n_components}"
        )

    mean_curve = values.mean(axis=0)
    centered = values - mean_curve
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]

    components = eigvecs[:, :n_components].T.copy()
    for j in range(components.shape[0]):
        if components[j].mean() < 0.0:
            components[j] = -components[j]

    total = float(eigvals.sum())
    kept = eigvals[:n_components]
    ratio = kept / total if total > 0 else np.zeros_like(kept)
    scores = centered @ components.T
    return Spectrum(
        grid=grid.copy(),
        mean_curve=mean_curve,
        components=components,
        eigenvalues=kept.copy(),
        explained_ratio=ratio,
        curve_ids=list(curves.curve_ids),
        scores=scores,
    )


def project(spectrum: Spectrum, curves: np.ndarray) -> np.ndarray:
    """Scores of one curve (1-D) or many curves (2-D rows) on the modes."""
    curves = np.asarray(curves, dtype=float)
    single = curves.ndim == 1
    if single:
        curves = curves[None, :]
    if curves.shape[1] != spectrum.grid.size:
        raise GridMismatchError(
            f"curve length {curves.shape[1]} != grid length {spectrum.grid.size}"
        )
    scores = (curves - spectrum.mean_curve) @ spectrum.components.T
    return scores[0] if single else scores


def reconstruct(spectrum: Spectrum, scores: np.ndarray) -> np.ndarray:
    """Curve(s) rebuilt from scores: mean + scores @ components."""
    scores = np.asarray(scores, dtype=float)
    single = scores.ndim == 1
    if single:
        scores = scores[None, :]
    if scores.shape[1] != spectrum.components.shape[0]:
        raise GridMismatchError(
            f"got {scores.shape[1]} scores for {spectrum.components.shape[0]} components"
        )
    curves = spectrum.mean_curve + scores @ spectrum.components
    return curves[0] if single else curves


def reconstruct_mode(spectrum: Spectrum, component: int, c: float) -> np.ndarray:
    """Mean curve displaced c standard deviations along one mode."""
    k = spectrum.components.shape[0]
    if not (0 <= component < k):
        raise IndexOutOfRangeError(f"component {component} out of range [0, {k})")
    sd = float(np.sqrt(spectrum.eigenvalues[component]))
    return spectrum.mean_curve + c * sd * spectrum.components[component]


def score_percentile(score: float, reference: np.ndarray) -> float:
    """Percentile of score within a reference sample, linearly interpolated.

    The sorted reference maps onto equally spaced percentiles 0..100; scores
    outside the reference range clamp to 0 or 100. A singleton reference
    carries no spread, so everything ranks at 50.
    """
    reference = np.asarray(reference, dtype=float)
    if reference.size == 0:
        raise EmptyReferenceError("percentile needs a non-empty reference sample")
    if reference.size == 1:
        return 50.0
    ref = np.sort(reference)
    return float(np.interp(score, ref, np.linspace(0.0, 100.0, ref.size)))


def score_table(
    spectrum: Spectrum,
    curves: CurveGrid,
    reference: np.ndarray | None = None,
) -> list[dict]:
    """Rows {curve_id, pc1, pc2, percentile_pc1} for a batch of curves.

    Percentiles rank PC1 scores against `reference` (default: the
    spectrum's training scores; failing that, the batch itself). With one
    retained component pc2 is reported as 0.
    """
    scores = project(spectrum, curves.values)
    if reference is None:
        try:
            reference = spectrum.reference_scores()
        except EmptyReferenceError:
            reference = scores[:, 0]
    rows = []
    for cid, row in zip(curves.curve_ids, scores):
        rows.append(
            {
                "curve_id": cid,
                "pc1": float(row[0]),
                "pc2": float(row[1]) if row.size > 1 else 0.0,
                "percentile_pc1": score_percentile(float(row[0]), reference),
            }
        )
    return rows
