"""Provenance-stamped output writers and the analysis report bundle.

Every artifact this package writes carries a provenance record: the hash of
the fully resolved configuration, the master seed, and a digest of each
input file. No timestamps — rerunning a stage on identical inputs must
produce byte-identical outputs. CSV files carry the record as a leading
`# provenance: {...}` comment line; JSON objects carry a "provenance" key;
JSON arrays carry it as a leading header element; JSON-lines files as a
leading header line.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import GridMismatchError, MissingInputError
from .fpca import Spectrum, reconstruct_mode
from .stats import describe_distribution, kde_density

DENSITY_POINTS = 201


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def make_provenance(config: dict, seed: int | None, inputs: dict[str, str]) -> dict:
    """Provenance record: config hash, seed, and per-input content digests."""
    return {
        "config_hash": config_hash(config),
        "seed": seed,
        "inputs": {name: file_sha256(path) for name, path in sorted(inputs.items())},
    }


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)


def write_json_object(path: str, payload: dict, provenance: dict) -> None:
    with open(path, "w") as fh:
        fh.write(_dump({"provenance": provenance, **payload}))
        fh.write("\n")


def write_json_array(path: str, items: list, provenance: dict) -> None:
    """JSON array whose first element is the provenance header."""
    with open(path, "w") as fh:
        fh.write(_dump([{"provenance": provenance}, *items]))
        fh.write("\n")


def read_json_array(path: str) -> tuple[list, dict | None]:
    """Inverse of write_json_array; tolerates arrays without the header."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise MissingInputError(f"{path}: expected a JSON array")
    provenance = None
    items = []
    for element in data:
        if isinstance(element, dict) and set(element) == {"provenance"}:
            provenance = element["provenance"]
        else:
            items.append(element)
    return items, provenance


def write_csv_with_provenance(
    path: str, header: list[str], rows: list[list], provenance: dict | None
) -> None:
    with open(path, "w", newline="") as fh:
        if provenance is not None:
            fh.write(
                "# provenance: " + json.dumps(provenance, sort_keys=True) + "\n"
            )
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(c) for c in row) + "\n")


def _format_cell(c) -> str:
    if isinstance(c, float):
        return f"{c:.9g}"
    return str(c)


# ---------------------------------------------------------------------------
# report bundle
# ---------------------------------------------------------------------------

def _mode_rows(grid: np.ndarray, curve: np.ndarray) -> list[list]:
    return [[float(g), float(v)] for g, v in zip(grid, curve)]


def _model_comparison(fit_rows: list[dict]) -> dict:
    by_model: dict[str, list[dict]] = {}
    for row in fit_rows:
        by_model.setdefault(row["model"], []).append(row)
    table = {}
    for model, rows in sorted(by_model.items()):
        table[model] = {"n": len(rows)}
        for metric in ("r2", "rmse", "aic"):
            vals = np.array([float(r[metric]) for r in rows])
            table[model][f"{metric}_mean"] = float(np.nanmean(vals))
            table[model][f"{metric}_sd"] = (
                float(np.nanstd(vals, ddof=1)) if len(rows) > 1 else 0.0
            )
    return table


def emit_report(
    fit_rows: list[dict],
    spectrum: Spectrum,
    score_rows: list[dict],
    out_dir: str,
    provenance: dict,
) -> list[str]:
    """Write the report bundle; returns the paths written (relative to out_dir).

    Bundle contents: mode-reconstruction curves (mean and +-2 SD along each
    retained component) as two-column CSVs, the score table, a KDE density
    of the PC1 scores, a model-comparison table, and a Markdown summary
    linking everything with relative paths only.
    """
    if not fit_rows:
        raise MissingInputError("report needs at least one fit result")
    if not score_rows:
        raise MissingInputError("report needs a non-empty score table")
    if spectrum.grid.size != spectrum.mean_curve.size:
        raise GridMismatchError("spectrum grid and mean curve disagree in length")

    os.makedirs(out_dir, exist_ok=True)
    modes_dir = os.path.join(out_dir, "modes")
    os.makedirs(modes_dir, exist_ok=True)
    written: list[str] = []

    def put_csv(rel: str, header: list[str], rows: list[list]) -> None:
        write_csv_with_provenance(os.path.join(out_dir, rel), header, rows, provenance)
        written.append(rel)

    grid = spectrum.grid
    put_csv("modes/mean.csv", ["x_deg", "y_deg"], _mode_rows(grid, spectrum.mean_curve))
    n_components = spectrum.components.shape[0]
    for j in range(n_components):
        for c in (-2.0, 2.0):
            name = f"modes/pc{j + 1}_{'minus' if c < 0 else 'plus'}2sd.csv"
            put_csv(name, ["x_deg", "y_deg"], _mode_rows(grid, reconstruct_mode(spectrum, j, c)))

    put_csv(
        "scores.csv",
        ["curve_id", "pc1", "pc2", "percentile_pc1"],
        [[r["curve_id"], r["pc1"], r["pc2"], r["percentile_pc1"]] for r in score_rows],
    )

    pc1 = np.array([float(r["pc1"]) for r in score_rows])
    summary_stats = describe_distribution(pc1)
    if pc1.size >= 2 and float(np.std(pc1, ddof=1)) > 0:
        span = float(pc1.max() - pc1.min()) or 1.0
        xs = np.linspace(pc1.min() - 0.25 * span, pc1.max() + 0.25 * span, DENSITY_POINTS)
        dens = kde_density(pc1, xs)
        put_csv("pc1_density.csv", ["x", "density"], [[float(a), float(b)] for a, b in zip(xs, dens)])
        density_note = "pc1_density.csv"
    else:
        density_note = None

    comparison = _model_comparison(fit_rows)
    summary = {
        "n_participants": len({r["participant_id"] for r in fit_rows}),
        "explained_ratio": spectrum.explained_ratio.tolist(),
        "eigenvalues": spectrum.eigenvalues.tolist(),
        "pc1_distribution": summary_stats.to_dict(),
        "model_comparison": comparison,
        "files": None,  # filled below
    }

    md = ["# Eye-head spectrum report", ""]
    md.append(f"Participants: {summary['n_participants']}")
    ratios = ", ".join(
        f"PC{j + 1} {r:.1%}" for j, r in enumerate(spectrum.explained_ratio)
    )
    md.append(f"Explained variance: {ratios}")
    d = summary_stats
    md.append(
        f"PC1 scores: median {d.median:+.2f}, IQR [{d.q1:+.2f}, {d.q3:+.2f}], "
        f"skewness {d.skewness:.3f}"
    )
    md.extend(["", "## Model comparison (mean over participants)", ""])
    md.append("| model | n | R2 | RMSE | AIC |")
    md.append("|---|---|---|---|---|")
    for model, row in comparison.items():
        md.append(
            f"| {model} | {row['n']} | {row['r2_mean']:.3f} | "
            f"{row['rmse_mean']:.3f} | {row['aic_mean']:.2f} |"
        )
    md.extend(["", "## Files", ""])
    file_list = list(written)
    if density_note:
        pass  # already in written
    for rel in file_list:
        md.append(f"- [{rel}]({rel})")
    md.append("- [summary.json](summary.json)")
    md.append("")

    summary["files"] = file_list + ["summary.json", "summary.md"]
    write_json_object(os.path.join(out_dir, "summary.json"), summary, provenance)
    written.append("summary.json")
    with open(os.path.join(out_dir, "summary.md"), "w") as fh:
        fh.write("\n".join(md))
    written.append("summary.md")
    return written
