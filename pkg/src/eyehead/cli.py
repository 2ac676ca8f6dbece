"""Command-line pipeline.

Subcommands mirror the analysis stages:

    preprocess   paired trace CSVs -> cleaned shift table + sanity log
    fit          shift table -> per-participant model fits (JSON)
    fpca         soft-hinge fits -> population spectrum (JSON)
    project      fits + spectrum -> score table (CSV)
    report       fits + spectrum + scores -> report bundle
    sensitivity  traces -> velocity-threshold robustness summary
    synth        ground-truth synthetic traces and shift tables

Exit codes: 0 success, 2 usage error (bad flags/subcommand), 1 stage error.
Stage errors are written to stderr as a single JSON object naming the stage,
the error type, and a message. Option precedence is flags over config-file
values over built-in defaults; the config file is a flat key/value JSON
object using the long flag names with underscores.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import EyeheadError, MissingInputError, OneSidedDataError
from .events import FixationConfig, preprocess_trial
from .fitting import FitConfig, fit_participant
from .fpca import Spectrum, fit_fpca, sample_curves, score_table
from .ingest import (
    FilterConfig,
    align_head_to_gaze,
    concat_shift_sets,
    load_trace_csv,
    missing_stream_report,
    participant_passes,
    read_shifts_csv,
    sanity_check,
    symmetrize_and_clean,
    write_shifts_csv,
    write_trace_csv,
)
from .models import params_from_dict, params_to_dict
from .report import (
    emit_report,
    make_provenance,
    read_json_array,
    write_csv_with_provenance,
    write_json_array,
    write_json_object,
)
from .stats import symmetry_check, threshold_sensitivity
from .synth import SynthConfig, draw_population, synth_shifts, synth_trace

MODEL_ORDER = ("linear", "hinge", "soft-hinge")

DEFAULTS = {
    "fix_threshold": 15.0,
    "min_dur_ms": 60.0,
    "pad_ms": 10.0,
    "merge_gap_ms": 20.0,
    "max_ecc_deg": 50.0,
    "min_cutoff": 1.0,
    "filter_beta": 0.0,
    "derivative_cutoff": 1.0,
    "min_overlap_s": 25.0,
    "max_gap_s": 0.5,
    "expected_trials": 0,
    "model": "all",
    "starts": 20,
    "seed": 0,
    "threads": 1,
    "components": 0,
    "thresholds": "10,15,20",
    "base_threshold": 15.0,
    "participants": 12,
    "trials": 2,
    "shifts": 50,
    "noise_sd": 2.0,
}


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config file must be a flat JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    return data


def _resolve(args: argparse.Namespace, keys: tuple[str, ...]) -> dict:
    """Merge CLI flags, config-file values, and defaults (in that order)."""
    from_file = _load_config_file(getattr(args, "config", None))
    resolved = {}
    for key in keys:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in from_file:
            resolved[key] = type(DEFAULTS[key])(from_file[key])
        else:
            resolved[key] = DEFAULTS[key]
    return resolved


def _filter_config(cfg: dict) -> FilterConfig:
    return FilterConfig(
        min_cutoff=cfg["min_cutoff"],
        beta=cfg["filter_beta"],
        derivative_cutoff=cfg["derivative_cutoff"],
    )


def _fixation_config(cfg: dict) -> FixationConfig:
    return FixationConfig(
        vel_threshold=cfg["fix_threshold"],
        min_duration_s=cfg["min_dur_ms"] / 1000.0,
        pad_s=cfg["pad_ms"] / 1000.0,
        merge_gap_s=cfg["merge_gap_ms"] / 1000.0,
    )


def _trace_pairs(in_dir: str) -> list[tuple[str, str]]:
    """(gaze_path, head_path) pairs; the head file may be absent."""
    gaze_files = sorted(glob.glob(os.path.join(in_dir, "*.gaze.csv")))
    if not gaze_files:
        raise MissingInputError(f"no *.gaze.csv files under {in_dir}")
    return [(g, g[: -len(".gaze.csv")] + ".head.csv") for g in gaze_files]


def _input_map(paths: list[str], base: str) -> dict[str, str]:
    """Name inputs by path relative to `base`; make_provenance digests them."""
    return {os.path.relpath(p, base): p for p in paths if os.path.exists(p)}


def _load_aligned(in_dir: str):
    """Load and align every trace pair; missing head files yield reports."""
    aligned = []
    reports = []
    paths = []
    for gaze_path, head_path in _trace_pairs(in_dir):
        gaze = load_trace_csv(gaze_path, kind="gaze")
        paths.append(gaze_path)
        if not os.path.exists(head_path):
            reports.append(missing_stream_report(gaze.participant_id, gaze.trial_id))
            continue
        head = load_trace_csv(head_path, kind="head")
        paths.append(head_path)
        aligned.append(align_head_to_gaze(gaze, head))
    return aligned, reports, paths


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

PREPROCESS_KEYS = (
    "fix_threshold",
    "min_dur_ms",
    "pad_ms",
    "merge_gap_ms",
    "max_ecc_deg",
    "min_cutoff",
    "filter_beta",
    "derivative_cutoff",
    "min_overlap_s",
    "max_gap_s",
    "expected_trials",
)


def cmd_preprocess(args: argparse.Namespace) -> int:
    cfg = _resolve(args, PREPROCESS_KEYS)
    aligned, reports, input_paths = _load_aligned(args.in_dir)
    provenance = make_provenance(
        {"command": "preprocess", **cfg}, None, _input_map(input_paths, args.in_dir)
    )

    filter_cfg = _filter_config(cfg)
    fixation_cfg = _fixation_config(cfg)
    per_trial = []
    for trace in aligned:
        report = sanity_check(trace, cfg["min_overlap_s"], cfg["max_gap_s"])
        reports.append(report)
        if report.verdict == "pass":
            per_trial.append(preprocess_trial(trace, filter_cfg, fixation_cfg))

    if cfg["expected_trials"] > 0:
        grouped: dict[str, list] = {}
        for report in reports:
            grouped.setdefault(report.participant_id, []).append(report)
        passing = {
            pid
            for pid, group in grouped.items()
            if participant_passes(group, cfg["expected_trials"])
        }
        per_trial = [s for s in per_trial if s.participant_id[0] in passing]

    if not per_trial:
        raise MissingInputError("no trials passed the sanity checks")
    signed = concat_shift_sets(per_trial)

    if args.symmetry_out:
        symmetry = {}
        for pid in signed.participants():
            try:
                symmetry[pid] = symmetry_check(signed.for_participant(pid)).to_dict()
            except (OneSidedDataError, EyeheadError) as exc:
                symmetry[pid] = {"error": type(exc).__name__, "message": str(exc)}
        write_json_object(args.symmetry_out, {"participants": symmetry}, provenance)

    clean = symmetrize_and_clean(signed, max_ecc=cfg["max_ecc_deg"])
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    write_shifts_csv(args.out, clean, provenance)

    sanity_path = args.sanity_out or os.path.join(
        os.path.dirname(os.path.abspath(args.out)), "sanity.jsonl"
    )
    with open(sanity_path, "w") as fh:
        fh.write(json.dumps({"provenance": provenance}, sort_keys=True) + "\n")
        for report in reports:
            fh.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ("model", "starts", "seed", "threads"))
    if cfg["model"] not in MODEL_ORDER + ("all",):
        raise ValueError(f"unknown model {cfg['model']!r}")
    models = MODEL_ORDER if cfg["model"] == "all" else (cfg["model"],)

    shifts = read_shifts_csv(args.in_path)
    # thread count is an execution detail: results are identical either
    # way, so it must not perturb the recorded configuration
    prov_cfg = {k: v for k, v in cfg.items() if k != "threads"}
    provenance = make_provenance(
        {"command": "fit", **prov_cfg},
        cfg["seed"],
        _input_map([args.in_path], os.path.dirname(os.path.abspath(args.in_path))),
    )
    fit_cfg = FitConfig(n_starts=cfg["starts"], seed=cfg["seed"])
    pids = shifts.participants()

    def fit_one(pid: str):
        sub = shifts.for_participant(pid)
        return fit_participant(sub.x, sub.y, pid, fit_cfg, models)

    if cfg["threads"] > 1:
        with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
            participant_fits = list(pool.map(fit_one, pids))
    else:
        participant_fits = [fit_one(pid) for pid in pids]

    rows = []
    for pfit in participant_fits:
        for model in models:
            rows.append(
                {"participant_id": pfit.participant_id, **pfit.fits[model].to_file_dict()}
            )
    write_json_array(args.out, rows, provenance)
    return 0


def _soft_hinge_curves(fit_rows: list[dict], grid=None):
    soft = [r for r in fit_rows if r.get("model") == "soft-hinge"]
    if not soft:
        raise MissingInputError("no soft-hinge fits in the input")
    params = [params_from_dict(r["params"]) for r in soft]
    curve_ids = [r["participant_id"] for r in soft]
    return sample_curves(params, curve_ids, grid=grid)


def cmd_fpca(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ("components",))
    rows, _ = read_json_array(args.in_path)
    curves = _soft_hinge_curves(rows)
    n_curves = len(curves.curve_ids)
    n_components = cfg["components"] or max(1, min(2, n_curves - 1))
    spectrum = fit_fpca(curves, n_components=n_components)
    provenance = make_provenance(
        {"command": "fpca", **cfg, "n_components": n_components},
        None,
        _input_map([args.in_path], os.path.dirname(os.path.abspath(args.in_path))),
    )
    write_json_object(args.out, spectrum.to_dict(), provenance)
    return 0


def _load_spectrum(path: str) -> Spectrum:
    with open(path) as fh:
        payload = json.load(fh)
    payload.pop("provenance", None)
    return Spectrum.from_dict(payload)


def cmd_project(args: argparse.Namespace) -> int:
    spectrum = _load_spectrum(args.model_path)
    rows, _ = read_json_array(args.in_path)
    curves = _soft_hinge_curves(rows, grid=spectrum.grid)
    table = score_table(spectrum, curves)
    provenance = make_provenance(
        {"command": "project"},
        None,
        _input_map(
            [args.model_path, args.in_path],
            os.path.dirname(os.path.abspath(args.in_path)),
        ),
    )
    write_csv_with_provenance(
        args.out,
        ["curve_id", "pc1", "pc2", "percentile_pc1"],
        [[r["curve_id"], r["pc1"], r["pc2"], r["percentile_pc1"]] for r in table],
        provenance,
    )
    return 0


def _read_scores_csv(path: str) -> list[dict]:
    import csv

    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = []
    for record in csv.DictReader(lines):
        rows.append(
            {
                "curve_id": record["curve_id"],
                "pc1": float(record["pc1"]),
                "pc2": float(record["pc2"]),
                "percentile_pc1": float(record["percentile_pc1"]),
            }
        )
    return rows


def cmd_report(args: argparse.Namespace) -> int:
    fit_rows, _ = read_json_array(args.fits)
    if not fit_rows:
        raise MissingInputError(f"{args.fits}: empty fit table")
    spectrum = _load_spectrum(args.spectrum)
    score_rows = _read_scores_csv(args.scores)
    provenance = make_provenance(
        {"command": "report"},
        None,
        _input_map(
            [args.fits, args.spectrum, args.scores],
            os.path.dirname(os.path.abspath(args.fits)),
        ),
    )
    emit_report(fit_rows, spectrum, score_rows, args.out_dir, provenance)
    return 0


SENSITIVITY_KEYS = PREPROCESS_KEYS + ("thresholds", "base_threshold", "starts", "seed")


def cmd_sensitivity(args: argparse.Namespace) -> int:
    cfg = _resolve(args, SENSITIVITY_KEYS)
    thresholds = tuple(float(v) for v in str(cfg["thresholds"]).split(","))
    aligned, _, input_paths = _load_aligned(args.in_dir)
    usable = [
        t
        for t in aligned
        if sanity_check(t, cfg["min_overlap_s"], cfg["max_gap_s"]).verdict == "pass"
    ]
    if not usable:
        raise MissingInputError("no trials passed the sanity checks")

    by_pid: dict[str, list] = {}
    for trace in usable:
        by_pid.setdefault(trace.participant_id, []).append(trace)

    fit_cfg = FitConfig(n_starts=cfg["starts"], seed=cfg["seed"])
    per_participant: dict[str, dict[str, float]] = {}
    for pid in sorted(by_pid):
        result = threshold_sensitivity(
            by_pid[pid],
            thresholds=thresholds,
            base=cfg["base_threshold"],
            filter_cfg=_filter_config(cfg),
            fixation_cfg=_fixation_config(cfg),
            fit_cfg=fit_cfg,
            participant_id=pid,
            max_ecc=cfg["max_ecc_deg"],
        )
        per_participant[pid] = {f"{thr:g}": r for thr, r in result.items()}

    medians = {
        f"{thr:g}": float(
            np.median([per_participant[pid][f"{thr:g}"] for pid in per_participant])
        )
        for thr in thresholds
    }
    provenance = make_provenance(
        {"command": "sensitivity", **cfg},
        cfg["seed"],
        _input_map(input_paths, args.in_dir),
    )
    write_json_object(
        args.out,
        {
            "base_threshold": cfg["base_threshold"],
            "thresholds": list(thresholds),
            "participants": per_participant,
            "median_r": medians,
        },
        provenance,
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _resolve(
        args, ("participants", "trials", "shifts", "noise_sd", "seed")
    )
    population = draw_population(cfg["participants"], seed=cfg["seed"])
    provenance = make_provenance({"command": "synth", **cfg}, cfg["seed"], {})

    traces_dir = os.path.join(args.out_dir, "traces")
    os.makedirs(traces_dir, exist_ok=True)
    truth: dict = {"population": {}, "trials": {}, "shift_truth": {}}
    shift_sets = []
    for pid, params in population:
        truth["population"][pid] = params_to_dict(params)
        shift_cfg = SynthConfig(
            params=params,
            n_shifts=cfg["trials"] * cfg["shifts"],
            noise_sd=cfg["noise_sd"],
            seed=cfg["seed"],
            participant_id=pid,
        )
        shifts, shift_truth = synth_shifts(shift_cfg)
        shift_sets.append(shifts)
        truth["shift_truth"][pid] = shift_truth
        truth["trials"][pid] = {}
        for j in range(cfg["trials"]):
            trial_id = f"t{j + 1:02d}"
            trace_cfg = SynthConfig(
                params=params,
                n_shifts=cfg["shifts"],
                seed=cfg["seed"],
                participant_id=pid,
                trial_id=trial_id,
                wrap_output=True,
            )
            gaze, head, trace_truth = synth_trace(trace_cfg)
            stem = os.path.join(traces_dir, f"{pid}_{trial_id}")
            write_trace_csv(stem + ".gaze.csv", gaze)
            write_trace_csv(stem + ".head.csv", head)
            truth["trials"][pid][trial_id] = trace_truth

    write_shifts_csv(
        os.path.join(args.out_dir, "shifts.csv"), concat_shift_sets(shift_sets), provenance
    )
    write_json_object(os.path.join(args.out_dir, "truth.json"), truth, provenance)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON file with default option values")


def _add_preprocess_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fix-threshold", dest="fix_threshold", type=float,
                   help="fixation velocity threshold (deg/s)")
    p.add_argument("--min-dur-ms", dest="min_dur_ms", type=float,
                   help="minimum fixation duration (ms)")
    p.add_argument("--pad-ms", dest="pad_ms", type=float,
                   help="padding applied around fixation bounds (ms)")
    p.add_argument("--merge-gap-ms", dest="merge_gap_ms", type=float,
                   help="merge fixations separated by less than this gap (ms)")
    p.add_argument("--max-ecc-deg", dest="max_ecc_deg", type=float,
                   help="drop shifts with eccentricity beyond this (deg)")
    p.add_argument("--min-cutoff", dest="min_cutoff", type=float,
                   help="smoothing filter minimum cutoff (Hz)")
    p.add_argument("--filter-beta", dest="filter_beta", type=float,
                   help="smoothing filter speed coefficient")
    p.add_argument("--derivative-cutoff", dest="derivative_cutoff", type=float,
                   help="smoothing filter derivative cutoff (Hz)")
    p.add_argument("--min-overlap-s", dest="min_overlap_s", type=float,
                   help="minimum gaze/head overlap to keep a trial (s)")
    p.add_argument("--max-gap-s", dest="max_gap_s", type=float,
                   help="maximum sampling gap to keep a trial (s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eyehead",
        description="Eye-head coordination pipeline: model fits and the mover spectrum.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="align traces and extract cleaned shifts")
    p.add_argument("--in-dir", required=True, help="directory of *.gaze.csv/*.head.csv pairs")
    p.add_argument("--out", required=True, help="output shift CSV")
    p.add_argument("--sanity-out", help="sanity report JSONL (default: sanity.jsonl next to --out)")
    p.add_argument("--symmetry-out", help="optional left/right symmetry JSON")
    p.add_argument("--expected-trials", dest="expected_trials", type=int,
                   help="drop participants without this many passing trials")
    _add_preprocess_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("fit", help="fit candidate models per participant")
    p.add_argument("--in", dest="in_path", required=True, help="cleaned shift CSV")
    p.add_argument("--out", required=True, help="output fit JSON")
    p.add_argument("--model", choices=MODEL_ORDER + ("all",), help="model family to fit")
    p.add_argument("--starts", type=int, help="random restarts per fit")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--threads", type=int, help="parallel workers across participants")
    _add_config_flag(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("fpca", help="build the population spectrum from fits")
    p.add_argument("--in", dest="in_path", required=True, help="fit JSON")
    p.add_argument("--out", required=True, help="output spectrum JSON")
    p.add_argument("--components", type=int, help="components to keep (default: up to 2)")
    _add_config_flag(p)
    p.set_defaults(func=cmd_fpca)

    p = sub.add_parser("project", help="score fitted curves against a spectrum")
    p.add_argument("--model", dest="model_path", required=True, help="spectrum JSON")
    p.add_argument("--in", dest="in_path", required=True, help="fit JSON")
    p.add_argument("--out", required=True, help="output score CSV")
    _add_config_flag(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("report", help="emit the analysis report bundle")
    p.add_argument("--fits", required=True, help="fit JSON")
    p.add_argument("--spectrum", required=True, help="spectrum JSON")
    p.add_argument("--scores", required=True, help="score CSV")
    p.add_argument("--out-dir", required=True, help="report output directory")
    _add_config_flag(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sensitivity", help="velocity-threshold robustness check")
    p.add_argument("--in-dir", required=True, help="directory of trace pairs")
    p.add_argument("--out", required=True, help="output JSON")
    p.add_argument("--thresholds", help="comma-separated thresholds (deg/s)")
    p.add_argument("--base-threshold", dest="base_threshold", type=float,
                   help="reference threshold (deg/s)")
    p.add_argument("--starts", type=int, help="random restarts per fit")
    p.add_argument("--seed", type=int, help="master seed")
    _add_preprocess_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("synth", help="generate ground-truth synthetic data")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--participants", type=int, help="synthetic participants")
    p.add_argument("--trials", type=int, help="trials per participant")
    p.add_argument("--shifts", type=int, help="gaze shifts per trial")
    p.add_argument("--noise-sd", dest="noise_sd", type=float,
                   help="vertical noise SD for the shift table (deg)")
    p.add_argument("--seed", type=int, help="master seed")
    _add_config_flag(p)
    p.set_defaults(func=cmd_synth)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EyeheadError, OSError, ValueError, json.JSONDecodeError, KeyError) as exc:
        payload = {
            "stage": args.command,
            "error": type(exc).__name__,
            "message": str(exc),
        }
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
