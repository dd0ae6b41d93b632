"""Command-line front end for reproducible experiments.

Subcommands: synth | solve | bench | cluster | reconstruct | check.  Every
run reads an optional flat ``key = value`` config file, applies flag
overrides, writes the fully resolved config next to its outputs, and emits
machine-readable artifacts (CSV traces, JSON reports).  Outputs are written
atomically.  Identical config and seed give byte-identical traces and
reports, except for the timing section of each report.

Exit codes: 0 success, 2 config error, 3 data error, 4 solver error,
5 check failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from .core import AdaptiveBeta, DataMatrix, FixedBeta, SignMatrix, SolverConfig, StiefelPoint
from .data import (
    GrayImage,
    center_features,
    corrupt_image,
    crop_to_grid,
    gen_synthetic,
    image_columns,
    parse_libsvm,
    read_csv_matrix,
    read_pgm,
    unstack_images,
    write_csv_matrix,
    write_pgm,
)
from .errors import (
    ConvergenceError,
    DomainError,
    FeasibilityError,
    InfeasibleBoundError,
    NumericError,
    ParseError,
    SelectionError,
    ShapeError,
)
from .linalg import random_stiefel
from .metrics import choose_k_energy, clustering_accuracy, kmeans, l2_baseline_energy, reconstruct, tev
from .solvers import (
    RunTrace,
    check_alpha_condition,
    criticality_residual,
    solve,
    sufficient_decrease_check,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4
EXIT_CHECK = 5

TRACE_HEADER = "k,phi,h,dP,dQ,gap"

_SOLVER_ERRORS = (ConvergenceError, NumericError, InfeasibleBoundError, SelectionError)


class CliError(Exception):
    """Failure with a chosen process exit code."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# option plumbing: config file + flag overrides -> one resolved dict

_REQUIRED = object()


def _parse_bool(text):
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (key, converter, default); _REQUIRED marks keys that must be supplied
_SOLVER_OPTS = [
    ("alpha", float, 1e-6),
    ("beta", float, None),
    ("beta_star", float, None),
    ("beta_sup", float, None),
    ("gamma", float, 1.0),
    ("max_iters", int, 1000),
    ("tol", float, 1e-6),
    ("seed", int, 0),
    ("theory", _parse_bool, False),
]

_OPTS = {
    "synth": [
        ("d", int, _REQUIRED),
        ("n", int, _REQUIRED),
        ("k", int, _REQUIRED),
        ("sigma", float, _REQUIRED),
        ("seed", int, 0),
    ],
    "solve": [
        ("data", str, None),
        ("libsvm", str, None),
        ("k", int, _REQUIRED),
        ("tev", _parse_bool, True),
    ]
    + _SOLVER_OPTS,
    "bench": [
        ("d", int, _REQUIRED),
        ("n", int, _REQUIRED),
        ("k", int, _REQUIRED),
        ("sigma", float, _REQUIRED),
        ("reps", int, 10),
        ("variants", str, "palme,palm"),
    ]
    + _SOLVER_OPTS,
    "cluster": [
        ("libsvm", str, _REQUIRED),
        ("k", int, None),
        ("threshold", float, 0.8),
        ("reps", int, 10),
    ]
    + _SOLVER_OPTS,
    "reconstruct": [
        ("image", str, None),
        ("corrupted", str, None),
        ("k", int, 2),
    ]
    + [
        (key, conv, {"max_iters": 1000, "tol": 1e-3}.get(key, default))
        for key, conv, default in _SOLVER_OPTS
        if key not in ("theory",)
    ],
    "check": [
        ("run", str, _REQUIRED),
        ("data", str, None),
    ],
}


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and # comments are ignored."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"cannot read config file: {exc}") from None
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise CliError(
                EXIT_CONFIG, f"config line {lineno}: expected key = value, got {line!r}"
            )
        values[key.strip()] = value.strip()
    return values


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config-file values, and flag overrides for a command."""
    table = _OPTS[command]
    known = {key for key, _, _ in table}
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = sorted(set(file_values) - known)
    if unknown:
        raise CliError(
            EXIT_CONFIG, f"config keys not recognized by {command}: {', '.join(unknown)}"
        )
    resolved = {}
    for key, convert, default in table:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in file_values:
            try:
                resolved[key] = convert(file_values[key])
            except ValueError as exc:
                raise CliError(EXIT_CONFIG, f"config key {key}: {exc}") from None
        elif default is _REQUIRED:
            raise CliError(EXIT_CONFIG, f"missing required setting: {key}")
        else:
            resolved[key] = default
    return resolved


def _format_config_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_resolved_config(out_dir: str, resolved: dict) -> None:
    lines = [
        f"{key} = {_format_config_value(value)}"
        for key, value in sorted(resolved.items())
        if value is not None
    ]
    _atomic_write_text(os.path.join(out_dir, "config.txt"), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# atomic file helpers


def _atomic_write_bytes(path: str, blob: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: str, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _write_json(path: str, payload: dict) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _csv_matrix_text(values) -> str:
    buf = io.StringIO()
    write_csv_matrix(values, buf)
    return buf.getvalue()


def _jsonable_float(value):
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def _ensure_out_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot create output directory: {exc}") from None
    return path


# ---------------------------------------------------------------------------
# shared build steps


def build_solver_config(resolved: dict) -> SolverConfig:
    fixed = resolved.get("beta")
    star, sup = resolved.get("beta_star"), resolved.get("beta_sup")
    if fixed is not None and (star is not None or sup is not None):
        raise CliError(EXIT_CONFIG, "give either beta or beta_star/beta_sup, not both")
    if fixed is not None:
        beta_mode = FixedBeta(fixed)
    elif star is not None and sup is not None:
        beta_mode = AdaptiveBeta(star, sup)
    elif star is None and sup is None:
        raise CliError(EXIT_CONFIG, "a beta setting is required: beta, or beta_star with beta_sup")
    else:
        raise CliError(EXIT_CONFIG, "beta_star and beta_sup must be given together")
    try:
        return SolverConfig(
            alpha=resolved["alpha"],
            beta_mode=beta_mode,
            gamma=resolved["gamma"],
            max_iters=resolved["max_iters"],
            tol=resolved["tol"],
            seed=resolved["seed"],
            theory_mode=resolved.get("theory", False),
        )
    except (DomainError, ShapeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"invalid solver settings: {exc}") from None


def load_feature_matrix(resolved: dict) -> DataMatrix:
    """Load and center the features named by ``data`` (CSV) or ``libsvm``."""
    data_path, libsvm_path = resolved.get("data"), resolved.get("libsvm")
    if (data_path is None) == (libsvm_path is None):
        raise CliError(EXIT_CONFIG, "give exactly one of data (CSV) or libsvm")
    try:
        if data_path is not None:
            raw = DataMatrix(read_csv_matrix(data_path))
        else:
            raw = parse_libsvm(libsvm_path).features
        return center_features(raw)
    except (OSError, ParseError, ShapeError, NumericError) as exc:
        raise CliError(EXIT_DATA, f"cannot load features: {exc}") from None


def trace_csv_text(trace: RunTrace) -> str:
    def step(value: float) -> str:
        return "" if math.isnan(value) else repr(float(value))

    lines = [TRACE_HEADER]
    for k in range(len(trace.phi)):
        lines.append(
            ",".join(
                (
                    str(k),
                    repr(float(trace.phi[k])),
                    repr(float(trace.h[k])),
                    step(trace.dP[k]),
                    step(trace.dQ[k]),
                    step(trace.gap[k]),
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_trace_csv(text: str) -> RunTrace:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        raise CliError(EXIT_DATA, f"trace file must start with header {TRACE_HEADER!r}")
    trace = RunTrace()
    for row_index, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != 6:
            raise CliError(EXIT_DATA, f"trace row {row_index}: expected 6 fields")
        try:
            k = int(parts[0])
            phi, h = float(parts[1]), float(parts[2])
            dP, dQ, gap = (float(p) if p else math.nan for p in parts[3:6])
        except ValueError:
            raise CliError(EXIT_DATA, f"trace row {row_index}: bad numeric field") from None
        if k != row_index:
            raise CliError(EXIT_DATA, f"trace row {row_index}: non-consecutive iteration {k}")
        trace.phi.append(phi)
        trace.h.append(h)
        trace.dP.append(dP)
        trace.dQ.append(dQ)
        trace.gap.append(gap)
    if not trace.phi:
        raise CliError(EXIT_DATA, "trace file holds no iterations")
    return trace


def _run_solver(X: DataMatrix, config: SolverConfig, init_Q: StiefelPoint, **kw):
    try:
        return solve(X, config, init_Q, **kw)
    except _SOLVER_ERRORS as exc:
        raise CliError(EXIT_SOLVER, f"solver failed: {exc}") from None
    except (FeasibilityError, ShapeError, DomainError) as exc:
        raise CliError(EXIT_CONFIG, f"solver rejected the setup: {exc}") from None


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    resolved = resolve_options("synth", args)
    out = _ensure_out_dir(args.out)
    try:
        X, truth = gen_synthetic(
            resolved["d"], resolved["n"], resolved["k"], resolved["sigma"], resolved["seed"]
        )
    except DomainError as exc:
        raise CliError(EXIT_CONFIG, f"invalid synthetic settings: {exc}") from None
    x_path = os.path.join(out, "X.csv")
    q_path = os.path.join(out, "Q_true.csv")
    _atomic_write_text(x_path, _csv_matrix_text(X.values))
    _atomic_write_text(q_path, _csv_matrix_text(truth.Q_true.values))
    manifest = {
        "command": "synth",
        "d": resolved["d"],
        "n": resolved["n"],
        "k": resolved["k"],
        "sigma": resolved["sigma"],
        "seed": resolved["seed"],
        "noiseless": truth.noiseless,
        "files": {
            "X.csv": {"sha256": _sha256(x_path)},
            "Q_true.csv": {"sha256": _sha256(q_path)},
        },
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    write_resolved_config(out, resolved)
    print(f"wrote {x_path} ({resolved['d']} x {resolved['n']}), Q_true, manifest")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def _solve_report_payload(resolved: dict, report, tev_value, config: SolverConfig) -> dict:
    return {
        "command": "solve",
        "config": {k: v for k, v in sorted(resolved.items()) if v is not None},
        "results": {
            "final_objective": float(report.final_objective),
            "iterations": int(report.iterations),
            "stop_reason": report.stop_reason,
            "final_gap": float(report.final_gap),
            "criticality": _jsonable_float(report.criticality),
            "alpha_condition_holds": bool(report.alpha_condition_holds),
            "tev": _jsonable_float(tev_value),
            "gamma_star": _jsonable_float(report.trace.gamma_star),
            "beta_star": float(config.beta_star),
            "files": {
                "trace": "trace.csv",
                "final_Q": "final_Q.csv",
                "final_P": "final_P.csv",
            },
        },
        "timing": {"wall_time_seconds": float(report.wall_time)},
    }


def cmd_solve(args) -> int:
    resolved = resolve_options("solve", args)
    out = _ensure_out_dir(args.out)
    config = build_solver_config(resolved)
    X = load_feature_matrix(resolved)
    try:
        init_Q = random_stiefel(X.d, resolved["k"], seed=resolved["seed"])
    except (DomainError, ShapeError) as exc:
        raise CliError(EXIT_CONFIG, f"invalid subspace dimension: {exc}") from None
    report = _run_solver(X, config, init_Q)
    tev_value = None
    if resolved["tev"]:
        try:
            tev_value = tev(X, report.final_Q)
        except DomainError:
            tev_value = None
    _atomic_write_text(os.path.join(out, "trace.csv"), trace_csv_text(report.trace))
    _atomic_write_text(
        os.path.join(out, "final_Q.csv"), _csv_matrix_text(report.final_Q.values)
    )
    _atomic_write_text(
        os.path.join(out, "final_P.csv"), _csv_matrix_text(report.final_P.values)
    )
    payload = _solve_report_payload(resolved, report, tev_value, config)
    _write_json(os.path.join(out, "report.json"), payload)
    write_resolved_config(out, resolved)
    print(
        f"stop={report.stop_reason} iters={report.iterations} "
        f"objective={report.final_objective:.6e} criticality={report.criticality:.3e}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_bench(args) -> int:
    resolved = resolve_options("bench", args)
    out = _ensure_out_dir(args.out)
    variants = [v.strip() for v in resolved["variants"].split(",") if v.strip()]
    if not variants:
        raise CliError(EXIT_CONFIG, "no solver variants configured")
    for variant in variants:
        if variant not in ("palme", "palm"):
            raise CliError(EXIT_CONFIG, f"unknown variant {variant!r} (use palme, palm)")
    if resolved["reps"] < 1:
        raise CliError(EXIT_CONFIG, "reps must be at least 1")
    base_config = build_solver_config(resolved)

    rows = []
    per_variant: dict[str, list[dict]] = {v: [] for v in variants}
    failures = 0
    total = 0
    for rep in range(resolved["reps"]):
        data_seed = resolved["seed"] + rep
        try:
            X, _ = gen_synthetic(
                resolved["d"], resolved["n"], resolved["k"], resolved["sigma"], data_seed
            )
        except DomainError as exc:
            raise CliError(EXIT_CONFIG, f"invalid synthetic settings: {exc}") from None
        baseline = l2_baseline_energy(X, resolved["k"])
        init_Q = random_stiefel(X.d, resolved["k"], seed=data_seed + 7919)
        for variant in variants:
            total += 1
            gamma = 0.0 if variant == "palm" else base_config.gamma
            config = SolverConfig(
                alpha=base_config.alpha,
                beta_mode=base_config.beta_mode,
                gamma=gamma,
                max_iters=base_config.max_iters,
                tol=base_config.tol,
                seed=base_config.seed,
                theory_mode=base_config.theory_mode,
            )
            try:
                report = solve(X, config, init_Q)
                quality = tev(X, report.final_Q, baseline=baseline)
                record = {
                    "variant": variant,
                    "rep": rep,
                    "data_seed": data_seed,
                    "status": "ok",
                    "tev": quality,
                    "iterations": report.iterations,
                    "wall_time": report.wall_time,
                    "stop_reason": report.stop_reason,
                    "error": "",
                }
                per_variant[variant].append(record)
            except (*_SOLVER_ERRORS, DomainError, FeasibilityError, ShapeError) as exc:
                failures += 1
                record = {
                    "variant": variant,
                    "rep": rep,
                    "data_seed": data_seed,
                    "status": "error",
                    "tev": None,
                    "iterations": None,
                    "wall_time": None,
                    "stop_reason": "",
                    "error": str(exc),
                }
            rows.append(record)

    header = ["variant", "rep", "data_seed", "status", "tev", "iterations",
              "wall_time", "stop_reason", "error"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[col]) for col in header))
    for variant in variants:
        good = per_variant[variant]
        if not good:
            continue
        lines.append(
            ",".join(
                (
                    variant,
                    "mean",
                    "",
                    "ok",
                    repr(float(np.mean([r["tev"] for r in good]))),
                    repr(float(np.mean([r["iterations"] for r in good]))),
                    repr(float(np.mean([r["wall_time"] for r in good]))),
                    "",
                    "",
                )
            )
        )
    _atomic_write_text(os.path.join(out, "bench.csv"), "\n".join(lines) + "\n")

    if "palme" in variants and "palm" in variants:
        by_rep = {
            (row["variant"], row["rep"]): row for row in rows if row["status"] == "ok"
        }
        paired = ["rep,data_seed,tev_palme,tev_palm,tev_delta"]
        for rep in range(resolved["reps"]):
            a = by_rep.get(("palme", rep))
            b = by_rep.get(("palm", rep))
            if a is None or b is None:
                continue
            paired.append(
                ",".join(
                    (
                        str(rep),
                        str(a["data_seed"]),
                        repr(float(a["tev"])),
                        repr(float(b["tev"])),
                        repr(float(a["tev"] - b["tev"])),
                    )
                )
            )
        _atomic_write_text(os.path.join(out, "paired.csv"), "\n".join(paired) + "\n")

    write_resolved_config(out, resolved)
    for variant in variants:
        good = per_variant[variant]
        if good:
            mean_tev = float(np.mean([r["tev"] for r in good]))
            print(f"{variant}: mean tev {mean_tev:.6f} over {len(good)} runs")
        else:
            print(f"{variant}: all runs failed")
    if failures == total:
        raise CliError(EXIT_SOLVER, "all benchmark runs failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# cluster


def cmd_cluster(args) -> int:
    resolved = resolve_options("cluster", args)
    out = _ensure_out_dir(args.out)
    if resolved["k"] is not None and resolved["k"] < 2:
        raise CliError(EXIT_CONFIG, "k must be at least 2")
    config = build_solver_config(resolved)
    try:
        dataset = parse_libsvm(resolved["libsvm"])
    except (OSError, ParseError) as exc:
        raise CliError(EXIT_DATA, f"cannot load dataset: {exc}") from None
    n_clusters = len(np.unique(dataset.labels))
    if n_clusters < 2:
        raise CliError(EXIT_DATA, "dataset holds a single class; nothing to cluster")
    X = center_features(dataset.features)
    if resolved["k"] is not None:
        K = resolved["k"]
        k_rule = "flag"
    else:
        try:
            K = choose_k_energy(X, threshold=resolved["threshold"])
        except DomainError as exc:
            raise CliError(EXIT_DATA, f"energy rule failed: {exc}") from None
        K = max(K, 2)
        k_rule = "energy"
    accuracies, iterations = [], []
    wall_times = []
    for rep in range(resolved["reps"]):
        rep_seed = resolved["seed"] + rep
        try:
            init_Q = random_stiefel(X.d, K, seed=rep_seed)
        except (DomainError, ShapeError) as exc:
            raise CliError(EXIT_CONFIG, f"invalid subspace dimension: {exc}") from None
        started = time.perf_counter()
        report = _run_solver(X, config, init_Q, snapshots=False)
        projected = report.final_Q.values.T @ X.values
        predicted = kmeans(projected, n_clusters, seed=rep_seed, restarts=10)
        wall_times.append(time.perf_counter() - started)
        accuracies.append(clustering_accuracy(predicted, dataset.labels))
        iterations.append(report.iterations)
    payload = {
        "command": "cluster",
        "config": {k: v for k, v in sorted(resolved.items()) if v is not None},
        "results": {
            "subspace_dim": int(K),
            "subspace_dim_rule": k_rule,
            "clusters": int(n_clusters),
            "samples": int(X.n),
            "accuracies": [float(a) for a in accuracies],
            "mean_accuracy": float(np.mean(accuracies)),
            "iterations": [int(i) for i in iterations],
        },
        "timing": {
            "wall_time_seconds": float(sum(wall_times)),
            "per_rep_seconds": [float(w) for w in wall_times],
        },
    }
    _write_json(os.path.join(out, "report.json"), payload)
    write_resolved_config(out, resolved)
    print(
        f"K={K} ({k_rule}) clusters={n_clusters} "
        f"mean accuracy {float(np.mean(accuracies)):.4f} over {resolved['reps']} reps"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct


def _load_corrupted_dir(path: str) -> list[GrayImage]:
    try:
        names = sorted(
            name for name in os.listdir(path) if name.lower().endswith(".pgm")
        )
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot list corrupted directory: {exc}") from None
    if len(names) != 9:
        raise CliError(
            EXIT_DATA, f"corrupted directory must hold exactly 9 PGM files, found {len(names)}"
        )
    images = []
    for name in names:
        try:
            images.append(read_pgm(os.path.join(path, name)))
        except (OSError, ParseError) as exc:
            raise CliError(EXIT_DATA, f"cannot read {name}: {exc}") from None
    return images


def cmd_reconstruct(args) -> int:
    resolved = resolve_options("reconstruct", args)
    out = _ensure_out_dir(args.out)
    if resolved["image"] is None and resolved["corrupted"] is None:
        raise CliError(EXIT_CONFIG, "give a clean image, a corrupted directory, or both")
    if all(resolved[key] is None for key in ("beta", "beta_star", "beta_sup")):
        resolved["beta"] = 100.0
    config = build_solver_config(resolved)

    clean = None
    if resolved["image"] is not None:
        try:
            clean = read_pgm(resolved["image"])
        except (OSError, ParseError) as exc:
            raise CliError(EXIT_DATA, f"cannot read clean image: {exc}") from None
        try:
            clean = crop_to_grid(clean)
        except ShapeError as exc:
            raise CliError(EXIT_DATA, f"clean image unusable: {exc}") from None

    if resolved["corrupted"] is not None:
        corrupted = _load_corrupted_dir(resolved["corrupted"])
    else:
        corrupted = [
            corrupt_image(clean, block, np.random.default_rng([resolved["seed"], block]))
            for block in range(1, 10)
        ]
        for block, image in enumerate(corrupted, start=1):
            _atomic_write_bytes(
                os.path.join(out, f"corrupted_{block}.pgm"), _pgm_bytes(image)
            )

    try:
        columns = image_columns(corrupted)
    except ShapeError as exc:
        raise CliError(EXIT_DATA, f"corrupted images disagree: {exc}") from None
    if clean is not None and clean.pixels.shape != corrupted[0].pixels.shape:
        raise CliError(
            EXIT_DATA,
            f"clean image is {clean.pixels.shape} but corrupted are "
            f"{corrupted[0].pixels.shape}",
        )
    means = columns.mean(axis=1, keepdims=True)
    X = DataMatrix(columns - means, centered=True)
    try:
        init_Q = random_stiefel(X.d, resolved["k"], seed=resolved["seed"])
    except (DomainError, ShapeError) as exc:
        raise CliError(EXIT_CONFIG, f"invalid subspace dimension: {exc}") from None
    report = _run_solver(X, config, init_Q, snapshots=False)
    rebuilt = reconstruct(X, report.final_Q).values + means
    rebuilt = np.clip(rebuilt, 0.0, 255.0)
    height, width = corrupted[0].pixels.shape
    images = unstack_images(rebuilt, height, width)
    rmse = None
    for index, image in enumerate(images, start=1):
        _atomic_write_bytes(os.path.join(out, f"recon_{index}.pgm"), _pgm_bytes(image))
    if clean is not None:
        rmse = [
            float(np.sqrt(np.mean((image.pixels - clean.pixels) ** 2)))
            for image in images
        ]
    payload = {
        "command": "reconstruct",
        "config": {k: v for k, v in sorted(resolved.items()) if v is not None},
        "results": {
            "image_shape": [int(height), int(width)],
            "iterations": int(report.iterations),
            "stop_reason": report.stop_reason,
            "final_objective": float(report.final_objective),
            "rmse": rmse,
            "mean_rmse": float(np.mean(rmse)) if rmse is not None else None,
            "files": [f"recon_{i}.pgm" for i in range(1, 10)],
        },
        "timing": {"wall_time_seconds": float(report.wall_time)},
    }
    _write_json(os.path.join(out, "report.json"), payload)
    write_resolved_config(out, resolved)
    if rmse is not None:
        print(f"mean rmse {float(np.mean(rmse)):.4f} over 9 images")
    else:
        print("reconstructed 9 images (no clean reference, rmse skipped)")
    return EXIT_OK


def _pgm_bytes(image: GrayImage) -> bytes:
    buf = io.BytesIO()
    write_pgm(image, buf, binary=True)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# check


def _load_report(run_dir: str) -> dict:
    path = os.path.join(run_dir, "report.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot read report: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_DATA, f"corrupt report JSON: {exc}") from None
    for key in ("command", "config", "results"):
        if key not in payload:
            raise CliError(EXIT_DATA, f"corrupt report: missing {key!r}")
    if payload["command"] != "solve":
        raise CliError(EXIT_DATA, "check needs a solve run directory")
    return payload


def cmd_check(args) -> int:
    resolved = resolve_options("check", args)
    run_dir = resolved["run"]
    payload = _load_report(run_dir)
    stored_config = payload["config"]
    results = payload["results"]

    if resolved["data"] is not None:
        stored_config = dict(stored_config)
        stored_config["data"] = resolved["data"]
        stored_config.pop("libsvm", None)
    if stored_config.get("data") is None and stored_config.get("libsvm") is None:
        raise CliError(EXIT_DATA, "report config names no dataset; pass --data")
    X = load_feature_matrix(
        {"data": stored_config.get("data"), "libsvm": stored_config.get("libsvm")}
    )
    try:
        final_Q = StiefelPoint(read_csv_matrix(os.path.join(run_dir, "final_Q.csv")))
        final_P = SignMatrix(read_csv_matrix(os.path.join(run_dir, "final_P.csv")))
    except (OSError, ParseError, FeasibilityError, ShapeError, NumericError) as exc:
        raise CliError(EXIT_DATA, f"corrupt run artifacts: {exc}") from None

    checks: list[tuple[str, bool, str]] = []

    bound = 1e-5 * (1.0 + float(np.linalg.norm(X.values)))
    try:
        residual = criticality_residual(final_Q, final_P, X)
        checks.append(
            (
                "criticality",
                residual <= bound,
                f"residual {residual:.3e} vs bound {bound:.3e}",
            )
        )
    except SelectionError as exc:
        residual = math.nan
        checks.append(("criticality", False, f"sign block inconsistent: {exc}"))

    stored = results.get("criticality")
    if stored is None or math.isnan(residual):
        consistent, detail = stored is None and math.isnan(residual), "stored value missing"
        if not math.isnan(residual):
            detail = f"recomputed {residual:.3e} but report stores null"
        checks.append(("report consistency", consistent, detail))
    else:
        drift = abs(residual - float(stored))
        checks.append(
            (
                "report consistency",
                drift <= 1e-8 * (1.0 + abs(float(stored))),
                f"stored {float(stored):.3e}, recomputed {residual:.3e}",
            )
        )

    try:
        alpha = float(stored_config["alpha"])
        holds = check_alpha_condition(X, final_Q, alpha)
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_DATA, f"corrupt report config: {exc}") from None
    print(f"alpha condition: {'holds' if holds else 'does not hold'} (informational)")

    theory = bool(stored_config.get("theory", False))
    if theory:
        try:
            with open(os.path.join(run_dir, "trace.csv"), "r", encoding="utf-8") as fh:
                trace = parse_trace_csv(fh.read())
        except OSError as exc:
            raise CliError(EXIT_DATA, f"cannot read trace: {exc}") from None
        trace.gamma_star = results.get("gamma_star")
        try:
            config = SolverConfig(
                alpha=alpha,
                beta_mode=AdaptiveBeta(
                    float(stored_config["beta_star"]), float(stored_config["beta_sup"])
                ),
                gamma=float(stored_config.get("gamma", 1.0)),
                max_iters=int(stored_config.get("max_iters", 1000)),
                tol=float(stored_config.get("tol", 1e-6)),
                seed=int(stored_config.get("seed", 0)),
                theory_mode=True,
            )
        except (KeyError, ValueError, TypeError, DomainError) as exc:
            raise CliError(EXIT_DATA, f"corrupt report config: {exc}") from None
        audit = sufficient_decrease_check(trace, config, X=X)
        checks.append(
            (
                "sufficient decrease",
                len(audit.violations) == 0,
                f"{len(audit.violations)} violations over {audit.checked} steps",
            )
        )
    else:
        print("sufficient decrease: skipped (practical run)")

    failed = False
    for name, passed, detail in checks:
        print(f"{name}: {'PASS' if passed else 'FAIL'} ({detail})")
        failed = failed or not passed
    if failed:
        raise CliError(EXIT_CHECK, "one or more checks failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _add_option_flags(parser: argparse.ArgumentParser, command: str) -> None:
    for key, convert, _default in _OPTS[command]:
        flag = "--" + key.replace("_", "-")
        if convert is _parse_bool:
            parser.add_argument(
                flag, dest=key, action=argparse.BooleanOptionalAction, default=None
            )
        else:
            parser.add_argument(flag, dest=key, type=convert, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l1subspace",
        description="Robust L1 subspace estimation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "synth": "generate a synthetic dataset with planted subspace",
        "solve": "run the solver on a dataset and write report plus trace",
        "bench": "compare solver variants on repeated synthetic datasets",
        "cluster": "subspace projection plus k-means accuracy on labeled data",
        "reconstruct": "corrupt, stack, and reconstruct a grayscale image",
        "check": "re-verify a finished solve run",
    }
    for command in ("synth", "solve", "bench", "cluster", "reconstruct", "check"):
        cmd_parser = sub.add_parser(command, help=descriptions[command])
        cmd_parser.add_argument("--config", default=None, help="flat key = value file")
        if command != "check":
            cmd_parser.add_argument("--out", required=True, help="output directory")
        _add_option_flags(cmd_parser, command)
    return parser


_HANDLERS = {
    "synth": cmd_synth,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "cluster": cmd_cluster,
    "reconstruct": cmd_reconstruct,
    "check": cmd_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
