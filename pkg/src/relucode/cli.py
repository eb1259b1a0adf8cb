"""Command-line driver.

Subcommands are thin wrappers over the library modules; every run that
produces files also drops a JSON manifest recording the resolved options,
input hashes, tool version, and wall-clock duration. Exit codes: 0 success,
2 usage or validation problem, 3 a sampled property failed, 4 numerical
failure inside a solver or training run.

Randomized commands require an explicit --seed; there are no entropy
defaults anywhere.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .codes import codes_of_batch, load_codes, load_codes_text, save_codes, save_codes_text
from .dataio import load_dataset, load_labels
from .errors import NumericalFailureError, TrainingDivergedError, ValidationError
from .network import load_network
from .polyhedra import prune_redundant, region_of, save_ine, save_json
from .tessellation import (
    adjacency_graph,
    census_series,
    distance_matrix,
    grid_code_map_json,
    grid_tessellation,
    grid_to_csv,
    grid_to_pgm,
    summary_rows,
    write_summary_csv,
)
from .trainer import load_train_config, predict_with_head, train
from .verify import duality_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROPERTY = 3
EXIT_NUMERICAL = 4


def _resolve_threads(value) -> int:
    if value is not None:
        n = value
    else:
        raw = os.environ.get("RELUCODE_THREADS", "1")
        try:
            n = int(raw)
        except ValueError:
            raise ValidationError(
                f"RELUCODE_THREADS must be an integer, got {raw!r}"
            ) from None
    if n < 1:
        raise ValidationError(f"thread count must be >= 1, got {n}")
    return n


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(command: str, args, inputs, target, started: float) -> None:
    """target: output directory (manifest.json inside) or file (.manifest.json)."""
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func" and not callable(v)
    }
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "version": __version__,
        "duration_s": round(time.monotonic() - started, 6),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    target = Path(target)
    out = target / "manifest.json" if target.is_dir() else Path(
        str(target) + ".manifest.json"
    )
    out.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")


def _load_codes_any(path):
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"RCC1":
        return load_codes(path)
    return load_codes_text(path)


def _parse_floats(text: str, what: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError:
        raise ValidationError(f"cannot parse {what} from {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_codes(args) -> int:
    started = time.monotonic()
    net = load_network(args.net)
    X, _ = load_dataset(args.data)
    if X.shape[1] != net.input_dim:
        raise ValidationError(
            f"network expects {net.input_dim} inputs, dataset has {X.shape[1]} columns"
        )
    threads = _resolve_threads(args.threads)
    codes = codes_of_batch(net, X, threads=threads)
    out = Path(args.out)
    if args.format == "text":
        save_codes_text(codes, out)
    else:
        save_codes(codes, out)
    print(f"N: {net.total_neurons}")
    print(f"points: {len(X)}")
    print(f"distinct codes: {len(set(codes))}")
    _write_manifest("codes", args, [args.net, args.data], out, started)
    return EXIT_OK


def cmd_census(args) -> int:
    started = time.monotonic()
    paths = sorted(Path(p) for p in glob.glob(args.checkpoints))
    paths = [p for p in paths if not p.name.endswith(".head.rcw")]
    if not paths:
        raise ValidationError(f"no checkpoints match {args.checkpoints!r}")
    X, ds_labels = load_dataset(args.data)
    labels = load_labels(args.labels) if args.labels else ds_labels

    predictions = None
    if labels is not None:
        sidecars = [p.with_name(p.name[: -len(".rcw")] + ".head.rcw") for p in paths]
        if all(s.exists() for s in sidecars):
            predictions = [
                predict_with_head(load_network(p), load_network(s), X)
                for p, s in zip(paths, sidecars)
            ]

    threads = _resolve_threads(args.threads)
    censuses = census_series(
        paths, X, labels=labels, predictions_per_checkpoint=predictions,
        threads=threads,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path, cen in zip(paths, censuses):
        cell_rows = ["code,count,correct_count"]
        for code, stats in cen.entries.items():
            cell_rows.append(
                f"{code.to01(layer_sep='|')},{stats.count},{stats.correct_count}"
            )
        (out_dir / f"{path.stem}.cells.csv").write_text(
            "\n".join(cell_rows) + "\n", encoding="utf-8"
        )
    write_summary_csv(censuses, out_dir / "summary.csv")

    from .report import save_census_figure

    save_census_figure([("run", summary_rows(censuses))], out_dir / "census.png")
    for epoch, distinct, correct, size in summary_rows(censuses):
        print(f"epoch {epoch}: {distinct} distinct codes ({correct} correct) of {size}")
    inputs = [args.data, *paths] + ([args.labels] if args.labels else [])
    _write_manifest("census", args, inputs, out_dir, started)
    return EXIT_OK


def cmd_region(args) -> int:
    started = time.monotonic()
    net = load_network(args.net)
    x = _parse_floats(args.point, "point")
    if len(x) != net.input_dim:
        raise ValidationError(
            f"network expects {net.input_dim} coordinates, point has {len(x)}"
        )
    P = region_of(net, x)
    if args.prune:
        P = prune_redundant(P)
    out = Path(args.out)
    save_json(P, out)
    save_ine(P, out.with_suffix(".ine"))
    print(f"rows: {P.n_rows}")
    print(f"dim: {P.dim}")
    _write_manifest("region", args, [args.net], out, started)
    return EXIT_OK


def cmd_adjacency(args) -> int:
    started = time.monotonic()
    codes = _load_codes_any(args.codes)
    graph = adjacency_graph(codes)
    out = Path(args.out)
    lines = ["a,b"]
    lines += [f"{a},{b}" for a, b in graph.edges]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"nodes: {len(graph.nodes)}")
    print(f"edges: {len(graph.edges)}")
    _write_manifest("adjacency", args, [args.codes], out, started)
    return EXIT_OK


def cmd_distmat(args) -> int:
    started = time.monotonic()
    theta = math.inf if args.theta.lower() in ("inf", "infinity") else int(args.theta)
    codes = _load_codes_any(args.codes)
    out = Path(args.out)
    dist = distance_matrix(codes, theta=theta, path=out)
    print(f"codes: {dist.shape[0]}")
    print(f"max distance: {int(dist.max())}")
    _write_manifest("distmat", args, [args.codes], out, started)
    return EXIT_OK


def cmd_grid(args) -> int:
    started = time.monotonic()
    net = load_network(args.net)
    bounds = _parse_floats(args.bounds, "bounds")
    if len(bounds) not in (2, 4):
        raise ValidationError(
            f"bounds must be 'lo,hi' or 'x_lo,x_hi,y_lo,y_hi', got {args.bounds!r}"
        )
    bounds = tuple(bounds) if len(bounds) == 2 else (
        (bounds[0], bounds[1]), (bounds[2], bounds[3])
    )
    threads = _resolve_threads(args.threads)
    grid = grid_tessellation(net, bounds, args.res, threads=threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid_to_csv(grid, out_dir / "grid.csv")
    grid_to_pgm(grid, out_dir / "grid.pgm")
    grid_code_map_json(grid, out_dir / "codes.json")
    pair_lines = ["id_a,id_b,distance"]
    pair_lines += [f"{a},{b},{d}" for a, b, d in grid.neighbor_pairs]
    (out_dir / "neighbors.csv").write_text("\n".join(pair_lines) + "\n", encoding="utf-8")

    from .report import save_grid_figure

    save_grid_figure(grid, out_dir / "grid.png")
    dist1 = sum(1 for _, _, d in grid.neighbor_pairs if d == 1)
    print(f"distinct codes: {grid.distinct_codes}")
    print(f"neighbor pairs: {len(grid.neighbor_pairs)} ({dist1} at distance 1)")
    _write_manifest("grid", args, [args.net], out_dir, started)
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.monotonic()
    config = load_train_config(args.config)
    result = train(config)

    from .report import save_training_figure

    save_training_figure(result.metrics, config.checkpoint_dir / "training.png")
    final_epoch, final_loss, final_acc = result.metrics[-1]
    print(f"checkpoints: {len(result.checkpoint_paths)}")
    print(f"final epoch {final_epoch}: loss {final_loss:.6f}, accuracy {final_acc:.4f}")
    _write_manifest("train", args, [args.config], config.checkpoint_dir, started)
    return EXIT_OK


def cmd_verify(args) -> int:
    net = load_network(args.net)
    report = duality_suite(
        net, args.samples, seed=args.seed, box=args.box, margin=args.margin
    )
    print(f"samples kept: {report.samples_used}/{report.samples_drawn}")
    print(
        f"self-containment: "
        f"{report.containment_checks - sum(1 for f in report.failures if f.kind == 'self_containment')}"
        f"/{report.containment_checks}"
    )
    print(
        f"pair biconditional: "
        f"{report.pair_checks - sum(1 for f in report.failures if f.kind == 'pair_mismatch')}"
        f"/{report.pair_checks} ({report.equal_code_pairs} equal-code pairs)"
    )
    if not report.ok:
        for f in report.failures[:5]:
            print(f"FAIL [{f.kind}] {f.detail}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relucode",
        description="Activation codes, cells, and tessellation analysis for ReLU networks.",
    )
    parser.add_argument("--version", action="version", version=f"relucode {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codes", help="extract activation codes for a dataset")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["rcc", "text"], default="rcc")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_codes)

    p = sub.add_parser("census", help="per-checkpoint distinct-code census")
    p.add_argument("--checkpoints", required=True, help="glob over .rcw files")
    p.add_argument("--data", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("region", help="H-representation of the cell containing a point")
    p.add_argument("--net", required=True)
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--out", required=True)
    p.add_argument("--prune", action="store_true")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("adjacency", help="distance-1 graph over stored codes")
    p.add_argument("--codes", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_adjacency)

    p = sub.add_parser("distmat", help="pairwise truncated-Hamming matrix")
    p.add_argument("--codes", required=True)
    p.add_argument("--theta", required=True, help="positive integer or 'inf'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distmat)

    p = sub.add_parser("grid", help="rasterize the cell structure of a 2-D net")
    p.add_argument("--net", required=True)
    p.add_argument("--bounds", required=True, help="'lo,hi' or 'x_lo,x_hi,y_lo,y_hi'")
    p.add_argument("--res", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("train", help="run the reference trainer from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="sampled code/cell correspondence checks")
    p.add_argument("--net", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--box", type=float, default=3.0)
    p.add_argument("--margin", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NumericalFailureError, TrainingDivergedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
