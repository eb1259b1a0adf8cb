"""Dataset-level tessellation analysis.

Counts the distinct activation-sign codes a dataset occupies (per training
checkpoint), builds adjacency graphs on observed codes, exports pairwise
distance matrices for external embedding tools, and rasterizes the cell
structure of 2-D networks on a regular grid.

Distinct-code counting uses exact bit equality of the packed words; code
equality is cell identity, so no tolerance is meaningful. Pairwise distance
computation is blocked over 64-bit words with early exit at the truncation
threshold; full matrices are capped (20,000 codes by default).
"""

from __future__ import annotations

import json
import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codes import (
    Code,
    _check_threshold,
    code_words_batch,
    codes_of_batch,
    popcount_words,
)
from .errors import IncompatibleCodesError, SeriesError, ShapeError, ValidationError
from .network import ReluNetwork, load_network

RCD1_MAGIC = b"RCD1"

DEFAULT_MATRIX_CAP = 20000


@dataclass
class CellStats:
    """Occupancy of one cell: total points, per-label points, correct points."""

    count: int = 0
    per_class_counts: dict = field(default_factory=dict)
    correct_count: int = 0


@dataclass
class CellCensus:
    """Cell occupancy statistics of one dataset under one network."""

    entries: dict  # Code -> CellStats
    dataset_size: int
    epoch_tag: int | None = None

    @property
    def distinct_codes(self) -> int:
        return len(self.entries)

    @property
    def distinct_codes_correct(self) -> int:
        """Cells containing at least one correctly classified point."""
        return sum(1 for s in self.entries.values() if s.correct_count > 0)


def census(
    net: ReluNetwork,
    points,
    labels=None,
    predictions=None,
    epoch_tag=None,
    threads: int = 1,
) -> CellCensus:
    """Group a dataset by activation-sign code.

    labels enables per-class counts; predictions (requires labels) marks
    points correct when prediction == label. Deterministic: entry insertion
    order follows first occurrence in the dataset.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValidationError("dataset must be a non-empty (n, m) array")
    if labels is not None and len(labels) != len(points):
        raise ValidationError(
            f"{len(labels)} labels for {len(points)} points"
        )
    if predictions is not None:
        if labels is None:
            raise ValidationError("predictions require labels to compare against")
        if len(predictions) != len(points):
            raise ValidationError(
                f"{len(predictions)} predictions for {len(points)} points"
            )
    codes = codes_of_batch(net, points, threads=threads)
    entries: dict[Code, CellStats] = {}
    for idx, c in enumerate(codes):
        stats = entries.setdefault(c, CellStats())
        stats.count += 1
        if labels is not None:
            lab = labels[idx]
            lab = int(lab) if not isinstance(lab, str) else lab
            stats.per_class_counts[lab] = stats.per_class_counts.get(lab, 0) + 1
            if predictions is not None and predictions[idx] == labels[idx]:
                stats.correct_count += 1
    return CellCensus(entries, len(points), epoch_tag)


def _epoch_tag_of(path, fallback: int) -> int:
    m = re.search(r"(\d+)", Path(path).stem)
    return int(m.group(1)) if m else fallback


def census_series(
    checkpoint_paths,
    points,
    labels=None,
    predictions_per_checkpoint=None,
    threads: int = 1,
) -> list[CellCensus]:
    """One census per checkpoint, in input order.

    All checkpoints must share the architecture of the first (codes are then
    comparable per-epoch; fingerprints still differ). The epoch tag is the
    first digit group in the filename, else the list position.
    """
    paths = [Path(p) for p in checkpoint_paths]
    if not paths:
        raise SeriesError("empty checkpoint list")
    if predictions_per_checkpoint is not None and len(
        predictions_per_checkpoint
    ) != len(paths):
        raise SeriesError(
            f"{len(predictions_per_checkpoint)} prediction sets for {len(paths)} checkpoints"
        )
    out = []
    ref_arch = None
    for i, p in enumerate(paths):
        net = load_network(p)
        arch = (net.input_dim, net.widths)
        if ref_arch is None:
            ref_arch = arch
        elif arch != ref_arch:
            raise SeriesError(
                f"checkpoint {p}: architecture {arch[0]}->{list(arch[1])} differs "
                f"from first checkpoint {ref_arch[0]}->{list(ref_arch[1])}"
            )
        preds = (
            predictions_per_checkpoint[i]
            if predictions_per_checkpoint is not None
            else None
        )
        out.append(
            census(
                net,
                points,
                labels=labels,
                predictions=preds,
                epoch_tag=_epoch_tag_of(p, i),
                threads=threads,
            )
        )
    return out


def summary_rows(censuses) -> list[tuple[int, int, int, int]]:
    """(epoch, distinct_codes, distinct_codes_correct, dataset_size) per census."""
    return [
        (
            c.epoch_tag if c.epoch_tag is not None else i,
            c.distinct_codes,
            c.distinct_codes_correct,
            c.dataset_size,
        )
        for i, c in enumerate(censuses)
    ]


def write_summary_csv(censuses, path) -> Path:
    path = Path(path)
    lines = ["epoch,distinct_codes,distinct_codes_correct,dataset_size"]
    for row in summary_rows(censuses):
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


# ---------------------------------------------------------------------------
# pairwise distances


def _codes_to_words(codes) -> tuple[np.ndarray, int, int]:
    codes = list(codes)
    if not codes:
        raise ValidationError("empty code collection")
    first = codes[0]
    for c in codes[1:]:
        if c.n_bits != first.n_bits or c.net_fingerprint != first.net_fingerprint:
            raise IncompatibleCodesError(
                "codes must share length and network fingerprint"
            )
    words = np.asarray([c.words for c in codes], dtype=np.uint64)
    return words, first.n_bits, first.net_fingerprint


def pairwise_distances(
    words: np.ndarray,
    theta=math.inf,
    block_size: int = 512,
) -> np.ndarray:
    """Blocked truncated-Hamming matrix over packed word rows (uint32).

    Accumulates word by word; once every pair of a block has reached theta
    the remaining words are skipped.
    """
    theta = _check_threshold(theta)
    n, n_words = words.shape
    out = np.empty((n, n), dtype=np.uint32)
    for i0 in range(0, n, block_size):
        blk = words[i0 : i0 + block_size]
        acc = np.zeros((blk.shape[0], n), dtype=np.uint32)
        for w in range(n_words):
            acc += popcount_words(blk[:, w][:, None] ^ words[:, w][None, :]).astype(
                np.uint32
            )
            if theta is not math.inf and acc.min() >= theta:
                break
        if theta is not math.inf:
            np.minimum(acc, np.uint32(theta), out=acc)
        out[i0 : i0 + blk.shape[0]] = acc
    return out


@dataclass(frozen=True)
class AdjacencyGraph:
    """Observed codes plus the edges between Hamming-distance-1 pairs."""

    nodes: tuple[Code, ...]
    edges: tuple[tuple[int, int], ...]


def adjacency_graph(codes, theta: float = 2) -> AdjacencyGraph:
    """Edges join exactly the code pairs at Hamming distance 1.

    theta only tunes the early-exit bound of the pair scan and must be >= 2
    so distance-1 pairs survive truncation. Duplicate input codes collapse
    to one node (first-occurrence order).
    """
    if theta != math.inf and theta < 2:
        raise ValidationError(f"theta must be >= 2 for adjacency, got {theta}")
    unique = list(dict.fromkeys(codes))
    words, _, _ = _codes_to_words(unique)
    dist = pairwise_distances(words, theta=theta)
    ii, jj = np.nonzero(np.triu(dist == 1, k=1))
    edges = tuple((int(i), int(j)) for i, j in zip(ii, jj))
    return AdjacencyGraph(tuple(unique), edges)


def distance_matrix(
    codes,
    theta=math.inf,
    path=None,
    fmt: str | None = None,
    max_codes: int = DEFAULT_MATRIX_CAP,
) -> np.ndarray:
    """Full truncated-distance matrix, optionally written to disk.

    fmt "csv" writes plain integer CSV; "rcd1" writes the binary form
    (magic RCD1, u32 n, n^2 little-endian u16) and requires every possible
    value, min(N, theta), to fit in 16 bits. fmt defaults by extension
    (.rcd -> rcd1, else csv).
    """
    theta = _check_threshold(theta)
    words, n_bits, _ = _codes_to_words(codes)
    if len(words) > max_codes:
        raise ValidationError(
            f"{len(words)} codes exceed the matrix cap of {max_codes}"
        )
    dist = pairwise_distances(words, theta=theta)
    if path is not None:
        path = Path(path)
        if fmt is None:
            fmt = "rcd1" if path.suffix == ".rcd" else "csv"
        if fmt == "rcd1":
            max_value = min(n_bits, theta if theta is not math.inf else n_bits)
            if max_value > 65535:
                raise ValidationError(
                    f"distances up to {max_value} overflow the 16-bit RCD1 format; use CSV"
                )
            with open(path, "wb") as fh:
                fh.write(RCD1_MAGIC)
                fh.write(struct.pack("<I", len(words)))
                fh.write(dist.astype("<u2").tobytes())
        elif fmt == "csv":
            np.savetxt(path, dist, fmt="%d", delimiter=",", newline="\n")
        else:
            raise ValueError(f"unknown distance matrix format {fmt!r}")
    return dist


def load_distance_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] == RCD1_MAGIC:
        (n,) = struct.unpack_from("<I", data, 4)
        return (
            np.frombuffer(data, dtype="<u2", offset=8, count=n * n)
            .reshape(n, n)
            .astype(np.uint32)
        )
    return np.loadtxt(path, delimiter=",", dtype=np.uint32, ndmin=2)


# ---------------------------------------------------------------------------
# 2-D grid oracle


@dataclass(frozen=True)
class GridTessellation:
    """Cell structure of a 2-D network rasterized on a regular grid.

    cell_id_grid[i, j] is the compact id of the code at grid center
    (axis0[i], axis1[j]); ids number codes by first appearance in scan
    order. neighbor_pairs lists each distinct adjacent id pair once with
    its Hamming distance; instance_distance_counts histograms the same
    distances over individual neighboring pixel pairs.
    """

    bounds: tuple[tuple[float, float], tuple[float, float]]
    resolution: int
    cell_id_grid: np.ndarray
    id_to_code: tuple[Code, ...]
    neighbor_pairs: tuple[tuple[int, int, int], ...]
    instance_distance_counts: dict

    @property
    def distinct_codes(self) -> int:
        return len(self.id_to_code)

    def axis_centers(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds[axis]
        step = (hi - lo) / self.resolution
        return lo + (np.arange(self.resolution) + 0.5) * step


def _normalize_bounds(bounds):
    b = np.asarray(bounds, dtype=np.float64)
    if b.shape == (2,):
        b = np.stack([b, b])
    if b.shape != (2, 2):
        raise ValueError("bounds must be (low, high) or ((low, high), (low, high))")
    for lo, hi in b:
        if not lo < hi:
            raise ValueError(f"bound low {lo} must be below high {hi}")
    return ((float(b[0, 0]), float(b[0, 1])), (float(b[1, 0]), float(b[1, 1])))


def grid_tessellation(
    net: ReluNetwork,
    bounds,
    resolution: int,
    threads: int = 1,
) -> GridTessellation:
    """Sample codes at the centers of a resolution x resolution grid.

    Centers carry a half-pixel offset so round coordinates (axes, origin)
    never land exactly on hyperplanes through them. Only 2-D networks are
    supported.
    """
    if net.input_dim != 2:
        raise ShapeError(
            f"grid requires 2-D input, network has input_dim {net.input_dim}"
        )
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    bounds = _normalize_bounds(bounds)
    axes = []
    for ax in range(2):
        lo, hi = bounds[ax]
        step = (hi - lo) / resolution
        axes.append(lo + (np.arange(resolution) + 0.5) * step)
    X = np.column_stack(
        [np.repeat(axes[0], resolution), np.tile(axes[1], resolution)]
    )
    words = code_words_batch(net, X, threads=threads)

    uniq, inverse = np.unique(words, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    first_seen = np.full(len(uniq), len(X), dtype=np.int64)
    np.minimum.at(first_seen, inverse, np.arange(len(X)))
    order = np.argsort(first_seen, kind="stable")
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[order] = np.arange(len(uniq))
    ids = rank[inverse].reshape(resolution, resolution)

    n_bits = net.total_neurons
    offs = net.layer_offsets
    fp = net.fingerprint
    id_to_code = tuple(
        Code(n_bits, tuple(int(w) for w in uniq[order[r]]), offs, fp)
        for r in range(len(uniq))
    )

    pair_a = np.concatenate([ids[:-1, :].ravel(), ids[:, :-1].ravel()])
    pair_b = np.concatenate([ids[1:, :].ravel(), ids[:, 1:].ravel()])
    differ = pair_a != pair_b
    pa, pb = pair_a[differ], pair_b[differ]
    lo_id = np.minimum(pa, pb)
    hi_id = np.maximum(pa, pb)
    keys = lo_id.astype(np.int64) * len(uniq) + hi_id
    uniq_keys, key_inverse, key_counts = np.unique(
        keys, return_inverse=True, return_counts=True
    )
    uw = np.asarray([c.words for c in id_to_code], dtype=np.uint64)
    ka = (uniq_keys // len(uniq)).astype(np.int64)
    kb = (uniq_keys % len(uniq)).astype(np.int64)
    pair_dist = np.zeros(len(uniq_keys), dtype=np.uint32)
    for w in range(uw.shape[1]):
        pair_dist += popcount_words(uw[ka, w] ^ uw[kb, w]).astype(np.uint32)
    neighbor_pairs = tuple(
        (int(a), int(b), int(d)) for a, b, d in zip(ka, kb, pair_dist)
    )
    hist: dict[int, int] = {}
    for d, cnt in zip(pair_dist, np.bincount(key_inverse.ravel())):
        hist[int(d)] = hist.get(int(d), 0) + int(cnt)

    return GridTessellation(
        bounds, resolution, ids, id_to_code, neighbor_pairs, hist
    )


def grid_to_csv(grid: GridTessellation, path) -> Path:
    path = Path(path)
    np.savetxt(path, grid.cell_id_grid, fmt="%d", delimiter=",", newline="\n")
    return path


def grid_to_pgm(grid: GridTessellation, path) -> Path:
    """ASCII PGM of cell ids (requires <= 65536 distinct cells)."""
    maxval = grid.distinct_codes - 1
    if maxval > 65535:
        raise ValidationError(f"{maxval + 1} cell ids overflow PGM's 16-bit range")
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"P2\n{grid.resolution} {grid.resolution}\n{max(maxval, 1)}\n")
        for row in grid.cell_id_grid:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")
    return path


def grid_code_map_json(grid: GridTessellation, path) -> Path:
    """id -> code string map plus grid metadata, for external plotting."""
    obj = {
        "bounds": [list(grid.bounds[0]), list(grid.bounds[1])],
        "resolution": grid.resolution,
        "n_bits": grid.id_to_code[0].n_bits if grid.id_to_code else 0,
        "fingerprint": f"{grid.id_to_code[0].net_fingerprint:#018x}"
        if grid.id_to_code
        else None,
        "codes": {str(i): c.to01(layer_sep="|") for i, c in enumerate(grid.id_to_code)},
    }
    path = Path(path)
    path.write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")
    return path
