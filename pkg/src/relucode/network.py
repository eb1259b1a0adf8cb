"""Fully connected ReLU networks: structure, serialization, activation traces.

A network is an ordered stack of affine layers with ReLU applied after each.
All analysis arithmetic is float64; weight files written in 32-bit precision
are widened on load. Networks are immutable after construction, so every
operation here is pure and thread-safe on shared instances.

Weight file formats
-------------------
``rcw-json/1``
    JSON object ``{"format": "rcw-json/1", "input_dim": m,
    "layers": [{"weights": [[...]], "bias": [...]}, ...], "meta": {...}}``
    with row-major weight matrices. ``meta`` is optional free-form.
``RCW-BIN/1``
    Binary, magic ``RCW1``, little-endian: u32 input_dim, u32 layer count,
    then per layer u32 rows, u32 cols, rows*cols f64 row-major weights,
    rows f64 bias.

The loader auto-detects the format by the leading byte (``{`` vs magic).
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError, ValidationError

BIN_MAGIC = b"RCW1"
JSON_FORMAT_TAG = "rcw-json/1"


def relu(z):
    """Elementwise max(0, z)."""
    return np.maximum(z, 0.0)


def _as_readonly_f64(a, name):
    # always copy: freezing a view would silently freeze the caller's array
    arr = np.array(a, dtype=np.float64, order="C")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AffineLayer:
    """One affine map: x -> weights @ x + bias.

    weights has shape (fan_out, fan_in); bias has length fan_out.
    Arrays are widened to float64 and frozen read-only.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _as_readonly_f64(self.weights, "weights")
        b = _as_readonly_f64(self.bias, "bias")
        if w.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {w.shape}")
        if b.ndim != 1:
            raise ShapeError(f"bias must be 1-D, got shape {b.shape}")
        if w.shape[0] != b.shape[0]:
            raise ValidationError(
                f"weights has {w.shape[0]} rows but bias has length {b.shape[0]}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    def __eq__(self, other):
        if not isinstance(other, AffineLayer):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and np.array_equal(
            self.bias, other.bias
        )


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    """Ordered affine layers with ReLU between them.

    The dimension chain is validated at construction: layer k must accept
    exactly the previous layer's output width (layer 0 accepts input_dim).
    """

    input_dim: int
    layers: tuple[AffineLayer, ...]

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValidationError(f"input_dim must be positive, got {self.input_dim}")
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("a network needs at least one layer")
        expected = self.input_dim
        for k, layer in enumerate(layers):
            if layer.fan_in != expected:
                raise ValidationError(
                    f"layer {k} expects {expected} inputs, got {layer.fan_in}"
                )
            expected = layer.fan_out
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> tuple[int, ...]:
        """Output width of each layer."""
        return tuple(layer.fan_out for layer in self.layers)

    @property
    def total_neurons(self) -> int:
        return sum(self.widths)

    @property
    def layer_offsets(self) -> tuple[int, ...]:
        """Start index of each layer's neurons in the flat neuron numbering."""
        offsets = []
        acc = 0
        for w in self.widths:
            offsets.append(acc)
            acc += w
        return tuple(offsets)

    @cached_property
    def fingerprint(self) -> int:
        """64-bit hash of the canonical binary serialization.

        Used to reject distance computations between codes of different
        networks. Stable across platforms (fixed little-endian layout).
        """
        import hashlib

        digest = hashlib.blake2b(to_bin_bytes(self), digest_size=8).digest()
        return int.from_bytes(digest, "little")

    def __eq__(self, other):
        if not isinstance(other, ReluNetwork):
            return NotImplemented
        return self.input_dim == other.input_dim and self.layers == other.layers


@dataclass(frozen=True)
class ActivationTrace:
    """Per-layer pre-activations and activations for one input."""

    pre_activations: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Diagnostic:
    """One validate() finding. kind is a stable identifier, message is prose."""

    layer: int
    kind: str
    message: str


def forward(net: ReluNetwork, x) -> ActivationTrace:
    """Evaluate the network on one input, recording every layer.

    Raises ShapeError on a dimension mismatch and ValidationError if the
    input has non-finite entries. Pure: identical inputs give bit-identical
    traces.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ShapeError(
            f"input has shape {x.shape}, network expects ({net.input_dim},)"
        )
    if not np.all(np.isfinite(x)):
        raise ValidationError("input contains non-finite entries")
    pres = []
    acts = []
    h = x
    for layer in net.layers:
        z = layer.weights @ h + layer.bias
        h = relu(z)
        pres.append(z)
        acts.append(h)
    return ActivationTrace(tuple(pres), tuple(acts))


def forward_batch(net: ReluNetwork, X):
    """Evaluate the network on a batch of rows.

    X has shape (n, input_dim). Returns (pre_activations, activations), each
    a list of (n, width_k) arrays. Agrees with forward() row by row up to
    BLAS accumulation order (last-ulp differences; sign-relevant only for
    pre-activations within ~1e-16 of zero, which near_boundary flags).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(
            f"batch has shape {X.shape}, network expects (n, {net.input_dim})"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("batch contains non-finite entries")
    pres = []
    acts = []
    H = X
    for layer in net.layers:
        Z = H @ layer.weights.T + layer.bias
        H = relu(Z)
        pres.append(Z)
        acts.append(H)
    return pres, acts


# ---------------------------------------------------------------------------
# serialization


def to_bin_bytes(net: ReluNetwork) -> bytes:
    """Canonical RCW-BIN/1 serialization (also the fingerprint input)."""
    out = io.BytesIO()
    out.write(BIN_MAGIC)
    out.write(struct.pack("<II", net.input_dim, net.depth))
    for layer in net.layers:
        rows, cols = layer.weights.shape
        out.write(struct.pack("<II", rows, cols))
        out.write(layer.weights.astype("<f8").tobytes())
        out.write(layer.bias.astype("<f8").tobytes())
    return out.getvalue()


def _from_bin_bytes(data: bytes) -> ReluNetwork:
    def need(offset, count, what):
        if offset + count > len(data):
            raise FormatError(
                f"truncated RCW-BIN file while reading {what}",
                location=f"byte {offset}",
            )

    if data[:4] != BIN_MAGIC:
        raise FormatError("bad magic, expected RCW1", location="byte 0")
    pos = 4
    need(pos, 8, "header")
    input_dim, n_layers = struct.unpack_from("<II", data, pos)
    pos += 8
    if n_layers == 0:
        raise FormatError("file declares zero layers", location="byte 4")
    layers = []
    for k in range(n_layers):
        need(pos, 8, f"layer {k} shape")
        rows, cols = struct.unpack_from("<II", data, pos)
        pos += 8
        nb = rows * cols * 8
        need(pos, nb, f"layer {k} weights")
        w = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=pos)
        pos += nb
        need(pos, rows * 8, f"layer {k} bias")
        b = np.frombuffer(data, dtype="<f8", count=rows, offset=pos)
        pos += rows * 8
        layers.append(AffineLayer(w.reshape(rows, cols), b.copy()))
    if pos != len(data):
        raise FormatError(
            f"{len(data) - pos} trailing bytes after last layer",
            location=f"byte {pos}",
        )
    return ReluNetwork(input_dim, tuple(layers))


def to_json_obj(net: ReluNetwork, meta=None) -> dict:
    obj = {
        "format": JSON_FORMAT_TAG,
        "input_dim": net.input_dim,
        "layers": [
            {"weights": layer.weights.tolist(), "bias": layer.bias.tolist()}
            for layer in net.layers
        ],
    }
    if meta is not None:
        obj["meta"] = meta
    return obj


def _from_json_obj(obj) -> ReluNetwork:
    if not isinstance(obj, dict):
        raise FormatError("top level must be a JSON object")
    if obj.get("format") != JSON_FORMAT_TAG:
        raise FormatError(
            f"unsupported format tag {obj.get('format')!r}, expected {JSON_FORMAT_TAG!r}"
        )
    if "input_dim" not in obj or "layers" not in obj:
        raise FormatError("missing required keys input_dim/layers")
    input_dim = obj["input_dim"]
    if not isinstance(input_dim, int):
        raise FormatError("input_dim must be an integer")
    raw_layers = obj["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise FormatError("layers must be a non-empty list")
    layers = []
    for k, entry in enumerate(raw_layers):
        if not isinstance(entry, dict) or "weights" not in entry or "bias" not in entry:
            raise FormatError(f"layer {k} needs weights and bias")
        try:
            w = np.asarray(entry["weights"], dtype=np.float64)
            b = np.asarray(entry["bias"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"layer {k} has non-numeric entries: {exc}") from None
        if w.ndim != 2:
            raise FormatError(f"layer {k} weights must be a matrix of rows")
        layers.append(AffineLayer(w, b))
    return ReluNetwork(input_dim, tuple(layers))


def load_network(source) -> ReluNetwork:
    """Load a network from a path, bytes, or str of either weight format.

    Detects RCW-BIN by magic and rcw-json by a leading ``{``. Raises
    FormatError on malformed input and ValidationError on a broken
    dimension chain.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        raise TypeError(f"cannot load a network from {type(source).__name__}")
    if data[:4] == BIN_MAGIC:
        return _from_bin_bytes(data)
    stripped = data.lstrip()
    if stripped[:1] == b"{":
        try:
            obj = json.loads(data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError("not valid UTF-8", location=f"byte {exc.start}") from None
        except json.JSONDecodeError as exc:
            raise FormatError(
                f"invalid JSON: {exc.msg}", location=f"line {exc.lineno}:{exc.colno}"
            ) from None
        return _from_json_obj(obj)
    raise FormatError(
        "unrecognized weight file (no RCW1 magic, not JSON)", location="byte 0"
    )


def save_network(net: ReluNetwork, path, fmt: str = "json", meta=None) -> Path:
    """Write a network to disk in the given format ("json" or "bin")."""
    path = Path(path)
    if fmt == "json":
        text = json.dumps(to_json_obj(net, meta=meta), separators=(",", ":"))
        path.write_bytes(text.encode("utf-8") + b"\n")
    elif fmt == "bin":
        path.write_bytes(to_bin_bytes(net))
    else:
        raise ValueError(f"unknown format {fmt!r}, expected 'json' or 'bin'")
    return path


# ---------------------------------------------------------------------------
# diagnostics


def validate(net: ReluNetwork, tol_degenerate: float = 1e-9) -> list[Diagnostic]:
    """Heuristic checks for degenerate hyperplane configurations.

    Flags, per layer: all-zero weight rows, duplicate hyperplanes (rows whose
    normalized (weights, bias) agree up to sign within tol_degenerate), and
    parallel rows that share a zero bias. These are necessary-condition
    signals only; passing does not certify general position.
    """
    out = []
    for k, layer in enumerate(net.layers):
        w = layer.weights
        b = layer.bias
        norms = np.linalg.norm(w, axis=1)
        zero_rows = np.flatnonzero(norms == 0.0)
        for i in zero_rows:
            out.append(Diagnostic(k, "zero_row", f"layer {k} neuron {i}: zero row"))
        nz = np.flatnonzero(norms > 0.0)
        if len(nz) < 2:
            continue
        wn = w[nz] / norms[nz, None]
        bn = b[nz] / norms[nz]
        for a_pos in range(len(nz)):
            for b_pos in range(a_pos + 1, len(nz)):
                i, j = int(nz[a_pos]), int(nz[b_pos])
                same = np.concatenate(
                    [wn[a_pos] - wn[b_pos], [bn[a_pos] - bn[b_pos]]]
                )
                opp = np.concatenate([wn[a_pos] + wn[b_pos], [bn[a_pos] + bn[b_pos]]])
                if (
                    np.max(np.abs(same)) <= tol_degenerate
                    or np.max(np.abs(opp)) <= tol_degenerate
                ):
                    out.append(
                        Diagnostic(
                            k,
                            "duplicate_hyperplane",
                            f"layer {k} neurons {i} and {j}: duplicate hyperplane",
                        )
                    )
                    continue
                parallel = (
                    np.max(np.abs(wn[a_pos] - wn[b_pos])) <= tol_degenerate
                    or np.max(np.abs(wn[a_pos] + wn[b_pos])) <= tol_degenerate
                )
                if parallel and abs(b[i]) <= tol_degenerate and abs(b[j]) <= tol_degenerate:
                    out.append(
                        Diagnostic(
                            k,
                            "parallel_zero_bias",
                            f"layer {k} neurons {i} and {j}: parallel rows share zero bias",
                        )
                    )
    return out


def random_network(
    input_dim: int,
    widths,
    seed=None,
    weight_scale: float = 1.0,
    bias_scale: float = 0.5,
) -> ReluNetwork:
    """Gaussian-initialized network, handy for sampling-based checks.

    With probability one the parameters are in general position. Accepts a
    seed or an existing numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    fan_in = input_dim
    for w in widths:
        weights = rng.normal(0.0, weight_scale, size=(w, fan_in)) / np.sqrt(fan_in)
        bias = rng.normal(0.0, bias_scale, size=w)
        layers.append(AffineLayer(weights, bias))
        fan_in = w
    return ReluNetwork(input_dim, tuple(layers))
