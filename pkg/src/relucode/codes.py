"""Binarized activation codes and Hamming-family distances.

A code records, for one input, which neurons had strictly positive
pre-activation: bit (layer k, neuron i) is 1 iff the pre-activation exceeds
zero. Exact zeros map to 0; no epsilon is applied (near_boundary reports
numerically fragile neurons separately). Bits are packed layer-major into
64-bit words, little-endian bit order within each word, so serialized codes
and distance matrices are bit-exact across platforms.

Codes carry the fingerprint of the generating network; distance operations
refuse to mix codes from different networks.

Code set file format ``RCC/1``: magic ``RCC1``, u32 N, u32 count, u64
fingerprint, then ``count`` packed vectors of ceil(N/64) little-endian u64
words. The text twin (one 0/1 string per line, ``|`` at layer boundaries)
is for small-N debugging and carries no fingerprint.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    FormatError,
    IncompatibleCodesError,
    InvalidThresholdError,
    ShapeError,
)
from .network import ReluNetwork, forward, forward_batch

RCC_MAGIC = b"RCC1"


def _n_words(n_bits: int) -> int:
    return (n_bits + 63) // 64


def pack_rows(bits) -> np.ndarray:
    """Pack a (n, N) 0/1 matrix into (n, ceil(N/64)) uint64 words."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    n, n_bits = bits.shape
    packed = np.packbits(bits, axis=1, bitorder="little")
    target_bytes = _n_words(n_bits) * 8
    if packed.shape[1] < target_bytes:
        pad = np.zeros((n, target_bytes - packed.shape[1]), dtype=np.uint8)
        packed = np.hstack([packed, pad])
    return np.ascontiguousarray(packed).view(np.dtype("<u8")).reshape(n, -1)


def unpack_words(words, n_bits: int) -> np.ndarray:
    """Inverse of pack_rows for one word sequence: uint8 bits of length n_bits."""
    raw = b"".join(int(w).to_bytes(8, "little") for w in words)
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return bits[:n_bits]


def popcount_words(words: np.ndarray) -> np.ndarray:
    """Elementwise population count on a uint64 array."""
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(words)
    # SWAR fallback for numpy < 2.0
    x = words.copy()
    x -= (x >> np.uint64(1)) & np.uint64(0x5555555555555555)
    x = (x & np.uint64(0x3333333333333333)) + (
        (x >> np.uint64(2)) & np.uint64(0x3333333333333333)
    )
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@dataclass(frozen=True)
class Code:
    """Packed activation-sign vector of one input under one network.

    Equality and hashing look at (n_bits, words, net_fingerprint) only;
    layer_offsets are presentation metadata for indexing and the text form.
    """

    n_bits: int
    words: tuple[int, ...]
    layer_offsets: tuple[int, ...] = field(compare=False)
    net_fingerprint: int = 0

    def __post_init__(self):
        if len(self.words) != _n_words(self.n_bits):
            raise ValueError(
                f"{len(self.words)} words cannot hold {self.n_bits} bits"
            )
        offs = tuple(self.layer_offsets)
        if not offs or offs[0] != 0:
            raise ValueError("layer_offsets must start at 0")
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise ValueError("layer_offsets must be strictly increasing")
        if offs[-1] >= self.n_bits and self.n_bits > 0 and len(offs) > 1:
            raise ValueError("last layer offset beyond code length")
        object.__setattr__(self, "layer_offsets", offs)
        object.__setattr__(self, "words", tuple(int(w) for w in self.words))

    @classmethod
    def from_bits(cls, bits, layer_offsets=None, net_fingerprint: int = 0) -> "Code":
        bits = np.asarray(bits, dtype=np.uint8).reshape(1, -1)
        n_bits = bits.shape[1]
        words = tuple(int(w) for w in pack_rows(bits)[0])
        if layer_offsets is None:
            layer_offsets = (0,)
        return cls(n_bits, words, tuple(layer_offsets), net_fingerprint)

    def bit(self, position: int) -> int:
        if not 0 <= position < self.n_bits:
            raise IndexError(f"bit {position} out of range 0..{self.n_bits - 1}")
        return (self.words[position // 64] >> (position % 64)) & 1

    def bits(self) -> np.ndarray:
        """Unpacked 0/1 vector, layer-major order."""
        return unpack_words(self.words, self.n_bits)

    def to01(self, layer_sep: str = "") -> str:
        s = "".join(str(b) for b in self.bits())
        if not layer_sep or len(self.layer_offsets) < 2:
            return s
        parts = []
        bounds = list(self.layer_offsets[1:]) + [self.n_bits]
        start = 0
        for end in bounds:
            parts.append(s[start:end])
            start = end
        return layer_sep.join(parts)

    def flip(self, position: int) -> "Code":
        """Copy with one bit toggled (fingerprint preserved)."""
        words = list(self.words)
        words[position // 64] ^= 1 << (position % 64)
        return Code(self.n_bits, tuple(words), self.layer_offsets, self.net_fingerprint)


@dataclass(frozen=True)
class CodeDistance:
    """A (possibly truncated) Hamming distance together with its threshold."""

    value: int
    threshold: float  # positive int or math.inf

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("distance cannot be negative")
        if self.value > self.threshold:
            raise ValueError("distance exceeds its threshold")

    def __int__(self) -> int:
        return self.value


def code_of(net: ReluNetwork, x) -> Code:
    """Extract the activation-sign code of one input (strict > 0 test)."""
    trace = forward(net, x)
    return code_of_trace(net, trace)


def code_of_trace(net: ReluNetwork, trace) -> Code:
    bits = np.concatenate([(z > 0.0).astype(np.uint8) for z in trace.pre_activations])
    return Code.from_bits(bits, net.layer_offsets, net.fingerprint)


def code_words_batch(net: ReluNetwork, X, chunk_size: int = 131072, threads: int = 1):
    """Packed code words for a batch of inputs: (n, ceil(N/64)) uint64.

    Row order matches X regardless of chunking or thread count.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(
            f"batch has shape {X.shape}, network expects (n, {net.input_dim})"
        )
    chunks = [X[i : i + chunk_size] for i in range(0, len(X), chunk_size)]

    def one(chunk):
        pres, _ = forward_batch(net, chunk)
        bits = np.hstack([(Z > 0.0).astype(np.uint8) for Z in pres])
        return pack_rows(bits)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, chunks))
    else:
        parts = [one(c) for c in chunks]
    return np.vstack(parts) if parts else np.zeros((0, _n_words(net.total_neurons)), dtype=np.uint64)


def codes_of_batch(net: ReluNetwork, X, chunk_size: int = 131072, threads: int = 1) -> list[Code]:
    """Batch variant of code_of with deterministic output ordering."""
    words = code_words_batch(net, X, chunk_size=chunk_size, threads=threads)
    n_bits = net.total_neurons
    offs = net.layer_offsets
    fp = net.fingerprint
    return [Code(n_bits, tuple(int(w) for w in row), offs, fp) for row in words]


def _check_compatible(a: Code, b: Code):
    if a.n_bits != b.n_bits:
        raise IncompatibleCodesError(
            f"code lengths differ: {a.n_bits} vs {b.n_bits}"
        )
    if a.net_fingerprint != b.net_fingerprint:
        raise IncompatibleCodesError(
            f"codes come from different networks "
            f"(fingerprints {a.net_fingerprint:#x} vs {b.net_fingerprint:#x})"
        )


def hamming(a: Code, b: Code) -> int:
    """Number of differing bits. Symmetric, zero iff bitwise equal."""
    _check_compatible(a, b)
    return sum((wa ^ wb).bit_count() for wa, wb in zip(a.words, b.words))


def _check_threshold(theta):
    if theta == math.inf:
        return math.inf
    if isinstance(theta, float) and theta.is_integer():
        theta = int(theta)
    if not isinstance(theta, int) or isinstance(theta, bool):
        raise InvalidThresholdError(
            f"threshold must be a positive integer or infinity, got {theta!r}"
        )
    if theta < 1:
        raise InvalidThresholdError(
            f"threshold must be >= 1 to remain a metric, got {theta}"
        )
    return theta


def truncated_hamming(a: Code, b: Code, theta) -> CodeDistance:
    """min(hamming(a, b), theta), exiting early once theta is reached."""
    theta = _check_threshold(theta)
    _check_compatible(a, b)
    acc = 0
    for wa, wb in zip(a.words, b.words):
        acc += (wa ^ wb).bit_count()
        if acc >= theta:
            return CodeDistance(int(theta), theta)
    return CodeDistance(acc, theta)


def adjacency_distance(net: ReluNetwork, x, y) -> int:
    """0: same cell; 1: adjacent cells (general position); 2: neither."""
    return truncated_hamming(code_of(net, x), code_of(net, y), 2).value


def near_boundary(net: ReluNetwork, x, eps: float = 1e-9):
    """Neurons whose pre-activation magnitude falls below eps at x.

    Returns (layer, neuron, pre_activation) triples in layer-major order;
    these are the bits a small perturbation of x could flip.
    """
    trace = forward(net, x)
    out = []
    for k, z in enumerate(trace.pre_activations):
        for i in np.flatnonzero(np.abs(z) < eps):
            out.append((k, int(i), float(z[i])))
    return out


# ---------------------------------------------------------------------------
# code set files


def save_codes(codes, path) -> Path:
    """Write an RCC/1 code set. All codes must share length and fingerprint."""
    codes = list(codes)
    if not codes:
        raise ValueError("refusing to write an empty code set")
    first = codes[0]
    for c in codes[1:]:
        _check_compatible(first, c)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(RCC_MAGIC)
        fh.write(struct.pack("<IIQ", first.n_bits, len(codes), first.net_fingerprint))
        for c in codes:
            fh.write(np.asarray(c.words, dtype="<u8").tobytes())
    return path


def load_codes(path, layer_widths=None) -> list[Code]:
    """Read an RCC/1 code set.

    layer_widths, when given, must sum to the stored N and restores layer
    boundaries; otherwise codes come back as a single segment.
    """
    data = Path(path).read_bytes()
    if data[:4] != RCC_MAGIC:
        raise FormatError("bad magic, expected RCC1", location="byte 0")
    if len(data) < 20:
        raise FormatError("truncated RCC header", location=f"byte {len(data)}")
    n_bits, count, fingerprint = struct.unpack_from("<IIQ", data, 4)
    nw = _n_words(n_bits)
    expected = 20 + count * nw * 8
    if len(data) != expected:
        raise FormatError(
            f"expected {expected} bytes for {count} codes of {n_bits} bits, got {len(data)}",
            location=f"byte {min(len(data), expected)}",
        )
    if layer_widths is not None:
        if sum(layer_widths) != n_bits:
            raise ValueError(
                f"layer widths sum to {sum(layer_widths)}, file stores N={n_bits}"
            )
        offs = []
        acc = 0
        for w in layer_widths:
            offs.append(acc)
            acc += w
        offs = tuple(offs)
    else:
        offs = (0,)
    words = np.frombuffer(data, dtype="<u8", offset=20).reshape(count, nw)
    return [
        Code(n_bits, tuple(int(w) for w in row), offs, fingerprint) for row in words
    ]


def save_codes_text(codes, path) -> Path:
    """Debug text form: one 0/1 string per line, '|' between layers."""
    codes = list(codes)
    if not codes:
        raise ValueError("refusing to write an empty code set")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in codes:
            fh.write(c.to01(layer_sep="|"))
            fh.write("\n")
    return path


def load_codes_text(path) -> list[Code]:
    """Read the text form. No fingerprint is stored; loaded codes carry 0."""
    out = []
    widths = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        segments = line.split("|")
        seg_widths = tuple(len(s) for s in segments)
        if any(ch not in "01" for s in segments for ch in s):
            raise FormatError("code lines must contain only 0, 1 and |", location=f"line {lineno}")
        if widths is None:
            widths = seg_widths
        elif seg_widths != widths:
            raise FormatError(
                f"layer layout {seg_widths} differs from first line {widths}",
                location=f"line {lineno}",
            )
        bits = np.frombuffer("".join(segments).encode("ascii"), dtype=np.uint8) - ord("0")
        offs = []
        acc = 0
        for w in seg_widths:
            offs.append(acc)
            acc += w
        out.append(Code.from_bits(bits, tuple(offs), 0))
    return out
