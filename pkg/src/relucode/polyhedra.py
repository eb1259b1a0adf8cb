"""Exact half-space representation of activation cells.

Every activation-sign code of a network carves out a cell in input space.
Replacing each ReLU with the fixed on/off mask recorded in the code turns
the network into a stack of affine maps; requiring each masked pre-activation
to keep its recorded sign yields one linear inequality per neuron. The cell
is exactly ``{x | A x + b >= 0}`` with one row per neuron, stacked
layer-major so row order matches code bit order.

Concretely, with binary masks beta_k (0/1 diagonal) and polarities
pi_k = 2 beta_k - 1 (+/-1 diagonal):

    M_1 = W_1                      c_1 = b_1
    M_k = W_k diag(beta_{k-1}) M_{k-1}
    c_k = W_k diag(beta_{k-1}) c_{k-1} + b_k

and the rows for layer k are diag(pi_k) M_k, diag(pi_k) c_k.

Interior points and adjacency certificates come from a Chebyshev-center LP
solved inside a bounding box (outer cells are unbounded, the box keeps every
LP bounded). All operations are pure; LP state is per-call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codes import Code, code_of, hamming
from .errors import (
    IncompatibleCodesError,
    PreconditionError,
    ShapeError,
    ValidationError,
)
from .lp import DEFAULT_MAX_ITER, solve_inequality_max
from .network import ActivationTrace, ReluNetwork, forward

DEFAULT_BOX_BOUND = 1e3

# One decade of slack separates construction precision from acceptance:
# generating-point residuals are allowed down to -1e-9, strict slacks must
# clear 1e-9, and on-hyperplane equality is accepted to 1e-7.
GENERATOR_RESIDUAL_TOL = 1e-9
STRICTNESS_TOL = 1e-9
ON_HYPERPLANE_TOL = 1e-7


@dataclass(frozen=True)
class QProfile:
    """Per-layer activation masks: binary (0/1) and polar (-1/+1) diagonals."""

    q_beta: tuple[tuple[int, ...], ...]

    @property
    def q_pi(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(2 * b - 1 for b in layer) for layer in self.q_beta)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.q_beta)


def q_profile(trace: ActivationTrace) -> QProfile:
    """Masks of one trace: beta bit is 1 iff the pre-activation is > 0."""
    return QProfile(
        tuple(tuple(int(v > 0.0) for v in z) for z in trace.pre_activations)
    )


def q_profile_of_code(code: Code, widths) -> QProfile:
    """Masks recovered from a packed code, split by the given layer widths."""
    if sum(widths) != code.n_bits:
        raise ShapeError(
            f"widths sum to {sum(widths)}, code has {code.n_bits} bits"
        )
    bits = code.bits()
    layers = []
    pos = 0
    for w in widths:
        layers.append(tuple(int(b) for b in bits[pos : pos + w]))
        pos += w
    return QProfile(tuple(layers))


@dataclass(frozen=True, eq=False)
class HPolyhedron:
    """The set {x | A x + b >= 0} with per-row neuron provenance.

    Freshly built regions have one row per neuron (K == N); prune_redundant
    may return fewer. Provenance entries are (layer, neuron, sign) with sign
    the polarity the row enforces.
    """

    A: np.ndarray
    b: np.ndarray
    provenance: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        A = np.ascontiguousarray(np.asarray(self.A, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.b, dtype=np.float64))
        if A.ndim != 2:
            raise ShapeError(f"A must be 2-D, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise ShapeError(f"b has shape {b.shape}, expected ({A.shape[0]},)")
        prov = tuple((int(l), int(i), int(s)) for l, i, s in self.provenance)
        if len(prov) != A.shape[0]:
            raise ValidationError("one provenance triple per row required")
        pairs = [(l, i) for l, i, _ in prov]
        if len(set(pairs)) != len(pairs):
            raise ValidationError("provenance (layer, neuron) pairs must be distinct")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "provenance", prov)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def residuals(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ShapeError(f"point has shape {x.shape}, expected ({self.dim},)")
        return self.A @ x + self.b


def region_of_profile(net: ReluNetwork, profile: QProfile) -> HPolyhedron:
    """Half-space system of the cell whose masks are `profile`."""
    if profile.widths != net.widths:
        raise ShapeError(
            f"profile widths {profile.widths} do not match network {net.widths}"
        )
    blocks_A = []
    blocks_b = []
    provenance = []
    M = net.layers[0].weights
    c = net.layers[0].bias
    for k, layer in enumerate(net.layers):
        if k > 0:
            beta_prev = np.asarray(profile.q_beta[k - 1], dtype=np.float64)
            M = layer.weights @ (beta_prev[:, None] * M)
            c = layer.weights @ (beta_prev * c) + layer.bias
        pi = np.asarray(profile.q_pi[k], dtype=np.float64)
        blocks_A.append(pi[:, None] * M)
        blocks_b.append(pi * c)
        provenance.extend((k, i, int(pi[i])) for i in range(len(pi)))
    return HPolyhedron(np.vstack(blocks_A), np.concatenate(blocks_b), tuple(provenance))


def region_of(net: ReluNetwork, x) -> HPolyhedron:
    """Half-space system of the cell containing x."""
    return region_of_profile(net, q_profile(forward(net, x)))


def region_of_code(net: ReluNetwork, code: Code) -> HPolyhedron:
    """Half-space system of the cell a code denotes."""
    _check_code_matches(net, code)
    return region_of_profile(net, q_profile_of_code(code, net.widths))


def contains(P: HPolyhedron, x, mode: str = "closed") -> bool:
    """Membership test; exact sign test on the computed residuals.

    closed: A x + b >= 0 componentwise; open: strictly > 0. No tolerance.
    """
    res = P.residuals(x)
    if mode == "closed":
        return bool(np.all(res >= 0.0))
    if mode == "open":
        return bool(np.all(res > 0.0))
    raise ValueError(f"mode must be 'closed' or 'open', got {mode!r}")


# ---------------------------------------------------------------------------
# interior points and adjacency certificates


def _chebyshev_rows(A, b, box_bound, max_iter):
    """max-min normalized slack of {A x + b >= 0} inside [-B, B]^m.

    Returns (center, radius) or None when the closed system has no point in
    the box. Zero-norm rows cannot couple to the radius: a negative constant
    row is immediate infeasibility, a nonnegative one is dropped.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    const = norms == 0.0
    if np.any(b[const] < -GENERATOR_RESIDUAL_TOL):
        return None
    keep = ~const
    A = A[keep]
    b = b[keep]
    norms = norms[keep]
    # variables y = (x, r): maximize r subject to
    #   -A_i x + |A_i| r <= b_i  and  +-x_j + r <= B
    box_A = np.vstack([np.hstack([np.eye(m), np.ones((m, 1))]),
                       np.hstack([-np.eye(m), np.ones((m, 1))])])
    box_b = np.full(2 * m, float(box_bound))
    lp_A = np.vstack([np.hstack([-A, norms[:, None]]), box_A])
    lp_b = np.concatenate([b, box_b])
    c = np.zeros(m + 1)
    c[m] = 1.0
    res = solve_inequality_max(c, lp_A, lp_b, max_iter=max_iter)
    if res.status != "optimal":
        return None
    center = res.x[:m]
    radius = float(res.x[m])
    if radius < -STRICTNESS_TOL:
        return None
    return center, radius


def chebyshev_center(
    P: HPolyhedron,
    box_bound: float = DEFAULT_BOX_BOUND,
    max_iter: int = DEFAULT_MAX_ITER,
):
    """Deepest interior point of the cell, clipped to [-B, B]^dim.

    Returns (center, radius); radius > 0 certifies a nonempty interior.
    Returns None when the closed system has no solution in the box. Raises
    NumericalFailureError (with the iteration count) if the LP kernel's
    pivot budget runs out.
    """
    if box_bound <= 0:
        raise ValueError(f"box_bound must be positive, got {box_bound}")
    return _chebyshev_rows(P.A, P.b, box_bound, max_iter)


def _check_code_matches(net: ReluNetwork, code: Code):
    if code.n_bits != net.total_neurons:
        raise ShapeError(
            f"code has {code.n_bits} bits, network has {net.total_neurons} neurons"
        )
    if code.net_fingerprint not in (0, net.fingerprint):
        raise IncompatibleCodesError(
            "code fingerprint does not match this network"
        )


def _bit_to_neuron(net: ReluNetwork, position: int):
    offsets = net.layer_offsets
    for k in reversed(range(len(offsets))):
        if position >= offsets[k]:
            return k, position - offsets[k]
    raise IndexError(position)


def facet_witness(
    net: ReluNetwork,
    code_a: Code,
    code_b: Code,
    box_bound: float = DEFAULT_BOX_BOUND,
    max_iter: int = DEFAULT_MAX_ITER,
):
    """Point certifying that two Hamming-distance-1 cells share a facet.

    Searches, inside the box, for a point on the flipped neuron's hyperplane
    where every other row of code_a's cell holds strictly: the Chebyshev
    problem is re-solved on that hyperplane by substituting out the
    coordinate with the largest row coefficient. A returned point z has
    |pre-activation of the flipped neuron| < 1e-7, all other rows strictly
    positive, and code_of(z) equal to code_a with the flipped bit forced
    to 0 (ties at the boundary belong to the inactive side). Returns None
    when no such point is certified (radius on the hyperplane <= 1e-9:
    undetermined, not a refutation).
    """
    _check_code_matches(net, code_a)
    _check_code_matches(net, code_b)
    d = hamming(code_a, code_b)
    if d != 1:
        raise PreconditionError(f"codes must differ in exactly 1 bit, got {d}")
    j = next(p for p in range(code_a.n_bits) if code_a.bit(p) != code_b.bit(p))
    layer, neuron = _bit_to_neuron(net, j)
    expected = code_a.flip(j) if code_a.bit(j) == 1 else code_a

    P = region_of_code(net, code_a)
    a = P.A[j]
    bj = float(P.b[j])
    others = np.delete(np.arange(P.n_rows), j)
    A_o = P.A[others]
    b_o = P.b[others]

    p = int(np.argmax(np.abs(a)))
    if a[p] == 0.0:
        return None  # degenerate zero row, nothing to certify
    m = P.dim
    rest = [q for q in range(m) if q != p]
    alpha = -bj / a[p]
    gamma = -a[rest] / a[p]

    if m == 1:
        z = np.array([alpha])
        norms = np.linalg.norm(A_o, axis=1)
        slacks = [
            (A_o[i] @ z + b_o[i]) / norms[i] for i in range(len(b_o)) if norms[i] > 0
        ]
        radius = min([box_bound - abs(alpha)] + slacks) if slacks else box_bound - abs(alpha)
        if radius <= STRICTNESS_TOL:
            return None
    else:
        # substitute x_p = alpha + gamma . y into every other row
        A_red = A_o[:, rest] + np.outer(A_o[:, p], gamma)
        b_red = b_o + A_o[:, p] * alpha
        # keep the lifted coordinate inside the box
        A_red = np.vstack([A_red, gamma[None, :], -gamma[None, :]])
        b_red = np.concatenate([b_red, [box_bound - alpha, box_bound + alpha]])
        sol = _chebyshev_rows(A_red, b_red, box_bound, max_iter)
        if sol is None:
            return None
        y, radius = sol
        if radius <= STRICTNESS_TOL:
            return None
        z = np.empty(m)
        z[rest] = y
        z[p] = alpha + gamma @ y

    # the raw hyperplane normal: a is the polarity-adjusted region row
    normal = a if code_a.bit(j) == 1 else -a
    z = _settle_on_inactive_side(net, z, layer, neuron, normal)
    if z is None:
        return None
    # verify the advertised post-conditions before returning
    pre = forward(net, z).pre_activations[layer][neuron]
    if abs(pre) >= ON_HYPERPLANE_TOL:
        return None
    res = P.residuals(z)
    if not np.all(np.delete(res, j) > 0.0):
        return None
    if code_of(net, z) != expected:
        return None
    return z


def _settle_on_inactive_side(net, z, layer, neuron, normal, max_steps: int = 10):
    """Nudge z along -normal until the flipped neuron reads <= 0.

    normal must be the raw pre-activation gradient of the neuron (so moving
    against it lowers the pre-activation). The LP puts z on the hyperplane up
    to rounding; the leftover residual has arbitrary sign, and the boundary
    convention demands the inactive side. Steps are ~1e-13, far below the
    certified slack of the other rows.
    """
    norm_sq = float(normal @ normal)
    margin = 1e-13 * (1.0 + np.linalg.norm(normal))
    for _ in range(max_steps):
        pre = forward(net, z).pre_activations[layer][neuron]
        if pre <= 0.0:
            return z
        z = z - normal * ((pre + margin) / norm_sq)
        margin *= 4.0
    return None


def prune_redundant(
    P: HPolyhedron,
    box_bound: float = DEFAULT_BOX_BOUND,
    tol: float = 1e-9,
) -> HPolyhedron:
    """Drop rows the remaining system already implies (LP certificate per row).

    Row i is redundant when min(A_i x + b_i) >= -tol over the other kept rows
    intersected with the box. Rows are tested sequentially against the
    current (already pruned) system, so one copy of a duplicated binding row
    always survives. Infeasible systems are returned unchanged.
    """
    if chebyshev_center(P, box_bound) is None:
        return P
    kept = list(range(P.n_rows))
    for idx in range(P.n_rows):
        others = [r for r in kept if r != idx]
        # minimize A_idx x + b_idx over {A_o x + b_o >= 0} in the box
        lp_A = np.vstack([-P.A[others], np.eye(P.dim), -np.eye(P.dim)])
        lp_b = np.concatenate([P.b[others], np.full(2 * P.dim, box_bound)])
        res = solve_inequality_max(-P.A[idx], lp_A, lp_b)
        if res.status != "optimal":
            continue
        min_residual = -res.objective + float(P.b[idx])
        if min_residual >= -tol:
            kept = others
    if len(kept) == P.n_rows:
        return P
    return HPolyhedron(
        P.A[kept], P.b[kept], tuple(P.provenance[i] for i in kept)
    )


# ---------------------------------------------------------------------------
# interchange formats


def to_json_obj(P: HPolyhedron) -> dict:
    return {
        "A": P.A.tolist(),
        "b": P.b.tolist(),
        "provenance": [list(t) for t in P.provenance],
    }


def from_json_obj(obj) -> HPolyhedron:
    return HPolyhedron(
        np.asarray(obj["A"], dtype=np.float64),
        np.asarray(obj["b"], dtype=np.float64),
        tuple(tuple(t) for t in obj["provenance"]),
    )


def save_json(P: HPolyhedron, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_json_obj(P), separators=(",", ":")) + "\n")
    return path


def load_json(path) -> HPolyhedron:
    return from_json_obj(json.loads(Path(path).read_text()))


def to_ine(P: HPolyhedron) -> str:
    """cdd-style H-representation text: each row is b_i then A_i entries."""
    lines = ["H-representation", "begin", f" {P.n_rows} {P.dim + 1} real"]
    for i in range(P.n_rows):
        entries = [repr(float(P.b[i]))] + [repr(float(v)) for v in P.A[i]]
        lines.append(" " + " ".join(entries))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_ine(P: HPolyhedron, path) -> Path:
    path = Path(path)
    path.write_text(to_ine(P))
    return path
