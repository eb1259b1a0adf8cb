"""Sampling-based checks of the code/cell correspondence.

The central fact being exercised: two points get the same activation code
exactly when each lies strictly inside the other's cell. The suite samples
box-uniform points, discards any sitting within a margin of some neuron's
hyperplane (where float sign evaluation is unreliable), and checks both
directions of the correspondence plus self-containment of every point in
its own cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import Code, codes_of_batch
from .network import ReluNetwork, forward_batch
from .polyhedra import GENERATOR_RESIDUAL_TOL, HPolyhedron, contains, region_of_code


@dataclass(frozen=True)
class DualityFailure:
    kind: str  # self_containment | pair_mismatch
    detail: str


@dataclass(frozen=True)
class DualityReport:
    samples_drawn: int
    samples_used: int
    containment_checks: int
    pair_checks: int
    equal_code_pairs: int
    failures: tuple

    @property
    def ok(self) -> bool:
        return not self.failures


def _margin_mask(net: ReluNetwork, X, margin: float) -> np.ndarray:
    pres, _ = forward_batch(net, X)
    mask = np.ones(len(X), dtype=bool)
    for z in pres:
        mask &= np.abs(z).min(axis=1) > margin
    return mask


def duality_suite(
    net: ReluNetwork,
    n_samples: int,
    seed: int,
    box: float = 3.0,
    margin: float = 1e-6,
    residual_tol: float = GENERATOR_RESIDUAL_TOL,
    max_failures: int = 20,
) -> DualityReport:
    """Run the containment/equality checks on n_samples box-uniform points.

    Pair checks cover consecutive kept samples (codes almost always differ)
    plus a jittered companion of every kept sample (often the same code),
    so both sides of the biconditional get real coverage.
    """
    rng = np.random.default_rng(seed)
    m = net.input_dim
    X = rng.uniform(-box, box, size=(n_samples, m))
    jitter = X + rng.uniform(-0.05, 0.05, size=X.shape)

    keep = _margin_mask(net, X, margin)
    jkeep = _margin_mask(net, jitter, margin) & keep
    # position of each original sample inside the kept array, valid where keep
    pos = np.cumsum(keep) - 1
    companion = pos[jkeep]
    X = X[keep]
    jitter = jitter[jkeep]

    codes = codes_of_batch(net, X)
    jcodes = codes_of_batch(net, jitter) if len(jitter) else []

    regions: dict[Code, HPolyhedron] = {}

    def region(c: Code) -> HPolyhedron:
        if c not in regions:
            regions[c] = region_of_code(net, c)
        return regions[c]

    failures = []

    def fail(kind, detail):
        if len(failures) < max_failures:
            failures.append(DualityFailure(kind, detail))

    containment_checks = 0
    for x, c in zip(X, codes):
        containment_checks += 1
        worst = float(region(c).residuals(x).min())
        if worst < -residual_tol:
            fail(
                "self_containment",
                f"point {x.tolist()} has residual {worst:.3e} in its own cell",
            )

    pair_checks = 0
    equal_code_pairs = 0

    def check_pair(x, cx, y, cy):
        nonlocal pair_checks, equal_code_pairs
        pair_checks += 1
        equal = cx == cy
        mutual = contains(region(cx), y, mode="open") and contains(
            region(cy), x, mode="open"
        )
        if equal:
            equal_code_pairs += 1
        if equal != mutual:
            fail(
                "pair_mismatch",
                f"codes {'equal' if equal else 'differ'} but containment "
                f"{'mutual' if mutual else 'not mutual'} for {x.tolist()} / {y.tolist()}",
            )

    for i in range(len(X) - 1):
        check_pair(X[i], codes[i], X[i + 1], codes[i + 1])
    for j in range(len(jitter)):
        i = int(companion[j])
        check_pair(X[i], codes[i], jitter[j], jcodes[j])

    return DualityReport(
        samples_drawn=n_samples,
        samples_used=len(X),
        containment_checks=containment_checks,
        pair_checks=pair_checks,
        equal_code_pairs=equal_code_pairs,
        failures=tuple(failures),
    )
