"""Group-invariant fans of 2d cones built from an orbit of directions.

A Voronoi fan stores 2d unit directions: rows 0..d-1 are the orbit
+g(v)/|v| in group-element order, rows d..2d-1 their negatives. The cone
of a direction is the set of points whose dot product with it is maximal
over all 2d directions. Flat cone labels follow the same row order, so
ties resolved toward the lowest flat index give "+ before -, elements by
index".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import CommonRayError, DegenerateFanError, InvalidParameterError
from .group import GroupTable, act_on_vector, regular_action

ANGLE_TOL = 1e-6  # minimum pairwise angle between fan directions, radians


@dataclass(frozen=True)
class Fan:
    """2d closed cones {+/- g(C)} given by max-dot-product membership."""

    table: GroupTable
    directions: np.ndarray = field(repr=False)  # (2d, d), unit rows
    kind: str = "voronoi"

    @property
    def d(self) -> int:
        return self.table.d

    @property
    def n_cones(self) -> int:
        return 2 * self.table.d


@dataclass(frozen=True)
class ConeOracle:
    """User-supplied membership: classify(x) -> (element, sign) for x != 0.

    Must be scale-invariant and equivariant for the regular action; those
    properties are spot-checked by validate_fan, not enforced here.
    """

    table: GroupTable
    classify: Callable[[np.ndarray], tuple[int, int]]


def flat_label(g: int, sign: int, d: int) -> int:
    """(element, sign) -> flat row index in the fan's direction order."""
    return g if sign > 0 else d + g


def split_label(j: int, d: int) -> tuple[int, int]:
    """Flat row index -> (element, sign)."""
    return (j, 1) if j < d else (j - d, -1)


def voronoi_fan(t: GroupTable, v: np.ndarray) -> Fan:
    """Fan of Voronoi cones of the orbit {+/- g(v)}.

    Requires <v, 1> > 0 so the diagonal ray lies in every positive cone,
    and all 2d orbit directions pairwise distinct.
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (t.d,):
        raise InvalidParameterError(f"generator must have length {t.d}, got {v.size}")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise InvalidParameterError("fan generator must be nonzero")
    if float(np.sum(v)) <= 0.0:
        raise CommonRayError(
            "generator must satisfy <v, (1,..,1)> > 0 so the diagonal ray is common "
            "to all positive cones"
        )
    action = regular_action(t)
    u = v / norm
    pos = np.stack([act_on_vector(action, g, u) for g in range(t.d)])
    dirs = np.concatenate([pos, -pos], axis=0)
    # reject near-coincident directions (e.g. v parallel to the diagonal)
    gram = dirs @ dirs.T
    np.fill_diagonal(gram, -np.inf)
    max_cos = float(gram.max())
    if max_cos > np.cos(ANGLE_TOL):
        raise DegenerateFanError(
            f"orbit directions are not distinct: min pairwise angle "
            f"{np.arccos(min(max_cos, 1.0)):.2e} rad < {ANGLE_TOL:.0e}"
        )
    return Fan(table=t, directions=dirs, kind="voronoi")


def cone_index(f: Fan, y: np.ndarray) -> tuple[int, int]:
    """Label (element, sign) of the cone containing y; ties take the lowest label.

    y = 0 is permitted and lands on the tie-break label (0, +1).
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.shape != (f.d,):
        raise InvalidParameterError(f"point must have length {f.d}")
    scores = f.directions @ y
    return split_label(int(np.argmax(scores)), f.d)


def cone_labels(f: Fan, pts: np.ndarray) -> np.ndarray:
    """Vectorized flat labels for an (N, d) array of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != f.d:
        raise InvalidParameterError(f"points must have {f.d} columns")
    return _kernels.hard_labels(pts, f.directions, np.zeros(f.d))


def soft_membership(f: Fan, y: np.ndarray, beta: float) -> np.ndarray:
    """Softmax weights over the 2d cones, sharpness beta; y is normalized first.

    beta -> infinity recovers the indicator of cone_index; y = 0 gives
    uniform weights.
    """
    if not isinstance(f, Fan):
        raise InvalidParameterError("soft membership needs direction vectors; "
                                    "oracle fans are hard-membership only")
    if beta <= 0:
        raise InvalidParameterError("beta must be positive")
    y = np.asarray(y, dtype=float).ravel()
    if y.shape != (f.d,):
        raise InvalidParameterError(f"point must have length {f.d}")
    r = np.linalg.norm(y)
    if r == 0.0:
        return np.full(f.n_cones, 1.0 / f.n_cones)
    scores = beta * (f.directions @ (y / r))
    scores -= scores.max()
    w = np.exp(scores)
    return w / w.sum()


def _sphere_samples(d: int, n: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass
class ValidationReport:
    """Outcome of sampling-based fan validation."""

    valid: bool
    failures: list
    fractions: np.ndarray  # share of sphere samples per cone, fan row order
    n: int
    seed: int
    details: dict

    def __bool__(self) -> bool:
        return self.valid


# score slack for "lies in the closed cone" when hunting for extra common
# rays: tight, so only genuine ties qualify and near-degenerate-but-valid
# fans are not flagged
_TIE_SLACK = 1e-9
_COMMON_RAY_EXEMPT_ANGLE = 1e-3


def validate_fan(f, n: int = 10_000, seed=0) -> ValidationReport:
    """Sampling checks: partition, non-degeneracy, common ray, uniqueness evidence.

    For a ConeOracle the dot-product clauses are replaced by equivariance,
    scale-invariance, and a sign check near the diagonal. Uniqueness of the
    common ray is evidenced, not proven; for Voronoi fans the report also
    carries a rank certificate (`details['rank_certificate']`).
    """
    if n < 10_000:
        raise InvalidParameterError("validate_fan needs n >= 10^4 samples")
    if isinstance(f, Fan):
        return _validate_voronoi(f, n, seed)
    if isinstance(f, ConeOracle):
        return _validate_oracle(f, n, seed)
    raise InvalidParameterError("validate_fan expects a Fan or ConeOracle")


def _validate_voronoi(f: Fan, n: int, seed) -> ValidationReport:
    d = f.d
    failures = []
    details = {}
    pts = _sphere_samples(d, n, seed)
    labels = _kernels.hard_labels(pts, f.directions, np.zeros(d))

    # (i) partition: one label per sample, in range
    if labels.shape != (n,) or labels.min() < 0 or labels.max() >= 2 * d:
        failures.append("partition")
    fractions = np.bincount(labels, minlength=2 * d) / n

    # (ii) non-degeneracy: every cone captures samples
    if fractions.min() <= 0.0:
        failures.append("nondegeneracy")

    # (iii) the diagonal attains the max score on all d positive cones at once
    diag = np.full(d, 1.0 / np.sqrt(d))
    scores = f.directions @ diag
    if scores[:d].max() - scores[:d].min() > 1e-12 or scores[:d].max() < scores.max() - 1e-12:
        failures.append("common-ray")

    # (iv) no sampled direction away from the diagonal sits in all d positive cones
    sample_scores = pts @ f.directions.T
    top = sample_scores.max(axis=1)
    in_all_pos = np.all(sample_scores[:, :d] >= (top - _TIE_SLACK)[:, None], axis=1)
    near_diag = pts @ diag > np.cos(_COMMON_RAY_EXEMPT_ANGLE)
    offenders = int(np.sum(in_all_pos & ~near_diag))
    details["uniqueness_offenders"] = offenders

    # rank certificate: the common ray is unique iff the positive direction
    # differences span a (d-1)-dimensional space
    sv = np.linalg.svd(f.directions[1:d] - f.directions[0], compute_uv=False)
    rank_ok = bool(np.sum(sv > 1e-9) == d - 1)
    details["rank_certificate"] = rank_ok
    if offenders > 0 or not rank_ok:
        failures.append("uniqueness")

    return ValidationReport(
        valid=not failures, failures=failures, fractions=fractions, n=n, seed=seed,
        details=details,
    )


def _validate_oracle(o: ConeOracle, n: int, seed) -> ValidationReport:
    d = o.table.d
    failures = []
    details = {}
    pts = _sphere_samples(d, n, seed)
    labels = np.empty(n, dtype=np.int64)
    ok = True
    for i in range(n):
        g, s = o.classify(pts[i])
        if not (0 <= g < d and s in (-1, 1)):
            ok = False
            break
        labels[i] = flat_label(g, s, d)
    if not ok:
        failures.append("partition")
        fractions = np.zeros(2 * d)
    else:
        fractions = np.bincount(labels, minlength=2 * d) / n
        if fractions.min() <= 0.0:
            failures.append("nondegeneracy")

        action = regular_action(o.table)
        n_spot = min(200, n)
        rng = np.random.default_rng(seed)
        equivariant = True
        for i in range(n_spot):
            x = pts[i]
            g, s = o.classify(x)
            h = int(rng.integers(1, d)) if d > 1 else 0
            gh, sh = o.classify(act_on_vector(action, h, x))
            if (gh, sh) != (o.table.multiply(h, g), s):
                equivariant = False
                break
        if not equivariant:
            failures.append("equivariance")

        scale_ok = all(
            o.classify(lam * pts[i]) == o.classify(pts[i])
            for i in range(min(50, n))
            for lam in (0.5, 3.0)
        )
        if not scale_ok:
            failures.append("scale-invariance")

        # weak common-ray evidence: directions near the diagonal get positive sign
        diag = np.full(d, 1.0 / np.sqrt(d))
        rng2 = np.random.default_rng(seed + 1)
        near = diag + 1e-4 * rng2.standard_normal((50, d))
        if any(o.classify(x)[1] != 1 for x in near):
            failures.append("common-ray")

    return ValidationReport(
        valid=not failures, failures=failures, fractions=fractions, n=n, seed=seed,
        details=details,
    )
