"""Inscribing an orientation-similar crosspolytope in a smooth strictly convex body.

The vertex rays are p +/- a * w(e_g) with the standard basis indexed by the
group; equalizing the 2d ray lengths from an interior point p over
(rotation, p) puts all vertices on the boundary. Supported bodies are
given by their gauge function (Minkowski functional): balls, ellipsoids,
and even-exponent lq balls, all smooth and strictly convex by
construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, InvalidParameterError
from .group import GroupTable
from .leastsq import levenberg_marquardt
from .motion import (n_rotation_params, orthogonality_defect, random_rotation,
                     skew_matrix)

_BISECT_TOL = 1e-12
_INTERIOR_MARGIN = 1e-9


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        if self.radius <= 0:
            raise InvalidParameterError("ball radius must be positive")

    @property
    def d(self) -> int:
        return self.center.size

    def gauge(self, u: np.ndarray) -> float:
        return float(np.linalg.norm(u) / self.radius)

    kind = "ball"


@dataclass(frozen=True)
class Ellipsoid:
    """K = {x : (x - c)^T Q (x - c) <= 1} with Q symmetric positive definite."""

    center: np.ndarray
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).ravel()
        q = np.asarray(self.q, dtype=float)
        if q.shape != (c.size, c.size):
            raise InvalidParameterError("shape matrix must be d x d")
        if np.linalg.norm(q - q.T) > 1e-12:
            raise InvalidParameterError("shape matrix must be symmetric")
        try:
            np.linalg.cholesky(q)
        except np.linalg.LinAlgError:
            raise InvalidParameterError("shape matrix must be positive definite") from None
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "q", q)

    @staticmethod
    def from_semi_axes(center, semi_axes) -> "Ellipsoid":
        s = np.asarray(semi_axes, dtype=float).ravel()
        if np.any(s <= 0):
            raise InvalidParameterError("semi-axes must be positive")
        return Ellipsoid(center=center, q=np.diag(1.0 / s**2))

    @property
    def d(self) -> int:
        return self.center.size

    def gauge(self, u: np.ndarray) -> float:
        return float(np.sqrt(u @ self.q @ u))

    kind = "ellipsoid"


@dataclass(frozen=True)
class LqBall:
    """K = {x : sum |(x_i - c_i)/s_i|^q <= 1}, q even and >= 2."""

    center: np.ndarray
    scales: np.ndarray
    exponent: int

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).ravel()
        s = np.asarray(self.scales, dtype=float).ravel()
        if s.shape != c.shape or np.any(s <= 0):
            raise InvalidParameterError("scales must be positive, one per coordinate")
        if self.exponent < 2 or self.exponent % 2 != 0:
            raise InvalidParameterError("exponent must be even and >= 2")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "scales", s)
        object.__setattr__(self, "exponent", int(self.exponent))

    @property
    def d(self) -> int:
        return self.center.size

    def gauge(self, u: np.ndarray) -> float:
        z = np.abs(np.asarray(u, dtype=float) / self.scales)
        m = z.max()
        if m == 0.0:
            return 0.0
        # factor out the max to avoid overflow at large exponents
        return float(m * np.sum((z / m) ** self.exponent) ** (1.0 / self.exponent))

    kind = "lq_ball"


ConvexBody = Union[Ball, Ellipsoid, LqBall]


def gauge(body: ConvexBody, u: np.ndarray) -> float:
    """Minkowski functional relative to the body's center."""
    return body.gauge(np.asarray(u, dtype=float).ravel())


def ray_length(body: ConvexBody, p: np.ndarray, u: np.ndarray) -> float:
    """The unique a > 0 with p + a*u on the boundary; p must be strictly interior.

    Closed form for balls and ellipsoids; bisection to 1e-12 otherwise.
    """
    p = np.asarray(p, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if p.shape != (body.d,) or u.shape != (body.d,):
        raise InvalidParameterError(f"point and direction must have length {body.d}")
    un = float(np.linalg.norm(u))
    if un == 0.0:
        raise InvalidParameterError("direction must be nonzero")
    rel = p - body.center
    if body.gauge(rel) >= 1.0:
        raise DomainError("ray origin must be strictly interior to the body")

    if isinstance(body, Ball):
        # |rel + a u| = radius
        aa = un * un
        bb = float(rel @ u)
        cc = float(rel @ rel) - body.radius**2
        return (-bb + np.sqrt(bb * bb - aa * cc)) / aa
    if isinstance(body, Ellipsoid):
        q = body.q
        aa = float(u @ q @ u)
        bb = float(rel @ q @ u)
        cc = float(rel @ q @ rel) - 1.0
        return (-bb + np.sqrt(bb * bb - aa * cc)) / aa

    # generic gauge: g(a) = gauge(rel + a u) - 1 is continuous with a single
    # sign change on [0, inf) for a convex body and interior p
    lo, hi = 0.0, 1.0
    while body.gauge(rel + hi * u) < 1.0:
        lo = hi
        hi *= 2.0
        if hi > 1e12:
            raise DomainError("body appears unbounded along the ray")
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if body.gauge(rel + mid * u) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def inscription_residual(body: ConvexBody, p: np.ndarray, w: np.ndarray,
                         t: GroupTable) -> np.ndarray:
    """(2d-1)-vector: per-element length asymmetries, then consecutive
    differences of the length sums; zero iff all 2d ray lengths agree."""
    d = t.d
    w = np.asarray(w, dtype=float)
    if w.shape != (d, d):
        raise InvalidParameterError(f"rotation must be {d} x {d}")
    plus = np.empty(d)
    minus = np.empty(d)
    for g in range(d):
        u = w[:, g]  # w e_g with the basis indexed by group elements
        plus[g] = ray_length(body, p, u)
        minus[g] = ray_length(body, p, -u)
    diff = plus - minus
    sums = plus + minus
    return np.concatenate([diff, sums[:-1] - sums[1:]])


def _ray_lengths(body: ConvexBody, p: np.ndarray, w: np.ndarray, d: int):
    plus = np.array([ray_length(body, p, w[:, g]) for g in range(d)])
    minus = np.array([ray_length(body, p, -w[:, g]) for g in range(d)])
    return plus, minus


@dataclass
class InscriptionOptions:
    multistarts: int = 8
    max_iter: int = 200
    tol: float = 1e-8       # residual norm declaring convergence
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0 or self.multistarts < 1:
            raise InvalidParameterError("tolerance must be positive, multistarts >= 1")


@dataclass
class InscriptionResult:
    center: np.ndarray          # interior point p
    rotation: np.ndarray        # similarity rotation
    scale: float                # common vertex distance a*
    vertices: np.ndarray        # (2d, d): p + a* w e_g block then p - a* w e_g
    residual_norm: float
    converged: bool
    trace: list


def solve_inscription(body: ConvexBody, t: GroupTable,
                      options: Optional[InscriptionOptions] = None) -> InscriptionResult:
    """Damped least squares over (rotation chart, center) with interior
    backtracking; multistart over Haar rotations, center at the body center."""
    opts = options or InscriptionOptions()
    d = t.d
    if body.d != d:
        raise InvalidParameterError(f"body dimension {body.d} != group dimension {d}")
    nth = n_rotation_params(d)
    seeds = np.random.SeedSequence(opts.seed).spawn(opts.multistarts)

    best = None
    trace = []
    for i in range(opts.multistarts):
        t0 = time.perf_counter()
        base_holder = {"base": random_rotation(d, seeds[i])}

        def rot(theta):
            w = base_holder["base"] @ expm(skew_matrix(theta, d))
            return w

        def resid(xv: np.ndarray) -> np.ndarray:
            return inscription_residual(body, xv[nth:], rot(xv[:nth]), t)

        def step_filter(x_old: np.ndarray, x_try: np.ndarray) -> np.ndarray:
            # halve the whole step until the center stays strictly interior
            step = x_try - x_old
            out = x_try
            for _ in range(60):
                if body.gauge(out[nth:] - body.center) <= 1.0 - _INTERIOR_MARGIN:
                    return out
                step = 0.5 * step
                out = x_old + step
            return x_old.copy()

        def on_accept(xv: np.ndarray) -> np.ndarray:
            base_holder["base"] = rot(xv[:nth])
            out = xv.copy()
            out[:nth] = 0.0
            return out

        x0 = np.concatenate([np.zeros(nth), body.center])
        body_scale = float(np.mean([ray_length(body, body.center, e)
                                    for e in np.eye(d)]))
        scale = np.concatenate([np.ones(nth), np.full(d, body_scale)])
        lm = levenberg_marquardt(resid, x0, scale, max_iter=opts.max_iter,
                                 step_filter=step_filter, on_accept=on_accept)
        norm = float(np.sqrt(lm.cost))
        trace.append({"start": i, "iters": lm.n_iter, "residual_norm": norm,
                      "reason": lm.reason, "time": time.perf_counter() - t0})
        cand = (norm, i, lm.x.copy(), base_holder["base"])
        if best is None or cand[0] < best[0]:
            best = cand
        if norm <= opts.tol:
            break

    norm, _, x, base = best
    w = base @ expm(skew_matrix(x[:nth], d))
    p = x[nth:]
    plus, minus = _ray_lengths(body, p, w, d)
    a_star = float(np.mean(np.concatenate([plus, minus])))
    verts = np.concatenate([p + a_star * w.T, p - a_star * w.T], axis=0)
    return InscriptionResult(center=p, rotation=w, scale=a_star, vertices=verts,
                             residual_norm=norm, converged=norm <= opts.tol,
                             trace=trace)


@dataclass
class VerificationReport:
    passed: bool
    gauges: np.ndarray
    max_gauge_error: float
    failures: list


def verify_inscription(body: ConvexBody, r: InscriptionResult,
                       tol: float = 1e-6) -> VerificationReport:
    """Check all 2d vertices sit on the boundary within tol, the rotation is
    special orthogonal, and the scale is positive."""
    failures = []
    gauges = np.array([body.gauge(v - body.center) for v in r.vertices])
    err = float(np.max(np.abs(gauges - 1.0)))
    if err > tol:
        failures.append("vertices-off-boundary")
    if orthogonality_defect(r.rotation) > 1e-8 or abs(np.linalg.det(r.rotation) - 1) > 1e-8:
        failures.append("rotation-not-special-orthogonal")
    if not (r.scale > 0):
        failures.append("non-positive-scale")
    return VerificationReport(passed=not failures, gauges=gauges,
                              max_gauge_error=err, failures=failures)
