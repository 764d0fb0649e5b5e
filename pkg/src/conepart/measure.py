"""Probability measures, weighted point clouds, and cone-mass evaluation.

The solver pipeline is discretize-then-optimize: a measure is sampled once
into a fixed PointCloud (deterministic given the seed), masses of the 2d
moved cones are evaluated on that cloud, and certification re-estimates
the masses from fresh samples drawn with an offset seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .errors import InvalidParameterError
from .fan import ConeOracle, Fan, flat_label
from .motion import RigidMotion, inverse_apply

# added to user seeds when drawing certification samples, so the oracle
# stream never coincides with a solver stream that used the same seed
ORACLE_SEED_OFFSET = 104_729

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class UniformBall:
    """Uniform probability measure on a ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).ravel()
        if self.radius <= 0:
            raise InvalidParameterError("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def d(self) -> int:
        return self.center.size

    kind = "uniform_ball"


@dataclass(frozen=True)
class GaussianMixture:
    """Finite mixture of full-covariance Gaussians."""

    weights: np.ndarray
    means: np.ndarray  # (m, d)
    covs: np.ndarray   # (m, d, d)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        cov = np.asarray(self.covs, dtype=float)
        if cov.ndim == 2:
            cov = cov[None, :, :]
        if np.any(w <= 0):
            raise InvalidParameterError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise InvalidParameterError("mixture weights must sum to 1 within 1e-12")
        if mu.shape[0] != w.size or cov.shape[0] != w.size or cov.shape[1:] != (mu.shape[1],) * 2:
            raise InvalidParameterError("mixture component shapes are inconsistent")
        chols = []
        for i, c in enumerate(cov):
            if np.linalg.norm(c - c.T) > 1e-12:
                raise InvalidParameterError(f"covariance {i} is not symmetric")
            try:
                chols.append(np.linalg.cholesky(c))
            except np.linalg.LinAlgError:
                raise InvalidParameterError(f"covariance {i} is not positive definite") from None
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covs", cov)
        object.__setattr__(self, "_chols", np.stack(chols))

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    kind = "gaussian_mixture"


@dataclass(frozen=True)
class PointCloudFile:
    """Measure given by a CSV point cloud on disk (already a discretization)."""

    path: str
    d: Optional[int] = None

    kind = "point_cloud_file"


Measure = Union[UniformBall, GaussianMixture, PointCloudFile]


@dataclass(frozen=True)
class PointCloud:
    """Weighted points with normalized positive weights."""

    points: np.ndarray
    weights: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.size:
            raise InvalidParameterError("points and weights must have equal length")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise InvalidParameterError("points and weights must be finite")
        if np.any(w <= 0):
            raise InvalidParameterError("weights must be positive")
        if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise InvalidParameterError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.points


@dataclass(frozen=True)
class MassVector:
    """Masses of the 2d cones: a[g] for +g(C), b[g] for -g(C)."""

    a: np.ndarray
    b: np.ndarray
    mode: str = "hard"          # "hard" or "soft"
    beta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).ravel())
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).ravel())

    @property
    def d(self) -> int:
        return self.a.size

    @property
    def flat(self) -> np.ndarray:
        """Concatenated (a, b) in fan row order."""
        return np.concatenate([self.a, self.b])

    @property
    def total(self) -> float:
        return float(self.a.sum() + self.b.sum())


@dataclass(frozen=True)
class SupportBound:
    """Ball holding at least 1 - eps of the mass."""

    center: np.ndarray
    radius: float
    eps: float


def default_support_eps(d: int) -> float:
    # kept strictly inside the eps < 1/(2d) regime the search-region
    # argument needs
    return min(0.01, 1.0 / (4 * d))


def _quasi_uniforms(n: int, dim: int, seed) -> np.ndarray:
    """Scrambled Sobol block in (0, 1)^dim, clipped away from the edges."""
    import warnings

    from scipy.stats import qmc

    eng = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # non power-of-two block sizes are fine here
        u = eng.random(n)
    return np.clip(u, 1e-12, 1.0 - 1e-12)


def sample(m: Measure, n: int, seed, sampler: str = "pcg") -> PointCloud:
    """Draw a deterministic weighted cloud of n points from the measure.

    Uniform balls use direction * radius * U^(1/d); mixtures draw a
    component index then an affine transform of standard normals. The
    generator is PCG64 by default; sampler="sobol" substitutes a scrambled
    low-discrepancy stream (flagged in provenance). For point_cloud_file
    measures the file contents are returned as-is (n and seed are recorded
    but do not subsample).
    """
    if isinstance(m, PointCloudFile):
        pts, w = load_point_cloud_csv(m.path, d=m.d)
        prov = {"kind": m.kind, "sampler": "file", "seed": seed, "n": pts.shape[0],
                "path": m.path}
        return PointCloud(points=pts, weights=w, provenance=prov)
    if n < 1:
        raise InvalidParameterError("sample size must be >= 1")
    if sampler not in ("pcg", "sobol"):
        raise InvalidParameterError(f"unknown sampler {sampler!r}")
    if sampler == "sobol":
        from scipy.stats import norm

        u = _quasi_uniforms(n, m.d + 1, seed)
        z = norm.ppf(u[:, :-1])
        tail = u[:, -1]
        if isinstance(m, UniformBall):
            dirs = z / np.linalg.norm(z, axis=1, keepdims=True)
            pts = m.center + dirs * (m.radius * tail ** (1.0 / m.d))[:, None]
            method = "ball_polar"
        elif isinstance(m, GaussianMixture):
            comp = np.searchsorted(np.cumsum(m.weights), tail, side="right")
            comp = np.minimum(comp, m.weights.size - 1)
            chols = getattr(m, "_chols")
            pts = m.means[comp] + np.einsum("nij,nj->ni", chols[comp], z)
            method = "mixture_cholesky"
        else:
            raise InvalidParameterError(f"unknown measure type {type(m).__name__}")
    else:
        rng = np.random.default_rng(seed)
        if isinstance(m, UniformBall):
            d = m.d
            z = rng.standard_normal((n, d))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            r = m.radius * rng.random(n) ** (1.0 / d)
            pts = m.center + z * r[:, None]
            method = "ball_polar"
        elif isinstance(m, GaussianMixture):
            comp = rng.choice(m.weights.size, size=n, p=m.weights)
            z = rng.standard_normal((n, m.d))
            chols = getattr(m, "_chols")
            pts = m.means[comp] + np.einsum("nij,nj->ni", chols[comp], z)
            method = "mixture_cholesky"
        else:
            raise InvalidParameterError(f"unknown measure type {type(m).__name__}")
    w = np.full(n, 1.0 / n)
    prov = {"kind": m.kind, "sampler": f"{method}:{sampler}", "seed": seed, "n": n}
    return PointCloud(points=pts, weights=w, provenance=prov)


def load_point_cloud_csv(path: str, d: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Read a cloud CSV: d coordinate columns, optional weight column, optional header.

    With d given, a row of d+1 numbers means the last entry is a weight;
    without it every column is a coordinate. Weights are re-normalized.
    Rejects NaN/Inf.
    """
    rows = []
    with open(path, newline="") as fh:
        for record in csv.reader(fh):
            record = [c.strip() for c in record if c.strip() != ""]
            if not record:
                continue
            try:
                rows.append([float(c) for c in record])
            except ValueError:
                if not rows:
                    continue  # header row
                raise InvalidParameterError(f"non-numeric row in {path}: {record}")
    if not rows:
        raise InvalidParameterError(f"no data rows in {path}")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InvalidParameterError(f"ragged rows in {path}")
    arr = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"NaN/Inf entries in {path}")
    if d is not None and width == d + 1:
        pts, w = arr[:, :d], arr[:, d].copy()
        if np.any(w <= 0):
            raise InvalidParameterError(f"non-positive weights in {path}")
    elif d is None or width == d:
        pts = arr
        w = np.full(arr.shape[0], 1.0)
    else:
        raise InvalidParameterError(
            f"{path} has {width} columns; expected {d} coordinates (+ optional weight)"
        )
    w = w / w.sum()
    return pts, w


def cone_masses(c: PointCloud, f, rho: RigidMotion, mode: str = "hard",
                beta: Optional[float] = None) -> MassVector:
    """Masses of the 2d moved cones rho(+/- g(C)) carried by the cloud.

    A point x lies in rho(g(C)) iff the pulled-back point w^T (x - t) lies
    in g(C); hard mode sums weights by cone label, soft mode by softmax
    membership with sharpness beta.
    """
    if c.d != rho.d:
        raise InvalidParameterError("cloud and motion dimensions differ")
    if isinstance(f, ConeOracle):
        return _cone_masses_oracle(c, f, rho, mode)
    if not isinstance(f, Fan):
        raise InvalidParameterError("cone_masses expects a Fan or ConeOracle")
    if c.d != f.d:
        raise InvalidParameterError("cloud and fan dimensions differ")
    # score of x against moved direction w u equals score of w^T (x - t)
    # against u, so classify in the original fan frame without rotating
    # the whole cloud
    moved = f.directions @ rho.rotation.T
    if mode == "hard":
        masses = _kernels.hard_masses(c.points, c.weights, moved, rho.translation)
    elif mode == "soft":
        if beta is None or beta <= 0:
            raise InvalidParameterError("soft mode needs beta > 0")
        masses = _kernels.soft_masses(c.points, c.weights, moved, rho.translation, beta)
    else:
        raise InvalidParameterError(f"unknown mode {mode!r}")
    d = f.d
    return MassVector(a=masses[:d], b=masses[d:], mode=mode, beta=beta)


def _cone_masses_oracle(c: PointCloud, o: ConeOracle, rho: RigidMotion, mode: str) -> MassVector:
    if mode != "hard":
        raise InvalidParameterError("oracle fans support hard membership only")
    d = o.table.d
    y = inverse_apply(rho, c.points)
    acc = np.zeros(2 * d)
    for i in range(c.n):
        g, s = o.classify(y[i])
        acc[flat_label(g, s, d)] += c.weights[i]
    return MassVector(a=acc[:d], b=acc[d:], mode="hard", beta=None)


def mc_oracle(m: Measure, f, rho: RigidMotion, n: int, seed) -> tuple[MassVector, np.ndarray]:
    """Fresh-sample Monte Carlo mass estimate with binomial standard errors.

    Hard mode only. The effective seed is seed + ORACLE_SEED_OFFSET, so the
    sample stream is distinct from any solver cloud drawn with the same
    user seed.
    """
    cloud = sample(m, n, seed=seed + ORACLE_SEED_OFFSET)
    mv = cone_masses(cloud, f, rho, mode="hard")
    n_eff = 1.0 / float(np.sum(cloud.weights**2))
    p = np.clip(mv.flat, 0.0, 1.0)
    stderr = np.sqrt(p * (1.0 - p) / n_eff)
    return mv, stderr


# sample count for quantile-estimated support bounds; fixed internal seed
# keeps the bound deterministic per measure
_SUPPORT_SAMPLES = 200_000
_SUPPORT_SEED = 777_003


def support_bound(m, eps: Optional[float] = None) -> SupportBound:
    """Ball around the measure's center of mass holding >= 1 - eps of the mass.

    Exact for uniform balls; an order statistic for clouds; a sampled
    quantile for mixtures. Accepts a Measure or a PointCloud.
    """
    if isinstance(m, PointCloudFile):
        pts, w = load_point_cloud_csv(m.path, d=m.d)
        m = PointCloud(points=pts, weights=w)
    if eps is None:
        eps = default_support_eps(m.d)
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError("eps must be in (0, 1)")

    if isinstance(m, UniformBall):
        return SupportBound(center=m.center.copy(), radius=m.radius, eps=eps)
    if isinstance(m, GaussianMixture):
        m = sample(m, _SUPPORT_SAMPLES, seed=_SUPPORT_SEED)
    if not isinstance(m, PointCloud):
        raise InvalidParameterError(f"unsupported measure type {type(m).__name__}")

    center = m.mean
    dist = np.linalg.norm(m.points - center, axis=1)
    order = np.argsort(dist, kind="stable")
    cum = np.cumsum(m.weights[order])
    idx = int(np.searchsorted(cum, 1.0 - eps, side="left"))
    idx = min(idx, m.n - 1)
    return SupportBound(center=center, radius=float(dist[order[idx]]), eps=eps)
