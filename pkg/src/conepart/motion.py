"""Orientation-preserving rigid motions x -> w x + t and local charts on SO(d).

The rotation factor is parametrized near a base point by the matrix
exponential of skew-symmetric matrices; optimizers re-center the base at
the current iterate, so chart parameters stay near zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParameterError

ORTHO_TOL = 1e-10


def orthogonality_defect(w: np.ndarray) -> float:
    """Frobenius norm of w^T w - I."""
    w = np.asarray(w, dtype=float)
    return float(np.linalg.norm(w.T @ w - np.eye(w.shape[0])))


def project_to_rotation(w: np.ndarray) -> np.ndarray:
    """Polar projection onto SO(d); assumes w is within drift distance of it."""
    u, _, vt = np.linalg.svd(w)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1.0
        r = u @ vt
    return r


@dataclass(frozen=True)
class RigidMotion:
    """x -> rotation @ x + translation, with rotation in SO(d)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).ravel()
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidParameterError("rotation must be a square matrix")
        if t.shape != (w.shape[0],):
            raise InvalidParameterError("translation length must match rotation size")
        if orthogonality_defect(w) > ORTHO_TOL:
            raise InvalidParameterError("rotation is not orthogonal within 1e-10")
        if abs(np.linalg.det(w) - 1.0) > ORTHO_TOL:
            raise InvalidParameterError("rotation determinant must be +1 within 1e-10")
        object.__setattr__(self, "rotation", w)
        object.__setattr__(self, "translation", t)

    @property
    def d(self) -> int:
        return self.rotation.shape[0]

    @staticmethod
    def identity(d: int) -> "RigidMotion":
        return RigidMotion(np.eye(d), np.zeros(d))


def apply(m: RigidMotion, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.d:
        raise InvalidParameterError(f"point dimension {x.shape[-1]} != motion dimension {m.d}")
    return x @ m.rotation.T + m.translation


def inverse_apply(m: RigidMotion, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.d:
        raise InvalidParameterError(f"point dimension {x.shape[-1]} != motion dimension {m.d}")
    return (x - m.translation) @ m.rotation


def compose(m2: RigidMotion, m1: RigidMotion) -> RigidMotion:
    """Motion equal to applying m1 first, then m2."""
    if m1.d != m2.d:
        raise InvalidParameterError("cannot compose motions of different dimension")
    return RigidMotion(m2.rotation @ m1.rotation, m2.rotation @ m1.translation + m2.translation)


def n_rotation_params(d: int) -> int:
    return d * (d - 1) // 2


def skew_matrix(theta: np.ndarray, d: int) -> np.ndarray:
    """Skew-symmetric matrix from d(d-1)/2 parameters, one per plane (i,j), i<j.

    Positive theta in plane (i, j) rotates axis i toward axis j, so for
    d = 3 the parameter (pi/2, 0, 0) sends e_0 to e_1.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape != (n_rotation_params(d),):
        raise InvalidParameterError(
            f"expected {n_rotation_params(d)} rotation parameters, got {theta.size}"
        )
    a = np.zeros((d, d))
    iu = np.triu_indices(d, k=1)
    a[iu] = theta
    return a.T - a


@dataclass(frozen=True)
class RotationChart:
    """Local chart theta -> base @ exp(A(theta)) on SO(d)."""

    base: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.base, dtype=float)
        if orthogonality_defect(b) > ORTHO_TOL or abs(np.linalg.det(b) - 1.0) > ORTHO_TOL:
            raise InvalidParameterError("chart base must be special orthogonal within 1e-10")
        object.__setattr__(self, "base", b)

    @property
    def d(self) -> int:
        return self.base.shape[0]

    @property
    def n_params(self) -> int:
        return n_rotation_params(self.d)

    def eval(self, theta: np.ndarray) -> np.ndarray:
        return chart_eval(self, theta)

    def recenter(self, theta: np.ndarray) -> "RotationChart":
        """New chart based at the current point chart(theta)."""
        return RotationChart(base=self.eval(theta))


def chart_eval(c: RotationChart, theta: np.ndarray) -> np.ndarray:
    """Evaluate base @ exp(A(theta)); result is re-orthonormalized on drift > 1e-10."""
    w = c.base @ expm(skew_matrix(theta, c.d))
    if orthogonality_defect(w) > ORTHO_TOL:
        w = project_to_rotation(w)
    return w


def random_rotation(d: int, seed) -> np.ndarray:
    """Haar-distributed rotation: QR of a standard normal matrix with sign fix."""
    if d < 2:
        raise InvalidParameterError("random_rotation needs d >= 2")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1.0
    return q
