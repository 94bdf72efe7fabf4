"""Rigid transforms: 4x4 homogeneous matrices, millimeters.

All placement math in the simulator flows through these helpers.  A transform
is a plain ``(4, 4)`` float64 ndarray whose upper-left 3x3 block is a proper
rotation and whose bottom row is exactly ``(0, 0, 0, 1)``.  Angles are degrees
at every public API; radians never leak out of this module.
"""

from __future__ import annotations

import math

import numpy as np

ORTHO_TOL = 1e-9


class GeometryError(ValueError):
    """Invalid geometric input (NaN coordinates, broken rotation, ...)."""


def identity() -> np.ndarray:
    return np.eye(4)


def translate(x: float, y: float, z: float) -> np.ndarray:
    t = np.eye(4)
    t[:3, 3] = (x, y, z)
    return t


def _rot(axis: int, angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    t = np.eye(4)
    i, j = (axis + 1) % 3, (axis + 2) % 3
    t[i, i] = c
    t[i, j] = -s
    t[j, i] = s
    t[j, j] = c
    return t


def rot_x(angle_deg: float) -> np.ndarray:
    return _rot(0, angle_deg)


def rot_y(angle_deg: float) -> np.ndarray:
    return _rot(1, angle_deg)


def rot_z(angle_deg: float) -> np.ndarray:
    return _rot(2, angle_deg)


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Transform applying ``b`` first, then ``a`` (matrix product ``a @ b``)."""
    return a @ b


def invert(t: np.ndarray) -> np.ndarray:
    """Rigid inverse (R^T, -R^T p); never a general matrix inversion."""
    r = t[:3, :3]
    out = np.eye(4)
    out[:3, :3] = r.T
    out[:3, 3] = -r.T @ t[:3, 3]
    return out


def apply_point(t: np.ndarray, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return t[:3, :3] @ p + t[:3, 3]


def apply_points(t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    return pts @ t[:3, :3].T + t[:3, 3]


def validate_transform(t: np.ndarray) -> np.ndarray:
    """Check rigidity; returns the input for chaining.

    Raises GeometryError when the rotation block is not orthonormal with
    determinant +1 (per-entry tolerance 1e-9) or the bottom row is off.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (4, 4) or not np.all(np.isfinite(t)):
        raise GeometryError("transform must be a finite 4x4 matrix")
    if not np.array_equal(t[3], (0.0, 0.0, 0.0, 1.0)):
        raise GeometryError("transform bottom row must be (0,0,0,1)")
    r = t[:3, :3]
    if not np.allclose(r.T @ r, np.eye(3), atol=ORTHO_TOL):
        raise GeometryError("rotation block is not orthonormal")
    if np.linalg.det(r) < 0.0:
        raise GeometryError("rotation block must have determinant +1")
    return t


def check_vec3(p, name: str = "point") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise GeometryError(f"{name} must be a finite 3-vector")
    return p
