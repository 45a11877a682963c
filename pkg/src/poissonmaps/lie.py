"""Exact linear-algebra primitives for so(3)/SO(3) and se(3)/SE(3).

Conventions used across the package:

* 3-vectors and 3x3 matrices are plain float64 numpy arrays.
* ``vee`` is defined on arbitrary matrices through the antisymmetric part,
  i.e. ``vee(M)`` is the unique vector with ``cross(vee(M), w) == 0.5*(M - M.T) @ w``.
  A useful consequence is ``vee(outer(a, b)) == -0.5 * cross(a, b)``.
* Rotations are stored as matrices, never as quaternions, and nothing in
  this package re-orthonormalizes them: orthogonality drift along a rollout
  is a diagnostic we want to see, not hide.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHOGONALITY_TOL = 1e-12


def hat(v):
    """Map a 3-vector to the antisymmetric matrix with hat(v) @ w == cross(v, w)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m):
    """Inverse of :func:`hat`, extended to arbitrary matrices via the antisymmetric part."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def rot(axis, angle):
    """Rotation matrix about ``axis`` by ``angle`` radians (Rodrigues formula).

    The axis is normalized internally; a zero axis is only legal for a zero
    angle (identity). A dedicated series branch keeps small angles away from
    0/0 territory and makes rot(a, 0.0) the exact identity.
    """
    a = np.asarray(axis, dtype=float)
    n = np.linalg.norm(a)
    if n < 1e-12:
        if angle == 0.0:
            return np.eye(3)
        raise ValueError("zero rotation axis with nonzero angle")
    a = a / n
    if abs(angle) < 1e-8:
        s = angle
        c1 = 0.5 * angle * angle
    else:
        s = np.sin(angle)
        c1 = 1.0 - np.cos(angle)
    k = hat(a)
    return np.eye(3) + s * k + c1 * (k @ k)


def rotation_defect(m):
    """Frobenius distance of ``m.T @ m`` from the identity."""
    m = np.asarray(m, dtype=float)
    return np.linalg.norm(m.T @ m - np.eye(3))


def check_rotation(m, tol=ORTHOGONALITY_TOL):
    """Validate that ``m`` is a rotation matrix to within ``tol``; return it as float64."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("rotation matrix has non-finite entries")
    defect = rotation_defect(m)
    if defect > tol:
        raise ValueError(f"matrix is not orthogonal: ||R^T R - I|| = {defect:.3e} > {tol:.1e}")
    det = np.linalg.det(m)
    if abs(det - 1.0) > tol:
        raise ValueError(f"matrix has det {det!r}, not a proper rotation")
    return m


@dataclass(frozen=True)
class Rotation:
    """A validated element of SO(3). Construction enforces the manifold invariants."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", check_rotation(self.matrix))

    @classmethod
    def identity(cls):
        return cls(np.eye(3))


@dataclass(frozen=True)
class SE3Element:
    """Element of SE(3) as a (rotation, translation) pair."""

    rot: np.ndarray
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rot", check_rotation(self.rot))
        t = np.asarray(self.trans, dtype=float)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError("translation must be a finite 3-vector")
        object.__setattr__(self, "trans", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def as_matrix(self):
        """Homogeneous 4x4 representation."""
        g = np.eye(4)
        g[:3, :3] = self.rot
        g[:3, 3] = self.trans
        return g


def se3_compose(g1: SE3Element, g2: SE3Element) -> SE3Element:
    """Group product: (Q1 Q2, Q1 v2 + v1)."""
    return SE3Element(g1.rot @ g2.rot, g1.rot @ g2.trans + g1.trans)


def se3_inverse(g: SE3Element) -> SE3Element:
    """Group inverse: (Q^T, -Q^T v)."""
    return SE3Element(g.rot.T, -g.rot.T @ g.trans)


def ad_se3(a, b, c, d):
    """se(3) bracket ad_{(a,b)}(c,d) = (a x c, a x d - c x b)."""
    a, b, c, d = (np.asarray(u, dtype=float) for u in (a, b, c, d))
    return np.cross(a, c), np.cross(a, d) - np.cross(c, b)


def ad_star_se3(a, b, A, B):
    """Coadjoint action ad*_{(a,b)}(A,B) = (-a x A - b x B, -a x B).

    Dual to :func:`ad_se3` under the pairing <(a,b),(A,B)> = a.A + b.B.
    """
    a, b, A, B = (np.asarray(u, dtype=float) for u in (a, b, A, B))
    return -np.cross(a, A) - np.cross(b, B), -np.cross(a, B)


def coad_se3_group(g: SE3Element, A, B):
    """Group coadjoint action Ad*_{g^{-1}}(A,B) = (Q A + v x (Q B), Q B).

    This is the transport that carries body-2 momenta into the frame of
    body 1; for a pure rotation (v = 0) the angular slot reduces to Q A.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    qb = g.rot @ B
    return g.rot @ A + np.cross(g.trans, qb), qb


def coad_so3_group(p, mu):
    """SO(3) analogue of :func:`coad_se3_group`: Ad*_{p^{-1}} mu = p @ mu."""
    return np.asarray(p, dtype=float) @ np.asarray(mu, dtype=float)
