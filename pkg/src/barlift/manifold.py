"""Primitives on S^2 and SO(3): hat/vee, projections and tracking error maps.

Vectors are plain ``numpy`` arrays of shape (3,) and rotations are (3, 3)
arrays.  Everything here is a pure function of its inputs.
"""

import numpy as np

from .errors import DegenerateState, NonSkewInput, TangencyViolation

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

TANGENCY_TOL = 1e-9
SKEW_TOL = 1e-9


def cross(a, b):
    # np.cross carries ~10 us of overhead; this is on every hot path
    return np.array((
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ))


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def norm(a):
    return (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) ** 0.5


def hat(v):
    """Skew-symmetric matrix with ``hat(v) @ w == cross(v, w)``."""
    return np.array((
        (0.0, -v[2], v[1]),
        (v[2], 0.0, -v[0]),
        (-v[1], v[0], 0.0),
    ))


def vee(M):
    """Inverse of :func:`hat`.

    Raises NonSkewInput when ``M`` is not skew-symmetric to 1e-9, which
    usually means a rotation or derivative upstream has been corrupted.
    """
    M = np.asarray(M, dtype=float)
    if np.max(np.abs(M + M.T)) >= SKEW_TOL:
        raise NonSkewInput(f"matrix is not skew-symmetric (|M+M^T|={np.max(np.abs(M + M.T)):.3e})")
    return np.array((M[2, 1], M[0, 2], M[1, 0]))


def skew_part(M):
    return 0.5 * (M - M.T)


def decompose(v, q):
    """Split ``v`` into components parallel and perpendicular to unit ``q``."""
    parallel = dot(v, q) * q
    return parallel, v - parallel


def perpendicular(v, q):
    return v - dot(v, q) * q


def attitude_error(q_des, q):
    """Attitude error on S^2, ``q_des x q``; tangent at ``q``."""
    return cross(q_des, q)


def angvel_error(q, omega, omega_des, q_des=None):
    """Angular velocity error ``omega + hat(q)^2 omega_des`` at ``q``.

    ``hat(q)^2 w`` equals ``(q.w) q - w``, which is how it is evaluated.
    When ``q_des`` is given, tangency of ``omega_des`` is checked too.
    """
    if abs(dot(omega, q)) > TANGENCY_TOL:
        raise TangencyViolation(f"omega.q = {dot(omega, q):.3e}")
    if q_des is not None and abs(dot(omega_des, q_des)) > TANGENCY_TOL:
        raise TangencyViolation(f"omega_des.q_des = {dot(omega_des, q_des):.3e}")
    return omega + dot(q, omega_des) * q - omega_des


def config_error_psi(q_des, q):
    """Configuration error ``1 - q_des.q`` in [0, 2]."""
    return 1.0 - dot(q_des, q)


def rotation_errors(R_des, Omega_des, R, Omega):
    """SO(3) attitude and body-rate tracking errors (e_R, e_Omega)."""
    RtRd = R.T @ R_des
    e_R = 0.5 * vee(R_des.T @ R - R.T @ R_des)
    e_Omega = Omega - RtRd @ Omega_des
    return e_R, e_Omega


def unit(v):
    n = norm(v)
    if n <= 0.5 or n >= 1.5:
        raise DegenerateState(f"unit vector drifted to norm {n:.6g}")
    return v / n


def nearest_rotation(R):
    """Polar-decomposition projection of ``R`` onto SO(3)."""
    if np.linalg.norm(R.T @ R - np.eye(3)) > 0.1:
        raise DegenerateState("rotation drifted more than 0.1 from orthogonal")
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        raise DegenerateState("rotation flipped orientation")
    return Q


def renormalize(units, tangents=(), rotations=()):
    """Project a bundle of manifold values back onto their manifolds.

    ``tangents`` is aligned with ``units``; each entry is either ``None``
    or a vector to be projected onto the tangent space of the (already
    normalised) corresponding unit vector.  Returns ``(units, tangents,
    rotations)`` as lists.
    """
    new_units = [unit(np.asarray(q, dtype=float)) for q in units]
    new_tangents = []
    for q, w in zip(new_units, tangents):
        new_tangents.append(None if w is None else perpendicular(np.asarray(w, dtype=float), q))
    new_rotations = [nearest_rotation(np.asarray(R, dtype=float)) for R in rotations]
    return new_units, new_tangents, new_rotations
