"""Dynamics of two quadrotors carrying a rigid bar on elastic cables.

Sign convention: cable/quadrotor ``j`` (0-based index ``i``) sits at the
bar end ``x_r + s_j L_r q_r`` with ``s_j = (-1)**j``, i.e. ``s = (-1, +1)``.

Models provided here:

* the full elastic model, written as a linear solve for the coupled
  accelerations (``full_accelerations``);
* the inelastic model (cables fixed at ``L_c``), which is the slow limit;
* the quasi-steady stretch map and the boundary-layer (fast) system;
* the simplified reduced model driven by virtual controls ``mu_j``,
  optionally with bounded disturbances;
* energy diagnostics and an analytic hover equilibrium.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import (CableCollapse, NonParallelMu, SingularMassMatrix,
                     ValidationError)
from .manifold import E3, cross, dot, hat, nearest_rotation, norm, perpendicular, unit

SIGNS = (-1.0, 1.0)
COND_LIMIT = 1e12
MIN_CABLE = 1e-6

# slices into the stacked acceleration vector of the elastic model
_V = slice(0, 3)
_WR = slice(3, 6)
_L = (6, 7)
_WJ = (slice(8, 11), slice(11, 14))


@dataclass(frozen=True)
class Params:
    """Physical constants.  ``L_r`` is the half-length of the bar."""

    m_Q: float = 0.755
    m_r: float = 0.5
    L_r: float = 1.0
    L_c: float = 1.0
    J_Q: np.ndarray = field(default_factory=lambda: np.diag([0.082, 0.0845, 0.1377]))
    g: float = 9.81
    k_bar: float = 50.0
    c_bar: float = 5.0
    epsilon: float = 0.04

    def __post_init__(self):
        J = np.array(self.J_Q, dtype=float)
        object.__setattr__(self, "J_Q", J)
        for name in ("m_Q", "m_r", "L_r", "L_c", "g", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"params.{name}", "must be strictly positive")
        for name in ("k_bar", "c_bar"):
            if getattr(self, name) < 0:
                raise ValidationError(f"params.{name}", "must be non-negative")
        if J.shape != (3, 3) or not np.allclose(J, J.T, atol=1e-12):
            raise ValidationError("params.J_Q", "must be a symmetric 3x3 matrix")
        if np.min(np.linalg.eigvalsh(J)) <= 0:
            raise ValidationError("params.J_Q", "must be positive-definite")

    @property
    def m_eff(self) -> float:
        return 2.0 * self.m_Q + self.m_r

    @property
    def I_eff(self) -> float:
        return (2.0 * self.m_Q + 2.0 / 3.0 * self.m_r) * self.L_r

    @property
    def I_r(self) -> float:
        return 2.0 / 3.0 * self.m_r * self.L_r

    @property
    def k(self) -> float:
        return self.k_bar / self.epsilon ** 2

    @property
    def c(self) -> float:
        return self.c_bar / self.epsilon

    @property
    def J_r(self) -> np.ndarray:
        """Bar inertia in a body frame whose first axis is ``q_r`` (diagnostic)."""
        a = 4.0 / 3.0 * self.m_r * self.L_r ** 2
        return np.diag([0.0, a, a])

    def with_(self, **kw) -> "Params":
        return replace(self, **kw)


def _as_pair(a):
    return np.asarray(a, dtype=float).reshape(2, 3)


@dataclass
class FullState:
    """State of the elastic model.  Per-cable quantities are stacked on axis 0."""

    x_r: np.ndarray
    v_r: np.ndarray
    q_r: np.ndarray
    w_r: np.ndarray
    q: np.ndarray          # (2, 3) cable attitudes
    w: np.ndarray          # (2, 3) cable angular velocities
    l: np.ndarray          # (2,) cable lengths
    ldot: np.ndarray       # (2,)
    R: np.ndarray = field(default_factory=lambda: np.stack([np.eye(3), np.eye(3)]))
    Om: np.ndarray = field(default_factory=lambda: np.zeros((2, 3)))

    SIZE = 52

    def to_array(self) -> np.ndarray:
        return np.concatenate([
            self.x_r, self.v_r, self.q_r, self.w_r,
            np.ravel(self.q), np.ravel(self.w), self.l, self.ldot,
            np.ravel(self.R), np.ravel(self.Om),
        ]).astype(float)

    @classmethod
    def from_array(cls, a) -> "FullState":
        a = np.asarray(a, dtype=float)
        return cls(a[0:3], a[3:6], a[6:9], a[9:12], a[12:18].reshape(2, 3),
                   a[18:24].reshape(2, 3), a[24:26], a[26:28],
                   a[28:46].reshape(2, 3, 3), a[46:52].reshape(2, 3))

    def y(self, p: Params) -> np.ndarray:
        """Scaled stretch ``(l - L_c) / eps^2``."""
        return (self.l - p.L_c) / p.epsilon ** 2

    def z(self, p: Params) -> np.ndarray:
        """Scaled stretch rate ``ldot / eps``."""
        return self.ldot / p.epsilon

    def zeta(self) -> np.ndarray:
        return self.l[:, None] * self.q

    def quad_positions(self, L_r: float) -> np.ndarray:
        return np.array([self.x_r + SIGNS[i] * L_r * self.q_r - self.l[i] * self.q[i]
                         for i in range(2)])

    def reduced(self) -> "ReducedState":
        return ReducedState(self.x_r.copy(), self.v_r.copy(), self.q_r.copy(),
                            self.w_r.copy(), self.q.copy(), self.w.copy(),
                            self.R.copy(), self.Om.copy())

    def renormalized(self) -> "FullState":
        return FullState.from_array(renormalize_full(self.to_array()))


@dataclass
class ReducedState:
    """State of the inelastic / reduced model; quadrotor attitudes optional."""

    x_r: np.ndarray
    v_r: np.ndarray
    q_r: np.ndarray
    w_r: np.ndarray
    q: np.ndarray
    w: np.ndarray
    R: Optional[np.ndarray] = None
    Om: Optional[np.ndarray] = None

    def to_array(self) -> np.ndarray:
        parts = [self.x_r, self.v_r, self.q_r, self.w_r, np.ravel(self.q), np.ravel(self.w)]
        if self.R is not None:
            parts += [np.ravel(self.R), np.ravel(self.Om)]
        return np.concatenate(parts).astype(float)

    @classmethod
    def from_array(cls, a) -> "ReducedState":
        a = np.asarray(a, dtype=float)
        R = Om = None
        if a.shape[0] == 48:
            R, Om = a[24:42].reshape(2, 3, 3), a[42:48].reshape(2, 3)
        return cls(a[0:3], a[3:6], a[6:9], a[9:12], a[12:18].reshape(2, 3),
                   a[18:24].reshape(2, 3), R, Om)

    def quad_positions(self, p: Params) -> np.ndarray:
        return np.array([self.x_r + SIGNS[i] * p.L_r * self.q_r - p.L_c * self.q[i]
                         for i in range(2)])

    def to_full(self, p: Params, y=(0.0, 0.0), z=(0.0, 0.0)) -> FullState:
        """Lift to the elastic model with fast variables ``(y, z)``."""
        eps = p.epsilon
        l = p.L_c + eps ** 2 * np.asarray(y, dtype=float)
        ldot = eps * np.asarray(z, dtype=float)
        R = self.R if self.R is not None else np.stack([np.eye(3), np.eye(3)])
        Om = self.Om if self.Om is not None else np.zeros((2, 3))
        return FullState(self.x_r.copy(), self.v_r.copy(), self.q_r.copy(), self.w_r.copy(),
                         self.q.copy(), self.w.copy(), l, ldot, R.copy(), Om.copy())

    def renormalized(self) -> "ReducedState":
        return ReducedState.from_array(renormalize_reduced(self.to_array()))


def _renorm_common(a):
    a = a.copy()
    a[6:9] = unit(a[6:9])
    a[9:12] = perpendicular(a[9:12], a[6:9])
    for i in range(2):
        qs, ws = slice(12 + 3 * i, 15 + 3 * i), slice(18 + 3 * i, 21 + 3 * i)
        a[qs] = unit(a[qs])
        a[ws] = perpendicular(a[ws], a[qs])
    return a


def renormalize_full(a: np.ndarray) -> np.ndarray:
    """Project a flat FullState vector back onto S^2 / TS^2 / SO(3)."""
    a = _renorm_common(a)
    for i in range(2):
        rs = slice(28 + 9 * i, 37 + 9 * i)
        a[rs] = nearest_rotation(a[rs].reshape(3, 3)).ravel()
    return a


def renormalize_reduced(a: np.ndarray) -> np.ndarray:
    a = _renorm_common(a)
    if a.shape[0] == 48:
        for i in range(2):
            rs = slice(24 + 9 * i, 33 + 9 * i)
            a[rs] = nearest_rotation(a[rs].reshape(3, 3)).ravel()
    return a


@dataclass
class Disturbance:
    """Bounded disturbance forces/torques acting on the reduced model."""

    dx: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dq_r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dq: np.ndarray = field(default_factory=lambda: np.zeros((2, 3)))
    bound_x: float = np.inf
    bound_q_r: float = np.inf
    bound_q: tuple = (np.inf, np.inf)

    def within_bounds(self) -> bool:
        return (np.linalg.norm(self.dx) <= self.bound_x
                and np.linalg.norm(self.dq_r) <= self.bound_q_r
                and all(np.linalg.norm(self.dq[i]) <= self.bound_q[i] for i in range(2)))


ZERO_DISTURBANCE = Disturbance()


class DisturbanceSignal:
    """Seeded, bound-saturating disturbance generator.

    Each channel is ``delta * d * (0.5 + 0.5 sin(2 pi f t + phi))`` with a
    fixed unit direction ``d`` and a frequency in [0.1, 1] Hz, all drawn
    from ``numpy.random.default_rng(seed)``.
    """

    def __init__(self, delta_x: float, delta_q_r: float, delta_q, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.delta = np.array([delta_x, delta_q_r, delta_q[0], delta_q[1]], dtype=float)
        d = rng.normal(size=(4, 3))
        self.dirs = d / np.linalg.norm(d, axis=1, keepdims=True)
        self.freq = rng.uniform(0.1, 1.0, size=4)
        self.phase = rng.uniform(0.0, 2 * np.pi, size=4)

    def __call__(self, t: float) -> Disturbance:
        amp = self.delta * (0.5 + 0.5 * np.sin(2 * np.pi * self.freq * t + self.phase))
        vecs = amp[:, None] * self.dirs
        return Disturbance(vecs[0], vecs[1], vecs[2:4].copy(), self.delta[0], self.delta[1],
                           (self.delta[2], self.delta[3]))


@dataclass
class FullAccel:
    vdot: np.ndarray
    wrdot: np.ndarray
    lddot: np.ndarray
    wdot: np.ndarray
    Omdot: np.ndarray


def _zeta_parts(q, w, l, ldot):
    """``zeta_ddot = q * l_ddot - l * hat(q) w_dot + const``; returns const."""
    return 2.0 * ldot * cross(w, q) - l * dot(w, w) * q


def _assemble(q_r, w_r, q, w, l, ldot, u, F, p: Params, elastic: bool):
    """Linear system ``A a = b`` for the coupled accelerations.

    Unknowns: ``[v_dot, w_r_dot, l_ddot_1, l_ddot_2, w_dot_1, w_dot_2]``.
    With ``elastic=False`` the cable lengths are frozen and the two
    length rows/columns are dropped.
    """
    mQ, Lr = p.m_Q, p.L_r
    Hr = hat(q_r)
    cr = -dot(w_r, w_r) * q_r                       # q_r_ddot = -Hr w_r_dot + cr
    A = np.zeros((14, 14))
    b = np.zeros(14)
    I3 = np.eye(3)

    A[0:3, _V] = p.m_eff * I3
    b[0:3] = u[0] + u[1] - p.m_eff * p.g * E3
    A[3:6, _WR] = p.I_eff * I3
    b[3:6] = Hr @ (u[1] - u[0])
    for i in range(2):
        s = SIGNS[i]
        qj, Hj = q[i], hat(q[i])
        cz = _zeta_parts(qj, w[i], l[i], ldot[i])
        Li, Wi = _L[i], _WJ[i]
        # translational balance of the bar
        A[0:3, Li] -= mQ * qj
        A[0:3, Wi] += mQ * l[i] * Hj
        b[0:3] += mQ * cz
        # rotational balance of the bar
        A[3:6, Li] -= mQ * s * (Hr @ qj)
        A[3:6, Wi] += mQ * s * l[i] * (Hr @ Hj)
        b[3:6] += mQ * s * (Hr @ cz)
        # cable length
        A[Li, Li] = mQ
        A[Li, _V] = -mQ * qj
        A[Li, _WR] = mQ * s * Lr * (qj @ Hr)
        b[Li] = mQ * p.g * qj[2] - dot(qj, u[i]) + F[i] - mQ * dot(qj, cz) + mQ * s * Lr * dot(qj, cr)
        # cable attitude, with the tangency constraint folded into the diagonal block
        A[Wi, Wi] = l[i] * I3
        A[Wi, _V] = -Hj
        A[Wi, _WR] = s * Lr * (Hj @ Hr)
        b[Wi] = Hj @ (p.g * E3 - u[i] / mQ) - Hj @ cz + s * Lr * (Hj @ cr)
    if not elastic:
        keep = np.r_[0:6, 8:14]
        A, b = A[np.ix_(keep, keep)], b[keep]
    return A, b


def _solve(A, b):
    if np.linalg.cond(A) > COND_LIMIT:
        raise SingularMassMatrix(f"acceleration system is singular (cond={np.linalg.cond(A):.3e})")
    return np.linalg.solve(A, b)


def quad_attitude_accel(R, Om, M, p: Params) -> np.ndarray:
    """Body-rate derivatives ``J^-1 (J Om x Om + M)`` for both quadrotors."""
    J = p.J_Q
    out = np.empty((2, 3))
    for i in range(2):
        JO = J @ Om[i]
        out[i] = np.linalg.solve(J, cross(JO, Om[i]) + M[i])
    return out


def full_accelerations(s: FullState, u, M, p: Params) -> FullAccel:
    """Accelerations of the elastic model under thrusts ``u`` and moments ``M``."""
    u, M = _as_pair(u), _as_pair(M)
    if np.any(s.l <= MIN_CABLE):
        raise CableCollapse(f"cable length {np.min(s.l):.3e} m at or below {MIN_CABLE}")
    F = -p.c * s.ldot + p.k * (p.L_c - s.l)
    A, b = _assemble(s.q_r, s.w_r, s.q, s.w, s.l, s.ldot, u, F, p, elastic=True)
    a = _solve(A, b)
    return FullAccel(a[_V], a[_WR], a[6:8].copy(), np.stack([a[_WJ[0]], a[_WJ[1]]]),
                     quad_attitude_accel(s.R, s.Om, M, p))


def equation_residuals(s: FullState, acc: FullAccel, u, M, p: Params) -> np.ndarray:
    """Residuals of the elastic equations of motion, evaluated term by term.

    Written independently of :func:`_assemble`: second derivatives of
    ``q`` and ``zeta`` are formed with cross products and each equation
    is evaluated as left side minus right side.  The last entries are the
    tangency conditions ``w_dot . q`` for the bar and both cables.
    """
    u, M = _as_pair(u), _as_pair(M)
    mQ, g = p.m_Q, p.g
    ge3 = np.array([0.0, 0.0, g])
    qdd_r = np.cross(acc.wrdot, s.q_r) - np.dot(s.w_r, s.w_r) * s.q_r
    zdd = []
    for i in range(2):
        qd = np.cross(s.w[i], s.q[i])
        qdd = np.cross(acc.wdot[i], s.q[i]) - np.dot(s.w[i], s.w[i]) * s.q[i]
        zdd.append(acc.lddot[i] * s.q[i] + 2 * s.ldot[i] * qd + s.l[i] * qdd)
    res = []
    res.append(p.m_eff * (acc.vdot + ge3) - (u[0] + u[1] + mQ * (zdd[0] + zdd[1])))
    res.append(p.I_eff * acc.wrdot - np.cross(s.q_r, u[1] - u[0] + mQ * (zdd[1] - zdd[0])))
    for i in range(2):
        drive = acc.vdot + SIGNS[i] * p.L_r * qdd_r + ge3 - u[i] / mQ
        lhs = mQ * np.dot(s.q[i], zdd[i])
        rhs = mQ * np.dot(s.q[i], drive) - p.c * s.ldot[i] + p.k * (p.L_c - s.l[i])
        res.append(np.atleast_1d(lhs - rhs))
        res.append(np.cross(s.q[i], zdd[i]) - np.cross(s.q[i], drive))
    for i in range(2):
        JO = p.J_Q @ s.Om[i]
        res.append(p.J_Q @ acc.Omdot[i] - (np.cross(JO, s.Om[i]) + M[i]))
    res.append(np.array([np.dot(acc.wrdot, s.q_r), np.dot(acc.wdot[0], s.q[0]),
                         np.dot(acc.wdot[1], s.q[1])]))
    return np.concatenate(res)


def full_derivative(s: FullState, acc: FullAccel) -> np.ndarray:
    """Pack kinematics and accelerations into a flat state derivative."""
    d = np.empty(FullState.SIZE)
    d[0:3] = s.v_r
    d[3:6] = acc.vdot
    d[6:9] = cross(s.w_r, s.q_r)
    d[9:12] = acc.wrdot
    for i in range(2):
        d[12 + 3 * i:15 + 3 * i] = cross(s.w[i], s.q[i])
        d[18 + 3 * i:21 + 3 * i] = acc.wdot[i]
        d[28 + 9 * i:37 + 9 * i] = (s.R[i] @ hat(s.Om[i])).ravel()
    d[24:26] = s.ldot
    d[26:28] = acc.lddot
    d[46:52] = acc.Omdot.ravel()
    return d


def full_rhs(t: float, s: FullState, ctrl: Callable, p: Params) -> np.ndarray:
    """Time derivative of the elastic model; ``ctrl(t, s)`` returns ``(u, M)``."""
    u, M = ctrl(t, s)
    return full_derivative(s, full_accelerations(s, u, M, p))


def inelastic_accelerations(x: ReducedState, u, p: Params):
    """Bar and cable accelerations with cable length frozen at ``L_c``.

    Returns ``(v_dot, w_r_dot, w_dot)`` with ``w_dot`` of shape (2, 3).
    """
    u = _as_pair(u)
    l = np.array([p.L_c, p.L_c])
    A, b = _assemble(x.q_r, x.w_r, x.q, x.w, l, np.zeros(2), u, np.zeros(2), p, elastic=False)
    a = _solve(A, b)
    return a[0:3], a[3:6], np.stack([a[6:9], a[9:12]])


def _second_derivative(q, w, wdot):
    return cross(wdot, q) - dot(w, w) * q


def quasi_steady_state(t: float, x: ReducedState, u, p: Params):
    """Quasi-steady fast variables ``(y, z)`` for each cable.

    ``y_j`` is the scaled static stretch that balances the cable tension
    implied by the inelastic closed loop; ``z_j`` is zero.
    """
    u = _as_pair(u)
    vdot, wrdot, wdot = inelastic_accelerations(x, u, p)
    qdd_r = _second_derivative(x.q_r, x.w_r, wrdot)
    y = np.empty(2)
    for i in range(2):
        qdd = _second_derivative(x.q[i], x.w[i], wdot[i])
        drive = p.m_Q * (vdot + SIGNS[i] * p.L_r * qdd_r + p.g * E3) - p.m_Q * p.L_c * qdd - u[i]
        y[i] = dot(x.q[i], drive) / p.k_bar
    return y, np.zeros(2)


def fast_rhs(x: ReducedState, y, z, u, p: Params) -> np.ndarray:
    """Fast subsystem at ``eps = 0``: returns ``(dy/dtau, dz/dtau)`` stacked as (2, 2)."""
    u = _as_pair(u)
    y, z = np.asarray(y, dtype=float), np.asarray(z, dtype=float)
    F = -p.c_bar * z - p.k_bar * y
    l = np.array([p.L_c, p.L_c])
    A, b = _assemble(x.q_r, x.w_r, x.q, x.w, l, np.zeros(2), u, F, p, elastic=True)
    a = _solve(A, b)
    return np.stack([z, a[6:8]])


def boundary_layer_rhs(tau: float, r, x: ReducedState, u, p: Params) -> np.ndarray:
    """Boundary-layer system in stretched time around the quasi-steady state.

    ``r`` has shape (2, 2): row 0 holds the y-offsets, row 1 the z-offsets.
    ``(t, x)`` and the controls ``u`` are frozen.
    """
    r = np.asarray(r, dtype=float).reshape(2, 2)
    h_y, h_z = quasi_steady_state(0.0, x, u, p)
    return fast_rhs(x, r[0] + h_y, r[1] + h_z, u, p)


def reduced_rhs(t: float, s: ReducedState, mu, u, d: Optional[Disturbance], p: Params,
                M=None) -> np.ndarray:
    """Simplified reduced model driven by virtual controls ``mu`` and thrusts ``u``.

    ``mu_j`` must be parallel to ``q_j``.  Bar accelerations are computed
    first and then fed into the cable equations.  Disturbance torques are
    projected onto the tangent spaces.  When the state carries quadrotor
    attitudes, ``M`` supplies their moments (zero if omitted).
    """
    mu, u = _as_pair(mu), _as_pair(u)
    d = d if d is not None else ZERO_DISTURBANCE
    for i in range(2):
        if norm(cross(mu[i], s.q[i])) > 1e-9 * max(1.0, norm(mu[i])):
            raise NonParallelMu(f"mu_{i + 1} is not parallel to q_{i + 1}")
    vdot = (mu[0] + mu[1] + d.dx) / p.m_r - p.g * E3
    wrdot = (cross(s.q_r, mu[1] - mu[0]) + perpendicular(d.dq_r, s.q_r)) / p.I_r
    qdd_r = _second_derivative(s.q_r, s.w_r, wrdot)
    n = 24 if s.R is None else 48
    out = np.empty(n)
    out[0:3] = s.v_r
    out[3:6] = vdot
    out[6:9] = cross(s.w_r, s.q_r)
    out[9:12] = wrdot
    for i in range(2):
        qj = s.q[i]
        drive = vdot + SIGNS[i] * p.L_r * qdd_r + p.g * E3
        wdot = (p.m_Q * cross(qj, drive) - cross(qj, u[i]) + perpendicular(d.dq[i], qj)) / (p.m_Q * p.L_c)
        out[12 + 3 * i:15 + 3 * i] = cross(s.w[i], qj)
        out[18 + 3 * i:21 + 3 * i] = wdot
    if s.R is not None:
        M = np.zeros((2, 3)) if M is None else _as_pair(M)
        for i in range(2):
            out[24 + 9 * i:33 + 9 * i] = (s.R[i] @ hat(s.Om[i])).ravel()
        out[42:48] = quad_attitude_accel(s.R, s.Om, M, p).ravel()
    return out


def total_energy(s: FullState, p: Params) -> float:
    """Total mechanical energy of the elastic model.

    The bar's rotational term uses the inertia consistent with the
    equations of motion, ``(1/3) m_r L_r^2 |q_r_dot|^2``.
    """
    qd_r = cross(s.w_r, s.q_r)
    E = 0.5 * p.m_r * dot(s.v_r, s.v_r) + p.m_r * p.g * s.x_r[2]
    E += p.m_r * p.L_r ** 2 * dot(qd_r, qd_r) / 3.0
    for i in range(2):
        xq = s.x_r + SIGNS[i] * p.L_r * s.q_r - s.l[i] * s.q[i]
        vq = s.v_r + SIGNS[i] * p.L_r * qd_r - s.ldot[i] * s.q[i] - s.l[i] * cross(s.w[i], s.q[i])
        E += 0.5 * p.m_Q * dot(vq, vq) + p.m_Q * p.g * xq[2]
        E += 0.5 * float(s.Om[i] @ p.J_Q @ s.Om[i])
        E += 0.5 * p.k * (p.L_c - s.l[i]) ** 2
    return float(E)


def hover_equilibrium(p: Params, x_target=(0.0, 0.0, 0.0), q_r_target=(1.0, 0.0, 0.0)):
    """Static hover with vertical cables; returns ``(state, u1, u2)``."""
    q_r = np.asarray(q_r_target, dtype=float)
    if abs(q_r[2]) > 1e-12:
        raise ValidationError("q_r_target", "must be horizontal")
    q_r = q_r / np.linalg.norm(q_r)
    stretch = p.m_r * p.g * p.epsilon ** 2 / (2.0 * p.k_bar)
    q = np.array([-E3, -E3])
    s = FullState(np.asarray(x_target, dtype=float).copy(), np.zeros(3), q_r, np.zeros(3),
                  q, np.zeros((2, 3)), np.full(2, p.L_c + stretch), np.zeros(2))
    u = (p.m_Q + 0.5 * p.m_r) * p.g * E3
    return s, u.copy(), u.copy()
