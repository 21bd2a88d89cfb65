"""Geometric tracking controllers for the bar, the cables and the quadrotors.

The bar is steered through virtual forces ``mu_j`` acting along the
cables; each cable is steered onto the direction ``-mu_tilde_j`` by the
perpendicular thrust component; each quadrotor tilts its thrust axis onto
the commanded force through an SO(3) attitude loop.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateThrust, GimbalDegeneracy, ValidationError
from .manifold import E3, cross, dot, hat, norm, perpendicular, rotation_errors, skew_part, vee
from .model import SIGNS, Params, ReducedState
from .trajectory import DesiredSample, Trajectory

THRUST_EPS = 1e-8


@dataclass(frozen=True)
class GainSet:
    """Controller gains and the Lyapunov constants used to certify them."""

    k_x: float = 9.0
    k_v: float = 6.0
    k_qr: float = 2.0
    k_wr: float = 2.0 * np.sqrt(2.0)
    k_q: tuple = (36.0, 36.0)
    k_w: tuple = (12.0, 12.0)
    k_R: float = 8.81
    k_Om: float = 2.54
    c_x: float = 0.5
    c_qr: float = 0.5
    c_q: tuple = (1.0, 1.0)

    def __post_init__(self):
        for name in ("k_q", "k_w", "c_q"):
            v = tuple(float(a) for a in np.broadcast_to(getattr(self, name), (2,)))
            object.__setattr__(self, name, v)
        scalars = ("k_x", "k_v", "k_qr", "k_wr", "k_R", "k_Om", "c_x", "c_qr")
        for name in scalars:
            if not getattr(self, name) > 0:
                raise ValidationError(f"gains.{name}", "must be strictly positive")
        for name in ("k_q", "k_w", "c_q"):
            if not all(v > 0 for v in getattr(self, name)):
                raise ValidationError(f"gains.{name}", "must be strictly positive")
        if not self.c_x < np.sqrt(self.k_x):
            raise ValidationError("gains.c_x", "must be below sqrt(k_x)")
        if not self.c_qr < np.sqrt(self.k_qr):
            raise ValidationError("gains.c_qr", "must be below sqrt(k_qr)")
        for i in range(2):
            if not self.c_q[i] < np.sqrt(self.k_q[i]):
                raise ValidationError(f"gains.c_q{i + 1}", f"must be below sqrt(k_q{i + 1})")

    def with_(self, **kw) -> "GainSet":
        return replace(self, **kw)


@dataclass
class TrackingErrors:
    e_x: np.ndarray
    e_v: np.ndarray
    e_qr: np.ndarray
    e_wr: np.ndarray
    e_q: np.ndarray
    e_w: np.ndarray
    psi_r: float
    psi: np.ndarray

    def norms(self) -> np.ndarray:
        """``[|e_x|, |e_v|, |e_qr|, |e_wr|, |e_q1|, |e_w1|, |e_q2|, |e_w2|]``."""
        return np.array([norm(self.e_x), norm(self.e_v), norm(self.e_qr), norm(self.e_wr),
                         norm(self.e_q[0]), norm(self.e_w[0]), norm(self.e_q[1]), norm(self.e_w[1])])


@dataclass
class ControlOutput:
    des: DesiredSample
    errors: TrackingErrors
    mu_tilde: np.ndarray
    mu: np.ndarray
    q_des: np.ndarray
    w_des: np.ndarray
    wdot_des: np.ndarray
    vdot: np.ndarray
    wrdot: np.ndarray
    qdd_r: np.ndarray
    u_par: np.ndarray
    u_perp: np.ndarray
    u: np.ndarray


def _hat2(q, v):
    # hat(q)^2 v for unit q
    return dot(q, v) * q - v


def rod_errors(des: DesiredSample, x_r, v_r, q_r, w_r):
    """Bar tracking errors ``(e_x, e_v, e_qr, e_wr, psi_r)``."""
    e_qr = cross(des.q_r, q_r)
    e_wr = w_r + _hat2(q_r, des.w_r)
    return x_r - des.x, v_r - des.v, e_qr, e_wr, 1.0 - dot(des.q_r, q_r)


def mu_tilde(e_x, e_v, e_qr, e_wr, des: DesiredSample, q_r, gains: GainSet, p: Params) -> np.ndarray:
    """Desired virtual forces ``(mu_tilde_1, mu_tilde_2)`` as a (2, 3) array."""
    total = p.m_r * (des.a + p.g * E3 - gains.k_v * e_v - gains.k_x * e_x)
    qw = dot(q_r, des.w_r)
    diff = p.I_r * (-cross(q_r, des.wdot_r) + qw * _hat2(q_r, des.w_r) - qw * e_wr
                    + gains.k_wr * cross(q_r, e_wr) + gains.k_qr * cross(q_r, e_qr))
    return np.array([0.5 * (total - diff), 0.5 * (total + diff)])


def desired_cable_attitude(mu_t) -> np.ndarray:
    """Unit cable direction opposite to ``mu_tilde_j``."""
    n = norm(mu_t)
    if n <= THRUST_EPS:
        raise DegenerateThrust(f"|mu_tilde| = {n:.3e} too small to define a cable direction")
    return -mu_t / n


def mu_project(mu_t, q) -> np.ndarray:
    """Component of ``mu_tilde_j`` along the cable ``q_j``."""
    return dot(q, mu_t) * q


def rod_accelerations(q_r, w_r, mu, p: Params):
    """Bar accelerations implied by the virtual forces (no disturbance)."""
    vdot = (mu[0] + mu[1]) / p.m_r - p.g * E3
    wrdot = cross(q_r, mu[1] - mu[0]) / p.I_r
    qdd_r = cross(wrdot, q_r) - dot(w_r, w_r) * q_r
    return vdot, wrdot, qdd_r


def thrust_components(q, w, e_q, e_w, mu, w_des, wdot_des, vdot, qdd_r, gains: GainSet, p: Params):
    """Parallel and perpendicular thrust components for both cables.

    Returns ``(u_par, u_perp, u)`` each of shape (2, 3).
    """
    u_par, u_perp = np.empty((2, 3)), np.empty((2, 3))
    mQ, Lc = p.m_Q, p.L_c
    for i in range(2):
        qj, wj = q[i], w[i]
        drive = vdot + SIGNS[i] * p.L_r * qdd_r + p.g * E3
        u_par[i] = mu[i] + mQ * (dot(drive, qj) * qj + Lc * dot(wj, wj) * qj)
        ff = drive + Lc * cross(qj, wdot_des[i]) - Lc * dot(qj, w_des[i]) * wj
        fb = gains.k_q[i] * e_q[i] + gains.k_w[i] * e_w[i]
        u_perp[i] = -mQ * _hat2(qj, ff) - mQ * Lc * cross(qj, fb)
    return u_par, u_perp, u_par + u_perp


class TrackingController:
    """Reduced-model tracking controller.

    Desired cable angular velocities and accelerations are obtained by
    central differences of ``q_tilde_j(t)`` along the closed-loop flow of
    the bar, propagated over ``+-fd_step`` with one explicit midpoint
    step.  The midpoint rule's leading local error is odd in the step, so
    it cancels in both central differences.  During the propagation cable
    angular velocities are held at ``w_j + tau * wdot_j`` (``wdot_j`` zero
    unless supplied).  The default step keeps the roundoff of the second
    difference near 1e-8; at 1e-5 it grows to about 1e-6 and shows up as
    noise in the closed-loop right-hand side.
    """

    def __init__(self, traj: Trajectory, gains: GainSet, p: Params, fd_step: float = 1e-4):
        self.traj, self.gains, self.p, self.fd_step = traj, gains, p, fd_step

    # closed-loop flow of (x_r, v_r, q_r, w_r, q_1, q_2) used for desired-signal differentiation
    def _mu_tilde_at(self, t, y):
        des = self.traj(t)
        e_x, e_v, e_qr, e_wr, _ = rod_errors(des, y[0:3], y[3:6], y[6:9], y[9:12])
        return mu_tilde(e_x, e_v, e_qr, e_wr, des, y[6:9], self.gains, self.p)

    def _flow(self, t, tau, y, w, wdot):
        """Sub-flow derivative and the ``mu_tilde`` it was built from."""
        mt = self._mu_tilde_at(t + tau, y)
        q1, q2 = y[12:15], y[15:18]
        mu = (mu_project(mt[0], q1), mu_project(mt[1], q2))
        vdot, wrdot, _ = rod_accelerations(y[6:9], y[9:12], mu, self.p)
        dy = np.concatenate([y[3:6], vdot, cross(y[9:12], y[6:9]), wrdot,
                             cross(w[0] + tau * wdot[0], q1), cross(w[1] + tau * wdot[1], q2)])
        return dy, mt

    def propagate(self, t, y, h, w, wdot, k1=None):
        """One midpoint step of the bar/cable sub-flow from ``t`` over ``h`` (may be negative)."""
        if k1 is None:
            k1 = self._flow(t, 0.0, y, w, wdot)[0]
        k2 = self._flow(t, 0.5 * h, y + 0.5 * h * k1, w, wdot)[0]
        return y + h * k2

    @staticmethod
    def pack(s) -> np.ndarray:
        return np.concatenate([s.x_r, s.v_r, s.q_r, s.w_r, s.q[0], s.q[1]])

    def desired_cable_rates(self, t, s, wdot=None):
        """``(q_des, w_des, wdot_des)`` for both cables at state ``s``."""
        h = self.fd_step
        wdot = np.zeros((2, 3)) if wdot is None else wdot
        y0 = self.pack(s)
        k1, mt0 = self._flow(t, 0.0, y0, s.w, wdot)
        mtp = self._mu_tilde_at(t + h, self.propagate(t, y0, h, s.w, wdot, k1))
        mtm = self._mu_tilde_at(t - h, self.propagate(t, y0, -h, s.w, wdot, k1))
        qd, wd, wdd = np.empty((2, 3)), np.empty((2, 3)), np.empty((2, 3))
        for i in range(2):
            q0 = desired_cable_attitude(mt0[i])
            qp = desired_cable_attitude(mtp[i])
            qm = desired_cable_attitude(mtm[i])
            qd[i] = q0
            wd[i] = cross(q0, (qp - qm) / (2 * h))
            wdd[i] = cross(q0, (qp - 2 * q0 + qm) / (h * h))
        return mt0, qd, wd, wdd

    def evaluate(self, t: float, s, wdot=None) -> ControlOutput:
        p, g = self.p, self.gains
        des = self.traj(t)
        e_x, e_v, e_qr, e_wr, psi_r = rod_errors(des, s.x_r, s.v_r, s.q_r, s.w_r)
        mt, qd, wd, wdd = self.desired_cable_rates(t, s, wdot)
        mu = np.array([mu_project(mt[i], s.q[i]) for i in range(2)])
        vdot, wrdot, qdd_r = rod_accelerations(s.q_r, s.w_r, mu, p)
        e_q = np.array([cross(qd[i], s.q[i]) for i in range(2)])
        e_w = np.array([s.w[i] + _hat2(s.q[i], wd[i]) for i in range(2)])
        psi = np.array([1.0 - dot(qd[i], s.q[i]) for i in range(2)])
        u_par, u_perp, u = thrust_components(s.q, s.w, e_q, e_w, mu, wd, wdd, vdot, qdd_r, g, p)
        errs = TrackingErrors(e_x, e_v, e_qr, e_wr, e_q, e_w, psi_r, psi)
        return ControlOutput(des, errs, mt, mu, qd, wd, wdd, vdot, wrdot, qdd_r, u_par, u_perp, u)

    def __call__(self, t: float, s):
        out = self.evaluate(t, s)
        return out.mu, out.u


def cable_accelerations(q, u, vdot, qdd_r, p: Params) -> np.ndarray:
    """Cable angular accelerations of the reduced model for thrusts ``u``."""
    out = np.empty((2, 3))
    for i in range(2):
        drive = vdot + SIGNS[i] * p.L_r * qdd_r + p.g * E3
        out[i] = (p.m_Q * cross(q[i], drive) - cross(q[i], u[i])) / (p.m_Q * p.L_c)
    return out


def desired_quad_frame(u, b1, thrust_sign: int = -1) -> np.ndarray:
    """Desired quadrotor attitude for commanded force ``u`` and heading ``b1``.

    With ``thrust_sign=-1`` the third column is ``-b3`` (so the thrust
    magnitude ``u . R e3`` is negative at the desired attitude) and the
    first column is ``hat(b3)^2 b1`` normalised; the second column
    completes a right-handed frame.  With ``thrust_sign=+1`` the frame is
    ``[b1c, b3 x b1c, b3]`` with ``b1c`` the projection of ``b1``.
    """
    n = norm(u)
    if n <= THRUST_EPS:
        raise DegenerateThrust(f"|u| = {n:.3e} too small to define a thrust axis")
    b3 = u / n
    c = cross(b3, b1)
    nc = norm(c)
    if nc <= 1e-8:
        raise GimbalDegeneracy("heading b1 is parallel to the thrust axis")
    c = c / nc
    a = cross(c, b3)            # projection of b1 onto the plane normal to b3
    if thrust_sign < 0:
        return np.column_stack([-a, c, -b3])
    return np.column_stack([a, c, b3])


def desired_quad_attitude(u_of, b1_of, step: float = 1e-3, thrust_sign: int = -1):
    """Desired attitude and its body rates by central differences.

    ``u_of(tau)`` and ``b1_of(tau)`` give the commanded force and heading
    at time offset ``tau``.  Returns ``(R_d, Om_d, Omdot_d)``.
    """
    Rm = desired_quad_frame(u_of(-step), b1_of(-step), thrust_sign)
    R0 = desired_quad_frame(u_of(0.0), b1_of(0.0), thrust_sign)
    Rp = desired_quad_frame(u_of(step), b1_of(step), thrust_sign)
    Om = vee(skew_part(R0.T @ (Rp - Rm) / (2 * step)))
    Omdot = vee(skew_part(R0.T @ (Rp - 2 * R0 + Rm) / (step * step)))
    return R0, Om, Omdot


def attitude_control(R, Om, R_d, Om_d, Omdot_d, u, gains: GainSet, p: Params):
    """Thrust magnitude and moment of one quadrotor."""
    J = p.J_Q
    e_R, e_Om = rotation_errors(R_d, Om_d, R, Om)
    f = dot(u, R[:, 2])
    RtRd = R.T @ R_d
    eps = p.epsilon
    M = (-gains.k_R / eps ** 2 * e_R - gains.k_Om / eps * e_Om + cross(Om, J @ Om)
         - J @ (hat(Om) @ RtRd @ Om_d - RtRd @ Omdot_d))
    return f, M


@dataclass
class AttitudeOutput:
    core: ControlOutput
    R_d: np.ndarray
    Om_d: np.ndarray
    Omdot_d: np.ndarray
    f: np.ndarray
    M: np.ndarray
    thrust: np.ndarray


class FullController:
    """Reduced-design thrusts realised through the quadrotor attitude loop.

    Returns the applied thrust ``f_j R_j e3`` and moments ``M_j``.  The
    desired body rates come from differencing the desired frame over
    ``+-att_step``; the commanded forces at the shifted times are
    evaluated on states propagated along the reduced closed loop.
    """

    def __init__(self, traj: Trajectory, gains: GainSet, p: Params, fd_step: float = 1e-4,
                 att_step: float = 1e-3, thrust_sign: int = -1):
        self.core = TrackingController(traj, gains, p, fd_step)
        self.traj, self.gains, self.p = traj, gains, p
        self.att_step, self.thrust_sign = att_step, thrust_sign

    def _shifted_state(self, t, s, tau, wdot):
        y = self.core.propagate(t, self.core.pack(s), tau, s.w, wdot)
        q = np.array([y[12:15] / norm(y[12:15]), y[15:18] / norm(y[15:18])])
        w = np.array([perpendicular(s.w[i] + tau * wdot[i], q[i]) for i in range(2)])
        q_r = y[6:9] / norm(y[6:9])
        return ReducedState(y[0:3], y[3:6], q_r, perpendicular(y[9:12], q_r), q, w)

    def evaluate(self, t: float, s) -> AttitudeOutput:
        p, h = self.p, self.att_step
        out0 = self.core.evaluate(t, s)
        wdot = cable_accelerations(s.q, out0.u, out0.vdot, out0.qdd_r, p)
        up = self.core.evaluate(t + h, self._shifted_state(t, s, h, wdot), wdot).u
        um = self.core.evaluate(t - h, self._shifted_state(t, s, -h, wdot), wdot).u
        bp, b0, bm = self.traj(t + h).b1, out0.des.b1, self.traj(t - h).b1
        R_d, Om_d, Omdot_d = np.empty((2, 3, 3)), np.empty((2, 3)), np.empty((2, 3))
        f, M, thrust = np.empty(2), np.empty((2, 3)), np.empty((2, 3))
        for i in range(2):
            us = {-h: um[i], 0.0: out0.u[i], h: up[i]}
            bs = {-h: bm[i], 0.0: b0[i], h: bp[i]}
            R_d[i], Om_d[i], Omdot_d[i] = desired_quad_attitude(
                us.__getitem__, bs.__getitem__, h, self.thrust_sign)
            f[i], M[i] = attitude_control(s.R[i], s.Om[i], R_d[i], Om_d[i], Omdot_d[i],
                                          out0.u[i], self.gains, p)
            thrust[i] = f[i] * s.R[i][:, 2]
        return AttitudeOutput(out0, R_d, Om_d, Omdot_d, f, M, thrust)

    def __call__(self, t: float, s):
        out = self.evaluate(t, s)
        return out.thrust, out.M
