"""Experiment runners: reduced tracking, epsilon sweep, disturbance rejection, energy."""

import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .certify import BoundSet, lyapunov_value, in_domain, ultimate_bound
from .control import FullController, GainSet, TrackingController
from .errors import IntegrationError, NeverEnters, StiffnessInstability
from .integrate import IntegratorConfig, integrate
from .manifold import cross, hat, norm, perpendicular, unit
from .model import (DisturbanceSignal, FullState, Params, ReducedState,
                    full_accelerations, full_derivative, inelastic_accelerations,
                    quad_attitude_accel, quasi_steady_state, reduced_rhs, renormalize_full,
                    renormalize_reduced, total_energy)
from .trajectory import LissajousTrajectory, Trajectory

COLUMNS = ("t", "e_x", "e_v", "e_qr", "e_wr", "e_q1", "e_w1", "e_q2", "e_w2", "u1", "u2", "V",
           "xr_x", "xr_y", "xr_z", "xq1_x", "xq1_y", "xq1_z", "xq2_x", "xq2_y", "xq2_z")

# auxiliary per-record signals kept alongside the trace (not written to CSV)
AUX = ("psi_r", "psi1", "psi2", "wd1", "wd2", "vdot_des", "wrdot_des", "wr_des", "in_D")


@dataclass
class TraceRecord:
    t: float
    errors: np.ndarray       # eight error norms
    u: np.ndarray            # |u1|, |u2|
    V: float
    x_r: np.ndarray
    x_q: np.ndarray          # (2, 3)


@dataclass
class Trace:
    """Time series of trace records stored column-wise."""

    data: np.ndarray
    aux: np.ndarray = field(default=None)

    def __len__(self):
        return self.data.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def column(self, name: str) -> np.ndarray:
        if name in COLUMNS:
            return self.data[:, COLUMNS.index(name)]
        return self.aux[:, AUX.index(name)]

    @property
    def errors(self) -> np.ndarray:
        return self.data[:, 1:9]

    def record(self, k: int) -> TraceRecord:
        r = self.data[k]
        return TraceRecord(r[0], r[1:9].copy(), r[9:11].copy(), r[11], r[12:15].copy(),
                           r[15:21].reshape(2, 3).copy())

    def to_csv(self, path) -> None:
        np.savetxt(path, self.data, delimiter=",", header=",".join(COLUMNS), comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "Trace":
        return cls(np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1)))


def default_initial_state(attitude: bool = False) -> ReducedState:
    """Initial condition of the reproduction run (attitudes normalised, rates projected)."""
    q_r = unit(np.array([0.24, 0.97, -0.1]))
    w_r = perpendicular(np.array([0.1, -0.1, 0.0]), q_r)
    q = np.array([unit(np.array([0.53, 0.63, -0.56])),
                  unit(np.array([0.48, 0.67, -0.56]))])
    s = ReducedState(np.array([1.0, 4.9, -1.0]), np.array([1.2, 0.55, 0.15]), q_r, w_r, q, np.zeros((2, 3)))
    if attitude:
        s.R, s.Om = np.stack([np.eye(3), np.eye(3)]), np.zeros((2, 3))
    return s


def _row(t, out, V, s: ReducedState, p: Params, u_applied=None):
    u = out.u if u_applied is None else u_applied
    xq = s.quad_positions(p)
    return np.concatenate([[t], out.errors.norms(), [norm(u[0]), norm(u[1]), V], s.x_r, xq[0], xq[1]])


def _aux(out, b: Optional[BoundSet], p: Params):
    e = out.errors
    inD = float(in_domain(e, b)) if b is not None else np.nan
    return np.array([e.psi_r, e.psi[0], e.psi[1], norm(out.w_des[0]), norm(out.w_des[1]),
                     norm(out.des.a), norm(out.des.wdot_r), norm(out.des.w_r), inD])


def _march(rhs_out: Callable, y0, cfg: IntegratorConfig, renorm: Callable, record: Callable):
    """Fixed-step loop whose first stage also feeds the recorder.

    ``rhs_out(t, y)`` returns ``(dy, info)``; ``record(k, t, y, info)`` is
    called once per stored state with the information from the stage
    evaluated at that state.
    """
    n, h = cfg.steps, cfg.h
    y = np.array(y0, dtype=float)
    Y = np.empty((n + 1, y.shape[0]))
    Y[0] = y
    rhs = lambda t, x: rhs_out(t, x)[0]
    for k in range(n + 1):
        t = k * h
        try:
            k1, info = rhs_out(t, y)
        except Exception as exc:
            raise IntegrationError(k, exc) from exc
        record(k, t, y, info)
        if k == n:
            break
        try:
            if cfg.method == "euler":
                y = y + h * k1
            else:
                k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
                k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
                k4 = rhs(t + h, y + h * k3)
                y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if (k + 1) % cfg.renormalize_every == 0:
                y = renorm(y)
            if not np.all(np.isfinite(y)):
                raise FloatingPointError("non-finite state")
        except IntegrationError:
            raise
        except Exception as exc:
            raise IntegrationError(k, exc) from exc
        Y[k + 1] = y
    return Y


@dataclass
class RunResult:
    trace: Trace
    states: np.ndarray
    cfg: IntegratorConfig

    @property
    def final_errors(self) -> np.ndarray:
        return self.trace.errors[-1]


def run_reduced_tracking(p: Params, g: GainSet, traj: Optional[Trajectory] = None,
                         x0: Optional[ReducedState] = None, cfg: Optional[IntegratorConfig] = None,
                         bounds: Optional[BoundSet] = None, disturbance: Optional[Callable] = None,
                         attitude: bool = False, thrust_sign: int = -1,
                         fd_step: float = 1e-4) -> RunResult:
    """Close the loop of the reduced model with the tracking controller.

    ``disturbance(t)`` returns a :class:`Disturbance` unknown to the
    controller.  With ``attitude=True`` the state carries quadrotor
    attitudes, the thrusts are realised as ``f_j R_j e3`` through the
    attitude loop and the bar/cable accelerations come from the inelastic
    model.
    """
    traj = traj or LissajousTrajectory()
    cfg = cfg or IntegratorConfig()
    x0 = x0 or default_initial_state(attitude)
    n = cfg.steps
    data = np.empty((n + 1, len(COLUMNS)))
    aux = np.empty((n + 1, len(AUX)))
    if attitude:
        ctrl = FullController(traj, g, p, thrust_sign=thrust_sign)
        if x0.R is None:
            x0 = initial_attitudes(ctrl, x0)

        def rhs_out(t, y):
            s = ReducedState.from_array(y)
            out = ctrl.evaluate(t, s)
            thrust = out.thrust
            vdot, wrdot, wdot = inelastic_accelerations(s, thrust, p)
            d = np.empty(48)
            d[0:3], d[3:6], d[6:9], d[9:12] = s.v_r, vdot, cross(s.w_r, s.q_r), wrdot
            for i in range(2):
                d[12 + 3 * i:15 + 3 * i] = cross(s.w[i], s.q[i])
                d[18 + 3 * i:21 + 3 * i] = wdot[i]
                d[24 + 9 * i:33 + 9 * i] = (s.R[i] @ hat(s.Om[i])).ravel()
            d[42:48] = quad_attitude_accel(s.R, s.Om, out.M, p).ravel()
            return d, (out.core, thrust, s)
    else:
        ctrl = TrackingController(traj, g, p, fd_step)

        def rhs_out(t, y):
            s = ReducedState.from_array(y)
            out = ctrl.evaluate(t, s)
            d = disturbance(t) if disturbance is not None else None
            return reduced_rhs(t, s, out.mu, out.u, d, p), (out, None, s)

    def record(k, t, y, info):
        out, thrust, s = info
        data[k] = _row(t, out, lyapunov_value(out.errors, g), s, p, thrust)
        aux[k] = _aux(out, bounds, p)

    Y = _march(rhs_out, x0.to_array(), cfg, renormalize_reduced, record)
    return RunResult(Trace(data, aux), Y, cfg)


def initial_attitudes(ctrl: FullController, x0: ReducedState, t: float = 0.0) -> ReducedState:
    """Attach quadrotor attitudes equal to the desired ones (with desired body rates)."""
    s = ReducedState(x0.x_r, x0.v_r, x0.q_r, x0.w_r, x0.q, x0.w,
                     np.stack([np.eye(3), np.eye(3)]), np.zeros((2, 3)))
    out = ctrl.evaluate(t, s)
    s.R, s.Om = out.R_d.copy(), out.Om_d.copy()
    return s


# ---------------------------------------------------------------- bounds from a run

def estimate_bounds(result: RunResult, p: Params, t_from: float = 0.0, samples: int = 1000,
                    margin: float = 0.1, **caps) -> BoundSet:
    """Trajectory bounds ``C, C_qr, C_q`` from ``samples`` evenly spaced records.

    Sups are taken over records with ``t >= t_from`` and inflated by
    ``margin``; ``caps`` are forwarded to :class:`BoundSet`.
    """
    tr = result.trace
    idx = np.flatnonzero(tr.t >= t_from - 1e-12)
    pick = idx[np.unique(np.linspace(0, len(idx) - 1, min(samples, len(idx))).round().astype(int))]
    m = 1.0 + margin
    aux = lambda name: tr.column(name)[pick]
    C = m * (p.m_r * aux("vdot_des").max() + p.I_r * aux("wrdot_des").max())
    C_qr = m * 2.0 * aux("wr_des").max()
    C_q = (m * 2.0 * aux("wd1").max(), m * 2.0 * aux("wd2").max())
    return BoundSet(C=float(C), C_qr=float(C_qr), C_q=C_q, **caps)


def domain_entry_index(result: RunResult) -> Optional[int]:
    """First record from which the state stays in ``D`` until the end."""
    inD = result.trace.column("in_D") > 0.5
    if not inD[-1]:
        return None
    out = np.flatnonzero(~inD)
    return 0 if out.size == 0 else int(out[-1] + 1)


def lyapunov_monotone(V: np.ndarray, rel_tol: float = 1e-6) -> tuple:
    """``(ok, worst)``: whether ``V[k+1] <= V[k] (1 + rel_tol)`` for all ``k``."""
    if V.size < 2:
        return True, 0.0
    excess = (V[1:] - V[:-1]) / np.maximum(np.abs(V[:-1]), 1e-300)
    worst = float(excess.max())
    return worst <= rel_tol, worst


# ---------------------------------------------------------------- epsilon sweep

@dataclass
class SweepResult:
    epsilons: list
    deviations: list
    ratios: list
    scale: float
    initial_deviation: list = field(default_factory=list)


def full_initial_state(x0: ReducedState, ctrl: FullController, p: Params) -> FullState:
    """Lift ``x0`` onto the slow manifold, quadrotors at their desired attitude."""
    s = initial_attitudes(ctrl, x0)
    out = ctrl.evaluate(0.0, s)
    y, z = quasi_steady_state(0.0, s, out.thrust, p)
    return s.to_full(p, y, z)


def run_full(p: Params, g: GainSet, traj: Trajectory, x0: ReducedState, cfg: IntegratorConfig):
    """Integrate the elastic model under the reduced-design controls.

    The controls are re-evaluated at every stage.  Returns ``(t, Y)`` for
    the flat full state.
    """
    ctrl = FullController(traj, g, p)
    s0 = full_initial_state(x0, ctrl, p)

    def rhs(t, y):
        s = FullState.from_array(y)
        u, M = ctrl(t, s.reduced())
        return full_derivative(s, full_accelerations(s, u, M, p))

    try:
        return integrate(rhs, s0.to_array(), cfg, renormalize_full)
    except IntegrationError as exc:
        raise StiffnessInstability(
            f"full model diverged at step {exc.step} (eps={p.epsilon}, h={cfg.h}): {exc.cause}") from exc


def run_epsilon_sweep(p: Params, g: GainSet, traj: Optional[Trajectory] = None,
                      x0: Optional[ReducedState] = None, epsilons: Sequence[float] = (0.04, 0.02, 0.01),
                      T: float = 2.0, t1: float = 0.5, h_factor: float = 0.04,
                      h_reduced: Optional[float] = None,
                      threads: Optional[int] = None) -> SweepResult:
    """Sup-norm bar deviation between the elastic and reduced models for each epsilon.

    The elastic model uses RK4 with ``h = h_factor * eps``; the reduced
    reference is integrated once with RK4 on a grid that every elastic
    grid refines.  Deviation is the Euclidean norm of the stacked bar
    position and attitude differences, sup over ``[t1, T]``.
    """
    traj = traj or LissajousTrajectory()
    x0 = x0 or default_initial_state()
    hs = [h_factor * e for e in epsilons]
    h_ref = h_reduced or max(hs)
    ref_cfg = IntegratorConfig("rk4", h_ref, T)
    ctrl = TrackingController(traj, g, p)

    def red_rhs(t, y):
        s = ReducedState.from_array(y)
        mu, u = ctrl(t, s)
        return reduced_rhs(t, s, mu, u, None, p)

    t_ref, Y_ref = integrate(red_rhs, x0.to_array(), ref_cfg, renormalize_reduced)

    n_thr = threads if threads is not None else int(os.environ.get("BARLIFT_THREADS", "1") or 1)
    jobs = [(p, g, traj, x0, epsilons[k], hs[k], h_ref, T, t1, t_ref, Y_ref)
            for k in range(len(epsilons))]
    if n_thr > 1 and len(epsilons) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=min(n_thr, len(epsilons))) as ex:
            res = list(ex.map(_sweep_worker, jobs))
    else:
        res = [_sweep_worker(j) for j in jobs]
    devs = [r[0] for r in res]
    ratios = [devs[k] / devs[k + 1] for k in range(len(devs) - 1)]
    scale = float(np.max(np.linalg.norm(Y_ref[:, 0:3], axis=1)))
    return SweepResult(list(epsilons), devs, ratios, scale, [r[1] for r in res])


def sup_deviation(t_ref, Y_ref, Y, stride: int, t1: float):
    """Bar position/attitude deviation of ``Y`` (sampled every ``stride`` rows) from ``Y_ref``.

    Returns ``(sup over t >= t1, sup over t < t1)``.  Both arrays start
    with ``x_r`` in columns 0:3 and ``q_r`` in columns 6:9.
    """
    Yc = Y[::stride][:len(t_ref)]
    dev = np.sqrt(np.sum((Yc[:, 0:3] - Y_ref[:, 0:3]) ** 2, axis=1)
                  + np.sum((Yc[:, 6:9] - Y_ref[:, 6:9]) ** 2, axis=1))
    mask = t_ref >= t1 - 1e-12
    return float(dev[mask].max()), float(dev[~mask].max()) if (~mask).any() else 0.0


def _sweep_worker(args):
    p, g, traj, x0, eps, h, h_ref, T, t1, t_ref, Y_ref = args
    stride = int(round(h_ref / h))
    t, Y = run_full(p.with_(epsilon=eps), g, traj, x0, IntegratorConfig("rk4", h_ref / stride, T))
    return sup_deviation(t_ref, Y_ref, Y, stride, t1)


# ---------------------------------------------------------------- disturbance

@dataclass
class DisturbanceResult:
    run: RunResult
    d1: float
    t_enter: float
    max_V_after: float
    contained: bool


def run_disturbance(p: Params, g: GainSet, b: BoundSet, traj: Optional[Trajectory] = None,
                    x0: Optional[ReducedState] = None, cfg: Optional[IntegratorConfig] = None,
                    seed: int = 0, slack: float = 1.05) -> DisturbanceResult:
    """Disturbed reduced run checked against the ultimate bound ``d1``."""
    d1, _ = ultimate_bound(g, b, p)
    sig = DisturbanceSignal(b.delta_x, b.delta_qr, b.delta_q, seed)
    res = run_reduced_tracking(p, g, traj, x0, cfg, bounds=b, disturbance=sig)
    V = res.trace.column("V")
    t = res.trace.t
    hit = np.flatnonzero(V <= d1)
    if hit.size == 0:
        raise NeverEnters(f"V never dropped below d1={d1:.6g} (min V={V.min():.6g})")
    k = int(hit[0])
    after = float(V[k:].max())
    return DisturbanceResult(res, d1, float(t[k]), after, after <= slack * d1)


# ---------------------------------------------------------------- energy

def energy_test_state(p: Params) -> FullState:
    """Moving, stretched configuration used for the conservation check."""
    q_r = np.array([1.0, 0.0, 0.0])
    q = np.array([unit(np.array([0.1, 0.05, -1.0])),
                  unit(np.array([-0.08, 0.1, -1.0]))])
    w = np.array([perpendicular(np.array([0.3, -0.2, 0.1]), q[0]),
                  perpendicular(np.array([-0.1, 0.4, 0.2]), q[1])])
    l = p.L_c + p.epsilon ** 2 * np.array([0.05, 0.08])
    Om = np.array([[0.5, -0.3, 0.2], [-0.4, 0.1, 0.6]])
    return FullState(np.zeros(3), np.array([0.3, -0.1, 0.2]), q_r, np.array([0.0, 0.2, 0.3]),
                     q, w, l, np.array([0.01, -0.02]), np.stack([np.eye(3), np.eye(3)]), Om)


def run_energy(p: Params, s0: Optional[FullState] = None, h: float = 1e-4, T: float = 2.0):
    """Unforced, undamped elastic run; returns ``(t, E)``."""
    p = p.with_(c_bar=0.0) if p.c_bar != 0.0 else p
    s0 = s0 or energy_test_state(p)
    zero = np.zeros((2, 3))

    def rhs(t, y):
        s = FullState.from_array(y)
        return full_derivative(s, full_accelerations(s, zero, zero, p))

    E = []
    cb = lambda k, t, y: E.append(total_energy(FullState.from_array(y), p))
    t, _ = integrate(rhs, s0.to_array(), IntegratorConfig("rk4", h, T), None, cb)
    return t, np.array(E)
