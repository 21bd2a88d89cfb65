"""Desired bar trajectories with analytic derivatives."""

import math
from dataclasses import dataclass

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])


@dataclass
class DesiredSample:
    """Desired signals at one instant.

    ``x, v, a`` are the bar position and its first two derivatives;
    ``q_r, w_r, wdot_r`` the bar attitude, angular velocity and angular
    acceleration; ``b1`` the desired first body axis of each quadrotor.
    """

    t: float
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    q_r: np.ndarray
    w_r: np.ndarray
    wdot_r: np.ndarray
    b1: np.ndarray


class Trajectory:
    """Base class; subclasses implement ``sample(t)``."""

    b1 = np.stack([E1, E1])

    def __call__(self, t: float) -> DesiredSample:
        return self.sample(t)

    def sample(self, t: float) -> DesiredSample:
        raise NotImplementedError


class LissajousTrajectory(Trajectory):
    """Bar centre on a Lissajous curve with a fixed horizontal attitude."""

    def __init__(self, ax=1.2, ay=4.2, z=-0.5, wx=0.4 * np.pi, wy=0.2 * np.pi,
                 q_r=(0.0, 1.0, 0.0)):
        self.ax, self.ay, self.z, self.wx, self.wy = ax, ay, z, wx, wy
        q = np.asarray(q_r, dtype=float)
        self.q_r = q / np.linalg.norm(q)

    def sample(self, t):
        ax, ay, wx, wy = self.ax, self.ay, self.wx, self.wy
        sx, cx = math.sin(wx * t), math.cos(wx * t)
        sy, cy = math.sin(wy * t), math.cos(wy * t)
        x = np.array([ax * sx, ay * cy, self.z])
        v = np.array([ax * wx * cx, -ay * wy * sy, 0.0])
        a = np.array([-ax * wx ** 2 * sx, -ay * wy ** 2 * cy, 0.0])
        z3 = np.zeros(3)
        return DesiredSample(t, x, v, a, self.q_r, z3, z3.copy(), self.b1)

    def jerk(self, t):
        ax, ay, wx, wy = self.ax, self.ay, self.wx, self.wy
        return np.array([-ax * wx ** 3 * np.cos(wx * t), ay * wy ** 3 * np.sin(wy * t), 0.0])


class ConstantTrajectory(Trajectory):
    """Fixed position and attitude (hover when the attitude is horizontal)."""

    def __init__(self, x=(0.0, 0.0, 0.0), q_r=(1.0, 0.0, 0.0)):
        self.x = np.asarray(x, dtype=float)
        q = np.asarray(q_r, dtype=float)
        self.q_r = q / np.linalg.norm(q)

    def sample(self, t):
        z3 = np.zeros(3)
        return DesiredSample(t, self.x, z3, z3.copy(), self.q_r, z3.copy(), z3.copy(), self.b1)


class SwingTrajectory(Trajectory):
    """Fixed centre, bar yawing as ``phi(t) = amp sin(rate t)`` in the horizontal plane.

    Exercises the attitude feed-forward terms, which vanish for the
    other trajectories.
    """

    def __init__(self, x=(0.0, 0.0, 0.0), amp=0.5, rate=1.0):
        self.x = np.asarray(x, dtype=float)
        self.amp, self.rate = amp, rate

    def sample(self, t):
        phi = self.amp * np.sin(self.rate * t)
        dphi = self.amp * self.rate * np.cos(self.rate * t)
        ddphi = -self.amp * self.rate ** 2 * np.sin(self.rate * t)
        q = np.array([np.cos(phi), np.sin(phi), 0.0])
        e3 = np.array([0.0, 0.0, 1.0])
        z3 = np.zeros(3)
        return DesiredSample(t, self.x, z3, z3.copy(), q, dphi * e3, ddphi * e3, self.b1)
