"""Fixed-step integrators with manifold renormalisation."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import IntegrationError, ValidationError


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "euler"
    h: float = 0.002
    T: float = 20.0
    renormalize_every: int = 1

    def __post_init__(self):
        if self.method not in ("euler", "rk4"):
            raise ValidationError("integrator.method", "must be 'euler' or 'rk4'")
        if not self.h > 0:
            raise ValidationError("integrator.h", "must be strictly positive")
        if not self.T >= self.h:
            raise ValidationError("integrator.T", "must be at least h")
        if int(self.renormalize_every) != self.renormalize_every or self.renormalize_every < 1:
            raise ValidationError("integrator.renormalize_every", "must be a positive integer")

    @property
    def steps(self) -> int:
        # tolerate T/h landing a hair below an integer
        return int(np.floor(self.T / self.h + 1e-9))


def euler_step(rhs, t, y, h):
    return y + h * rhs(t, y)


def rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


STEPPERS = {"euler": euler_step, "rk4": rk4_step}


def integrate(rhs: Callable, y0, cfg: IntegratorConfig,
              renormalize: Optional[Callable] = None,
              callback: Optional[Callable] = None):
    """Integrate ``y' = rhs(t, y)`` on ``[0, T]`` with a fixed step.

    Returns ``(t, Y)`` with ``floor(T/h) + 1`` rows.  ``renormalize`` is
    applied to the state every ``renormalize_every`` steps.  ``callback(k,
    t, y)`` is invoked on every stored state, including the initial one.
    Any exception raised by ``rhs`` or ``renormalize`` is re-raised as
    :class:`IntegrationError` carrying the step index.
    """
    step = STEPPERS[cfg.method]
    n = cfg.steps
    y = np.array(y0, dtype=float)
    Y = np.empty((n + 1, y.shape[0]))
    t = np.arange(n + 1) * cfg.h
    Y[0] = y
    if callback is not None:
        callback(0, 0.0, y)
    for k in range(n):
        try:
            y = step(rhs, t[k], y, cfg.h)
            if renormalize is not None and (k + 1) % cfg.renormalize_every == 0:
                y = renormalize(y)
            if not np.all(np.isfinite(y)):
                raise FloatingPointError("non-finite state")
        except IntegrationError:
            raise
        except Exception as exc:
            raise IntegrationError(k, exc) from exc
        Y[k + 1] = y
        if callback is not None:
            callback(k + 1, t[k + 1], y)
    return t, Y
