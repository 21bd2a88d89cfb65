"""Flat ``key = value`` experiment configuration."""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from .certify import BoundSet
from .control import GainSet
from .errors import ParseError, ValidationError
from .integrate import IntegratorConfig
from .model import Params, ReducedState
from .sim import default_initial_state
from .trajectory import ConstantTrajectory, LissajousTrajectory

MODES = ("track", "sweep", "disturb", "certify", "synthesize", "energy")
TRAJECTORIES = ("lissajous", "hover", "constant")

_init = default_initial_state()

# key -> (kind, default); kinds: float, int, bool, str, vec3, floats
SCHEMA: Dict[str, tuple] = {
    "mode": ("str", "track"),
    "seed": ("int", 0),
    "output": ("str", "barlift_out"),

    "params.m_Q": ("float", 0.755),
    "params.m_r": ("float", 0.5),
    "params.L_r": ("float", 1.0),
    "params.L_c": ("float", 1.0),
    "params.J_Q": ("vec3", (0.082, 0.0845, 0.1377)),
    "params.g": ("float", 9.81),
    "params.k_bar": ("float", 50.0),
    "params.c_bar": ("float", 5.0),
    "params.epsilon": ("float", 0.04),

    "gains.k_x": ("float", 9.0),
    "gains.k_v": ("float", 6.0),
    "gains.k_qr": ("float", 2.0),
    "gains.k_wr": ("float", float(2.0 * np.sqrt(2.0))),
    "gains.k_q1": ("float", 36.0),
    "gains.k_q2": ("float", 36.0),
    "gains.k_w1": ("float", 12.0),
    "gains.k_w2": ("float", 12.0),
    "gains.k_R": ("float", 8.81),
    "gains.k_Om": ("float", 2.54),
    "gains.c_x": ("float", 0.5),
    "gains.c_qr": ("float", 0.5),
    "gains.c_q1": ("float", 1.0),
    "gains.c_q2": ("float", 1.0),

    "bounds.psi_r": ("float", 0.03),
    "bounds.psi1": ("float", 1e-4),
    "bounds.psi2": ("float", 1e-4),
    "bounds.e_x_bar": ("float", 0.2),
    "bounds.e_v_bar": ("float", float("inf")),
    "bounds.e_w_bar": ("float", float("inf")),
    "bounds.C": ("float", 1.25),
    "bounds.C_qr": ("float", 0.0),
    "bounds.C_q1": ("float", 1.0),
    "bounds.C_q2": ("float", 1.0),
    "bounds.delta_x": ("float", 0.0),
    "bounds.delta_qr": ("float", 0.0),
    "bounds.delta_q1": ("float", 0.0),
    "bounds.delta_q2": ("float", 0.0),
    "bounds.eps_young": ("float", 0.0),          # 0 selects half of lambda_min(W)

    "trajectory.kind": ("str", "lissajous"),
    "trajectory.ax": ("float", 1.2),
    "trajectory.ay": ("float", 4.2),
    "trajectory.z": ("float", -0.5),
    "trajectory.wx": ("float", float(0.4 * np.pi)),
    "trajectory.wy": ("float", float(0.2 * np.pi)),
    "trajectory.x": ("vec3", (0.0, 0.0, 0.0)),
    "trajectory.q_r": ("vec3", (0.0, 1.0, 0.0)),

    "initial.x_r": ("vec3", tuple(_init.x_r)),
    "initial.v_r": ("vec3", tuple(_init.v_r)),
    "initial.q_r": ("vec3", (0.24, 0.97, -0.1)),
    "initial.w_r": ("vec3", (0.1, -0.1, 0.0)),
    "initial.q1": ("vec3", (0.53, 0.63, -0.56)),
    "initial.q2": ("vec3", (0.48, 0.67, -0.56)),
    "initial.w1": ("vec3", (0.0, 0.0, 0.0)),
    "initial.w2": ("vec3", (0.0, 0.0, 0.0)),

    "integrator.method": ("str", "euler"),
    "integrator.h": ("float", 0.002),
    "integrator.T": ("float", 20.0),
    "integrator.renormalize_every": ("int", 1),

    "attitude.enabled": ("bool", False),
    "attitude.thrust_sign": ("int", -1),

    "track.max_error": ("float", 0.05),
    "track.max_ratio": ("float", 0.1),
    "track.u_band": ("float", 0.05),
    "track.settle_window": ("float", 2.0),

    "sweep.epsilons": ("floats", (0.04, 0.02, 0.01)),
    "sweep.T": ("float", 2.0),
    "sweep.t1": ("float", 0.5),
    "sweep.h_factor": ("float", 0.04),
    "sweep.ratio_lo": ("float", 1.5),
    "sweep.ratio_hi": ("float", 2.5),
    "sweep.scale_fraction": ("float", 0.05),

    "disturb.d1_target": ("float", 0.1),
    "disturb.slack": ("float", 1.05),

    "synthesize.target_lambda": ("float", 0.05),
    "synthesize.alpha_max": ("float", 0.5),

    "energy.h": ("float", 1e-4),
    "energy.T": ("float", 2.0),
    "energy.tol": ("float", 1e-6),
}


def _convert(key: str, kind: str, text: str):
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind == "str":
            if not text:
                raise ValueError("empty value")
            return text
        parts = tuple(float(a) for a in text.replace(" ", "").split(",") if a != "")
        if kind == "vec3" and len(parts) != 3:
            raise ValueError("expected three comma-separated numbers")
        if kind == "floats" and not parts:
            raise ValueError("expected at least one number")
        return parts
    except ValueError as exc:
        raise ValidationError(key, f"cannot read {text!r} as {kind}: {exc}") from None


def _format(kind: str, v) -> str:
    if kind == "float":
        return repr(float(v))
    if kind == "bool":
        return "true" if v else "false"
    if kind in ("vec3", "floats"):
        return ",".join(repr(float(a)) for a in v)
    return str(v)


@dataclass
class ExperimentConfig:
    """Validated configuration; ``values`` holds every key of the schema."""

    values: Dict[str, Any]

    def __getitem__(self, key):
        return self.values[key]

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return all(_format(SCHEMA[k][0], self.values[k]) == _format(SCHEMA[k][0], other.values[k])
                   for k in SCHEMA)

    @property
    def mode(self) -> str:
        return self.values["mode"]

    def params(self) -> Params:
        v = self.values
        return Params(m_Q=v["params.m_Q"], m_r=v["params.m_r"], L_r=v["params.L_r"], L_c=v["params.L_c"],
                      J_Q=np.diag(v["params.J_Q"]), g=v["params.g"], k_bar=v["params.k_bar"],
                      c_bar=v["params.c_bar"], epsilon=v["params.epsilon"])

    def gains(self) -> GainSet:
        v = self.values
        return GainSet(k_x=v["gains.k_x"], k_v=v["gains.k_v"], k_qr=v["gains.k_qr"], k_wr=v["gains.k_wr"],
                       k_q=(v["gains.k_q1"], v["gains.k_q2"]), k_w=(v["gains.k_w1"], v["gains.k_w2"]),
                       k_R=v["gains.k_R"], k_Om=v["gains.k_Om"], c_x=v["gains.c_x"], c_qr=v["gains.c_qr"],
                       c_q=(v["gains.c_q1"], v["gains.c_q2"]))

    def bounds(self) -> BoundSet:
        v = self.values
        eps = v["bounds.eps_young"]
        return BoundSet(psi_r=v["bounds.psi_r"], psi=(v["bounds.psi1"], v["bounds.psi2"]),
                        e_x_bar=v["bounds.e_x_bar"], e_v_bar=v["bounds.e_v_bar"], e_w_bar=v["bounds.e_w_bar"],
                        C=v["bounds.C"], C_qr=v["bounds.C_qr"], C_q=(v["bounds.C_q1"], v["bounds.C_q2"]),
                        delta_x=v["bounds.delta_x"], delta_qr=v["bounds.delta_qr"],
                        delta_q=(v["bounds.delta_q1"], v["bounds.delta_q2"]),
                        eps_young=eps if eps > 0 else None)

    def trajectory(self):
        v = self.values
        kind = v["trajectory.kind"]
        if kind == "lissajous":
            return LissajousTrajectory(v["trajectory.ax"], v["trajectory.ay"], v["trajectory.z"],
                                       v["trajectory.wx"], v["trajectory.wy"])
        if kind == "hover":
            return ConstantTrajectory(v["trajectory.x"], (1.0, 0.0, 0.0))
        return ConstantTrajectory(v["trajectory.x"], v["trajectory.q_r"])

    def initial_state(self) -> ReducedState:
        v = self.values
        unit = {}
        for k in ("initial.q_r", "initial.q1", "initial.q2"):
            a = np.array(v[k])
            n = np.linalg.norm(a)
            if not n > 0:
                raise ValidationError(k, "attitude must be non-zero")
            unit[k] = a / n
        proj = lambda w, q: np.array(w) - np.dot(w, q) * q
        q = np.array([unit["initial.q1"], unit["initial.q2"]])
        return ReducedState(np.array(v["initial.x_r"]), np.array(v["initial.v_r"]), unit["initial.q_r"],
                            proj(v["initial.w_r"], unit["initial.q_r"]), q,
                            np.array([proj(v["initial.w1"], q[0]), proj(v["initial.w2"], q[1])]))

    def integrator(self) -> IntegratorConfig:
        v = self.values
        return IntegratorConfig(v["integrator.method"], v["integrator.h"], v["integrator.T"],
                                v["integrator.renormalize_every"])

    def validate(self) -> "ExperimentConfig":
        v = self.values
        if v["mode"] not in MODES:
            raise ValidationError("mode", f"must be one of {', '.join(MODES)}")
        if v["trajectory.kind"] not in TRAJECTORIES:
            raise ValidationError("trajectory.kind", f"must be one of {', '.join(TRAJECTORIES)}")
        if v["attitude.thrust_sign"] not in (-1, 1):
            raise ValidationError("attitude.thrust_sign", "must be -1 or 1")
        if any(e <= 0 for e in v["sweep.epsilons"]):
            raise ValidationError("sweep.epsilons", "must be strictly positive")
        for key in ("track.max_error", "track.max_ratio", "track.u_band", "track.settle_window",
                    "sweep.T", "sweep.h_factor", "sweep.scale_fraction", "disturb.slack",
                    "synthesize.target_lambda", "synthesize.alpha_max", "energy.h", "energy.T", "energy.tol"):
            if not v[key] > 0:
                raise ValidationError(key, "must be strictly positive")
        for key in ("sweep.t1", "disturb.d1_target"):
            if v[key] < 0:
                raise ValidationError(key, "must be non-negative")
        self.params()
        self.gains()
        self.bounds()
        self.integrator()
        self.initial_state()
        if v["trajectory.kind"] == "constant":
            self.trajectory()
        return self


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; missing keys take their defaults."""
    values = {k: d for k, (_, d) in SCHEMA.items()}
    seen = set()
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(n, f"expected 'key = value', got {raw.strip()!r}")
        key, val = (a.strip() for a in line.split("=", 1))
        if not key:
            raise ParseError(n, "missing key")
        if key in seen:
            raise ParseError(n, f"duplicate key {key!r}")
        seen.add(key)
        if key not in SCHEMA:
            raise ValidationError(key, "unknown key")
        values[key] = _convert(key, SCHEMA[key][0], val)
    return ExperimentConfig(values).validate()


def serialize(cfg: ExperimentConfig) -> str:
    """Canonical text form listing every key."""
    return "".join(f"{k} = {_format(SCHEMA[k][0], cfg.values[k])}\n" for k in SCHEMA)
