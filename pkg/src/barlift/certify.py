"""Lyapunov certification of tracking gains.

The 8-dimensional comparison vector is
``z = [|e_x|, |e_v|, |e_qr|, |e_wr|, |e_q1|, |e_w1|, |e_q2|, |e_w2|]``.
``V`` is sandwiched between ``z' P_lo z / 2`` and ``z' P_hi z / 2`` and
its derivative is bounded by ``-z' W z`` on the domain ``D``; gains are
certified when ``P_lo, P_hi`` and the symmetric part of ``W`` are all
positive-definite.  Positive-definiteness is tested through nested Schur
complements and cross-checked against a Jacobi eigenvalue solver.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .control import GainSet, TrackingErrors
from .errors import NotContracting, SynthesisFailed, ValidationError
from .manifold import dot
from .model import Params

BLOCK_NAMES_8 = ("x", "qr", "q1", "q2")
BLOCK_NAMES_6 = ("x", "qr", "qj")


@dataclass(frozen=True)
class BoundSet:
    """Domain caps, trajectory bounds and disturbance bounds."""

    # defaults cover the reproduction run once its transient has decayed (t >= 1 s)
    psi_r: float = 0.03
    psi: tuple = (1e-4, 1e-4)
    e_x_bar: float = 0.2
    e_v_bar: float = np.inf
    e_w_bar: float = np.inf
    C: float = 1.25
    C_qr: float = 0.0
    C_q: tuple = (1.0, 1.0)
    delta_x: float = 0.0
    delta_qr: float = 0.0
    delta_q: tuple = (0.0, 0.0)
    eps_young: Optional[float] = None

    def __post_init__(self):
        for name in ("psi", "C_q", "delta_q"):
            v = tuple(float(a) for a in np.broadcast_to(getattr(self, name), (2,)))
            object.__setattr__(self, name, v)
        for name, v in (("psi_r", self.psi_r), ("psi1", self.psi[0]), ("psi2", self.psi[1])):
            if not 0.0 <= v < 1.0:
                raise ValidationError(f"bounds.{name}", "must lie in [0, 1)")
        for name in ("C", "C_qr", "delta_x", "delta_qr"):
            if getattr(self, name) < 0:
                raise ValidationError(f"bounds.{name}", "must be non-negative")
        for name in ("C_q", "delta_q"):
            if min(getattr(self, name)) < 0:
                raise ValidationError(f"bounds.{name}", "must be non-negative")
        for name in ("e_x_bar", "e_v_bar", "e_w_bar"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"bounds.{name}", "must be strictly positive")
        if self.eps_young is not None and not self.eps_young > 0:
            raise ValidationError("bounds.eps_young", "must be strictly positive")

    @property
    def alpha_j(self) -> np.ndarray:
        return np.sqrt(np.array(self.psi) * (2.0 - np.array(self.psi)))

    @property
    def alpha_r(self) -> float:
        return float(np.sqrt(self.psi_r * (2.0 - self.psi_r)))

    @property
    def alpha(self) -> float:
        return float(2.0 * np.max(self.alpha_j))

    def with_(self, **kw) -> "BoundSet":
        from dataclasses import replace
        return replace(self, **kw)

    @staticmethod
    def psi_for_alpha(alpha: float) -> float:
        """Cable cap ``psi`` giving ``2 sqrt(psi (2 - psi)) = alpha``."""
        a = alpha / 2.0
        return float(1.0 - np.sqrt(1.0 - a * a))


# ---------------------------------------------------------------- eigenvalues

def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm falls below ``tol``
    times the matrix norm.  Returns ``(w, V)`` with ascending eigenvalues.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("square matrix required")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


def eig_min(A) -> float:
    return float(jacobi_eigh(A)[0][0])


def eig_max(A) -> float:
    return float(jacobi_eigh(A)[0][-1])


def sym(A) -> np.ndarray:
    return 0.5 * (A + A.T)


# ---------------------------------------------------------------- matrices

def build_P(g: GainSet, b: BoundSet):
    """Block-diagonal bounds ``(P_lo, P_hi)`` on the Lyapunov function."""
    lo, hi = np.zeros((8, 8)), np.zeros((8, 8))
    blocks = [(g.k_x, g.c_x, g.k_x), (g.k_qr, g.c_qr, 2 * g.k_qr / (2 - b.psi_r))]
    for i in range(2):
        blocks.append((g.k_q[i], g.c_q[i], 2 * g.k_q[i] / (2 - b.psi[i])))
    for n, (k, c, top_hi) in enumerate(blocks):
        s = slice(2 * n, 2 * n + 2)
        lo[s, s] = [[k, -c], [-c, 1.0]]
        hi[s, s] = [[top_hi, c], [c, 1.0]]
    return lo, hi


@dataclass
class WBlocks:
    W_xr: np.ndarray
    W_qr: np.ndarray
    W_q: list
    W_xr_qr: np.ndarray
    W_xr_qj: np.ndarray
    W_qr_qj: np.ndarray
    W_j: list = field(default_factory=list)       # symmetrised 6x6 per cable
    W_bar: Optional[np.ndarray] = None            # symmetrised 8x8


def build_W(g: GainSet, b: BoundSet, p: Params) -> WBlocks:
    """Blocks of the decrease matrix and their 6x6 / 8x8 assemblies.

    Each 6x6 ``W_j`` carries ``-W_ab / 2`` in both off-diagonal positions
    (not transposed) and is then symmetrised.  In the 8x8 assembly the
    shared bar blocks of each ``W_j`` are weighted by one half so that the
    sum holds a single copy of them.
    """
    a, ar = b.alpha, b.alpha_r
    Ir, mr = p.I_r, p.m_r
    C, Cqr = b.C, b.C_qr
    cx, cqr = g.c_x, g.c_qr
    W_xr = np.array([[cx * (1 - a) * g.k_x, -0.5 * (1 + a) * cx * g.k_v],
                     [-0.5 * (1 + a) * cx * g.k_v, (1 - a) * g.k_v - cx]])
    off_qr = -0.5 * cqr * ((1 + a) * g.k_wr + Cqr + a * Cqr ** 2)
    W_qr = np.array([[(1 - a) * cqr * g.k_qr, off_qr],
                     [off_qr, (1 - a) * g.k_wr - cqr - a * Cqr ** 2]])
    W_q = []
    for i in range(2):
        cq, kq, kw, Cq = g.c_q[i], g.k_q[i], g.k_w[i], b.C_q[i]
        o = -0.5 * cq * (kw + Cq)
        W_q.append(np.array([[cq * kq, o], [o, kw - cq]]))
    W_xr_qr = a * np.array([
        [Ir / mr * cx * g.k_qr + mr / Ir * cqr * g.k_x, Ir / mr * cx * (Cqr ** 2 + g.k_wr) + mr / Ir * g.k_x],
        [Ir / mr * g.k_qr + mr / Ir * cqr * g.k_v, Ir / mr * (Cqr ** 2 + g.k_wr) + mr / Ir * g.k_v]])
    W_xr_qj = np.array([[cx * C, 0.0], [C + mr * g.k_x * b.e_x_bar, 0.0]]) / mr
    W_qr_qj = np.array([[cqr * C, 0.0], [C + Ir * g.k_qr * ar, 0.0]]) / Ir
    out = WBlocks(W_xr, W_qr, W_q, W_xr_qr, W_xr_qj, W_qr_qj)
    total = np.zeros((8, 8))
    for i in range(2):
        Wj = np.zeros((6, 6))
        Wj[0:2, 0:2] = W_xr
        Wj[2:4, 2:4] = W_qr
        Wj[4:6, 4:6] = W_q[i]
        Wj[0:2, 2:4] = Wj[2:4, 0:2] = -0.5 * W_xr_qr
        Wj[0:2, 4:6] = Wj[4:6, 0:2] = -0.5 * W_xr_qj
        Wj[2:4, 4:6] = Wj[4:6, 2:4] = -0.5 * W_qr_qj
        Wj = sym(Wj)
        out.W_j.append(Wj)
        idx = np.r_[0:4, 4 + 2 * i:6 + 2 * i]
        emb = Wj.copy()
        emb[0:4, 0:4] *= 0.5
        total[np.ix_(idx, idx)] += emb
    out.W_bar = sym(total)
    return out


# ---------------------------------------------------------------- Schur test

@dataclass
class SchurResult:
    verdict: bool
    bound: float                      # smallest eigenvalue of the full matrix
    failed_condition: Optional[str]
    conditions: list                  # (name, matrix, min eigenvalue)


def _is_pd(M) -> bool:
    try:
        np.linalg.cholesky(sym(M))
    except np.linalg.LinAlgError:
        return False
    return True


def check_pd_schur(W, blocks: Optional[Sequence[int]] = None,
                   names: Optional[Sequence[str]] = None) -> SchurResult:
    """Positive-definiteness of a symmetric matrix by nested Schur complements.

    ``blocks`` lists the block sizes (default: 2x2 blocks).  The trailing
    block is tested first, then the Schur complement of the trailing
    block in the remaining leading part, and so on.  Condition ``k``
    (1-based, in testing order) is reported by ``names[-k]`` when given.
    """
    W = sym(np.asarray(W, dtype=float))
    n = W.shape[0]
    if blocks is None:
        blocks = [2] * (n // 2) + ([n % 2] if n % 2 else [])
    if sum(blocks) != n:
        raise ValueError("block sizes do not add up to the matrix size")
    if names is None:
        names = [f"block{k + 1}" for k in range(len(blocks))]
    M = W
    conds = []
    verdict, failed = True, None
    for k in range(len(blocks) - 1, -1, -1):
        m = blocks[k]
        split = M.shape[0] - m
        D = M[split:, split:]
        lam = eig_min(D)
        label = f"({len(blocks) - k}) {names[k]}"
        conds.append((label, D, lam))
        if not _is_pd(D):
            verdict, failed = False, label
            break
        if split == 0:
            break
        A, B = M[:split, :split], M[:split, split:]
        M = sym(A - B @ np.linalg.solve(D, B.T))
    return SchurResult(verdict, eig_min(W), failed, conds)


# ---------------------------------------------------------------- certification

@dataclass
class CertificationReport:
    verdict: bool
    lambda_min_W: float
    lambda_max_P: float
    lambda_min_P: float
    rate: float
    failed_condition: Optional[str] = None
    d1: Optional[float] = None
    lambda_min_Wj: tuple = ()

    def to_text(self) -> str:
        lines = [f"verdict={'pass' if self.verdict else 'fail'}",
                 f"lambda_min_W={self.lambda_min_W:.17g}",
                 f"lambda_max_P={self.lambda_max_P:.17g}",
                 f"lambda_min_P={self.lambda_min_P:.17g}",
                 f"rate={self.rate:.17g}"]
        for i, lam in enumerate(self.lambda_min_Wj):
            lines.append(f"lambda_min_W{i + 1}={lam:.17g}")
        if self.d1 is not None:
            lines.append(f"d1={self.d1:.17g}")
        lines.append(f"failed_condition={self.failed_condition or 'none'}")
        return "\n".join(lines) + "\n"


def certify(g: GainSet, b: BoundSet, p: Params, with_bound: bool = False) -> CertificationReport:
    """Full certification: both P matrices, the 8x8 assembly and each 6x6 block."""
    lo, hi = build_P(g, b)
    lam_lo, lam_hi = eig_min(lo), eig_max(hi)
    Wb = build_W(g, b, p)
    failed = None
    if not _is_pd(lo):
        failed = "P_lo"
    elif not _is_pd(hi):
        failed = "P_hi"
    lam_j = []
    for i, Wj in enumerate(Wb.W_j):
        r = check_pd_schur(Wj, names=BLOCK_NAMES_6)
        lam_j.append(eig_min(Wj))
        if failed is None and not r.verdict:
            failed = f"W{i + 1}:{r.failed_condition}"
    r8 = check_pd_schur(Wb.W_bar, names=BLOCK_NAMES_8)
    if failed is None and not r8.verdict:
        failed = f"W:{r8.failed_condition}"
    lam_W = eig_min(Wb.W_bar)
    rep = CertificationReport(failed is None, lam_W, lam_hi, lam_lo, lam_W / lam_hi, failed,
                              lambda_min_Wj=tuple(lam_j))
    if with_bound and rep.verdict:
        try:
            rep.d1 = ultimate_bound(g, b, p)[0]
        except NotContracting:
            rep.d1 = None
    return rep


def disturbance_vector(b: BoundSet, p: Params) -> np.ndarray:
    """Disturbance weights matching the layout of ``z``."""
    ex = b.delta_x / p.m_r
    eq = 3.0 * b.delta_qr / (2.0 * p.m_r * p.L_r)
    e1 = b.delta_q[0] / (p.m_Q * p.L_c)
    e2 = b.delta_q[1] / (p.m_Q * p.L_c)
    return np.array([ex, ex, eq, eq, e1, e1, e2, e2])


def ultimate_bound(g: GainSet, b: BoundSet, p: Params):
    """Ultimate bound ``d1`` on ``V`` and the contraction rate.

    Young's parameter defaults to half of the smallest eigenvalue of the
    symmetric decrease matrix.
    """
    Wbar = build_W(g, b, p).W_bar
    lam = eig_min(Wbar)
    eps = b.eps_young if b.eps_young is not None else 0.5 * lam
    if not lam > eps or not eps > 0:
        raise NotContracting(f"lambda_min(W)={lam:.6g} does not exceed Young's parameter {eps:.6g}")
    Wstar = Wbar - eps * np.eye(8)
    if not check_pd_schur(Wstar, names=BLOCK_NAMES_8).verdict:
        raise NotContracting("shifted decrease matrix is not positive-definite")
    lam_star = eig_min(Wstar)
    lam_P = eig_max(build_P(g, b)[1])
    E = disturbance_vector(b, p)
    d1 = lam_P / lam_star * float(E @ E) / (4.0 * eps)
    return d1, lam_star / lam_P


# ---------------------------------------------------------------- Lyapunov function

def lyapunov_value(e: TrackingErrors, g: GainSet) -> float:
    V = 0.5 * dot(e.e_v, e.e_v) + 0.5 * g.k_x * dot(e.e_x, e.e_x) + g.c_x * dot(e.e_x, e.e_v)
    V += 0.5 * dot(e.e_wr, e.e_wr) + g.k_qr * e.psi_r + g.c_qr * dot(e.e_qr, e.e_wr)
    for i in range(2):
        V += 0.5 * dot(e.e_w[i], e.e_w[i]) + g.k_q[i] * e.psi[i] + g.c_q[i] * dot(e.e_q[i], e.e_w[i])
    return float(V)


def in_domain(e: TrackingErrors, b: BoundSet) -> bool:
    """Membership of the certified domain ``D``."""
    n = e.norms()
    if n[0] > b.e_x_bar or n[1] > b.e_v_bar:
        return False
    if max(n[3], n[5], n[7]) > b.e_w_bar:
        return False
    return e.psi_r <= b.psi_r and e.psi[0] <= b.psi[0] and e.psi[1] <= b.psi[1]


# ---------------------------------------------------------------- synthesis

def _k_wr_formula(alpha, C_qr, c_qr, k_qr):
    return alpha / (1 - alpha) * C_qr ** 2 + c_qr * k_qr + c_qr / (1 - alpha)


def synthesize_gains(b: BoundSet, p: Params, target_lambda: float = 0.1,
                     alpha_max: float = 0.5, max_rounds: int = 40,
                     base: Optional[GainSet] = None) -> GainSet:
    """Construct gains certified with ``lambda_min(W) >= target_lambda``.

    Follows the existence argument: cable blocks are stiffened by growing
    ``k_w`` while shrinking ``c_q`` with ``k_q = k_w / c_q``; ``k_wr``
    follows the closed-form choice that balances the bar-attitude block;
    ``(k_x, k_v, c_x)`` are picked so that the position block is
    positive-definite; the remaining coupling condition is then checked.
    Each round scales the stiffness geometrically.
    """
    a = b.alpha
    if not a < alpha_max:
        raise SynthesisFailed(f"alpha={a:.4g} is not below {alpha_max}", binding_condition="alpha")
    base = base or GainSet()
    last = None
    for n in range(max_rounds):
        s = 2.0 ** (n / 2.0)
        c_q = 1.0 / np.sqrt(s)
        k_w = 12.0 * s
        k_q = k_w / c_q
        c_qr = 0.5
        k_qr = 4.0 * s
        k_wr = _k_wr_formula(a, b.C_qr, c_qr, k_qr)
        k_v = 6.0
        c_x = 0.5 * min(1.0, (1 - a) * k_v / 2.0)
        # W_xr > 0 needs k_x (1-a)((1-a) k_v - c_x) > (1+a)^2 c_x k_v^2 / 4
        k_min = (1 + a) ** 2 * c_x * k_v ** 2 / (4 * (1 - a) * ((1 - a) * k_v - c_x))
        k_x = max(2.0 * k_min, target_lambda / (c_x * (1 - a)) * 2.0, 1.0)
        if c_x >= np.sqrt(k_x):
            c_x = 0.5 * np.sqrt(k_x)
        try:
            g = base.with_(k_x=k_x, k_v=k_v, k_qr=k_qr, k_wr=k_wr, k_q=(k_q, k_q), k_w=(k_w, k_w),
                           c_x=c_x, c_qr=c_qr, c_q=(c_q, c_q))
        except ValidationError as exc:
            last = exc.key
            continue
        rep = certify(g, b, p)
        if rep.verdict and rep.lambda_min_W >= target_lambda:
            return g
        last = rep.failed_condition or "lambda_min(W) below target"
    raise SynthesisFailed(f"no certified gains after {max_rounds} rounds (alpha={a:.4g})",
                          binding_condition=last)


def search_lyapunov_constants(g: GainSet, b: BoundSet, p: Params,
                              c_x=(0.1, 0.25, 0.5, 1.0, 2.0), c_qr=(0.1, 0.25, 0.5, 1.0),
                              c_q=(0.25, 0.5, 1.0, 2.0, 4.0), psi=None):
    """Grid search over the Lyapunov constants (and optionally the cable caps) for fixed gains.

    Returns ``(gains, bounds, report)`` for the passing combination with the
    largest ``lambda_min(W)``, or ``None`` when nothing passes.  Ties keep the
    lexicographically first grid point.
    """
    best = None
    for ps in (psi if psi is not None else (None,)):
        bb = b if ps is None else b.with_(psi=(ps, ps))
        for cx in c_x:
            for cr in c_qr:
                for cq in c_q:
                    try:
                        gg = g.with_(c_x=cx, c_qr=cr, c_q=(cq, cq))
                    except ValidationError:
                        continue
                    rep = certify(gg, bb, p)
                    if rep.verdict and (best is None or rep.lambda_min_W > best[2].lambda_min_W):
                        best = (gg, bb, rep)
    return best


def bounds_for_d1(g: GainSet, b: BoundSet, p: Params, d1_target: float) -> BoundSet:
    """Rescale the disturbance bounds jointly so that ``d1`` equals ``d1_target``.

    All-zero bounds are first replaced by equal unit bounds.
    """
    if not d1_target > 0:
        raise ValidationError("d1_target", "must be strictly positive")
    dq = np.array(b.delta_q)
    if b.delta_x == 0 and b.delta_qr == 0 and not dq.any():
        b = b.with_(delta_x=1.0, delta_qr=1.0, delta_q=(1.0, 1.0))
        dq = np.ones(2)
    d1, _ = ultimate_bound(g, b, p)
    s = float(np.sqrt(d1_target / d1))
    return b.with_(delta_x=s * b.delta_x, delta_qr=s * b.delta_qr, delta_q=tuple(s * dq))
