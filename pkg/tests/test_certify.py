import numpy as np
import pytest

from barlift.certify import (BLOCK_NAMES_8, BoundSet, _k_wr_formula, bounds_for_d1, build_P, build_W,
                             certify, check_pd_schur, eig_min, jacobi_eigh, lyapunov_value,
                             synthesize_gains, ultimate_bound)
from barlift.control import GainSet, TrackingErrors
from barlift.errors import NotContracting, SynthesisFailed, ValidationError
from barlift.manifold import attitude_error, config_error_psi
from conftest import random_tangent, random_unit


def force(g, **kw):
    # bypass validation to probe degenerate limits of the matrix assembly
    for k, v in kw.items():
        object.__setattr__(g, k, v)
    return g


def is_pd_eig(A):
    return np.linalg.eigvalsh(0.5 * (A + A.T))[0] > 0


def test_jacobi_matches_lapack(rng):
    for n in (2, 3, 6, 8):
        for _ in range(50):
            A = rng.normal(size=(n, n))
            A = A + A.T
            w, V = jacobi_eigh(A)
            assert np.allclose(w, np.linalg.eigvalsh(A), atol=1e-10)
            assert np.allclose(V.T @ V, np.eye(n), atol=1e-10)
            assert np.allclose(A @ V, V * w, atol=1e-9)


def test_jacobi_handles_wide_range():
    A = np.diag([1e-12, 1.0, 1e12])
    A[0, 1] = A[1, 0] = 1e-13
    w, _ = jacobi_eigh(A)
    assert np.allclose(w, np.linalg.eigvalsh(A), rtol=1e-10, atol=1e-20)


def test_build_P_diagonal_limit():
    g = force(GainSet(), c_x=0.0, c_qr=0.0, c_q=(0.0, 0.0))
    lo, hi = build_P(g, BoundSet())
    assert np.array_equal(lo, np.diag(np.diag(lo)))
    assert np.array_equal(hi, np.diag(np.diag(hi)))
    assert eig_min(lo) == pytest.approx(min(1.0, g.k_x, g.k_qr, *g.k_q))


def test_build_P_reference_block():
    g = GainSet(c_x=1.0)
    lo, _ = build_P(g, BoundSet(psi=(0.01, 0.01)))
    assert np.array_equal(lo[0:2, 0:2], [[9, -1], [-1, 1]])
    w = np.sort(np.linalg.eigvalsh(lo[0:2, 0:2]))
    assert w == pytest.approx([5 - np.sqrt(17), 5 + np.sqrt(17)])
    assert w[1] == pytest.approx(9.123, abs=1e-3) and w[0] == pytest.approx(0.876, abs=1e-3)


def test_build_P_positivity_condition():
    with pytest.raises(ValidationError):
        GainSet(c_x=3.001)
    g = force(GainSet(), c_x=3.001)
    lo, _ = build_P(g, BoundSet())
    assert not check_pd_schur(lo).verdict
    assert check_pd_schur(build_P(force(GainSet(), c_x=2.999), BoundSet())[0]).verdict


def test_build_P_upper_entry():
    g = GainSet()
    _, hi = build_P(g, BoundSet(psi=(0.2, 0.3)))
    assert hi[4, 4] == pytest.approx(2 * 36 / 1.8)
    assert hi[6, 6] == pytest.approx(2 * 36 / 1.7)


def test_build_W_decoupled_limit(p):
    g = GainSet()
    b = BoundSet(psi_r=0.0, psi=(0.0, 0.0), C=0.0, C_qr=0.0, C_q=(0.0, 0.0))
    W = build_W(g, b, p)
    assert np.allclose(W.W_xr, [[g.c_x * g.k_x, -g.c_x * g.k_v / 2], [-g.c_x * g.k_v / 2, g.k_v - g.c_x]])
    assert not W.W_xr_qr.any()
    assert not W.W_qr_qj.any()
    # only the position-cap term survives in the bar/cable coupling
    assert np.allclose(W.W_xr_qj, [[0, 0], [g.k_x * b.e_x_bar, 0]])
    tiny = build_W(g, b.with_(e_x_bar=1e-300), p)
    assert np.allclose(tiny.W_xr_qj, 0)


def test_build_W_cable_block(p):
    W = build_W(GainSet(), BoundSet(C_q=(0.0, 0.0)), p)
    assert np.array_equal(W.W_q[0], [[36, -6], [-6, 11]])


def test_build_W_entries_and_symmetry(p):
    g, b = GainSet(), BoundSet(psi=(0.01, 0.02))
    W = build_W(g, b, p)
    assert W.W_xr[0, 0] == pytest.approx(g.c_x * (1 - b.alpha) * g.k_x)
    assert np.array_equal(W.W_bar, W.W_bar.T)
    for Wj in W.W_j:
        assert np.array_equal(Wj, Wj.T)
    # the shared bar blocks appear once in the 8x8 assembly
    assert np.allclose(W.W_bar[0:2, 0:2], W.W_xr)
    assert np.allclose(W.W_bar[2:4, 2:4], W.W_qr)
    assert np.allclose(W.W_bar[4:6, 4:6], W.W_q[0])


def test_schur_examples():
    r = check_pd_schur(np.eye(8), names=BLOCK_NAMES_8)
    assert r.verdict and r.bound == pytest.approx(1.0)
    r = check_pd_schur(np.diag([1.0, -1.0, 1.0, 1.0, 1.0, 1.0]))
    assert not r.verdict and r.failed_condition == "(3) block1"
    r = check_pd_schur(np.diag([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0]), names=BLOCK_NAMES_8)
    assert r.failed_condition == "(1) q2"


@pytest.mark.parametrize("n", [6, 8])
def test_schur_dual_oracle(rng, n):
    agree = 0
    kinds = set()
    for _ in range(1000):
        A = rng.normal(size=(n, n))
        S = A @ A.T / n
        # shift around the smallest eigenvalue so both verdicts occur
        S = S - (np.linalg.eigvalsh(S)[0] + rng.normal(scale=0.05)) * np.eye(n)
        r = check_pd_schur(S)
        kinds.add(r.verdict)
        agree += r.verdict == is_pd_eig(S) == (eig_min(S) > 0)
        assert r.bound == pytest.approx(np.linalg.eigvalsh(S)[0], abs=1e-10)
    assert agree == 1000 and kinds == {True, False}


def test_k_wr_closed_form(p):
    for alpha in (0.0, 0.05, 0.2, 0.4):
        for C_qr in (0.0, 0.3, 1.5):
            for c_qr, k_qr in ((0.5, 2.0), (0.2, 10.0), (1.0, 40.0)):
                k_wr = _k_wr_formula(alpha, C_qr, c_qr, k_qr)
                g = GainSet(k_qr=k_qr, k_wr=k_wr, c_qr=c_qr)
                b = BoundSet(psi=(BoundSet.psi_for_alpha(alpha),) * 2, C_qr=C_qr)
                assert b.alpha == pytest.approx(alpha, abs=1e-12)
                W_qr = build_W(g, b, p).W_qr
                kb = c_qr * k_qr
                a = b.alpha
                closed = 2 * (1 - a) * kb - c_qr * (2 * a / (1 - a) * C_qr ** 2 + C_qr + (1 + a) * kb
                                                   + (1 + a) / (1 - a) * c_qr)
                assert 2 * eig_min(W_qr) == pytest.approx(closed, abs=1e-10)


def test_monotone_in_k_w(p):
    b = BoundSet()
    for c_q in (0.2, 1.0, 1.5):
        lams = []
        for k_w in np.linspace(10, 200, 40):
            g = GainSet(k_w=(k_w, k_w), k_q=(k_w / c_q, k_w / c_q), c_q=(c_q, c_q))
            lams.append(eig_min(build_W(g, b, p).W_q[0]))
        assert np.all(np.diff(lams) > 0)


def test_shift_identity(rng):
    for _ in range(100):
        A = rng.normal(size=(8, 8))
        W = A @ A.T + 0.1 * np.eye(8)
        eps = 0.5 * eig_min(W)
        assert eig_min(W - eps * np.eye(8)) == pytest.approx(eig_min(W) - eps, abs=1e-10)


def test_default_gains_certify(p):
    rep = certify(GainSet(), BoundSet(), p)
    assert rep.verdict and rep.failed_condition is None
    assert rep.lambda_min_W > 0.1 and rep.lambda_min_P > 0
    assert rep.rate == pytest.approx(rep.lambda_min_W / rep.lambda_max_P)
    assert min(rep.lambda_min_Wj) > 0
    text = rep.to_text()
    assert "verdict=pass" in text and "lambda_min_W=" in text


def test_certify_reports_binding_condition(p):
    rep = certify(GainSet(), BoundSet(psi=(0.1, 0.1)), p)
    assert not rep.verdict and rep.failed_condition.startswith("W")


def test_ultimate_bound_scaling(p):
    g, b = GainSet(), BoundSet()
    assert ultimate_bound(g, b, p)[0] == 0.0
    b1 = b.with_(delta_x=0.01, delta_qr=0.02, delta_q=(0.01, 0.03))
    b2 = b.with_(delta_x=0.02, delta_qr=0.04, delta_q=(0.02, 0.06))
    d1, rate = ultimate_bound(g, b1, p)
    d2, _ = ultimate_bound(g, b2, p)
    assert d2 / d1 == pytest.approx(4.0, rel=1e-12)
    assert rate > 0


def test_ultimate_bound_not_contracting(p):
    g = GainSet()
    lam = certify(g, BoundSet(), p).lambda_min_W
    with pytest.raises(NotContracting):
        ultimate_bound(g, BoundSet(eps_young=lam * 1.01, delta_x=0.1), p)


def test_bounds_for_d1(p):
    g = GainSet()
    b = bounds_for_d1(g, BoundSet(), p, 0.1)
    assert ultimate_bound(g, b, p)[0] == pytest.approx(0.1, rel=1e-12)
    assert b.delta_x == b.delta_qr == b.delta_q[0] > 0


def random_errors(rng, psi_r, psi):
    def pair(cap):
        while True:
            qd, q = random_unit(rng), random_unit(rng)
            if config_error_psi(qd, q) <= cap:
                return attitude_error(qd, q), random_tangent(rng, q), config_error_psi(qd, q)
    e_qr, e_wr, pr = pair(psi_r)
    c1, c2 = pair(psi[0]), pair(psi[1])
    return TrackingErrors(rng.normal(size=3), rng.normal(size=3), e_qr, e_wr,
                          np.array([c1[0], c2[0]]), np.array([c1[1], c2[1]]), pr,
                          np.array([c1[2], c2[2]]))


def test_lyapunov_sandwich(rng):
    g, b = GainSet(), BoundSet(psi_r=0.9, psi=(0.9, 0.9))
    lo, hi = build_P(g, b)
    for _ in range(500):
        e = random_errors(rng, b.psi_r, b.psi)
        z = e.norms()
        V = lyapunov_value(e, g)
        assert 0.5 * z @ lo @ z <= V + 1e-12
        assert V <= 0.5 * z @ hi @ z + 1e-12


def test_synthesis_decoupled(p):
    b = BoundSet(psi_r=0.0, psi=(0.0, 0.0), C=0.0, C_qr=0.0, C_q=(0.0, 0.0))
    g = synthesize_gains(b, p, target_lambda=0.1)
    rep = certify(g, b, p)
    assert rep.verdict and rep.lambda_min_W >= 0.1


@pytest.mark.parametrize("alpha", [0.0, 0.05, 0.1])
def test_synthesis_small_alpha(p, alpha):
    b = BoundSet(psi=(BoundSet.psi_for_alpha(alpha),) * 2)
    g = synthesize_gains(b, p, target_lambda=0.05)
    rep = certify(g, b, p)
    assert rep.verdict and rep.lambda_min_W >= 0.05
    assert g.k_q[0] == pytest.approx(g.k_w[0] / g.c_q[0])
    assert g.k_wr == pytest.approx(_k_wr_formula(b.alpha, b.C_qr, g.c_qr, g.k_qr))


def test_synthesis_large_alpha(p):
    b = BoundSet(psi=(BoundSet.psi_for_alpha(0.9),) * 2)
    with pytest.raises(SynthesisFailed) as exc:
        synthesize_gains(b, p)
    assert exc.value.binding_condition == "alpha"
    with pytest.raises(SynthesisFailed) as exc:
        synthesize_gains(b, p, alpha_max=1.0, max_rounds=12)
    assert exc.value.binding_condition.startswith("W")


def test_boundset_validation():
    with pytest.raises(ValidationError):
        BoundSet(psi=(1.0, 0.1))
    with pytest.raises(ValidationError):
        BoundSet(C=-1.0)
    with pytest.raises(ValidationError):
        BoundSet(eps_young=0.0)
    assert BoundSet(psi=(0.19, 0.0)).alpha_j[0] == pytest.approx(np.sqrt(0.19 * 1.81))
