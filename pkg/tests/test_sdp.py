import numpy as np
import pytest

import ossctl as oc
from ossctl.sdp import AffineBlock, solve_feasibility


def lyapunov_blocks(a):
    """Scalar Lyapunov problem: find p with 2 a p < 0 and p > 0."""

    def S_main(v):
        return np.array([[2.0 * a * v[0]]])

    def S_pos(v):
        return np.array([[-v[0]]])

    def certificate(v):
        ok = 2.0 * a * v[0] < -1e-10 and v[0] > 1e-10
        return ok, (2.0 * a * v[0], v[0])

    return [AffineBlock(1, S_main), AffineBlock(1, S_pos)], certificate


def test_scalar_lyapunov_feasible():
    blocks, cert = lyapunov_blocks(-1.0)
    res = solve_feasibility(blocks, q=1, margins=[1.0, 1e-4], certificate=cert)
    assert res.feasible
    assert res.v[0] > 0


def test_scalar_lyapunov_infeasible():
    blocks, cert = lyapunov_blocks(+1.0)
    res = solve_feasibility(blocks, q=1, margins=[1.0, 1e-4], certificate=cert)
    assert not res.feasible
    assert res.status in ("stalled", "undecided")


def test_matrix_lyapunov_feasible():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(3, 3))
    A -= (np.linalg.eigvals(A).real.max() + 0.5) * np.eye(3)
    from ossctl._linalg import smat, svec_dim

    d = svec_dim(3)

    def S_main(v):
        P = smat(v[:d], 3)
        S = A.T @ P + P @ A
        return 0.5 * (S + S.T)

    def S_pos(v):
        return -smat(v[:d], 3)

    def cert(v):
        P = smat(v[:d], 3)
        S = S_main(v)
        ok = (
            np.linalg.eigvalsh(S).max() < -1e-10
            and np.linalg.eigvalsh(P).min() > 1e-10
        )
        return ok, None

    res = solve_feasibility(
        [AffineBlock(3, S_main), AffineBlock(3, S_pos)],
        q=d,
        margins=[1.0, 1e-2],
        certificate=cert,
    )
    assert res.feasible
    # returned P actually solves the Lyapunov inequality
    P = smat(res.v, 3)
    assert np.linalg.eigvalsh(A.T @ P + P @ A).max() < 0
    assert np.linalg.eigvalsh(P).min() > 0


def test_nonneg_constraint_respected():
    # find v with v[0] >= 0 and matrix [[v0 - 1]] < 0 -> v0 in [0, 1)
    def S_main(v):
        return np.array([[v[0] - 1.0]])

    def cert(v):
        return (v[0] >= 0 and v[0] < 1.0 - 1e-10), None

    res = solve_feasibility(
        [AffineBlock(1, S_main)], q=1, nonneg=(0,), margins=[0.1], certificate=cert
    )
    assert res.feasible
    assert res.v[0] >= 0


def test_margin_count_validated():
    with pytest.raises(ValueError):
        solve_feasibility(
            [AffineBlock(1, lambda v: np.array([[v[0]]]))], q=1, margins=[1.0, 1.0]
        )
