"""Dynamic stabilizer synthesis for plants where no PI gain certifies.

The gradient nonlinearity in sector [kappa, L] is loop-shifted to the
symmetric sector [-1, 1] (center c = (L+kappa)/2, radius r = (L-kappa)/2)
and absorbed into a generalized plant whose measurement channel is
sigma = (y, eta, e).  An output-feedback controller minimizing the L2 gain
of the transformed channel is then computed by the variable-transformation
LMI method; gain below one certifies the nonlinear loop by small gain.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import hinf_norm, is_hurwitz, smat, svec_dim
from .controller import DynamicStabilizer, PiGains, pi_as_stabilizer
from .kkt import KktGeometry
from .lmi import LmiCertificate
from .plant import LtiPlant
from .sdp import AffineBlock, solve_feasibility

_GAMMA_LO = 1e-3
_GAMMA_HI = 1e3
_GAMMA_RTOL = 1e-2


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class AugmentedPlant:
    """Loop-transformed generalized plant.

    Channels: w (transformed nonlinearity output, dimension p+m), z (its
    input), y_meas = sigma = (y, eta, e), u (control).  State is (x, eta).
    """

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    D11: np.ndarray
    D12: np.ndarray
    C2: np.ndarray
    D21: np.ndarray
    D22: np.ndarray
    center: float
    radius: float
    p: int
    m: int

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_w(self) -> int:
        return self.B1.shape[1]

    @property
    def n_z(self) -> int:
        return self.C1.shape[0]

    @property
    def n_meas(self) -> int:
        return self.C2.shape[0]

    @property
    def n_u(self) -> int:
        return self.B2.shape[1]


@dataclass(frozen=True)
class SynthesisResult:
    stabilizer: DynamicStabilizer
    gamma: float
    certificate: LmiCertificate
    hinf_achieved: float
    loop_margin: float


def loop_transform(
    plant: LtiPlant, geometry: KktGeometry, kappa: float, lipschitz: float
) -> AugmentedPlant:
    """Build the generalized plant with the sector-[kappa, L] gradient
    replaced by a sector-[-1, 1] uncertainty via w = c z + r w_tilde.

    kappa = L (zero radius) is the degenerate linear case: the uncertainty
    channel carries zero gain and synthesis reduces to plain stabilization.
    """
    if not (0 < kappa <= lipschitz):
        raise SynthesisError("need 0 < kappa <= L")
    if not np.isfinite(lipschitz):
        raise SynthesisError("loop transformation requires a finite Lipschitz bound")
    c = 0.5 * (lipschitz + kappa)
    r = 0.5 * (lipschitz - kappa)
    n, m, p = plant.n, plant.m, plant.p
    RT = geometry.R.T
    ng = n + m
    nw = p + m

    A0 = np.block([[plant.A, np.zeros((n, m))], [np.zeros((m, ng))]])
    B10 = np.vstack([np.zeros((n, nw)), -RT])
    B20 = np.vstack([plant.B, np.zeros((m, m))])
    C10 = np.block([[plant.C, np.zeros((p, m))], [np.zeros((m, ng))]])
    D120 = np.vstack([np.zeros((p, m)), np.eye(m)])
    C20 = np.block(
        [
            [plant.C, np.zeros((p, m))],
            [np.zeros((m, n)), np.eye(m)],
            [np.zeros((m, ng))],
        ]
    )
    D210 = np.vstack([np.zeros((p, nw)), np.zeros((m, nw)), -RT])

    return AugmentedPlant(
        A=A0 + c * (B10 @ C10),
        B1=r * B10,
        B2=B20 + c * (B10 @ D120),
        C1=C10,
        D11=np.zeros((nw, nw)),
        D12=D120,
        C2=C20 + c * (D210 @ C10),
        D21=r * D210,
        D22=c * (D210 @ D120),
        center=c,
        radius=r,
        p=p,
        m=m,
    )


def transformed_nonlinearity(
    objective_gradient, geometry: KktGeometry, center: float, radius: float
):
    """Phi_tilde(a) - Phi_tilde(b) is 1-Lipschitz whenever the underlying
    gradient has sector [kappa, L]; returned as a callable on stacked (y, u)
    for sampling-based validation."""

    def phi(z):
        return (np.asarray(objective_gradient(z)) - center * np.asarray(z)) / radius

    return phi


def _bounded_real_feasible(aug: AugmentedPlant, gamma: float, max_sweeps: int):
    """Solve the output-feedback synthesis LMI at a fixed gain level.

    Decision variables: symmetric (X, Y) plus the transformed controller
    parameters (Ah, Bh, Ch, Dh); feasibility of the two blocks (synthesis
    inequality, coupling [X I; I Y] > 0) at this gamma implies a controller
    achieving closed-loop gain below gamma exists.
    """
    Ap, B1, B2 = aug.A, aug.B1, aug.B2
    C1, D11, D12 = aug.C1, aug.D11, aug.D12
    C2, D21 = aug.C2, aug.D21
    ng, nw, nz = aug.n_states, aug.n_w, aug.n_z
    ny, nu = aug.n_meas, aug.n_u
    dS = svec_dim(ng)
    q = 2 * dS + ng * ng + ng * ny + nu * ng + nu * ny

    def unpack(v):
        o = 0
        X = smat(v[o : o + dS], ng)
        o += dS
        Y = smat(v[o : o + dS], ng)
        o += dS
        Ah = v[o : o + ng * ng].reshape(ng, ng)
        o += ng * ng
        Bh = v[o : o + ng * ny].reshape(ng, ny)
        o += ng * ny
        Ch = v[o : o + nu * ng].reshape(nu, ng)
        o += nu * ng
        Dh = v[o : o + nu * ny].reshape(nu, ny)
        return X, Y, Ah, Bh, Ch, Dh

    def S_synth(v):
        X, Y, Ah, Bh, Ch, Dh = unpack(v)
        b11 = Ap @ Y + Y @ Ap.T + B2 @ Ch + Ch.T @ B2.T
        b12 = Ah.T + (Ap + B2 @ Dh @ C2)
        b13 = B1 + B2 @ Dh @ D21
        b14 = Y @ C1.T + Ch.T @ D12.T
        b22 = X @ Ap + Ap.T @ X + Bh @ C2 + C2.T @ Bh.T
        b23 = X @ B1 + Bh @ D21
        b24 = C1.T + C2.T @ Dh.T @ D12.T
        b33 = -gamma * np.eye(nw)
        b34 = D11.T + D21.T @ Dh.T @ D12.T
        b44 = -gamma * np.eye(nz)
        S = np.block(
            [
                [b11, b12, b13, b14],
                [b12.T, b22, b23, b24],
                [b13.T, b23.T, b33, b34],
                [b14.T, b24.T, b34.T, b44],
            ]
        )
        return 0.5 * (S + S.T)

    def S_couple(v):
        X, Y, _, _, _, _ = unpack(v)
        return -np.block([[X, np.eye(ng)], [np.eye(ng), Y]])

    def certificate(v):
        Sb = S_synth(v)
        Sc = S_couple(v)
        l_synth = float(np.linalg.eigvalsh(Sb).max())
        l_couple = float(np.linalg.eigvalsh(Sc).max())
        ok = (
            l_synth < -1e-8 * max(np.linalg.norm(Sb), 1.0) and l_couple < -1e-9
        )
        return ok, (l_synth, l_couple)

    result = solve_feasibility(
        [
            AffineBlock(2 * ng + nw + nz, S_synth),
            AffineBlock(2 * ng, S_couple),
        ],
        q,
        margins=[1e-3, 1e-3],
        max_sweeps=max_sweeps,
        check_every=25,
        certificate=certificate,
    )
    return result, unpack(result.v)


def _reconstruct(aug: AugmentedPlant, X, Y, Ah, Bh, Ch, Dh) -> DynamicStabilizer:
    """Invert the synthesis change of variables (factor I - XY = M N')."""
    ng = aug.n_states
    U, s, Vt = np.linalg.svd(np.eye(ng) - X @ Y)
    if s.min() < 1e-12 * s.max():
        raise SynthesisError("controller reconstruction singular (I - XY)")
    M = U * np.sqrt(s)
    N = Vt.T * np.sqrt(s)
    Mi = np.linalg.inv(M)
    NTi = np.linalg.inv(N.T)
    Dk = Dh
    Ck = (Ch - Dk @ aug.C2 @ Y) @ NTi
    Bk = Mi @ (Bh - X @ aug.B2 @ Dk)
    Ak = Mi @ (
        Ah - X @ (aug.A + aug.B2 @ Dk @ aug.C2) @ Y - M @ Bk @ aug.C2 @ Y
        - X @ aug.B2 @ Ck @ N.T
    ) @ NTi
    # absorb the measurement feedthrough D22 (sigma depends on u through e)
    nu = aug.n_u
    well = np.eye(nu) - Dk @ aug.D22
    if np.linalg.cond(well) > 1e12:
        raise SynthesisError("controller/measurement feedthrough loop ill-posed")
    T = np.linalg.inv(well)
    Dk2 = T @ Dk
    Ck2 = T @ Ck
    Ak2 = Ak + Bk @ aug.D22 @ Ck2
    Bk2 = Bk @ (np.eye(aug.n_meas) + aug.D22 @ Dk2)
    return DynamicStabilizer(
        A_s=Ak2, B_s=Bk2, C_s=Ck2, D_s=Dk2, p=aug.p, m=aug.m
    )


def closed_loop_system(aug: AugmentedPlant, stab: DynamicStabilizer):
    """(A, B, C, D) of the transformed w -> z channel with the stabilizer in
    feedback; the stabilizer's D22 loop is assumed already absorbed."""
    Acl = np.block(
        [
            [aug.A + aug.B2 @ stab.D_s @ aug.C2, aug.B2 @ stab.C_s],
            [stab.B_s @ aug.C2, stab.A_s],
        ]
    )
    Bcl = np.vstack([aug.B1 + aug.B2 @ stab.D_s @ aug.D21, stab.B_s @ aug.D21])
    Ccl = np.hstack([aug.C1 + aug.D12 @ stab.D_s @ aug.C2, aug.D12 @ stab.C_s])
    Dcl = aug.D11 + aug.D12 @ stab.D_s @ aug.D21
    return Acl, Bcl, Ccl, Dcl


def closed_loop_gain(aug: AugmentedPlant, stab: DynamicStabilizer) -> float:
    """H-infinity norm of the transformed channel for a fixed stabilizer
    (analysis only); below one certifies the nonlinear loop by small gain."""
    return hinf_norm(*closed_loop_system(aug, stab))


def pi_closed_loop_gain(
    plant: LtiPlant,
    geometry: KktGeometry,
    gains: PiGains,
    kappa: float,
    lipschitz: float,
) -> float:
    """Small-gain analysis of a fixed PI law wrapped as a stabilizer."""
    aug = loop_transform(plant, geometry, kappa, lipschitz)
    stab = pi_as_stabilizer(gains, plant.p)
    return closed_loop_gain(aug, stab)


def _loop_margin(stab: DynamicStabilizer, geometry: KktGeometry, lipschitz: float) -> float:
    """Positive iff the e-channel algebraic loop is provably well-posed for
    every gradient in the sector: ||D_e|| L ||R||^2 < 1 is sufficient since
    the loop Jacobian is I + D_e R' H_u with ||R' H_u|| <= L ||R||."""
    de = np.linalg.norm(stab.D_s_e, 2)
    rn = np.linalg.norm(geometry.R, 2)
    return 1.0 - de * lipschitz * rn


def synthesize_stabilizer(
    aug: AugmentedPlant,
    geometry: KktGeometry,
    lipschitz: float,
    max_sweeps: int = 6000,
) -> SynthesisResult:
    """Bisect the gain level over (1e-3, 1e3) and accept the first certified
    gamma below one.

    The reconstructed controller is re-validated independently: the actual
    closed-loop H-infinity norm must not exceed the certified gamma, the
    closed loop must be Hurwitz, and the e-channel algebraic loop must stay
    well posed over the whole sector.
    """
    lo, hi = _GAMMA_LO, _GAMMA_HI

    def attempt(g):
        return _bounded_real_feasible(aug, g, max_sweeps)

    result, vars_ = attempt(hi)
    if result.status == "undecided":
        raise SynthesisError(
            f"bounded-real LMI undecided at gamma = {hi:g} "
            f"({result.sweeps} sweeps); increase max_sweeps"
        )
    if not result.feasible:
        raise SynthesisError(
            f"bounded-real LMI infeasible even at gamma = {hi:g}; "
            "augmented plant not stabilizable from the measurement channel"
        )
    best_gamma, best_result, best_vars = hi, result, vars_

    while best_gamma >= 1.0 and (hi - lo) > _GAMMA_RTOL * hi:
        mid = 0.5 * (lo + hi)
        result, vars_ = attempt(mid)
        if result.feasible:
            hi = mid
            best_gamma, best_result, best_vars = mid, result, vars_
        else:
            lo = mid
    if best_gamma >= 1.0:
        raise SynthesisError(
            f"synthesis failed small-gain test: best certified gamma = "
            f"{best_gamma:.4g} >= 1"
        )

    X, Y, Ah, Bh, Ch, Dh = best_vars
    stab = _reconstruct(aug, X, Y, Ah, Bh, Ch, Dh)
    Acl, Bcl, Ccl, Dcl = closed_loop_system(aug, stab)
    if not is_hurwitz(Acl):
        raise SynthesisError("reconstructed closed loop is not Hurwitz")
    achieved = hinf_norm(Acl, Bcl, Ccl, Dcl)
    if achieved > best_gamma * (1.0 + 1e-6):
        raise SynthesisError(
            f"independent gain check failed: H-inf norm {achieved:.4g} exceeds "
            f"certified gamma {best_gamma:.4g}"
        )
    margin = _loop_margin(stab, geometry, lipschitz)
    l_synth, l_couple = best_result.certificate_info
    cert = LmiCertificate(
        P=np.block([[X, np.eye(aug.n_states)], [np.eye(aug.n_states), Y]]),
        alpha=best_gamma,
        eig_S_max=l_synth,
        eig_P_min=-l_couple,
        sweeps=best_result.sweeps,
        feasible=True,
        status="feasible",
    )
    return SynthesisResult(
        stabilizer=stab,
        gamma=best_gamma,
        certificate=cert,
        hinf_achieved=achieved,
        loop_margin=margin,
    )


def validate_synthesis(plant, geometry, objective, stabilizer, schedule, t_final, dt=1e-3):
    """Simulate the stabilized loop and report per-segment tracking metrics
    against the independent optimizer oracle."""
    from .sim import convergence_metrics, simulate

    trace = simulate(
        plant, geometry, objective, stabilizer, schedule, t_final, dt=dt
    )
    return trace, convergence_metrics(trace)


def stabilizer_to_dict(stab: DynamicStabilizer, gamma: float | None = None) -> dict:
    out = {
        "A_s": stab.A_s.tolist(),
        "B_s": stab.B_s.tolist(),
        "C_s": stab.C_s.tolist(),
        "D_s": stab.D_s.tolist(),
        "p": stab.p,
        "m": stab.m,
    }
    if gamma is not None:
        out["gamma"] = gamma
    return out


def stabilizer_from_dict(data: dict) -> DynamicStabilizer:
    return DynamicStabilizer(
        A_s=np.array(data["A_s"], dtype=float).reshape(
            len(data["A_s"]), -1
        ) if len(data["A_s"]) else np.zeros((0, 0)),
        B_s=np.array(data["B_s"], dtype=float)
        if len(data["B_s"])
        else np.zeros((0, data["p"] + 2 * data["m"])),
        C_s=np.array(data["C_s"], dtype=float),
        D_s=np.array(data["D_s"], dtype=float),
        p=int(data["p"]),
        m=int(data["m"]),
    )
