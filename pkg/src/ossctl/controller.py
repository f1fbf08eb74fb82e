"""Feedback law implementations: the gradient-projection error signal, the
PI controller (including the implicit algebraic loop through the
proportional term), and the general dynamic-stabilizer form."""

from dataclasses import dataclass

import numpy as np

from .kkt import KktGeometry
from .objective import SteadyStateObjective


class AlgebraicLoopError(RuntimeError):
    """The implicit input equation could not be solved at this state."""


@dataclass(frozen=True)
class PiGains:
    K_P: np.ndarray
    K_I: np.ndarray

    def __post_init__(self):
        KP = np.atleast_2d(np.asarray(self.K_P, dtype=float))
        KI = np.atleast_2d(np.asarray(self.K_I, dtype=float))
        object.__setattr__(self, "K_P", KP)
        object.__setattr__(self, "K_I", KI)
        m = KI.shape[0]
        if KI.shape != (m, m) or KP.shape != (m, m):
            raise ValueError("K_P and K_I must be square of equal size")
        if np.linalg.cond(KI) > 1e12:
            raise ValueError("K_I must be invertible (condition number < 1e12)")

    @classmethod
    def from_scalars(cls, k_p: float, k_i: float, m: int) -> "PiGains":
        return cls(K_P=k_p * np.eye(m), K_I=k_i * np.eye(m))

    @property
    def m(self) -> int:
        return self.K_I.shape[0]


@dataclass
class ControllerState:
    eta: np.ndarray

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        if not np.all(np.isfinite(self.eta)):
            raise ValueError("integrator state must be finite")


@dataclass(frozen=True)
class DynamicStabilizer:
    """u is generated by a linear system driven by sigma = (y, eta, e)."""

    A_s: np.ndarray
    B_s: np.ndarray
    C_s: np.ndarray
    D_s: np.ndarray
    p: int
    m: int

    def __post_init__(self):
        for name in ("A_s", "B_s", "C_s", "D_s"):
            object.__setattr__(
                self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            )
        ns = self.A_s.shape[0]
        nsig = self.p + 2 * self.m
        if self.A_s.shape != (ns, ns):
            raise ValueError("A_s must be square")
        if self.B_s.shape != (ns, nsig):
            raise ValueError(f"B_s must be {ns}x{nsig} (sigma = (y, eta, e))")
        if self.C_s.shape != (self.m, ns):
            raise ValueError(f"C_s must be {self.m}x{ns}")
        if self.D_s.shape != (self.m, nsig):
            raise ValueError(f"D_s must be {self.m}x{nsig}")

    @property
    def order(self) -> int:
        return self.A_s.shape[0]

    # sigma blocks, in the fixed (y, eta, e) ordering
    @property
    def D_s_y(self) -> np.ndarray:
        return self.D_s[:, : self.p]

    @property
    def D_s_eta(self) -> np.ndarray:
        return self.D_s[:, self.p : self.p + self.m]

    @property
    def D_s_e(self) -> np.ndarray:
        return self.D_s[:, self.p + self.m :]


def error_signal(
    geometry: KktGeometry,
    objective: SteadyStateObjective,
    y: np.ndarray,
    u: np.ndarray,
) -> np.ndarray:
    """e = -R' grad_g(y, u): the component of the cost gradient along the
    feasible directions, which the integrator drives to zero."""
    return -(geometry.R.T @ objective.gradient(y, u))


def _solve_implicit_input(
    feedthrough: np.ndarray,
    offset: np.ndarray,
    geometry: KktGeometry,
    objective: SteadyStateObjective,
    y: np.ndarray,
    u0: np.ndarray,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> np.ndarray:
    """Solve u = offset + feedthrough * e(y, u) for u.

    e depends on u through grad_g, so this is an implicit equation whenever
    the feedthrough is nonzero.  Quadratic costs give an affine equation
    solved directly; otherwise damped Newton with finite-difference Jacobian.
    """
    m = u0.size
    RT = geometry.R.T
    if objective.is_quadratic:
        H = objective.hessian
        q = objective.linear_term
        p = objective.p
        Gy = RT @ (H[:, :p] @ y + q)
        Gu = RT @ H[:, p:]
        # u = offset - feedthrough (Gy + Gu u)
        lhs = np.eye(m) + feedthrough @ Gu
        try:
            return np.linalg.solve(lhs, offset - feedthrough @ Gy)
        except np.linalg.LinAlgError as exc:
            raise AlgebraicLoopError(
                "algebraic loop singular for this quadratic cost"
            ) from exc

    def residual(u):
        return u - offset + feedthrough @ (RT @ objective.gradient(y, u))

    u = u0.copy()
    F = residual(u)
    for _ in range(max_iter):
        nF = np.linalg.norm(F)
        if nF <= tol * (1.0 + np.linalg.norm(u)):
            return u
        h = 1e-7 * (1.0 + np.linalg.norm(u))
        J = np.empty((m, m))
        for j in range(m):
            e = np.zeros(m)
            e[j] = h
            J[:, j] = (residual(u + e) - F) / h
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = -F
        t = 1.0
        for _ in range(40):
            u_new = u + t * step
            F_new = residual(u_new)
            if np.linalg.norm(F_new) < nF:
                break
            t *= 0.5
        else:
            raise AlgebraicLoopError(
                "algebraic loop not well-posed at this state (Newton stagnated)"
            )
        u, F = u_new, F_new
    raise AlgebraicLoopError(
        "algebraic loop not well-posed at this state (iteration limit)"
    )


def resolve_input(
    gains: PiGains,
    geometry: KktGeometry,
    objective: SteadyStateObjective,
    eta: np.ndarray,
    y: np.ndarray,
    u_prev: np.ndarray | None = None,
) -> np.ndarray:
    """u satisfying u = K_I eta + K_P e(y, u)."""
    eta = np.asarray(eta, dtype=float)
    offset = gains.K_I @ eta
    u0 = offset.copy() if u_prev is None else np.asarray(u_prev, dtype=float)
    return _solve_implicit_input(gains.K_P, offset, geometry, objective, y, u0)


def pi_dynamics(
    gains: PiGains,
    geometry: KktGeometry,
    objective: SteadyStateObjective,
    state: ControllerState,
    y: np.ndarray,
    u_prev: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(eta_dot, u) for the PI law: eta_dot = e, u = K_I eta + K_P e."""
    u = resolve_input(gains, geometry, objective, state.eta, y, u_prev)
    e = error_signal(geometry, objective, y, u)
    return e, u


def stabilizer_dynamics(
    stab: DynamicStabilizer,
    geometry: KktGeometry,
    objective: SteadyStateObjective,
    x_s: np.ndarray,
    eta: np.ndarray,
    y: np.ndarray,
    u_prev: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x_s_dot, eta_dot, u) for the stabilizer driven by sigma = (y, eta, e).

    The e-column of D_s closes the same algebraic loop as the proportional
    term of the PI law; it is resolved identically.
    """
    x_s = np.asarray(x_s, dtype=float)
    eta = np.asarray(eta, dtype=float)
    offset = stab.C_s @ x_s + stab.D_s_y @ y + stab.D_s_eta @ eta
    u0 = offset.copy() if u_prev is None else np.asarray(u_prev, dtype=float)
    u = _solve_implicit_input(
        stab.D_s_e, offset, geometry, objective, np.asarray(y, dtype=float), u0
    )
    e = error_signal(geometry, objective, y, u)
    x_s_dot = stab.A_s @ x_s + stab.B_s @ np.concatenate([y, eta, e])
    return x_s_dot, e, u


def pi_as_stabilizer(gains: PiGains, p: int) -> DynamicStabilizer:
    """Embed a PI law as a (zero-order) dynamic stabilizer; trajectories
    coincide exactly."""
    m = gains.m
    return DynamicStabilizer(
        A_s=np.zeros((0, 0)),
        B_s=np.zeros((0, p + 2 * m)),
        C_s=np.zeros((m, 0)),
        D_s=np.hstack([np.zeros((m, p)), gains.K_I, gains.K_P]),
        p=p,
        m=m,
    )
