"""LTI plant model and the standing well-posedness checks (stabilizability,
detectability, full row rank of [A B])."""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import numerical_rank

# PBH tests only need eigenvalues of A; the margin absorbs eigenvalue round-off
# so that marginally stable modes are still tested.
_PBH_REAL_PART_MARGIN = 1e-10


class PlantError(ValueError):
    pass


@dataclass(frozen=True)
class LtiPlant:
    """x' = A x + B u + d, y = C x (no direct feedthrough)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        n = A.shape[0]
        if A.shape != (n, n):
            raise PlantError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise PlantError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise PlantError(f"C has {C.shape[1]} columns, expected {n}")
        if self.m > n or self.p > n:
            raise PlantError(
                f"require m <= n and p <= n, got n={n}, m={self.m}, p={self.p}"
            )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def stacked_AB(self) -> np.ndarray:
        return np.hstack([self.A, self.B])


@dataclass(frozen=True)
class EquilibriumPoint:
    x_bar: np.ndarray
    u_bar: np.ndarray
    y_bar: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "x_bar", np.asarray(self.x_bar, dtype=float))
        object.__setattr__(self, "u_bar", np.asarray(self.u_bar, dtype=float))
        if self.y_bar is not None:
            object.__setattr__(self, "y_bar", np.asarray(self.y_bar, dtype=float))


def check_disturbance(plant: LtiPlant, d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float).ravel()
    if d.shape != (plant.n,):
        raise PlantError(f"disturbance has length {d.size}, expected {plant.n}")
    return d


def eigenvalues(M: np.ndarray) -> np.ndarray:
    """All eigenvalues of a square matrix, with multiplicity."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise PlantError(f"eigenvalues requires a square matrix, got {M.shape}")
    try:
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise PlantError(f"eigenvalue computation failed: {exc}") from exc


def check_stabilizable(plant: LtiPlant) -> bool:
    """PBH test: rank [A - lambda I, B] = n at every eigenvalue of A with
    nonnegative real part."""
    n = plant.n
    for lam in eigenvalues(plant.A):
        if lam.real < -_PBH_REAL_PART_MARGIN:
            continue
        M = np.hstack([plant.A - lam * np.eye(n), plant.B]).astype(complex)
        if numerical_rank(M) < n:
            return False
    return True


def check_detectable(plant: LtiPlant) -> bool:
    """PBH test: rank [A - lambda I; C] = n at every eigenvalue of A with
    nonnegative real part."""
    n = plant.n
    for lam in eigenvalues(plant.A):
        if lam.real < -_PBH_REAL_PART_MARGIN:
            continue
        M = np.vstack([plant.A - lam * np.eye(n), plant.C.astype(complex)])
        if numerical_rank(M) < n:
            return False
    return True


def check_full_row_rank_AB(plant: LtiPlant) -> bool:
    """rank [A B] = n; guarantees a forced equilibrium exists for every d."""
    return numerical_rank(plant.stacked_AB()) == plant.n


def particular_equilibrium(plant: LtiPlant, d: np.ndarray) -> EquilibriumPoint:
    """Minimum-norm solution of A x + B u + d = 0."""
    d = check_disturbance(plant, d)
    z = -np.linalg.pinv(plant.stacked_AB()) @ d
    x = z[: plant.n]
    u = z[plant.n :]
    return EquilibriumPoint(x_bar=x, u_bar=u, y_bar=plant.C @ x)
