"""Shared value types, validation and simple state functionals.

Basis convention used everywhere: index 0 is the ground level ``|g>``, index 1
the excited level ``|e>``. Multi-cell states use the Kronecker ordering
``cell_1 (x) cell_2 (x) ...``, so for two cells the basis is
``{gg, ge, eg, ee}``. The ground energy is fixed to zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidTemperature,
    NonPositive,
    OutOfRange,
    ValidityWarning,
)

TOL = 1e-9
# |J| at or above this fraction of omega triggers a ValidityWarning
COUPLING_WARN_RATIO = 0.1

Strength = Union[float, Sequence[float]]

# single-cell ladder matrices; LOWER = |g><e|, RAISE = |e><g|
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
RAISE = LOWER.conj().T.copy()
EXCITED = np.diag([0.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class QubitState:
    """Single-qubit battery state ``[[1-P, Q], [Q*, P]]``."""

    P: float
    Q: complex = 0j

    def __post_init__(self):
        P = float(self.P)
        Q = complex(self.Q)
        if not (-TOL <= P <= 1.0 + TOL) or math.isnan(P):
            raise OutOfRange(f"population P={P} outside [0, 1]")
        P = min(max(P, 0.0), 1.0)
        if abs(Q) ** 2 > P * (1.0 - P) + TOL:
            raise NonPositive(f"|Q|^2={abs(Q) ** 2:.6g} exceeds P(1-P)={P * (1 - P):.6g}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)

    @property
    def Q2(self) -> float:
        return abs(self.Q) ** 2

    def matrix(self) -> np.ndarray:
        return np.array([[1.0 - self.P, self.Q], [self.Q.conjugate(), self.P]], dtype=complex)

    @classmethod
    def from_matrix(cls, rho: np.ndarray) -> "QubitState":
        rho = np.asarray(rho)
        if rho.shape != (2, 2):
            raise DimensionMismatch(f"expected 2x2 matrix, got {rho.shape}")
        return cls(float(rho[1, 1].real), complex(rho[0, 1]))

    @classmethod
    def from_coherence(cls, P: float, Q2: float, phase: float = 0.0) -> "QubitState":
        """Build a state from the population and ``|Q|^2`` (real, non-negative)."""
        if Q2 < -TOL:
            raise OutOfRange(f"|Q|^2={Q2} is negative")
        return cls(P, math.sqrt(max(Q2, 0.0)) * complex(math.cos(phase), math.sin(phase)))


def validate_qubit_state(P: float, Q: complex = 0j) -> QubitState:
    return QubitState(P, Q)


@dataclass(frozen=True)
class BathParams:
    """Thermal reservoir: decay rate, thermal excited population and qubit gap."""

    gamma: float = 1e-2
    f: float = 0.3
    omega: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise OutOfRange(f"gamma={self.gamma} must be > 0")
        if not self.omega > 0:
            raise OutOfRange(f"omega={self.omega} must be > 0")
        if not (0.0 <= self.f < 0.5):
            raise OutOfRange(f"thermal population f={self.f} outside [0, 1/2)")

    @property
    def tau_gamma(self) -> float:
        return 1.0 / self.gamma

    @classmethod
    def from_beta(cls, beta: float, gamma: float = 1e-2, omega: float = 1.0) -> "BathParams":
        return cls(gamma=gamma, f=thermal_population(beta, omega), omega=omega)


def _check_strength(value, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1 or np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise OutOfRange(f"{name}={value!r}: every strength must lie in [0, 1]")
    return float(arr[0]) if np.ndim(value) == 0 else tuple(float(x) for x in arr)


@dataclass(frozen=True)
class ProtocolParams:
    """Measurement strengths and dissipation time; strengths may be per-cell."""

    m: Strength
    w: Strength
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "m", _check_strength(self.m, "m"))
        object.__setattr__(self, "w", _check_strength(self.w, "w"))
        if not self.tau >= 0:
            raise OutOfRange(f"tau={self.tau} must be >= 0")


def thermal_population(beta: float, omega: float = 1.0) -> float:
    """Excited-state population ``e^{-b w} / (1 + e^{-b w})`` of the Gibbs state.

    ``beta = inf`` maps to zero. ``beta = 0`` would give ``f = 1/2``, which is
    excluded from the admissible range, so it is rejected along with negative
    temperatures.
    """
    if not omega > 0:
        raise OutOfRange(f"omega={omega} must be > 0")
    if math.isnan(beta) or beta <= 0:
        raise InvalidTemperature(f"beta={beta} must be > 0 (f must stay below 1/2)")
    if math.isinf(beta):
        return 0.0
    # logistic form avoids overflow for large beta*omega
    return 1.0 / (1.0 + math.exp(beta * omega))


def purity(s: QubitState) -> float:
    return s.P ** 2 + (1.0 - s.P) ** 2 + 2.0 * s.Q2


def embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Place a single-cell operator on ``site`` of an ``n``-cell register."""
    out = np.ones((1, 1), dtype=complex)
    for k in range(n):
        out = np.kron(out, op if k == site else np.eye(2, dtype=complex))
    return out


def _coupling_matrix(J, n: int) -> np.ndarray:
    if J is None:
        return np.zeros((n, n))
    J = np.asarray(J, dtype=float)
    if J.ndim == 0:
        mat = np.full((n, n), float(J))
        np.fill_diagonal(mat, 0.0)
        return mat
    if J.shape != (n, n):
        raise DimensionMismatch(f"coupling matrix has shape {J.shape}, expected {(n, n)}")
    if not np.allclose(J, J.T, atol=0, rtol=0) or np.any(np.diag(J) != 0):
        raise OutOfRange("coupling matrix must be symmetric with zero diagonal")
    return J.copy()


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """``omega * sum_k n_k + sum_{k != j} J_kj |g><e|_k |e><g|_j``.

    ``J`` may be ``None`` (no coupling), a scalar (uniform all-to-all) or an
    ``n x n`` symmetric matrix with zero diagonal.
    """

    n_cells: int = 1
    omega: float = 1.0
    J: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.n_cells < 1:
            raise OutOfRange("n_cells must be >= 1")
        if not self.omega > 0:
            raise OutOfRange(f"omega={self.omega} must be > 0")
        J = _coupling_matrix(self.J, self.n_cells)
        object.__setattr__(self, "J", J)
        if self.n_cells > 1 and np.max(np.abs(J)) >= COUPLING_WARN_RATIO * self.omega:
            warnings.warn(
                f"max|J|={np.max(np.abs(J)):.3g} is not << omega={self.omega}; "
                "the local master equation is outside its validity range",
                ValidityWarning,
                stacklevel=3,
            )

    @property
    def dim(self) -> int:
        return 2 ** self.n_cells

    @cached_property
    def matrix(self) -> np.ndarray:
        n = self.n_cells
        H = sum(self.omega * embed(EXCITED, k, n) for k in range(n))
        for k in range(n):
            for j in range(n):
                if k != j and self.J[k, j] != 0:
                    H = H + self.J[k, j] * embed(LOWER, k, n) @ embed(RAISE, j, n)
        return np.asarray(H, dtype=complex)

    @cached_property
    def is_diagonal(self) -> bool:
        H = self.matrix
        return bool(np.all(H == np.diag(np.diag(H))))

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and eigenvectors (columns)."""
        if self.is_diagonal:
            # keep the product basis inside degenerate manifolds
            E = np.diag(self.matrix).real
            order = np.argsort(E, kind="stable")
            return E[order], np.eye(self.dim, dtype=complex)[:, order]
        E, V = np.linalg.eigh(self.matrix)
        return E, V

    @classmethod
    def qubit(cls, omega: float = 1.0) -> "HamiltonianSpec":
        return cls(1, omega)


def hamiltonian_matrix(H) -> np.ndarray:
    return H.matrix if isinstance(H, HamiltonianSpec) else np.asarray(H, dtype=complex)


def hamiltonian_eigh(H) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(H, HamiltonianSpec):
        return H.eigh
    H = np.asarray(H, dtype=complex)
    if np.all(H == np.diag(np.diag(H))):
        E = np.diag(H).real
        order = np.argsort(E, kind="stable")
        return E[order], np.eye(len(E), dtype=complex)[:, order]
    return np.linalg.eigh(H)


def check_density_matrix(rho, tol: float = TOL) -> np.ndarray:
    """Return ``rho`` as a complex array after checking it is a valid state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise NonPositive("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise NonPositive(f"trace {np.trace(rho).real:.12g} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise NonPositive("density matrix has a negative eigenvalue")
    return rho


def dephase(rho, H) -> np.ndarray:
    """Remove coherences in the eigenbasis of ``H``."""
    rho = np.asarray(rho, dtype=complex)
    E, V = hamiltonian_eigh(H)
    if rho.shape != (len(E), len(E)):
        raise DimensionMismatch(f"state {rho.shape} vs Hamiltonian dimension {len(E)}")
    pops = np.einsum("ki,kl,li->i", V.conj(), rho, V).real
    return (V * pops) @ V.conj().T
