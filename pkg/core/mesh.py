"""
Uniform P1 finite element discretization of the unit interval
"""

from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from core.errors import DegenerateMesh, NonFiniteIntegrand

# Nodal values at the interior nodes; boundary values are implicitly zero.
Field = NDArray[np.float64]

# f(x, s) evaluated pointwise, vectorized over numpy arrays
PointwiseFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

QUAD_ORDERS = (2, 3, 4, 5)


class Mesh:
    """Uniform mesh of (0, 1) with n interior nodes and Gauss quadrature per element"""

    def __init__(self, n: int, quad_order: int = 3):
        """
        Initialize the mesh

        Args:
            n: Number of interior nodes (at least 2)
            quad_order: Gauss-Legendre points per element
        """
        if int(n) != n or n < 2:
            raise DegenerateMesh(f"Need at least 2 interior nodes, got n={n}")
        if quad_order not in QUAD_ORDERS:
            raise DegenerateMesh(f"quad_order must be one of {QUAD_ORDERS}, got {quad_order}")

        self.n = int(n)
        self.quad_order = int(quad_order)
        self.h = 1.0 / (self.n + 1)
        self._build_quadrature()

    def _build_quadrature(self):
        """Precompute quadrature points, weights and hat-function values"""
        xi, w = np.polynomial.legendre.leggauss(self.quad_order)
        # local hat functions on the reference element
        self.shape_left = 0.5 * (1.0 - xi)
        self.shape_right = 0.5 * (1.0 + xi)
        self.weights = 0.5 * self.h * w

        left_ends = self.h * np.arange(self.n + 1)
        self.quad_points = left_ends[:, None] + self.h * self.shape_right[None, :]
        self.nodes = self.h * np.arange(1, self.n + 1)

        self.quad_points.setflags(write=False)
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def field(self, values) -> Field:
        """Validate and return a Field for this mesh"""
        u = np.asarray(values, dtype=float)
        if u.shape != (self.n,):
            raise ValueError(f"Field must have length {self.n}, got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("Field entries must be finite")
        return u

    def zeros(self) -> Field:
        return np.zeros(self.n)

    def interpolate(self, func: Callable[[np.ndarray], np.ndarray]) -> Field:
        """Nodal interpolant of a function of x"""
        return self.field(func(self.nodes))

    def at_quadrature(self, u: Field) -> np.ndarray:
        """Values of the P1 interpolant at all quadrature points, shape (n+1, quad_order)"""
        padded = np.concatenate(([0.0], u, [0.0]))
        return padded[:-1, None] * self.shape_left + padded[1:, None] * self.shape_right

    def assemble_load(self, values_q: np.ndarray) -> np.ndarray:
        """
        Assemble the vector (int f phi_i dx)_i from f sampled at the quadrature points

        Args:
            values_q: Array of shape (n+1, quad_order)

        Returns:
            Dual form of length n
        """
        left = (values_q * self.shape_left * self.weights).sum(axis=1)
        right = (values_q * self.shape_right * self.weights).sum(axis=1)
        padded = np.zeros(self.n + 2)
        padded[:-1] += left
        padded[1:] += right
        return padded[1:-1]

    def assemble_tangent(self, values_q: np.ndarray) -> np.ndarray:
        """
        Assemble the matrix (int f phi_i phi_j dx)_ij, tridiagonal, as a dense array

        Args:
            values_q: Array of shape (n+1, quad_order)
        """
        diag = np.zeros(self.n + 2)
        diag[:-1] += (values_q * self.shape_left**2 * self.weights).sum(axis=1)
        diag[1:] += (values_q * self.shape_right**2 * self.weights).sum(axis=1)
        off = (values_q * self.shape_left * self.shape_right * self.weights).sum(axis=1)

        # interior block: elements 1..n-1 couple interior neighbours
        inner = off[1:-1]
        return np.diag(diag[1:-1]) + np.diag(inner, 1) + np.diag(inner, -1)

    def __repr__(self) -> str:
        return f"Mesh(n={self.n}, quad_order={self.quad_order})"


def build_mesh(n: int, quad_order: int = 3) -> Mesh:
    """Build a uniform mesh of (0, 1) with n interior nodes"""
    return Mesh(n, quad_order)


def stiffness(mesh: Mesh) -> np.ndarray:
    """Stiffness matrix K_ij = int phi_i' phi_j' dx"""
    n, h = mesh.n, mesh.h
    return (2.0 / h) * np.eye(n) - (1.0 / h) * (np.eye(n, k=1) + np.eye(n, k=-1))


def mass(mesh: Mesh) -> np.ndarray:
    """Mass matrix M_ij = int phi_i phi_j dx"""
    n, h = mesh.n, mesh.h
    return (2.0 * h / 3.0) * np.eye(n) + (h / 6.0) * (np.eye(n, k=1) + np.eye(n, k=-1))


def integrate(mesh: Mesh, f: PointwiseFunction, u: Optional[Field] = None) -> float:
    """
    Composite Gauss quadrature of f(x, u_h(x)) over (0, 1)

    Args:
        mesh: The mesh
        f: Pointwise integrand f(x, s)
        u: Nodal values of u_h (zero field when omitted)
    """
    uq = mesh.at_quadrature(mesh.zeros() if u is None else u)
    values = np.broadcast_to(f(mesh.quad_points, uq), uq.shape)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise NonFiniteIntegrand(
            "Integrand is not finite at a quadrature point",
            witness={"x": float(mesh.quad_points[tuple(bad)]), "u": float(uq[tuple(bad)])},
        )
    return float(np.sum(values * mesh.weights))
