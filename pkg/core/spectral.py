"""
Spectral decomposition of the discrete Dirichlet Laplacian and the W+/W- splitting
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from core.errors import ResonantLambda
from core.mesh import Field

logger = logging.getLogger(__name__)

TOL_RES = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenpairs of K e = lambda_i M e, normalized |e_i|_L2 = 1, with splitting index k"""
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # columns e_i, M-orthonormal
    mass: np.ndarray
    lam: float
    k: int                    # dim W-; 0 when lam < lambda_1

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def weights(self) -> np.ndarray:
        """|lambda_i - lambda|, the diagonal of the norm ||.||_1 in eigen-coordinates"""
        return np.abs(self.eigenvalues - self.lam)

    def coefficients(self, u: Field) -> np.ndarray:
        """Expansion coefficients u_i = e_i^T M u"""
        return self.eigenvectors.T @ (self.mass @ u)

    def from_coefficients(self, c: np.ndarray) -> Field:
        return self.eigenvectors @ c

    def unit_mode(self, i: int) -> Field:
        """e_i scaled to unit ||.||_1 (0-based index)"""
        return self.eigenvectors[:, i] / np.sqrt(self.weights[i])

    def inner1(self, a: Field, b: Field) -> float:
        """Inner product inducing ||.||_1"""
        return float(np.sum(self.weights * self.coefficients(a) * self.coefficients(b)))

    def riesz_norm1(self, form: np.ndarray) -> Field:
        """Representative of a dual form in the ||.||_1 metric: Phi W^-1 Phi^T F"""
        return self.eigenvectors @ ((self.eigenvectors.T @ form) / self.weights)

    def norm1_form(self, u: Field) -> np.ndarray:
        """
        Dual form of the derivative of u -> ||u||_1

        Returns the zero form at u = 0, where the norm is not differentiable.
        """
        c = self.coefficients(u)
        total = np.sqrt(np.sum(self.weights * c**2))
        if total == 0.0:
            return np.zeros_like(u)
        return self.mass @ (self.eigenvectors @ (self.weights * c)) / total


def eigendecompose(K: np.ndarray, M: np.ndarray, lam: float, tol_res: float = TOL_RES) -> SpectralData:
    """
    Full generalized eigendecomposition and splitting index for a fixed lambda

    Args:
        K: Stiffness matrix (SPD)
        M: Mass matrix (SPD)
        lam: The fixed lambda of the problem
        tol_res: Relative distance to the spectrum below which lambda counts as resonant

    Returns:
        SpectralData with k = #{i : lambda_i < lam}
    """
    if K.shape != M.shape:
        raise ValueError(f"K and M differ in shape: {K.shape} vs {M.shape}")

    eigenvalues, vectors = scipy.linalg.eigh(K, M)
    # fix signs so that repeated runs give identical vectors
    signs = np.where(vectors[0] < 0.0, -1.0, 1.0)
    vectors = vectors * signs

    near = np.abs(eigenvalues - lam) <= tol_res * np.abs(eigenvalues)
    if np.any(near):
        i = int(np.argmax(near))
        raise ResonantLambda(
            f"lambda={lam!r} coincides with eigenvalue lambda_{i + 1}={eigenvalues[i]!r}",
            witness={"index": i + 1, "eigenvalue": float(eigenvalues[i])},
        )

    k = int(np.sum(eigenvalues < lam))
    logger.debug("Eigendecomposition of size %d, lambda=%g, k=%d", len(eigenvalues), lam, k)
    return SpectralData(eigenvalues=eigenvalues, eigenvectors=vectors, mass=M, lam=float(lam), k=k)


def split(spec: SpectralData, u: Field) -> Tuple[Field, Field]:
    """Decompose u = u_plus + u_minus with u_minus in span{e_1..e_k}"""
    c = spec.coefficients(u)
    u_minus = spec.eigenvectors[:, :spec.k] @ c[:spec.k]
    return u - u_minus, u_minus


def norm1(spec: SpectralData, u: Field) -> Tuple[float, float, float]:
    """The equivalent norm ||u||_1 and its W+ and W- parts"""
    weighted = spec.weights * spec.coefficients(u) ** 2
    minus = float(np.sqrt(np.sum(weighted[:spec.k])))
    plus = float(np.sqrt(np.sum(weighted[spec.k:])))
    return plus, minus, float(np.hypot(plus, minus))


def h_lambda(K: np.ndarray, M: np.ndarray, lam: float, u: Field) -> float:
    """Quadratic form H_lambda(u) = ||u||_W^2 - lambda |u|_L2^2"""
    return float(u @ (K @ u) - lam * (u @ (M @ u)))


def norm_equivalence(spec: SpectralData) -> Tuple[float, float]:
    """Constants c0, c1 with c0 ||u||_1^2 <= ||u||_W^2 <= c1 ||u||_1^2 on the discrete space"""
    ratios = spec.eigenvalues / spec.weights
    return float(ratios.min()), float(ratios.max())


def resolve_lambda(eigenvalues: np.ndarray, spec: str) -> float:
    """
    Translate a lambda setting into a value

    Args:
        eigenvalues: Ascending discrete eigenvalues
        spec: Either a fraction of lambda_1 ("0.5") or "gap:k:theta" meaning
            lambda_k + theta (lambda_{k+1} - lambda_k), with lambda_0 treated as 0

    Returns:
        The value of lambda
    """
    text = str(spec).strip()
    if text.startswith("gap:"):
        try:
            _, k_str, theta_str = text.split(":")
            k, theta = int(k_str), float(theta_str)
        except ValueError as e:
            raise ValueError(f"Malformed gap setting: {spec!r}") from e
        if not 0 <= k < len(eigenvalues) or not 0.0 < theta < 1.0:
            raise ValueError(f"Gap setting out of range: {spec!r}")
        lower = 0.0 if k == 0 else eigenvalues[k - 1]
        return float(lower + theta * (eigenvalues[k] - lower))
    try:
        return float(text) * float(eigenvalues[0])
    except ValueError as e:
        raise ValueError(f"Malformed lambda setting: {spec!r}") from e
