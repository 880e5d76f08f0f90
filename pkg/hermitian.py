"""
Dense complex linear algebra at small dimension: validated matrices,
cyclic Jacobi eigensolver, density operators, Kronecker products and
the partial trace over the reservoir factor.

Doubled-space index convention: |r>_R |a>_A  ->  r * d_A + a.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from common import (
    DimensionMismatch,
    InvalidArgument,
    InvalidSpectrum,
    NoConvergence,
    NonFiniteEntries,
    NotAProbabilityVector,
    NotHermitian,
)


ComplexMatrix = np.ndarray

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
EIGH_HERMITIAN_TOL = 1e-10
DENSITY_HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NEGATIVE_EIGENVALUE_TOL = 1e-12
PROBABILITY_SUM_TOL = 1e-10


# ==================== Matrices ====================

def as_complex_matrix(entries) -> ComplexMatrix:
    """Copy entries into a finite 2-D complex128 array"""
    m = np.array(entries, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionMismatch(f"Expected a matrix, got an array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteEntries("Matrix contains NaN or Inf entries")
    return m


def hermitian_defect(m: ComplexMatrix) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_unitary(m: ComplexMatrix, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))) <= tol


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """(a ⊗ b)[i*rows_b + k, j*cols_b + l] = a[i, j] * b[k, l]"""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    ra, ca = a.shape
    rb, cb = b.shape
    return np.einsum("ij,kl->ikjl", a, b).reshape(ra * rb, ca * cb)


def _off_diagonal_norm(a: ComplexMatrix) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi_rotate(a: ComplexMatrix, v: ComplexMatrix, p: int, q: int):
    """Zero a[p, q] in place with a complex Jacobi rotation"""
    h = a[p, q]
    mag = abs(h)
    if mag == 0.0:
        return
    phase_conj = np.conj(h) / mag
    tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
    t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    w = np.array([[c, s], [-s * phase_conj, c * phase_conj]], dtype=np.complex128)

    cols = [p, q]
    a[:, cols] = a[:, cols] @ w
    a[cols, :] = w.conj().T @ a[cols, :]
    v[:, cols] = v[:, cols] @ w
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real


def eigh(m, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, ComplexMatrix]:
    """
    Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Returns eigenvalues in descending order (stable for ties) and the
    matching orthonormal eigenvectors as columns, so m = V diag(w) V†.
    """
    a = as_complex_matrix(m)
    n, cols = a.shape
    if n != cols:
        raise DimensionMismatch(f"eigh needs a square matrix, got {n}x{cols}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    defect = hermitian_defect(a)
    if defect > EIGH_HERMITIAN_TOL * scale:
        raise NotHermitian(f"Matrix is not Hermitian (max |m - m†| = {defect:.3e})")

    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    sweeps = 0
    while _off_diagonal_norm(a) > threshold:
        if sweeps >= max_sweeps:
            raise NoConvergence(f"Jacobi did not converge within {max_sweeps} sweeps")
        for p in range(n - 1):
            for q in range(p + 1, n):
                _jacobi_rotate(a, v, p, q)
        sweeps += 1

    w = np.real(np.diag(a)).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


# ==================== Spectra ====================

def check_probability_vector(lam, tol: float = PROBABILITY_SUM_TOL) -> np.ndarray:
    """Validate a probability vector; tiny negatives are clamped to 0"""
    p = np.asarray(lam, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise NotAProbabilityVector(f"Expected a non-empty 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise NotAProbabilityVector("Spectrum contains NaN or Inf")
    if np.min(p) < -NEGATIVE_EIGENVALUE_TOL:
        raise NotAProbabilityVector(f"Negative entry {np.min(p):.3e} in spectrum")
    total = float(np.sum(p))
    if abs(total - 1.0) > tol:
        raise NotAProbabilityVector(f"Spectrum sums to {total!r}, expected 1")
    return np.clip(p, 0.0, None)


# ==================== States ====================

@dataclass(frozen=True)
class StateVector:
    """Vector in the doubled space; never normalized implicitly"""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(amps)):
            raise NonFiniteEntries("State vector contains NaN or Inf entries")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise InvalidArgument("Cannot normalize the zero vector")
        return StateVector(self.amplitudes / n)

    def as_matrix(self, d_R: int, d_A: int) -> ComplexMatrix:
        if self.dim != d_R * d_A:
            raise DimensionMismatch(f"State of dim {self.dim} is not {d_R}x{d_A}")
        return self.amplitudes.reshape(d_R, d_A)


def partial_trace_R(psi: Union[StateVector, np.ndarray], d_R: int, d_A: int) -> ComplexMatrix:
    """Tr_R |psi><psi|  ->  rho[a, a'] = sum_r psi[r, a] conj(psi[r, a'])"""
    if not isinstance(psi, StateVector):
        psi = StateVector(psi)
    m = psi.as_matrix(d_R, d_A)
    return m.T @ m.conj()


class DensityOperator:
    """Hermitian, unit-trace, PSD matrix with its eigendecomposition cached"""

    def __init__(self, matrix):
        m = as_complex_matrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"Density operator must be square, got {m.shape}")
        defect = hermitian_defect(m)
        if defect > DENSITY_HERMITIAN_TOL:
            raise NotHermitian(f"Density operator is not Hermitian (max |m - m†| = {defect:.3e})")
        m = 0.5 * (m + m.conj().T)
        trace = float(np.trace(m).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidSpectrum(f"Density operator has trace {trace!r}, expected 1")

        lam, vecs = eigh(m)
        if lam[-1] < -NEGATIVE_EIGENVALUE_TOL:
            raise InvalidSpectrum(f"Density operator has negative eigenvalue {lam[-1]:.3e}")
        lam = np.clip(lam, 0.0, None)
        lam = lam / np.sum(lam)

        for arr in (m, lam, vecs):
            arr.setflags(write=False)
        self._matrix = m
        self._eigenvalues = lam
        self._eigenvectors = vecs
        self._sqrt: Optional[ComplexMatrix] = None

    @classmethod
    def from_spectrum(cls, lam: Sequence[float], basis: Optional[ComplexMatrix] = None) -> "DensityOperator":
        """Build B diag(lam) B† (B = identity unless a unitary basis is given)"""
        p = check_probability_vector(lam)
        d = p.size
        if basis is None:
            return cls(np.diag(p).astype(np.complex128))
        b = as_complex_matrix(basis)
        if b.shape != (d, d) or not is_unitary(b):
            raise InvalidArgument(f"Basis must be a unitary {d}x{d} matrix")
        return cls((b * p) @ b.conj().T)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        return cls.from_spectrum(np.full(d, 1.0 / d))

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[0])

    @property
    def matrix(self) -> ComplexMatrix:
        return self._matrix

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigenvalues

    @property
    def eigenvectors(self) -> ComplexMatrix:
        return self._eigenvectors

    def is_pure(self, tol: float = 1e-12) -> bool:
        return bool(self._eigenvalues[0] >= 1.0 - tol)

    def sqrt(self) -> ComplexMatrix:
        """V diag(sqrt(lambda)) V†"""
        if self._sqrt is None:
            v = self._eigenvectors
            root = (v * np.sqrt(self._eigenvalues)) @ v.conj().T
            root.setflags(write=False)
            self._sqrt = root
        return self._sqrt

    def rotated(self, w: ComplexMatrix) -> "DensityOperator":
        """W rho W†, same spectrum on a rotated eigenbasis"""
        w = as_complex_matrix(w)
        if w.shape != (self.dim, self.dim) or not is_unitary(w):
            raise InvalidArgument(f"Basis rotation must be a unitary {self.dim}x{self.dim} matrix")
        return DensityOperator(w @ self._matrix @ w.conj().T)

    def reconstruction_error(self) -> float:
        v = self._eigenvectors
        rebuilt = (v * self._eigenvalues) @ v.conj().T
        return float(np.max(np.abs(rebuilt - self._matrix)))

    def __repr__(self):
        spectrum = ", ".join(f"{x:.6g}" for x in self._eigenvalues)
        return f"DensityOperator(dim={self.dim}, spectrum=({spectrum}))"


def fidelity(rho, sigma) -> float:
    """(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 for two density operators"""
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator(rho)
    s = sigma.matrix if isinstance(sigma, DensityOperator) else as_complex_matrix(sigma)
    if s.shape != rho.matrix.shape:
        raise DimensionMismatch(f"Fidelity of {rho.matrix.shape} and {s.shape} operators")
    root = rho.sqrt()
    inner = root @ s @ root
    w, _ = eigh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
