"""
Purifications of a density operator: the unnormalized Bell state, the
canonical purification, fiber points (U_R(xi) ⊗ sqrt(rho)) |Gamma> and
their tangent vectors.
"""
from typing import List, Optional

import numpy as np

from common import DimensionMismatch
from hermitian import DensityOperator, StateVector, kron
from unitaries import UnitaryParameterization, build_unitary, unitary_batch, unitary_with_derivatives


def bell_state(rho: DensityOperator) -> StateVector:
    """sum_i |lambda_i> ⊗ |lambda_i>, squared norm d"""
    v = rho.eigenvectors
    return StateVector((v @ v.T).reshape(-1))


def canonical_purification(rho: DensityOperator) -> StateVector:
    """(1 ⊗ sqrt(rho)) |Gamma>"""
    identity = np.eye(rho.dim, dtype=np.complex128)
    return StateVector(kron(identity, rho.sqrt()) @ bell_state(rho).amplitudes)


class Fiber:
    """All purifications of rho reachable by reservoir-side unitaries of one parameterization"""

    def __init__(self, rho: DensityOperator, param: UnitaryParameterization,
                 basis_rotation: Optional[np.ndarray] = None):
        if basis_rotation is not None:
            rho = rho.rotated(basis_rotation)
        if param.dim != rho.dim:
            raise DimensionMismatch(f"{param.label} acts on dimension {param.dim}, rho has dimension {rho.dim}")
        self.rho = rho
        self.param = param
        self.bell = bell_state(rho)
        self.sqrt_rho = rho.sqrt()
        # Amplitude matrix of the canonical purification: a fiber point is U @ canonical
        canonical = self.bell.as_matrix(rho.dim, rho.dim) @ self.sqrt_rho.T
        canonical.setflags(write=False)
        self.canonical = canonical

    @property
    def dim(self) -> int:
        return self.rho.dim

    @property
    def n_params(self) -> int:
        return self.param.n_params

    def points(self, xis) -> np.ndarray:
        """Fiber points for a batch of angles, shape (B, d*d)"""
        u = unitary_batch(self.param, xis)
        return (u @ self.canonical).reshape(u.shape[0], -1)

    def tangents(self, xis) -> np.ndarray:
        """Tangent vectors for a batch of angles, shape (n_params, B, d*d)"""
        _, du = unitary_with_derivatives(self.param, xis)
        t = du @ self.canonical
        return t.reshape(t.shape[0], t.shape[1], -1)


def fiber_point(f: Fiber, xi) -> StateVector:
    u = build_unitary(f.param, xi)
    return StateVector(kron(u, f.sqrt_rho) @ f.bell.amplitudes)


def tangent_vectors(f: Fiber, xi) -> List[StateVector]:
    """k-th entry is (dU/dxi_k ⊗ sqrt(rho)) |Gamma>"""
    t = f.tangents(np.asarray(xi, dtype=float).reshape(1, -1))
    return [StateVector(t[k, 0]) for k in range(t.shape[0])]
