"""
Factored unitaries: plane rotations E^(i,j), the ordered products
E_1 ... E_{N-1}, and the SO(N) / SU(2) / U(N) parameterizations built on
them, with analytic parameter derivatives.

Factor order: E_1 = E^(1,2), E_m = E^(m,m+1) E^(m-1,m+1) ... E^(1,m+1),
U = e^{i alpha} E_1 E_2 ... E_{N-1}.
Parameter order: every phi ascending by (j, i), then the psi's in the same
order, then the chi's (E^(1,m) factors only), then alpha.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from common import BadParameterCount, BadParameterIndex, InvalidArgument, warn


TWO_PI = 2.0 * np.pi
FD_STEP = 1e-5


class Group:
    SO = "SO"
    SU2 = "SU2"
    U = "U"


class AngleKind:
    PHI = "phi"
    PSI = "psi"
    CHI = "chi"
    ALPHA = "alpha"


# ==================== Plane rotations ====================

def plane_rotation(n: int, i: int, j: int, phi, psi=0.0, chi=0.0) -> np.ndarray:
    """
    E^(i,j)(phi, psi, chi) for 1-based i < j; angles may be arrays of a
    common batch shape, giving matrices of shape batch + (n, n).
    """
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    batch = np.broadcast_shapes(phi.shape, psi.shape, chi.shape)
    a, b = i - 1, j - 1

    e = np.zeros(batch + (n, n), dtype=np.complex128)
    e[..., np.arange(n), np.arange(n)] = 1.0
    cos, sin = np.cos(phi), np.sin(phi)
    e[..., a, a] = np.exp(1j * psi) * cos
    e[..., a, b] = np.exp(1j * chi) * sin
    e[..., b, a] = -np.exp(-1j * chi) * sin
    e[..., b, b] = np.exp(-1j * psi) * cos
    return e


def plane_rotation_derivative(n: int, i: int, j: int, phi, psi, chi, kind: str) -> np.ndarray:
    """d E^(i,j) / d(kind); zero outside the (i, j) block"""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    batch = np.broadcast_shapes(phi.shape, psi.shape, chi.shape)
    a, b = i - 1, j - 1
    cos, sin = np.cos(phi), np.sin(phi)
    ep, ec = np.exp(1j * psi), np.exp(1j * chi)

    d = np.zeros(batch + (n, n), dtype=np.complex128)
    if kind == AngleKind.PHI:
        d[..., a, a] = -ep * sin
        d[..., a, b] = ec * cos
        d[..., b, a] = -np.conj(ec) * cos
        d[..., b, b] = -np.conj(ep) * sin
    elif kind == AngleKind.PSI:
        d[..., a, a] = 1j * ep * cos
        d[..., b, b] = -1j * np.conj(ep) * cos
    elif kind == AngleKind.CHI:
        d[..., a, b] = 1j * ec * sin
        d[..., b, a] = 1j * np.conj(ec) * sin
    else:
        raise InvalidArgument(f"Unknown rotation angle kind: {kind}")
    return d


@dataclass(frozen=True)
class PlaneRotation:
    i: int
    j: int
    phi: float
    psi: float = 0.0
    chi: float = 0.0

    def __post_init__(self):
        if not 1 <= self.i < self.j:
            raise InvalidArgument(f"Plane ({self.i}, {self.j}) needs 1 <= i < j")

    def matrix(self, n: int) -> np.ndarray:
        if self.j > n:
            raise InvalidArgument(f"Plane ({self.i}, {self.j}) does not fit in dimension {n}")
        return plane_rotation(n, self.i, self.j, self.phi, self.psi, self.chi)


# ==================== Parameterizations ====================

@dataclass(frozen=True)
class AngleParam:
    name: str
    kind: str
    plane: Tuple[int, int]
    lo: float
    hi: float


@dataclass(frozen=True)
class FactorSlots:
    """Plane of one factor and the parameter indices feeding its angles"""
    plane: Tuple[int, int]
    phi: int
    psi: Optional[int] = None
    chi: Optional[int] = None


def factor_planes(n: int) -> List[Tuple[int, int]]:
    planes = []
    for m in range(1, n):
        for i in range(m, 0, -1):
            planes.append((i, m + 1))
    return planes


def _angle_name(kind: str, i: int, j: int, n: int) -> str:
    return f"{kind}{i}{j}" if n < 10 else f"{kind}{i}_{j}"


@dataclass(frozen=True)
class UnitaryParameterization:
    group: str
    dim: int
    params: Tuple[AngleParam, ...]
    factors: Tuple[FactorSlots, ...]
    alpha_index: Optional[int] = None
    _index: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._index.update({p.name: k for k, p in enumerate(self.params)})

    @classmethod
    def so(cls, n: int) -> "UnitaryParameterization":
        if n < 2:
            raise InvalidArgument(f"SO(N) needs N >= 2, got {n}")
        planes = sorted(factor_planes(n), key=lambda ij: (ij[1], ij[0]))
        params = []
        for i, j in planes:
            hi = np.pi if (j == i + 1 and i >= 2) else TWO_PI
            params.append(AngleParam(_angle_name(AngleKind.PHI, i, j, n), AngleKind.PHI, (i, j), 0.0, hi))
        index = {p.plane: k for k, p in enumerate(params)}
        factors = tuple(FactorSlots(plane, index[plane]) for plane in factor_planes(n))
        return cls(Group.SO, n, tuple(params), factors)

    @classmethod
    def su2(cls) -> "UnitaryParameterization":
        params = (
            AngleParam(AngleKind.PHI, AngleKind.PHI, (1, 2), 0.0, np.pi / 2),
            AngleParam(AngleKind.PSI, AngleKind.PSI, (1, 2), 0.0, TWO_PI),
            AngleParam(AngleKind.CHI, AngleKind.CHI, (1, 2), 0.0, TWO_PI),
        )
        return cls(Group.SU2, 2, params, (FactorSlots((1, 2), 0, 1, 2),))

    @classmethod
    def u(cls, n: int) -> "UnitaryParameterization":
        if n < 2:
            raise InvalidArgument(f"U(N) needs N >= 2, got {n}")
        planes = sorted(factor_planes(n), key=lambda ij: (ij[1], ij[0]))
        params = [AngleParam(_angle_name(AngleKind.PHI, i, j, n), AngleKind.PHI, (i, j), 0.0, np.pi / 2)
                  for i, j in planes]
        params += [AngleParam(_angle_name(AngleKind.PSI, i, j, n), AngleKind.PSI, (i, j), 0.0, TWO_PI)
                   for i, j in planes]
        params += [AngleParam(_angle_name(AngleKind.CHI, i, j, n), AngleKind.CHI, (i, j), 0.0, TWO_PI)
                   for i, j in planes if i == 1]
        params.append(AngleParam(AngleKind.ALPHA, AngleKind.ALPHA, (0, 0), 0.0, TWO_PI))

        index = {(p.kind, p.plane): k for k, p in enumerate(params)}
        factors = tuple(
            FactorSlots(plane, index[(AngleKind.PHI, plane)], index[(AngleKind.PSI, plane)],
                        index.get((AngleKind.CHI, plane)))
            for plane in factor_planes(n)
        )
        return cls(Group.U, n, tuple(params), factors, alpha_index=len(params) - 1)

    @property
    def n_params(self) -> int:
        return len(self.params)

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.params]

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lo for p in self.params])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.hi for p in self.params])

    def index_of(self, name: str) -> int:
        if name not in self._index:
            raise BadParameterIndex(f"No parameter named {name!r} in {self.label}")
        return self._index[name]

    def domain_volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def out_of_domain(self, xi: Sequence[float]) -> List[str]:
        xi = np.asarray(xi, dtype=float)
        return [p.name for p, x in zip(self.params, xi) if x < p.lo or x > p.hi]

    @property
    def label(self) -> str:
        return "SU(2)" if self.group == Group.SU2 else f"{self.group}({self.dim})"


# ==================== Unitaries ====================

def _check_xi(p: UnitaryParameterization, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != p.n_params:
        raise BadParameterCount(f"{p.label} takes {p.n_params} angles, got {xi.size}")
    return xi


def _check_batch(p: UnitaryParameterization, xis) -> np.ndarray:
    xis = np.asarray(xis, dtype=float)
    if xis.ndim == 1:
        xis = xis.reshape(1, -1)
    if xis.ndim != 2 or xis.shape[1] != p.n_params:
        raise BadParameterCount(f"{p.label} takes {p.n_params} angles per point, got shape {xis.shape}")
    return xis


def _angles(slots: FactorSlots, xis: np.ndarray):
    zero = np.zeros(xis.shape[0])
    phi = xis[:, slots.phi]
    psi = xis[:, slots.psi] if slots.psi is not None else zero
    chi = xis[:, slots.chi] if slots.chi is not None else zero
    return phi, psi, chi


def _factor_matrices(p: UnitaryParameterization, xis: np.ndarray) -> List[np.ndarray]:
    return [plane_rotation(p.dim, *slots.plane, *_angles(slots, xis)) for slots in p.factors]


def _global_phase(p: UnitaryParameterization, xis: np.ndarray) -> Optional[np.ndarray]:
    if p.alpha_index is None:
        return None
    return np.exp(1j * xis[:, p.alpha_index])[:, None, None]


def unitary_batch(p: UnitaryParameterization, xis) -> np.ndarray:
    """U(xi) for every row of xis, shape (B, N, N)"""
    xis = _check_batch(p, xis)
    u = np.broadcast_to(np.eye(p.dim, dtype=np.complex128), (xis.shape[0], p.dim, p.dim))
    for factor in _factor_matrices(p, xis):
        u = u @ factor
    phase = _global_phase(p, xis)
    return u * phase if phase is not None else np.array(u)


def unitary_with_derivatives(p: UnitaryParameterization, xis) -> Tuple[np.ndarray, np.ndarray]:
    """
    U and every dU/dxi_k over a batch of points.

    Returns (U, dU) with shapes (B, N, N) and (n_params, B, N, N); the
    derivative of the factor holding xi_k is sandwiched between the
    untouched prefix and suffix products.
    """
    xis = _check_batch(p, xis)
    batch = xis.shape[0]
    eye = np.broadcast_to(np.eye(p.dim, dtype=np.complex128), (batch, p.dim, p.dim))
    factors = _factor_matrices(p, xis)

    prefix = [eye]
    for factor in factors:
        prefix.append(prefix[-1] @ factor)
    suffix = [eye]
    for factor in reversed(factors):
        suffix.append(factor @ suffix[-1])
    suffix.reverse()

    phase = _global_phase(p, xis)
    u = prefix[-1] * phase if phase is not None else np.array(prefix[-1])
    du = np.zeros((p.n_params, batch, p.dim, p.dim), dtype=np.complex128)

    for k, slots in enumerate(p.factors):
        phi, psi, chi = _angles(slots, xis)
        for kind, idx in ((AngleKind.PHI, slots.phi), (AngleKind.PSI, slots.psi), (AngleKind.CHI, slots.chi)):
            if idx is None:
                continue
            d_factor = plane_rotation_derivative(p.dim, *slots.plane, phi, psi, chi, kind)
            term = prefix[k] @ d_factor @ suffix[k + 1]
            du[idx] = term * phase if phase is not None else term

    if p.alpha_index is not None:
        du[p.alpha_index] = 1j * u
    return u, du


def build_unitary(p: UnitaryParameterization, xi) -> np.ndarray:
    xi = _check_xi(p, xi)
    outside = p.out_of_domain(xi)
    if outside:
        warn(f"Angles outside their {p.label} domain: {', '.join(outside)}")
    return unitary_batch(p, xi[None, :])[0]


def unitary_derivative(p: UnitaryParameterization, xi, k: int,
                       finite_difference: bool = False, step: float = FD_STEP) -> np.ndarray:
    """dU/dxi_k, analytic unless finite_difference is set (central difference)"""
    xi = _check_xi(p, xi)
    if not 0 <= k < p.n_params:
        raise BadParameterIndex(f"{p.label} has parameters 0..{p.n_params - 1}, got index {k}")
    if finite_difference:
        shifted = np.array([xi, xi])
        shifted[0, k] += step
        shifted[1, k] -= step
        u = unitary_batch(p, shifted)
        return (u[0] - u[1]) / (2.0 * step)
    _, du = unitary_with_derivatives(p, xi[None, :])
    return du[k, 0]


def random_angles(p: UnitaryParameterization, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform points inside the parameter box, shape (count, n_params)"""
    return p.lower + (p.upper - p.lower) * rng.random((count, p.n_params))
