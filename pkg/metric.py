"""
Induced metric on the fiber, its determinant, numerical volume
integration over the parameter box and closed-form volumes.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from common import (
    DimensionMismatch,
    InvalidArgument,
    NegativeDeterminant,
    UnsupportedDimension,
    log,
)
from hermitian import DensityOperator, check_probability_vector
from purification import Fiber
from unitaries import Group, UnitaryParameterization


DET_NEGATIVE_TOL = 1e-9
DET_IMAG_TOL = 1e-10
DET_FLOOR = 1e-300
MIN_BUDGET = 1000
QUADRATURE_MAX_PARAMS = 12
DEFAULT_QUADRATURE_ORDER = 48
DEFAULT_MC_BUDGET = 1_000_000
CHUNK_SIZE = 8192


class Method:
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"
    CLOSED_FORM = "closed-form"


class ClosedForm:
    SO3 = "SO3"
    SU2 = "SU2"
    SON = "SON"


# ==================== Models ====================

@dataclass(frozen=True)
class GramMetric:
    g: np.ndarray
    xi: np.ndarray

    @property
    def n(self) -> int:
        return int(self.g.shape[0])

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return float(np.max(np.abs(self.g - self.g.conj().T))) <= tol

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.g + self.g.conj().T))

    def det(self) -> float:
        return float(_real_determinants(self.g[None])[0])


class VolumeResult(BaseModel):
    method: str
    raw: float = Field(ge=0.0)
    normalized: float = Field(ge=0.0)
    estimator_error: float = Field(ge=0.0)
    normalized_error: float = Field(default=0.0, ge=0.0)
    group: str
    dim: int
    spectrum: List[float]
    evaluations: int = 0
    closed_form: Optional[float] = None
    proportionality: Optional[float] = None  # raw / closed_form


# ==================== Metric ====================

def _gram_batch(f: Fiber, xis) -> np.ndarray:
    """g[b, i, j] = <t_i(b) | t_j(b)>, conjugate-linear in the first slot"""
    t = f.tangents(xis)
    return np.einsum("ibk,jbk->bij", t.conj(), t)


def _real_determinants(g: np.ndarray) -> np.ndarray:
    det = np.linalg.det(g)
    scale = np.maximum(1.0, np.abs(det.real))
    if np.any(np.abs(det.imag) > DET_IMAG_TOL * scale):
        worst = float(np.max(np.abs(det.imag)))
        raise NegativeDeterminant(f"Metric determinant has imaginary residue {worst:.3e}")
    real = det.real
    if np.any(real < -DET_NEGATIVE_TOL):
        raise NegativeDeterminant(f"Metric determinant {float(np.min(real)):.3e} is negative")
    return np.where(real < DET_FLOOR, 0.0, real)


def densities(f: Fiber, xis) -> np.ndarray:
    """sqrt(det g) over a batch of angles"""
    return np.sqrt(_real_determinants(_gram_batch(f, xis)))


def gram_metric(f: Fiber, xi) -> GramMetric:
    xi = np.asarray(xi, dtype=float).reshape(-1)
    g = _gram_batch(f, xi[None, :])[0]
    return GramMetric(g=g, xi=xi)


def volume_density(f: Fiber, xi) -> float:
    return float(densities(f, np.asarray(xi, dtype=float).reshape(1, -1))[0])


# ==================== Integration ====================

def _map_chunks(work: Callable, items: Sequence, threads: int) -> list:
    """Evaluate chunks in order; results come back in chunk order regardless of threads"""
    if threads <= 1 or len(items) <= 1:
        return [work(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, items))


def quadrature_order(budget: int, n_params: int) -> int:
    return max(2, int(math.floor(budget ** (1.0 / n_params) + 1e-9)))


def _gauss_legendre_axes(p: UnitaryParameterization, order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for param in p.params:
        half = 0.5 * (param.hi - param.lo)
        nodes.append(param.lo + half * (t + 1.0))
        weights.append(half * w)
    return nodes, weights


def _quadrature(f: Fiber, order: int, threads: int) -> float:
    n = f.n_params
    nodes, weights = _gauss_legendre_axes(f.param, order)
    total = order ** n
    chunks = [(start, min(start + CHUNK_SIZE, total)) for start in range(0, total, CHUNK_SIZE)]

    def work(bounds):
        digits = np.unravel_index(np.arange(*bounds), (order,) * n)
        pts = np.stack([nodes[k][digits[k]] for k in range(n)], axis=1)
        w = np.prod(np.stack([weights[k][digits[k]] for k in range(n)], axis=1), axis=1)
        return float(np.sum(w * densities(f, pts)))

    return math.fsum(_map_chunks(work, chunks, threads))


def _monte_carlo(f: Fiber, budget: int, seed: int, threads: int) -> Tuple[float, float]:
    """Box-volume-scaled sample mean and its standard error"""
    p = f.param
    lo, span = p.lower, p.upper - p.lower
    n_chunks = (budget + CHUNK_SIZE - 1) // CHUNK_SIZE
    streams = np.random.SeedSequence(seed).spawn(n_chunks)

    def work(c):
        size = min(CHUNK_SIZE, budget - c * CHUNK_SIZE)
        rng = np.random.Generator(np.random.PCG64(streams[c]))
        vals = densities(f, lo + span * rng.random((size, p.n_params)))
        return float(np.sum(vals)), float(np.sum(vals * vals))

    parts = _map_chunks(work, list(range(n_chunks)), threads)
    mean = math.fsum(s for s, _ in parts) / budget
    second = math.fsum(q for _, q in parts) / budget
    variance = max(second - mean * mean, 0.0) * budget / max(budget - 1, 1)
    box = p.domain_volume()
    return box * mean, box * math.sqrt(variance / budget)


def _integrate(f: Fiber, method: str, budget: int, seed: int, threads: int) -> Tuple[float, float, int]:
    if method == Method.QUADRATURE:
        if f.n_params > QUADRATURE_MAX_PARAMS:
            raise UnsupportedDimension(
                f"Quadrature supports up to {QUADRATURE_MAX_PARAMS} parameters, "
                f"{f.param.label} has {f.n_params}; use monte-carlo")
        order = quadrature_order(budget, f.n_params)
        coarse_order = max(2, order // 2)
        value = _quadrature(f, order, threads)
        coarse = _quadrature(f, coarse_order, threads)
        return value, abs(value - coarse), order ** f.n_params + coarse_order ** f.n_params
    if method == Method.MONTE_CARLO:
        value, stderr = _monte_carlo(f, budget, seed, threads)
        return value, stderr, budget
    raise InvalidArgument(f"Unknown integration method: {method}")


def _parameterization(group: str, dim: int) -> UnitaryParameterization:
    if group == Group.SO:
        return UnitaryParameterization.so(dim)
    if group == Group.SU2:
        return UnitaryParameterization.su2()
    return UnitaryParameterization.u(dim)


@lru_cache(maxsize=64)
def _reference_volume(group: str, dim: int, method: str, budget: int, seed: int) -> Tuple[float, float]:
    """Raw volume of the maximally mixed state (threads do not change the value)"""
    ref = Fiber(DensityOperator.maximally_mixed(dim), _parameterization(group, dim))
    value, error, _ = _integrate(ref, method, budget, seed, threads=1)
    return value, error


def default_method(p: UnitaryParameterization) -> str:
    return Method.QUADRATURE if p.n_params <= 3 else Method.MONTE_CARLO


def default_budget(p: UnitaryParameterization, method: str) -> int:
    if method == Method.QUADRATURE:
        return DEFAULT_QUADRATURE_ORDER ** min(p.n_params, 3)
    return DEFAULT_MC_BUDGET


def integrate_volume(f: Fiber, method: Optional[str] = None, budget: Optional[int] = None,
                     seed: int = 0, threads: int = 1) -> VolumeResult:
    """
    Integrate sqrt(det g) over the parameter box.

    Quadrature uses a tensor Gauss-Legendre rule (order from the budget) and
    reports |Q(order) - Q(order/2)| as its error; Monte Carlo samples the box
    from per-chunk PCG64 streams so values are bit-exact per seed.
    """
    method = method or default_method(f.param)
    budget = budget if budget is not None else default_budget(f.param, method)
    if budget < MIN_BUDGET:
        raise InvalidArgument(f"Integration budget must be at least {MIN_BUDGET}, got {budget}")

    raw, error, evaluations = _integrate(f, method, budget, seed, threads)
    ref, ref_error = _reference_volume(f.param.group, f.dim, method, budget, seed)
    normalized = raw / ref if ref > 0.0 else 0.0
    normalized_error = (error + normalized * ref_error) / ref if ref > 0.0 else 0.0

    spectrum = [float(x) for x in f.rho.eigenvalues]
    form = closed_form_group(f.param)
    closed = closed_form_volume(form, spectrum) if form else None
    ratio = raw / closed if closed else None

    log(f"✓ Integrated {f.param.label} volume ({method}, {evaluations} evaluations): "
        f"raw={raw:.6g} normalized={normalized:.6g} ±{error:.2g}")
    return VolumeResult(
        method=method,
        raw=max(raw, 0.0),
        normalized=max(normalized, 0.0),
        estimator_error=error,
        normalized_error=normalized_error,
        group=f.param.label,
        dim=f.dim,
        spectrum=spectrum,
        evaluations=evaluations,
        closed_form=closed,
        proportionality=ratio,
    )


# ==================== Closed forms ====================

def closed_form_group(p: UnitaryParameterization) -> Optional[str]:
    if p.group == Group.SO:
        return ClosedForm.SO3 if p.dim == 3 else ClosedForm.SON
    if p.group == Group.SU2:
        return ClosedForm.SU2
    return None


def _expected_dim(group: str) -> Optional[int]:
    return {ClosedForm.SO3: 3, ClosedForm.SU2: 2}.get(group)


def closed_form_rows(group: str, lams: np.ndarray) -> np.ndarray:
    """Closed-form volume for each row of an (M, d) array of spectra (no validation)"""
    lams = np.asarray(lams, dtype=float)
    if group == ClosedForm.SO3:
        l1, l2, l3 = lams[:, 0], lams[:, 1], lams[:, 2]
        return np.sqrt(np.clip((l1 + l2) * (l1 + l3) * (l2 + l3), 0.0, None))
    if group == ClosedForm.SU2:
        l1 = lams[:, 0]
        return np.sqrt(np.clip(l1 * (1.0 - l1), 0.0, None))
    if group == ClosedForm.SON:
        i, j = np.triu_indices(lams.shape[1], k=1)
        pairs = lams[:, i] + lams[:, j]
        out = np.zeros(lams.shape[0])
        alive = np.all(pairs > 0.0, axis=1)
        out[alive] = np.exp(0.5 * np.sum(np.log(pairs[alive]), axis=1))
        return out
    raise InvalidArgument(f"Unknown closed-form group: {group}")


def closed_form_volume(group: str, lam: Sequence[float]) -> float:
    """SO3: sqrt(prod of pair sums); SU2: sqrt(l1 (1 - l1)); SON: prod_{i<j} sqrt(li + lj)"""
    p = check_probability_vector(lam)
    expected = _expected_dim(group)
    if expected is not None and p.size != expected:
        raise DimensionMismatch(f"{group} closed form needs {expected} eigenvalues, got {p.size}")
    if group == ClosedForm.SON and p.size < 2:
        raise DimensionMismatch("SON closed form needs at least 2 eigenvalues")
    return float(closed_form_rows(group, p[None, :])[0])


def normalized_closed_form_volume(group: str, lam: Sequence[float]) -> float:
    p = check_probability_vector(lam)
    uniform = np.full(p.size, 1.0 / p.size)
    return closed_form_volume(group, p) / closed_form_volume(group, uniform)


def so3_volume_forms(lam: Sequence[float]) -> Tuple[float, float]:
    """Pairwise-sum form and the (1 - l1)(1 - l2)(l1 + l2) form; equal on the simplex"""
    p = check_probability_vector(lam)
    if p.size != 3:
        raise DimensionMismatch(f"SO(3) volume needs 3 eigenvalues, got {p.size}")
    l1, l2, _ = p
    reduced = math.sqrt(max((1.0 - l1) * (1.0 - l2) * (l1 + l2), 0.0))
    return closed_form_volume(ClosedForm.SO3, p), reduced


def so3_metric_components(lam: Sequence[float], xi: Sequence[float]) -> np.ndarray:
    """
    Closed-form SO(3) metric for rho = diag(lam) in (phi12, phi13, phi23) order.
    """
    l1, l2, l3 = (float(x) for x in lam)
    _, g, b = (float(x) for x in xi)  # independent of phi12
    sg, cg, sb, cb = math.sin(g), math.cos(g), math.sin(b), math.cos(b)
    g_aa = l1 * (cg * cg + sb * sb * sg * sg) + l2 * cb * cb + l3 * (sg * sg + sb * sb * cg * cg)
    g_ag = (l1 + l3) * sb
    g_ab = (l1 - l3) * cb * cg * sg
    g_gg = l1 + l3
    g_bb = l1 * sg * sg + l2 + l3 * cg * cg
    return np.array([
        [g_aa, g_ag, g_ab],
        [g_ag, g_gg, 0.0],
        [g_ab, 0.0, g_bb],
    ])


def su2_metric_components(lam: Sequence[float], xi: Sequence[float]) -> np.ndarray:
    """Closed-form SU(2) metric for rho = diag(lam) in (phi, psi, chi) order"""
    l1, l2 = (float(x) for x in lam)
    phi = float(xi[0])
    c, s = math.cos(phi), math.sin(phi)
    total, diff = l1 + l2, l1 - l2
    off = -1j * diff * c * s
    return np.array([
        [total, off, off],
        [np.conj(off), total * c * c, 0.0],
        [np.conj(off), 0.0, total * s * s],
    ], dtype=np.complex128)
