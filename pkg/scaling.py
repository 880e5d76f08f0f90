"""
SO(N) scaling analysis on the one-parameter family of spectra
(lambda1, mu, ..., mu) with mu = (1 - lambda1) / (N - 1).
"""
import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.optimize import bisect

from common import InvalidArgument, NoRoot, OutOfDomain, OutputFormat, csv_text, log, warn, write_table
from entropy import normalized_von_neumann_rows


TARGET_VOLUME = 1e-4
FIGURE_DIMENSIONS = (3, 5, 7, 11, 30)
TAIL_POINTS = 10_000
MONOTONE_GRID = 2001
QUADRATURE_TOL = 1e-12
GL_ORDER = 16
MAX_INTERVALS = 4000
DOMAIN_SLACK = 1e-15


class ScalingPoint(BaseModel):
    N: int
    lambda1_star: float
    integral_ratio: float
    mean_svn_norm_tail: float
    mean_svn_norm_tail_weighted: float


# ==================== Normalized volume family ====================

def _log_v_norm(n: int, x: np.ndarray) -> np.ndarray:
    """log V_norm on [1/N, 1]; -inf at the pure endpoint for N >= 3"""
    mu = (1.0 - x) / (n - 1)
    out = 0.5 * (n - 1) * np.log(x + mu) - 0.25 * n * (n - 1) * math.log(2.0 / n)
    if n >= 3:
        with np.errstate(divide="ignore"):
            out = out + 0.25 * (n - 1) * (n - 2) * np.log(2.0 * mu)
    return out


def v_norm_array(n: int, x) -> np.ndarray:
    """V_norm for an array of lambda1 values already inside [1/N, 1]"""
    x = np.clip(np.asarray(x, dtype=float), 1.0 / n, 1.0)
    return np.minimum(np.exp(_log_v_norm(n, x)), 1.0)


def _check_dimension(n: int, minimum: int = 2):
    if n < minimum:
        raise OutOfDomain(f"Dimension N must be at least {minimum}, got {n}")


def v_norm_family(n: int, lambda1: float) -> float:
    """
    Normalized SO(N) volume of (lambda1, mu, ..., mu):
    (l1 + mu)^((N-1)/2) (2 mu)^((N-1)(N-2)/4) / (2/N)^(N(N-1)/4)
    """
    _check_dimension(n)
    if lambda1 < 1.0 / n - DOMAIN_SLACK or lambda1 > 1.0 + DOMAIN_SLACK:
        raise OutOfDomain(f"lambda1 = {lambda1!r} is outside [1/{n}, 1]")
    return float(v_norm_array(n, lambda1))


def family_spectrum(n: int, lambda1: float) -> np.ndarray:
    mu = (1.0 - lambda1) / (n - 1)
    return np.concatenate([[lambda1], np.full(n - 1, mu)])


# ==================== Root and integrals ====================

def find_lambda_star(n: int, target: float = TARGET_VOLUME) -> float:
    """lambda1 on the decreasing branch where V_norm falls to target"""
    _check_dimension(n, 3)
    grid = np.linspace(1.0 / n, 1.0, MONOTONE_GRID)
    values = v_norm_array(n, grid)
    peak = int(np.argmax(values))
    if np.any(np.diff(values[peak:]) > 1e-15):
        raise NoRoot(f"V_norm for N={n} is not monotone right of its maximum")
    if values[peak] <= target or values[-1] > target:
        raise NoRoot(f"V_norm for N={n} never crosses {target!r}")

    root = bisect(lambda x: float(v_norm_array(n, x)) - target, grid[peak], 1.0,
                  xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(root)


def adaptive_gauss_legendre(func: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                            tol: float = QUADRATURE_TOL, order: int = GL_ORDER) -> float:
    """
    Globally adaptive Gauss-Legendre: keep splitting the interval with the
    largest |two halves - whole| until the summed estimate drops below tol.
    """
    if b <= a:
        return 0.0
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def rule(lo, hi):
        half = 0.5 * (hi - lo)
        return half * float(np.dot(weights, func(lo + half * (nodes + 1.0))))

    def estimate(lo, hi):
        mid = 0.5 * (lo + hi)
        halves = rule(lo, mid) + rule(mid, hi)
        return halves, abs(halves - rule(lo, hi))

    value, error = estimate(a, b)
    heap = [(-error, a, b, value)]
    total_error = error
    while total_error > tol and len(heap) < MAX_INTERVALS:
        neg_error, lo, hi, value = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            heapq.heappush(heap, (neg_error, lo, hi, value))
            break
        total_error += neg_error
        for left, right in ((lo, mid), (mid, hi)):
            part, part_error = estimate(left, right)
            heapq.heappush(heap, (-part_error, left, right, part))
            total_error += part_error
    if total_error > tol:
        warn(f"Adaptive quadrature on [{a}, {b}] stopped at error {total_error:.2e}")
    return math.fsum(item[3] for item in heap)


def integral_ratio(n: int, lambda1_star: float) -> float:
    """Share of the family's volume integral lying in [1/N, lambda1_star]"""
    _check_dimension(n)
    lo = 1.0 / n
    if lambda1_star < lo - DOMAIN_SLACK or lambda1_star > 1.0 + DOMAIN_SLACK:
        raise OutOfDomain(f"lambda1_star = {lambda1_star!r} is outside [1/{n}, 1]")
    if lambda1_star >= 1.0:
        return 1.0
    func = lambda x: v_norm_array(n, x)
    whole = adaptive_gauss_legendre(func, lo, 1.0)
    return adaptive_gauss_legendre(func, lo, lambda1_star) / whole


def mean_tail_entropy(n: int, lambda1_star: float, weighted: bool = False, points: int = TAIL_POINTS) -> float:
    """
    Mean normalized von Neumann entropy over a uniform lambda1 grid on
    [1/N, lambda1_star]; weighted=True weights each point by V_norm.
    """
    _check_dimension(n)
    lo = 1.0 / n
    if lambda1_star <= lo:
        return 1.0
    x = np.linspace(lo, lambda1_star, points)
    mu = (1.0 - x) / (n - 1)
    spectra = np.column_stack([x] + [mu] * (n - 1))
    spectra = spectra / np.sum(spectra, axis=1, keepdims=True)
    s = normalized_von_neumann_rows(spectra)
    if weighted:
        w = v_norm_array(n, x)
        return float(np.sum(w * s) / np.sum(w))
    return float(np.mean(s))


# ==================== Sweeps ====================

def scaling_point(n: int, tail_points: int = TAIL_POINTS) -> ScalingPoint:
    star = find_lambda_star(n)
    point = ScalingPoint(
        N=n,
        lambda1_star=star,
        integral_ratio=integral_ratio(n, star),
        mean_svn_norm_tail=mean_tail_entropy(n, star, points=tail_points),
        mean_svn_norm_tail_weighted=mean_tail_entropy(n, star, weighted=True, points=tail_points),
    )
    log(f"✓ N={n}: lambda1*={star:.12g} ratio={point.integral_ratio:.8f} "
        f"<S>={point.mean_svn_norm_tail:.6f} <S>_V={point.mean_svn_norm_tail_weighted:.6f}")
    return point


def sweep(ns: Iterable[int] = FIGURE_DIMENSIONS, threads: int = 1,
          tail_points: int = TAIL_POINTS) -> List[ScalingPoint]:
    ns = list(ns)
    if threads <= 1:
        return [scaling_point(n, tail_points) for n in ns]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda n: scaling_point(n, tail_points), ns))


def v_norm_curve(n: int, samples: int = 200) -> Tuple[np.ndarray, np.ndarray]:
    _check_dimension(n)
    if samples < 2:
        raise InvalidArgument(f"Curve needs at least 2 samples, got {samples}")
    x = np.linspace(1.0 / n, 1.0, samples)
    return x, v_norm_array(n, x)


# ==================== Tables ====================

POINT_HEADER = ["N", "lambda1_star", "integral_ratio", "mean_svn_norm", "mean_svn_norm_weighted"]
CURVE_HEADER = ["N", "lambda1", "v_norm"]


def point_table(points: List[ScalingPoint]) -> List[list]:
    return [[p.N, p.lambda1_star, p.integral_ratio, p.mean_svn_norm_tail, p.mean_svn_norm_tail_weighted]
            for p in points]


def curve_table(ns: Iterable[int], samples: int = 200) -> List[list]:
    rows = []
    for n in ns:
        x, v = v_norm_curve(n, samples)
        rows.extend([n, float(xi), float(vi)] for xi, vi in zip(x, v))
    return rows


def points_csv(points: List[ScalingPoint]) -> str:
    return csv_text(POINT_HEADER, point_table(points))


def curves_csv(ns: Iterable[int], samples: int = 200) -> str:
    return csv_text(CURVE_HEADER, curve_table(ns, samples))


def write_points(points: List[ScalingPoint], path, fmt: str = OutputFormat.CSV):
    return write_table(path, POINT_HEADER, point_table(points), fmt)


def write_curves(ns: Iterable[int], path, samples: int = 200, fmt: str = OutputFormat.CSV):
    return write_table(path, CURVE_HEADER, curve_table(ns, samples), fmt)
