"""
Self-check suites run by `app.py validate`: each compares an implementation
path against an independent oracle and reports the worst deviation.
"""
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from common import InvalidArgument, log, warn
from hermitian import DensityOperator, fidelity, partial_trace_R
from metric import (
    ClosedForm,
    Method,
    closed_form_volume,
    gram_metric,
    integrate_volume,
    normalized_closed_form_volume,
    so3_metric_components,
    su2_metric_components,
)
from purification import Fiber
from unitaries import (
    UnitaryParameterization,
    random_angles,
    unitary_batch,
    unitary_with_derivatives,
)


class Suite:
    PARTIAL_TRACE = "partial-trace"
    DERIVATIVES = "derivatives"
    METRIC = "metric"
    VOLUME = "volume"
    SO4_PROPORTIONALITY = "so4-proportionality"

    ALL = (PARTIAL_TRACE, DERIVATIVES, METRIC, VOLUME, SO4_PROPORTIONALITY)


TOLERANCES = {
    Suite.PARTIAL_TRACE: 1e-10,
    Suite.DERIVATIVES: 5e-9,
    Suite.METRIC: 1e-9,
    Suite.VOLUME: 1e-3,
    Suite.SO4_PROPORTIONALITY: 0.02,
}

DEFAULT_SAMPLES = {
    Suite.PARTIAL_TRACE: 100,
    Suite.DERIVATIVES: 1000,
    Suite.METRIC: 100,
    Suite.VOLUME: 50,
    Suite.SO4_PROPORTIONALITY: 10,
}

FD_STEP = 1e-5
VOLUME_BUDGET = 32 ** 3
SO4_BUDGET = 1_000_000

DEFAULT_BUDGETS = {
    Suite.VOLUME: VOLUME_BUDGET,
    Suite.SO4_PROPORTIONALITY: SO4_BUDGET,
}


class SuiteResult(BaseModel):
    name: str
    passed: bool
    max_error: float
    tolerance: float
    samples: int
    budget: Optional[int] = None


def _spectrum(rng: np.random.Generator, d: int) -> np.ndarray:
    return rng.dirichlet(2.0 * np.ones(d))


def _fiber(rng: np.random.Generator, p: UnitaryParameterization) -> Fiber:
    return Fiber(DensityOperator.from_spectrum(_spectrum(rng, p.dim)), p)


# ==================== Suites ====================

def check_partial_trace(rng: np.random.Generator, samples: int) -> float:
    """Tr_R of random fiber points against rho, plus marginal fidelity against 1"""
    worst = 0.0
    params = [UnitaryParameterization.so(3), UnitaryParameterization.su2(), UnitaryParameterization.u(3)]
    for s in range(samples):
        p = params[s % len(params)]
        f = _fiber(rng, p)
        points = f.points(random_angles(p, rng, 2))
        marginals = [partial_trace_R(point, f.dim, f.dim) for point in points]
        worst = max(worst, *(float(np.max(np.abs(m - f.rho.matrix))) for m in marginals))
        worst = max(worst, abs(fidelity(f.rho, marginals[1]) - 1.0))
    return worst


def check_derivatives(rng: np.random.Generator, samples: int) -> float:
    """Analytic dU against central differences on every parameter"""
    params = [UnitaryParameterization.so(n) for n in range(2, 7)]
    params += [UnitaryParameterization.su2()] + [UnitaryParameterization.u(n) for n in range(2, 5)]
    worst = 0.0
    for p in params:
        xis = random_angles(p, rng, samples)
        _, du = unitary_with_derivatives(p, xis)
        for k in range(p.n_params):
            plus, minus = xis.copy(), xis.copy()
            plus[:, k] += FD_STEP
            minus[:, k] -= FD_STEP
            fd = (unitary_batch(p, plus) - unitary_batch(p, minus)) / (2.0 * FD_STEP)
            worst = max(worst, float(np.max(np.abs(du[k] - fd))))
    return worst


def check_metric(rng: np.random.Generator, samples: int) -> float:
    """Gram matrices against the closed-form SO(3) and SU(2) components"""
    so3, su2 = UnitaryParameterization.so(3), UnitaryParameterization.su2()
    worst = 0.0
    for _ in range(samples):
        for p, oracle in ((so3, so3_metric_components), (su2, su2_metric_components)):
            lam = _spectrum(rng, p.dim)
            xi = random_angles(p, rng, 1)[0]
            g = gram_metric(Fiber(DensityOperator.from_spectrum(lam), p), xi).g
            worst = max(worst, float(np.max(np.abs(g - oracle(lam, xi)))))
    return worst


def check_volume(rng: np.random.Generator, samples: int, budget: int = VOLUME_BUDGET) -> float:
    """Normalized quadrature volumes against the normalized closed forms"""
    worst = 0.0
    for p, form in ((UnitaryParameterization.so(3), ClosedForm.SO3), (UnitaryParameterization.su2(), ClosedForm.SU2)):
        for _ in range(samples):
            lam = _spectrum(rng, p.dim)
            result = integrate_volume(Fiber(DensityOperator.from_spectrum(lam), p),
                                      Method.QUADRATURE, budget)
            worst = max(worst, abs(result.normalized - normalized_closed_form_volume(form, lam)))
    return worst


def check_so4_proportionality(rng: np.random.Generator, samples: int, budget: int = SO4_BUDGET) -> float:
    """Spread of raw Monte Carlo volume / closed form across SO(4) spectra"""
    p = UnitaryParameterization.so(4)
    ratios = []
    for _ in range(max(samples, 2)):
        lam = _spectrum(rng, 4)
        result = integrate_volume(Fiber(DensityOperator.from_spectrum(lam), p),
                                  Method.MONTE_CARLO, budget)
        ratios.append(result.raw / closed_form_volume(ClosedForm.SON, lam))
    ratios = np.array(ratios)
    return float((np.max(ratios) - np.min(ratios)) / np.mean(ratios))


SUITES: Dict[str, Callable[..., float]] = {
    Suite.PARTIAL_TRACE: check_partial_trace,
    Suite.DERIVATIVES: check_derivatives,
    Suite.METRIC: check_metric,
    Suite.VOLUME: check_volume,
    Suite.SO4_PROPORTIONALITY: check_so4_proportionality,
}


def run_suite(name: str, seed: int = 0, samples: Optional[int] = None,
              budget: Optional[int] = None) -> SuiteResult:
    """budget only applies to the integrating suites (volume, so4-proportionality)"""
    if name not in SUITES:
        raise InvalidArgument(f"Unknown validation suite: {name}")
    samples = samples if samples is not None else DEFAULT_SAMPLES[name]
    if samples < 1:
        raise InvalidArgument(f"Suite {name} needs at least one sample, got {samples}")
    rng = np.random.default_rng(seed)
    if name in DEFAULT_BUDGETS:
        budget = budget if budget is not None else DEFAULT_BUDGETS[name]
        error = SUITES[name](rng, samples, budget)
    else:
        budget = None
        error = SUITES[name](rng, samples)
    tolerance = TOLERANCES[name]
    passed = bool(np.isfinite(error) and error <= tolerance)
    result = SuiteResult(name=name, passed=passed, max_error=error, tolerance=tolerance, samples=samples,
                         budget=budget)
    if passed:
        log(f"✓ {name}: max error {error:.3e} (tolerance {tolerance:.0e})")
    else:
        warn(f"{name} failed: max error {error:.3e} exceeds {tolerance:.0e}")
    return result


def run_suites(names: Sequence[str] = Suite.ALL, seed: int = 0, samples: Optional[int] = None,
               budget: Optional[int] = None) -> List[SuiteResult]:
    return [run_suite(name, seed, samples, budget) for name in names]
