"""
Von Neumann and linear entropies (bits for the former), their normalized
forms and the negentropy gain of learning which purification is realized.
"""
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel

from common import DimensionMismatch, InvalidArgument, NotAProbabilityVector, OutOfRangeEntropy
from hermitian import PROBABILITY_SUM_TOL, check_probability_vector
from metric import normalized_closed_form_volume


ZERO_EIGENVALUE = 1e-15
ENTROPY_SLACK = 1e-12


class EntropyReport(BaseModel):
    dim: int
    s_vn: float
    s_lin: float
    s_vn_norm: float
    s_lin_norm: float
    v_norm: Optional[float] = None
    delta_I: Optional[float] = None


def _von_neumann_bits(p: np.ndarray) -> np.ndarray:
    """-sum p log2 p along the last axis, eigenvalues below 1e-15 contribute 0"""
    tiny = p < ZERO_EIGENVALUE
    terms = np.where(tiny, 0.0, -p * np.log2(np.where(tiny, 1.0, p)))
    return np.sum(terms, axis=-1)


def check_probability_rows(lams) -> np.ndarray:
    rows = np.asarray(lams, dtype=float)
    if rows.ndim != 2 or rows.shape[1] == 0:
        raise NotAProbabilityVector(f"Expected an (M, d) array of spectra, got shape {rows.shape}")
    if np.any(rows < -1e-12) or np.any(np.abs(np.sum(rows, axis=1) - 1.0) > PROBABILITY_SUM_TOL):
        raise NotAProbabilityVector("At least one row is not a probability vector")
    return np.clip(rows, 0.0, None)


def _require_mixed_dim(d: int):
    if d < 2:
        raise InvalidArgument("Normalized entropies need dimension >= 2")


def von_neumann(lam: Sequence[float]) -> float:
    return float(_von_neumann_bits(check_probability_vector(lam)))


def linear_entropy(lam: Sequence[float]) -> float:
    p = check_probability_vector(lam)
    return float(1.0 - np.sum(p * p))


def normalized_von_neumann(lam: Sequence[float]) -> float:
    p = check_probability_vector(lam)
    _require_mixed_dim(p.size)
    return float(min(max(_von_neumann_bits(p) / math.log2(p.size), 0.0), 1.0))


def normalized_linear_entropy(lam: Sequence[float]) -> float:
    p = check_probability_vector(lam)
    _require_mixed_dim(p.size)
    d = p.size
    return float(min(max((1.0 - np.sum(p * p)) * d / (d - 1), 0.0), 1.0))


def normalized_von_neumann_rows(lams) -> np.ndarray:
    rows = check_probability_rows(lams)
    _require_mixed_dim(rows.shape[1])
    return np.clip(_von_neumann_bits(rows) / math.log2(rows.shape[1]), 0.0, 1.0)


def normalized_linear_entropy_rows(lams) -> np.ndarray:
    rows = check_probability_rows(lams)
    d = rows.shape[1]
    _require_mixed_dim(d)
    return np.clip((1.0 - np.sum(rows * rows, axis=1)) * d / (d - 1), 0.0, 1.0)


def delta_information(d_A: int, d_RA: int, s_vn: float) -> float:
    """log2 d_RA - (log2 d_A - S): bits gained on learning the realized purification"""
    if d_A < 1 or d_RA < d_A:
        raise DimensionMismatch(f"Doubled space of dimension {d_RA} cannot purify dimension {d_A}")
    upper = math.log2(d_A)
    if s_vn < -ENTROPY_SLACK or s_vn > upper + ENTROPY_SLACK:
        raise OutOfRangeEntropy(f"Entropy {s_vn!r} bits is outside [0, {upper!r}] for dimension {d_A}")
    return math.log2(d_RA) - upper + s_vn


def entropy_report(lam: Sequence[float], volume_group: Optional[str] = None) -> EntropyReport:
    p = check_probability_vector(lam)
    d = p.size
    s_vn = von_neumann(p)
    return EntropyReport(
        dim=d,
        s_vn=s_vn,
        s_lin=linear_entropy(p),
        s_vn_norm=normalized_von_neumann(p) if d > 1 else 0.0,
        s_lin_norm=normalized_linear_entropy(p) if d > 1 else 0.0,
        v_norm=normalized_closed_form_volume(volume_group, p) if volume_group else None,
        delta_I=delta_information(d, d * d, min(s_vn, math.log2(d))),
    )
