"""
Coarse-graining of the qutrit eigenvalue simplex: an eta-parameterized
grid of spectra, binned by a normalized measure into k segments, with
fractional volumes and per-bin average von Neumann entropy.
"""
from typing import List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, PrivateAttr

from common import InvalidArgument, OutputFormat, csv_text, log, write_table
from entropy import normalized_linear_entropy_rows, normalized_von_neumann_rows
from metric import ClosedForm, closed_form_rows


BIN_HEADER = ["bin_index", "lo", "hi", "count", "fraction", "mean_svn_norm"]
CELL_HEADER = ["eta1", "eta2", "lambda1", "lambda2", "lambda3", "measure_value", "bin_index", "in_chamber"]
HEADLINE_COVERAGE = 0.6
HEADLINE_ENTROPY = 0.88


class Measure:
    VOLUME = "volume"
    LINEAR = "linear"
    VON_NEUMANN = "von-neumann"

    ALL = (VOLUME, LINEAR, VON_NEUMANN)


class GridCell(NamedTuple):
    eta1: float
    eta2: float
    lam: tuple
    in_chamber: bool


# ==================== Grid ====================

class SimplexGrid:
    """ell x ell cells of the unit eta square mapped onto the 3-simplex; cell a*ell + b"""

    def __init__(self, ell: int):
        if ell < 2:
            raise InvalidArgument(f"Grid needs ell >= 2, got {ell}")
        self.ell = ell
        centers = (np.arange(ell) + 0.5) / ell
        self.eta1 = np.repeat(centers, ell)
        self.eta2 = np.tile(centers, ell)
        root = np.sqrt(self.eta1)
        self.lam = np.column_stack([1.0 - root, root * (1.0 - self.eta2), root * self.eta2])
        self.in_chamber = (self.eta1 > 0.25) & (self.eta2 > 0.5)
        for arr in (self.eta1, self.eta2, self.lam, self.in_chamber):
            arr.setflags(write=False)

    def __len__(self):
        return self.ell * self.ell

    def cell(self, index: int) -> GridCell:
        return GridCell(float(self.eta1[index]), float(self.eta2[index]),
                        tuple(float(x) for x in self.lam[index]), bool(self.in_chamber[index]))

    def index_of(self, a: int, b: int) -> int:
        return a * self.ell + b


def build_grid(ell: int) -> SimplexGrid:
    return SimplexGrid(ell)


def measure_values(grid: SimplexGrid, measure: str) -> np.ndarray:
    """Normalized measure of every cell, clipped to [0, 1]"""
    if measure == Measure.VOLUME:
        peak = closed_form_rows(ClosedForm.SO3, np.full((1, 3), 1.0 / 3.0))[0]
        values = closed_form_rows(ClosedForm.SO3, grid.lam) / peak
    elif measure == Measure.LINEAR:
        values = normalized_linear_entropy_rows(grid.lam)
    elif measure == Measure.VON_NEUMANN:
        values = normalized_von_neumann_rows(grid.lam)
    else:
        raise InvalidArgument(f"Unknown measure: {measure}")
    return np.clip(values, 0.0, 1.0)


def assign_bins(values: np.ndarray, k: int) -> np.ndarray:
    """1-based bin of each value: [(a-1)/k, a/k), last bin closed"""
    return np.minimum(np.floor(values * k).astype(int), k - 1) + 1


# ==================== Report ====================

class BinRow(BaseModel):
    bin_index: int
    lo: float
    hi: float
    count: int
    fraction: float
    mean_svn_norm: Optional[float] = None


class CoverageSummary(BaseModel):
    bins: List[int]
    coverage: float
    mean_svn_norm: float


class CoarseGrainReport(BaseModel):
    measure: str
    k: int
    ell: int
    weyl_only: bool
    counted: int
    bins: List[BinRow]

    _values: Optional[np.ndarray] = PrivateAttr(default=None)
    _bin_index: Optional[np.ndarray] = PrivateAttr(default=None)

    @property
    def cell_values(self) -> np.ndarray:
        return self._values

    @property
    def cell_bins(self) -> np.ndarray:
        return self._bin_index

    def total_fraction(self) -> float:
        return float(sum(row.fraction for row in self.bins))

    def top_coverage(self, threshold: float = HEADLINE_COVERAGE) -> CoverageSummary:
        """Smallest run of highest bins holding at least `threshold` of the counted cells"""
        used, cells, weighted = [], 0, 0.0
        for row in reversed(self.bins):
            if row.count == 0:
                continue
            used.append(row.bin_index)
            cells += row.count
            weighted += row.count * row.mean_svn_norm
            if cells >= threshold * self.counted:
                break
        coverage = cells / self.counted if self.counted else 0.0
        mean = weighted / cells if cells else 0.0
        return CoverageSummary(bins=used, coverage=coverage, mean_svn_norm=mean)

    def fraction_above(self, level: float = HEADLINE_ENTROPY) -> float:
        """Share of counted cells sitting in bins whose mean entropy exceeds level"""
        return float(sum(row.fraction for row in self.bins
                         if row.mean_svn_norm is not None and row.mean_svn_norm > level))


def run_experiment(grid: SimplexGrid, measure: str, k: int, weyl_only: bool = True) -> CoarseGrainReport:
    if k < 1:
        raise InvalidArgument(f"Need at least one bin, got k={k}")
    values = measure_values(grid, measure)
    bins = assign_bins(values, k)
    entropy = normalized_von_neumann_rows(grid.lam)
    counted = grid.in_chamber if weyl_only else np.ones(len(grid), dtype=bool)
    total = int(np.count_nonzero(counted))

    rows = []
    for a in range(1, k + 1):
        members = counted & (bins == a)
        count = int(np.count_nonzero(members))
        rows.append(BinRow(
            bin_index=a,
            lo=(a - 1) / k,
            hi=a / k,
            count=count,
            fraction=count / total if total else 0.0,
            mean_svn_norm=float(np.mean(entropy[members])) if count else None,
        ))

    report = CoarseGrainReport(measure=measure, k=k, ell=grid.ell, weyl_only=weyl_only,
                               counted=total, bins=rows)
    report._values = values
    report._bin_index = bins
    log(f"✓ Coarse-grained {len(grid)} cells by {measure} into {k} bins ({total} counted)")
    return report


# ==================== Tables ====================

def bin_table(report: CoarseGrainReport) -> List[list]:
    return [[row.bin_index, row.lo, row.hi, row.count, row.fraction, row.mean_svn_norm]
            for row in report.bins]


def cell_table(report: CoarseGrainReport, grid: SimplexGrid) -> List[list]:
    rows = []
    for i in range(len(grid)):
        l1, l2, l3 = (float(x) for x in grid.lam[i])
        rows.append([float(grid.eta1[i]), float(grid.eta2[i]), l1, l2, l3,
                     float(report.cell_values[i]), int(report.cell_bins[i]), int(grid.in_chamber[i])])
    return rows


def bins_csv(report: CoarseGrainReport) -> str:
    return csv_text(BIN_HEADER, bin_table(report))


def cells_csv(report: CoarseGrainReport, grid: SimplexGrid) -> str:
    return csv_text(CELL_HEADER, cell_table(report, grid))


def write_bins(report: CoarseGrainReport, path, fmt: str = OutputFormat.CSV):
    return write_table(path, BIN_HEADER, bin_table(report), fmt)


def write_cells(report: CoarseGrainReport, grid: SimplexGrid, path, fmt: str = OutputFormat.CSV):
    return write_table(path, CELL_HEADER, cell_table(report, grid), fmt)
