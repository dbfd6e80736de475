"""Ensemble-level tuning analysis and wavelength matching.

Works on per-dot tuning intervals: the range of X emission energies a dot
reaches over its usable bias window.  Finds the energy covered by the most
dots (interval stabbing on a sweep line), collects the dots able to reach an
external target line, summarizes ensemble statistics, and fits the
inhomogeneous energy distribution with a Gaussian.

Ensemble CSV schema: ``id,e_min_ev,e_max_ev,fss_uev`` plus an optional block
of full-parameter columns (see ``FULL_PARAM_COLUMNS``) that, when present,
lets the planner assign a concrete bias to each matched dot.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .emitter import BiasLookup, DiodeModel, QuantumDot
from .errors import DegenerateInputError, EmptyEnsembleError, OutOfRangeError
from .stark import solve_bias_for_energy
from .units import FWHM_PER_SIGMA


@dataclass(frozen=True)
class EnsembleRecord:
    """One dot's tuning interval, with optional full parameters for bias solves."""

    id: str
    interval: tuple[float, float]
    fss: float
    dot: QuantumDot | None = None
    diode: DiodeModel | None = None

    def __post_init__(self):
        e_min, e_max = self.interval
        if e_min > e_max:
            raise ValueError("interval must satisfy e_min <= e_max")

    @property
    def tuning_range(self) -> float:
        return self.interval[1] - self.interval[0]

    def contains(self, energy: float) -> bool:
        return self.interval[0] <= energy <= self.interval[1]


@dataclass(frozen=True)
class TuningPlan:
    """Dots assigned to one emission energy.

    ``members`` holds (dot id, assigned bias in V or None when the record
    carries no full parameters).
    """

    target_energy: float
    members: tuple[tuple[str, float | None], ...]
    coverage_count: int

    def __post_init__(self):
        if self.coverage_count != len(self.members):
            raise ValueError("coverage_count must equal the number of members")

    def to_json(self) -> dict:
        return {
            "target_energy_ev": self.target_energy,
            "members": [{"id": mid, "bias_v": bias} for mid, bias in self.members],
            "coverage_count": self.coverage_count,
        }


# Optional per-row columns carrying full dot + diode parameters.  Either all
# are filled or none; lifetimes are scalar ps values in CSV form.
FULL_PARAM_COLUMNS = (
    "e0_x_ev",
    "e0_xx_ev",
    "dipole_x_nm",
    "dipole_xx_nm",
    "polarizability_x",
    "polarizability_xx",
    "eigenaxis_angle_rad",
    "lifetime_x_ps",
    "lifetime_xx_ps",
    "g2_zero",
    "bias_min_v",
    "bias_max_v",
    "built_in_voltage_v",
    "intrinsic_thickness_nm",
)

BASE_COLUMNS = ("id", "e_min_ev", "e_max_ev", "fss_uev")


def _record_from_row(row: dict, line: int, source: str) -> EnsembleRecord:
    try:
        rid = row["id"].strip()
        e_min = float(row["e_min_ev"])
        e_max = float(row["e_max_ev"])
        fss = float(row["fss_uev"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ValueError(f"{source}:{line}: bad base columns: {exc}") from exc
    if e_min > e_max:
        raise ValueError(f"{source}:{line}: e_min_ev {e_min} > e_max_ev {e_max}")

    filled = [c for c in FULL_PARAM_COLUMNS if row.get(c, "").strip()]
    dot = diode = None
    if filled:
        if len(filled) != len(FULL_PARAM_COLUMNS):
            missing = sorted(set(FULL_PARAM_COLUMNS) - set(filled))
            raise ValueError(
                f"{source}:{line}: partial full-parameter block; missing {', '.join(missing)}"
            )
        try:
            vals = {c: float(row[c]) for c in FULL_PARAM_COLUMNS}
            dot = QuantumDot(
                id=rid,
                e0_x=vals["e0_x_ev"],
                e0_xx=vals["e0_xx_ev"],
                dipole_x=vals["dipole_x_nm"],
                dipole_xx=vals["dipole_xx_nm"],
                polarizability_x=vals["polarizability_x"],
                polarizability_xx=vals["polarizability_xx"],
                fss=fss,
                eigenaxis_angle=vals["eigenaxis_angle_rad"],
                lifetime_x=BiasLookup.constant(vals["lifetime_x_ps"]),
                lifetime_xx=BiasLookup.constant(vals["lifetime_xx_ps"]),
                g2_zero=vals["g2_zero"],
                bias_range=(vals["bias_min_v"], vals["bias_max_v"]),
            )
            diode = DiodeModel(
                built_in_voltage=vals["built_in_voltage_v"],
                intrinsic_thickness=vals["intrinsic_thickness_nm"],
            )
        except ValueError as exc:
            raise ValueError(f"{source}:{line}: bad full-parameter block: {exc}") from exc
    return EnsembleRecord(id=rid, interval=(e_min, e_max), fss=fss, dot=dot, diode=diode)


def load_ensemble(source: str | Path | io.TextIOBase) -> tuple[list[EnsembleRecord], list[str]]:
    """Load ensemble records from CSV.

    Returns (records, problems): malformed rows are rejected, not fatal,
    and each problem string names the source and line number.
    """
    if isinstance(source, io.TextIOBase):
        fh = source
        name = getattr(source, "name", "<stream>")
        close = False
    else:
        name = str(source)
        fh = open(source, newline="")
        close = True
    records: list[EnsembleRecord] = []
    problems: list[str] = []
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return [], []
        header = [c.strip() for c in reader.fieldnames]
        if header[: len(BASE_COLUMNS)] != list(BASE_COLUMNS):
            raise ValueError(
                f"{name}:1: expected columns starting with {','.join(BASE_COLUMNS)}"
            )
        for row in reader:
            try:
                records.append(_record_from_row(row, reader.line_num, name))
            except ValueError as exc:
                problems.append(str(exc))
    finally:
        if close:
            fh.close()
    return records, problems


def write_ensemble(records: Iterable[EnsembleRecord], path: str | Path) -> None:
    """Write the base columns of an ensemble back to CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BASE_COLUMNS)
        for r in records:
            writer.writerow([r.id, r.interval[0], r.interval[1], r.fss])


def _members_for_target(
    records: Sequence[EnsembleRecord], target: float
) -> tuple[tuple[str, float | None], ...]:
    members = []
    for r in records:
        if not r.contains(target):
            continue
        bias = None
        if r.dot is not None and r.diode is not None:
            try:
                bias = solve_bias_for_energy(r.dot, r.diode, "X", target)
            except OutOfRangeError:
                # Interval and Stark map disagree at the edge; keep the
                # membership, leave the bias unassigned.
                bias = None
        members.append((r.id, bias))
    return tuple(members)


def max_resonance_group(records: Sequence[EnsembleRecord]) -> TuningPlan:
    """Energy point covered by the most tuning intervals (closed endpoints).

    Sweeps the sorted interval endpoints; the deepest coverage is always
    attained at some interval's left endpoint, and ties resolve to the
    lowest energy.  Membership of the returned plan is re-checked record by
    record.
    """
    if not records:
        raise EmptyEnsembleError("cannot search an empty ensemble")
    starts = sorted(r.interval[0] for r in records)
    ends = sorted(r.interval[1] for r in records)
    best_energy = None
    best_count = -1
    i = j = active = 0
    n = len(records)
    while i < n:
        energy = starts[i]
        while i < n and starts[i] == energy:
            active += 1
            i += 1
        while j < n and ends[j] < energy:
            active -= 1
            j += 1
        # ``active`` now counts every interval with start <= energy <= end.
        if active > best_count:
            best_count = active
            best_energy = energy
    members = _members_for_target(records, best_energy)
    assert len(members) == best_count
    return TuningPlan(target_energy=best_energy, members=members, coverage_count=best_count)


def group_at_target(records: Sequence[EnsembleRecord], target: float) -> TuningPlan:
    """All dots whose tuning interval contains an externally supplied energy."""
    members = _members_for_target(records, target)
    return TuningPlan(target_energy=target, members=members, coverage_count=len(members))


def bin_groups(
    records: Sequence[EnsembleRecord], bin_width: float
) -> list[tuple[float, list[str]]]:
    """Histogram-style grouping by interval midpoint.

    Coarser than the sweep in ``max_resonance_group`` (dots in one bin are
    not guaranteed a common energy), but mirrors how an ensemble is usually
    binned for plotting.  Returns (bin center, member ids) sorted by energy.
    """
    if not records:
        raise EmptyEnsembleError("cannot bin an empty ensemble")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    mids = [(0.5 * (r.interval[0] + r.interval[1]), r.id) for r in records]
    lo = min(m for m, _ in mids)
    groups: dict[int, list[str]] = {}
    for mid, rid in mids:
        groups.setdefault(int((mid - lo) / bin_width), []).append(rid)
    return [
        (lo + (k + 0.5) * bin_width, sorted(ids)) for k, ids in sorted(groups.items())
    ]


@dataclass(frozen=True)
class GaussianFit:
    """Gaussian fit of a binned energy distribution; fwhm = 2 sqrt(2 ln 2) sigma."""

    mean: float
    sigma: float
    fwhm: float
    stderr_mean: float
    stderr_sigma: float
    stderr_fwhm: float
    n_bins: int

    def to_json(self) -> dict:
        return {
            "mean_ev": self.mean,
            "sigma_ev": self.sigma,
            "fwhm_ev": self.fwhm,
            "stderr_mean_ev": self.stderr_mean,
            "stderr_sigma_ev": self.stderr_sigma,
            "stderr_fwhm_ev": self.stderr_fwhm,
            "n_bins": self.n_bins,
        }


def gaussian_fit_histogram(energies: Sequence[float], bin_width: float) -> GaussianFit:
    """Histogram the energies at ``bin_width`` and fit a Gaussian to bin counts.

    The fit runs on bin centers referenced to the sample minimum, which
    makes the recovered sigma invariant under a constant energy offset.

    Raises
    ------
    DegenerateInputError
        If fewer than 3 bins are populated.
    """
    e = np.asarray(energies, dtype=float)
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if e.size == 0:
        raise DegenerateInputError("no energies to histogram")
    lo = float(e.min())
    span = float(e.max()) - lo
    n_bins = max(int(math.ceil(span / bin_width)), 1)
    edges = lo + bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(e - lo, bins=edges - lo)
    if int(np.count_nonzero(counts)) < 3:
        raise DegenerateInputError("need at least 3 nonempty bins for a Gaussian fit")
    centers = (edges[:-1] + edges[1:]) / 2.0 - lo

    def gauss(x, amp, mu, sigma):
        return amp * np.exp(-0.5 * ((x - mu) / sigma) ** 2)

    w = counts.astype(float)
    mu0 = float(np.sum(centers * w) / np.sum(w))
    sig0 = float(math.sqrt(np.sum(w * (centers - mu0) ** 2) / np.sum(w))) or bin_width
    popt, pcov = curve_fit(
        gauss,
        centers,
        counts,
        p0=[float(counts.max()), mu0, sig0],
        maxfev=10000,
        xtol=1e-12,
        ftol=1e-12,
    )
    sigma = abs(float(popt[2]))
    perr = np.sqrt(np.maximum(np.diag(pcov), 0.0))
    return GaussianFit(
        mean=float(popt[1]) + lo,
        sigma=sigma,
        fwhm=FWHM_PER_SIGMA * sigma,
        stderr_mean=float(perr[1]),
        stderr_sigma=float(perr[2]),
        stderr_fwhm=FWHM_PER_SIGMA * float(perr[2]),
        n_bins=n_bins,
    )


def fit_energy_distribution(
    records: Sequence[EnsembleRecord], bin_width: float | None = None
) -> GaussianFit:
    """Gaussian fit of the ensemble's interval-midpoint distribution.

    The bin width defaults to the ensemble's mean tuning range.
    """
    if not records:
        raise EmptyEnsembleError("cannot fit an empty ensemble")
    if bin_width is None:
        bin_width = ensemble_summary(records).mean_tuning_range
    midpoints = [0.5 * (r.interval[0] + r.interval[1]) for r in records]
    return gaussian_fit_histogram(midpoints, bin_width)


@dataclass(frozen=True)
class EnsembleSummary:
    """Mean/std of tuning range and splitting; stds are None for a single record."""

    count: int
    mean_tuning_range: float
    std_tuning_range: float | None
    mean_fss: float
    std_fss: float | None

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "mean_tuning_range_ev": self.mean_tuning_range,
            "std_tuning_range_ev": self.std_tuning_range,
            "mean_fss_uev": self.mean_fss,
            "std_fss_uev": self.std_fss,
        }


def ensemble_summary(records: Sequence[EnsembleRecord]) -> EnsembleSummary:
    """Arithmetic mean and sample standard deviation of range and splitting."""
    if not records:
        raise EmptyEnsembleError("cannot summarize an empty ensemble")
    ranges = np.array([r.tuning_range for r in records])
    fss = np.array([r.fss for r in records])
    single = len(records) == 1
    return EnsembleSummary(
        count=len(records),
        mean_tuning_range=float(ranges.mean()),
        std_tuning_range=None if single else float(ranges.std(ddof=1)),
        mean_fss=float(fss.mean()),
        std_fss=None if single else float(fss.std(ddof=1)),
    )
