"""Polarization-projective coincidence measurements: simulation and analysis.

Covers the measurement side of the pair source: Born-rule coincidence
probabilities for any pair of single-photon projections, Poisson count
generation with per-setting seeded streams, degree-of-correlation and
reduced-fidelity estimators, full 16-setting maximum-likelihood state
reconstruction, and extraction of the fine-structure splitting from a
half-wave-plate scan of the XX-X peak separation.

Counts move through CSV files with columns ``xx_proj,x_proj,counts,exposure``
where exposure is the mean number of generated pairs for that setting.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .cascade import TwoPhotonState
from .errors import DegenerateInputError

_SQ2 = 1.0 / math.sqrt(2.0)

# Single-photon projection kets over the (H, V) basis.
KETS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_SQ2, _SQ2], dtype=complex),
    "A": np.array([_SQ2, -_SQ2], dtype=complex),
    "R": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "L": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}

PROJECTION_LABELS = tuple(KETS)


@dataclass(frozen=True)
class PolarizationSetting:
    """One coincidence setting: a projection for the XX arm and one for the X arm."""

    xx_proj: str
    x_proj: str

    def __post_init__(self):
        for label in (self.xx_proj, self.x_proj):
            if label not in KETS:
                raise ValueError(
                    f"unknown projection {label!r}; expected one of {PROJECTION_LABELS}"
                )

    @property
    def label(self) -> str:
        return self.xx_proj + self.x_proj


@dataclass(frozen=True)
class MeasurementRecord:
    """Observed or simulated coincidences for one setting.

    ``exposure`` is the normalization (mean generated pairs) the counts
    should be divided by to get a rate.
    """

    setting: PolarizationSetting
    counts: int
    exposure: float

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError("counts must be >= 0")
        if self.exposure <= 0:
            raise ValueError("exposure must be positive")


@dataclass(frozen=True)
class PolarizationScanPoint:
    """One point of a half-wave-plate scan: HWP angle (rad) vs XX-X peak separation (ueV)."""

    hwp_angle: float
    energy_diff: float


# The canonical informationally complete 16-setting list used for full
# state reconstruction (XX projection first, X projection second).
_SETTINGS_16 = (
    ("H", "H"), ("H", "V"), ("V", "V"), ("V", "H"),
    ("R", "H"), ("R", "V"), ("D", "V"), ("D", "H"),
    ("D", "R"), ("D", "D"), ("R", "D"), ("H", "D"),
    ("V", "D"), ("V", "L"), ("H", "L"), ("R", "L"),
)

# Co/cross pairs in the linear, diagonal and circular bases, enough for the
# reduced (three-correlation) fidelity estimate.
_SETTINGS_REDUCED_6 = (
    ("H", "H"), ("H", "V"), ("D", "D"), ("D", "A"), ("R", "R"), ("R", "L"),
)


def tomography_settings_16() -> list[PolarizationSetting]:
    """The fixed 16-setting list for full state reconstruction."""
    return [PolarizationSetting(a, b) for a, b in _SETTINGS_16]


def reduced_settings_6() -> list[PolarizationSetting]:
    """Co/cross settings in the linear, diagonal and circular bases."""
    return [PolarizationSetting(a, b) for a, b in _SETTINGS_REDUCED_6]


def setting_projector(setting: PolarizationSetting) -> np.ndarray:
    """Rank-1 projector of a two-photon setting over the (HH, HV, VH, VV) basis."""
    psi = np.kron(KETS[setting.xx_proj], KETS[setting.x_proj])
    return np.outer(psi, psi.conj())


def coincidence_probability(rho: TwoPhotonState, setting: PolarizationSetting) -> float:
    """Born-rule coincidence probability Tr(rho * Pxx (x) Px)."""
    return float(np.real(np.trace(rho.matrix @ setting_projector(setting))))


def simulate_counts(
    rho: TwoPhotonState,
    settings: Sequence[PolarizationSetting],
    mean_pairs_per_setting: float,
    seed: int,
) -> list[MeasurementRecord]:
    """Draw Poisson coincidence counts for each setting.

    Each setting uses an independent random stream derived deterministically
    from ``(seed, setting index)``, so per-setting sampling can run in any
    order (or in parallel) without changing the output.
    """
    if mean_pairs_per_setting <= 0:
        raise ValueError("mean_pairs_per_setting must be positive")
    records = []
    for index, setting in enumerate(settings):
        rate = mean_pairs_per_setting * coincidence_probability(rho, setting)
        rng = np.random.default_rng([int(seed), index])
        counts = int(rng.poisson(max(rate, 0.0)))
        records.append(
            MeasurementRecord(setting=setting, counts=counts, exposure=mean_pairs_per_setting)
        )
    return records


def degree_of_correlation(co: MeasurementRecord, cross: MeasurementRecord) -> float:
    """Normalized co-minus-cross contrast (r_co - r_cross)/(r_co + r_cross).

    Rates are counts over exposure.  Raises if both rates vanish, where the
    contrast is undefined.
    """
    r_co = co.counts / co.exposure
    r_cross = cross.counts / cross.exposure
    total = r_co + r_cross
    if total == 0:
        raise ValueError("undefined correlation: both co and cross rates are zero")
    return (r_co - r_cross) / total


def reduced_fidelity(c_linear: float, c_diagonal: float, c_circular: float) -> float:
    """Fidelity estimate (1 + C_lin + C_diag - C_circ)/4 from three correlations."""
    for name, c in (("linear", c_linear), ("diagonal", c_diagonal), ("circular", c_circular)):
        if not -1.0 <= c <= 1.0:
            raise ValueError(f"{name} correlation {c} outside [-1, 1]")
    return 0.25 * (1.0 + c_linear + c_diagonal - c_circular)


_REDUCED_PAIRS = {
    "linear": (("H", "H"), ("H", "V")),
    "diagonal": (("D", "D"), ("D", "A")),
    "circular": (("R", "R"), ("R", "L")),
}


def correlations_from_records(
    records: Iterable[MeasurementRecord],
) -> dict[str, float]:
    """Pick the three co/cross pairs out of a record list and form C_mu.

    Raises KeyError-style ValueError naming any setting that is missing.
    """
    by_label = {r.setting.label: r for r in records}
    missing = [
        a + b
        for pair in _REDUCED_PAIRS.values()
        for a, b in pair
        if a + b not in by_label
    ]
    if missing:
        raise ValueError(f"missing settings for reduced estimate: {', '.join(missing)}")
    return {
        basis: degree_of_correlation(by_label[co[0] + co[1]], by_label[cx[0] + cx[1]])
        for basis, (co, cx) in _REDUCED_PAIRS.items()
    }


def reduced_fidelity_from_records(records: Iterable[MeasurementRecord]) -> float:
    c = correlations_from_records(records)
    return reduced_fidelity(c["linear"], c["diagonal"], c["circular"])


# ---------------------------------------------------------------------------
# Maximum-likelihood reconstruction
# ---------------------------------------------------------------------------

# Parameter layout for the lower-triangular factor T: four real diagonal
# entries, then (re, im) for each sub-diagonal entry.
_T_OFFDIAG = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2))


def _t_matrix(t: np.ndarray) -> np.ndarray:
    T = np.zeros((4, 4), dtype=complex)
    T[0, 0], T[1, 1], T[2, 2], T[3, 3] = t[:4]
    for i, (r, c) in enumerate(_T_OFFDIAG):
        T[r, c] = t[4 + 2 * i] + 1j * t[5 + 2 * i]
    return T


@dataclass(frozen=True)
class MleResult:
    """Outcome of a maximum-likelihood reconstruction.

    ``state`` is physical by construction (rho = T^dag T / tr).  The fit is
    converged when the per-iteration log-likelihood improvement dropped
    below 1e-10 before the iteration cap; a capped run is flagged, with the
    last improvement reported, never silently returned as converged.
    """

    state: TwoPhotonState
    converged: bool
    iterations: int
    log_likelihood: float
    final_improvement: float | None
    message: str

    def diagnostics(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "log_likelihood": self.log_likelihood,
            "final_improvement": self.final_improvement,
            "message": self.message,
        }


LL_IMPROVEMENT_TOL = 1e-10
MLE_MAX_ITER_DEFAULT = 2000
_P_FLOOR = 1e-12


def mle_reconstruct(
    records: Sequence[MeasurementRecord],
    max_iter: int = MLE_MAX_ITER_DEFAULT,
) -> MleResult:
    """Reconstruct the pair state from the 16 canonical settings.

    Maximizes the Poisson log-likelihood sum_k [n_k log(N_k p_k) - N_k p_k]
    over states parameterized as rho = T^dag T / Tr(T^dag T) with T lower
    triangular (16 real parameters), starting from the maximally mixed
    state.  The optimizer works on the likelihood with its data-only
    saturated part subtracted, which changes no maximizer but keeps the
    objective near zero so the 1e-10 per-iteration improvement test stays
    resolvable in double precision.
    """
    records = list(records)
    canonical = [a + b for a, b in _SETTINGS_16]
    seen = [r.setting.label for r in records]
    if len(seen) != len(set(seen)):
        raise ValueError("duplicate settings in tomography records")
    missing = sorted(set(canonical) - set(seen))
    if missing:
        raise ValueError(f"records must cover all 16 settings; missing: {', '.join(missing)}")
    extra = sorted(set(seen) - set(canonical))
    if extra:
        raise ValueError(f"unexpected settings for 16-setting reconstruction: {', '.join(extra)}")
    by_label = {r.setting.label: r for r in records}
    ordered = [by_label[lab] for lab in canonical]

    counts = np.array([r.counts for r in ordered], dtype=float)
    exposures = np.array([r.exposure for r in ordered], dtype=float)
    if counts.sum() <= 0:
        raise ValueError("total counts must be positive")
    projs = np.stack([setting_projector(PolarizationSetting(a, b)) for a, b in _SETTINGS_16])
    # p_k = Tr(Proj_k rho) as one matvec over the flattened state.
    projs_flat = projs.transpose(0, 2, 1).reshape(16, 16)
    # Saturated-model offset: value of the likelihood at p_k = n_k / N_k.
    pos = counts > 0
    saturated = float(np.sum(counts[pos] * np.log(counts[pos]) - counts[pos]))
    eye4 = np.eye(4)
    last_eval: dict[bytes, float] = {}

    def objective(t: np.ndarray) -> tuple[float, np.ndarray]:
        T = _t_matrix(t)
        gram = T.conj().T @ T
        norm = float(np.real(np.trace(gram)))
        rho = gram / norm
        p = np.real(projs_flat @ rho.ravel())
        p_safe = np.maximum(p, _P_FLOOR)
        shifted = float(
            np.sum(counts[pos] * np.log(exposures[pos] * p_safe[pos]))
            - np.sum(exposures * p)
            - saturated
        )
        # Gradient via the Wirtinger derivative d(-LL)/dT* = -T(W - wbar I)/S
        # with W = sum_k w_k Proj_k and w_k = n_k/p_k - N_k.
        w = counts / p_safe - exposures
        wbar = float(w @ p)
        gmat = -(T @ ((w @ projs.reshape(16, 16)).reshape(4, 4) - wbar * eye4)) / norm
        grad = np.empty(16)
        grad[0] = 2.0 * gmat[0, 0].real
        grad[1] = 2.0 * gmat[1, 1].real
        grad[2] = 2.0 * gmat[2, 2].real
        grad[3] = 2.0 * gmat[3, 3].real
        for i, (r, c) in enumerate(_T_OFFDIAG):
            grad[4 + 2 * i] = 2.0 * gmat[r, c].real
            grad[5 + 2 * i] = 2.0 * gmat[r, c].imag
        last_eval.clear()
        last_eval[t.tobytes()] = -shifted
        return -shifted, grad

    def recorded_value(xk: np.ndarray) -> float:
        cached = last_eval.get(xk.tobytes())
        return objective(xk)[0] if cached is None else cached

    t = np.zeros(16)
    t[:4] = 0.5  # T = I/2, i.e. rho0 = I/4
    trajectory = [objective(t)[0]]
    total_iters = 0
    converged = False
    message = "iteration cap reached"
    while total_iters < max_iter:
        inner: list[float] = []
        res = minimize(
            objective,
            t,
            jac=True,
            method="L-BFGS-B",
            callback=lambda xk: inner.append(recorded_value(xk)),
            options={
                "maxiter": max_iter - total_iters,
                "ftol": 1e-15,
                "gtol": 1e-10,
                "maxfun": 500_000,
            },
        )
        t = res.x
        total_iters += res.nit
        trajectory.extend(inner)
        if res.nit == 0:
            # No step could improve the likelihood at all.
            converged = True
            message = "stationary: no improving step available"
            break
        if len(trajectory) >= 2 and trajectory[-2] - trajectory[-1] < LL_IMPROVEMENT_TOL:
            converged = True
            message = "log-likelihood improvement below tolerance"
            break
        # Otherwise the inner solver stopped early (e.g. line-search stall):
        # restart from the current point with the remaining budget.

    T = _t_matrix(t)
    gram = T.conj().T @ T
    rho = gram / np.real(np.trace(gram))
    rho = 0.5 * (rho + rho.conj().T)
    state = TwoPhotonState(rho)

    p = np.maximum(np.real(np.einsum("kij,ji->k", projs, rho)), _P_FLOOR)
    log_likelihood = float(np.sum(counts[pos] * np.log(exposures[pos] * p[pos])) - np.sum(exposures * p))
    final_improvement = trajectory[-2] - trajectory[-1] if len(trajectory) >= 2 else None
    return MleResult(
        state=state,
        converged=converged,
        iterations=total_iters,
        log_likelihood=log_likelihood,
        final_improvement=final_improvement,
        message=message if converged else f"not converged after {total_iters} iterations",
    )


# ---------------------------------------------------------------------------
# Fine-structure extraction from a half-wave-plate scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarizationScanFit:
    """Sinusoidal fit of the XX-X peak separation vs HWP angle.

    The model is offset + (fss/2)*cos(4*(theta - axis_angle)): the HWP
    doubles the polarization rotation, so the separation has period pi/2 in
    HWP angle.  ``fss`` is the peak-to-peak amplitude; ``axis_angle`` is
    normalized to [0, pi/2) and meaningless when ``angle_indeterminate``.
    """

    fss: float
    axis_angle: float
    offset: float
    stderr_fss: float
    stderr_axis_angle: float
    stderr_offset: float
    angle_indeterminate: bool

    def to_json(self) -> dict:
        return {
            "fss": self.fss,
            "axis_angle": self.axis_angle,
            "offset": self.offset,
            "stderr_fss": self.stderr_fss,
            "stderr_axis_angle": self.stderr_axis_angle,
            "stderr_offset": self.stderr_offset,
            "angle_indeterminate": self.angle_indeterminate,
        }


def extract_fss_polarization_scan(
    points: Sequence[PolarizationScanPoint],
) -> PolarizationScanFit:
    """Fit the splitting and eigenaxis angle from a polarization scan.

    Rewrites the model as offset + C cos(4 theta) + S sin(4 theta), solves
    the linear least squares exactly, and recovers fss = 2*hypot(C, S) and
    axis_angle = atan2(S, C)/4 (mod pi/2).  Standard errors come from the
    linear-fit covariance via the delta method.

    Raises
    ------
    DegenerateInputError
        For fewer than 4 points or a scan whose angles are all equal
        modulo pi/4 (the design matrix loses rank).
    """
    if len(points) < 4:
        raise DegenerateInputError("need at least 4 scan points")
    theta = np.array([p.hwp_angle for p in points], dtype=float)
    y = np.array([p.energy_diff for p in points], dtype=float)
    design = np.column_stack([np.ones_like(theta), np.cos(4 * theta), np.sin(4 * theta)])
    if np.linalg.matrix_rank(design, tol=1e-10 * len(points)) < 3:
        raise DegenerateInputError(
            "degenerate scan: angles equal modulo pi/4 cannot separate amplitude and phase"
        )
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    offset, c_cos, c_sin = (float(v) for v in coef)
    resid = y - design @ coef
    dof = len(points) - 3
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(design.T @ design)

    amp = math.hypot(c_cos, c_sin)
    fss = 2.0 * amp
    axis = math.atan2(c_sin, c_cos) / 4.0 % (math.pi / 2.0)

    if amp > 0:
        g_fss = np.array([0.0, 2.0 * c_cos / amp, 2.0 * c_sin / amp])
        g_axis = np.array([0.0, -c_sin, c_cos]) / (4.0 * amp * amp)
        stderr_fss = float(math.sqrt(max(g_fss @ cov @ g_fss, 0.0)))
        stderr_axis = float(math.sqrt(max(g_axis @ cov @ g_axis, 0.0)))
    else:
        stderr_fss = float(math.sqrt(max(4.0 * cov[1, 1], 4.0 * cov[2, 2])))
        stderr_axis = math.inf

    indeterminate = fss <= max(1e-9, 3.0 * stderr_fss)
    return PolarizationScanFit(
        fss=fss,
        axis_angle=axis,
        offset=offset,
        stderr_fss=stderr_fss,
        stderr_axis_angle=stderr_axis,
        stderr_offset=float(math.sqrt(max(cov[0, 0], 0.0))),
        angle_indeterminate=indeterminate,
    )


# ---------------------------------------------------------------------------
# Counts CSV I/O
# ---------------------------------------------------------------------------

COUNTS_COLUMNS = ("xx_proj", "x_proj", "counts", "exposure")


def write_counts_csv(records: Iterable[MeasurementRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COUNTS_COLUMNS)
        for r in records:
            writer.writerow([r.setting.xx_proj, r.setting.x_proj, r.counts, r.exposure])


def read_counts_csv(path: str | Path) -> list[MeasurementRecord]:
    """Parse a counts CSV; errors name the file and 1-based line number."""
    records = []
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != list(COUNTS_COLUMNS):
            raise ValueError(
                f"{path}:1: expected header {','.join(COUNTS_COLUMNS)}, got "
                f"{','.join(reader.fieldnames or ['<empty>'])}"
            )
        for row in reader:
            line = reader.line_num
            try:
                records.append(
                    MeasurementRecord(
                        setting=PolarizationSetting(row["xx_proj"].strip(), row["x_proj"].strip()),
                        counts=int(row["counts"]),
                        exposure=float(row["exposure"]),
                    )
                )
            except (TypeError, ValueError, AttributeError) as exc:
                raise ValueError(f"{path}:{line}: bad counts row: {exc}") from exc
    return records
