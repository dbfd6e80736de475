"""DC and AC Stark maps and their inverse solvers.

Forward models: the transition energy under a vertical DC field follows the
quadratic map E(F) = E0 - p*F + beta*F**2, and a red-detuned CW drive on the
H-polarized transition shifts it by the dressed-state light shift
(delta/2)*(1 - sqrt(Omega**2 + delta**2)/|delta|).

Inverse solvers answer the two operational questions: which bias reaches a
target emission energy, and which drive power closes a given fine-structure
splitting.  ``plan_operating_point`` composes both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .cascade import fidelity_formula
from .emitter import CwDrive, DiodeModel, OperatingPoint, QuantumDot
from .errors import DegenerateInputError, OutOfRangeError

LINES = ("X", "XX")


def field_from_bias(diode: DiodeModel, bias: float) -> float:
    """Internal DC field in V/nm at a gate bias; affine, decreasing in bias."""
    return (diode.built_in_voltage - bias) / diode.intrinsic_thickness


def bias_from_field(diode: DiodeModel, field: float) -> float:
    return diode.built_in_voltage - field * diode.intrinsic_thickness


def dc_stark_energy(e0: float, dipole: float, polarizability: float, field: float) -> float:
    """Quadratic Stark map E0 - p*F + beta*F**2, all in eV / nm / V-per-nm units."""
    return e0 - dipole * field + polarizability * field * field


def _line_params(qd: QuantumDot, line: str) -> tuple[float, float, float]:
    if line == "X":
        return qd.e0_x, qd.dipole_x, qd.polarizability_x
    if line == "XX":
        return qd.e0_xx, qd.dipole_xx, qd.polarizability_xx
    raise ValueError(f"unknown transition line {line!r}; expected one of {LINES}")


def transition_energy(qd: QuantumDot, diode: DiodeModel, line: str, bias: float) -> float:
    """Emission energy of the X or XX line at a given bias, in eV."""
    e0, p, beta = _line_params(qd, line)
    return dc_stark_energy(e0, p, beta, field_from_bias(diode, bias))


@dataclass(frozen=True)
class StarkFit:
    """Result of a least-squares fit of the quadratic Stark map.

    ``covariance`` is the 3x3 parameter covariance in the order
    (e0, dipole, polarizability); ``stderr`` its square-rooted diagonal.
    """

    e0: float
    dipole: float
    polarizability: float
    covariance: np.ndarray
    stderr: tuple[float, float, float]
    residual_rms: float
    n_points: int

    def to_json(self) -> dict:
        return {
            "e0": self.e0,
            "dipole": self.dipole,
            "polarizability": self.polarizability,
            "stderr": list(self.stderr),
            "covariance": self.covariance.tolist(),
            "residual_rms": self.residual_rms,
            "n_points": self.n_points,
        }


def fit_stark_parameters(
    scan: Iterable[tuple[float, float]], diode: DiodeModel
) -> StarkFit:
    """Fit (E0, p, beta) to a bias scan of one emission line.

    The map is linear in its parameters once bias is converted to field, so
    this is an exact linear least-squares solve.  The parameter covariance
    is sigma^2 (X^T X)^-1 with sigma^2 estimated from the fit residuals.

    Parameters
    ----------
    scan : iterable of (bias_v, energy_ev) pairs, at least 3 distinct biases.
    diode : DiodeModel used to convert bias to field.

    Raises
    ------
    DegenerateInputError
        If fewer than 3 distinct field values are present.
    """
    pts = [(float(b), float(e)) for b, e in scan]
    if len(pts) < 3:
        raise DegenerateInputError("need at least 3 scan points to fit 3 parameters")
    bias = np.array([b for b, _ in pts])
    energy = np.array([e for _, e in pts])
    f = (diode.built_in_voltage - bias) / diode.intrinsic_thickness
    if np.unique(f).size < 3:
        raise DegenerateInputError("need at least 3 distinct biases (fields) to fit")
    # Solve in a centered, scaled field variable: the raw columns
    # (1, F, F^2) are badly collinear over a narrow field window and the
    # normal-equation inverse would lose the covariance entirely.
    m = float(f.mean())
    s = float(f.std())
    u = (f - m) / s
    design = np.column_stack([np.ones_like(u), u, u * u])
    coef, _, rank, _ = np.linalg.lstsq(design, energy, rcond=None)
    if rank < 3:
        raise DegenerateInputError("rank-deficient design matrix")
    a0, a1, a2 = (float(v) for v in coef)
    resid = energy - design @ coef
    rss = float(resid @ resid)
    dof = len(pts) - 3
    sigma2 = rss / dof if dof > 0 else 0.0
    cov_a = sigma2 * np.linalg.inv(design.T @ design)
    # Exact back-transform to E = e0 - p*F + beta*F^2 and its covariance.
    jac = np.array(
        [
            [1.0, -m / s, (m / s) ** 2],
            [0.0, -1.0 / s, 2.0 * m / s**2],
            [0.0, 0.0, 1.0 / s**2],
        ]
    )
    cov = jac @ cov_a @ jac.T
    stderr = tuple(float(v) for v in np.sqrt(np.maximum(np.diag(cov), 0.0)))
    return StarkFit(
        e0=a0 - a1 * m / s + a2 * (m / s) ** 2,
        dipole=-a1 / s + 2.0 * a2 * m / s**2,
        polarizability=a2 / s**2,
        covariance=cov,
        stderr=stderr,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=len(pts),
    )


def achievable_energy_range(qd: QuantumDot, diode: DiodeModel, line: str) -> tuple[float, float]:
    """Closed interval of emission energies reachable over the bias window."""
    e0, p, beta = _line_params(qd, line)
    vmin, vmax = qd.bias_range
    f_ends = [field_from_bias(diode, vmin), field_from_bias(diode, vmax)]
    flo, fhi = min(f_ends), max(f_ends)
    candidates = [dc_stark_energy(e0, p, beta, f) for f in (flo, fhi)]
    if beta != 0.0:
        f_vertex = p / (2.0 * beta)
        if flo <= f_vertex <= fhi:
            candidates.append(dc_stark_energy(e0, p, beta, f_vertex))
    return min(candidates), max(candidates)


def solve_bias_for_energy(
    qd: QuantumDot, diode: DiodeModel, line: str, target: float
) -> float:
    """Bias (V) at which the chosen line emits at ``target`` eV.

    When both roots of the quadratic map land inside the bias window, the
    smaller bias is returned.  The forward-evaluated residual of the result
    is below 1e-12 eV.

    Raises
    ------
    OutOfRangeError
        If the target is outside the achievable interval; the exception
        carries that interval.
    """
    e0, p, beta = _line_params(qd, line)
    vmin, vmax = qd.bias_range
    e_min, e_max = achievable_energy_range(qd, diode, line)
    pad = 1e-15 * max(1.0, abs(e_max))
    if not e_min - pad <= target <= e_max + pad:
        raise OutOfRangeError(
            f"target {target:.9f} eV outside achievable "
            f"[{e_min:.9f}, {e_max:.9f}] eV for line {line}",
            (e_min, e_max),
        )

    # Roots of beta*F^2 - p*F + (e0 - target) = 0, via the numerically
    # stable pairing q/a and c/q.
    c = e0 - target
    if beta == 0.0:
        if p == 0.0:
            # Energy is bias-independent; any bias works, return the smaller.
            return vmin
        roots = [c / p]
    else:
        disc = p * p - 4.0 * beta * c
        if disc < 0.0:
            disc = 0.0
        sq = math.sqrt(disc)
        if p == 0.0:
            r = math.sqrt(max(-c / beta, 0.0))
            roots = [r, -r]
        else:
            q = (p + math.copysign(sq, p)) / 2.0
            roots = [q / beta, c / q]

    vtol = 1e-9 * max(1.0, vmax - vmin)
    candidates = []
    for f_root in roots:
        # One Newton polish on the field removes the last ulps of the
        # closed-form root.
        slope = -p + 2.0 * beta * f_root
        if slope != 0.0:
            f_root -= (dc_stark_energy(e0, p, beta, f_root) - target) / slope
        v = bias_from_field(diode, f_root)
        if vmin - vtol <= v <= vmax + vtol:
            candidates.append(min(max(v, vmin), vmax))
    if not candidates:
        raise OutOfRangeError(
            f"no bias in [{vmin}, {vmax}] V reaches {target:.9f} eV on line {line}",
            (e_min, e_max),
        )
    best = min(candidates)
    residual = abs(transition_energy(qd, diode, line, best) - target)
    if residual > 1e-12:
        raise OutOfRangeError(
            f"bias solve left residual {residual:.3e} eV (target at window edge?)",
            (e_min, e_max),
        )
    return best


def ac_stark_shift(rabi_energy: float, detuning: float) -> float:
    """Light shift of the driven transition in ueV.

    Evaluates (delta/2)*(1 - sqrt(Omega^2 + delta^2)/|delta|) in the
    cancellation-free form -sign(delta)*Omega^2/(2*(|delta| + sqrt(...))).
    The shift always opposes the detuning sign and vanishes only at zero
    drive.

    Raises
    ------
    ValueError
        If detuning is zero (the dispersive expression is singular there).
    """
    if detuning == 0.0:
        raise ValueError("detuning must be nonzero: the light shift diverges at zero detuning")
    mag = abs(detuning)
    root = math.hypot(rabi_energy, detuning)
    return -math.copysign(1.0, detuning) * rabi_energy * rabi_energy / (2.0 * (mag + root))


def rabi_from_power(power: float, cal_constant: float) -> float:
    """Rabi energy in ueV from CW power in uW: k*sqrt(P)."""
    if power < 0:
        raise ValueError("power must be >= 0")
    return cal_constant * math.sqrt(power)


def cal_constant_from_cancellation(fss: float, detuning: float, power: float) -> float:
    """Derive the per-dot calibration k from one measured cancellation point.

    Given that ``power`` uW at ``detuning`` ueV closed a splitting of
    ``fss`` ueV, the implied Rabi energy fixes k = rabi/sqrt(power).
    """
    if power <= 0:
        raise ValueError("calibration needs a positive cancellation power")
    rabi = 2.0 * math.sqrt(fss * (fss + detuning))
    return rabi / math.sqrt(power)


def solve_cw_drive_for_fss(fss: float, detuning: float, cal_constant: float) -> CwDrive:
    """CW drive whose light shift exactly closes a splitting of ``fss`` ueV.

    Inverting the light shift for shift = -fss gives
    rabi = sqrt((2*fss + delta)^2 - delta^2) = 2*sqrt(fss*(fss + delta)).
    Requires red detuning (delta > 0): the drive must pull the H line down.

    Raises
    ------
    ValueError
        If detuning <= 0 (wrong-side drive) or fss < 0.
    """
    if detuning <= 0:
        raise ValueError("detuning must be positive (red-detuned drive) to close the splitting")
    if fss < 0:
        raise ValueError("fss must be >= 0")
    rabi = 2.0 * math.sqrt(fss * (fss + detuning))
    power = (rabi / cal_constant) ** 2 if rabi else 0.0
    return CwDrive(
        detuning=detuning,
        rabi_energy=cal_constant * math.sqrt(power),
        power=power,
        cal_constant=cal_constant,
    )


def plan_operating_point(
    qd: QuantumDot,
    diode: DiodeModel,
    target_e_x: float,
    detuning: float,
    cal_constant: float,
) -> OperatingPoint:
    """Solve the full operating point for a target X emission energy.

    Picks the bias that puts the X line on target, the CW drive that closes
    the dot's splitting at that drive detuning, and predicts the XX energy
    and the time-integrated pair fidelity at the residual splitting, using
    the X lifetime interpolated at the solved bias.
    """
    bias = solve_bias_for_energy(qd, diode, "X", target_e_x)
    drive = solve_cw_drive_for_fss(qd.fss, detuning, cal_constant)
    residual = abs(qd.fss + ac_stark_shift(drive.rabi_energy, drive.detuning))
    tau_x = qd.lifetime_x(bias)
    return OperatingPoint(
        bias=bias,
        drive=drive,
        predicted_e_x=transition_energy(qd, diode, "X", bias),
        predicted_e_xx=transition_energy(qd, diode, "XX", bias),
        residual_fss=residual,
        predicted_fidelity=fidelity_formula(residual, tau_x, qd.g2_zero),
    )
