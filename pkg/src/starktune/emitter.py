"""Emitter and device parameter types, plus their JSON document format.

A single JSON document describes one emitter setup::

    {
      "dot": {
        "id": "QD-A",
        "e0_x": 1.5796,          # zero-field X transition energy, eV
        "e0_xx": 1.5758,         # zero-field XX transition energy, eV
        "dipole_x": 1.337,       # permanent dipole / e, nm
        "dipole_xx": 0.941,
        "polarizability_x": -1.2,    # eV/(V/nm)^2
        "polarizability_xx": -0.9,
        "fss": 2.92,             # intrinsic fine-structure splitting, ueV
        "eigenaxis_angle": 0.30, # lab-frame angle of the H eigenaxis, rad
        "lifetime_x": [[0.0, 230.0], [0.1, 255.0], [0.25, 230.0]],  # or scalar ps
        "lifetime_xx": 181.0,
        "g2_zero": 0.0,
        "bias_range": [0.0, 0.25]
      },
      "diode": {"built_in_voltage": 1.5, "intrinsic_thickness": 312.0},
      "cal_constant": 15.644    # CW calibration, ueV per sqrt(uW); optional
    }

Keys mirror the dataclass field names.  Lifetimes accept either a scalar
(in ps) or a list of ``[bias_v, value_ps]`` pairs interpolated linearly and
clamped at the endpoints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class BiasLookup:
    """A per-bias quantity: piecewise-linear in bias, clamped at the ends.

    A single point behaves as a bias-independent scalar.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("lookup table needs at least one point")
        biases = [b for b, _ in self.points]
        if any(b1 >= b2 for b1, b2 in zip(biases, biases[1:])):
            raise ValueError("lookup biases must be strictly increasing")
        if any(v <= 0 for _, v in self.points):
            raise ValueError("lookup values must be positive")

    @classmethod
    def constant(cls, value: float) -> "BiasLookup":
        return cls(((0.0, float(value)),))

    @classmethod
    def from_json(cls, node) -> "BiasLookup":
        """Accept a plain number or a list of [bias, value] pairs."""
        if isinstance(node, (int, float)):
            return cls.constant(node)
        pairs = sorted((float(b), float(v)) for b, v in node)
        return cls(tuple(pairs))

    def to_json(self):
        if len(self.points) == 1:
            return self.points[0][1]
        return [list(p) for p in self.points]

    def __call__(self, bias: float) -> float:
        biases = [b for b, _ in self.points]
        values = [v for _, v in self.points]
        return float(np.interp(bias, biases, values))


@dataclass(frozen=True)
class QuantumDot:
    """Static parameters of one emitter.

    Energies in eV, dipoles as dipole moment over elementary charge in nm
    (so dipole*field is an energy in eV for field in V/nm), polarizabilities
    in eV/(V/nm)^2, fine-structure splitting in ueV, lifetimes in ps.
    """

    id: str
    e0_x: float
    e0_xx: float
    dipole_x: float
    dipole_xx: float
    polarizability_x: float
    polarizability_xx: float
    fss: float
    eigenaxis_angle: float
    lifetime_x: BiasLookup
    lifetime_xx: BiasLookup
    g2_zero: float = 0.0
    bias_range: tuple[float, float] = (0.0, 0.25)

    def __post_init__(self):
        if self.e0_x <= 0 or self.e0_xx <= 0:
            raise ValueError("zero-field transition energies must be positive")
        if self.fss < 0:
            raise ValueError("fine-structure splitting must be >= 0")
        if not 0.0 <= self.g2_zero <= 1.0:
            raise ValueError("g2_zero must lie in [0, 1]")
        vmin, vmax = self.bias_range
        if not vmin < vmax:
            raise ValueError("bias_range must satisfy V_min < V_max")

    @classmethod
    def from_json(cls, node: dict) -> "QuantumDot":
        return cls(
            id=str(node["id"]),
            e0_x=float(node["e0_x"]),
            e0_xx=float(node["e0_xx"]),
            dipole_x=float(node["dipole_x"]),
            dipole_xx=float(node["dipole_xx"]),
            polarizability_x=float(node["polarizability_x"]),
            polarizability_xx=float(node["polarizability_xx"]),
            fss=float(node["fss"]),
            eigenaxis_angle=float(node.get("eigenaxis_angle", 0.0)),
            lifetime_x=BiasLookup.from_json(node["lifetime_x"]),
            lifetime_xx=BiasLookup.from_json(node["lifetime_xx"]),
            g2_zero=float(node.get("g2_zero", 0.0)),
            bias_range=tuple(float(v) for v in node["bias_range"]),
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "e0_x": self.e0_x,
            "e0_xx": self.e0_xx,
            "dipole_x": self.dipole_x,
            "dipole_xx": self.dipole_xx,
            "polarizability_x": self.polarizability_x,
            "polarizability_xx": self.polarizability_xx,
            "fss": self.fss,
            "eigenaxis_angle": self.eigenaxis_angle,
            "lifetime_x": self.lifetime_x.to_json(),
            "lifetime_xx": self.lifetime_xx.to_json(),
            "g2_zero": self.g2_zero,
            "bias_range": list(self.bias_range),
        }


@dataclass(frozen=True)
class DiodeModel:
    """Maps gate bias to the internal field: F = (V_bi - V_g) / d.

    ``built_in_voltage`` in V, ``intrinsic_thickness`` in nm, so the field
    comes out in V/nm.
    """

    built_in_voltage: float = 1.5
    intrinsic_thickness: float = 312.0

    def __post_init__(self):
        if self.intrinsic_thickness <= 0:
            raise ValueError("intrinsic_thickness must be positive")

    @classmethod
    def from_json(cls, node: dict) -> "DiodeModel":
        return cls(
            built_in_voltage=float(node.get("built_in_voltage", 1.5)),
            intrinsic_thickness=float(node.get("intrinsic_thickness", 312.0)),
        )

    def to_json(self) -> dict:
        return {
            "built_in_voltage": self.built_in_voltage,
            "intrinsic_thickness": self.intrinsic_thickness,
        }


@dataclass(frozen=True)
class CwDrive:
    """One CW-laser operating condition for light-shift tuning.

    ``detuning`` is E_XX minus the laser photon energy in ueV (positive =
    red-detuned); ``rabi_energy`` is the drive's Rabi energy in ueV;
    ``power`` in uW; ``cal_constant`` ties them via rabi = k*sqrt(power).
    """

    detuning: float
    rabi_energy: float
    power: float
    cal_constant: float

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("power must be >= 0")
        expected = self.cal_constant * math.sqrt(self.power)
        if not math.isclose(self.rabi_energy, expected, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(
                "inconsistent drive: rabi_energy must equal "
                "cal_constant*sqrt(power)"
            )

    def to_json(self) -> dict:
        return {
            "detuning": self.detuning,
            "rabi_energy": self.rabi_energy,
            "power": self.power,
            "cal_constant": self.cal_constant,
        }


@dataclass(frozen=True)
class OperatingPoint:
    """A solved operating point: bias plus CW drive and the predictions there."""

    bias: float
    drive: CwDrive
    predicted_e_x: float
    predicted_e_xx: float
    residual_fss: float
    predicted_fidelity: float

    def __post_init__(self):
        if self.residual_fss < 0:
            raise ValueError("residual_fss must be >= 0")

    def to_json(self) -> dict:
        return {
            "bias": self.bias,
            "drive": self.drive.to_json(),
            "predicted_e_x": self.predicted_e_x,
            "predicted_e_xx": self.predicted_e_xx,
            "residual_fss": self.residual_fss,
            "predicted_fidelity": self.predicted_fidelity,
        }


@dataclass(frozen=True)
class DotConfig:
    """One loaded emitter document: dot, diode, and optional CW calibration."""

    dot: QuantumDot
    diode: DiodeModel = field(default_factory=DiodeModel)
    cal_constant: float | None = None


def load_dot_config(source: str | Path | dict) -> DotConfig:
    """Load a dot/diode document from a path or an already-parsed dict."""
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    dot = QuantumDot.from_json(doc["dot"])
    diode = DiodeModel.from_json(doc.get("diode", {}))
    cal = doc.get("cal_constant")
    return DotConfig(dot=dot, diode=diode, cal_constant=None if cal is None else float(cal))
