"""Two-photon polarization state of the biexciton-exciton cascade.

The cascade emits a photon pair whose polarization state, absent any
exciton splitting, is the Bell state (|HH> + |VV>)/sqrt(2).  A finite
splitting makes the intermediate-level which-path phase precess during the
exciton lifetime, so the time-integrated pair state keeps its populations
but its HH/VV coherence is averaged down by the exponential decay weight:

    <HH|rho|VV> = (1/2) * (1 - i*x) / (1 + x**2),   x = splitting*tau/hbar.

Multiphoton background enters as a white-noise admixture g2*I/4.  The
closed-form fidelity of that state to the Bell target is

    f = (1/4) * (2 - g2 + 2*(1 - g2)/(1 + x**2)),

and ``fidelity_to_phi_plus(time_integrated_density_matrix(p))`` equals
``fidelity_formula(p)`` identically; the test suite pins this consistency.

Basis ordering is fixed package-wide as (HH, HV, VH, VV), first letter the
XX photon and second the X photon.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import NonPhysicalStateError
from .units import precession_phase

BASIS = ("HH", "HV", "VH", "VV")

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10


@dataclass(frozen=True)
class TwoPhotonState:
    """A validated 4x4 density matrix over the (HH, HV, VH, VV) basis.

    Construction enforces hermiticity (elementwise 1e-12), unit trace
    (1e-12) and positivity (smallest eigenvalue >= -1e-10).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise NonPhysicalStateError(f"expected a 4x4 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise NonPhysicalStateError("matrix is not Hermitian within 1e-12")
        if abs(m.trace() - 1.0) > TRACE_TOL:
            raise NonPhysicalStateError("trace differs from 1 by more than 1e-12")
        if float(np.linalg.eigvalsh(m)[0]) < EIGENVALUE_FLOOR:
            raise NonPhysicalStateError("matrix has an eigenvalue below -1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def to_jsonable(self) -> list:
        """4x4 nested list of [re, im] pairs, rows in the (HH, HV, VH, VV) order."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]

    @classmethod
    def from_jsonable(cls, node) -> "TwoPhotonState":
        m = np.array([[complex(re, im) for re, im in row] for row in node])
        return cls(m)


@dataclass(frozen=True)
class CascadeParams:
    """Inputs of the time-integrated cascade state model.

    fss in ueV, lifetime_x in ps, g2_zero dimensionless in [0, 1].
    """

    fss: float
    lifetime_x: float
    g2_zero: float = 0.0

    def __post_init__(self):
        if self.fss < 0:
            raise ValueError("fss must be >= 0")
        if self.lifetime_x <= 0:
            raise ValueError("lifetime_x must be positive")
        if not 0.0 <= self.g2_zero <= 1.0:
            raise ValueError("g2_zero must lie in [0, 1]")


def _corner_state(coherence: complex) -> TwoPhotonState:
    """Density matrix with populations 1/2 on HH and VV and <HH|rho|VV> given."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = coherence
    rho[3, 0] = np.conj(coherence)
    return TwoPhotonState(rho)


def ideal_bell_state() -> TwoPhotonState:
    """The maximally entangled pair state (|HH> + |VV>)/sqrt(2) as a density matrix."""
    return _corner_state(0.5)


def time_resolved_state(fss: float, delay: float) -> TwoPhotonState:
    """Pure pair state after the which-path phase precessed for ``delay`` ps.

    The state is (|HH> + exp(i*fss*delay/hbar)|VV>)/sqrt(2); at zero delay
    it is the ideal Bell state.

    Parameters
    ----------
    fss : splitting in ueV.
    delay : emission-time delay of the X photon in ps; must be >= 0.
    """
    if delay < 0:
        raise ValueError("delay must be >= 0")
    phase = precession_phase(fss, delay)
    return _corner_state(0.5 * cmath.exp(-1j * phase))


def time_integrated_density_matrix(params: CascadeParams) -> TwoPhotonState:
    """Time-integrated pair state with splitting dephasing and white noise.

    The exponential-decay-weighted average of the precessing pure state
    gives diagonal (1/2, 0, 0, 1/2) and the complex corner coherence
    (1/2)(1 - i*x)/(1 + x^2) with x = fss*tau/hbar; the multiphoton
    admixture mixes in g2*I/4.
    """
    x = precession_phase(params.fss, params.lifetime_x)
    coherence = 0.5 * (1.0 - 1j * x) / (1.0 + x * x)
    rho_fss = np.zeros((4, 4), dtype=complex)
    rho_fss[0, 0] = rho_fss[3, 3] = 0.5
    rho_fss[0, 3] = coherence
    rho_fss[3, 0] = np.conj(coherence)
    g2 = params.g2_zero
    rho = (1.0 - g2) * rho_fss + g2 * np.eye(4) / 4.0
    return TwoPhotonState(rho)


def fidelity_to_phi_plus(rho: TwoPhotonState | np.ndarray) -> float:
    """Overlap of a pair state with the Bell target: (rho11 + rho44 + 2 Re rho14)/2.

    Accepts a raw 4x4 array as well; raw input is validated first and a
    non-physical matrix raises NonPhysicalStateError.
    """
    if not isinstance(rho, TwoPhotonState):
        rho = TwoPhotonState(rho)
    m = rho.matrix
    return float(0.5 * (m[0, 0].real + m[3, 3].real + 2.0 * m[0, 3].real))


def fidelity_formula(fss: float, tau_x: float, g2: float = 0.0) -> float:
    """Closed-form time-integrated fidelity of the cascade pair state.

    f = (1/4)(2 - g2 + 2(1 - g2)/(1 + x^2)) with x = fss*tau_x/hbar;
    fss in ueV, tau_x in ps.
    """
    x = precession_phase(fss, tau_x)
    return 0.25 * (2.0 - g2 + 2.0 * (1.0 - g2) / (1.0 + x * x))
