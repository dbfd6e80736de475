"""Physical constants and the unit conventions shared by every module.

Quantities keep fixed units throughout the package: transition energies in
eV, splittings and detunings in ueV, lifetimes and delays in ps, CW laser
power in uW, gate bias in V, electric field in V/nm.  Every conversion
between those units lives here, nowhere else.
"""

# Reduced and full Planck constant (CODATA 2018).
HBAR_EV_S = 6.582119569e-16
PLANCK_EV_S = 4.135667696e-15

EV_PER_UEV = 1e-6
UEV_PER_EV = 1e6
EV_PER_MEV = 1e-3
S_PER_PS = 1e-12
HZ_PER_GHZ = 1e9

# Full width at half maximum of a Gaussian over its standard deviation.
FWHM_PER_SIGMA = 2.3548200450309493  # 2*sqrt(2*ln 2)


def precession_phase(splitting_uev: float, delay_ps: float) -> float:
    """Dimensionless phase delta*t/hbar accumulated across an energy splitting."""
    return splitting_uev * EV_PER_UEV * delay_ps * S_PER_PS / HBAR_EV_S


def ghz_to_ev(frequency_ghz: float) -> float:
    """Photon energy E = h*f for an optical frequency in GHz."""
    return PLANCK_EV_S * frequency_ghz * HZ_PER_GHZ


def ev_to_ghz(energy_ev: float) -> float:
    """Optical frequency f = E/h in GHz for a photon energy in eV."""
    return energy_ev / (PLANCK_EV_S * HZ_PER_GHZ)
