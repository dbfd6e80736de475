import json

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import starktune as st

settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


# Reference emitter used throughout: tunes its X line by 1.08 meV (XX by
# 0.76 meV) across a [0, 0.25] V window, 2.92 ueV splitting, 255 ps X
# lifetime at 0.10 V.  Dipoles are solved from the span so the tuning range
# holds by construction.
def build_reference_dot(fss=2.92, g2_zero=0.0):
    diode = st.DiodeModel()
    f_hi = st.field_from_bias(diode, 0.0)
    f_lo = st.field_from_bias(diode, 0.25)
    beta_x, beta_xx = -1.2, -0.9
    p_x = (1.08e-3 + beta_x * (f_hi**2 - f_lo**2)) / (f_hi - f_lo)
    p_xx = (0.76e-3 + beta_xx * (f_hi**2 - f_lo**2)) / (f_hi - f_lo)
    f_mid = st.field_from_bias(diode, 0.10)
    e0_x = 1.5790 + p_x * f_mid - beta_x * f_mid**2
    e0_xx = 1.5752 + p_xx * f_mid - beta_xx * f_mid**2
    dot = st.QuantumDot(
        id="QD-ref",
        e0_x=e0_x,
        e0_xx=e0_xx,
        dipole_x=p_x,
        dipole_xx=p_xx,
        polarizability_x=beta_x,
        polarizability_xx=beta_xx,
        fss=fss,
        eigenaxis_angle=0.30,
        lifetime_x=st.BiasLookup(((0.0, 230.0), (0.05, 245.0), (0.10, 255.0), (0.15, 252.0), (0.20, 243.0), (0.25, 228.0))),
        lifetime_xx=st.BiasLookup(((0.0, 170.0), (0.10, 181.0), (0.25, 168.0))),
        g2_zero=g2_zero,
        bias_range=(0.0, 0.25),
    )
    return dot, diode


REFERENCE_CAL_CONSTANT = st.cal_constant_from_cancellation(2.92, 303.0, 14.6)


@pytest.fixture
def reference_dot():
    return build_reference_dot()


def dot_document(dot, diode, cal_constant=REFERENCE_CAL_CONSTANT):
    return {
        "dot": dot.to_json(),
        "diode": diode.to_json(),
        "cal_constant": cal_constant,
    }


@pytest.fixture
def dot_json_path(tmp_path, reference_dot):
    dot, diode = reference_dot
    path = tmp_path / "dot.json"
    path.write_text(json.dumps(dot_document(dot, diode)))
    return path


def run_cli(argv, capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    from starktune.cli import main

    try:
        code = main(argv)
    except SystemExit as exc:  # argparse errors
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err
