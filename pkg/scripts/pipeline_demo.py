#!/usr/bin/env python3
"""End-to-end demo: fit a noisy bias scan, tune, simulate, reconstruct.

Steps, all on synthetic data derived from a dot document:

1. generate a noisy bias scan of the X line and refit the energy map,
2. solve the operating point (bias + CW drive) for a target X energy,
3. simulate tomography counts at that operating point,
4. reconstruct the state by maximum likelihood and compare its fidelity
   against the reduced three-correlation estimate and the model prediction.

    python scripts/pipeline_demo.py data/sample_dot.json --seed 7
"""

import argparse
import json

import numpy as np

import starktune as st


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dot_json")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--pairs", type=float, default=1e5)
    parser.add_argument("--scan-noise-uev", type=float, default=1.0)
    args = parser.parse_args()

    config = st.load_dot_config(args.dot_json)
    dot, diode = config.dot, config.diode
    rng = np.random.default_rng(args.seed)

    # 1. noisy scan -> refit of the quadratic energy map
    biases = np.linspace(*dot.bias_range, 26)
    energies = np.array([st.transition_energy(dot, diode, "X", b) for b in biases])
    noisy = energies + rng.normal(0.0, args.scan_noise_uev * 1e-6, size=energies.size)
    fit = st.fit_stark_parameters(zip(biases, noisy), diode)

    # 2. operating point in the middle of the achievable window
    lo, hi = st.achievable_energy_range(dot, diode, "X")
    target = 0.5 * (lo + hi)
    point = st.plan_operating_point(dot, diode, target, 303.0, config.cal_constant)

    # 3. simulated tomography at the solved point
    tau = dot.lifetime_x(point.bias)
    rho = st.time_integrated_density_matrix(
        st.CascadeParams(point.residual_fss, tau, dot.g2_zero)
    )
    full = st.simulate_counts(rho, st.tomography_settings_16(), args.pairs, args.seed)
    reduced = st.simulate_counts(rho, st.reduced_settings_6(), args.pairs, args.seed)

    # 4. reconstruction vs reduced estimate vs model
    mle = st.mle_reconstruct(full)
    report = {
        "scan_fit": {
            "e0_ev": fit.e0,
            "dipole_nm": fit.dipole,
            "polarizability": fit.polarizability,
            "residual_rms_ev": fit.residual_rms,
        },
        "operating_point": point.to_json(),
        "fidelity": {
            "model_prediction": point.predicted_fidelity,
            "mle": st.fidelity_to_phi_plus(mle.state),
            "reduced": st.reduced_fidelity_from_records(reduced),
            "mle_converged": mle.converged,
            "mle_iterations": mle.iterations,
        },
        "untuned_fidelity": st.fidelity_formula(dot.fss, tau, dot.g2_zero),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
