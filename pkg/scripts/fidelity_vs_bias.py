#!/usr/bin/env python3
"""Sweep the bias window of a dot and tabulate the predicted pair fidelity.

For each bias the script reports the X emission energy, the fidelity with
the splitting left open, and the fidelity after the CW drive closes it
(with the drive power that does so).  Output is a CSV ready for plotting.

    python scripts/fidelity_vs_bias.py data/sample_dot.json --detuning 303 -o curve.csv
"""

import argparse
import csv
import sys

import numpy as np

from starktune import (
    ac_stark_shift,
    fidelity_formula,
    load_dot_config,
    solve_cw_drive_for_fss,
    transition_energy,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dot_json")
    parser.add_argument("--detuning", type=float, default=303.0, help="CW detuning, ueV")
    parser.add_argument("--points", type=int, default=26)
    parser.add_argument("-o", "--output", default=None)
    args = parser.parse_args()

    config = load_dot_config(args.dot_json)
    dot, diode = config.dot, config.diode
    if config.cal_constant is None:
        parser.error("dot document carries no cal_constant")
    drive = solve_cw_drive_for_fss(dot.fss, args.detuning, config.cal_constant)
    residual = abs(dot.fss + ac_stark_shift(drive.rabi_energy, drive.detuning))

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["bias_v", "e_x_ev", "fidelity_untuned", "fidelity_tuned", "cw_power_uw"])
    for bias in np.linspace(*dot.bias_range, args.points):
        tau = dot.lifetime_x(bias)
        writer.writerow(
            [
                f"{bias:.6f}",
                f"{transition_energy(dot, diode, 'X', bias):.9f}",
                f"{fidelity_formula(dot.fss, tau, dot.g2_zero):.6f}",
                f"{fidelity_formula(residual, tau, dot.g2_zero):.6f}",
                f"{drive.power:.4f}",
            ]
        )
    if args.output:
        out.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
