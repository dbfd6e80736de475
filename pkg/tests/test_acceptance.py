"""End-to-end acceptance checks.

One test per release criterion; each prints a single PASS/FAIL line (run
with ``pytest tests/test_acceptance.py -v -s`` to see them live) and every
tolerance is asserted exactly as stated, nothing looser.
"""

import csv
import json
import math

import numpy as np
import pytest

import starktune as st
from starktune import tomography as tg
from starktune.units import FWHM_PER_SIGMA, HBAR_EV_S

from conftest import REFERENCE_CAL_CONSTANT, build_reference_dot, dot_document, run_cli


def _report(criterion: str, ok: bool, detail: str = ""):
    print(f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'}{' — ' + detail if detail else ''}")
    assert ok, f"{criterion} failed {detail}"


def test_criterion_1_untuned_fidelity_anchor():
    value = st.fidelity_formula(2.92, 255.0, 0.0)
    # independent hand derivation of the same quantity
    x = 2.92e-6 * 255e-12 / HBAR_EV_S
    by_hand = 0.25 * (2.0 + 2.0 / (1.0 + x * x))
    ok = (0.69 <= value <= 0.75) and abs(value - by_hand) < 1e-15 and abs(value - 0.7194) <= 5e-4
    _report("1 untuned-fidelity anchor", ok, f"f={value:.6f}")


def test_criterion_2_splitting_cancellation_anchor():
    drive = st.solve_cw_drive_for_fss(2.92, 303.0, REFERENCE_CAL_CONSTANT)
    rabi_ok = abs(drive.rabi_energy - 59.78) <= 0.01
    residual = abs(st.ac_stark_shift(drive.rabi_energy, 303.0) + 2.92)
    round_trip_ok = residual < 1e-9
    clean = st.fidelity_formula(0.0, 255.0, 0.0)
    noisy = st.fidelity_formula(0.0, 255.0, 0.06)
    post_ok = clean == 1.0 and 0.95 <= noisy <= 0.96
    _report(
        "2 splitting-cancellation anchor",
        rabi_ok and round_trip_ok and post_ok,
        f"rabi={drive.rabi_energy:.4f} residual={residual:.2e} f(g2=0.06)={noisy:.4f}",
    )


def test_criterion_3_model_formula_consistency():
    rng = np.random.default_rng(314159)
    worst = 0.0
    for _ in range(1000):
        fss = rng.uniform(0.0, 20.0)
        tau = rng.uniform(100.0, 400.0)
        g2 = rng.uniform(0.0, 1.0)
        rho = st.time_integrated_density_matrix(st.CascadeParams(fss, tau, g2))
        worst = max(
            worst, abs(st.fidelity_to_phi_plus(rho) - st.fidelity_formula(fss, tau, g2))
        )
    _report("3 model-formula consistency", worst < 1e-12, f"worst |diff|={worst:.2e}")


def test_criterion_4_estimator_equivalence():
    rho = st.time_integrated_density_matrix(st.CascadeParams(2.92, 255.0, 0.0))
    target = st.fidelity_to_phi_plus(rho)

    # analytic half: reduced estimator on exact correlation degrees
    def prob(a, b):
        return st.coincidence_probability(rho, st.PolarizationSetting(a, b))

    c_lin = (prob("H", "H") - prob("H", "V")) / (prob("H", "H") + prob("H", "V"))
    c_diag = (prob("D", "D") - prob("D", "A")) / (prob("D", "D") + prob("D", "A"))
    c_circ = (prob("R", "R") - prob("R", "L")) / (prob("R", "R") + prob("R", "L"))
    analytic_ok = abs(st.reduced_fidelity(c_lin, c_diag, c_circ) - target) < 1e-12

    # sampled half: 200 seeds at 1e5 pairs per setting
    seeds = 200
    agree = 0
    for seed in range(seeds):
        full = st.simulate_counts(rho, st.tomography_settings_16(), 1e5, seed)
        reduced = st.simulate_counts(rho, st.reduced_settings_6(), 1e5, seed)
        f_mle = st.fidelity_to_phi_plus(st.mle_reconstruct(full).state)
        f_red = st.reduced_fidelity_from_records(reduced)
        agree += abs(f_red - f_mle) < 0.02
    sampled_ok = agree / seeds >= 0.95
    _report(
        "4 estimator equivalence",
        analytic_ok and sampled_ok,
        f"analytic ok={analytic_ok}, agreement {agree}/{seeds}",
    )


def test_criterion_5_mle_oracles():
    exposure = 1e6
    bell = st.ideal_bell_state()
    noiseless = [
        tg.MeasurementRecord(s, int(round(exposure * st.coincidence_probability(bell, s))), exposure)
        for s in st.tomography_settings_16()
    ]
    res_bell = st.mle_reconstruct(noiseless)
    f_bell = st.fidelity_to_phi_plus(res_bell.state)

    mixed = [tg.MeasurementRecord(s, 25000, 1e5) for s in st.tomography_settings_16()]
    res_mixed = st.mle_reconstruct(mixed)
    f_mixed = st.fidelity_to_phi_plus(res_mixed.state)

    def physical(state):
        m = state.matrix
        return (
            np.max(np.abs(m - m.conj().T)) <= 1e-12
            and abs(m.trace() - 1.0) <= 1e-12
            and np.linalg.eigvalsh(m)[0] >= -1e-10
        )

    ok = f_bell >= 0.9999 and abs(f_mixed - 0.25) <= 0.01
    ok = ok and physical(res_bell.state) and physical(res_mixed.state)
    _report("5 mle oracles", ok, f"f_bell={f_bell:.6f} f_mixed={f_mixed:.4f}")


def test_criterion_6_stark_fit_and_inversion_round_trips():
    # noiseless synthetic scan with every term identifiable
    diode = st.DiodeModel(1.5, 100.0)
    e0, p, beta = 1.5812, 0.8, -1.5
    scan = [
        (b, st.dc_stark_energy(e0, p, beta, st.field_from_bias(diode, b)))
        for b in np.linspace(-3.5, 1.5, 26)
    ]
    fit = st.fit_stark_parameters(scan, diode)
    fit_ok = (
        abs(fit.e0 - e0) / e0 < 1e-10
        and abs(fit.dipole - p) / p < 1e-10
        and abs(fit.polarizability - beta) / abs(beta) < 1e-10
    )

    dot, dot_diode = build_reference_dot()
    lo, hi = st.achievable_energy_range(dot, dot_diode, "X")
    span_ok = abs((hi - lo) - 1.08e-3) < 1e-9  # 1e-6 meV
    solve_ok = True
    for target in np.linspace(lo, hi, 17):
        bias = st.solve_bias_for_energy(dot, dot_diode, "X", target)
        solve_ok = solve_ok and abs(
            st.transition_energy(dot, dot_diode, "X", bias) - target
        ) < 1e-12
    _report(
        "6 stark fit/inversion round-trips",
        fit_ok and span_ok and solve_ok,
        f"span={1e3 * (hi - lo):.6f} meV",
    )


def test_criterion_7_planner_matches_brute_force():
    rng = np.random.default_rng(2718)
    all_match = True
    for _ in range(500):
        n = rng.integers(1, 51)
        lows = rng.uniform(0.0, 10.0, n)
        widths = rng.uniform(0.0, 3.0, n)
        records = [
            st.EnsembleRecord(id=f"r{i}", interval=(lo, lo + w), fss=1.0)
            for i, (lo, w) in enumerate(zip(lows, widths))
        ]
        plan = st.max_resonance_group(records)
        brute = max(
            sum(r.contains(point) for r in records)
            for rec in records
            for point in rec.interval
        )
        member_check = all(
            next(r for r in records if r.id == mid).contains(plan.target_energy)
            for mid, _ in plan.members
        )
        all_match = all_match and plan.coverage_count == brute and member_check

    rng = np.random.default_rng(42)
    fixture = [
        st.EnsembleRecord(id=f"QD-{i:02d}", interval=(1.5701 - lo, 1.5701 + hi), fss=5.0)
        for i, (lo, hi) in enumerate(
            zip(rng.uniform(1e-4, 8e-4, 39), rng.uniform(1e-4, 8e-4, 39))
        )
    ]
    plan39 = st.max_resonance_group(fixture)
    fixture_ok = plan39.coverage_count == 39 and all(
        rec.contains(plan39.target_energy) for rec in fixture
    )
    _report("7 planner brute-force oracle", all_match and fixture_ok)


def test_criterion_8_gaussian_width_recovery():
    sigma = 10.50e-3 / 2.355
    rng = np.random.default_rng(60221)
    hits = 0
    trials = 100
    for _ in range(trials):
        sample = rng.normal(1.579, sigma, 100_000)
        fit = st.gaussian_fit_histogram(sample, 1.27e-3)
        hits += abs(fit.fwhm - 10.50e-3) <= 0.2e-3
    _report("8 gaussian width recovery", hits / trials >= 0.95, f"hits {hits}/{trials}")


def test_criterion_9_cli_determinism_and_exit_codes(tmp_path, capsys):
    dot, diode = build_reference_dot()
    dot_path = tmp_path / "dot.json"
    dot_path.write_text(json.dumps(dot_document(dot, diode)))

    sim_args = ["simulate", str(dot_path), "--pairs", "1e5", "--seed", "123",
                "--settings", "16", "--bias", "0.10"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    code_a = run_cli(sim_args + ["-o", str(a)], capsys)[0]
    code_b = run_cli(sim_args + ["-o", str(b)], capsys)[0]
    deterministic = code_a == code_b == 0 and a.read_bytes() == b.read_bytes()

    toy = tmp_path / "toy.csv"
    toy.write_text("id,e_min_ev,e_max_ev,fss_uev\na,0,2,1\nb,1,3,2\nc,2.5,4,3\n")
    ok_code = run_cli(["plan", str(toy)], capsys)[0] == 0
    missing_code = run_cli(["plan", str(tmp_path / "ghost.csv")], capsys)[0] == 2
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("bias_v,energy_ev\noops\n")
    diode_doc = tmp_path / "diode.json"
    diode_doc.write_text(json.dumps({"diode": diode.to_json()}))
    parse_code = run_cli(["fit-stark", str(bad_csv), "--diode", str(diode_doc)], capsys)[0] == 2
    range_code = run_cli(
        ["tune", str(dot_path), "--target-ex", "1.9", "--detuning", "303"], capsys
    )[0] == 3
    cap_code = run_cli(
        ["tomography", str(a), "--method", "mle", "--max-iter", "1"], capsys
    )[0] == 4

    codes_ok = ok_code and missing_code and parse_code and range_code and cap_code
    _report(
        "9 determinism and exit codes",
        deterministic and codes_ok,
        f"byte-identical={deterministic}",
    )
