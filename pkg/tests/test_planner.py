import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as stg

import starktune as st
from starktune.errors import DegenerateInputError, EmptyEnsembleError
from starktune.units import FWHM_PER_SIGMA, ghz_to_ev

from conftest import build_reference_dot


def _rec(rid, lo, hi, fss=5.0):
    return st.EnsembleRecord(id=rid, interval=(lo, hi), fss=fss)


def _brute_force_best(records):
    # The stabbing function only changes at endpoints, so its maximum is
    # attained at one of them; enumerate all.
    best = (-1, None)
    points = sorted({e for r in records for e in r.interval})
    for point in points:
        count = sum(r.contains(point) for r in records)
        if count > best[0]:
            best = (count, point)
    return best


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


class TestLoadEnsemble:
    def test_empty_file(self):
        records, problems = st.load_ensemble(io.StringIO(""))
        assert records == []
        assert problems == []

    def test_single_row_round_trip(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("id,e_min_ev,e_max_ev,fss_uev\nQD-1,1.5695,1.5708,4.2\n")
        records, problems = st.load_ensemble(path)
        assert problems == []
        assert records == [_rec("QD-1", 1.5695, 1.5708, 4.2)]
        out = tmp_path / "echo.csv"
        st.write_ensemble(records, out)
        again, _ = st.load_ensemble(out)
        assert again == records

    def test_inverted_interval_rejected_with_row_number(self):
        stream = io.StringIO(
            "id,e_min_ev,e_max_ev,fss_uev\nok,1.0,2.0,1.0\nbad,3.0,2.0,1.0\n"
        )
        records, problems = st.load_ensemble(stream)
        assert [r.id for r in records] == ["ok"]
        assert len(problems) == 1
        assert ":3:" in problems[0] and "e_min" in problems[0]

    def test_unparsable_row_reported(self):
        stream = io.StringIO("id,e_min_ev,e_max_ev,fss_uev\nx,não,2.0,1.0\n")
        records, problems = st.load_ensemble(stream)
        assert records == []
        assert len(problems) == 1 and ":2:" in problems[0]

    def test_partial_parameter_block_rejected(self):
        from starktune.planner import BASE_COLUMNS, FULL_PARAM_COLUMNS

        header = ",".join(BASE_COLUMNS + FULL_PARAM_COLUMNS)
        row = "d1,1.5,1.6,3.0,1.58" + "," * (len(FULL_PARAM_COLUMNS) - 1)
        records, problems = st.load_ensemble(io.StringIO(header + "\n" + row + "\n"))
        assert records == []
        assert len(problems) == 1 and "partial" in problems[0]


# ---------------------------------------------------------------------------
# interval stabbing
# ---------------------------------------------------------------------------


class TestMaxResonanceGroup:
    def test_three_interval_toy(self):
        plan = st.max_resonance_group([_rec("a", 0, 2), _rec("b", 1, 3), _rec("c", 2.5, 4)])
        assert plan.target_energy == 1.0
        assert plan.coverage_count == 2
        assert [m[0] for m in plan.members] == ["a", "b"]

    def test_single_interval(self):
        plan = st.max_resonance_group([_rec("only", 1.5, 1.6)])
        assert plan.target_energy == 1.5
        assert plan.coverage_count == 1

    def test_touching_endpoints_count_as_overlap(self):
        plan = st.max_resonance_group([_rec("a", 0.0, 1.0), _rec("b", 1.0, 2.0)])
        assert plan.target_energy == 1.0
        assert plan.coverage_count == 2

    def test_synthetic_common_point_ensemble(self):
        # 39 intervals, every one containing 1.5701 eV.
        rng = np.random.default_rng(42)
        records = [
            _rec(f"QD-{i:02d}", 1.5701 - lo, 1.5701 + hi)
            for i, (lo, hi) in enumerate(
                zip(rng.uniform(1e-4, 8e-4, 39), rng.uniform(1e-4, 8e-4, 39))
            )
        ]
        plan = st.max_resonance_group(records)
        assert plan.coverage_count == 39
        common_lo = max(r.interval[0] for r in records)
        common_hi = min(r.interval[1] for r in records)
        assert common_lo <= plan.target_energy <= common_hi
        for member_id, _ in plan.members:
            rec = next(r for r in records if r.id == member_id)
            assert rec.contains(plan.target_energy)

    def test_empty_input(self):
        with pytest.raises(EmptyEnsembleError):
            st.max_resonance_group([])

    @given(
        intervals=stg.lists(
            stg.tuples(stg.floats(0.0, 10.0), stg.floats(0.0, 10.0)),
            min_size=1,
            max_size=50,
        )
    )
    def test_matches_brute_force(self, intervals):
        records = [
            _rec(f"r{i}", min(a, b), max(a, b)) for i, (a, b) in enumerate(intervals)
        ]
        plan = st.max_resonance_group(records)
        best_count, _ = _brute_force_best(records)
        assert plan.coverage_count == best_count
        assert sum(r.contains(plan.target_energy) for r in records) == best_count

    @given(
        intervals=stg.lists(
            stg.tuples(stg.floats(0.0, 10.0), stg.floats(0.0, 10.0)),
            min_size=1,
            max_size=30,
        ),
        seed=stg.integers(0, 1000),
    )
    def test_permutation_invariant(self, intervals, seed):
        records = [
            _rec(f"r{i}", min(a, b), max(a, b)) for i, (a, b) in enumerate(intervals)
        ]
        shuffled = list(records)
        np.random.default_rng(seed).shuffle(shuffled)
        a = st.max_resonance_group(records)
        b = st.max_resonance_group(shuffled)
        assert a.target_energy == b.target_energy
        assert sorted(m[0] for m in a.members) == sorted(m[0] for m in b.members)


class TestGroupAtTarget:
    def test_target_outside_every_interval(self):
        plan = st.group_at_target([_rec("a", 1.0, 2.0)], 5.0)
        assert plan.members == ()
        assert plan.coverage_count == 0

    def test_common_point_of_three(self):
        records = [_rec("a", 0, 2), _rec("b", 1, 3), _rec("c", 1.5, 2.5)]
        plan = st.group_at_target(records, 1.8)
        assert plan.coverage_count == 3

    def test_rb_line_width_membership(self):
        # A dot whose 232.13 GHz tuning window straddles an external target
        # line (supplied in eV) is matched.
        target = 1.589049  # ~780.24 nm
        width = ghz_to_ev(232.13)
        record = _rec("QD-D", target - width / 3, target + 2 * width / 3)
        assert record.tuning_range == pytest.approx(width, rel=1e-12)
        plan = st.group_at_target([record, _rec("far", 1.60, 1.601)], target)
        assert [m[0] for m in plan.members] == ["QD-D"]

    def test_full_parameters_get_bias_assignment(self):
        dot, diode = build_reference_dot()
        lo, hi = st.achievable_energy_range(dot, diode, "X")
        record = st.EnsembleRecord(id=dot.id, interval=(lo, hi), fss=dot.fss, dot=dot, diode=diode)
        target = 0.5 * (lo + hi)
        plan = st.group_at_target([record], target)
        ((member_id, bias),) = plan.members
        assert member_id == dot.id
        assert bias is not None
        assert st.transition_energy(dot, diode, "X", bias) == pytest.approx(target, abs=1e-12)


# ---------------------------------------------------------------------------
# distribution fit and summary
# ---------------------------------------------------------------------------


class TestGaussianFitHistogram:
    def test_fwhm_sigma_ratio_is_definitional(self):
        rng = np.random.default_rng(1)
        fit = st.gaussian_fit_histogram(rng.normal(1.579, 4.459e-3, 20000), 1.27e-3)
        assert fit.fwhm / fit.sigma == pytest.approx(2.0 * math.sqrt(2.0 * math.log(2.0)), rel=1e-12)

    def test_recovers_generating_width(self):
        sigma = 10.50e-3 / FWHM_PER_SIGMA
        rng = np.random.default_rng(7)
        fit = st.gaussian_fit_histogram(rng.normal(1.579, sigma, 100_000), 1.27e-3)
        assert fit.fwhm == pytest.approx(10.50e-3, abs=0.2e-3)
        assert fit.mean == pytest.approx(1.579, abs=2e-4)

    def test_identical_samples_rejected(self):
        with pytest.raises(DegenerateInputError):
            st.gaussian_fit_histogram([1.579] * 100, 1e-3)

    def test_shift_invariance(self):
        # Exactly representable samples and shift keep the binning, and
        # therefore sigma, bit-identical while the mean moves.
        rng = np.random.default_rng(3)
        base = np.round(rng.normal(1.5, 4e-3, 50_000) * 2**20) / 2**20
        fit0 = st.gaussian_fit_histogram(base, 1.25e-3)
        shift = 0.125
        fit1 = st.gaussian_fit_histogram(base + shift, 1.25e-3)
        assert fit1.mean - fit0.mean == pytest.approx(shift, abs=1e-9)
        assert fit1.sigma == pytest.approx(fit0.sigma, abs=1e-9)

    def test_needs_three_populated_bins(self):
        with pytest.raises(DegenerateInputError):
            st.gaussian_fit_histogram([1.0, 1.0, 2.0, 2.0], 0.6)


class TestEnsembleSummary:
    def test_single_record_flags_std(self):
        summary = st.ensemble_summary([_rec("a", 1.0, 1.002, fss=3.0)])
        assert summary.count == 1
        assert summary.std_tuning_range is None
        assert summary.std_fss is None

    def test_two_records_hand_arithmetic(self):
        summary = st.ensemble_summary([_rec("a", 0.0, 1.0), _rec("b", 0.0, 3.0)])
        assert summary.mean_tuning_range == pytest.approx(2.0)
        assert summary.std_tuning_range == pytest.approx(math.sqrt(2.0))

    def test_sampled_ensemble_statistics(self):
        rng = np.random.default_rng(11)
        n = 400
        ranges = rng.normal(1.27e-3, 0.31e-3, n).clip(min=1e-5)
        fss = rng.normal(7.92, 3.64, n).clip(min=0.0)
        records = [
            _rec(f"q{i}", 1.579, 1.579 + dr, fss=s) for i, (dr, s) in enumerate(zip(ranges, fss))
        ]
        summary = st.ensemble_summary(records)
        assert summary.mean_tuning_range == pytest.approx(1.27e-3, abs=3 * 0.31e-3 / math.sqrt(n))
        assert summary.mean_fss == pytest.approx(7.92, abs=3 * 3.64 / math.sqrt(n) + 0.1)

    def test_empty_rejected(self):
        with pytest.raises(EmptyEnsembleError):
            st.ensemble_summary([])


def test_fit_energy_distribution_defaults_to_mean_range_bins():
    rng = np.random.default_rng(23)
    sigma = 10.50e-3 / FWHM_PER_SIGMA
    centers = rng.normal(1.579, sigma, 5000)
    ranges = rng.normal(1.27e-3, 0.31e-3, 5000).clip(min=1e-4)
    records = [
        _rec(f"q{i}", c - r / 2, c + r / 2) for i, (c, r) in enumerate(zip(centers, ranges))
    ]
    fit = st.fit_energy_distribution(records)
    explicit = st.fit_energy_distribution(
        records, bin_width=st.ensemble_summary(records).mean_tuning_range
    )
    assert fit.fwhm == explicit.fwhm
    assert fit.fwhm == pytest.approx(10.50e-3, abs=0.8e-3)


def test_bin_groups_partitions_by_midpoint():
    records = [_rec("a", 0.0, 0.2), _rec("b", 0.15, 0.25), _rec("c", 3.0, 3.2)]
    groups = st.bin_groups(records, bin_width=1.0)
    assert [ids for _, ids in groups] == [["a", "b"], ["c"]]
    with pytest.raises(EmptyEnsembleError):
        st.bin_groups([], 1.0)
