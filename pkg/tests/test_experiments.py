import pytest

from conftest import nested_tree_lattice, tree_merge_instances
from scoutnet import experiments, oracle
from scoutnet.engine import Mode
from scoutnet.experiments import (
    chi_square,
    chi_square_critical,
    ensemble_csv,
    exact_selection_distribution,
    profile_csv,
    run_ensemble,
    summary_json,
    tv_distance,
)
from scoutnet.lattice import build_intensity_star, build_slit_grid, build_star


class TestTvDistance:
    def test_identical_distributions(self):
        p = {1: 0.25, 2: 0.75}
        assert tv_distance(p, dict(p)) == 0.0

    def test_disjoint_mass(self):
        assert tv_distance({1: 1.0, 2: 0.0}, {1: 0.0, 2: 1.0}) == 1.0

    def test_quarter_shift(self):
        assert tv_distance({1: 0.25, 2: 0.75}, {1: 0.5, 2: 0.5}) == pytest.approx(
            0.25
        )

    def test_support_mismatch_rejected(self):
        with pytest.raises(ValueError, match="support mismatch"):
            tv_distance({1: 1.0}, {2: 1.0})

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError, match="sums to"):
            tv_distance({1: 0.5, 2: 0.4}, {1: 0.5, 2: 0.5})


class TestChiSquare:
    def test_exactly_proportional_counts(self):
        result = chi_square({1: 25, 2: 75}, {1: 0.25, 2: 0.75}, 100)
        assert result.statistic == 0.0
        assert result.dof == 1

    def test_sixty_forty_split(self):
        result = chi_square({1: 60, 2: 40}, {1: 0.5, 2: 0.5}, 100)
        assert result.statistic == pytest.approx(4.0)
        assert result.dof == 1

    def test_zero_probability_cells_excluded(self):
        result = chi_square({1: 0, 2: 100}, {1: 0.0, 2: 1.0}, 100)
        assert result.dof == 0
        assert result.statistic == 0.0

    def test_underpowered_flag(self):
        result = chi_square({1: 1, 2: 9}, {1: 0.1, 2: 0.9}, 10)
        assert result.underpowered

    def test_critical_value_for_two_dof(self):
        assert chi_square_critical(2, 0.99) == pytest.approx(9.21034, abs=1e-4)


class TestRunEnsemble:
    def test_single_detector_is_certain(self):
        lat = build_star(1, 2, [1.0])
        result = run_ensemble(lat, Mode.AGGREGATE, 500, 42)
        assert result.empirical == {lat.detectors[0]: 1.0}
        assert result.tv_distance == 0.0

    def test_symmetric_star_close_to_uniform(self):
        lat = build_star(2, 1, [1.0, 1.0])
        result = run_ensemble(lat, Mode.AGGREGATE, 10_000, 42)
        assert result.tv_distance < 0.02

    def test_counts_sum_to_trials_and_frequencies_to_one(self):
        lat = build_intensity_star([1.0, 1.0, 2.0])
        result = run_ensemble(lat, Mode.NAIVE, 2_000, 9)
        assert sum(result.counts.values()) == 2_000
        assert sum(result.empirical.values()) == pytest.approx(1.0, abs=1e-12)

    def test_reproducibility(self):
        lat = build_intensity_star([1.0, 3.0])
        a = run_ensemble(lat, Mode.AGGREGATE, 3_000, 123)
        b = run_ensemble(lat, Mode.AGGREGATE, 3_000, 123)
        assert a == b

    def test_parallel_invariance(self):
        lat = build_intensity_star([1.0, 1.0, 2.0])
        seq = run_ensemble(lat, Mode.AGGREGATE, 4_000, 77, jobs=1)
        par = run_ensemble(lat, Mode.AGGREGATE, 4_000, 77, jobs=4)
        assert seq == par

    def test_invalid_trials_rejected(self):
        lat = build_star(1, 1, [1.0])
        with pytest.raises(ValueError):
            run_ensemble(lat, Mode.AGGREGATE, 0, 1)


class TestExactSelection:
    def test_nested_tree_aggregate_matches_known_probabilities(self):
        lat, ids = nested_tree_lattice()
        dist = exact_selection_distribution(lat, Mode.AGGREGATE)
        assert dist[ids["d1"]] == pytest.approx(0.25, abs=1e-12)
        assert dist[ids["d2"]] == pytest.approx(0.25, abs=1e-12)
        assert dist[ids["d3"]] == pytest.approx(0.5, abs=1e-12)

    def test_nested_tree_naive_composes_multiplicatively(self):
        lat, ids = nested_tree_lattice()
        dist = exact_selection_distribution(lat, Mode.NAIVE)
        assert dist[ids["d1"]] == pytest.approx(1 / 6, abs=1e-12)
        assert dist[ids["d2"]] == pytest.approx(1 / 6, abs=1e-12)
        assert dist[ids["d3"]] == pytest.approx(2 / 3, abs=1e-12)

    def test_aggregate_equals_born_on_every_tree_instance(self):
        for name, lat in tree_merge_instances():
            born = oracle.born_distribution(oracle.lattice_amplitudes(lat))
            dist = exact_selection_distribution(lat, Mode.AGGREGATE)
            for det, p in born.entries.items():
                assert dist[det] == pytest.approx(p, abs=1e-12), name

    def test_single_lottery_modes_agree(self):
        lat = build_intensity_star([1.0, 1.0, 2.0])
        agg = exact_selection_distribution(lat, Mode.AGGREGATE)
        naive = exact_selection_distribution(lat, Mode.NAIVE)
        for det in lat.detectors:
            assert agg[det] == pytest.approx(naive[det], abs=1e-12)

    def test_distribution_sums_to_one(self):
        for _, lat in tree_merge_instances():
            for mode in Mode:
                dist = exact_selection_distribution(lat, mode)
                assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


class TestInterferenceProfile:
    def test_profile_aligns_with_oracle(self):
        lat = build_slit_grid(3, 9, [2, 6])
        profile = experiments.interference_profile(lat, Mode.AGGREGATE, 5_000, 42)
        assert len(profile.positions) == len(lat.detectors)
        assert list(profile.positions) == sorted(profile.positions)
        amps = oracle.lattice_amplitudes(lat)
        for det, intensity in zip(profile.detector_ids, profile.oracle_intensity):
            assert intensity == pytest.approx(abs(amps[det]) ** 2, abs=1e-12)

    def test_frequencies_sum_to_one(self):
        lat = build_slit_grid(3, 5, [1, 3])
        profile = experiments.interference_profile(lat, Mode.AGGREGATE, 2_000, 1)
        assert sum(profile.empirical_frequency) == pytest.approx(1.0, abs=1e-12)


class TestSerialization:
    def test_ensemble_csv_shape(self):
        lat = build_intensity_star([1.0, 3.0])
        result = run_ensemble(lat, Mode.AGGREGATE, 1_000, 5)
        text = ensemble_csv(result)
        lines = text.strip().split("\n")
        assert lines[0] == "detector_id,count,empirical,born,abs_error"
        assert len(lines) == 1 + len(lat.detectors)

    def test_profile_csv_shape(self):
        lat = build_slit_grid(3, 5, [1, 3])
        profile = experiments.interference_profile(lat, Mode.AGGREGATE, 500, 2)
        lines = profile_csv(profile).strip().split("\n")
        assert lines[0] == "screen_index,position,oracle_intensity,empirical_frequency"
        assert len(lines) == 1 + len(lat.detectors)

    def test_summary_json_byte_stable(self):
        lat = build_intensity_star([1.0, 3.0])
        a = summary_json(run_ensemble(lat, Mode.AGGREGATE, 1_000, 5))
        b = summary_json(run_ensemble(lat, Mode.AGGREGATE, 1_000, 5))
        assert a == b
        assert a.endswith("\n")
