from fractions import Fraction

import numpy as np
import pytest

from pd_dual.common.errors import EnumerationLimitError
from pd_dual.common.objects import EMPTY, UNIT, Frequencies, Params, Partition
from pd_dual.partitions import enumerate_partitions
from pd_dual.sampling import eval_sampling_prob, ewens_pitman
from pd_dual.transition import (
    DensityEval,
    MCReport,
    TransitionSampler,
    bonferroni_summary,
    density_mixture,
    density_spectral,
    empirical_representation_check,
    kernel_p_n,
    kernel_p_sequence,
    kernel_q_m,
    representation_trend,
    sample_transition,
    split_urn_joint_law,
    transition_moment,
    transition_sampling_prob,
    verify_duality,
    verify_split_urn,
)
from pd_dual.urns import stick_breaking_sampler

from conftest import MC_SETTINGS


def P(*parts):
    return Partition(parts)


HALF = Params(0.5, 1.0)
HALF_EXACT = Params.of("1/2", "1")


def test_low_order_kernels(two_atoms, three_atoms):
    assert kernel_p_n(two_atoms, three_atoms, 0, HALF_EXACT) == 1
    assert kernel_p_n(two_atoms, three_atoms, 1, HALF_EXACT) == 1
    with pytest.raises(ValueError):
        kernel_p_n(two_atoms, three_atoms, -1, HALF_EXACT)


def test_kernel_is_symmetric(two_atoms, three_atoms):
    for n in range(2, 6):
        forward = kernel_p_n(two_atoms, three_atoms, n, HALF_EXACT)
        assert isinstance(forward, Fraction)
        assert forward == kernel_p_n(three_atoms, two_atoms, n, HALF_EXACT)


def test_second_spectral_kernel(two_atoms, three_atoms):
    theta = HALF_EXACT.theta
    p_2 = kernel_p_n(two_atoms, three_atoms, 2, HALF_EXACT)
    expected = (3 + theta) * (2 + theta) * (p_2 - 1) / 2
    assert kernel_q_m(two_atoms, three_atoms, 2, HALF_EXACT) == expected
    assert kernel_q_m(two_atoms, three_atoms, 4, HALF_EXACT) == kernel_q_m(
        three_atoms, two_atoms, 4, HALF_EXACT
    )
    with pytest.raises(ValueError):
        kernel_q_m(two_atoms, three_atoms, 1, HALF_EXACT)


def test_kernel_sequence_prefix(two_atoms, three_atoms):
    sequence = kernel_p_sequence(two_atoms, three_atoms, 3, HALF_EXACT)
    assert sequence[:2] == [1, 1]
    assert sequence[3] == kernel_p_n(two_atoms, three_atoms, 3, HALF_EXACT)


def test_kernel_integrates_to_one(two_atoms, rng):
    values = [kernel_p_n(two_atoms, stick_breaking_sampler(HALF, rng), 2, HALF) for _ in range(2000)]
    assert MCReport.from_samples("kernel mean", 1.0, values, MC_SETTINGS).passed


def test_density_forms_agree(two_atoms, three_atoms):
    mixture = density_mixture(two_atoms, three_atoms, 1.0, HALF, 12)
    spectral = density_spectral(two_atoms, three_atoms, 1.0, HALF, 12)
    assert mixture.form == "mixture" and spectral.form == "spectral"
    assert mixture.value == pytest.approx(spectral.value, abs=1e-6)
    assert mixture.tail_estimate >= 0 and spectral.tail_estimate >= 0
    assert mixture.to_json()["tail_bound"] == "loose"


def test_density_is_one_at_large_time(two_atoms, three_atoms):
    assert density_mixture(two_atoms, three_atoms, 50.0, HALF, 6).value == pytest.approx(1.0, abs=1e-9)
    assert density_spectral(two_atoms, three_atoms, 50.0, HALF, 6).value == pytest.approx(1.0, abs=1e-9)


def test_density_rejects_bad_input(two_atoms, three_atoms):
    with pytest.raises(ValueError):
        density_mixture(two_atoms, three_atoms, 0.0, HALF, 5)
    with pytest.raises(EnumerationLimitError):
        density_mixture(two_atoms, three_atoms, 1.0, HALF, 31)
    with pytest.raises(EnumerationLimitError):
        density_spectral(two_atoms, three_atoms, 1.0, HALF, 31)
    with pytest.raises(ValueError):
        DensityEval(value=1.0, truncation_order=3, tail_estimate=0.0, form="fourier")
    with pytest.raises(ValueError):
        DensityEval(value=1.0, truncation_order=3, tail_estimate=-1.0, form="mixture")


def test_transition_moment_limits(two_atoms):
    assert transition_moment(UNIT, two_atoms, 0.7, HALF) == pytest.approx(1.0)
    assert transition_moment(P(2), two_atoms, 1e-6, HALF) == pytest.approx(0.52, abs=1e-4)
    assert transition_moment(P(2, 1), two_atoms, 1e-6, HALF) == pytest.approx(0.24, abs=1e-4)
    assert transition_moment(P(2), two_atoms, 50.0, HALF) == pytest.approx(0.25, abs=1e-9)
    with pytest.raises(ValueError):
        transition_moment(EMPTY, two_atoms, 1.0, HALF)


def test_transition_sampling_law_sums_to_one(three_atoms):
    total = sum(transition_sampling_prob(eta, three_atoms, 0.5, HALF) for eta in enumerate_partitions(3))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_configuration_from_dust(rng):
    sampler = TransitionSampler(HALF, rng=rng)
    dust = Frequencies.from_atoms([])
    assert sampler.sample_configuration(dust, 5) == P(1, 1, 1, 1, 1)
    assert sampler.sample_configuration(Frequencies.from_atoms(["1"]), 4) == P(4)
    assert sampler.sample_configuration(Frequencies.from_atoms(["1/2", "1/2"]), 6).n == 6


@pytest.mark.slow
@pytest.mark.parametrize("eta", [P(1), P(2), P(2, 1)])
def test_duality(eta, two_atoms, rng):
    report = verify_duality(eta, two_atoms, 0.5, HALF, 4000, rng, settings=MC_SETTINGS)
    assert report.passed
    assert report.trials == 4000


def test_duality_is_reproducible_across_workers(two_atoms):
    first = verify_duality(P(2), two_atoms, 0.5, HALF, 400, np.random.default_rng(7), workers=2)
    second = verify_duality(P(2), two_atoms, 0.5, HALF, 400, np.random.default_rng(7), workers=2)
    assert first.estimate == second.estimate
    assert first.trials == 400


@pytest.mark.slow
def test_stationarity(rng):
    values = []
    for _ in range(2000):
        x = stick_breaking_sampler(HALF, rng)
        y = sample_transition(x, 0.3, HALF, rng).to_frequencies()
        values.append(sum(a * a for a in y.atoms))
    assert MCReport.from_samples("stationary second moment", 0.25, values, MC_SETTINGS).passed


def test_representation_single_ball(rng):
    report = empirical_representation_check(1, HALF, 50, rng)
    assert report.estimate == 1.0
    assert report.passed
    with pytest.raises(ValueError):
        empirical_representation_check(0, HALF, 10, rng)


@pytest.mark.slow
def test_representation_large_urn(rng):
    report = empirical_representation_check(200, Params.of("0", "1"), 2000, rng, MC_SETTINGS)
    assert report.passed
    assert report.details["limit"] == pytest.approx(0.5)
    assert 0 < report.details["largest_part_mean"] <= 1


@pytest.mark.slow
def test_representation_trend_decreases(rng):
    trend = representation_trend([2, 500], HALF, 300, rng, batches=3)
    assert trend[500] < trend[2]


def test_split_urn_joint_law_sums_to_one():
    law = split_urn_joint_law(3, 0.4, HALF)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)


def test_split_urn_joint_law_decouples_at_large_time():
    law = split_urn_joint_law(3, 50.0, HALF)
    for (first, second), value in law.items():
        expected = float(ewens_pitman(first, HALF)) * float(ewens_pitman(second, HALF))
        assert value == pytest.approx(expected, abs=1e-9)


@pytest.mark.slow
def test_split_urn_matches_joint_law(rng):
    report = verify_split_urn(2, 1.0, HALF, 20000, rng, settings=MC_SETTINGS)
    assert report.passed
    assert report.cells[0]["cell"] == "2|2"
    with pytest.raises(ValueError):
        verify_split_urn(7, 1.0, HALF, 10, rng)


def _report(name, p_value):
    return MCReport(name, 0.0, 0.0, 1.0, 100, 0.0, True, p_value)


def test_bonferroni_summary():
    summary = bonferroni_summary(
        [_report("a", 0.5), _report("b", 0.01), _report("c", 1e-4), _report("d", None)], family_alpha=0.08
    )
    assert summary.tests == 4
    assert summary.per_test_alpha == pytest.approx(0.02)
    assert summary.failures == ["b", "c"]
    assert summary.min_p_value == 1e-4
    assert not summary.passed
    assert bonferroni_summary([_report("a", 0.5)]).passed
    with pytest.raises(ValueError):
        bonferroni_summary([])


def test_chi_square_pools_sparse_cells():
    report = MCReport.from_counts("pooled", ["a", "b", "c"], [50, 48, 2], [0.5, 0.49, 0.01])
    assert report.details["pooled_cells"] == 1
    assert len(report.cells) == 3
    assert report.passed
    single = MCReport.from_counts("single", ["a"], [10], [1.0])
    assert single.passed and single.p_value == 1.0
    with pytest.raises(ValueError):
        MCReport.from_counts("nothing", ["a", "b"], [0, 0], [0.5, 0.5])


def test_mean_report_edge_cases():
    with pytest.raises(ValueError):
        MCReport.from_samples("empty", 1.0, [])
    assert MCReport.from_samples("exact", 1.0, [1.0, 1.0]).passed
    constant = MCReport.from_samples("constant", 1.0, [2.0, 2.0])
    assert not constant.passed
    assert constant.z_score == float("inf")
    assert constant.to_json()["pass"] is False


@pytest.mark.slow
def test_transition_at_a_small_time(rng):
    x = Frequencies.from_atoms(["0.7", "0.3"])
    t = 1e-3
    exact = transition_moment(P(2), x, t, HALF)
    assert exact == pytest.approx(0.58, abs=2e-3)
    values = [sum(a * a for a in sample_transition(x, t, HALF, rng).to_frequencies().atoms) for _ in range(1000)]
    assert MCReport.from_samples("second moment at t=1e-3", exact, values, MC_SETTINGS).passed


@pytest.mark.slow
def test_stationarity_of_small_samples(rng):
    draws = []
    for _ in range(2000):
        x = stick_breaking_sampler(HALF, rng)
        draws.append(sample_transition(x, 0.3, HALF, rng).to_frequencies())
    assert all(float(eval_sampling_prob(UNIT, y)) == pytest.approx(1.0) for y in draws)
    for n in (2, 3):
        for eta in enumerate_partitions(n):
            values = [float(eval_sampling_prob(eta, y)) for y in draws]
            report = MCReport.from_samples(f"stationary M{eta}", float(ewens_pitman(eta, HALF)), values, MC_SETTINGS)
            assert report.passed


@pytest.mark.slow
def test_split_urn_of_three(rng):
    report = verify_split_urn(3, 1.0, HALF, 20000, rng, settings=MC_SETTINGS)
    assert report.passed
    assert len(report.cells) == 9


@pytest.mark.slow
@pytest.mark.parametrize("eta", [P(2), P(2, 1)])
def test_duality_with_negative_theta(eta, three_atoms, rng):
    params = Params(0.5, -0.25)
    report = verify_duality(eta, three_atoms, 0.5, params, 4000, rng, settings=MC_SETTINGS)
    assert report.passed


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_mixture_truncation_is_stable(t, two_atoms, three_atoms):
    shorter = density_mixture(two_atoms, three_atoms, t, HALF, 20)
    longer = density_mixture(two_atoms, three_atoms, t, HALF, 25)
    assert shorter.value == pytest.approx(longer.value, rel=1e-9)


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_spectral_truncation_is_stable(t, two_atoms, three_atoms):
    shorter = density_spectral(two_atoms, three_atoms, t, HALF, 20)
    longer = density_spectral(two_atoms, three_atoms, t, HALF, 25)
    assert shorter.value == pytest.approx(longer.value, rel=1e-9)
