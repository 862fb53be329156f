from fractions import Fraction

import pytest
from hypothesis import given

from pd_dual.common.objects import EMPTY, UNIT, Frequencies, Params, Partition
from pd_dual.partitions import down_step_distribution, enumerate_partitions
from pd_dual.sampling import (
    as_frequencies,
    augmented_sum,
    check_consistency,
    eval_augmented_monomial,
    eval_sampling_prob,
    ewens_pitman,
    ewens_pitman_table,
    mean_augmented_monomial,
    sampling_prefactor,
    singleton_free_expansion,
    up_step_distribution,
    updown_kernel,
)

from pd_dual.transition import MCReport
from pd_dual.urns import stick_breaking_sampler

from conftest import MC_SETTINGS, PARAMS_GRID, partitions


def P(*parts):
    return Partition(parts)


@pytest.mark.parametrize("params", PARAMS_GRID)
@pytest.mark.parametrize("n", range(1, 13))
def test_ewens_pitman_sums_to_one(params, n):
    assert sum(ewens_pitman_table(n, params).values()) == 1


def test_ewens_pitman_is_exact():
    value = ewens_pitman(P(2, 1), Params.of("1/2", "1"))
    assert isinstance(value, Fraction)


def test_ewens_sampling_formula_two():
    params = Params.of("0", "1")
    assert ewens_pitman(P(2), params) == Fraction(1, 2)
    assert ewens_pitman(P(1, 1), params) == Fraction(1, 2)


def test_ewens_pitman_rejects_empty():
    with pytest.raises(ValueError):
        ewens_pitman(EMPTY, PARAMS_GRID[0])


@pytest.mark.parametrize("params", PARAMS_GRID)
@pytest.mark.parametrize("n", range(2, 13))
def test_consistency(params, n):
    report = check_consistency(n, params)
    assert report.consistent
    assert report.to_json()["consistent"]


def test_mean_augmented_monomial_second_moment():
    params = Params.of("1/2", "1")
    assert mean_augmented_monomial(P(2), params) == Fraction(1, 4)
    assert mean_augmented_monomial(UNIT, params) == 1
    assert mean_augmented_monomial(EMPTY, params) == 1


def test_mean_augmented_monomial_theta_zero():
    params = Params.of("1/2", "0")
    assert mean_augmented_monomial(P(1, 1), params) == Fraction(1, 2)


@pytest.mark.parametrize("params", PARAMS_GRID)
@pytest.mark.parametrize("n", range(1, 7))
def test_up_step_sums_to_one(params, n):
    for eta in enumerate_partitions(n):
        assert sum(up_step_distribution(eta, params).values()) == 1


@pytest.mark.parametrize("params", PARAMS_GRID)
@pytest.mark.parametrize("n", range(1, 12))
def test_detailed_balance(params, n):
    for eta in enumerate_partitions(n):
        for larger, up in up_step_distribution(eta, params).items():
            down = down_step_distribution(larger)[eta]
            assert ewens_pitman(eta, params) * up == ewens_pitman(larger, params) * down


@pytest.mark.parametrize("params", PARAMS_GRID)
def test_updown_kernel_rows(params):
    states = enumerate_partitions(4)
    for eta in states:
        assert sum(updown_kernel(eta, target, params) for target in states) == 1


def test_updown_kernel_rejects_size_change():
    with pytest.raises(ValueError):
        updown_kernel(P(2), P(2, 1), PARAMS_GRID[1])


def test_sampling_prefactor():
    assert sampling_prefactor(P(2, 1)) == 3
    assert sampling_prefactor(P(1, 1)) == 1
    assert sampling_prefactor(P(2, 2)) == 3


def test_singleton_free_expansion():
    assert singleton_free_expansion(P(1, 1)) == {UNIT: 1, P(2): -1}
    assert singleton_free_expansion(P(2, 1)) == {P(2): 1, P(3): -1}
    assert singleton_free_expansion(P(3, 2)) == {P(3, 2): 1}
    assert singleton_free_expansion(EMPTY) == {UNIT: 1}


def test_eval_second_moment(two_atoms):
    assert eval_augmented_monomial(P(2), Frequencies.from_atoms(["0.7", "0.3"])) == Fraction(29, 50)
    assert eval_augmented_monomial(P(2), two_atoms) == Fraction(13, 25)
    assert eval_augmented_monomial(P(2, 1), two_atoms) == Fraction(6, 25)


def test_eval_with_dust():
    x = Frequencies.from_atoms(["1/2", "1/4"])
    assert x.residual == Fraction(1, 4)
    assert eval_augmented_monomial(P(2, 1), x) == Fraction(11, 64)
    assert eval_augmented_monomial(P(2, 1), x, method="direct") == Fraction(11, 64)


@pytest.mark.parametrize("n", range(1, 7))
def test_elimination_matches_direct(n):
    x = Frequencies.from_atoms(["1/2", "1/5", "1/10"])
    for eta in enumerate_partitions(n):
        assert eval_augmented_monomial(eta, x) == eval_augmented_monomial(eta, x, method="direct")


def test_augmented_sum_long_partition():
    # seven parts goes through the monomial recursion instead of power sums
    atoms = tuple(Fraction(1, 8) for _ in range(8))
    eta = P(1, 1, 1, 1, 1, 1, 1)
    expected = Fraction(8 * 7 * 6 * 5 * 4 * 3 * 2, 8**7)
    assert augmented_sum(eta, atoms, exact=True) == expected
    assert augmented_sum(eta, atoms[:6], exact=True) == 0


@pytest.mark.parametrize("n", range(1, 6))
def test_sampling_probabilities_sum_to_one(n, three_atoms):
    dusty = Frequencies.from_atoms(["1/2", "1/4"])
    for x in (three_atoms, dusty):
        assert sum(eval_sampling_prob(eta, x, method="direct") for eta in enumerate_partitions(n)) == 1


def test_sampling_prob_all_dust():
    dust = Frequencies.from_atoms([])
    assert eval_sampling_prob(P(1, 1, 1), dust, method="direct") == 1
    assert eval_sampling_prob(P(2, 1), dust, method="direct") == 0


@given(partitions(max_n=6))
def test_float_and_exact_agree(eta):
    exact = Frequencies.from_atoms(["0.5", "0.3", "0.2"])
    floats = Frequencies.from_atoms([0.5, 0.3, 0.2])
    assert float(eval_augmented_monomial(eta, exact)) == pytest.approx(
        eval_augmented_monomial(eta, floats, method="direct"), abs=1e-12
    )


def test_unknown_method(two_atoms):
    with pytest.raises(ValueError):
        eval_augmented_monomial(P(2), two_atoms, method="magic")


def test_as_frequencies_rejects_other_types():
    with pytest.raises(TypeError):
        as_frequencies([0.5, 0.5])


@pytest.mark.slow
@pytest.mark.parametrize("params", [Params.of("1/2", "1"), Params.of("0", "2"), Params.of("1/2", "-1/4")])
def test_ewens_pitman_is_the_mean_sampling_probability(params, rng):
    samples = [stick_breaking_sampler(params, rng).to_frequencies() for _ in range(4000)]
    for eta in enumerate_partitions(3):
        values = [float(eval_sampling_prob(eta, y)) for y in samples]
        report = MCReport.from_samples(f"M_3{eta}", float(ewens_pitman(eta, params)), values, MC_SETTINGS)
        assert report.passed
