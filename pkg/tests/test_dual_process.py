import math
from collections import Counter

import pytest

from pd_dual.common.config import Settings
from pd_dual.common.errors import PrecisionExhausted
from pd_dual.common.objects import EMPTY, UNIT, Partition
from pd_dual.dual_process import death_process
from pd_dual.dual_process import (
    CoefficientMap,
    DeathPath,
    absorb_prob,
    absorbed_mass,
    block_count_moments,
    death_prob_finite,
    death_prob_infinite,
    death_rate,
    death_table,
    dual_transition,
    dual_transition_law,
    infinite_death_distribution,
    sample_block_count_from_infinity,
    sample_block_counts,
    simulate_death_path,
)
from pd_dual.transition import MCReport

from conftest import MC_SETTINGS


def P(*parts):
    return Partition(parts)


@pytest.mark.parametrize("theta", [-0.5, 0.0, 0.5, 1.0, 3.0])
@pytest.mark.parametrize("t", [0.1, 1.0, 2.5])
def test_two_lines_survive_exponentially(theta, t):
    assert death_prob_finite(2, 2, theta, t) == pytest.approx(math.exp(-(1 + theta) * t), rel=1e-13)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_no_loss_is_exponential(n):
    assert death_prob_finite(n, n, 1.0, 0.2) == pytest.approx(math.exp(-death_rate(n, 1.0) * 0.2), rel=1e-12)


@pytest.mark.parametrize("theta", [-0.5, 0.5, 2.0])
def test_chapman_kolmogorov(theta):
    n, s, t = 6, 0.3, 0.4
    for l in range(2, n + 1):
        composed = sum(
            death_prob_finite(n, m, theta, s) * death_prob_finite(m, l, theta, t) for m in range(l, n + 1)
        )
        assert death_prob_finite(n, l, theta, s + t) == pytest.approx(composed, abs=1e-8)


def test_table_rows():
    table = death_table(10, 0.5, 1.0)
    assert table.row_sum(10) == pytest.approx(1.0, abs=1e-10)
    assert all(0 <= value <= 1 for (_, l), value in table.values.items() if l >= 2)
    assert len(table.to_rows()) == 11
    assert table.max_precision >= Settings().start_precision


def test_infinite_table_row_sums_to_one():
    table = death_table(None, 1.0, 0.5)
    assert table.row_sum() == pytest.approx(1.0, abs=1e-10)
    assert table.to_rows()[0]["n"] == "inf"


@pytest.mark.parametrize("l", [2, 3, 4])
def test_infinite_start_is_the_limit(l):
    assert death_prob_finite(5000, l, 1.0, 1.0) == pytest.approx(death_prob_infinite(l, 1.0, 1.0), rel=1e-2)


@pytest.mark.parametrize("theta", [-0.5, 0.5, 1.0])
def test_infinite_distribution(theta):
    law = infinite_death_distribution(theta, 0.5)
    assert law.sum() == pytest.approx(1.0, abs=1e-10)
    assert law[0] == absorb_prob(theta, 0.5)
    assert absorb_prob(theta, 0.5) >= 0


def test_absorbed_mass():
    assert absorbed_mass(1, 0.5, 1.0) == 1.0
    expected = 1 - sum(death_prob_finite(4, l, 0.5, 1.0) for l in range(2, 5))
    assert absorbed_mass(4, 0.5, 1.0) == pytest.approx(expected)


def test_ill_conditioned_series_escalates_precision():
    value = death_prob_finite(30, 2, 0.5, 1e-4)
    assert 0 <= value < 1e-20
    with pytest.raises(PrecisionExhausted):
        death_prob_finite(30, 2, 0.5, 1e-4, Settings(max_precision=53))


def test_invalid_arguments():
    with pytest.raises(ValueError):
        death_prob_finite(3, 2, 0.5, 0.0)
    with pytest.raises(ValueError):
        death_prob_finite(3, 2, -1.0, 1.0)
    with pytest.raises(ValueError):
        death_prob_finite(3, 4, 0.5, 1.0)
    with pytest.raises(ValueError):
        death_prob_infinite(0, 0.5, 1.0)


def test_dual_transition_values():
    theta, t = 1.0, 0.5
    assert dual_transition(P(2, 1), P(2), theta, t) == pytest.approx(death_prob_finite(3, 2, theta, t) / 3)
    assert dual_transition(P(2, 1), P(3), theta, t) == 0.0
    assert dual_transition(P(2, 1), UNIT, theta, t) == absorbed_mass(3, theta, t)
    assert dual_transition(P(2, 1), P(2, 1), theta, t) == pytest.approx(math.exp(-death_rate(3, theta) * t))


def test_dual_transition_rejects_empty_target():
    with pytest.raises(ValueError):
        dual_transition(P(2, 1), EMPTY, 1.0, 0.5)


@pytest.mark.parametrize("eta", [P(2, 1), P(3, 2, 1), P(2, 2, 1, 1)])
def test_dual_transition_law_sums_to_one(eta):
    assert sum(dual_transition_law(eta, 0.5, 0.7).values()) == pytest.approx(1.0, abs=1e-12)


def test_death_path(rng):
    path = simulate_death_path(P(3, 2), 1.0, 100.0, rng)
    assert path.final_state == UNIT
    sizes = [state.n for state in path.states]
    assert sizes == list(range(5, 0, -1))
    assert path.jump_times == sorted(path.jump_times)
    assert path.state_at(0.0) == P(3, 2)
    assert path.state_at(100.0) == UNIT
    with pytest.raises(IndexError):
        path.state_at(101.0)
    assert DeathPath.from_json(path.dumps()).states == path.states


def test_death_path_validates_lengths():
    with pytest.raises(ValueError):
        DeathPath([0.1], [P(2)], 1.0)


def test_simulated_block_counts_match_table(rng):
    n0, theta, t, size = 5, 1.0, 0.5, 20000
    counts = Counter(sample_block_counts(n0, theta, t, size, rng).tolist())
    probabilities = [absorbed_mass(n0, theta, t)] + [death_prob_finite(n0, l, theta, t) for l in range(2, n0 + 1)]
    labels = [str(l) for l in range(1, n0 + 1)]
    observed = [counts.get(l, 0) for l in range(1, n0 + 1)]
    report = MCReport.from_counts("block counts", labels, observed, probabilities, MC_SETTINGS)
    assert report.passed


def test_block_count_from_infinity(rng):
    single = sample_block_count_from_infinity(1.0, 0.5, rng)
    assert isinstance(single, int) and single >= 1
    draws = sample_block_count_from_infinity(1.0, 0.5, rng, size=20000)
    assert draws.min() >= 1
    law = infinite_death_distribution(1.0, 0.5)
    counts = Counter(draws.tolist())
    report = MCReport.from_counts(
        "from infinity",
        [str(w) for w in range(1, len(law) + 1)],
        [counts.get(w, 0) for w in range(1, len(law) + 1)],
        law,
        MC_SETTINGS,
    )
    assert report.passed


def test_coefficient_map_canonical_keys():
    coefficients = CoefficientMap()
    coefficients[(1, 2)] = 3
    coefficients.add(P(2, 1), 1)
    assert coefficients == {P(2, 1): 4}
    assert coefficients.scaled(2)[P(2, 1)] == 8
    assert coefficients.combined(coefficients, sign=-1).pruned() == {}
    assert coefficients.matches(CoefficientMap().add(P(2, 1), 4))


def test_coefficient_map_reduced():
    coefficients = CoefficientMap().add(P(1, 1), 2).add(P(2), 2)
    assert coefficients.reduced() == {UNIT: 2}
    assert coefficients.reduced().constant() == 2


GRID_N = [2, 5, 10, 25, 50]
GRID_THETA = [-0.5, 0.0, 1.0, 5.0]
GRID_T = [0.01, 0.1, 1.0, 10.0]


@pytest.mark.parametrize("t", GRID_T)
@pytest.mark.parametrize("theta", GRID_THETA)
@pytest.mark.parametrize("n", GRID_N)
def test_table_rows_over_grid(n, theta, t):
    table = death_table(n, theta, t)
    survivors = [table.values[(n, l)] for l in range(2, n + 1)]
    assert all(0 <= value <= 1 for value in survivors)
    assert math.fsum(survivors) <= 1 + 1e-10
    assert absorbed_mass(n, theta, t) == pytest.approx(1 - math.fsum(survivors), abs=1e-10)
    assert table.row_sum(n) == pytest.approx(1.0, abs=1e-10)
    if theta >= 0:
        assert table.values[(n, 1)] >= 0


@pytest.mark.slow
@pytest.mark.parametrize("t", GRID_T)
@pytest.mark.parametrize("theta", GRID_THETA)
def test_chapman_kolmogorov_over_grid(theta, t):
    half = t / 2
    tables = {m: death_table(m, theta, half) for m in range(2, max(GRID_N) + 1)}
    for n in GRID_N:
        for l in range(2, n + 1):
            composed = sum(tables[n].values[(n, m)] * tables[m].values[(m, l)] for m in range(l, n + 1))
            assert death_prob_finite(n, l, theta, t) == pytest.approx(composed, abs=1e-8)


@pytest.mark.parametrize("theta", GRID_THETA)
def test_no_loss_over_a_short_time(theta):
    assert death_prob_finite(5, 5, theta, 1e-6) > 0.999


@pytest.mark.parametrize("theta", [-0.5, 1.0, 5.0])
@pytest.mark.parametrize("n", [3, 6])
def test_no_loss_decreases_in_time(n, theta):
    values = [death_prob_finite(n, n, theta, t) for t in GRID_T]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


@pytest.mark.parametrize("theta", [-0.5, 1.0, 5.0])
def test_lines_from_infinity_die_out(theta):
    assert death_prob_infinite(2, theta, 60.0) < 1e-10
    assert absorb_prob(theta, 60.0) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("theta", [-0.5, 0.0, 1.0, 5.0])
def test_normal_law_at_small_times(theta):
    t = 1e-3
    mean, variance = block_count_moments(theta, t)
    law = infinite_death_distribution(theta, t)
    assert law.sum() == pytest.approx(1.0, abs=1e-10)
    levels = range(1, len(law) + 1)
    law_mean = sum(w * p for w, p in zip(levels, law))
    law_variance = sum((w - law_mean) ** 2 * p for w, p in zip(levels, law))
    assert law_mean == pytest.approx(mean, rel=1e-3)
    assert law_variance == pytest.approx(variance, rel=1e-2)
    assert law[0] == absorb_prob(theta, t)
    assert death_prob_infinite(2, theta, t) == law[1]
    assert death_prob_infinite(len(law) + 50, theta, t) == 0.0


def test_block_count_moments():
    mean, variance = block_count_moments(1.0, 0.01)
    assert mean == pytest.approx(200.0)
    assert variance == pytest.approx(200.0 / 3)
    mean, variance = block_count_moments(3.0, 0.01)
    assert mean < 200.0
    assert variance == pytest.approx(mean / 3, rel=5e-2)
    with pytest.raises(ValueError):
        block_count_moments(0.5, 0.0)


@pytest.mark.parametrize("theta", [0.5, 1.0])
def test_normal_law_meets_the_series(theta):
    t = 0.05
    exact = infinite_death_distribution(theta, t, Settings())
    normal = infinite_death_distribution(theta, t, Settings(asymptotic_time=0.1))
    mean_of = lambda law: sum(w * p for w, p in enumerate(law, start=1))
    assert mean_of(normal) == pytest.approx(mean_of(exact), rel=1e-1)


def test_absorbed_mass_from_infinity_checked_once(rng, monkeypatch):
    calls = []
    clamp = death_process._clamp

    def counting(value, label, settings):
        calls.append(label)
        return clamp(value, label, settings)

    monkeypatch.setattr(death_process, "_clamp", counting)
    settings = Settings(tail_tolerance=1e-17)
    first = absorb_prob(1.0, 0.7, settings)
    for _ in range(50):
        sample_block_count_from_infinity(1.0, 0.7, rng, settings=settings)
    assert absorb_prob(1.0, 0.7, settings) == first
    assert sum(label.startswith("absorbed mass") for label in calls) == 1


@pytest.mark.slow
def test_death_paths_follow_dual_transition(rng):
    eta, theta, t, trials = P(3, 2, 1), 1.0, 0.5, 20000
    law = dual_transition_law(eta, theta, t)
    counts = Counter(simulate_death_path(eta, theta, t, rng).state_at(t) for _ in range(trials))
    assert set(counts) <= set(law)
    targets = sorted(law, key=lambda omega: omega.sort_key())
    report = MCReport.from_counts(
        "death paths from (3, 2, 1)",
        [str(omega) for omega in targets],
        [counts.get(omega, 0) for omega in targets],
        [law[omega] for omega in targets],
        MC_SETTINGS,
    )
    assert report.passed
