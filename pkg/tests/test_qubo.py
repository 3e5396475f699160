"""Model assembly, energy evaluation, spin conversion, exhaustive search."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from apsel import analysis, qubo
from apsel.errors import ConfigError, SolverError

from _oracles import all_bitvectors, objective_by_hand
from conftest import make_instance


def _worked_instance():
    """Three variables, one correlated pair; small enough to expand by hand."""
    scores = np.array([1.0, 0.5, 0.0])
    mask = np.ones(3, dtype=bool)
    imp = analysis.ImportanceVector(
        metric=analysis.Metric.ENTROPY,
        raw_scores=scores.copy(),
        scores=scores,
        active_mask=mask,
    )
    values = np.eye(3)
    values[0, 1] = values[1, 0] = 0.8
    red = analysis.RedundancyMatrix(values=values, active_mask=mask)
    return imp, red


def test_build_expands_worked_three_variable_model():
    # coefficients by hand: linear_i = -alpha*s_i + eta*(1 - 2k),
    # pair_ij = (1 - alpha)*R_ij + 2*eta, offset = eta*k^2
    imp, red = _worked_instance()
    m = qubo.build(imp, red, alpha=0.5, eta=2.0, k=2)
    np.testing.assert_array_equal(m.linear, [-6.5, -6.25, -6.0])
    assert m.quadratic == {(0, 1): 4.4, (0, 2): 4.0, (1, 2): 4.0}
    assert m.offset == 8.0
    assert m.params["alpha"] == 0.5 and m.params["k"] == 2


def test_brute_force_solves_worked_model():
    imp, red = _worked_instance()
    m = qubo.build(imp, red, alpha=0.5, eta=2.0, k=2)
    result = qubo.brute_force(m)
    np.testing.assert_array_equal(result.selected, [0, 2])
    assert result.achieved_k == 2
    assert result.best_energy == -0.5


def test_energy_of_zero_vector_is_offset():
    m = qubo.QuboModel(linear=np.array([1.0, -2.0]), quadratic={(0, 1): 3.0},
                       offset=7.5)
    assert qubo.energy(m, np.zeros(2)) == 7.5


def test_energy_of_single_bit_adds_its_linear_term():
    m = qubo.QuboModel(linear=np.array([1.0, -2.0]), quadratic={(0, 1): 3.0},
                       offset=7.5)
    assert qubo.energy(m, np.array([1.0, 0.0])) == 8.5
    assert qubo.energy(m, np.array([0.0, 1.0])) == 5.5
    assert qubo.energy(m, np.ones(2)) == 7.5 + 1.0 - 2.0 + 3.0


def test_energy_batch_matches_per_row():
    rng = np.random.default_rng(0)
    imp, red = make_instance(6, seed=1)
    m = qubo.build(imp, red, alpha=0.8, eta=2.0, k=3)
    batch = rng.integers(0, 2, size=(16, 6)).astype(float)
    together = qubo.energy(m, batch)
    for row, e in zip(batch, together):
        assert abs(qubo.energy(m, row) - e) <= 1e-12


def test_energy_rejects_wrong_length():
    m = qubo.QuboModel(linear=np.zeros(3), quadratic={}, offset=0.0)
    with pytest.raises(ConfigError):
        qubo.energy(m, np.zeros(4))


@given(
    n=st.integers(min_value=2, max_value=9),
    seed=st.integers(min_value=0, max_value=10_000),
    alpha=st.sampled_from([0.0, 0.5, 0.8, 1.0]),
    eta=st.sampled_from([1.0, 2.0, 8.0]),
)
def test_built_model_matches_hand_objective_on_all_states(n, seed, alpha, eta):
    imp, red = make_instance(n, seed)
    k = 1 + seed % n
    m = qubo.build(imp, red, alpha=alpha, eta=eta, k=k)
    for x in all_bitvectors(n):
        want = objective_by_hand(imp.scores, red.values, alpha, eta, k, x)
        assert abs(qubo.energy(m, x) - want) <= 1e-9


def test_to_ising_single_variable():
    # x = (s+1)/2 turns x*(-1) into s*(-1/2) - 1/2
    m = qubo.QuboModel(linear=np.array([-1.0]), quadratic={}, offset=0.0)
    ising = qubo.to_ising(m)
    np.testing.assert_array_equal(ising.h, [-0.5])
    assert ising.offset == -0.5
    assert ising.energy(np.array([1.0])) == -1.0
    assert ising.energy(np.array([-1.0])) == 0.0


@given(n=st.integers(min_value=2, max_value=8),
       seed=st.integers(min_value=0, max_value=10_000))
def test_to_ising_agrees_state_by_state(n, seed):
    imp, red = make_instance(n, seed)
    m = qubo.build(imp, red, alpha=0.8, eta=2.0, k=max(1, n // 2))
    ising = qubo.to_ising(m)
    for x in all_bitvectors(n):
        spins = 2.0 * x - 1.0
        assert abs(qubo.energy(m, x) - ising.energy(spins)) <= 1e-9 * n * n


def test_brute_force_prefers_lexicographically_smallest_on_ties():
    # both single-bit states have energy -0.5; "01" sorts before "10"
    scores = np.array([0.5, 0.5])
    mask = np.ones(2, dtype=bool)
    imp = analysis.ImportanceVector(metric=analysis.Metric.ENTROPY,
                                    raw_scores=scores.copy(), scores=scores,
                                    active_mask=mask)
    red = analysis.RedundancyMatrix(values=np.eye(2), active_mask=mask)
    m = qubo.build(imp, red, alpha=1.0, eta=1.0, k=1)
    result = qubo.brute_force(m)
    np.testing.assert_array_equal(result.bitvector, [0, 1])
    np.testing.assert_array_equal(result.selected, [1])


def test_brute_force_attaches_ascending_spectrum_for_small_models():
    imp, red = _worked_instance()
    m = qubo.build(imp, red, alpha=0.5, eta=2.0, k=2)
    result = qubo.brute_force(m)
    assert result.spectrum.shape == (8,)
    assert np.all(np.diff(result.spectrum) >= 0.0)
    assert result.spectrum[0] == result.best_energy
    energies = sorted(qubo.energy(m, x) for x in all_bitvectors(3))
    np.testing.assert_allclose(result.spectrum, energies, atol=1e-12)


def test_brute_force_omits_spectrum_above_cutoff():
    n = qubo.SPECTRUM_MAX_N + 1
    m = qubo.QuboModel(linear=-np.ones(n), quadratic={}, offset=0.0)
    result = qubo.brute_force(m)
    assert result.spectrum is None
    assert result.achieved_k == n


def test_brute_force_refuses_oversized_models():
    m = qubo.QuboModel(linear=np.zeros(qubo.BRUTE_FORCE_MAX_N + 1),
                       quadratic={}, offset=0.0)
    with pytest.raises(SolverError):
        qubo.brute_force(m)


@given(n=st.integers(min_value=2, max_value=9),
       seed=st.integers(min_value=0, max_value=10_000))
def test_dominant_budget_penalty_forces_exactly_k_ones(n, seed):
    imp, red = make_instance(n, seed)
    k = 1 + seed % n
    # above this eta, moving off the budget always costs more than any
    # reward/penalty rearrangement can recover
    eta = 1.5 * n * max(float(imp.scores.max()), 1.0) + 1.0
    m = qubo.build(imp, red, alpha=0.8, eta=eta, k=k)
    assert qubo.brute_force(m).achieved_k == k


@given(seed=st.integers(min_value=0, max_value=10_000),
       scale=st.sampled_from([0.25, 2.0, 16.0]))
def test_common_positive_scaling_preserves_the_minimizer(seed, scale):
    n = 8
    imp, red = make_instance(n, seed)
    k = 1 + seed % n
    base = qubo.build(imp, red, alpha=0.8, eta=2.0, k=k)
    scaled_imp = analysis.ImportanceVector(
        metric=imp.metric, raw_scores=imp.raw_scores * scale,
        scores=imp.scores * scale, active_mask=imp.active_mask,
    )
    scaled_red = analysis.RedundancyMatrix(values=red.values * scale,
                                           active_mask=red.active_mask)
    scaled = qubo.build(scaled_imp, scaled_red, alpha=0.8, eta=2.0 * scale, k=k)
    np.testing.assert_array_equal(qubo.brute_force(base).bitvector,
                                  qubo.brute_force(scaled).bitvector)


def test_model_json_round_trip(tmp_path):
    imp, red = make_instance(7, seed=9)
    m = qubo.build(imp, red, alpha=0.8, eta=2.0, k=3)
    path = tmp_path / "model.json"
    m.save(path)
    again = qubo.QuboModel.load(path)
    np.testing.assert_array_equal(again.linear, m.linear)
    assert again.quadratic == m.quadratic
    assert again.offset == m.offset
    assert again.params == m.params
    doc = m.to_json_dict()
    assert set(doc) == {"n", "linear", "quadratic", "offset", "params"}


def test_build_records_inactive_variables_for_clamping():
    scores = np.array([0.9, 0.0, 0.4])
    mask = np.array([True, False, True])
    imp = analysis.ImportanceVector(metric=analysis.Metric.ENTROPY,
                                    raw_scores=scores.copy(), scores=scores,
                                    active_mask=mask)
    values = np.eye(3)
    values[1] = 0.0
    values[:, 1] = 0.0
    red = analysis.RedundancyMatrix(values=values, active_mask=mask)
    m = qubo.build(imp, red, alpha=0.5, eta=2.0, k=2)
    np.testing.assert_array_equal(m.clamped_indices, [1])
    # an inactive variable gets no reward, only the budget pressure
    assert m.linear[1] == 2.0 * (1 - 2 * 2)


def test_clamped_indices_validation():
    m = qubo.QuboModel(linear=np.zeros(3), quadratic={}, offset=0.0)
    np.testing.assert_array_equal(m.clamped_indices, [])
    m.params["clamped"] = [2, 0, 2]
    np.testing.assert_array_equal(m.clamped_indices, [0, 2])
    m.params["clamped"] = [3]
    with pytest.raises(ConfigError):
        m.clamped_indices


def test_build_validates_parameters():
    imp, red = _worked_instance()
    with pytest.raises(ConfigError):
        qubo.build(imp, red, alpha=1.5, eta=2.0, k=2)
    with pytest.raises(ConfigError):
        qubo.build(imp, red, alpha=0.5, eta=0.0, k=2)
    with pytest.raises(ConfigError):
        qubo.build(imp, red, alpha=0.5, eta=2.0, k=0)
    with pytest.raises(ConfigError):
        qubo.build(imp, red, alpha=0.5, eta=2.0, k=4)


def test_quadratic_keys_must_be_ordered_pairs():
    with pytest.raises(ConfigError):
        qubo.QuboModel(linear=np.zeros(3), quadratic={(2, 1): 1.0}, offset=0.0)
    with pytest.raises(ConfigError):
        qubo.QuboModel(linear=np.zeros(3), quadratic={(1, 3): 1.0}, offset=0.0)
