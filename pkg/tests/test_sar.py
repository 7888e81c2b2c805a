import math

import pytest
from pydantic import ValidationError

from bioshadow.exceptions import DomainError
from bioshadow.prioritizer.candidates import CandidateAction
from bioshadow.sar import PersistenceIndex
from bioshadow.sar import SpeciesState
from bioshadow.sar import ZConfig
from bioshadow.sar import biodiversity_index
from bioshadow.sar import cell_marginal_benefit
from bioshadow.sar import delta_persistence_array
from bioshadow.sar import discrete_delta_persistence
from bioshadow.sar import marginal_persistence_derivative
from bioshadow.sar import persistence
from bioshadow.sar import persistence_array


def state(H, OH=100, species_id="sp"):
    return SpeciesState(species_id=species_id, H=H, OH=OH)


@pytest.mark.parametrize(
    ["H", "OH", "z", "expected"],
    [
        (100, 100, 0.25, 1.0),
        (0, 100, 0.25, 0.0),
        (50, 100, 0.25, 0.8408964152537145),
        (7, 7, 0.15, 1.0),
    ]
)
def test_persistence(H, OH, z, expected):
    assert persistence(state(H, OH), z) == pytest.approx(expected, abs=1e-12)


def test_persistence_boundaries_are_exact():
    assert persistence(state(100), 0.35) == 1.0
    assert persistence(state(0), 0.35) == 0.0


@pytest.mark.parametrize("z", [0.0, 1.0, -0.1, 1.5])
def test_persistence_rejects_z(z):
    with pytest.raises(DomainError):
        persistence(state(50), z)


def test_species_state_rejects_h_above_oh():
    with pytest.raises(ValidationError):
        SpeciesState(species_id="sp", H=101, OH=100)


def test_species_state_rejects_zero_oh():
    with pytest.raises(ValidationError):
        SpeciesState(species_id="sp", H=0, OH=0)


@pytest.mark.parametrize(
    ["z_low", "z_central", "z_high"],
    [
        (0.3, 0.25, 0.35),
        (0.15, 0.25, 1.0),
        (0.0, 0.25, 0.35),
    ]
)
def test_zconfig_ordering(z_low, z_central, z_high):
    with pytest.raises(ValidationError):
        ZConfig(z_low=z_low, z_central=z_central, z_high=z_high)


def test_zconfig_defaults():
    assert ZConfig().labelled() == [("low", 0.15), ("central", 0.25), ("high", 0.35)]


@pytest.mark.parametrize("z", [0.15, 0.25, 0.35])
def test_persistence_monotone_in_h_and_z(z):
    values = [persistence(state(h), z) for h in range(0, 101)]
    assert all(b > a for a, b in zip(values, values[1:]))
    assert persistence(state(40), z) > persistence(state(40), z + 0.1)


def test_biodiversity_index_two_extremes():
    index = biodiversity_index([state(100, species_id="a"), state(0, species_id="b")], 0.25)
    assert index == PersistenceIndex(value=0.5, n_species=2)
    assert index.extinction_risk == 0.5


def test_biodiversity_index_three_species():
    states = [state(25, species_id="a"), state(50, species_id="b"), state(100, species_id="c")]
    expected = (0.25 ** 0.25 + 0.5 ** 0.25 + 1.0) / 3
    assert biodiversity_index(states, 0.25).value == pytest.approx(expected, abs=1e-12)


def test_biodiversity_index_full_restoration():
    assert biodiversity_index([state(100), state(3, 3)], 0.35).value == 1.0


def test_biodiversity_index_empty():
    with pytest.raises(DomainError):
        biodiversity_index([], 0.25)


def test_biodiversity_index_concatenation_is_weighted_mean():
    first = [state(h, species_id=f"a{h}") for h in (10, 20, 90)]
    second = [state(h, species_id=f"b{h}") for h in (5, 55)]
    combined = biodiversity_index(first + second, 0.25).value
    weighted = (3 * biodiversity_index(first, 0.25).value + 2 * biodiversity_index(second, 0.25).value) / 5
    assert combined == pytest.approx(weighted, abs=1e-12)


@pytest.mark.parametrize("z", [0.15, 0.25, 0.35])
@pytest.mark.parametrize("H", [1, 10, 50, 99])
def test_derivative_matches_finite_difference(H, z):
    h = 1e-6 * H
    fd = ((H + h) / 100) ** z - ((H - h) / 100) ** z
    fd /= 2 * h
    derivative = marginal_persistence_derivative(state(H), z)
    assert abs(derivative - fd) / derivative <= 1e-5


def test_derivative_examples():
    assert marginal_persistence_derivative(state(100), 0.25) == pytest.approx(0.25 / 100)
    assert marginal_persistence_derivative(state(50), 0.25) == pytest.approx(0.004204, abs=1e-6)
    assert marginal_persistence_derivative(state(25), 0.25) > marginal_persistence_derivative(state(75), 0.25)


def test_derivative_singular_at_zero():
    with pytest.raises(DomainError):
        marginal_persistence_derivative(state(0), 0.25)


@pytest.mark.parametrize(
    ["H", "dH", "expected"],
    [
        (99, 1, 1 - 0.99 ** 0.25),
        (50, 0, 0.0),
        (1, -1, -(0.01 ** 0.25)),
    ]
)
def test_discrete_delta(H, dH, expected):
    assert discrete_delta_persistence(state(H), 0.25, dH) == pytest.approx(expected, abs=1e-12)


def test_discrete_delta_reference_values():
    assert discrete_delta_persistence(state(99), 0.25, 1) == pytest.approx(0.002509, abs=1e-6)
    assert discrete_delta_persistence(state(1), 0.25, -1) == pytest.approx(-0.316228, abs=1e-6)


@pytest.mark.parametrize(["H", "dH"], [(100, 1), (0, -1), (60, 41)])
def test_discrete_delta_out_of_range(H, dH):
    with pytest.raises(DomainError):
        discrete_delta_persistence(state(H), 0.25, dH)


def test_discrete_delta_concave():
    gains = [discrete_delta_persistence(state(h), 0.25, 1) for h in range(0, 100)]
    assert all(b <= a for a, b in zip(gains, gains[1:]))


def action(**deltas):
    return CandidateAction(cell_id=0, technology_id="t", cost=1.0, species_deltas=deltas)


def test_cell_marginal_benefit_no_species():
    assert cell_marginal_benefit(action(), {}, 0.25, 3) == 0.0


def test_cell_marginal_benefit_halved_by_n():
    states = {"a": state(99, species_id="a"), "b": state(10, species_id="b")}
    assert cell_marginal_benefit(action(a=1), states, 0.25, 2) == pytest.approx(0.001255, abs=1e-6)


def test_cell_marginal_benefit_loss():
    states = {"a": state(1, species_id="a")}
    assert cell_marginal_benefit(action(a=-1), states, 0.25, 1) == pytest.approx(-0.316228, abs=1e-6)


def test_cell_marginal_benefit_additive():
    states = {s: state(h, species_id=s) for s, h in [("a", 10), ("b", 50), ("c", 80)]}
    whole = cell_marginal_benefit(action(a=1, b=-1, c=1), states, 0.25, 3)
    parts = cell_marginal_benefit(action(a=1), states, 0.25, 3)
    parts += cell_marginal_benefit(action(b=-1, c=1), states, 0.25, 3)
    assert whole == pytest.approx(parts, abs=1e-14)


def test_cell_marginal_benefit_unknown_species():
    with pytest.raises(DomainError):
        cell_marginal_benefit(action(zz=1), {}, 0.25, 1)


def test_arrays_agree_with_scalars():
    assert persistence_array([50], [100], 0.25)[0] == pytest.approx(persistence(state(50), 0.25))
    assert delta_persistence_array([99], [100], [1], 0.25)[0] == pytest.approx(
        discrete_delta_persistence(state(99), 0.25, 1)
    )
    assert math.isclose(persistence_array([0], [5], 0.3)[0], 0.0)
