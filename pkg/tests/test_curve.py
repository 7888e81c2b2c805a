import numpy as np
import pandas as pd
import pytest

from bioshadow.curve import CURVE_COLUMNS
from bioshadow.curve import build_curve
from bioshadow.curve import combined_curve
from bioshadow.curve import cost_to_target
from bioshadow.curve import curve_frame
from bioshadow.curve import index_for_budget
from bioshadow.curve import lower_convex_envelope
from bioshadow.curve import per_technology_curves
from bioshadow.curve import shadow_price
from bioshadow.curve import sweep_z
from bioshadow.curve import write_curve_csv
from bioshadow.exceptions import DomainError
from bioshadow.exceptions import TargetUnreachable
from bioshadow.prioritizer import build_sequence
from bioshadow.sar import ZConfig
from bioshadow.scenario import gen_synthetic
from conftest import ARABLE
from conftest import FOREST
from conftest import GRASSLAND
from conftest import PASTURE
from conftest import build_scenario
from conftest import species
from conftest import technology


MBRC_1 = 10 / 0.5 ** 0.25
MBRC_2 = 20 / (1 - 0.5 ** 0.25)


@pytest.fixture
def two_cell_curve(two_cell_scenario):
    return build_curve(build_sequence(two_cell_scenario, z=0.25))


def test_two_cell_curve(two_cell_curve):
    assert len(two_cell_curve) == 2
    first, second = two_cell_curve.steps
    assert first.mbrc == pytest.approx(11.892, abs=1e-3)
    assert second.mbrc == pytest.approx(125.70, abs=1e-2)
    assert first.mbrc == pytest.approx(MBRC_1, rel=1e-12)
    assert second.mbrc_per_pp == pytest.approx(MBRC_2 / 100, rel=1e-12)
    assert first.cumulative_index == pytest.approx(0.5 ** 0.25)
    assert two_cell_curve.total_cost == 30.0
    assert two_cell_curve.final_index == pytest.approx(1.0)


def test_curve_identity_per_step(synthetic_scenario):
    curve = build_curve(build_sequence(synthetic_scenario))
    for step, source in zip(curve.steps, build_sequence(synthetic_scenario).steps):
        assert step.delta_index == source.marginal_benefit
        assert step.mbrc == (step.cost / step.delta_index if step.cost > 0 else 0.0)
    cumulative = curve.cumulative_indices()
    assert (np.diff(cumulative) > 0).all()


@pytest.mark.parametrize(
    ["target", "expected_price", "expected_step"],
    [
        (0.5, MBRC_1, 1),
        (0.5 ** 0.25, MBRC_1, 1),
        (0.9, MBRC_2, 2),
        (1.0, MBRC_2, 2),
    ]
)
def test_shadow_price_lookup(two_cell_curve, target, expected_price, expected_step):
    quote = shadow_price(two_cell_curve, target)
    assert quote.price_per_unit_index == pytest.approx(expected_price, rel=1e-12)
    assert quote.marginal_step == expected_step
    assert quote.achieved_index >= target - 1e-12
    assert quote.z == 0.25


def test_shadow_price_at_baseline(three_by_three_scenario):
    curve = build_curve(build_sequence(three_by_three_scenario, z=0.25))
    quote = shadow_price(curve, curve.baseline_index)
    assert quote.price_per_unit_index == 0.0
    assert quote.marginal_step is None
    assert cost_to_target(curve, curve.baseline_index) == 0.0


def test_shadow_price_unreachable():
    scenario = build_scenario(
        current=[[ARABLE, ARABLE]],
        potential=[[FOREST, FOREST]],
        species_list=[species("sp1", [FOREST], [0, 1])],
        technologies=[technology("arable_to_forest", [ARABLE], FOREST)],
        costs={"cost_arable_to_forest": [[10.0, -9999.0]]},
    )
    curve = build_curve(build_sequence(scenario, z=0.25))
    with pytest.raises(TargetUnreachable) as e:
        shadow_price(curve, 0.95)
    assert e.value.max_index == pytest.approx(0.5 ** 0.25)


def test_shadow_price_rejects_target_above_one(two_cell_curve):
    with pytest.raises(DomainError):
        shadow_price(two_cell_curve, 1.2)


def test_cost_to_target_and_budget(two_cell_curve):
    assert cost_to_target(two_cell_curve, 0.5) == 10.0
    assert cost_to_target(two_cell_curve, 0.9) == 30.0
    assert index_for_budget(two_cell_curve, 5.0) == 0.0
    assert index_for_budget(two_cell_curve, 10.0) == pytest.approx(0.5 ** 0.25)
    assert index_for_budget(two_cell_curve, 1e9) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        index_for_budget(two_cell_curve, -1.0)


@pytest.mark.parametrize("factor", [0.5, 3, 1000])
def test_cost_scaling(synthetic_scenario, factor):
    base = build_sequence(synthetic_scenario)
    scaled = build_sequence(synthetic_scenario.scale_costs(factor))
    assert [(s.action.cell_id, s.action.technology_id) for s in base.steps] == [
        (s.action.cell_id, s.action.technology_id) for s in scaled.steps
    ]
    base_curve, scaled_curve = build_curve(base), build_curve(scaled)
    for a, b in zip(base_curve.steps, scaled_curve.steps):
        assert b.mbrc == pytest.approx(a.mbrc * factor, rel=1e-12)
    target = base_curve.steps[len(base_curve) // 2].cumulative_index
    assert shadow_price(scaled_curve, target).price_per_unit_index == pytest.approx(
        shadow_price(base_curve, target).price_per_unit_index * factor, rel=1e-12
    )


def test_lower_convex_envelope(synthetic_scenario):
    curve = build_curve(build_sequence(synthetic_scenario, z=0.25))
    smooth = lower_convex_envelope(curve)
    assert smooth.smoothed
    mbrc = [s.mbrc for s in smooth.steps]
    assert all(b >= a for a, b in zip(mbrc, mbrc[1:]))
    assert smooth.final_index == curve.final_index
    assert smooth.total_cost == pytest.approx(curve.total_cost, rel=1e-12)
    # The hull never lies above the raw curve at its own vertices.
    raw = dict(zip(curve.cumulative_indices().tolist(), curve.cumulative_costs().tolist()))
    for x, y in zip(smooth.cumulative_indices().tolist(), smooth.cumulative_costs().tolist()):
        assert y == pytest.approx(raw[x], rel=1e-9)
    assert shadow_price(smooth, curve.final_index).smoothed


def test_envelope_of_convex_curve_is_unchanged(two_cell_curve):
    smooth = lower_convex_envelope(two_cell_curve)
    assert [s.step for s in smooth.steps] == [1, 2]
    assert [s.mbrc for s in smooth.steps] == pytest.approx([MBRC_1, MBRC_2], rel=1e-12)


def dominance_scenario():
    """B converts the same cells as A, with the same habitat effect, at half the price."""
    rng = np.random.default_rng(5)
    n = 8
    costs = np.round(rng.uniform(1.0, 20.0, size=(1, n)), 3)
    return build_scenario(
        current=[[ARABLE] * n],
        potential=[[FOREST] * n],
        species_list=[
            species("sp1", [FOREST, GRASSLAND], range(5)),
            species("sp2", [FOREST, GRASSLAND], range(3, n)),
        ],
        technologies=[technology("a_forest", [ARABLE], FOREST), technology("b_grassland", [ARABLE], GRASSLAND)],
        costs={"cost_a_forest": costs, "cost_b_grassland": costs / 2},
    )


def test_combined_equals_dominant_technology():
    scenario = dominance_scenario()
    combined = combined_curve(scenario, 0.25)
    curves = per_technology_curves(scenario, 0.25)
    assert set(curves) == {"a_forest", "b_grassland"}
    assert [s.technology_id for s in combined.steps] == ["b_grassland"] * len(combined)
    assert combined.steps == curves["b_grassland"].steps


def disjoint_scenario(seed):
    """Each technology has its own cells and each cell its own species."""
    rng = np.random.default_rng(seed)
    n = 8
    held = rng.integers(0, 6, size=n)
    current = [ARABLE] * 4 + [PASTURE] * 4 + [FOREST] * int(held.max())
    species_list = [species(f"s{i}", [FOREST], [i] + list(range(n, n + int(k)))) for i, k in enumerate(held)]
    cost = np.round(rng.uniform(1.0, 20.0, size=(1, len(current))), 4)
    return build_scenario(
        current=[current],
        potential=[[FOREST] * len(current)],
        species_list=species_list,
        technologies=[technology("arable", [ARABLE], FOREST), technology("pasture", [PASTURE], FOREST)],
        costs={"cost_arable": cost, "cost_pasture": cost},
    )


@pytest.mark.parametrize("seed", range(8))
def test_combined_dominates_single_technology(seed):
    scenario = disjoint_scenario(seed)
    combined = combined_curve(scenario, 0.25)
    for tech_curve in per_technology_curves(scenario, 0.25).values():
        for step in combined.steps:
            target = step.cumulative_index
            if target > tech_curve.final_index + 1e-12:
                continue
            assert cost_to_target(combined, target) <= cost_to_target(tech_curve, target) + 1e-9


def test_per_technology_needs_technologies(two_cell_scenario):
    with pytest.raises(DomainError):
        per_technology_curves(two_cell_scenario.restrict_technologies([]))


def test_sweep_degenerate_z(synthetic_scenario):
    z = ZConfig(z_low=0.25, z_central=0.25, z_high=0.25)
    target = build_sequence(synthetic_scenario, z=0.25).steps[3].index_after
    entries = sweep_z(synthetic_scenario, z, target)
    assert list(entries) == ["low", "central", "high"]
    quotes = [entries[k].quote for k in entries]
    assert quotes[0] == quotes[1] == quotes[2]


def test_sweep_marks_unreachable(two_cell_scenario):
    entries = sweep_z(two_cell_scenario, ZConfig(), 0.5, threads=3)
    assert all(not e.unreachable for e in entries.values())
    restricted = sweep_z(two_cell_scenario.restrict_technologies([]), ZConfig(), 0.5)
    assert all(e.unreachable and e.quote is None for e in restricted.values())
    assert restricted["low"].export()["price_per_pp"] is None


def test_sweep_single_species_full_restoration():
    scenario = build_scenario(
        current=[[ARABLE, ARABLE, ARABLE, ARABLE]],
        potential=[[FOREST] * 4],
        species_list=[species("sp1", [FOREST], range(4))],
        technologies=[technology("to_forest", [ARABLE], FOREST)],
        costs={"cost_to_forest": [[4.0, 1.0, 3.0, 2.0]]},
    )
    entries = sweep_z(scenario, ZConfig(), 1.0)
    totals = {
        label: cost_to_target(build_curve(build_sequence(scenario, z=e.z)), 1.0) for label, e in entries.items()
    }
    assert set(totals.values()) == {10.0}
    prices = [entries[k].quote.price_per_unit_index for k in ("low", "central", "high")]
    assert len(set(prices)) == 3
    assert prices[0] == pytest.approx(4.0 / (1 - 0.75 ** 0.15))


def test_curve_frame(two_cell_curve, tmp_path):
    frame = curve_frame(two_cell_curve)
    assert list(frame.columns) == CURVE_COLUMNS
    assert frame["step"].tolist() == [1, 2]
    path = write_curve_csv(two_cell_curve, tmp_path / "out" / "curve.csv")
    loaded = pd.read_csv(path)
    assert loaded["cell_id"].tolist() == [0, 1]
    assert loaded["mbrc"].tolist() == pytest.approx([MBRC_1, MBRC_2], rel=1e-12)


@pytest.mark.slow
def test_price_pattern_on_large_fixture():
    scenario = gen_synthetic(
        2024, rows=200, cols=200, n_species=50, n_technologies=3, loss_species_share=0.0
    )
    curve = build_curve(build_sequence(scenario, z=0.25))
    span = curve.final_index - curve.baseline_index
    targets = [curve.baseline_index + f * span for f in (0.2, 0.4, 0.6, 0.8)]
    prices = [shadow_price(curve, t).price_per_unit_index for t in targets]
    assert all(b > a for a, b in zip(prices, prices[1:]))

    sequences = {z: build_sequence(scenario, z=z) for z in (0.15, 0.25, 0.35)}
    top_baseline = max(s.baseline_index for s in sequences.values())
    lowest_max = min(s.final_index for s in sequences.values())
    target = top_baseline + 0.5 * (lowest_max - top_baseline)
    by_z = [shadow_price(build_curve(sequences[z]), target).price_per_unit_index for z in (0.15, 0.25, 0.35)]
    assert all(b >= a for a, b in zip(by_z, by_z[1:]))
