"""Walk through the pricing pipeline on a synthetic landscape.

Run with ``python example.py``. Nothing is written to disk.
"""
import logging

from bioshadow import ShadowPricer
from bioshadow import gen_synthetic
from bioshadow.cba import FootprintChange
from bioshadow.cba import ProjectFootprint
from bioshadow.curve import cost_to_target
from bioshadow.curve import index_for_budget
from bioshadow.curve import lower_convex_envelope


logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


scenario = gen_synthetic(2024, rows=40, cols=40, n_species=20, n_technologies=3, loss_species_share=0.0)
pricer = ShadowPricer(scenario)

curve = pricer.curve()
print(f"Baseline index {curve.baseline_index:.4f}, best achievable {curve.final_index:.4f}")
print(f"{len(curve.steps)} restoration steps, total cost {curve.total_cost:,.1f}")

# Targets between the baseline and the ceiling of the curve.
targets = [curve.baseline_index + f * (curve.final_index - curve.baseline_index) for f in (0.25, 0.5, 0.75, 0.95)]
for target in targets:
    quote = pricer.shadow_price(target)
    print(
        f"target {target:.4f}: {quote.price_per_percentage_point:,.2f} per pp"
        f" (step {quote.marginal_step}), cost to reach {cost_to_target(curve, target):,.1f}"
    )

budget = 0.1 * curve.total_cost
print(f"A budget of {budget:,.1f} buys an index of {index_for_budget(curve, budget):.4f}")

smoothed = lower_convex_envelope(curve)
print(f"Smoothed curve keeps {len(smoothed.steps)} of {len(curve.steps)} steps")

for label, entry in pricer.sweep(targets[1]).items():
    if entry.unreachable:
        print(f"z={entry.z} ({label}): target unreachable, max {entry.max_index:.4f}")
    else:
        print(f"z={entry.z} ({label}): {entry.quote.price_per_percentage_point:,.2f} per pp")

# A road that paves over the first ten cells of the top row.
road = ProjectFootprint(
    label="road",
    changes=[FootprintChange(cell_id=i, forced_class=1401) for i in range(10)],
)
appraisal = pricer.appraise(road, targets[1])
print(f"{appraisal.label}: {appraisal.delta_index_pp:+.5f} pp, priced at {appraisal.total_cost:,.2f}")
