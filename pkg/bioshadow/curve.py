"""Marginal biodiversity recovery cost curves.

Each executed restoration step becomes one curve step priced at
``cost / delta_index``. Reading the curve at a target index gives the
target-compatible shadow price.
"""
import logging
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Union

import numpy as np
import pandas as pd
from joblib import Parallel
from joblib import delayed
from pydantic import BaseModel
from pydantic import Field
from pydantic import validator

from bioshadow.exceptions import DomainError
from bioshadow.exceptions import TargetUnreachable
from bioshadow.prioritizer.candidates import CandidateSet
from bioshadow.prioritizer.candidates import enumerate_candidates
from bioshadow.prioritizer.main import PrioritizerMode
from bioshadow.prioritizer.main import RestorationSequence
from bioshadow.prioritizer.main import RestorationStep
from bioshadow.prioritizer.main import run_prioritizer
from bioshadow.sar import EPSILON
from bioshadow.sar import ZConfig
from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.model import Scenario


__all__ = [
    "CURVE_COLUMNS",
    "CurveStep",
    "MbrcCurve",
    "ShadowPriceQuote",
    "SweepEntry",
    "build_curve",
    "shadow_price",
    "cost_to_target",
    "index_for_budget",
    "lower_convex_envelope",
    "combined_curve",
    "per_technology_curves",
    "sweep_z",
    "curve_frame",
    "write_curve_csv",
]


log = logging.getLogger(__name__)


CURVE_COLUMNS = ["step", "cell_id", "technology_id", "cost", "delta_index", "cumulative_index", "mbrc", "mbrc_per_pp"]

# Index units per percentage point.
PERCENTAGE_POINT = 100.0


class CurveStep(BaseModel):
    step: int = Field(..., ge=1)
    cell_id: int
    technology_id: str
    cost: float = Field(..., ge=0)
    delta_index: float = Field(..., gt=0)
    cumulative_index: float
    mbrc: float = Field(..., ge=0)

    class Config:
        allow_mutation = False

    @property
    def mbrc_per_pp(self) -> float:
        return self.mbrc / PERCENTAGE_POINT


class MbrcCurve(BaseModel):
    steps: List[CurveStep] = []
    z_used: float
    baseline_index: float
    smoothed: bool = False

    class Config:
        allow_mutation = False

    @validator("steps")
    def cumulative_index_increasing(cls, v):
        cum = [s.cumulative_index for s in v]
        if any(b <= a for a, b in zip(cum, cum[1:])):
            raise ValueError("cumulative_index must be strictly increasing")
        return v

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final_index(self) -> float:
        return self.steps[-1].cumulative_index if self.steps else self.baseline_index

    @property
    def total_cost(self) -> float:
        return float(self.cumulative_costs()[-1]) if self.steps else 0.0

    def cumulative_indices(self) -> np.ndarray:
        return np.array([s.cumulative_index for s in self.steps], dtype=np.float64)

    def cumulative_costs(self) -> np.ndarray:
        return np.cumsum([s.cost for s in self.steps], dtype=np.float64)


class ShadowPriceQuote(BaseModel):
    target: float = Field(..., gt=0, le=1)
    z: float
    price_per_unit_index: float = Field(..., ge=0)
    marginal_step: Optional[int] = None
    achieved_index: float
    smoothed: bool = False

    class Config:
        allow_mutation = False

    @property
    def price_per_percentage_point(self) -> float:
        return self.price_per_unit_index / PERCENTAGE_POINT

    def export(self) -> Dict[str, Union[float, int, None]]:
        return {
            "target": self.target,
            "z": self.z,
            "price_per_unit_index": self.price_per_unit_index,
            "price_per_pp": self.price_per_percentage_point,
            "marginal_step": self.marginal_step,
            "achieved_index": self.achieved_index,
        }


class SweepEntry(BaseModel):
    label: str
    z: float
    baseline_index: float
    max_index: float
    quote: Optional[ShadowPriceQuote] = None
    unreachable: bool = False

    def export(self) -> Dict[str, Union[str, float, int, bool, None]]:
        row = {"label": self.label, "z": self.z, "baseline_index": self.baseline_index, "max_index": self.max_index}
        quote = self.quote.export() if self.quote is not None else {
            "target": None, "price_per_unit_index": None, "price_per_pp": None,
            "marginal_step": None, "achieved_index": None,
        }
        quote.pop("z", None)
        row.update(quote)
        row["unreachable"] = self.unreachable
        return row


def build_curve(
        sequence: Union[RestorationSequence, Sequence[RestorationStep]],
        baseline: Optional[float] = None,
        z: Optional[float] = None,
) -> MbrcCurve:
    if isinstance(sequence, RestorationSequence):
        baseline = sequence.baseline_index if baseline is None else baseline
        z = sequence.z if z is None else z
        steps = sequence.steps
    else:
        steps = list(sequence)
    if baseline is None or z is None:
        raise ValueError("baseline and z are required when building a curve from bare steps")

    curve_steps = []
    for k, step in enumerate(steps, start=1):
        delta = step.marginal_benefit
        if delta <= 0:
            raise DomainError(f"Step {k} has non-positive index gain {delta!r}; the curve needs gains > 0")
        cost = step.action.cost
        curve_steps.append(CurveStep(
            step=k,
            cell_id=step.action.cell_id,
            technology_id=step.action.technology_id,
            cost=cost,
            delta_index=delta,
            cumulative_index=step.index_after,
            mbrc=cost / delta if cost > 0 else 0.0,
        ))
    return MbrcCurve(steps=curve_steps, z_used=z, baseline_index=baseline)


def _marginal_position(curve: MbrcCurve, target: float) -> Optional[int]:
    """Position of the first step reaching ``target``; ``None`` when the baseline already does."""
    if target > 1:
        raise DomainError(f"Target index must lie in (0, 1], got {target!r}")
    if curve.baseline_index >= target - EPSILON:
        return None
    position = int(np.searchsorted(curve.cumulative_indices(), target - EPSILON, side="left"))
    if position == len(curve.steps):
        raise TargetUnreachable(target, curve.final_index)
    return position


def shadow_price(curve: MbrcCurve, target: float) -> ShadowPriceQuote:
    """MBRC of the step whose cumulative index first reaches ``target``."""
    position = _marginal_position(curve, target)
    if position is None:
        return ShadowPriceQuote(
            target=target, z=curve.z_used, price_per_unit_index=0.0,
            achieved_index=curve.baseline_index, smoothed=curve.smoothed,
        )
    step = curve.steps[position]
    return ShadowPriceQuote(
        target=target,
        z=curve.z_used,
        price_per_unit_index=step.mbrc,
        marginal_step=step.step,
        achieved_index=step.cumulative_index,
        smoothed=curve.smoothed,
    )


def cost_to_target(curve: MbrcCurve, target: float) -> float:
    position = _marginal_position(curve, target)
    if position is None:
        return 0.0
    return float(curve.cumulative_costs()[position])


def index_for_budget(curve: MbrcCurve, budget: float) -> float:
    """Highest index reachable along the curve without the running cost exceeding ``budget``."""
    if budget < 0:
        raise DomainError(f"Budget cannot be negative, got {budget!r}")
    affordable = int(np.searchsorted(curve.cumulative_costs(), budget, side="right"))
    if affordable == 0:
        return curve.baseline_index
    return curve.steps[affordable - 1].cumulative_index


def lower_convex_envelope(curve: MbrcCurve) -> MbrcCurve:
    """Smoothed presentation curve with non-decreasing MBRC.

    Vertices are taken from the (cumulative index, cumulative cost) points,
    starting at (baseline, 0); each hull segment becomes one step labelled
    with the last original step it spans.
    """
    xs = [curve.baseline_index] + curve.cumulative_indices().tolist()
    ys = [0.0] + curve.cumulative_costs().tolist()
    hull: List[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
            if cross > 0:
                break
            hull.pop()
        hull.append(i)

    steps = []
    for a, b in zip(hull, hull[1:]):
        last = curve.steps[b - 1]
        delta, cost = xs[b] - xs[a], ys[b] - ys[a]
        steps.append(CurveStep(
            step=last.step,
            cell_id=last.cell_id,
            technology_id=last.technology_id,
            cost=cost,
            delta_index=delta,
            cumulative_index=xs[b],
            mbrc=cost / delta if cost > 0 else 0.0,
        ))
    return MbrcCurve(steps=steps, z_used=curve.z_used, baseline_index=curve.baseline_index, smoothed=True)


def combined_curve(
        scenario: Scenario,
        z: Optional[float] = None,
        mode: PrioritizerMode = PrioritizerMode.LAZY,
        *,
        threads: int = 1,
        candidates: Optional[CandidateSet] = None,
        habitat: Optional[SpeciesHabitat] = None,
) -> MbrcCurve:
    z = scenario.z.z_central if z is None else z
    habitat = habitat or SpeciesHabitat(scenario)
    if candidates is None:
        candidates = enumerate_candidates(scenario, habitat)
    return build_curve(run_prioritizer(candidates, habitat, z, mode, threads=threads))


def per_technology_curves(
        scenario: Scenario,
        z: Optional[float] = None,
        mode: PrioritizerMode = PrioritizerMode.LAZY,
        *,
        threads: int = 1,
        candidates: Optional[CandidateSet] = None,
        habitat: Optional[SpeciesHabitat] = None,
) -> Dict[str, MbrcCurve]:
    """One curve per technology, each from a prioritization restricted to that technology."""
    if not scenario.technologies:
        raise DomainError("Scenario has no technologies")
    z = scenario.z.z_central if z is None else z
    habitat = habitat or SpeciesHabitat(scenario)
    if candidates is None:
        candidates = enumerate_candidates(scenario, habitat)
    curves = {}
    for tech in scenario.technologies:
        restricted = candidates.restrict_technologies([tech.technology_id])
        sequence = run_prioritizer(restricted, habitat, z, mode, threads=threads)
        curves[tech.technology_id] = build_curve(sequence)
        log.info(f"Technology {tech.technology_id!r}: {len(sequence)} steps, final index {sequence.final_index!r}")
    return curves


def sweep_z(
        scenario: Scenario,
        zconfig: Optional[ZConfig] = None,
        target: float = None,
        mode: PrioritizerMode = PrioritizerMode.LAZY,
        *,
        threads: int = 1,
        candidates: Optional[CandidateSet] = None,
        habitat: Optional[SpeciesHabitat] = None,
) -> Dict[str, SweepEntry]:
    """Shadow price at ``target`` for the low, central and high exponent.

    Baseline index, sequence and curve are rebuilt per exponent. Candidate
    deltas are habitat counts and are shared.
    """
    if target is None:
        raise ValueError("sweep_z needs a target index")
    zconfig = zconfig or scenario.z
    habitat = habitat or SpeciesHabitat(scenario)
    if candidates is None:
        candidates = enumerate_candidates(scenario, habitat)

    labelled = zconfig.labelled()
    n_jobs = max(1, min(int(threads or 1), len(labelled)))
    sequences = Parallel(n_jobs=n_jobs, backend="threading")(
        delayed(run_prioritizer)(candidates, habitat, z, mode) for _, z in labelled
    )

    entries = {}
    for (label, z), sequence in zip(labelled, sequences):
        curve = build_curve(sequence)
        try:
            quote = shadow_price(curve, target)
        except TargetUnreachable as e:
            log.warning(f"Sweep entry {label} (z={z!r}): {e}")
            quote = None
        entries[label] = SweepEntry(
            label=label,
            z=z,
            baseline_index=sequence.baseline_index,
            max_index=sequence.final_index,
            quote=quote,
            unreachable=quote is None,
        )
    return entries


def curve_frame(curve: MbrcCurve) -> pd.DataFrame:
    rows = [{**s.dict(), "mbrc_per_pp": s.mbrc_per_pp} for s in curve.steps]
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def write_curve_csv(curve: MbrcCurve, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve_frame(curve).to_csv(path, index=False, lineterminator="\n")
    return path
