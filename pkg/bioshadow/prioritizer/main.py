import heapq
import logging
import math
from enum import Enum
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from joblib import Parallel
from joblib import delayed
from pydantic import BaseModel
from typing_extensions import Literal

from bioshadow.exceptions import DomainError
from bioshadow.exceptions import TargetUnreachable
from bioshadow.prioritizer.candidates import CandidateAction
from bioshadow.prioritizer.candidates import CandidateSet
from bioshadow.prioritizer.candidates import applicable_mask
from bioshadow.prioritizer.candidates import cost_effectiveness
from bioshadow.prioritizer.candidates import enumerate_candidates
from bioshadow.prioritizer.state import GainTable
from bioshadow.prioritizer.state import HabitatState
from bioshadow.sar import EPSILON
from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.model import Scenario
from bioshadow.utils.misc import even_chunks


__all__ = [
    "PrioritizerMode",
    "RestorationStep",
    "RestorationSequence",
    "Prioritizer",
    "ExactPrioritizer",
    "LazyPrioritizer",
    "build_sequence",
    "run_prioritizer",
    "restored_classes",
]


log = logging.getLogger(__name__)


class PrioritizerMode(str, Enum):
    EXACT = "exact"
    LAZY = "lazy"


class RestorationStep(BaseModel):
    action: CandidateAction
    marginal_benefit: float
    cost_effectiveness: float
    index_after: float

    class Config:
        allow_mutation = False

    @property
    def cost(self) -> float:
        return self.action.cost


class RestorationSequence(BaseModel):
    steps: List[RestorationStep] = []
    baseline_index: float
    final_index: float
    z: float
    n_species: int
    n_candidates: int = 0
    excluded_species: List[str] = []
    stop_reason: Literal["target", "exhausted", "no-positive-candidate"] = "exhausted"

    class Config:
        allow_mutation = False

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_cost(self) -> float:
        return math.fsum(s.cost for s in self.steps)


# Ranking key: zero-cost candidates with a positive benefit form the upper tier
# and are ordered by benefit; everything else is ordered by mb / cost.
Key = Tuple[int, float]


def _key(mb: float, cost: float) -> Key:
    if cost == 0:
        return (1, mb) if mb > 0 else (0, -np.inf)
    return 0, mb / cost


class Prioritizer:
    """Greedy cost-effectiveness ordering of a candidate set.

    Each round selects the candidate with the highest cost-effectiveness
    against the current species states, applies it, and drops every other
    candidate on the same decision unit. Ties fall to the lower cost, then the
    lower unit id, then the lexicographically smaller technology id.
    """
    mode: PrioritizerMode

    def __init__(self, candidates: CandidateSet, state: HabitatState, *, threads: int = 1):
        if len(candidates.species_ids) != state.n_species:
            raise ValueError("Candidate set and habitat state describe different species")
        self.candidates = candidates
        self.state = state
        self.threads = max(1, int(threads or 1))
        self.gains = GainTable(candidates, state)
        self.alive = np.ones(len(candidates), dtype=bool)
        self._unit_start = np.searchsorted(candidates.unit_ids, candidates.unit_ids, side="left")
        self._unit_stop = np.searchsorted(candidates.unit_ids, candidates.unit_ids, side="right")

    def __repr__(self):
        return f"{self.__class__.__name__}(candidates={self.candidates!r}, threads={self.threads})"

    def row_benefit(self, j: int) -> float:
        """Marginal benefit of one row, summed sequentially in entry order."""
        total = 0.0
        for g in self.gains.entry_gains(self.candidates.indptr[j], self.candidates.indptr[j + 1]).tolist():
            total += g
        return self._checked(j, total / self.state.n_species)

    def _checked(self, j: int, mb: float) -> float:
        if math.isnan(mb):
            action = self.candidates[j]
            raise DomainError(
                f"Candidate on unit {action.cell_id} via {action.technology_id!r} would move a species outside"
                f" [0, OH]; the candidate set does not match the habitat state"
            )
        return mb

    def _chunk_benefits(self, start: int, stop: int) -> np.ndarray:
        indptr = self.candidates.indptr
        a, b = indptr[start], indptr[stop]
        rows = np.repeat(np.arange(stop - start), np.diff(indptr[start:stop + 1]))
        return np.bincount(rows, weights=self.gains.entry_gains(a, b), minlength=stop - start)

    def all_benefits(self, parallel: Optional[Parallel] = None) -> np.ndarray:
        n = len(self.candidates)
        chunks = even_chunks(n, self.threads)
        if parallel is None or len(chunks) <= 1:
            parts = [self._chunk_benefits(a, b) for a, b in chunks]
        else:
            parts = parallel(delayed(self._chunk_benefits)(a, b) for a, b in chunks)
        sums = np.concatenate(parts) if parts else np.empty(0)
        return sums / self.state.n_species

    def apply(self, j: int) -> np.ndarray:
        """Execute row ``j``; returns the species indices whose ``H`` changed."""
        indptr = self.candidates.indptr
        species = self.candidates.species_index[indptr[j]:indptr[j + 1]]
        deltas = self.candidates.deltas[indptr[j]:indptr[j + 1]]
        self.state.apply(species, deltas)
        self.gains.refresh(species)
        self.alive[self._unit_start[j]:self._unit_stop[j]] = False
        return species

    def select(self, parallel: Optional[Parallel]) -> Optional[Tuple[int, float]]:
        """Index and marginal benefit of the next row, or ``None`` when nothing helps."""
        raise NotImplementedError

    def run(self, target: Optional[float] = None) -> Tuple[List[RestorationStep], str]:
        steps: List[RestorationStep] = []
        index = self.state.index()
        if target is not None and index >= target - EPSILON:
            return steps, "target"
        backend_jobs = self.threads if self.threads > 1 else 1
        with Parallel(n_jobs=backend_jobs, backend="threading") as parallel:
            while True:
                if not self.alive.any():
                    reason = "exhausted"
                    break
                picked = self.select(parallel)
                if picked is None:
                    reason = "no-positive-candidate"
                    break
                j, mb = picked
                self.apply(j)
                index = self.state.index()
                action = self.candidates[j]
                steps.append(RestorationStep(
                    action=action,
                    marginal_benefit=mb,
                    cost_effectiveness=cost_effectiveness(mb, action.cost),
                    index_after=index,
                ))
                log.debug(
                    f"Step {len(steps)}: unit {action.cell_id} via {action.technology_id!r},"
                    f" mb={mb!r}, cost={action.cost!r}, index={index!r}"
                )
                if target is not None and index >= target - EPSILON:
                    reason = "target"
                    break
        return steps, reason


class ExactPrioritizer(Prioritizer):
    """Re-scores every remaining candidate in every round."""
    mode = PrioritizerMode.EXACT

    def select(self, parallel: Optional[Parallel]) -> Optional[Tuple[int, float]]:
        mb = self.all_benefits(parallel)
        for j in np.flatnonzero(self.alive & np.isnan(mb))[:1].tolist():
            self._checked(j, float(mb[j]))
        costs = self.candidates.costs
        eligible = np.flatnonzero(self.alive & (mb > 0))
        if not len(eligible):
            return None
        free = eligible[costs[eligible] == 0]
        if len(free):
            pool, value = free, mb[free]
        else:
            pool, value = eligible, mb[eligible] / costs[eligible]
        pool = pool[value == value.max()]
        j = int(pool[np.argmin(self.candidates.static_rank[pool])])
        return j, float(mb[j])


class LazyPrioritizer(Prioritizer):
    """Max-heap of stale keys, re-validated when popped.

    A popped candidate is re-scored and selected only if its fresh key still
    beats the key on top of the heap. Negative deltas let a benefit rise after
    another action, so candidates whose benefit may have risen are re-scored
    straight after each application. This keeps every queued key an upper bound.
    """
    mode = PrioritizerMode.LAZY

    def __init__(self, candidates: CandidateSet, state: HabitatState, *, threads: int = 1):
        super().__init__(candidates, state, threads=threads)
        self.epoch = 0
        self.version = np.zeros(len(candidates), dtype=np.int64)
        self.heap: List[Tuple[int, float, int, int, int, int]] = []
        self.repushes = 0
        row_of_entry = candidates.row_of_entry()
        positive = candidates.deltas > 0
        # Rows holding a gain (loss) on each species, for re-scoring after that species loses (gains) habitat.
        self._gain_rows = self._rows_by_species(candidates.species_index[positive], row_of_entry[positive])
        self._loss_rows = self._rows_by_species(candidates.species_index[~positive], row_of_entry[~positive])
        self._seeded = False

    def _rows_by_species(self, species: np.ndarray, rows: np.ndarray) -> List[np.ndarray]:
        order = np.lexsort((rows, species))
        bounds = np.searchsorted(species[order], np.arange(self.state.n_species + 1))
        return [rows[order][bounds[s]:bounds[s + 1]] for s in range(self.state.n_species)]

    def _push(self, j: int, mb: float):
        if mb <= 0:
            return
        tier, value = _key(mb, float(self.candidates.costs[j]))
        self.version[j] += 1
        rank = int(self.candidates.static_rank[j])
        heapq.heappush(self.heap, (-tier, -value, rank, self.epoch, int(self.version[j]), j))

    def _seed(self, parallel: Optional[Parallel]):
        for j, mb in enumerate(self.all_benefits(parallel).tolist()):
            if self.alive[j]:
                self._push(j, self._checked(j, mb))
        self._seeded = True

    def apply(self, j: int) -> np.ndarray:
        indptr = self.candidates.indptr
        deltas = self.candidates.deltas[indptr[j]:indptr[j + 1]]
        species = super().apply(j)
        self.epoch += 1
        rising = [self._gain_rows[s] for s in species[deltas < 0]]
        rising += [self._loss_rows[s] for s in species[deltas > 0]]
        if rising:
            for r in np.unique(np.concatenate(rising)).tolist():
                if self.alive[r]:
                    self._push(r, self.row_benefit(r))
        return species

    def select(self, parallel: Optional[Parallel]) -> Optional[Tuple[int, float]]:
        if not self._seeded:
            self._seed(parallel)
        while self.heap:
            _, _, _, epoch, version, j = heapq.heappop(self.heap)
            if not self.alive[j] or version != self.version[j]:
                continue
            mb = self.row_benefit(j)
            if epoch == self.epoch:
                return j, mb
            if mb <= 0:
                continue
            tier, value = _key(mb, float(self.candidates.costs[j]))
            fresh = (-tier, -value, int(self.candidates.static_rank[j]))
            if not self.heap or fresh < self.heap[0][:3]:
                return j, mb
            self.repushes += 1
            self._push(j, mb)
        return None

    def run(self, target: Optional[float] = None) -> Tuple[List[RestorationStep], str]:
        steps, reason = super().run(target)
        log.debug(f"Lazy prioritizer re-pushed {self.repushes} stale candidate(s)")
        return steps, reason


PRIORITIZERS = {
    PrioritizerMode.EXACT: ExactPrioritizer,
    PrioritizerMode.LAZY: LazyPrioritizer,
}


def run_prioritizer(
        candidates: CandidateSet,
        habitat: SpeciesHabitat,
        z: float,
        mode: PrioritizerMode = PrioritizerMode.LAZY,
        target: Optional[float] = None,
        *,
        threads: int = 1,
) -> RestorationSequence:
    """Build a sequence from pre-computed candidates; deltas do not depend on ``z``."""
    if target is not None and target > 1:
        raise DomainError(f"Target index must lie in (0, 1], got {target!r}")
    if habitat.n_species == 0:
        raise DomainError("No species has potential habitat; the index is undefined")
    state = HabitatState.from_habitat(habitat, z)
    baseline = state.index()
    prioritizer = PRIORITIZERS[PrioritizerMode(mode)](candidates, state, threads=threads)
    steps, reason = prioritizer.run(target)
    final = state.index()

    if target is not None and reason != "target":
        log.info(f"Target {target!r} not reached; maximum achievable index is {final!r}")
        raise TargetUnreachable(target, final)
    log.info(
        f"Built {len(steps)}-step sequence ({PrioritizerMode(mode).value} mode, z={z!r}):"
        f" index {baseline!r} -> {final!r}, stop: {reason}"
    )
    return RestorationSequence(
        steps=steps,
        baseline_index=baseline,
        final_index=final,
        z=z,
        n_species=habitat.n_species,
        n_candidates=len(candidates),
        excluded_species=list(habitat.excluded),
        stop_reason=reason,
    )


def build_sequence(
        scenario: Scenario,
        z: Optional[float] = None,
        mode: PrioritizerMode = PrioritizerMode.LAZY,
        target: Optional[float] = None,
        *,
        threads: int = 1,
) -> RestorationSequence:
    """Cost-effective restoration sequence; ``target=None`` exhausts every helpful candidate."""
    if z is None:
        z = scenario.z.z_central
    habitat = SpeciesHabitat(scenario)
    candidates = enumerate_candidates(scenario, habitat)
    return run_prioritizer(candidates, habitat, z, mode, target, threads=threads)


def restored_classes(scenario: Scenario, steps: Sequence[RestorationStep]) -> np.ndarray:
    """Land-cover raster after executing ``steps`` on the current classes."""
    current = scenario.current_classes
    classes = np.array(current, dtype=np.int64)
    unit_of_cell = scenario.decision_unit_ids()
    for tech in scenario.technologies:
        units = [s.action.cell_id for s in steps if s.action.technology_id == tech.technology_id]
        if not units:
            continue
        mask = np.isin(unit_of_cell, units) & applicable_mask(scenario, tech)
        post = tech.post_classes(current, scenario.potential_classes)
        classes[mask] = post[mask]
    return classes
