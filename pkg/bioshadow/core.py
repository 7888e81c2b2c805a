import logging
from typing import Dict
from typing import Optional
from typing import Sequence

from bioshadow.cba import PriceTableRow
from bioshadow.cba import ProjectAppraisal
from bioshadow.cba import ProjectFootprint
from bioshadow.cba import price_project
from bioshadow.cba import price_table
from bioshadow.cba import project_delta_index
from bioshadow.curve import MbrcCurve
from bioshadow.curve import ShadowPriceQuote
from bioshadow.curve import SweepEntry
from bioshadow.curve import build_curve
from bioshadow.curve import per_technology_curves
from bioshadow.curve import shadow_price
from bioshadow.curve import sweep_z
from bioshadow.prioritizer.candidates import CandidateSet
from bioshadow.prioritizer.candidates import enumerate_candidates
from bioshadow.prioritizer.main import PrioritizerMode
from bioshadow.prioritizer.main import RestorationSequence
from bioshadow.prioritizer.main import run_prioritizer
from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.model import Scenario


__all__ = ["ShadowPricer"]


log = logging.getLogger(__name__)


class ShadowPricer:
    """Runs the pricing pipeline on one scenario.

    Habitat extents and candidates depend only on the scenario, so they are
    computed once and shared by every query. The exhaust-all sequence for a
    given ``z`` is cached as well; any target's sequence is a prefix of it.
    """

    def __init__(
            self,
            scenario: Scenario,
            *,
            z: Optional[float] = None,
            mode: PrioritizerMode = PrioritizerMode.LAZY,
            threads: int = 1,
    ):
        self.scenario = scenario
        self.z = scenario.z.z_central if z is None else z
        self.mode = PrioritizerMode(mode)
        self.threads = threads
        self._habitat: Optional[SpeciesHabitat] = None
        self._candidates: Optional[CandidateSet] = None
        self._sequences: Dict[float, RestorationSequence] = {}

    def __repr__(self):
        return f"{self.__class__.__name__}(z={self.z!r}, mode={self.mode.value!r}, threads={self.threads})"

    @property
    def habitat(self) -> SpeciesHabitat:
        if self._habitat is None:
            self._habitat = SpeciesHabitat(self.scenario)
        return self._habitat

    @property
    def candidates(self) -> CandidateSet:
        if self._candidates is None:
            self._candidates = enumerate_candidates(self.scenario, self.habitat)
        return self._candidates

    def sequence(self, target: Optional[float] = None, z: Optional[float] = None) -> RestorationSequence:
        z = self.z if z is None else z
        if target is not None:
            return run_prioritizer(self.candidates, self.habitat, z, self.mode, target, threads=self.threads)
        if z not in self._sequences:
            self._sequences[z] = run_prioritizer(self.candidates, self.habitat, z, self.mode, threads=self.threads)
        return self._sequences[z]

    def curve(self, z: Optional[float] = None) -> MbrcCurve:
        return build_curve(self.sequence(z=z))

    def shadow_price(self, target: float, z: Optional[float] = None) -> ShadowPriceQuote:
        return shadow_price(self.curve(z), target)

    def appraise(self, footprint: ProjectFootprint, target: float, z: Optional[float] = None) -> ProjectAppraisal:
        """Price a footprint at ``target``, with its impact evaluated on the restored land cover."""
        z = self.z if z is None else z
        quote = self.shadow_price(target, z)
        prefix = self.sequence(z=z).steps[:quote.marginal_step or 0]
        impact = project_delta_index(
            self.scenario, footprint, z, "at_target", target, prefix, habitat=self.habitat,
        )
        return price_project(quote, impact)

    def technology_curves(self, z: Optional[float] = None) -> Dict[str, MbrcCurve]:
        return per_technology_curves(
            self.scenario, self.z if z is None else z, self.mode,
            threads=self.threads, candidates=self.candidates, habitat=self.habitat,
        )

    def sweep(self, target: float) -> Dict[str, SweepEntry]:
        return sweep_z(
            self.scenario, self.scenario.z, target, self.mode,
            threads=self.threads, candidates=self.candidates, habitat=self.habitat,
        )

    def price_table(self, targets: Sequence[float], footprint: ProjectFootprint) -> Sequence[PriceTableRow]:
        return price_table(
            self.scenario, targets, footprint, self.scenario.z, self.mode,
            threads=self.threads, candidates=self.candidates,
        )
