# flake8: noqa: F401
from bioshadow.prioritizer.candidates import CandidateAction
from bioshadow.prioritizer.candidates import CandidateSet
from bioshadow.prioritizer.candidates import cost_effectiveness
from bioshadow.prioritizer.candidates import enumerate_candidates
from bioshadow.prioritizer.main import PrioritizerMode
from bioshadow.prioritizer.main import RestorationSequence
from bioshadow.prioritizer.main import RestorationStep
from bioshadow.prioritizer.main import build_sequence
from bioshadow.prioritizer.main import restored_classes
from bioshadow.prioritizer.main import run_prioritizer
from bioshadow.prioritizer.state import HabitatState
from bioshadow.prioritizer.state import apply_action
