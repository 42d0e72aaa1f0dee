"""Assumption-failure treatment toolkit.

Three strategies for binding design assumptions late:

* :mod:`aft.hwprobe` picks a memory access method from the failure
  semantics of the installed modules,
* :mod:`aft.patterns` swaps the redoing pattern for reconfiguration when an
  alpha-count filter (:mod:`aft.alpha`) labels a fault permanent,
* :mod:`aft.redundancy` resizes a voting farm (:mod:`aft.voting`) from its
  distance to failure.
"""

from .alpha import AlphaConfig, AlphaCountState, Classification
from .assumptions import Assumption, AssumptionRegistry, BindingTime, ClashRecord
from .faults import FaultClass, FaultEntry, InjectionSchedule, burst_profile, faults_at
from .redundancy import ControllerState, RedundancyPolicy, react, run_experiment
from .voting import VoteRound, dtof, vote

__version__ = "0.1.0"

__all__ = [
    "AlphaConfig", "AlphaCountState", "Classification",
    "Assumption", "AssumptionRegistry", "BindingTime", "ClashRecord",
    "FaultClass", "FaultEntry", "InjectionSchedule", "burst_profile", "faults_at",
    "ControllerState", "RedundancyPolicy", "react", "run_experiment",
    "VoteRound", "dtof", "vote",
]
