"""Random-walk broadcasting ("talkative particles") on paths and cycles."""

from rwbroadcast.topology import GraphTopology, Kind, cycle, path
from rwbroadcast.walk import SeedSpec
from rwbroadcast.broadcast import ProcessState, TrialResult, run_to_completion
from rwbroadcast.coupling import CoupledTrial, run_coupled

__all__ = [
    "GraphTopology",
    "Kind",
    "cycle",
    "path",
    "SeedSpec",
    "ProcessState",
    "TrialResult",
    "run_to_completion",
    "CoupledTrial",
    "run_coupled",
]

__version__ = "0.1.0"
