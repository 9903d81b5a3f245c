from .image import SimFlags, SimImage, build_sim
from .engine import SimAbort, SimEvent, SimReport, Simulator
from .stimulus import StimulusError, StimulusProgram, parse_stimulus, run_stimulus

__all__ = [
    "SimFlags", "SimImage", "build_sim", "SimAbort", "SimEvent", "SimReport",
    "Simulator", "StimulusError", "StimulusProgram", "parse_stimulus",
    "run_stimulus",
]
