# cdosim main package

from cdosim.errors import CdosimError
from cdosim.fock import DensityMatrix, ModeState, ThreeSystemState, TwoModeState

__all__ = ["CdosimError", "DensityMatrix", "ModeState", "ThreeSystemState", "TwoModeState"]
