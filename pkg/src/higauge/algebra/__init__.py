from higauge.algebra.lie import LieAlgebra, LieAction, LinearLieMap
from higauge.algebra.xmod import CrossedModule, TwoCrossedModule, ValidationReport

__all__ = [
    "LieAlgebra",
    "LinearLieMap",
    "LieAction",
    "CrossedModule",
    "TwoCrossedModule",
    "ValidationReport",
]
