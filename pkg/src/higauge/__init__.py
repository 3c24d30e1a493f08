"""higauge: a numerical workbench for canonical gauges in strict higher gauge theory.

Two backends realize Lie-algebra-valued differential forms: truncated
multivariate Taylor jets (exact local calculus, used to certify algebraic
identities) and cochains on a uniform cubical grid over the unit cube
(global calculus, used to run the canonical gauge-fixing pipelines).
"""

__version__ = "0.1.0"

from higauge.algebra.lie import LieAlgebra, LieAction, LinearLieMap
from higauge.algebra.xmod import CrossedModule, TwoCrossedModule
from higauge.forms.grid import Grid, GridCochain
from higauge.forms.jets import JetContext, JetForm

__all__ = [
    "LieAlgebra",
    "LinearLieMap",
    "LieAction",
    "CrossedModule",
    "TwoCrossedModule",
    "JetContext",
    "JetForm",
    "Grid",
    "GridCochain",
    "__version__",
]
