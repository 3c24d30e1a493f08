from higauge.forms.jets import JetContext, JetForm, JetGroupField
from higauge.forms.grid import Grid, GridCochain

__all__ = ["JetContext", "JetForm", "JetGroupField", "Grid", "GridCochain"]
