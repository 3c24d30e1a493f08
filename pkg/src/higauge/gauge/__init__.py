from higauge.gauge.engine import (ThreeConnection, ThreeGauge, TwoConnection,
                                  TwoGauge, apply_gauge2, apply_gauge3,
                                  compose_gauge2, compose_gauge3, curvature2,
                                  curvature3, ym2, ym3)

__all__ = [
    "TwoConnection", "ThreeConnection", "TwoGauge", "ThreeGauge",
    "curvature2", "curvature3", "apply_gauge2", "apply_gauge3",
    "compose_gauge2", "compose_gauge3", "ym2", "ym3",
]
