"""qcurv: numerical verification lab for the fourth-order Q-curvature
equation on 4-manifolds."""

__version__ = "0.1.0"
