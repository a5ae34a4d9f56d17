"""orbitoda: exact-arithmetic verification of equivariant orbifold P^1
structures and the bi-graded 2-Toda reduction."""

from .rationals import ParamRat, PR
from .series import TruncSeries, VarWindow, up_win, down_win, exact_win

__all__ = ["ParamRat", "PR", "TruncSeries", "VarWindow",
           "up_win", "down_win", "exact_win"]
