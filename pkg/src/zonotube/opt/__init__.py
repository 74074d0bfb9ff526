from zonotube.opt.lp import LinearProgram, LpSolution, solve_lp, write_lp
from zonotube.opt.maxvol import LmiReport, MaxVolEllipsoidProblem, check_lmis, solve_maxvol_ellipsoid

__all__ = [
    "LinearProgram",
    "LmiReport",
    "LpSolution",
    "MaxVolEllipsoidProblem",
    "check_lmis",
    "solve_lp",
    "solve_maxvol_ellipsoid",
    "write_lp",
]
