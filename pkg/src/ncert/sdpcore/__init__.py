from .problem import SdpStatus, SdpProblem, SdpSolution, SdpBuilder, to_sdpa
from .sdpsolver import SolverParameters, solve, feasibility, polish, MAX_DIM_ENV, DEFAULT_MAX_DIM, COMPLEMENTARITY_TOL
