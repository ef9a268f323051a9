# Domain models
from .dataset import DataSet
from .density import AlphaFilterResult, DensityEstimate
from .program import AffineRowGenerator, AssembledProgram, ProblemTemplate
from .solver import SolveResult, SolveStatus, SolverOptions
