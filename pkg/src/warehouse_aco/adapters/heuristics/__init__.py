from .expert import ExpertHeuristic
from .learned import LearnedHeuristic

heuristic_sources = {"expert": ExpertHeuristic, "learned": LearnedHeuristic}
