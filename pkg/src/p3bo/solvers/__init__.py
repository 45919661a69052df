from .base import Solver, quantile_threshold
from .cem import CrossEntropy, MarkovChain, Pssm
from .evolution import Evolution, mutate, recombine, tournament
from .mbo import ModelBased
from .smw import SingleMutantWalker

SOLVER_CLASSES: dict[str, type[Solver]] = {
    "SMW": SingleMutantWalker,
    "Evolution": Evolution,
    "CEM": CrossEntropy,
    "MBO": ModelBased,
}

CLASS_ORDER = tuple(SOLVER_CLASSES)


def make_solver(class_tag: str, length: int, vocab_size: int, hyperparams=None, rng=None) -> Solver:
    try:
        cls = SOLVER_CLASSES[class_tag]
    except KeyError:
        raise ValueError(f"unknown solver class {class_tag!r}; expected one of {list(SOLVER_CLASSES)}") from None
    return cls(length, vocab_size, hyperparams, rng)


__all__ = [
    "CLASS_ORDER",
    "CrossEntropy",
    "Evolution",
    "MarkovChain",
    "ModelBased",
    "Pssm",
    "SOLVER_CLASSES",
    "SingleMutantWalker",
    "Solver",
    "make_solver",
    "mutate",
    "quantile_threshold",
    "recombine",
    "tournament",
]
