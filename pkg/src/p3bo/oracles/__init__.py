from .base import OracleInstance, evaluate
from .hmm import ProfileHmmOracle, hmm_init_dataset, hmm_log_likelihood, random_profile_hmm
from .ising import IsingOracle, compute_beta, geometric_contact_map, toy_coupling_block, toy_substitution_matrix
from .io import ProblemFormatError, dumps, loads, read_problem, write_problem
from .lookup import LookupOracle, all_sequences, motif_landscape, sequence_index
from .randnet import Architecture, RandomNetOracle, random_net_forward

__all__ = [
    "Architecture",
    "IsingOracle",
    "LookupOracle",
    "OracleInstance",
    "ProblemFormatError",
    "ProfileHmmOracle",
    "RandomNetOracle",
    "all_sequences",
    "compute_beta",
    "dumps",
    "evaluate",
    "geometric_contact_map",
    "hmm_init_dataset",
    "hmm_log_likelihood",
    "loads",
    "motif_landscape",
    "random_net_forward",
    "random_profile_hmm",
    "read_problem",
    "sequence_index",
    "toy_coupling_block",
    "toy_substitution_matrix",
    "write_problem",
]
