"""Synthetic problem instances."""

from __future__ import annotations

import numpy as np

from ..oracles import (
    Architecture,
    IsingOracle,
    LookupOracle,
    OracleInstance,
    RandomNetOracle,
    compute_beta,
    geometric_contact_map,
    hmm_init_dataset,
    motif_landscape,
    random_profile_hmm,
    toy_coupling_block,
    toy_substitution_matrix,
)
from ..seqcore import DNA, PROTEIN, Vocabulary

KIND_DEFAULTS = {
    "ising": {"length": 20, "vocabulary": "protein", "contact_density": 0.15, "lam": 1.0,
              "rounds": 10, "batch_size": 100},
    "hmm": {"length": 30, "vocabulary": "protein", "match_states": None, "concentration": 0.1,
            "indel_rate": 0.02, "init_size": 500, "rounds": 10, "batch_size": 100},
    "random_mlp": {"length": 20, "vocabulary": "protein", "conv": 0, "hidden": "128",
                   "rounds": 10, "batch_size": 100},
    "random_rnn": {"length": 20, "vocabulary": "protein", "hidden": "128", "rounds": 10,
                   "batch_size": 100},
    "lookup": {"length": 8, "vocabulary": "dna", "num_motifs": 4, "motif_length": 6, "noise": 0.05,
               "symmetric": 1, "rounds": 10, "batch_size": 100},
}


class UsageError(ValueError):
    pass


def _vocab(name: str) -> Vocabulary:
    return Vocabulary.from_string({"protein": PROTEIN, "dna": DNA}.get(name, name))


def _coerce(default, value):
    if isinstance(default, bool):
        return str(value).lower() in ("1", "true", "yes")
    if isinstance(default, int) and not isinstance(default, bool):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if default is None and value is not None:
        return int(value)
    return value


def resolve_params(kind: str, params: dict | None) -> dict:
    if kind not in KIND_DEFAULTS:
        raise UsageError(f"unknown problem kind {kind!r}; expected one of {sorted(KIND_DEFAULTS)}")
    defaults = KIND_DEFAULTS[kind]
    params = dict(params or {})
    unknown = set(params) - set(defaults) - {"id"}
    if unknown:
        raise UsageError(f"unknown parameters for {kind}: {sorted(unknown)}")
    out = dict(defaults)
    for k, v in params.items():
        out[k] = v if k == "id" else _coerce(defaults[k], v)
    if out["length"] < 1 or out["rounds"] < 1 or out["batch_size"] < 1:
        raise UsageError("length, rounds and batch_size must be positive")
    return out


def gen_problem(kind: str, params: dict | None = None, seed: int = 0) -> OracleInstance:
    """Build a self-contained, seed-determined problem instance."""
    p = resolve_params(kind, params)
    rng = np.random.default_rng(seed)
    vocab = _vocab(p["vocabulary"])
    V, L = len(vocab), p["length"]
    init: list = []
    if kind == "ising":
        if not 0 <= p["contact_density"] <= 1 or p["lam"] <= 0:
            raise UsageError("contact_density must lie in [0, 1] and lam must be positive")
        reference = rng.integers(0, V, size=L)
        S = toy_substitution_matrix(V)
        J = toy_coupling_block(V)
        C = geometric_contact_map(L, p["contact_density"], rng)
        beta = compute_beta(S[:, reference].T, C, J, p["lam"])
        ev = IsingOracle(reference, S, C, J, beta)
    elif kind == "hmm":
        M = p["match_states"] or L
        if not 0 < p["indel_rate"] < 1:
            raise UsageError("indel_rate must lie in (0, 1)")
        ev = random_profile_hmm(M, V, rng, p["concentration"], p["indel_rate"])
        if p["init_size"] > 0:
            init = hmm_init_dataset(ev, L, p["init_size"], int(rng.integers(2**31)))
    elif kind in ("random_mlp", "random_rnn"):
        hidden = tuple(int(h) for h in str(p["hidden"]).split(","))
        arch = Architecture("mlp" if kind == "random_mlp" else "rnn",
                            bool(p.get("conv", 0)), hidden)
        ev = RandomNetOracle(arch, L, V, weight_seed=seed)
    else:
        if V ** L > 4 ** 10:
            raise UsageError("lookup tables are limited to 4^10 entries")
        raw = motif_landscape(L, V, rng, p["num_motifs"], p["motif_length"], p["noise"],
                              bool(p["symmetric"]))
        ev = LookupOracle.normalized(raw, L, V)
    inst_id = p.get("id") or f"{kind}-L{L}-s{seed}"
    recorded = {k: v for k, v in p.items() if k not in ("id", "rounds", "batch_size", "length")}
    return OracleInstance(inst_id, vocab, L, p["rounds"], p["batch_size"], ev, seed=seed,
                          init_dataset=init, params=recorded)
