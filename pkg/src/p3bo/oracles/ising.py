"""Ising-style objective: per-position substitution scores plus contact couplings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def compute_beta(local_terms: np.ndarray, contact_map: np.ndarray, coupling_block: np.ndarray,
                 lam: float = 1.0) -> float:
    """Coupling weight balancing the dynamic range of local and pairwise terms.

    ``local_terms`` is the (L, V) table phi_i(a). Returns 0 without contacts.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    local_terms = np.asarray(local_terms, dtype=float)
    contact_map = np.asarray(contact_map)
    n_contacts = int(np.triu(contact_map, 1).sum())
    pair_range = float(np.max(coupling_block) - np.min(coupling_block))
    if n_contacts == 0 or pair_range == 0.0:
        return 0.0
    local_range = float(np.sum(local_terms.max(axis=1) - local_terms.min(axis=1)))
    return lam * local_range / (n_contacts * pair_range)


@dataclass
class IsingOracle:
    reference: np.ndarray          # (L,) token indices
    substitution_matrix: np.ndarray  # (V, V)
    contact_map: np.ndarray        # (L, L) binary, symmetric, zero diagonal
    coupling_block: np.ndarray     # (V, V)
    beta: float

    kind = "ising"

    def __post_init__(self):
        self.reference = np.asarray(self.reference, dtype=np.int64)
        self.substitution_matrix = np.asarray(self.substitution_matrix, dtype=float)
        self.coupling_block = np.asarray(self.coupling_block, dtype=float)
        C = np.asarray(self.contact_map).astype(np.int64)
        if C.shape != (len(self.reference),) * 2:
            raise ValueError("contact map shape does not match reference length")
        if not np.array_equal(C, C.T) or np.any(np.diag(C) != 0):
            raise ValueError("contact map must be symmetric with zero diagonal")
        self.contact_map = C
        self.beta = float(self.beta)
        i, j = np.nonzero(np.triu(C, 1))
        self._pairs = (i, j)

    @property
    def local_terms(self) -> np.ndarray:
        """(L, V) table with phi_i(a) = S[a, ref_i]."""
        return self.substitution_matrix[:, self.reference].T

    def score(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        local = self.substitution_matrix[X, self.reference[None, :]].sum(axis=1)
        i, j = self._pairs
        if len(i) == 0 or self.beta == 0.0:
            return local
        pair = self.coupling_block[X[:, i], X[:, j]].sum(axis=1)
        return local + self.beta * pair

    def flip_delta(self, x, pos: int, token: int) -> float:
        """Change in f when position ``pos`` of ``x`` is set to ``token``."""
        x = np.asarray(x, dtype=np.int64)
        old = x[pos]
        S, J = self.substitution_matrix, self.coupling_block
        ref = self.reference[pos]
        delta = S[token, ref] - S[old, ref]
        nbrs = np.nonzero(self.contact_map[pos])[0]
        if len(nbrs):
            delta += self.beta * float(np.sum(J[token, x[nbrs]] - J[old, x[nbrs]]))
        return float(delta)


def toy_substitution_matrix(vocab_size: int) -> np.ndarray:
    """Log-odds substitution table with a strictly dominant diagonal.

    S[a, b] = log(P(a | reference b) / (1 / V)) with P = 0.4 on the diagonal
    and the remainder spread over other tokens by a fixed smooth perturbation.
    """
    k = vocab_size
    a = np.arange(k)
    off = 1.0 + 0.5 * np.cos(0.7 * (a[:, None] + 2 * a[None, :]))  # in [0.5, 1.5]
    np.fill_diagonal(off, 0.0)
    off = off / off.sum(axis=0, keepdims=True) * 0.6
    P = off + 0.4 * np.eye(k)
    return np.log(P * k)


def toy_coupling_block(vocab_size: int) -> np.ndarray:
    """Symmetric contact-energy style table in [-1, 1]."""
    a = np.arange(vocab_size)
    J = np.sin(1.3 * a[:, None] + 0.9 * a[None, :]) + np.sin(1.3 * a[None, :] + 0.9 * a[:, None])
    return J / 2.0


def geometric_contact_map(length: int, density: float, rng: np.random.Generator) -> np.ndarray:
    """Contacts between the closest residue pairs of a random 3-D chain.

    Adjacent positions are excluded; the ``density`` fraction of remaining
    pairs with the smallest spatial distance become contacts.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("contact density must lie in [0, 1]")
    steps = rng.normal(size=(length, 3))
    steps /= np.linalg.norm(steps, axis=1, keepdims=True)
    coords = np.cumsum(steps, axis=0)
    i, j = np.triu_indices(length, 2)
    n = int(round(density * len(i)))
    C = np.zeros((length, length), dtype=np.int64)
    if n == 0:
        return C
    d = np.linalg.norm(coords[i] - coords[j], axis=1)
    order = np.lexsort((j, i, d))[:n]
    C[i[order], j[order]] = 1
    return C + C.T
