from __future__ import annotations

import numpy as np

from .base import Solver


class SingleMutantWalker(Solver):
    """Walks the single-substitution neighbourhood of the best sequences seen.

    Neighbours are enumerated position-major, then by token. Once every
    neighbour of the current anchor has been visited the walker moves on
    to the next-best distinct sequence.
    """

    class_tag = "SMW"
    defaults: dict = {}

    def __init__(self, length, vocab_size, hyperparams=None, rng=None):
        super().__init__(length, vocab_size, hyperparams, rng)
        self._anchors: list[tuple] = []
        self._anchor = 0
        self._cursor = 0
        self._visited: set[tuple] = set()

    def fit(self, X, y, rounds=None):
        X = np.asarray(X)
        if len(X) == 0:
            return
        seqs = [tuple(int(t) for t in row) for row in X]
        self._visited.update(seqs)
        order = sorted(range(len(seqs)), key=lambda i: (-float(y[i]), seqs[i]))
        anchors = list(dict.fromkeys(seqs[i] for i in order))
        best = anchors[0]
        if not self._anchors or best != self._anchors[0]:
            self._anchor = 0
            self._cursor = 0
        else:
            current = self._anchors[self._anchor] if self._anchor < len(self._anchors) else None
            self._anchor = anchors.index(current) if current in anchors else 0
            if current not in anchors:
                self._cursor = 0
        self._anchors = anchors

    def neighbors(self, seq: tuple) -> list[tuple]:
        out = []
        for pos in range(self.length):
            for tok in range(self.vocab_size):
                if tok != seq[pos]:
                    out.append(seq[:pos] + (tok,) + seq[pos + 1:])
        return out

    def propose(self) -> tuple:
        per_anchor = self.length * (self.vocab_size - 1)
        while self._anchor < len(self._anchors):
            anchor = self._anchors[self._anchor]
            while self._cursor < per_anchor:
                pos, k = divmod(self._cursor, self.vocab_size - 1)
                tok = k if k < anchor[pos] else k + 1
                self._cursor += 1
                cand = anchor[:pos] + (tok,) + anchor[pos + 1:]
                if cand not in self._visited:
                    self._visited.add(cand)
                    return cand
            self._anchor += 1
            self._cursor = 0
        return self.random_sequence()
