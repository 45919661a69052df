"""Profile HMM objective: log-likelihood of a fixed-length sequence.

State layout for ``M`` match columns. Column 0 is the begin state (it plays
the role of match state 0); columns 1..M carry match/delete states and
columns 0..M carry insert states. Every state in column k moves to
``(M_{k+1}, I_k, D_{k+1})`` with the probabilities stored in row k of
``trans_match`` / ``trans_insert`` / ``trans_delete``. In the last column
the "match" transition means "end" and the delete entry must be zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NEG_INF = -np.inf
_TOL = 1e-9


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


@dataclass
class ProfileHmmOracle:
    match_emissions: np.ndarray   # (M, V)
    insert_emissions: np.ndarray  # (M + 1, V)
    trans_match: np.ndarray       # (M + 1, 3): row 0 is the begin state
    trans_insert: np.ndarray      # (M + 1, 3)
    trans_delete: np.ndarray      # (M + 1, 3): row 0 unused (all zero)

    kind = "hmm"

    def __post_init__(self):
        self.match_emissions = np.asarray(self.match_emissions, dtype=float)
        self.insert_emissions = np.asarray(self.insert_emissions, dtype=float)
        self.trans_match = np.asarray(self.trans_match, dtype=float)
        self.trans_insert = np.asarray(self.trans_insert, dtype=float)
        self.trans_delete = np.asarray(self.trans_delete, dtype=float)
        M = self.num_match_states
        if self.insert_emissions.shape[0] != M + 1:
            raise ValueError("need M + 1 insert emission rows")
        for name in ("trans_match", "trans_insert", "trans_delete"):
            if getattr(self, name).shape != (M + 1, 3):
                raise ValueError(f"{name} must have shape ({M + 1}, 3)")
        for name in ("match_emissions", "insert_emissions"):
            rows = getattr(self, name).sum(axis=1)
            if np.any(np.abs(rows - 1) > _TOL):
                raise ValueError(f"{name} rows must sum to 1")
        for name, rows in (("trans_match", range(M + 1)), ("trans_insert", range(M + 1)),
                           ("trans_delete", range(1, M + 1))):
            T = getattr(self, name)
            if np.any(np.abs(T[list(rows)].sum(axis=1) - 1) > _TOL):
                raise ValueError(f"{name} rows must sum to 1")
            if T[M, 2] != 0:
                raise ValueError(f"{name}: last column cannot transition to a delete state")
        if np.any(self.trans_delete[0] != 0):
            raise ValueError("trans_delete row 0 must be zero")

    @property
    def num_match_states(self) -> int:
        return self.match_emissions.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.match_emissions.shape[1]

    def log_likelihood(self, X: np.ndarray) -> np.ndarray:
        """Forward algorithm in log space, vectorised over a batch of sequences."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        n, L = X.shape
        M = self.num_match_states
        eM, eI = _log(self.match_emissions), _log(self.insert_emissions)
        tM, tI, tD = _log(self.trans_match), _log(self.trans_insert), _log(self.trans_delete)

        fM = np.full((n, M + 1), NEG_INF)
        fI = np.full((n, M + 1), NEG_INF)
        fD = np.full((n, M + 1), NEG_INF)
        fM[:, 0] = 0.0
        # silent delete chain reachable before any emission
        for k in range(1, M + 1):
            fD[:, k] = np.logaddexp(fM[:, k - 1] + tM[k - 1, 2], fD[:, k - 1] + tD[k - 1, 2])
        for i in range(L):
            x = X[:, i]
            nM = np.full((n, M + 1), NEG_INF)
            nI = np.full((n, M + 1), NEG_INF)
            nD = np.full((n, M + 1), NEG_INF)
            # match k emits x from any state in column k-1
            into_m = np.logaddexp(np.logaddexp(fM[:, :-1] + tM[:-1, 0], fI[:, :-1] + tI[:-1, 0]),
                                  fD[:, :-1] + tD[:-1, 0])
            nM[:, 1:] = into_m + eM[np.arange(M)[None, :], x[:, None]]
            into_i = np.logaddexp(np.logaddexp(fM + tM[:, 1], fI + tI[:, 1]), fD + tD[:, 1])
            nI[:, :] = into_i + eI[np.arange(M + 1)[None, :], x[:, None]]
            for k in range(1, M + 1):
                nD[:, k] = np.logaddexp(
                    np.logaddexp(nM[:, k - 1] + tM[k - 1, 2], nI[:, k - 1] + tI[k - 1, 2]),
                    nD[:, k - 1] + tD[k - 1, 2],
                )
            fM, fI, fD = nM, nI, nD
        end = np.logaddexp(np.logaddexp(fM[:, M] + tM[M, 0], fI[:, M] + tI[M, 0]), fD[:, M] + tD[M, 0])
        return end

    def score(self, X: np.ndarray) -> np.ndarray:
        return self.log_likelihood(X)

    def sample(self, rng: np.random.Generator, count: int, max_len: int) -> list[list[int]]:
        """Draw ``count`` sequences by walking the state graph, batched.

        Walks are cut off once they exceed ``max_len`` emissions.
        """
        M, V = self.num_match_states, self.vocab_size
        trans = np.stack([self.trans_match, self.trans_insert, self.trans_delete])  # (3, M+1, 3)
        cum_t = np.cumsum(trans, axis=2)
        cum_m = np.cumsum(self.match_emissions, axis=1)
        cum_i = np.cumsum(self.insert_emissions, axis=1)
        state = np.zeros(count, dtype=np.int64)  # 0=M, 1=I, 2=D
        col = np.zeros(count, dtype=np.int64)
        alive = np.ones(count, dtype=bool)
        out: list[list[int]] = [[] for _ in range(count)]
        lengths = np.zeros(count, dtype=np.int64)
        while alive.any():
            idx = np.nonzero(alive)[0]
            u = rng.random(len(idx))
            c = cum_t[state[idx], col[idx]]
            move = np.minimum((u[:, None] > c).sum(axis=1), 2)
            ends = (move == 0) & (col[idx] == M)
            alive[idx[ends]] = False
            go = ~ends
            idx, move = idx[go], move[go]
            to_m = move == 0
            col[idx[to_m]] += 1
            state[idx[to_m]] = 0
            state[idx[move == 1]] = 1
            to_d = move == 2
            col[idx[to_d]] += 1
            state[idx[to_d]] = 2
            emit = idx[move != 2]
            if len(emit):
                u = rng.random(len(emit))
                is_m = state[emit] == 0
                probs = np.where(is_m[:, None], cum_m[np.maximum(col[emit] - 1, 0)], cum_i[col[emit]])
                tok = np.minimum((u[:, None] > probs).sum(axis=1), V - 1)
                for j, t in zip(emit.tolist(), tok.tolist()):
                    out[j].append(t)
                lengths[emit] += 1
                alive[emit[lengths[emit] > max_len]] = False
        return out


def hmm_log_likelihood(h: ProfileHmmOracle, x) -> float:
    return float(h.log_likelihood(np.asarray(x, dtype=np.int64)[None, :])[0])


def hmm_init_dataset(h: ProfileHmmOracle, length: int, n: int, rng_seed: int,
                     max_attempts: int = 200) -> list[tuple[tuple, float]]:
    """``n`` unique sequences scoring below the median of a 10n reference pool.

    Sequences are sampled from the HMM itself, keeping those of the target
    length. If the HMM rarely emits that length, uniform draws fill in.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng_seed)

    def draw(count: int) -> np.ndarray:
        rows: list[list[int]] = []
        for _ in range(50):
            rows.extend(s for s in h.sample(rng, 2 * count, max_len=length) if len(s) == length)
            if len(rows) >= count:
                break
        rows = rows[:count]
        if len(rows) < count:
            rows.extend(rng.integers(0, h.vocab_size, size=(count - len(rows), length)).tolist())
        return np.array(rows, dtype=np.int64)

    pool = draw(10 * n)
    ll = h.log_likelihood(pool)
    median = float(np.median(ll))

    chosen: dict[tuple, float] = {}
    candidates = [(tuple(int(t) for t in row), float(v)) for row, v in zip(pool, ll) if v < median]
    for attempt in range(max_attempts):
        order = rng.permutation(len(candidates))
        for idx in order:
            seq, v = candidates[idx]
            if seq not in chosen:
                chosen[seq] = v
                if len(chosen) == n:
                    return list(chosen.items())
        extra = draw(n)
        ll_extra = h.log_likelihood(extra)
        candidates = [(tuple(int(t) for t in row), float(v))
                      for row, v in zip(extra, ll_extra) if v < median]
    raise RuntimeError(f"could not find {n} unique below-median sequences after {max_attempts} retries")


def random_profile_hmm(num_match: int, vocab_size: int, rng: np.random.Generator,
                       concentration: float = 0.1, indel_rate: float = 0.1) -> ProfileHmmOracle:
    """Random profile HMM with Dirichlet emissions and indel-biased transitions."""
    M = num_match
    match_em = rng.dirichlet(np.full(vocab_size, concentration), size=M)
    # keep every probability positive so log-likelihoods stay finite
    match_em = 0.99 * match_em + 0.01 / vocab_size
    insert_em = rng.dirichlet(np.full(vocab_size, 2.0), size=M + 1)

    def rows(stay_main: float, size: int) -> np.ndarray:
        main = rng.beta(40 * stay_main, 40 * (1 - stay_main), size=size)
        split = rng.uniform(0.3, 0.7, size=size)
        return np.stack([main, (1 - main) * split, (1 - main) * (1 - split)], axis=1)

    tM = rows(1 - indel_rate, M + 1)
    tI = rows(0.5, M + 1)
    tD = rows(0.5, M + 1)
    tD[0] = 0.0
    for T in (tM, tI, tD[1:]):
        last = T[-1]
        T[-1] = [last[0] + last[2], last[1], 0.0]
    tI[-1] = [0.5, 0.5, 0.0]
    return ProfileHmmOracle(match_em, insert_em, tM, tI, tD)
