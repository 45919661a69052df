"""Problem-instance text files.

Layout::

    # p3bo problem v1
    kind ising
    id ising-demo
    vocabulary ACDEFGHIKLMNPQRSTVWY
    length 20
    rounds 10
    batch_size 100
    seed 1
    beta 0.25
    [reference]
    ACDEFGHIKLMNPQRSTVWY
    [substitution_matrix]
    <V whitespace-separated rows>
    ...

Header lines are ``key value``. Each ``[section]`` holds raw payload lines
until the next section. Matrices are whitespace-separated rows, contacts are
``i j`` index pairs (0-based, i < j), sequence tables are
``sequence<TAB>reward`` lines. Floats are written with 17 significant digits
so a file round-trips exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..seqcore import Vocabulary
from .base import OracleInstance
from .hmm import ProfileHmmOracle
from .ising import IsingOracle
from .lookup import LookupOracle, all_sequences, sequence_index
from .randnet import Architecture, RandomNetOracle

FORMAT_HEADER = "# p3bo problem v1"
KINDS = ("ising", "hmm", "random_mlp", "random_rnn", "lookup")


class ProblemFormatError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _matrix_lines(M: np.ndarray) -> list[str]:
    return [" ".join(fmt(v) for v in row) for row in np.atleast_2d(M)]


def _parse_matrix(lines: list[str]) -> np.ndarray:
    return np.array([[float(v) for v in ln.split()] for ln in lines], dtype=float)


def _table_lines(vocab: Vocabulary, items) -> list[str]:
    return [f"{vocab.decode(s)}\t{fmt(r)}" for s, r in items]


def dumps(inst: OracleInstance) -> str:
    ev = inst.evaluator
    header = {
        "kind": ev.kind,
        "id": inst.id,
        "vocabulary": str(inst.vocabulary),
        "length": inst.length,
        "rounds": inst.rounds,
        "batch_size": inst.batch_size,
        "seed": inst.seed,
    }
    for k, v in sorted(inst.params.items()):
        header[f"param.{k}"] = v
    sections: dict[str, list[str]] = {}
    if isinstance(ev, IsingOracle):
        header["beta"] = fmt(ev.beta)
        sections["reference"] = [inst.vocabulary.decode(ev.reference)]
        sections["substitution_matrix"] = _matrix_lines(ev.substitution_matrix)
        sections["coupling_block"] = _matrix_lines(ev.coupling_block)
        i, j = np.nonzero(np.triu(ev.contact_map, 1))
        sections["contacts"] = [f"{a} {b}" for a, b in zip(i, j)]
    elif isinstance(ev, ProfileHmmOracle):
        header["match_states"] = ev.num_match_states
        sections["match_emissions"] = _matrix_lines(ev.match_emissions)
        sections["insert_emissions"] = _matrix_lines(ev.insert_emissions)
        sections["transitions_match"] = _matrix_lines(ev.trans_match)
        sections["transitions_insert"] = _matrix_lines(ev.trans_insert)
        sections["transitions_delete"] = _matrix_lines(ev.trans_delete)
    elif isinstance(ev, RandomNetOracle):
        header["architecture"] = ev.architecture.describe()
        header["weight_seed"] = ev.weight_seed
    elif isinstance(ev, LookupOracle):
        seqs = all_sequences(inst.length, inst.vocab_size)
        sections["table"] = _table_lines(inst.vocabulary, zip(seqs, ev.table))
    else:
        raise TypeError(f"cannot serialise evaluator {type(ev).__name__}")
    if inst.init_dataset:
        sections["init_dataset"] = _table_lines(inst.vocabulary, inst.init_dataset)

    out = [FORMAT_HEADER]
    out += [f"{k} {v}" for k, v in header.items()]
    for name, lines in sections.items():
        out.append(f"[{name}]")
        out.extend(lines)
    return "\n".join(out) + "\n"


def write_problem(inst: OracleInstance, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(inst), encoding="utf-8")
    return path


def _split(text: str) -> tuple[dict[str, str], dict[str, list[str]]]:
    header: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("[") and line.rstrip().endswith("]"):
            current = line.strip()[1:-1]
            if current in sections:
                raise ProblemFormatError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = []
        elif current is None:
            key, _, value = line.partition(" ")
            if not value:
                raise ProblemFormatError(f"line {lineno}: expected 'key value', got {line!r}")
            header[key] = value.strip()
        else:
            sections[current].append(line)
    return header, sections


def _need(d: dict, key: str, what: str = "header"):
    try:
        return d[key]
    except KeyError:
        raise ProblemFormatError(f"missing {what} entry {key!r}") from None


def _parse_table(vocab: Vocabulary, lines: list[str]) -> list[tuple[tuple, float]]:
    out = []
    for ln in lines:
        seq, _, val = ln.partition("\t")
        if not _:
            raise ProblemFormatError(f"table line without tab: {ln!r}")
        out.append((vocab.encode(seq), float(val)))
    return out


def loads(text: str) -> OracleInstance:
    header, sections = _split(text)
    kind = _need(header, "kind")
    if kind not in KINDS:
        raise ProblemFormatError(f"unknown oracle kind {kind!r}")
    vocab = Vocabulary.from_string(_need(header, "vocabulary"))
    L = int(_need(header, "length"))
    V = len(vocab)
    if kind == "ising":
        C = np.zeros((L, L), dtype=np.int64)
        for ln in sections.get("contacts", []):
            a, b = (int(v) for v in ln.split())
            C[a, b] = C[b, a] = 1
        ev = IsingOracle(
            reference=vocab.encode(_need(sections, "reference", "section")[0].strip()),
            substitution_matrix=_parse_matrix(_need(sections, "substitution_matrix", "section")),
            contact_map=C,
            coupling_block=_parse_matrix(_need(sections, "coupling_block", "section")),
            beta=float(_need(header, "beta")),
        )
    elif kind == "hmm":
        ev = ProfileHmmOracle(
            _parse_matrix(_need(sections, "match_emissions", "section")),
            _parse_matrix(_need(sections, "insert_emissions", "section")),
            _parse_matrix(_need(sections, "transitions_match", "section")),
            _parse_matrix(_need(sections, "transitions_insert", "section")),
            _parse_matrix(_need(sections, "transitions_delete", "section")),
        )
    elif kind in ("random_mlp", "random_rnn"):
        arch = Architecture.parse(_need(header, "architecture"))
        ev = RandomNetOracle(arch, L, V, int(_need(header, "weight_seed")))
        if ev.kind != kind:
            raise ProblemFormatError(f"architecture {arch.kind!r} does not match kind {kind!r}")
    else:
        rows = _parse_table(vocab, _need(sections, "table", "section"))
        if len(rows) != V ** L:
            raise ProblemFormatError(f"lookup table has {len(rows)} rows, expected {V ** L}")
        table = np.empty(V ** L)
        idx = sequence_index(np.array([s for s, _ in rows]), V)
        table[idx] = [r for _, r in rows]
        if len(set(idx.tolist())) != V ** L:
            raise ProblemFormatError("lookup table has duplicate sequences")
        ev = LookupOracle(table, L, V)

    params = {k[len("param."):]: v for k, v in header.items() if k.startswith("param.")}
    return OracleInstance(
        id=_need(header, "id"),
        vocabulary=vocab,
        length=L,
        rounds=int(_need(header, "rounds")),
        batch_size=int(_need(header, "batch_size")),
        evaluator=ev,
        seed=int(header.get("seed", 0)),
        init_dataset=_parse_table(vocab, sections.get("init_dataset", [])),
        params=params,
    )


def read_problem(path) -> OracleInstance:
    path = Path(path)
    try:
        return loads(path.read_text(encoding="utf-8"))
    except ProblemFormatError as exc:
        raise ProblemFormatError(f"{path}: {exc}") from None
