"""Wordpiece inventory, greedy tokenizer, and the T and L graph builders.

T collapses framewise CTC label sequences (repeats merge, blanks delete)
into wordpiece sequences and optionally carries prior-normalization
weights; L maps collapsed wordpiece sequences to words and contains a
free wordpiece loop for each entity class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fst import EPSILON, SymbolTable, Wfst

BOUNDARY = "▁"  # "▁" word-boundary marker on word-initial pieces
BLANK = "<blank>"


class TokenizeError(Exception):
    pass


def class_entry_marker(name: str) -> str:
    return f"<{name}>"


def class_exit_marker(name: str) -> str:
    return f"</{name}>"


@dataclass
class WordpieceModel:
    """A fixed wordpiece inventory plus the CTC blank symbol.

    The label table holds epsilon, the blank, then the pieces; piece
    strings carry the literal boundary marker on word-initial pieces.
    """

    pieces: list[str]
    labels: SymbolTable = field(init=False)
    blank_id: int = field(init=False)

    def __post_init__(self):
        if any(not p for p in self.pieces):
            raise TokenizeError("empty wordpiece in inventory")
        self.labels = SymbolTable([BLANK] + list(self.pieces))
        self.blank_id = self.labels.id(BLANK)

    @classmethod
    def single_characters(cls, alphabet: str) -> "WordpieceModel":
        chars = sorted(set(alphabet))
        return cls([BOUNDARY + c for c in chars] + chars)

    @classmethod
    def read(cls, path) -> "WordpieceModel":
        with open(path, encoding="utf-8") as f:
            pieces = [line.rstrip("\n") for line in f if line.strip()]
        return cls(pieces)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for p in self.pieces:
                f.write(p + "\n")


def read_class_list(path) -> list[str]:
    """Class list file: one `@[A-Z_]+` name per line."""
    classes = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            name = line.strip()
            if not name:
                continue
            if not (name.startswith("@")
                    and name[1:]
                    and all(c.isupper() or c == "_" for c in name[1:])):
                raise TokenizeError(f"bad class name {name!r}")
            classes.append(name)
    return classes


def tokenize_word(model: WordpieceModel, word: str) -> list[str]:
    """Greedy longest-match-from-left tokenization of one word.

    The word is prefixed with the boundary marker; every position must be
    coverable by the inventory (single-character pieces suffice).
    """
    if not word:
        raise TokenizeError("cannot tokenize an empty word")
    inventory = set(model.pieces)
    text = BOUNDARY + word
    out = []
    pos = 0
    while pos < len(text):
        end = len(text)
        while end > pos and text[pos:end] not in inventory:
            end -= 1
        if end == pos:
            bad = text[pos] if text[pos] != BOUNDARY else text[pos + 1]
            raise TokenizeError(f"no wordpiece covers character {bad!r} "
                                f"in {word!r}")
        out.append(text[pos:end])
        pos = end
    return out


@dataclass
class NormConfig:
    """Wordpiece prior normalization settings.

    scale and clip shape the subtracted unigram cost; blank_cost is added
    on every blank frame (use -3 with normalization, +3 without).
    """

    scale: float = 0.8
    clip: float = 20.0
    blank_cost: float = -3.0

    def __post_init__(self):
        if self.scale < 0 or self.clip < 0:
            raise TokenizeError("scale and clip must be nonnegative")


def piece_bonus(cost: float, cfg: NormConfig) -> float:
    """Weight carried by a normalized emission arc: -(scale * min(cost, clip))."""
    return -(cfg.scale * min(cost, cfg.clip))


def build_T(model: WordpieceModel, prior: dict[str, float] | None,
            cfg: NormConfig, normalize: bool = False) -> Wfst:
    """The CTC collapse topology.

    Framewise label sequences map to collapsed piece sequences: repeated
    labels collapse and blanks delete.  Each piece is charged (or boosted)
    exactly once, on the arc that first enters its label; blank arcs carry
    blank_cost on every traversal.
    """
    if normalize:
        if prior is None:
            raise TokenizeError("prior table required when normalizing")
        missing = [p for p in model.pieces if p not in prior]
        if missing:
            raise TokenizeError(f"prior table missing pieces: {missing[:5]}")

    labels = model.labels
    fst = Wfst(labels, labels)
    blank = model.blank_id
    piece_ids = [labels.id(p) for p in model.pieces]

    home = fst.add_state()           # start / just-saw-blank state
    fst.set_start(home)
    fst.set_final(home)
    state_of = {}
    for pid in piece_ids:
        state_of[pid] = fst.add_state()
        fst.set_final(state_of[pid])

    def emit_weight(pid: int) -> float:
        if not normalize:
            return 0.0
        return piece_bonus(prior[labels.symbol(pid)], cfg)

    fst.add_arc(home, blank, EPSILON, cfg.blank_cost, home)
    for pid in piece_ids:
        fst.add_arc(home, pid, pid, emit_weight(pid), state_of[pid])
    for pid in piece_ids:
        s = state_of[pid]
        fst.add_arc(s, pid, EPSILON, 0.0, s)           # repeat collapses
        fst.add_arc(s, blank, EPSILON, cfg.blank_cost, home)
        for other in piece_ids:
            if other != pid:
                fst.add_arc(s, other, other, emit_weight(other),
                            state_of[other])
    return fst


def build_L(model: WordpieceModel, words: SymbolTable,
            classes: list[str] | None = None) -> Wfst:
    """The lexicon: collapsed wordpiece sequences in, words out.

    Each word maps from its greedy tokenization.  For every class there
    is an entry marker arc, a self-loop over the whole piece inventory
    (raw pieces passed through), and an exit marker arc, so any piece
    sequence can be produced inside a class region; the decoder resolves
    those pieces against the per-user bias FST.
    """
    classes = classes or []
    osyms = SymbolTable()
    for w in words:
        if w != "<eps>":
            osyms.add(w)
    for c in classes:
        osyms.add(class_entry_marker(c))
        osyms.add(class_exit_marker(c))
    for p in model.pieces:
        osyms.add(p)

    fst = Wfst(model.labels, osyms)
    root = fst.add_state()
    fst.set_start(root)
    fst.set_final(root)
    for w in words:
        if w == "<eps>":
            continue
        pieces = tokenize_word(model, w)
        s = root
        for i, p in enumerate(pieces):
            ns = root if i == len(pieces) - 1 else fst.add_state()
            ol = osyms.id(w) if i == 0 else EPSILON
            fst.add_arc(s, model.labels.id(p), ol, 0.0, ns)
            s = ns
    for c in classes:
        loop = fst.add_state()
        fst.add_arc(root, EPSILON, osyms.id(class_entry_marker(c)), 0.0, loop)
        for p in model.pieces:
            fst.add_arc(loop, model.labels.id(p), osyms.id(p), 0.0, loop)
        fst.add_arc(loop, EPSILON, osyms.id(class_exit_marker(c)), 0.0, root)
    return fst
