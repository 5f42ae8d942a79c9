"""Count-based backoff n-gram models with Witten-Bell smoothing.

One model class serves three roles: the word-level external LM (with
class placeholders), the word-level unigram used in the offline decoding
graph, and the wordpiece prior that estimates the CTC model's internal
LM.  Costs are natural-log internally; ARPA files use log10.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .fst import EPSILON, SymbolTable, Wfst

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

LN10 = math.log(10.0)


class NgramError(Exception):
    pass


@dataclass
class NgramModel:
    """Backoff n-gram: entries map token tuples to (logp, logbow | None).

    Log values are natural logs.  Backoff weights are present exactly on
    entries that are prefixes of longer stored n-grams.
    """

    order: int
    vocab: list[str]
    entries: dict[tuple[str, ...], list] = field(default_factory=dict)

    def __post_init__(self):
        self._vocab_set = set(self.vocab)

    # -- evaluation --------------------------------------------------------

    def _norm(self, token: str) -> str:
        return token if token in self._vocab_set else UNK

    def prob(self, history: tuple[str, ...] | list[str], token: str) -> float:
        """Natural-log P(token | history) with Katz-style backoff."""
        token = self._norm(token)
        h = tuple(self._norm(t) for t in history)
        h = h[max(0, len(h) - self.order + 1):]
        total = 0.0
        while True:
            entry = self.entries.get(h + (token,))
            if entry is not None:
                return total + entry[0]
            if not h:
                raise NgramError(f"no unigram entry for {token!r}")
            ctx = self.entries.get(h)
            if ctx is not None and ctx[1] is not None:
                total += ctx[1]
            h = h[1:]

    def sentence_logprob(self, tokens: list[str]) -> float:
        """Natural-log probability of a sentence including EOS."""
        padded = [BOS] + list(tokens) + [EOS]
        total = 0.0
        for i in range(1, len(padded)):
            total += self.prob(tuple(padded[:i]), padded[i])
        return total

    def contexts(self) -> list[tuple[str, ...]]:
        return [g for g, e in self.entries.items() if e[1] is not None]

    def history_sum(self, history: tuple[str, ...]) -> float:
        """Sum of P(w | history) over the full vocabulary."""
        return sum(math.exp(self.prob(history, w)) for w in self.vocab)

    def entry_count(self) -> int:
        return len(self.entries)


def _apply_class_spans(tokens: list[str], spans) -> list[str]:
    if not spans:
        return list(tokens)
    out = list(tokens)
    for start, end, cls in sorted(spans, key=lambda s: -s[0]):
        if not (0 <= start < end <= len(out)):
            raise NgramError(f"bad class span ({start}, {end})")
        out[start:end] = [cls]
    return out


def train_ngram(corpus, order: int, class_spans=None, weights=None,
                extra_vocab=None) -> NgramModel:
    """Train a Witten-Bell smoothed backoff model.

    corpus: list of token sequences.  class_spans, when given, is a
    parallel list of per-sentence (start, end, class_name) annotations
    whose token ranges are replaced by the class placeholder before
    counting.  weights are per-sentence nonnegative counts (fractional
    allowed); extra_vocab forces tokens into the vocabulary so they
    receive smoothing mass.
    """
    if order < 1:
        raise NgramError("order must be >= 1")
    corpus = list(corpus)
    if not corpus:
        raise NgramError("empty training corpus")
    if weights is None:
        weights = [1.0] * len(corpus)
    if class_spans is None:
        class_spans = [None] * len(corpus)

    counts: list[dict[tuple[str, ...], float]] = \
        [defaultdict(float) for _ in range(order + 1)]
    for toks, spans, w in zip(corpus, class_spans, weights):
        if w < 0:
            raise NgramError("negative sentence weight")
        if w == 0:
            continue
        padded = [BOS] + _apply_class_spans(list(toks), spans) + [EOS]
        for n in range(1, order + 1):
            for i in range(len(padded) - n + 1):
                gram = tuple(padded[i:i + n])
                if gram[-1] == BOS:
                    continue
                counts[n][gram] += w

    vocab = set()
    for gram in counts[1]:
        vocab.add(gram[0])
    vocab |= {BOS, EOS, UNK}
    if extra_vocab:
        vocab |= set(extra_vocab)
    vocab = sorted(vocab)
    vsize = len(vocab)

    model = NgramModel(order, vocab)
    # unigrams: every vocabulary token is stored
    total = sum(counts[1].values())
    types1 = len(counts[1])
    lam1 = types1 / (total + types1)
    for w in vocab:
        p = counts[1].get((w,), 0.0) / (total + types1) + lam1 / vsize
        model.entries[(w,)] = [math.log(p), None]

    for n in range(2, order + 1):
        hist_count: dict[tuple[str, ...], float] = defaultdict(float)
        hist_types: dict[tuple[str, ...], int] = defaultdict(int)
        for gram, c in counts[n].items():
            hist_count[gram[:-1]] += c
            hist_types[gram[:-1]] += 1
        for gram, c in sorted(counts[n].items()):
            h = gram[:-1]
            ch, t = hist_count[h], hist_types[h]
            lam = t / (ch + t)
            p = c / (ch + t) + lam * math.exp(model.prob(h[1:], gram[-1]))
            model.entries[gram] = [math.log(p), None]
        for h in hist_count:
            if h not in model.entries:
                raise NgramError(f"history {h} has no entry")
            ch, t = hist_count[h], hist_types[h]
            model.entries[h][1] = math.log(t / (ch + t))
    return model


def prob(model: NgramModel, history, token: str) -> float:
    return model.prob(tuple(history), token)


# ---------------------------------------------------------------------------
# Entropy pruning (Stolcke criterion)
# ---------------------------------------------------------------------------


def _history_marginal(model: NgramModel, h: tuple[str, ...]) -> float:
    """Approximate P(h) by the chain of conditional probabilities."""
    logp = 0.0
    for i, tok in enumerate(h):
        if tok == BOS and i == 0:
            continue  # treat the sentence start as given
        logp += model.prob(h[:i], tok)
    return math.exp(logp)


def stolcke_delta(model: NgramModel, gram: tuple[str, ...],
                  history_mass: float | None = None) -> float:
    """Weighted relative-entropy increase from removing one n-gram.

    Exact KL divergence between the conditional distributions before and
    after removing `gram` (with the history's backoff weight recomputed),
    scaled by the history marginal.  history_mass, when given, is the
    precomputed sum of stored P(.|h) for gram's history.
    """
    h, w = gram[:-1], gram[-1]
    p = math.exp(model.entries[gram][0])
    if history_mass is None:
        history_mass = sum(
            math.exp(model.entries[g][0]) for g in model.entries
            if len(g) == len(gram) and g[:-1] == h)
    s = history_mass
    bow_entry = model.entries[h][1]
    alpha = math.exp(bow_entry) if bow_entry is not None else 1.0
    p_lower = math.exp(model.prob(h[1:], w))
    unseen_mass_lower = (1.0 - s) / alpha
    alpha_new = (1.0 - s + p) / (unseen_mass_lower + p_lower)
    p_new = alpha_new * p_lower
    delta = _history_marginal(model, h) * (
        p * (math.log(p) - math.log(p_new))
        + (math.log(alpha) - math.log(alpha_new)) * (1.0 - s))
    return max(delta, 0.0)


def entropy_prune(model: NgramModel, threshold: float) -> NgramModel:
    """Remove n-grams whose Stolcke delta is below the threshold.

    Deltas are evaluated against the original model, highest order first;
    entries that are prefixes of surviving longer n-grams are kept.
    Backoff weights are recomputed so every history still normalizes.
    """
    if threshold < 0:
        raise NgramError("threshold must be >= 0")
    if model.order < 2:
        raise NgramError("entropy pruning needs order >= 2")

    by_len: dict[int, list[tuple[str, ...]]] = defaultdict(list)
    for g in model.entries:
        by_len[len(g)].append(g)

    mass: dict[tuple[str, ...], float] = defaultdict(float)
    for g, (logp, _bow) in model.entries.items():
        if len(g) >= 2:
            mass[g[:-1]] += math.exp(logp)

    surviving = set(by_len[model.order])
    removed: set[tuple[str, ...]] = set()
    for n in range(model.order, 1, -1):
        protected = {g[:-1] for g in surviving if len(g) == n + 1} \
            if n < model.order else set()
        keep = set()
        for g in by_len[n]:
            if g in protected:
                keep.add(g)
            elif stolcke_delta(model, g, mass[g[:-1]]) < threshold:
                removed.add(g)
            else:
                keep.add(g)
        surviving = keep | {g for g in surviving if len(g) != n}

    pruned = NgramModel(model.order, list(model.vocab))
    for g, (logp, _bow) in sorted(model.entries.items()):
        if g not in removed:
            pruned.entries[g] = [logp, None]
    _recompute_backoffs(pruned)
    return pruned


def _recompute_backoffs(model: NgramModel) -> None:
    """Set bow(h) = (1 - sum stored P(.|h)) / (1 - sum stored P(.|h'))."""
    by_len: dict[int, list[tuple[str, ...]]] = defaultdict(list)
    for g in model.entries:
        by_len[len(g)].append(g)
    for n in range(1, model.order):
        children: dict[tuple[str, ...], list[tuple[str, ...]]] = \
            defaultdict(list)
        for g in by_len.get(n + 1, ()):
            children[g[:-1]].append(g)
        for h in sorted(children):
            num = 1.0
            den = 1.0
            for g in children[h]:
                num -= math.exp(model.entries[g][0])
                den -= math.exp(model.prob(h[1:], g[-1]))
            num = max(num, 1e-300)
            den = max(den, 1e-300)
            model.entries[h][1] = math.log(num) - math.log(den)


# ---------------------------------------------------------------------------
# FST conversion
# ---------------------------------------------------------------------------


def to_fst(model: NgramModel, syms: SymbolTable | None = None) -> Wfst:
    """Standard backoff topology: a state per stored history.

    Token arcs carry -log probability, epsilon backoff arcs carry
    -log backoff weight, and the sentence end is a final weight.
    """
    if syms is None:
        syms = SymbolTable(sorted(w for w in model.vocab
                                  if w not in (BOS, EOS)))
    contexts = {(): None}
    for g, e in model.entries.items():
        if e[1] is not None:
            contexts[g] = None

    fst = Wfst(syms, syms)
    state_of = {}
    for ctx in sorted(contexts, key=lambda c: (len(c), c)):
        state_of[ctx] = fst.add_state()

    def suffix_state(toks: tuple[str, ...]) -> int:
        toks = toks[max(0, len(toks) - model.order + 1):]
        while toks not in state_of:
            toks = toks[1:]
        return state_of[toks]

    start_ctx = (BOS,) if (BOS,) in state_of else ()
    fst.set_start(state_of[start_ctx])

    for g, (logp, _bow) in sorted(model.entries.items()):
        h, w = g[:-1], g[-1]
        if h not in state_of:
            continue
        if w == BOS:
            continue
        if w == EOS:
            fst.set_final(state_of[h], -logp)
        else:
            fst.add_arc(state_of[h], syms.id(w), syms.id(w), -logp,
                        suffix_state(g))
    for ctx, s in state_of.items():
        if ctx == ():
            continue
        bow = model.entries[ctx][1] if ctx in model.entries else None
        w = -bow if bow is not None else 0.0
        fst.add_arc(s, EPSILON, EPSILON, w, suffix_state(ctx[1:]))
    # every state must be able to end a sentence through backoff
    if not fst.is_final(state_of[()]):
        fst.set_final(state_of[()], -model.prob((), EOS))
    return fst


# ---------------------------------------------------------------------------
# Wordpiece prior
# ---------------------------------------------------------------------------


def prior_table(corpus, inventory=None) -> dict[str, float]:
    """Smoothed unigram costs (-ln p) over the wordpiece inventory."""
    model = train_ngram(corpus, 1, extra_vocab=inventory)
    pieces = inventory if inventory is not None else \
        [w for w in model.vocab if w not in (BOS, EOS, UNK)]
    table = {}
    for p in pieces:
        cost = -model.prob((), p)
        if not math.isfinite(cost) or cost < 0:
            raise NgramError(f"bad prior cost for {p!r}")
        table[p] = cost
    return table


def prior_histogram(prior: dict[str, float],
                    bin_width: float) -> list[tuple[float, int]]:
    """Counts of pieces per cost bin, as (bin_low, count) pairs."""
    if bin_width <= 0:
        raise NgramError("bin_width must be > 0")
    bins: dict[int, int] = defaultdict(int)
    for cost in prior.values():
        bins[math.floor(cost / bin_width)] += 1
    return [(i * bin_width, bins[i]) for i in sorted(bins)]


def write_histogram(hist, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for low, count in hist:
            f.write(f"{low:.6f}\t{count}\n")


# ---------------------------------------------------------------------------
# ARPA I/O
# ---------------------------------------------------------------------------


def write_arpa(model: NgramModel, path) -> None:
    by_len: dict[int, list[tuple[str, ...]]] = defaultdict(list)
    for g in model.entries:
        by_len[len(g)].append(g)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\\data\\\n")
        for n in range(1, model.order + 1):
            f.write(f"ngram {n}={len(by_len.get(n, ()))}\n")
        for n in range(1, model.order + 1):
            f.write(f"\n\\{n}-grams:\n")
            for g in sorted(by_len.get(n, ())):
                logp, bow = model.entries[g]
                line = f"{logp / LN10:.6f}\t{' '.join(g)}"
                if bow is not None:
                    line += f"\t{bow / LN10:.6f}"
                f.write(line + "\n")
        f.write("\n\\end\\\n")


def read_arpa(path) -> NgramModel:
    entries: dict[tuple[str, ...], list] = {}
    order = 0
    section = 0
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if not line or line == "\\data\\" or line == "\\end\\":
                continue
            if line.startswith("ngram "):
                order = max(order, int(line.split("=")[0].split()[1]))
                continue
            if line.endswith("-grams:"):
                section = int(line[1:].split("-")[0])
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise NgramError(f"bad ARPA line: {raw!r}")
            logp = float(fields[0]) * LN10
            gram = tuple(fields[1].split(" "))
            bow = float(fields[2]) * LN10 if len(fields) > 2 else None
            if len(gram) != section:
                raise NgramError(f"ARPA line in wrong section: {raw!r}")
            entries[gram] = [logp, bow]
    vocab = sorted(g[0] for g in entries if len(g) == 1)
    model = NgramModel(order, vocab)
    model.entries = entries
    return model
