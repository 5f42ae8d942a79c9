"""Weighted finite-state transducers over the tropical semiring.

Weights are negative log probabilities: plus is min, times is float
addition, zero is +inf and one is 0.0.  All operations are pure: they
build and return new Wfst instances and never mutate their inputs.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from typing import Iterable, Iterator, NamedTuple

EPSILON = 0

ZERO = math.inf
ONE = 0.0


class FstError(Exception):
    """Configuration or precondition violation in an FST operation."""


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


class SymbolTable:
    """Bijective symbol<->id map; id 0 is always epsilon."""

    def __init__(self, symbols: Iterable[str] = ()):
        self._syms: list[str] = ["<eps>"]
        self._ids: dict[str, int] = {"<eps>": 0}
        for s in symbols:
            self.add(s)

    def add(self, symbol: str) -> int:
        if symbol in self._ids:
            return self._ids[symbol]
        i = len(self._syms)
        self._syms.append(symbol)
        self._ids[symbol] = i
        return i

    def id(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise FstError(f"unknown symbol {symbol!r}") from None

    def symbol(self, i: int) -> str:
        return self._syms[i]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    def __len__(self) -> int:
        return len(self._syms)

    def __iter__(self) -> Iterator[str]:
        return iter(self._syms)

    def items(self):
        return ((s, i) for i, s in enumerate(self._syms))

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for s, i in self.items():
                f.write(f"{s}\t{i}\n")

    @classmethod
    def read(cls, path) -> "SymbolTable":
        table = cls()
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                sym, i = line.split("\t")
                i = int(i)
                if i == 0:
                    continue
                got = table.add(sym)
                if got != i:
                    raise FstError(f"non-contiguous symbol table at {sym!r}")
        return table


class Wfst:
    """A weighted transducer: indexed states, arcs, and final weights."""

    def __init__(self, isyms: SymbolTable | None = None,
                 osyms: SymbolTable | None = None):
        self.isyms = isyms
        self.osyms = osyms
        self._arcs: list[list[Arc]] = []
        self._finals: dict[int, float] = {}
        self.start: int = -1

    # -- construction ------------------------------------------------------

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n: int) -> None:
        for _ in range(n):
            self.add_state()

    def set_start(self, state: int) -> None:
        self.start = state

    def add_arc(self, state: int, ilabel: int, olabel: int,
                weight: float, nextstate: int) -> None:
        if math.isnan(weight):
            raise FstError("arc weight is NaN")
        self._arcs[state].append(Arc(ilabel, olabel, weight, nextstate))

    def set_final(self, state: int, weight: float = ONE) -> None:
        self._finals[state] = weight

    # -- inspection --------------------------------------------------------

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def states(self) -> range:
        return range(len(self._arcs))

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def final(self, state: int) -> float:
        return self._finals.get(state, ZERO)

    def is_final(self, state: int) -> bool:
        return state in self._finals

    def finals(self):
        return self._finals.items()

    def is_empty(self) -> bool:
        return self.start < 0

    def is_acceptor(self) -> bool:
        return all(a.ilabel == a.olabel for arcs in self._arcs for a in arcs)

    def has_input_epsilons(self) -> bool:
        return any(a.ilabel == EPSILON for arcs in self._arcs for a in arcs)

    def is_deterministic(self) -> bool:
        """No epsilon input labels and no shared ilabel at any state."""
        for arcs in self._arcs:
            seen = set()
            for a in arcs:
                if a.ilabel == EPSILON or a.ilabel in seen:
                    return False
                seen.add(a.ilabel)
        return True

    def is_acyclic(self) -> bool:
        WHITE, GRAY, BLACK = 0, 1, 2
        color = [WHITE] * self.num_states
        for root in self.states():
            if color[root] != WHITE:
                continue
            stack = [(root, 0)]
            color[root] = GRAY
            while stack:
                s, i = stack[-1]
                if i < len(self._arcs[s]):
                    stack[-1] = (s, i + 1)
                    ns = self._arcs[s][i].nextstate
                    if color[ns] == GRAY:
                        return False
                    if color[ns] == WHITE:
                        color[ns] = GRAY
                        stack.append((ns, 0))
                else:
                    color[s] = BLACK
                    stack.pop()
        return True

    # -- text format -------------------------------------------------------

    def write_text(self, path) -> None:
        """AT&T text format: arc lines src dst ilabel olabel weight."""
        with open(path, "w", encoding="utf-8") as f:
            if self.is_empty():
                return
            order = [self.start] + [s for s in self.states() if s != self.start]
            for s in order:
                for a in self._arcs[s]:
                    f.write(f"{s}\t{a.nextstate}\t{a.ilabel}\t{a.olabel}\t"
                            f"{a.weight:.6f}\n")
            for s in order:
                if s in self._finals:
                    f.write(f"{s}\t{self._finals[s]:.6f}\n")

    @classmethod
    def read_text(cls, path, isyms: SymbolTable | None = None,
                  osyms: SymbolTable | None = None) -> "Wfst":
        fst = cls(isyms, osyms)

        def state(ext: int) -> int:
            while fst.num_states <= ext:
                fst.add_state()
            if fst.start < 0:
                fst.set_start(ext)
            return ext

        with open(path, encoding="utf-8") as f:
            for line in f:
                fields = line.rstrip("\n").split("\t")
                if len(fields) == 5:
                    src, dst, il, ol, w = fields
                    fst.add_arc(state(int(src)), int(il), int(ol),
                                float(w), state(int(dst)))
                elif len(fields) == 2:
                    fst.set_final(state(int(fields[0])), float(fields[1]))
                elif fields != [""]:
                    raise FstError(f"bad FST text line: {line!r}")
        return fst


# ---------------------------------------------------------------------------
# Core algorithms
# ---------------------------------------------------------------------------


def connect(fst: Wfst) -> Wfst:
    """Keep only states reachable from start and co-reachable to a final."""
    if fst.is_empty():
        return Wfst(fst.isyms, fst.osyms)
    reach = set()
    stack = [fst.start]
    while stack:
        s = stack.pop()
        if s in reach:
            continue
        reach.add(s)
        for a in fst.arcs(s):
            if a.nextstate not in reach:
                stack.append(a.nextstate)
    back = defaultdict(list)
    for s in reach:
        for a in fst.arcs(s):
            if a.nextstate in reach:
                back[a.nextstate].append(s)
    coreach = set()
    stack = [s for s, _ in fst.finals() if s in reach]
    while stack:
        s = stack.pop()
        if s in coreach:
            continue
        coreach.add(s)
        stack.extend(p for p in back[s] if p not in coreach)
    keep = reach & coreach
    out = Wfst(fst.isyms, fst.osyms)
    if fst.start not in keep:
        return out
    remap = {}
    order = [fst.start] + sorted(keep - {fst.start})
    for s in order:
        remap[s] = out.add_state()
    out.set_start(remap[fst.start])
    for s in order:
        for a in fst.arcs(s):
            if a.nextstate in keep:
                out.add_arc(remap[s], a.ilabel, a.olabel, a.weight,
                            remap[a.nextstate])
        if fst.is_final(s):
            out.set_final(remap[s], fst.final(s))
    return out


def compose(a: Wfst, b: Wfst) -> Wfst:
    """Compose two transducers with epsilon-filter semantics.

    a's output symbol table must be b's input symbol table.  The result
    accepts (x, z) iff some y has (x, y) in a and (y, z) in b; matched
    path weights multiply (add).  Epsilon moves are canonicalized so that
    each compatible path pair yields exactly one composed path.
    """
    if a.osyms is not None and b.isyms is not None and a.osyms is not b.isyms:
        raise FstError("compose: a's output symbol table must equal "
                       "b's input symbol table")
    out = Wfst(a.isyms, b.osyms)
    if a.is_empty() or b.is_empty():
        return out

    b_by_il: list[dict[int, list[Arc]]] = []
    for s in b.states():
        idx: dict[int, list[Arc]] = defaultdict(list)
        for arc in b.arcs(s):
            idx[arc.ilabel].append(arc)
        b_by_il.append(idx)

    # Filter: 0 = free, 2 = committed to b-only epsilon moves until the
    # next match.  a-only moves keep filter 0, so redundant interleavings
    # of a-only/b-only epsilon moves collapse to the a-first ordering.
    start = (a.start, b.start, 0)
    ids = {start: 0}
    result_arcs: list[list[tuple[int, int, float, tuple]]] = [[]]
    queue = [start]
    while queue:
        qa, qb, f = key = queue.pop()
        sid = ids[key]

        def target(nkey):
            if nkey not in ids:
                ids[nkey] = len(result_arcs)
                result_arcs.append([])
                queue.append(nkey)
            return ids[nkey]

        for arc_a in a.arcs(qa):
            if arc_a.olabel == EPSILON:
                if f == 0:
                    nk = (arc_a.nextstate, qb, 0)
                    result_arcs[sid].append(
                        (arc_a.ilabel, EPSILON, arc_a.weight, nk))
                    target(nk)
            else:
                for arc_b in b_by_il[qb].get(arc_a.olabel, ()):
                    nk = (arc_a.nextstate, arc_b.nextstate, 0)
                    result_arcs[sid].append(
                        (arc_a.ilabel, arc_b.olabel,
                         arc_a.weight + arc_b.weight, nk))
                    target(nk)
        for arc_b in b_by_il[qb].get(EPSILON, ()):
            nk = (qa, arc_b.nextstate, 2)
            result_arcs[sid].append((EPSILON, arc_b.olabel, arc_b.weight, nk))
            target(nk)

    out.add_states(len(result_arcs))
    out.set_start(0)
    for sid, arcs in enumerate(result_arcs):
        for il, ol, w, nk in arcs:
            out.add_arc(sid, il, ol, w, ids[nk])
    for (qa, qb, _f), sid in ids.items():
        if a.is_final(qa) and b.is_final(qb):
            w = a.final(qa) + b.final(qb)
            if not out.is_final(sid) or w < out.final(sid):
                out.set_final(sid, w)
    return connect(out)


def remove_epsilons(fst: Wfst) -> Wfst:
    """Remove arcs whose input AND output labels are both epsilon."""
    if fst.is_empty():
        return Wfst(fst.isyms, fst.osyms)
    n = fst.num_states
    eps = defaultdict(list)
    for s in fst.states():
        for a in fst.arcs(s):
            if a.ilabel == EPSILON and a.olabel == EPSILON:
                eps[s].append((a.nextstate, a.weight))

    def closure(s: int) -> dict[int, float]:
        # Bellman-Ford over the epsilon subgraph; a relaxation still
        # active after n rounds means a negative-weight epsilon cycle.
        dist = {s: 0.0}
        for rounds in range(n + 1):
            changed = False
            for q, d in list(dist.items()):
                for ns, w in eps[q]:
                    nd = d + w
                    if nd < dist.get(ns, ZERO) - 1e-15:
                        dist[ns] = nd
                        changed = True
            if not changed:
                return dist
        raise FstError("negative-weight epsilon cycle")

    out = Wfst(fst.isyms, fst.osyms)
    out.add_states(n)
    out.set_start(fst.start)
    for s in fst.states():
        for q, d in sorted(closure(s).items()):
            for a in fst.arcs(q):
                if a.ilabel == EPSILON and a.olabel == EPSILON:
                    continue
                out.add_arc(s, a.ilabel, a.olabel, d + a.weight, a.nextstate)
            if fst.is_final(q):
                w = d + fst.final(q)
                if not out.is_final(s) or w < out.final(s):
                    out.set_final(s, w)
    return connect(out)


# -- label-pair encoding ----------------------------------------------------


def encode_labels(fst: Wfst) -> tuple[Wfst, list[tuple[int, int]]]:
    """Encode (ilabel, olabel) pairs into a fresh acceptor alphabet."""
    pairs: dict[tuple[int, int], int] = {}
    alphabet: list[tuple[int, int]] = [(EPSILON, EPSILON)]
    out = Wfst()
    out.add_states(fst.num_states)
    if not fst.is_empty():
        out.set_start(fst.start)
    for s in fst.states():
        for a in fst.arcs(s):
            key = (a.ilabel, a.olabel)
            if key == (EPSILON, EPSILON):
                enc = EPSILON
            else:
                enc = pairs.get(key)
                if enc is None:
                    enc = len(alphabet)
                    pairs[key] = enc
                    alphabet.append(key)
            out.add_arc(s, enc, enc, a.weight, a.nextstate)
        if fst.is_final(s):
            out.set_final(s, fst.final(s))
    return out, alphabet


def decode_labels(fst: Wfst, alphabet: list[tuple[int, int]],
                  isyms: SymbolTable | None,
                  osyms: SymbolTable | None) -> Wfst:
    out = Wfst(isyms, osyms)
    out.add_states(fst.num_states)
    if not fst.is_empty():
        out.set_start(fst.start)
    for s in fst.states():
        for a in fst.arcs(s):
            il, ol = alphabet[a.ilabel]
            out.add_arc(s, il, ol, a.weight, a.nextstate)
        if fst.is_final(s):
            out.set_final(s, fst.final(s))
    return out


def determinize(fst: Wfst) -> Wfst:
    """Determinize an acyclic weighted FST.

    Acceptors are determinized by weighted subset construction; transducers
    are first encoded as acceptors over (ilabel, olabel) pairs, then
    decoded back.  Cyclic input is rejected.
    """
    if fst.is_empty():
        return Wfst(fst.isyms, fst.osyms)
    if not fst.is_acyclic():
        raise FstError("determinize supports acyclic FSTs only")
    if not fst.is_acceptor():
        enc, alphabet = encode_labels(fst)
        det = _determinize_acceptor(enc)
        return decode_labels(det, alphabet, fst.isyms, fst.osyms)
    return _determinize_acceptor(fst)


def _determinize_acceptor(fst: Wfst) -> Wfst:
    if fst.has_input_epsilons():
        raise FstError("determinize requires epsilon-free input; "
                       "apply remove_epsilons first")
    fst = connect(fst)
    out = Wfst(fst.isyms, fst.osyms)
    if fst.is_empty():
        return out
    start = ((fst.start, 0.0),)
    ids = {start: out.add_state()}
    out.set_start(0)
    queue = [start]
    while queue:
        subset = queue.pop()
        sid = ids[subset]
        by_label: dict[int, list[tuple[int, float]]] = defaultdict(list)
        fin = ZERO
        for q, r in subset:
            if fst.is_final(q):
                fin = min(fin, r + fst.final(q))
            for a in fst.arcs(q):
                by_label[a.ilabel].append((a.nextstate, r + a.weight))
        if fin < ZERO:
            out.set_final(sid, fin)
        for label in sorted(by_label):
            entries = by_label[label]
            w = min(r for _, r in entries)
            best: dict[int, float] = {}
            for q, r in entries:
                res = r - w
                if q not in best or res < best[q]:
                    best[q] = res
            nsub = tuple(sorted(best.items()))
            if nsub not in ids:
                ids[nsub] = out.add_state()
                queue.append(nsub)
            out.add_arc(sid, label, label, w, ids[nsub])
    return out


def _distance_to_final(fst: Wfst) -> list[float]:
    """Shortest distance from each state to a final state."""
    n = fst.num_states
    dist = [ZERO] * n
    if fst.is_acyclic():
        order = _topological_order(fst)
        for s in reversed(order):
            d = fst.final(s)
            for a in fst.arcs(s):
                d = min(d, a.weight + dist[a.nextstate])
            dist[s] = d
        return dist
    # Cyclic case: Dijkstra on the reversed graph, non-negative weights only.
    if any(a.weight < 0 for s in fst.states() for a in fst.arcs(s)):
        raise FstError("negative weights in a cyclic FST")
    back = defaultdict(list)
    heap = []
    for s in fst.states():
        for a in fst.arcs(s):
            back[a.nextstate].append((s, a.weight))
        if fst.is_final(s):
            dist[s] = fst.final(s)
            heapq.heappush(heap, (dist[s], s))
    while heap:
        d, s = heapq.heappop(heap)
        if d > dist[s]:
            continue
        for p, w in back[s]:
            nd = d + w
            if nd < dist[p]:
                dist[p] = nd
                heapq.heappush(heap, (nd, p))
    return dist


def _topological_order(fst: Wfst) -> list[int]:
    indeg = [0] * fst.num_states
    for s in fst.states():
        for a in fst.arcs(s):
            indeg[a.nextstate] += 1
    order = []
    stack = [s for s in fst.states() if indeg[s] == 0]
    while stack:
        s = stack.pop()
        order.append(s)
        for a in fst.arcs(s):
            indeg[a.nextstate] -= 1
            if indeg[a.nextstate] == 0:
                stack.append(a.nextstate)
    if len(order) != fst.num_states:
        raise FstError("cyclic FST where acyclic expected")
    return order


def _push_weights(fst: Wfst) -> Wfst:
    """Canonical weight pushing toward the initial state."""
    dist = _distance_to_final(fst)
    out = Wfst(fst.isyms, fst.osyms)
    out.add_states(fst.num_states)
    out.set_start(fst.start)
    leftover = dist[fst.start] if dist[fst.start] < ZERO else 0.0
    for s in fst.states():
        if dist[s] >= ZERO:
            continue
        extra = leftover if s == fst.start else 0.0
        for a in fst.arcs(s):
            if dist[a.nextstate] >= ZERO:
                continue
            w = a.weight + dist[a.nextstate] - dist[s] + extra
            out.add_arc(s, a.ilabel, a.olabel, w, a.nextstate)
        if fst.is_final(s):
            out.set_final(s, fst.final(s) - dist[s] + extra)
    return out


def minimize(fst: Wfst) -> Wfst:
    """Minimize a deterministic FST after canonical weight pushing.

    Transducers are minimized on the encoded (ilabel, olabel) alphabet.
    Equivalent states are merged by iterated partition refinement, which
    handles both acyclic and cyclic deterministic machines.
    """
    if fst.is_empty():
        return Wfst(fst.isyms, fst.osyms)
    if not fst.is_acceptor():
        enc, alphabet = encode_labels(fst)
        mini = minimize(enc)
        return decode_labels(mini, alphabet, fst.isyms, fst.osyms)
    if not fst.is_deterministic():
        raise FstError("minimize requires a deterministic FST")
    fst = _push_weights(connect(fst))
    if fst.is_empty():
        return fst
    n = fst.num_states

    def quantize(w: float) -> int:
        return round(w * 1e9)

    block = [0 if fst.is_final(s) else 1 for s in fst.states()]
    finals = sorted({quantize(fst.final(s))
                     for s in fst.states() if fst.is_final(s)})
    fmap = {f: i for i, f in enumerate(finals)}
    for s in fst.states():
        block[s] = fmap[quantize(fst.final(s))] if fst.is_final(s) \
            else len(fmap)
    while True:
        sigs = {}
        nblock = [0] * n
        for s in fst.states():
            sig = (block[s], tuple(sorted(
                (a.ilabel, quantize(a.weight), block[a.nextstate])
                for a in fst.arcs(s))))
            if sig not in sigs:
                sigs[sig] = len(sigs)
            nblock[s] = sigs[sig]
        if nblock == block:
            break
        block = nblock

    out = Wfst(fst.isyms, fst.osyms)
    rep: dict[int, int] = {}
    order = [fst.start] + [s for s in fst.states() if s != fst.start]
    for s in order:
        if block[s] not in rep:
            rep[block[s]] = out.add_state()
    out.set_start(rep[block[fst.start]])
    done = set()
    for s in order:
        b = block[s]
        if b in done:
            continue
        done.add(b)
        for a in fst.arcs(s):
            out.add_arc(rep[b], a.ilabel, a.olabel, a.weight,
                        rep[block[a.nextstate]])
        if fst.is_final(s):
            out.set_final(rep[b], fst.final(s))
    return out


def shortest_paths(fst: Wfst, n: int) -> list[tuple[list[int], list[int], float]]:
    """The n lowest-cost accepting paths of an acyclic FST.

    Returns (input labels, output labels, weight) triples in nondecreasing
    weight order; ties are broken lexicographically on output, then input
    label ids.  Epsilons are dropped from the returned label sequences.
    """
    if n < 1 or fst.is_empty():
        return []
    fst = connect(fst)
    if fst.is_empty():
        return []
    if not fst.is_acyclic():
        raise FstError("shortest_paths supports acyclic FSTs only")
    phi = _distance_to_final(fst)
    results: list[tuple[float, tuple[int, ...], tuple[int, ...]]] = []
    counter = 0
    heap = [(phi[fst.start], counter, fst.start, 0.0, (), ())]
    while heap:
        f, _, s, g, ipath, opath = heapq.heappop(heap)
        if len(results) >= n and f > results[n - 1][0] + 1e-12:
            break
        if fst.is_final(s):
            results.append((g + fst.final(s), ipath, opath))
            results.sort(key=lambda r: r[0])
        for a in fst.arcs(s):
            ng = g + a.weight
            ni = ipath + ((a.ilabel,) if a.ilabel != EPSILON else ())
            no = opath + ((a.olabel,) if a.olabel != EPSILON else ())
            counter += 1
            heapq.heappush(heap, (ng + phi[a.nextstate], counter,
                                  a.nextstate, ng, ni, no))
    results.sort(key=lambda r: (r[0], r[2], r[1]))
    return [(list(i), list(o), w) for w, i, o in results[:n]]


# ---------------------------------------------------------------------------
# Small constructors used throughout the package
# ---------------------------------------------------------------------------


def linear_acceptor(labels: Iterable[int], syms: SymbolTable | None = None,
                    weight: float = 0.0) -> Wfst:
    """A single-path acceptor for a label sequence; weight on the last arc."""
    fst = Wfst(syms, syms)
    labels = list(labels)
    s = fst.add_state()
    fst.set_start(s)
    for i, lab in enumerate(labels):
        ns = fst.add_state()
        w = weight if i == len(labels) - 1 else 0.0
        fst.add_arc(s, lab, lab, w, ns)
        s = ns
    fst.set_final(s, weight if not labels else 0.0)
    return fst
