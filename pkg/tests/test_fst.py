import math
import random

import pytest
from hypothesis import given, strategies as st

from wfstdecode.fst import (
    EPSILON,
    FstError,
    SymbolTable,
    Wfst,
    compose,
    connect,
    determinize,
    linear_acceptor,
    minimize,
    remove_epsilons,
    shortest_paths,
)

from oracles import (
    compose_oracle,
    input_weight_map,
    maps_close,
    random_acyclic_fst,
    string_weight_map,
)


finite = st.floats(min_value=-50, max_value=50, allow_nan=False)


class TestSemiring:
    @given(finite, finite, finite)
    def test_times_associative_commutative(self, a, b, c):
        assert math.isclose((a + b) + c, a + (b + c), abs_tol=1e-9)
        assert a + b == b + a

    @given(finite)
    def test_identities(self, x):
        assert x + 0.0 == x          # x (*) one
        assert min(x, math.inf) == x  # x (+) zero

    @given(finite, finite, finite)
    def test_distributivity(self, a, b, c):
        assert math.isclose(a + min(b, c), min(a + b, a + c), abs_tol=1e-9)

    def test_nan_rejected(self):
        fst = Wfst()
        s = fst.add_state()
        with pytest.raises(FstError):
            fst.add_arc(s, 1, 1, math.nan, s)


class TestSymbolTable:
    def test_epsilon_is_zero(self):
        t = SymbolTable(["a", "b"])
        assert t.id("<eps>") == 0
        assert t.id("a") == 1 and t.symbol(2) == "b"

    def test_bijective(self):
        t = SymbolTable(["a"])
        assert t.add("a") == 1
        assert len(t) == 2

    def test_roundtrip(self, tmp_path):
        t = SymbolTable(["a", "b", "▁c"])
        p = tmp_path / "syms.txt"
        t.write(p)
        t2 = SymbolTable.read(p)
        assert list(t) == list(t2)


def two_arc_chain():
    # a: x->y /1.0 ; b: y->z /2.0
    a = Wfst()
    a.add_states(2)
    a.set_start(0)
    a.add_arc(0, 1, 2, 1.0, 1)
    a.set_final(1)
    b = Wfst()
    b.add_states(2)
    b.set_start(0)
    b.add_arc(0, 2, 3, 2.0, 1)
    b.set_final(1)
    return a, b


class TestCompose:
    def test_single_path_weights_add(self):
        a, b = two_arc_chain()
        c = compose(a, b)
        assert string_weight_map(c) == {((1,), (3,)): 3.0}

    def test_identity_left(self):
        rng = random.Random(7)
        b = random_acyclic_fst(rng, acceptor=False, n_labels=3)
        ident = Wfst()
        s = ident.add_state()
        ident.set_start(s)
        ident.set_final(s)
        for lab in range(1, 4):
            ident.add_arc(s, lab, lab, 0.0, s)
        c = compose(ident, b)
        assert maps_close(string_weight_map(c), string_weight_map(b))

    @pytest.mark.parametrize("seed", range(30))
    def test_random_vs_cross_enumeration(self, seed):
        rng = random.Random(seed)
        a = random_acyclic_fst(rng, max_states=6, acceptor=False,
                               eps_prob=0.2)
        b = random_acyclic_fst(rng, max_states=6, acceptor=False,
                               eps_prob=0.2)
        got = string_weight_map(compose(a, b))
        want = compose_oracle(a, b)
        assert maps_close(got, want)

    def test_symbol_table_mismatch(self):
        t1, t2 = SymbolTable(["a"]), SymbolTable(["a"])
        a = Wfst(t1, t1)
        b = Wfst(t2, t2)
        a.set_start(a.add_state())
        b.set_start(b.add_state())
        with pytest.raises(FstError):
            compose(a, b)


class TestDeterminize:
    def test_min_of_parallel_paths(self):
        fst = Wfst()
        fst.add_states(4)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 2.0, 1)
        fst.add_arc(0, 1, 1, 5.0, 2)
        fst.add_arc(1, 2, 2, 0.0, 3)
        fst.add_arc(2, 2, 2, 0.0, 3)
        fst.set_final(3)
        det = determinize(fst)
        assert det.is_deterministic()
        assert input_weight_map(det) == {(1, 2): 2.0}

    def test_already_deterministic(self):
        fst = linear_acceptor([1, 2, 3], weight=1.5)
        det = determinize(fst)
        assert maps_close(input_weight_map(det), input_weight_map(fst))

    @pytest.mark.parametrize("seed", range(100))
    def test_random_matches_enumeration(self, seed):
        rng = random.Random(1000 + seed)
        fst = random_acyclic_fst(rng, max_states=8)
        det = determinize(fst)
        assert det.is_deterministic()
        assert maps_close(input_weight_map(det), input_weight_map(fst))

    def test_cyclic_rejected(self):
        fst = Wfst()
        s = fst.add_state()
        fst.set_start(s)
        fst.add_arc(s, 1, 1, 0.0, s)
        fst.set_final(s)
        with pytest.raises(FstError):
            determinize(fst)

    def test_transducer_via_pair_encoding(self):
        fst = Wfst()
        fst.add_states(3)
        fst.set_start(0)
        fst.add_arc(0, 1, 2, 1.0, 1)
        fst.add_arc(0, 1, 2, 3.0, 2)
        fst.add_arc(1, 2, 0, 0.5, 2)
        fst.set_final(2)
        det = determinize(fst)
        assert maps_close(string_weight_map(det), string_weight_map(fst))


class TestMinimize:
    def test_merges_identical_suffixes(self):
        fst = Wfst()
        fst.add_states(6)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 0.0, 1)
        fst.add_arc(0, 2, 2, 0.0, 2)
        fst.add_arc(1, 3, 3, 1.0, 3)
        fst.add_arc(2, 3, 3, 1.0, 4)
        fst.add_arc(3, 4, 4, 0.0, 5)
        fst.add_arc(4, 4, 4, 0.0, 5)
        fst.set_final(5)
        mini = minimize(fst)
        assert mini.num_states < fst.num_states
        assert maps_close(input_weight_map(mini), input_weight_map(fst))

    def test_minimal_is_fixpoint(self):
        fst = linear_acceptor([1, 2], weight=0.5)
        mini = minimize(fst)
        assert mini.num_states == fst.num_states
        assert maps_close(input_weight_map(minimize(mini)),
                          input_weight_map(fst))

    def test_nondeterministic_rejected(self):
        fst = Wfst()
        fst.add_states(2)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 0.0, 1)
        fst.add_arc(0, 1, 1, 1.0, 1)
        fst.set_final(1)
        with pytest.raises(FstError):
            minimize(fst)

    @pytest.mark.parametrize("seed", range(50))
    def test_random_equivalence_and_no_growth(self, seed):
        rng = random.Random(2000 + seed)
        fst = determinize(random_acyclic_fst(rng, max_states=8))
        mini = minimize(fst)
        assert mini.num_states <= fst.num_states
        assert maps_close(input_weight_map(mini), input_weight_map(fst))


class TestRemoveEpsilons:
    def test_chain_collapses(self):
        fst = Wfst()
        fst.add_states(3)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 0.0, 1)    # x
        fst.add_arc(1, 0, 0, 1.0, 2)    # eps /1.0
        fst.set_final(2, 2.0)
        out = remove_epsilons(fst)
        assert not any(a.ilabel == 0 and a.olabel == 0
                       for s in out.states() for a in out.arcs(s))
        assert input_weight_map(out) == {(1,): 3.0}

    def test_epsilon_free_unchanged(self):
        fst = linear_acceptor([1, 2], weight=0.5)
        out = remove_epsilons(fst)
        assert maps_close(input_weight_map(out), input_weight_map(fst))

    def test_negative_epsilon_cycle_rejected(self):
        fst = Wfst()
        fst.add_states(2)
        fst.set_start(0)
        fst.add_arc(0, 0, 0, -1.0, 1)
        fst.add_arc(1, 0, 0, 0.5, 0)
        fst.add_arc(0, 1, 1, 0.0, 1)
        fst.set_final(1)
        with pytest.raises(FstError):
            remove_epsilons(fst)

    @pytest.mark.parametrize("seed", range(50))
    def test_random_weight_preservation(self, seed):
        rng = random.Random(3000 + seed)
        fst = random_acyclic_fst(rng, max_states=7, eps_prob=0.35)
        out = remove_epsilons(fst)
        assert maps_close(string_weight_map(out), string_weight_map(fst))


class TestShortestPaths:
    def fan(self, weights):
        fst = Wfst()
        fst.add_states(2)
        fst.set_start(0)
        for i, w in enumerate(weights, start=1):
            fst.add_arc(0, i, i, w, 1)
        fst.set_final(1)
        return fst

    def test_two_cheapest(self):
        got = shortest_paths(self.fan([1.0, 2.0, 3.0]), 2)
        assert [(i, w) for i, _o, w in got] == [([1], 1.0), ([2], 2.0)]

    def test_n_larger_than_path_count(self):
        assert len(shortest_paths(self.fan([1.0, 2.0]), 10)) == 2

    def test_empty_fst(self):
        assert shortest_paths(Wfst(), 3) == []

    def test_tie_break_lexicographic_on_output(self):
        got = shortest_paths(self.fan([1.0, 1.0, 1.0]), 3)
        assert [o for _i, o, _w in got] == [[1], [2], [3]]

    @pytest.mark.parametrize("seed", range(30))
    def test_random_equals_sorted_enumeration(self, seed):
        rng = random.Random(4000 + seed)
        fst = random_acyclic_fst(rng, max_states=7, acceptor=False)
        all_paths = sorted(
            ((w, o, i) for i, o, w in
             __import__("oracles").enumerate_paths(fst)))
        got = shortest_paths(fst, 4)
        want = [(list(i), list(o), w) for w, o, i in all_paths[:4]]
        assert len(got) == len(want)
        for (gi, go, gw), (wi, wo, ww) in zip(got, want):
            assert math.isclose(gw, ww, abs_tol=1e-9)
            assert (go, gi) == (wo, wi)


class TestTextFormat:
    def test_roundtrip_bit_exact(self, tmp_path):
        rng = random.Random(11)
        fst = random_acyclic_fst(rng, acceptor=False, eps_prob=0.2)
        p1 = tmp_path / "a.fst.txt"
        p2 = tmp_path / "b.fst.txt"
        fst.write_text(p1)
        back = Wfst.read_text(p1)
        back.write_text(p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert maps_close(string_weight_map(back), string_weight_map(fst))


class TestConnect:
    def test_drops_dead_states(self):
        fst = Wfst()
        fst.add_states(4)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 0.0, 1)
        fst.add_arc(0, 2, 2, 0.0, 2)   # state 2 is a dead end
        fst.add_arc(3, 1, 1, 0.0, 1)   # state 3 is unreachable
        fst.set_final(1)
        out = connect(fst)
        assert out.num_states == 2
        assert input_weight_map(out) == {(1,): 0.0}
