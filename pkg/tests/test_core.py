import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import WORKED_EXAMPLES
from sbf.core import (
    DetectedTag,
    SbfConfig,
    dedup,
    ground_tags,
    match_sets,
    prf,
    score_pair,
)
from sbf.embedding import fixture_backend
from sbf.ontology import AudioClass, TagUniverse

# ---------------------------------------------------------------------------
# independent oracles: plain per-pair loops, no shared code with the kernels


def _cos(u, v) -> float:
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def oracle_grounded(phrase_embs, tag_embs, tag_t):
    """Indices of tags with any phrase cosine strictly above tag_t."""
    hits = set()
    for i, tag in enumerate(tag_embs):
        for p in phrase_embs:
            if _cos(tag, p) > tag_t:
                hits.add(i)
    return hits


def oracle_dedup(vectors, rep_t):
    """Second, independent greedy pass; returns kept indices."""
    kept = []
    for i, v in enumerate(vectors):
        if all(_cos(v, vectors[j]) < rep_t for j in kept):
            kept.append(i)
    return kept


def oracle_match(ac_embs, ar_embs, sim_t):
    """Literal quantifier enumeration of the three soft set operations."""
    tp = {i for i, t in enumerate(ar_embs)
          if any(_cos(t, u) > sim_t for u in ac_embs)}
    fp = {j for j, u in enumerate(ac_embs)
          if all(_cos(u, t) < sim_t for t in ar_embs)}
    fn = {i for i, t in enumerate(ar_embs)
          if all(_cos(t, u) < sim_t for u in ac_embs)}
    return tp, fp, fn


def unit_rows(rng, n, dim):
    m = rng.normal(size=(n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def make_universe(n, prefix="tag"):
    return TagUniverse(tuple(
        AudioClass(id=f"/t/{prefix}{i}", name=f"{prefix}{i}") for i in range(n)
    ))


def make_tags(embs, prefix="tag", sims=None):
    return [
        DetectedTag(
            class_id=f"/t/{prefix}{i}",
            name=f"{prefix}{i}",
            embedding=np.asarray(e, dtype=np.float64),
            best_phrase="p",
            best_sim=1.0 - 0.001 * i if sims is None else sims[i],
        )
        for i, e in enumerate(embs)
    ]


# ---------------------------------------------------------------------------


class TestGroundTags:
    def test_one_hot_reduces_to_membership(self):
        uni = make_universe(3)
        tags = np.eye(3)
        phrases = np.array([[1.0, 0, 0], [0, 1.0, 0]])
        out = ground_tags(["p0", "p1"], phrases, uni, tags, 0.5)
        assert {t.name for t in out} == {"tag0", "tag1"}
        assert all(t.best_sim == 1.0 for t in out)
        assert out[0].best_phrase == "p0" and out[1].best_phrase == "p1"

    def test_empty_phrases(self):
        uni = make_universe(3)
        assert ground_tags([], np.zeros((0, 3)), uni, np.eye(3), 0.4) == []

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for trial in range(30):
            tags = unit_rows(rng, 20, 8)
            phrases = unit_rows(rng, 5, 8)
            uni = make_universe(20)
            out = ground_tags([f"p{i}" for i in range(5)], phrases, uni, tags, 0.4)
            got = {int(t.class_id.split("tag")[1]) for t in out}
            assert got == oracle_grounded(phrases, tags, 0.4)

    def test_descending_order_with_universe_tiebreak(self):
        uni = make_universe(4)
        tags = np.array([[1.0, 0], [0, 1.0], [1.0, 0], [0.6, 0.8]])
        phrases = np.array([[1.0, 0.0]])
        out = ground_tags(["p"], phrases, uni, tags, 0.5)
        # tag0 and tag2 tie at 1.0: file order wins; tag3 follows at 0.6
        assert [t.name for t in out] == ["tag0", "tag2", "tag3"]

    def test_exact_threshold_does_not_ground(self):
        uni = make_universe(1)
        tags = np.array([[0.5, math.sqrt(3) / 2]])
        phrases = np.array([[1.0, 0.0]])
        assert ground_tags(["p"], phrases, uni, tags, 0.5) == []
        assert len(ground_tags(["p"], phrases, uni, tags, 0.49)) == 1

    def test_raising_tag_t_never_grows_the_set(self):
        rng = np.random.default_rng(3)
        tags = unit_rows(rng, 15, 6)
        phrases = unit_rows(rng, 4, 6)
        uni = make_universe(15)
        names = lambda t: {x.name for x in ground_tags(["a", "b", "c", "d"],
                                                       phrases, uni, tags, t)}
        lo, mid, hi = names(0.2), names(0.4), names(0.6)
        assert hi <= mid <= lo


class TestDedup:
    def test_near_duplicates_collapse_keeping_first(self):
        # Bell and Church bell overlap; Bird is independent
        bell = [1.0, 0.0, 0.0]
        church_bell = [0.8, 0.6, 0.0]
        bird = [0.0, 0.0, 1.0]
        tags = make_tags([bell, church_bell, bird], prefix="t")
        kept = dedup(tags, 0.45)
        assert [t.embedding.tolist() for t in kept] == [bell, bird]

    def test_all_distinct_unchanged(self):
        tags = make_tags(np.eye(4))
        assert dedup(tags, 0.45) == tags

    def test_exact_threshold_drops(self):
        a = [1.0, 0.0]
        b = [0.45, math.sqrt(1 - 0.45**2)]
        tags = make_tags([a, b])
        assert len(dedup(tags, 0.45)) == 1

    def test_matches_independent_greedy(self):
        rng = np.random.default_rng(17)
        for trial in range(50):
            embs = unit_rows(rng, 10, 4)
            rep_t = rng.uniform(0.2, 0.8)
            tags = make_tags(embs)
            kept = dedup(tags, rep_t)
            kept_idx = [int(t.name[3:]) for t in kept]
            assert kept_idx == oracle_dedup(embs, rep_t)
            # separation: every kept pair is strictly below rep_t
            for a, b in itertools.combinations(kept, 2):
                assert _cos(a.embedding, b.embedding) < rep_t
            # coverage: every dropped tag is explained by a kept one
            dropped = [t for t in tags if t not in kept]
            for d in dropped:
                assert any(_cos(d.embedding, k.embedding) >= rep_t for k in kept)

    def test_empty(self):
        assert dedup([], 0.45) == []


class TestMatchSets:
    REP_OFF = 1.0 - 1e-9  # keeps trailing dedup out of the way

    def test_one_hot_example(self):
        e = np.eye(3)
        a_c = make_tags([e[0], e[1]], prefix="c")  # Bell, Bird
        a_r = make_tags([e[0], e[2]], prefix="r")  # Bell, Conversation
        tp, fp, fn = match_sets(a_c, a_r, 0.45, 0.45)
        assert [t.name for t in tp] == ["r0"]
        assert tp[0].matched_name == "c0" and tp[0].match_sim == 1.0
        assert [t.name for t in fp] == ["c1"]
        assert [t.name for t in fn] == ["r1"]

    def test_perfect_scenario(self):
        e = np.eye(2)
        a_c = make_tags([e[0], e[1]], prefix="c")
        a_r = make_tags([e[0], e[1]], prefix="r")
        tp, fp, fn = match_sets(a_c, a_r, 0.45, 0.45)
        assert len(tp) == 2 and fp == [] and fn == []

    def test_empty_candidate_side(self):
        a_r = make_tags(np.eye(2), prefix="r")
        tp, fp, fn = match_sets([], a_r, 0.45, 0.45)
        assert tp == [] and fp == []
        assert [t.name for t in fn] == ["r0", "r1"]

    def test_empty_reference_side(self):
        a_c = make_tags(np.eye(2), prefix="c")
        tp, fp, fn = match_sets(a_c, [], 0.45, 0.45)
        assert tp == [] and fn == []
        assert [t.name for t in fp] == ["c0", "c1"]

    def test_exact_threshold_vanishes_from_all_sets(self):
        a_c = make_tags([[0.45, math.sqrt(1 - 0.45**2)]], prefix="c")
        a_r = make_tags([[1.0, 0.0]], prefix="r")
        tp, fp, fn = match_sets(a_c, a_r, 0.45, self.REP_OFF)
        assert tp == [] and fp == [] and fn == []

    def test_matches_quantifier_enumeration(self):
        rng = np.random.default_rng(11)
        for trial in range(50):
            nc, nr = rng.integers(0, 8, size=2)
            ac_embs = unit_rows(rng, int(nc), 5) if nc else np.zeros((0, 5))
            ar_embs = unit_rows(rng, int(nr), 5) if nr else np.zeros((0, 5))
            sim_t = rng.uniform(0.2, 0.8)
            a_c = make_tags(ac_embs, prefix="c")
            a_r = make_tags(ar_embs, prefix="r")
            tp, fp, fn = match_sets(a_c, a_r, sim_t, self.REP_OFF)
            otp, ofp, ofn = oracle_match(ac_embs, ar_embs, sim_t)
            assert {int(t.name[1:]) for t in tp} == otp
            assert {int(t.name[1:]) for t in fp} == ofp
            assert {int(t.name[1:]) for t in fn} == ofn
            # membership discipline
            assert {t.name for t in fp} <= {t.name for t in a_c}
            assert {t.name for t in tp} | {t.name for t in fn} <= {t.name for t in a_r}
            assert not ({t.name for t in tp} & {t.name for t in fn})

    def test_raising_sim_t_never_grows_tp(self):
        rng = np.random.default_rng(5)
        ac = make_tags(unit_rows(rng, 6, 4), prefix="c")
        ar = make_tags(unit_rows(rng, 6, 4), prefix="r")
        names = lambda t: {x.name for x in match_sets(ac, ar, t, self.REP_OFF)[0]}
        assert names(0.7) <= names(0.5) <= names(0.3)

    def test_trailing_dedup_applies(self):
        # both reference tags match, but they collapse to one at rep_t=0.45
        a = [1.0, 0.0]
        b = [0.9, math.sqrt(1 - 0.81)]
        a_c = make_tags([a], prefix="c")
        a_r = make_tags([a, b], prefix="r")
        tp, _, _ = match_sets(a_c, a_r, 0.45, 0.45)
        assert [t.name for t in tp] == ["r0"]


class TestPrf:
    def test_basic_arithmetic(self):
        assert prf(1, 1, 1) == (0.5, 0.5, 0.5)

    def test_perfect(self):
        assert prf(2, 0, 0) == (1.0, 1.0, 1.0)

    def test_vacuous_agreement(self):
        assert prf(0, 0, 0) == (1.0, 1.0, 1.0)

    def test_zero_tp_collapses_to_zero(self):
        assert prf(0, 3, 0) == (0.0, 0.0, 0.0)
        assert prf(0, 0, 2) == (0.0, 0.0, 0.0)
        assert prf(0, 1, 1) == (0.0, 0.0, 0.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            prf(-1, 0, 0)

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_outputs_in_unit_interval(self, tp, fp, fn):
        p, r, f = prf(tp, fp, fn)
        assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0 and 0.0 <= f <= 1.0
        if tp and not fp:
            assert p == 1.0
        if tp and not fn:
            assert r == 1.0

    @given(st.integers(1, 50), st.integers(0, 50), st.integers(0, 50))
    def test_fscore_between_p_and_r(self, tp, fp, fn):
        p, r, f = prf(tp, fp, fn)
        assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12


class TestOneHotReduction:
    def test_exhaustive_subsets_match_exact_set_oracle(self):
        e = np.eye(5)
        universe = list(range(5))
        for c_bits, r_bits in itertools.product(range(32), repeat=2):
            c_idx = [i for i in universe if c_bits >> i & 1]
            r_idx = [i for i in universe if r_bits >> i & 1]
            a_c = make_tags([e[i] for i in c_idx], prefix="c")
            a_r = make_tags([e[i] for i in r_idx], prefix="r")
            tp, fp, fn = match_sets(a_c, a_r, 0.45, 0.45)
            cs, rs = set(c_idx), set(r_idx)
            assert len(tp) == len(cs & rs)
            assert len(fp) == len(cs - rs)
            assert len(fn) == len(rs - cs)
            got = prf(len(tp), len(fp), len(fn))
            n_tp, n_fp, n_fn = len(cs & rs), len(cs - rs), len(rs - cs)
            if n_tp == n_fp == n_fn == 0:
                expected = (1.0, 1.0, 1.0)
            else:
                p = n_tp / (n_tp + n_fp) if n_tp + n_fp else 0.0
                r = n_tp / (n_tp + n_fn) if n_tp + n_fn else 0.0
                expected = (p, r, 2 * p * r / (p + r) if p + r else 0.0)
            assert got == expected


class TestScorePair:
    @pytest.mark.parametrize("example", WORKED_EXAMPLES, ids=["bells", "waves", "rain"])
    def test_golden_pairs(self, example, mini_universe, fix_config):
        cand, ref, phr_c, phr_r, tp, fp, fn = example
        rep = score_pair(cand, ref, mini_universe, fix_config)
        assert rep.candidate_phrases == phr_c
        assert rep.reference_phrases == phr_r
        assert {t.name for t in rep.tp} == tp
        assert {t.name for t in rep.fp} == fp
        assert {t.name for t in rep.fn} == fn

    def test_bell_family_collapses_before_matching(self, mini_universe, fix_config):
        cand, ref = WORKED_EXAMPLES[0][:2]
        rep = score_pair(cand, ref, mini_universe, fix_config)
        assert [t.name for t in rep.a_c] == ["Bell", "Bird"]
        assert [t.name for t in rep.a_r] == ["Bell", "Conversation"]

    def test_identical_captions_are_perfect(self, mini_universe, fix_config):
        cand = WORKED_EXAMPLES[0][0]
        rep = score_pair(cand, cand, mini_universe, fix_config)
        assert rep.fp == [] and rep.fn == []
        assert rep.fscore == 1.0

    def test_zero_phrase_captions_agree_vacuously(self, mini_universe, fix_config):
        rep = score_pair("of the and in", "in and of the", mini_universe, fix_config)
        assert rep.candidate_phrases == [] and rep.reference_phrases == []
        assert (rep.precision, rep.recall, rep.fscore) == (1.0, 1.0, 1.0)

    def test_one_sided_empty_flows_through(self, mini_universe, fix_config):
        rep = score_pair("of the and in", WORKED_EXAMPLES[0][1],
                         mini_universe, fix_config)
        assert rep.a_c == [] and len(rep.fn) == len(rep.a_r) > 0
        assert (rep.precision, rep.recall, rep.fscore) == (0.0, 0.0, 0.0)

    def test_deterministic_bitwise(self, mini_universe, fix_config):
        cand, ref = WORKED_EXAMPLES[2][:2]
        a = score_pair(cand, ref, mini_universe, fix_config)
        b = score_pair(cand, ref, mini_universe, fix_config)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_grounded_tags_exceed_tag_t(self, mini_universe, fix_config):
        for cand, ref, *_ in WORKED_EXAMPLES:
            rep = score_pair(cand, ref, mini_universe, fix_config)
            for t in rep.a_c + rep.a_r:
                assert t.best_sim > fix_config.tag_t

    def test_post_dedup_separation(self, mini_universe, fix_config):
        for cand, ref, *_ in WORKED_EXAMPLES:
            rep = score_pair(cand, ref, mini_universe, fix_config)
            for group in (rep.a_c, rep.a_r, rep.tp, rep.fp, rep.fn):
                for a, b in itertools.combinations(group, 2):
                    assert _cos(a.embedding, b.embedding) < fix_config.rep_t


class TestSbfConfig:
    def test_thresholds_validated(self, embeddings_path):
        backend = fixture_backend(embeddings_path)
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                SbfConfig(backend=backend, tag_t=bad)
        cfg = SbfConfig(backend=backend, tag_t=0.5, sim_t=0.3, rep_t=0.9)
        assert (cfg.tag_t, cfg.sim_t, cfg.rep_t) == (0.5, 0.3, 0.9)

    def test_snapshot_round_trips_to_json(self, fix_config):
        snap = fix_config.to_dict()
        assert json.loads(json.dumps(snap)) == snap
        assert snap["tag_t"] == 0.4 and snap["sim_t"] == 0.45 and snap["rep_t"] == 0.45
