import numpy as np
import pytest

from seppres import search
from seppres.search import (
    SearchConfig,
    counterexample_search,
    hyperdeterminant,
    known_compositions,
    replay_candidate,
    run_trial,
    s_rk_excess,
    tensor_rank_222,
)
from seppres.superop import SuperOp

GHZ = np.array([1, 0, 0, 0, 0, 0, 0, 1]) / np.sqrt(2)
W = np.array([0, 1, 1, 0, 1, 0, 0, 0]) / np.sqrt(3)


def ket(*idx, d=2):
    v = np.zeros(d * d)
    v[idx[0] * d + idx[1]] = 1
    return v


# --- tensor rank of 2x2x2 tensors --------------------------------------------------

def test_hyperdeterminant_values():
    assert hyperdeterminant(GHZ) == pytest.approx(0.25)
    assert abs(hyperdeterminant(W)) < 1e-15


def test_hyperdeterminant_is_local_invariant_up_to_determinants():
    rng = np.random.default_rng(0)
    mats = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3)]
    t = np.kron(np.kron(mats[0], mats[1]), mats[2]) @ GHZ
    factor = np.prod([np.linalg.det(m) for m in mats]) ** 2
    assert hyperdeterminant(t) == pytest.approx(factor * 0.25, rel=1e-10)


def test_tensor_ranks():
    product = np.kron(np.kron([1, 2], [0.5, 1j]), [1, -1])
    assert tensor_rank_222(product)[0] == 1
    assert tensor_rank_222(GHZ) == (2, pytest.approx(0.25))
    assert tensor_rank_222(np.kron([1, 1j], np.array([1, 0, 0, 1])))[0] == 2
    assert tensor_rank_222(W)[0] == 3
    assert tensor_rank_222(np.zeros(8)) == (0, 0.0)


# --- membership in S_{r,k} -----------------------------------------------------------

def test_rank_one_membership():
    prod_v = np.kron([1, 2, 0], [1, 0, 1j])
    assert s_rk_excess(np.outer(prod_v, prod_v.conj()), (3, 3), 1, 1) <= 1e-12
    bell = (ket(0, 0, d=3) + ket(1, 1, d=3)) / np.sqrt(2)
    assert s_rk_excess(np.outer(bell, prod_v), (3, 3), 1, 1) == pytest.approx(1.0)
    assert s_rk_excess(np.outer(bell, prod_v), (3, 3), 1, 2) <= 1e-12


def test_rank_two_membership_by_pencil():
    a, b = ket(0, 0), ket(1, 1)
    # span{|00>, |11>} is spanned by products
    y = np.outer(a + b, a) + np.outer(a, b)
    assert s_rk_excess(y, (2, 2), 2, 1) == 0.0
    # span{|00>, |01> - |10>} holds a single product direction (double root)
    singlet = ket(0, 1) - ket(1, 0)
    y = np.outer(a, a) + np.outer(singlet, b)
    assert s_rk_excess(y, (2, 2), 2, 1) == 1.0


def test_rank_above_r_is_excess():
    assert s_rk_excess(np.eye(4), (2, 2), 2, 1) == pytest.approx(1.0)


@pytest.mark.parametrize("r,k,dims", [(1, 1, (3, 3)), (1, 2, (3, 3)), (2, 1, (3, 3)), (2, 1, (2, 3))])
def test_sampled_members_are_inside(r, k, dims):
    rng = np.random.default_rng(r * 10 + k)
    for _ in range(50):
        assert s_rk_excess(search._sample_s_rk(rng, dims, r, k), dims, r, k) <= 1e-8


def test_unsupported_membership_case():
    with pytest.raises(NotImplementedError):
        s_rk_excess(np.eye(9)[:, :2] @ np.eye(9)[:2], (3, 3), 2, 2)


def test_partial_transpose_breaks_rank_two_sets():
    assert all(not pt for _, pt in known_compositions(1, 2))
    assert any(pt for _, pt in known_compositions(1, 1))
    pt = SuperOp.partial_transpose_map((2, 2))
    # (|00>+|11>)<00| + (|00>-|11>)<11| lies in S_{2,1} but its image does not
    a, b = ket(0, 0), ket(1, 1)
    x = np.outer(a, a) + np.outer(b, a) + np.outer(a, b) - np.outer(b, b)
    assert s_rk_excess(x, (2, 2), 2, 1) == 0.0
    y = pt.matrix @ x.reshape(-1)
    assert s_rk_excess(y.reshape(4, 4), (2, 2), 2, 1) > 1e-3


# --- the search harness ------------------------------------------------------------------

@pytest.mark.parametrize("question,overrides", [
    ("rank_r_bipartite", {"shape": (3, 3), "r": 2, "k": 1}),
    ("rank_r_bipartite", {"shape": (3, 3), "r": 1, "k": 2}),
    ("multipartite_k", {"shape": (2, 2, 2), "k": 2}),
    ("multipartite_k", {"shape": (2, 2, 3), "k": 1}),
])
def test_small_search_is_clean(question, overrides):
    rep = counterexample_search(question, trials=60, seed=3, **overrides)
    assert rep.candidates == []
    assert rep.stats["injected_trials"] == 20
    assert rep.stats["injected_known_form"] == 20
    assert rep.stats["injected_falsely_reported"] == 0
    assert rep.stats["random_preserving"] == 0


def test_hyphenated_question_names():
    rep = counterexample_search("multipartite-k", shape=(2, 2), k=1, trials=3)
    assert rep.config["question"] == "multipartite_k"


def test_search_is_deterministic():
    a = counterexample_search("rank_r_bipartite", shape=(2, 2), r=1, k=1, trials=9, seed=5)
    b = counterexample_search("rank_r_bipartite", shape=(2, 2), r=1, k=1, trials=9, seed=5)
    assert a.to_dict() == b.to_dict()


def test_trials_replay_bit_for_bit():
    cfg = SearchConfig(shape=(2, 2, 2), k=2, trials=6, seed=9)
    for t in range(6):
        first, second = run_trial("multipartite_k", cfg, t), run_trial("multipartite_k", cfg, t)
        assert first[:4] == second[:4]
        assert first[4].tobytes() == second[4].tobytes()


def test_planted_candidate_is_logged_and_replays(monkeypatch):
    # pretend nothing is a known form so every preserving trial is reported
    monkeypatch.setattr(search, "_multipartite_known_distance", lambda mat, cfg: 0.5)
    cfg = SearchConfig(shape=(2, 2), k=1, trials=6, seed=2)
    rep = counterexample_search("multipartite_k", cfg)
    assert len(rep.candidates) == 2  # the injected trials
    assert rep.stats["injected_falsely_reported"] == 2
    assert rep.best_violation == 0.5
    for cand in rep.candidates:
        assert cand["seed"] == [2, cand["trial"]]
        again = replay_candidate("multipartite_k", cfg, cand)
        assert again["violation"] == cand["violation"]
        assert abs(again["known_form_distance"] - cand["known_form_distance"]) <= 1e-9
        mat = np.array(cand["input"]["re"]) + 1j * np.array(cand["input"]["im"])
        assert mat.tobytes() == run_trial("multipartite_k", cfg, cand["trial"])[4].tobytes()


@pytest.mark.parametrize("question,overrides", [
    ("nope", {}),
    ("rank_r_bipartite", {"shape": (2, 2, 2)}),
    ("rank_r_bipartite", {"shape": (3, 3), "k": 3}),
    ("rank_r_bipartite", {"shape": (3, 3), "r": 2, "k": 2}),
    ("multipartite_k", {"shape": (2, 2, 3), "k": 2}),
    ("multipartite_k", {"shape": (2, 2, 2), "k": 3}),
])
def test_invalid_configurations(question, overrides):
    with pytest.raises(ValueError):
        counterexample_search(question, trials=1, **overrides)


def test_desk_scale_only():
    with pytest.raises(ValueError):
        SearchConfig(shape=(5, 5))
    with pytest.raises(ValueError):
        SearchConfig(shape=(2, 2, 2, 2))
