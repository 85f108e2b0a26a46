import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seppres.errors import NotSeparabilityPreserving
from seppres.multipartite import (
    INVERTIBILITY_UNKNOWN,
    NOT_PRESERVING,
    RECOVERED,
    FactorList,
    differ_count,
    gme,
    gme_invariance_check,
    is_product_state,
    recover_local_form_multipartite,
    separable_sum_test,
)
from seppres.oracles import grid_gme_oracle
from seppres.schmidt import s_norm
from seppres.tensor import Ket, Opr, Permutation, kron_all, maximally_entangled, sample, swap_operator

seeds = st.integers(min_value=0, max_value=2**31 - 1)
GHZ = Ket(np.array([1, 0, 0, 0, 0, 0, 0, 1]) / np.sqrt(2), (2, 2, 2))
W = Ket(np.array([0, 1, 1, 0, 1, 0, 0, 0]) / np.sqrt(3), (2, 2, 2))
CNOT = Opr(np.eye(4)[[0, 1, 3, 2]], (2, 2), (2, 2))


def rand_vec(rng, d):
    return rng.standard_normal(d) + 1j * rng.standard_normal(d)


def orth(rng, x):
    """A random vector orthogonal to ``x``."""
    y = rand_vec(rng, len(x))
    return y - np.vdot(x, y) / np.vdot(x, x) * x


def local_swap_op(rng, dims, kind="invertible_opr", sigma=None):
    sigma = sigma or Permutation(tuple(rng.permutation(len(dims))))
    factors = [sample(kind, dims=d, rng=rng) for d in dims]
    s = swap_operator(sigma, dims)
    return s @ kron_all(factors), sigma, factors


# --- product states ------------------------------------------------------------

def test_random_product_is_detected_with_factors():
    rng = np.random.default_rng(0)
    parts = [rand_vec(rng, d) for d in (2, 3, 2)]
    v = Ket(np.kron(np.kron(parts[0], parts[1]), parts[2]), (2, 3, 2))
    flag, fl = is_product_state(v)
    assert flag
    np.testing.assert_allclose(fl.ket().amps, v.amps, atol=1e-12)
    for got, want in zip(fl, parts):
        assert abs(abs(np.vdot(got.amps, want)) - np.linalg.norm(got.amps) * np.linalg.norm(want)) < 1e-10


def test_entangled_states_are_not_products():
    assert is_product_state(GHZ) == (False, None)
    bell_one = kron_all([maximally_entangled(2), Ket.basis(2, 0)])
    assert not is_product_state(bell_one)[0]


def test_product_test_rejects_zero():
    with pytest.raises(ValueError):
        is_product_state(Ket(np.zeros(8), (2, 2, 2)))


# --- separable sums --------------------------------------------------------------

def test_sum_examples():
    rng = np.random.default_rng(1)
    x, y, z = rand_vec(rng, 2), rand_vec(rng, 3), rand_vec(rng, 2)
    a = FactorList([x, y, z])
    assert separable_sum_test(a, FactorList([x, orth(rng, y), z])) == (1, True)
    assert separable_sum_test(a, FactorList([orth(rng, x), orth(rng, y), z])) == (2, False)
    assert separable_sum_test(a, a) == (0, True)


def test_sum_rejects_cancellation():
    a = FactorList([np.array([1.0, 0]), np.array([0, 1.0])])
    b = FactorList([np.array([-1.0, 0]), np.array([0, 1.0])])
    with pytest.raises(ValueError):
        separable_sum_test(a, b)


@given(seeds, st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_sum_separable_iff_at_most_one_difference(seed, d):
    rng = np.random.default_rng(seed)
    dims = (2, 3, 2)
    a = [rand_vec(rng, n) for n in dims]
    b = list(a)
    for i in rng.choice(3, size=d, replace=False):
        b[i] = rand_vec(rng, dims[i])
    for i in range(3):
        if b[i] is a[i]:
            b[i] = a[i] * np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(0.5, 2)
    res = separable_sum_test(FactorList(a), FactorList(b))
    assert res.differ_count == d
    assert res.sum_is_separable == (d <= 1)


@given(seeds, st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_local_maps_do_not_increase_differences(seed, r):
    rng = np.random.default_rng(seed)
    dims = (2, 2, 3)
    op, _, _ = local_swap_op(rng, dims)
    a = [rand_vec(rng, n) for n in dims]
    b = list(a)
    for i in rng.choice(3, size=r, replace=False):
        b[i] = rand_vec(rng, dims[i])
    images = []
    for fl in (a, b):
        ok, factors = is_product_state(op @ FactorList(fl).ket())
        assert ok
        images.append(factors)
    assert differ_count(*images) <= r


# --- geometric measure ---------------------------------------------------------------

def test_gme_product_state():
    res = gme(sample("product_multipartite_ket", seed=4, dims=(2, 3, 2)))
    assert res.G == pytest.approx(1.0, abs=1e-10) and res.E == pytest.approx(0.0, abs=1e-10)


def test_gme_ghz_and_w_against_grid_oracle():
    for v, expected_g2 in ((GHZ, 0.5), (W, 4 / 9)):
        res = gme(v)
        g_oracle, _ = grid_gme_oracle(v)
        assert res.G**2 == pytest.approx(expected_g2, abs=1e-8)
        assert res.G == pytest.approx(g_oracle, abs=1e-6)


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_gme_result_invariants(seed):
    v = sample("haar_ket", seed=seed, dims=(2, 2, 3))
    res = gme(v, restarts=6, seed=seed)
    trace = res.objective_trace
    assert all(b >= a for a, b in zip(trace, trace[1:]))
    w = res.witness.ket()
    assert abs(w.norm() - 1) <= 1e-10
    assert abs(abs(w.vdot(v)) - res.G) <= 1e-10
    assert abs(res.E - (1 - res.G**2)) <= 1e-12
    assert 0 <= res.G <= 1 + 1e-12


@pytest.mark.parametrize("seed", range(8))
def test_bipartite_gme_matches_closed_form(seed):
    v = sample("haar_ket", seed=seed, dims=(3, 3))
    assert abs(gme(v).E - (1 - s_norm(v, 1).value ** 2)) <= 2e-6


def test_gme_normalizes_input():
    assert gme(GHZ * 3.0).E == pytest.approx(0.5, abs=1e-10)


# --- recovery -----------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_recovery_roundtrip(seed):
    rng = np.random.default_rng(seed)
    dims = (2, 2, 3)
    op, sigma, factors = local_swap_op(rng, dims)
    rec = recover_local_form_multipartite(op)
    assert rec.status == RECOVERED
    assert rec.sigma == sigma
    assert rec.residual <= 1e-8
    np.testing.assert_allclose(rec.operator().entries, op.entries, atol=1e-8 * np.abs(op.entries).max())
    scales = []
    for got, want in zip(rec.factors, factors):
        c = np.vdot(want.entries, got.entries) / np.vdot(want.entries, want.entries)
        assert np.linalg.norm(got.entries - c * want.entries) <= 1e-8 * np.linalg.norm(got.entries)
        scales.append(c)
    assert abs(np.prod(scales) - 1) <= 1e-8


def test_every_permutation_of_three_parties():
    rng = np.random.default_rng(3)
    for images in itertools.permutations(range(3)):
        op, sigma, _ = local_swap_op(rng, (2, 3, 2), sigma=Permutation(images))
        rec = recover_local_form_multipartite(op)
        assert rec.status == RECOVERED and rec.sigma == sigma


def test_bipartite_unitary_identity_sigma():
    op, _, _ = local_swap_op(np.random.default_rng(5), (2, 3), kind="haar_unitary",
                             sigma=Permutation.identity(2))
    rec = recover_local_form_multipartite(op)
    assert rec.status == RECOVERED and rec.sigma == Permutation.identity(2)
    assert rec.factors_unitary()


def test_cnot_is_not_separability_preserving():
    rec = recover_local_form_multipartite(CNOT)
    assert rec.status == NOT_PRESERVING
    assert not is_product_state(CNOT @ rec.witness)[0]
    assert is_product_state(rec.witness)[0]
    with pytest.raises(NotSeparabilityPreserving):
        recover_local_form_multipartite(CNOT, strict=True)


def test_singular_operator_is_gated():
    op = Opr(np.diag([1.0, 1, 1, 0]), (2, 2), (2, 2))
    assert recover_local_form_multipartite(op).status == INVERTIBILITY_UNKNOWN


def test_recovery_report_is_one_based():
    op, sigma, _ = local_swap_op(np.random.default_rng(2), (2, 2, 2), sigma=Permutation((1, 2, 0)))
    assert recover_local_form_multipartite(op).to_dict()["sigma"] == [2, 3, 1]


# --- invariance of the measure -------------------------------------------------------------

def test_local_unitary_swap_keeps_measure():
    op, _, _ = local_swap_op(np.random.default_rng(8), (2, 2, 2), kind="haar_unitary")
    rep = gme_invariance_check(op, n_samples=20)
    assert rep.max_deviation <= 1e-6 and rep.invariant and rep.local_unitary and rep.consistent


def test_global_phase_is_irrelevant():
    op, _, _ = local_swap_op(np.random.default_rng(9), (2, 3), kind="haar_unitary")
    rep = gme_invariance_check(op * np.exp(0.7j), n_samples=20)
    assert rep.max_deviation <= 1e-6 and rep.consistent


def test_cnot_changes_measure():
    rep = gme_invariance_check(CNOT, n_samples=20)
    assert rep.max_deviation > 0.1
    assert not rep.invariant and not rep.local_unitary and rep.consistent
    plus_one = kron_all([Ket(np.array([1, 1]) / np.sqrt(2)), Ket.basis(2, 1)])
    assert gme(plus_one).E == pytest.approx(0.0, abs=1e-12)
    assert gme(CNOT @ plus_one).E == pytest.approx(0.5, abs=1e-10)
