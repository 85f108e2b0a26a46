"""The acceptance suite, shared by the pytest run and ``seppres selftest``.

Each criterion is a function returning a :class:`CriterionResult`. Numbers in
``details`` are the measured quantities, so a failing line says by how much.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvertibilityUnknown, MultipleKrausDirections, NotIsometry
from .multipartite import (
    FactorList,
    gme,
    gme_invariance_check,
    is_product_state,
    recover_local_form_multipartite,
    separable_sum_test,
)
from .oracles import brute_force_S_norm, grid_gme_oracle
from .preservers import (
    NEITHER,
    check_schmidt_rank_preservation,
    classify_cp_sk_preserver,
    classify_local_form,
    classify_norm_isometry,
    sep_isometry_implies_unitary_check,
    verify_thm_main,
)
from .schmidt import S_norm, s_norm, schmidt_rank
from .search import SearchConfig, counterexample_search
from .superop import SuperOp
from .tensor import Ket, Opr, Permutation, kron_all, maximally_entangled, sample, swap_operator


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float = 0.0
    limit: float = None
    details: dict = field(default_factory=dict)

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        budget = f" (limit {self.limit:.0f} s)" if self.limit else ""
        return f"[{mark}] criterion {self.number:2d}: {self.title} [{self.seconds:.1f} s{budget}]"

    def to_dict(self):
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "seconds": self.seconds, "limit": self.limit, "details": self.details}


CRITERIA = {}


def criterion(number, title, limit=None):
    def wrap(fn):
        def run():
            start = time.perf_counter()
            passed, details = fn()
            secs = time.perf_counter() - start
            if limit is not None and secs > limit:
                passed = False
                details["runtime_exceeded"] = True
            return CriterionResult(number, title, bool(passed), secs, limit, details)

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        CRITERIA[number] = run
        return run

    return wrap


def _local_form_op(rng, dims, swap):
    m, n = dims
    p = sample("invertible_opr", dims=m, cond_bound=100, rng=rng).entries
    q = sample("invertible_opr", dims=n, cond_bound=100, rng=rng).entries
    op = np.kron(p, q)
    if swap:
        op = swap_operator(Permutation((1, 0)), dims).entries @ op
    return Opr(op, dims, dims)


# --- 1 ------------------------------------------------------------------------

@criterion(1, "closed-form s(k) against sampled SR<=k overlaps", limit=10)
def closed_form_vector_norm():
    rng = np.random.default_rng(101)
    worst_gap, worst_witness = np.inf, 0.0
    for _ in range(50):
        v = sample("haar_ket", dims=(3, 3), rng=rng)
        for k in (1, 2):
            a = rng.standard_normal((10_000, 3, k)) + 1j * rng.standard_normal((10_000, 3, k))
            b = rng.standard_normal((10_000, 3, k)) + 1j * rng.standard_normal((10_000, 3, k))
            w = (a @ np.swapaxes(b, 1, 2)).reshape(10_000, 9)
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            sampled = np.abs(w.conj() @ v.amps).max()
            res = s_norm(v, k)
            worst_gap = min(worst_gap, res.value - sampled)
            attained = abs(res.witness.vdot(v))
            ok_witness = schmidt_rank(res.witness) <= k and abs(res.witness.norm() - 1) < 1e-12
            err = abs(attained - res.value) if ok_witness else np.inf
            worst_witness = max(worst_witness, err)
    passed = worst_gap >= -1e-12 and worst_witness <= 1e-10
    return passed, {"min_closed_minus_sampled": worst_gap, "max_witness_error": worst_witness}


# --- 2 ------------------------------------------------------------------------

@criterion(2, "see-saw S(k) against the brute-force oracle", limit=120)
def seesaw_vs_oracle():
    worst = 0.0
    monotone = True
    runs = 0
    for dims in ((2, 2), (3, 3)):
        for k in (1, 2):
            for i in range(20):
                x = sample("gaussian_opr", seed=1000 + 100 * dims[0] + 10 * k + i, dims=dims)
                res = S_norm(x, k, seed=i)
                oracle = brute_force_S_norm(x, k, seed=i)
                worst = max(worst, abs(res.value - oracle))
                monotone &= bool(np.all(np.diff(res.objective_trace) >= 0))
                runs += 1
    return worst <= 1e-4 and monotone, {"runs": runs, "max_abs_diff": worst,
                                         "all_traces_monotone": monotone}


# --- 3 ------------------------------------------------------------------------

@criterion(3, "maximally entangled anchors for s(k) and S(k)")
def max_entangled_anchors():
    vec_err, op_err, oracle_err = 0.0, 0.0, 0.0
    for d in (2, 3):
        phi = maximally_entangled(d)
        proj = Opr.outer(phi, phi)
        for k in range(1, d + 1):
            vec_err = max(vec_err, abs(s_norm(phi, k).value - np.sqrt(k / d)))
            op_err = max(op_err, abs(S_norm(proj, k).value - k / d))
            oracle_err = max(oracle_err, abs(brute_force_S_norm(proj, k) - k / d))
    passed = vec_err <= 1e-14 and op_err <= 1e-4 and oracle_err <= 1e-4
    return passed, {"s_norm_error": vec_err, "S_norm_error": op_err, "oracle_error": oracle_err}


# --- 4 ------------------------------------------------------------------------

@criterion(4, "local form <=> Schmidt-rank preservation on invertible operators", limit=300)
def local_form_equivalence():
    rng = np.random.default_rng(404)
    disagreements = []
    for i in range(200):
        op = _local_form_op(rng, (3, 3), swap=i % 2 == 1)
        local = classify_local_form(op).verdict != NEITHER
        pres = all(check_schmidt_rank_preservation(op, k, seed=i).verdict for k in (1, 2))
        if not (local and pres):
            disagreements.append(("local", i))
    min_leak = np.inf
    for i in range(200):
        op = sample("invertible_opr", dims=(3, 3), rng=rng)
        local = classify_local_form(op).verdict != NEITHER
        reports = [check_schmidt_rank_preservation(op, k, seed=i) for k in (1, 2)]
        min_leak = min(min_leak, *(r.max_leak for r in reports))
        if local or any(r.verdict for r in reports):
            disagreements.append(("dense", i))
    return not disagreements, {"disagreements": disagreements,
                               "smallest_dense_leak": float(min_leak)}


# --- 5 ------------------------------------------------------------------------

@criterion(5, "singular operator that preserves separability without local form")
def singular_counterexample():
    e = np.eye(2)
    e11, e12 = np.outer(e[0], e[0]), np.outer(e[0], e[1])
    op = Opr(np.kron(e11, e11) + np.kron(e12, e12), (2, 2), (2, 2))
    pres = check_schmidt_rank_preservation(op, 1)
    verdict = classify_local_form(op).verdict
    try:
        verify_thm_main(op, 1)
        gated = False
    except InvertibilityUnknown:
        gated = True
    passed = pres.max_leak <= 1e-10 and verdict == NEITHER and gated
    return passed, {"max_leak": pres.max_leak, "verdict": verdict, "gated": gated}


# --- 6 ------------------------------------------------------------------------

@criterion(6, "partial transpose keeps S(1) but not S(2)", limit=300)
def partial_transpose_anomaly():
    phi = SuperOp.partial_transpose_map((3, 3))
    worst = 0.0
    for i in range(100):
        x = sample("gaussian_opr", seed=6000 + i, dims=(3, 3))
        worst = max(worst, abs(S_norm(phi(x), 1, seed=i).value - S_norm(x, 1, seed=i).value))
    try:
        classify_norm_isometry(phi, 2)
        gap, oracle_gap = 0.0, 0.0
    except NotIsometry as exc:
        gap = exc.details["gap"]
        x = exc.witness
        oracle_gap = abs(brute_force_S_norm(phi(x), 2) - brute_force_S_norm(x, 2))
    passed = worst <= 2e-6 and gap > 1e-3 and oracle_gap > 1e-3
    return passed, {"max_S1_deviation": worst, "S2_gap": gap, "oracle_S2_gap": oracle_gap}


# --- 7 ------------------------------------------------------------------------

@criterion(7, "CP maps preserving SR<=k projectors collapse to one Kraus operator")
def single_kraus_collapse():
    rng = np.random.default_rng(707)
    worst_defect, failures = 0.0, 0
    for i in range(50):
        op = _local_form_op(rng, (3, 3), swap=i % 2 == 1)
        res = classify_cp_sk_preserver(SuperOp.conjugation(op), 1 + i % 2)
        worst_defect = max(worst_defect, res.proportionality_defect)
        overlap = abs(np.vdot(res.L.entries, op.entries)) / (res.L.fro() * op.fro())
        if res.report.verdict == NEITHER or abs(overlap - 1) > 1e-8:
            failures += 1
    try:
        classify_cp_sk_preserver(SuperOp.depolarizing((3, 3)), 1)
        witness_ok = False
    except MultipleKrausDirections as exc:
        w = exc.witness
        witness_ok = False
        if w is not None:
            image = SuperOp.depolarizing((3, 3))(Opr.outer(w, w)).entries
            s = np.linalg.svd(image, compute_uv=False)
            witness_ok = schmidt_rank(w) <= 1 and s[1] > 1e-8 * s[0]
    passed = worst_defect <= 1e-8 and failures == 0 and witness_ok
    return passed, {"max_proportionality_defect": worst_defect, "failures": failures,
                    "depolarizing_witness": witness_ok}


# --- 8 ------------------------------------------------------------------------

def factor_pair(rng, dims, differ):
    """Random product factor lists that differ on exactly ``differ`` parties."""
    parties = rng.choice(len(dims), size=differ, replace=False)
    a, b = [], []
    for i, d in enumerate(dims):
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        a.append(x)
        if i in parties:
            b.append(rng.standard_normal(d) + 1j * rng.standard_normal(d))
        else:
            c = rng.standard_normal() + 1j * rng.standard_normal()
            b.append(c * x)
    return FactorList(a), FactorList(b)


@criterion(8, "sum of two product kets is product iff they differ on <= 1 party")
def separable_sum_rule():
    rng = np.random.default_rng(808)
    failures = 0
    for d in range(4):
        for _ in range(1000):
            a, b = factor_pair(rng, (2, 2, 3), d)
            res = separable_sum_test(a, b)
            if res.differ_count != d or res.sum_is_separable != (d <= 1):
                failures += 1
    return failures == 0, {"trials": 4000, "failures": failures}


# --- 9 ------------------------------------------------------------------------

def random_swap_product(rng, dims, cond_bound=100):
    sigma = Permutation(tuple(int(i) for i in rng.permutation(len(dims))))
    mats = [sample("invertible_opr", dims=d, cond_bound=cond_bound, rng=rng) for d in dims]
    s = swap_operator(sigma, dims)
    return sigma, mats, Opr(s.entries @ kron_all(mats).entries, s.row_dims, dims)


@criterion(9, "recovery of S_sigma(P1 x P2 x P3) and rejection of non-preservers", limit=120)
def multipartite_round_trip():
    rng = np.random.default_rng(909)
    wrong_sigma, worst = 0, 0.0
    for _ in range(100):
        sigma, _, op = random_swap_product(rng, (2, 2, 3))
        rec = recover_local_form_multipartite(op)
        if rec.status != "Recovered" or rec.sigma != sigma:
            wrong_sigma += 1
            continue
        worst = max(worst, rec.residual)
    cnot = np.eye(4)[[0, 1, 3, 2]]
    rejected = 0
    for op in (Opr(cnot, (2, 2), (2, 2)), Opr(np.kron(cnot, np.eye(3)), (2, 2, 3), (2, 2, 3))):
        rec = recover_local_form_multipartite(op)
        if rec.status == "NotSeparabilityPreserving" and rec.witness is not None:
            image = Ket(op.entries @ rec.witness.amps, op.row_dims)
            rejected += (not is_product_state(image)[0]) and is_product_state(rec.witness)[0]
    passed = wrong_sigma == 0 and worst <= 1e-8 and rejected == 2
    return passed, {"wrong_or_failed": wrong_sigma, "max_residual": worst,
                    "non_preservers_rejected": rejected}


# --- 10 -----------------------------------------------------------------------

@criterion(10, "geometric measure anchors and invariance")
def gme_anchors():
    ghz = np.zeros(8, dtype=complex)
    ghz[[0, 7]] = 1 / np.sqrt(2)
    e_ghz = gme(Ket(ghz, (2, 2, 2))).E
    _, e_grid = grid_gme_oracle(ghz)
    e_prod = max(gme(sample("product_multipartite_ket", seed=s, dims=(2, 2, 3))).E
                 for s in range(10))
    bip = 0.0
    for s in range(50):
        v = sample("haar_ket", seed=1000 + s, dims=(3, 3) if s % 2 else (2, 3))
        bip = max(bip, abs(gme(v, seed=s).E - (1 - s_norm(v, 1).value ** 2)))
    rng = np.random.default_rng(1010)
    inv = 0.0
    for s in range(20):
        sigma = Permutation(tuple(int(i) for i in rng.permutation(3)))
        us = [sample("haar_unitary", dims=d, rng=rng) for d in (2, 2, 3)]
        sw = swap_operator(sigma, (2, 2, 3))
        u = Opr(sw.entries @ kron_all(us).entries, sw.row_dims, (2, 2, 3))
        inv = max(inv, gme_invariance_check(u, n_samples=6, seed=s).max_deviation)
    passed = (abs(e_ghz - 0.5) <= 1e-6 and abs(e_grid - 0.5) <= 1e-6 and e_prod <= 1e-10
              and bip <= 2e-6 and inv <= 1e-6)
    return passed, {"E_ghz": e_ghz, "E_ghz_grid": e_grid, "max_E_product": e_prod,
                    "max_bipartite_identity_error": bip, "max_invariance_deviation": inv}


# --- 11 -----------------------------------------------------------------------

@criterion(11, "product-ket length preservation coincides with unitarity")
def unitarity_from_product_lengths():
    unit_ok, pert_ok = 0, 0
    for s in range(50):
        u = sample("haar_unitary", seed=s, dims=(3, 3))
        rec = sep_isometry_implies_unitary_check(u, seed=s, tol=1e-10)
        unit_ok += rec.product_norm_deviation <= 1e-10 and rec.gram_defect <= 1e-10
        g = sample("gaussian_opr", seed=500 + s, dims=(3, 3)).entries
        pert = Opr(u.entries + 1e-3 * g, (3, 3), (3, 3))
        rec = sep_isometry_implies_unitary_check(pert, seed=s, tol=1e-5)
        pert_ok += rec.product_norm_deviation > 1e-5 and rec.gram_defect > 1e-5 and rec.consistent
    return unit_ok == 50 and pert_ok == 50, {"unitaries_ok": unit_ok, "perturbed_ok": pert_ok}


# --- 12 -----------------------------------------------------------------------

@criterion(12, "counterexample harness: no candidates, no false reports", limit=600)
def harness_soundness():
    reports = {
        "rank_r_bipartite": counterexample_search(
            "rank_r_bipartite", SearchConfig(shape=(3, 3), k=1, r=2, trials=10_000, seed=1)),
        "multipartite_k": counterexample_search(
            "multipartite_k", SearchConfig(shape=(2, 2, 2), k=2, trials=10_000, seed=1)),
    }
    details = {}
    passed = True
    for name, rep in reports.items():
        injected = rep.stats["injected_trials"]
        known = rep.stats["injected_known_form"]
        details[name] = {"candidates": len(rep.candidates),
                         "injected": injected, "injected_recognized": known}
        passed &= not rep.candidates and known == injected
        passed &= rep.stats["injected_falsely_reported"] == 0
    return passed, details


def run_all(numbers=None):
    numbers = sorted(CRITERIA) if numbers is None else numbers
    return [CRITERIA[n]() for n in numbers]
