"""Randomized counterexample search for two unresolved extensions.

``rank_r_bipartite``
    Maps on operators of a bipartite space that send
    ``S_{r,k} = {V C W^* : columns of V, W of Schmidt rank <= k, C r x r}``
    into itself. For r = 1 the preservers are known: compositions of local
    sandwiches ``X -> L X M``, the transpose, and (k = 1 only) the partial
    transpose. The search asks whether anything else preserves the set for
    larger r. Supported: r = 1 with any k, and r = 2 with k = 1.

``multipartite_k``
    Invertible operators on a multipartite space that send tensors of rank
    ``<= k`` to tensors of rank ``<= k``. For k = 1 the preservers are the
    swaps times tensor products of invertibles. Supported: k = 1 on any
    desk-scale shape, and k = 2 on (2, 2, 2), where tensor rank is decided
    exactly by flattening ranks and the hyperdeterminant.

Every trial draws its randomness from ``default_rng([seed, trial])`` so any
logged candidate can be replayed on its own. A candidate is a map that passes
the sampled preservation test but does not match the known form. An empty
candidate list is evidence, never proof.
"""

from dataclasses import asdict, dataclass
from functools import reduce
from math import prod

import numpy as np

from .errors import AmbiguousSubsystem
from .multipartite import RECOVERED, recover_local_form_multipartite
from .oracles import SearchReport
from .preservers import NEITHER, _candidate_map, candidate_compositions, match_sandwich_forms
from .superop import SuperOp
from .tensor import Opr, Permutation, swap_operator

QUESTIONS = ("rank_r_bipartite", "multipartite_k")
KINDS = ("injected", "perturbed", "random")


@dataclass
class SearchConfig:
    shape: tuple = (3, 3)
    k: int = 1
    r: int = 2
    trials: int = 10_000
    seed: int = 0
    samples_per_trial: int = 6
    tol: float = 1e-8
    cond_bound: float = 100.0

    def __post_init__(self):
        self.shape = tuple(int(d) for d in self.shape)
        if self.trials < 0 or self.samples_per_trial < 1:
            raise ValueError("trial and sample budgets must be positive")
        if any(d < 1 or d > 4 for d in self.shape) or not 2 <= len(self.shape) <= 3:
            raise ValueError("desk scale only: 2 or 3 parties, each dimension <= 4")


# --- small numerical helpers -------------------------------------------------------

def _gauss(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def _kron(arrays):
    return reduce(np.kron, arrays)


def _invertible(rng, n, bound):
    while True:
        a = _gauss(rng, (n, n))
        if np.linalg.cond(a) <= bound:
            return a


def _ratio(s, i):
    """s[i] / s[0] for a descending spectrum, 0 when s is too short."""
    return float(s[i] / s[0]) if len(s) > i and s[0] > 0 else 0.0


def _schmidt_excess(vec, dims, k):
    s = np.linalg.svd(vec.reshape(dims), compute_uv=False)
    return _ratio(s, k)


def hyperdeterminant(t):
    """Cayley hyperdeterminant of a 2 x 2 x 2 tensor.

    Equal to the discriminant of the binary quadratic ``det(s T_0 + t T_1)``
    built from the two slices along the first axis.
    """
    t = np.asarray(t).reshape(2, 2, 2)
    a, b = t[0], t[1]
    adj_a = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])
    mid = np.trace(adj_a @ b)
    return mid * mid - 4 * np.linalg.det(a) * np.linalg.det(b)


def tensor_rank_222(t, tol=1e-8):
    """Tensor rank over C of a 2 x 2 x 2 tensor, with the W-class margin.

    Returns ``(rank, margin)``. The margin is the relative hyperdeterminant
    ``|Det| / ||t||^4`` when all flattenings have rank two, and 0 otherwise.
    """
    t = np.asarray(t).reshape(2, 2, 2)
    nrm = np.linalg.norm(t)
    if nrm == 0:
        return 0, 0.0
    ranks = []
    for i in range(3):
        s = np.linalg.svd(np.moveaxis(t, i, 0).reshape(2, 4), compute_uv=False)
        ranks.append(2 if s[1] > tol * s[0] else 1)
    if ranks == [1, 1, 1]:
        return 1, 0.0
    if 1 in ranks:
        return 2, 0.0
    margin = float(abs(hyperdeterminant(t)) / nrm**4)
    return (2 if margin > tol else 3), margin


# --- membership in S_{r,k} ---------------------------------------------------------

def _pencil_excess(a, b):
    """How far span{a, b} (m x n matrices) is from being spanned by rank-one
    matrices. 0 means spanned.

    Every 2 x 2 minor of ``s a + t b`` is a binary quadratic in (s, t). The
    span holds two independent rank-one members exactly when these quadratics
    are all zero or all proportional to one quadratic with distinct roots.
    """
    m, n = a.shape
    rows = []
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(n):
                for l in range(k + 1, n):
                    alpha = a[i, k] * a[j, l] - a[i, l] * a[j, k]
                    gamma = b[i, k] * b[j, l] - b[i, l] * b[j, k]
                    beta = a[i, k] * b[j, l] + b[i, k] * a[j, l] - a[i, l] * b[j, k] - b[i, l] * a[j, k]
                    rows.append((alpha, beta, gamma))
    q = np.linalg.svd(np.array(rows), compute_uv=False)
    if q[0] <= 1e-12:
        return 0.0
    # on (2, 2) there is a single minor, so q has one entry
    if len(q) > 1 and q[1] / q[0] > 1e-10:
        return float(q[1] / q[0])
    _, _, vh = np.linalg.svd(np.array(rows))
    alpha, beta, gamma = vh[0].conj()
    disc = abs(beta * beta - 4 * alpha * gamma)
    # a double root gives only one rank-one direction
    return 0.0 if disc > 1e-10 else 1.0


def s_rk_excess(y, dims, r, k):
    """Violation measure for ``y`` in ``S_{r,k}`` (0 means inside)."""
    m, n = dims
    u, s, vh = np.linalg.svd(y)
    if s[0] == 0:
        return 0.0
    rank = int(np.count_nonzero(s > 1e-8 * s[0]))
    excess = _ratio(s, r)
    if rank > r:
        return excess
    cols = [u[:, i] for i in range(rank)]
    rows = [vh[i].conj() for i in range(rank)]
    if rank == 1:
        return max(excess, _schmidt_excess(cols[0], (m, n), k), _schmidt_excess(rows[0], (m, n), k))
    if rank == 2 and k == 1:
        return max(
            excess,
            _pencil_excess(cols[0].reshape(m, n), cols[1].reshape(m, n)),
            _pencil_excess(rows[0].reshape(m, n), rows[1].reshape(m, n)),
        )
    raise NotImplementedError("membership test implemented for r = 1, or r = 2 with k = 1")


def _sample_s_rk(rng, dims, r, k):
    """Random member of S_{r,k} of rank j, with j uniform in 1..r."""
    m, n = dims
    j = int(rng.integers(1, r + 1))

    def sr_k():
        return (_gauss(rng, (m, k)) @ _gauss(rng, (k, n))).reshape(-1)

    v = np.array([sr_k() for _ in range(j)]).T
    w = np.array([sr_k() for _ in range(j)]).T
    x = v @ _gauss(rng, (j, j)) @ w.conj().T
    return x / np.linalg.norm(x)


# --- trial maps ------------------------------------------------------------------

def _local(rng, dims, bound):
    m, n = dims
    op = np.kron(_invertible(rng, m, bound), _invertible(rng, n, bound))
    if m == n and rng.random() < 0.5:
        op = swap_operator(Permutation((1, 0)), dims).entries @ op
    return op


def known_compositions(k, r):
    """Transpose flags of the known preservers of S_{r,k}.

    The partial transpose preserves S_{1,1} but not S_{2,1}: it sends
    ``(a1 (x) b1)(c1 (x) d1)^* + (a2 (x) b2)(c2 (x) d2)^*``-type sums to
    operators whose column space needs all four products ``a_i (x) conj(d_j)``.
    """
    return candidate_compositions(k if r == 1 else 2)


def _known_superop(rng, dims, k, r, bound):
    base = SuperOp.sandwich(Opr(_local(rng, dims, bound)), Opr(_local(rng, dims, bound)), dims)
    choices = known_compositions(k, r)
    transpose, partial = choices[rng.integers(len(choices))]
    return base.compose(_candidate_map(dims, transpose, partial)).matrix


def _known_multipartite(rng, dims, bound):
    p = len(dims)
    while True:
        perm = Permutation(tuple(int(i) for i in rng.permutation(p)))
        if all(dims[i] == dims[j] for j, i in enumerate(perm.images)):
            break
    mats = [_invertible(rng, d, bound) for d in dims]
    return swap_operator(perm, dims).entries @ _kron(mats)


def _trial_map(question, cfg, trial):
    rng = np.random.default_rng([cfg.seed, trial])
    kind = KINDS[trial % len(KINDS)]
    dims = cfg.shape
    d = prod(dims)
    size = d * d if question == "rank_r_bipartite" else d
    if kind == "random":
        return kind, 0.0, _gauss(rng, (size, size)), rng
    if question == "rank_r_bipartite":
        mat = _known_superop(rng, dims, cfg.k, cfg.r, cfg.cond_bound)
    else:
        mat = _known_multipartite(rng, dims, cfg.cond_bound)
    eps = 0.0
    if kind == "perturbed":
        eps = float(10.0 ** rng.uniform(-4, 0))
        g = _gauss(rng, (size, size))
        mat = mat + eps * np.linalg.norm(mat) * g / np.linalg.norm(g)
    return kind, eps, mat, rng


# --- property tests ------------------------------------------------------------------

def _rank_r_violation(mat, cfg, rng):
    dims, d = cfg.shape, prod(cfg.shape)
    worst = 0.0
    for _ in range(cfg.samples_per_trial):
        x = _sample_s_rk(rng, dims, cfg.r, cfg.k)
        y = (mat @ x.reshape(-1)).reshape(d, d)
        worst = max(worst, s_rk_excess(y, dims, cfg.r, cfg.k))
    return worst


def _rank_r_known_distance(mat, cfg):
    """0 when the map matches a known form, else the smallest realignment ratio."""
    phi = SuperOp(mat, cfg.shape)
    best = np.inf
    for mt in match_sandwich_forms(phi, cfg.k if cfg.r == 1 else 2, tol=1e-7):
        if mt.U is None:
            best = min(best, mt.realign_ratio)
            continue
        if (mt.residual <= 1e-8 and mt.U_report.verdict != NEITHER
                and mt.V_report.verdict != NEITHER):
            return 0.0
        best = min(best, max(mt.realign_ratio, mt.residual))
    return float(best)


def _product_kets(rng, dims, count):
    return [_kron([_gauss(rng, n) for n in dims]) for _ in range(count)]


def _multipartite_violation(mat, cfg, rng):
    dims = cfg.shape
    worst = 0.0
    if cfg.k == 1:
        for v in _product_kets(rng, dims, cfg.samples_per_trial):
            img = mat @ v
            t = img.reshape(dims)
            for i in range(len(dims)):
                s = np.linalg.svd(np.moveaxis(t, i, 0).reshape(dims[i], -1), compute_uv=False)
                worst = max(worst, _ratio(s, 1))
        return worst
    # k = 2 on (2, 2, 2). Rank-2 tensors are dense, so a forward test can
    # never see a rank-3 image; instead pull back W-class (rank-3) tensors.
    # A pullback of rank <= 2 is a rank-2 tensor that L sends to rank 3.
    w_state = np.zeros(8, dtype=complex)
    w_state[[1, 2, 4]] = 1 / np.sqrt(3)
    for _ in range(cfg.samples_per_trial):
        w = _kron([_invertible(rng, 2, cfg.cond_bound) for _ in range(3)]) @ w_state
        v = np.linalg.solve(mat, w)
        rank_v, margin = tensor_rank_222(v, cfg.tol)
        if rank_v <= 2:
            worst = max(worst, margin)
    return worst


def _multipartite_known_distance(mat, cfg):
    op = Opr(mat, cfg.shape, cfg.shape)
    try:
        rec = recover_local_form_multipartite(op, tol=1e-8, cond_bound=1e8)
    except AmbiguousSubsystem:
        return 1.0
    if rec.status == RECOVERED:
        return 0.0
    return 1.0 if np.isnan(rec.residual) else float(rec.residual)


def _validate(question, cfg):
    if question not in QUESTIONS:
        raise ValueError(f"unknown question {question!r}; choose from {QUESTIONS}")
    if question == "rank_r_bipartite":
        if len(cfg.shape) != 2:
            raise ValueError("rank_r_bipartite needs a bipartite shape")
        if not 1 <= cfg.k < min(cfg.shape):
            raise ValueError(f"k out of range: need 1 <= k < {min(cfg.shape)}")
        if not (cfg.r == 1 or (cfg.r == 2 and cfg.k == 1)):
            raise ValueError("supported cases are r = 1 (any k) and r = 2 with k = 1")
    else:
        if cfg.k == 2 and cfg.shape != (2, 2, 2):
            raise ValueError("k = 2 is supported on shape (2, 2, 2) only")
        if cfg.k not in (1, 2):
            raise ValueError("supported cases are k = 1 (any shape) and k = 2 on (2, 2, 2)")


def run_trial(question, cfg, trial):
    """Replayable single trial: (kind, eps, violation, known_distance, matrix)."""
    kind, eps, mat, rng = _trial_map(question, cfg, trial)
    if question == "rank_r_bipartite":
        violation = _rank_r_violation(mat, cfg, rng)
        known = _rank_r_known_distance(mat, cfg) if violation <= cfg.tol else None
    else:
        violation = _multipartite_violation(mat, cfg, rng)
        known = _multipartite_known_distance(mat, cfg) if violation <= cfg.tol else None
    return kind, eps, violation, known, mat


def counterexample_search(question, config=None, **overrides) -> SearchReport:
    """Sample maps, test preservation, and log preservers outside the known form.

    Trials cycle through injected known-form maps (which must never be
    reported), known forms perturbed by a relative amount in [1e-4, 1], and
    Gaussian random maps.
    """
    question = question.replace("-", "_")
    cfg = config or SearchConfig()
    if overrides:
        cfg = SearchConfig(**{**asdict(cfg), **overrides})
    _validate(question, cfg)
    stats = {f"{k}_{what}": 0 for k in KINDS for what in ("trials", "preserving", "known_form")}
    stats["injected_falsely_reported"] = 0
    candidates = []
    for t in range(cfg.trials):
        kind, eps, violation, known, mat = run_trial(question, cfg, t)
        stats[f"{kind}_trials"] += 1
        if known is None:
            continue
        stats[f"{kind}_preserving"] += 1
        if known == 0.0:
            stats[f"{kind}_known_form"] += 1
            continue
        if kind == "injected":
            stats["injected_falsely_reported"] += 1
        candidates.append({
            "trial": t,
            "seed": [cfg.seed, t],
            "kind": kind,
            "eps": eps,
            "violation": violation,
            "known_form_distance": known,
            "input": {"re": mat.real.tolist(), "im": mat.imag.tolist()},
        })
    conf = asdict(cfg)
    conf["question"] = question
    conf["shape"] = list(cfg.shape)
    return SearchReport(
        trials=cfg.trials,
        candidates=candidates,
        best_violation=max((c["known_form_distance"] for c in candidates), default=0.0),
        stats=stats,
        config=conf,
    )


def replay_candidate(question, cfg, candidate):
    """Re-run the trial behind ``candidate`` and return its fresh measurements."""
    _, _, violation, known, _ = run_trial(question.replace("-", "_"), cfg, candidate["trial"])
    return {"violation": violation, "known_form_distance": known}
