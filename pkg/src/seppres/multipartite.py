"""Product states, the geometric measure of entanglement, and recovery of the
``S_sigma (P_1 (x) ... (x) P_p)`` form of a separability-preserving operator.
"""

from dataclasses import dataclass, field
from functools import reduce
from math import prod
from typing import NamedTuple, Optional

import numpy as np

from . import config
from .errors import AmbiguousSubsystem, InvertibilityUnknown, NotSeparabilityPreserving, ShapeError
from .tensor import Ket, Opr, Permutation, as_ket, as_opr, kron_all, swap_operator


def _kron(arrays):
    return reduce(np.kron, arrays)


@dataclass(frozen=True)
class FactorList:
    """One ket per party; their tensor product is a multipartite ket."""

    factors: tuple

    def __init__(self, factors):
        object.__setattr__(self, "factors", tuple(as_ket(f) for f in factors))
        if not self.factors:
            raise ShapeError("a factor list needs at least one factor")
        for f in self.factors:
            if len(f.dims) != 1:
                raise ShapeError("each factor must live on a single party")

    @property
    def dims(self):
        return tuple(f.dims[0] for f in self.factors)

    def __len__(self):
        return len(self.factors)

    def __getitem__(self, i):
        return self.factors[i]

    def __iter__(self):
        return iter(self.factors)

    def ket(self) -> Ket:
        return Ket(_kron([f.amps for f in self.factors]), self.dims)

    def to_dict(self):
        from .io import to_dict

        return [to_dict(f) for f in self.factors]


def _cut_matrix(t, i):
    return np.moveaxis(t, i, 0).reshape(t.shape[i], -1)


def is_product_state(v, tol=None):
    """``(True, factors)`` when every single-party cut has Schmidt rank one.

    The factors are the dominant left singular vectors of the cuts, with the
    overall amplitude put on the first one so that their tensor product
    reproduces ``v``. Returns ``(False, None)`` otherwise.
    """
    tol = config.SR_TOL if tol is None else tol
    v = as_ket(v)
    t = v.tensor()
    if not np.any(t):
        raise ValueError("the zero vector is neither product nor entangled")
    vecs = []
    for i in range(len(v.dims)):
        u, s, _ = np.linalg.svd(_cut_matrix(t, i), full_matrices=False)
        if len(s) > 1 and s[1] > tol * s[0]:
            return False, None
        vecs.append(u[:, 0])
    c = np.vdot(_kron(vecs), v.amps)
    vecs[0] = vecs[0] * c
    return True, FactorList([Ket(x) for x in vecs])


def parallel(a, b, tol=None):
    """The phase- and scale-insensitive relation ``a || b``."""
    tol = config.PARALLEL_TOL if tol is None else tol
    a, b = np.asarray(a).reshape(-1), np.asarray(b).reshape(-1)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("parallelism is undefined for a zero factor")
    return 1.0 - abs(np.vdot(a, b)) / (na * nb) <= tol


class SumTest(NamedTuple):
    differ_count: int
    sum_is_separable: bool


def differ_count(a, b, tol=None):
    a, b = FactorList(a), FactorList(b)
    if a.dims != b.dims:
        raise ShapeError(f"factor lists have shapes {a.dims} and {b.dims}")
    return sum(not parallel(x.amps, y.amps, tol) for x, y in zip(a, b))


def separable_sum_test(a, b, tol=None) -> SumTest:
    """Count the parties where ``a`` and ``b`` are not parallel and decide,
    independently, whether ``a + b`` is a product state.
    """
    a, b = FactorList(a), FactorList(b)
    d = differ_count(a, b, tol)
    va, vb = a.ket(), b.ket()
    total = va + vb
    if total.norm() <= 1e-12 * (va.norm() + vb.norm()):
        raise ValueError("a + b vanishes; the sum test does not apply")
    flag, _ = is_product_state(total)
    return SumTest(d, flag)


# --- geometric measure of entanglement ---------------------------------------

@dataclass
class GmeResult:
    G: float
    E: float
    witness: FactorList
    restarts: int
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "G": self.G,
            "E": self.E,
            "witness": self.witness.to_dict(),
            "restarts": self.restarts,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": list(self.objective_trace),
        }


def _contract_except(t, ws, i):
    """Contract ``t`` (batch, n_1, ..., n_p) with conj(w_s) for every s != i."""
    p = len(ws)
    out = t
    # contract from the last party down so axis positions stay valid
    for s in reversed(range(p)):
        if s == i:
            continue
        out = np.einsum("b...k,bk->b...", np.moveaxis(out, s + 1, -1), ws[s].conj())
    return out


def _gme_starts(t, restarts, seed):
    dims = t.shape
    starts = [[] for _ in dims]
    for i in range(len(dims)):
        u, _, _ = np.linalg.svd(_cut_matrix(t, i), full_matrices=False)
        starts[i].append(u[:, 0])
    for r in range(1, restarts):
        rng = np.random.default_rng(seed + r)
        for i, d in enumerate(dims):
            g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            starts[i].append(g / np.linalg.norm(g))
    return [np.array(s) for s in starts]


def gme(v, restarts=None, max_iters=None, tol=None, seed=0) -> GmeResult:
    """Geometric measure ``E = 1 - G^2`` with ``G`` the largest overlap of the
    normalized ``v`` with a unit product state.

    Alternating maximization: each party's factor is replaced by the
    normalized contraction of ``v`` with the other factors, which is the exact
    maximizer for that party. The first start is the dominant singular vector
    of each single-party cut, the others are random. The returned G is a
    lower bound on the true supremum.
    """
    restarts = config.GME_RESTARTS if restarts is None else int(restarts)
    max_iters = config.GME_MAX_ITERS if max_iters is None else int(max_iters)
    tol = config.GME_TOL if tol is None else tol
    if restarts < 1:
        raise ValueError("need at least one restart")
    v = as_ket(v)
    if v.norm() == 0:
        raise ValueError("the zero vector has no geometric measure")
    t = v.normalized().tensor()
    p = len(v.dims)
    ws = _gme_starts(t, restarts, seed)
    tb = np.broadcast_to(t, (restarts,) + t.shape)
    obj = np.full(restarts, -np.inf)
    active = np.ones(restarts, dtype=bool)
    iters = np.zeros(restarts, dtype=int)
    traces = [[] for _ in range(restarts)]

    if p == 1:
        w = t / np.linalg.norm(t)
        return GmeResult(1.0, 0.0, FactorList([Ket(w)]), restarts, 0, True, [1.0])

    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        cur = [w[idx].copy() for w in ws]
        for i in range(p):
            z = _contract_except(tb[idx], cur, i)
            nz = np.linalg.norm(z, axis=1)
            keep = nz > 0
            cur[i][keep] = z[keep] / nz[keep, None]
        val = np.abs(np.einsum("bk,bk->b", cur[0].conj(), _contract_except(tb[idx], cur, 0)))
        for pos, r in enumerate(idx):
            if val[pos] < obj[r]:
                active[r] = False
                continue
            gain = val[pos] - obj[r]
            for i in range(p):
                ws[i][r] = cur[i][pos]
            obj[r] = val[pos]
            traces[r].append(float(val[pos]))
            iters[r] += 1
            if gain < tol:
                active[r] = False

    best = int(np.argmax(obj))
    witness = FactorList([Ket(ws[i][best]) for i in range(p)])
    g = float(min(abs(np.vdot(witness.ket().amps, t.reshape(-1))), 1.0))
    return GmeResult(
        G=g,
        E=1.0 - g * g,
        witness=witness,
        restarts=restarts,
        iterations=int(iters[best]),
        converged=not bool(active[best]),
        objective_trace=traces[best],
    )


# --- recovery of the local form -------------------------------------------------

RECOVERED = "Recovered"
NOT_PRESERVING = "NotSeparabilityPreserving"
INVERTIBILITY_UNKNOWN = "InvertibilityUnknown"


@dataclass
class RecoveredForm:
    status: str
    sigma: Optional[Permutation] = None
    factors: list = field(default_factory=list)
    residual: float = float("nan")
    witness: Optional[Ket] = None
    cond: float = float("nan")
    probes: int = 0

    def operator(self):
        """``S_sigma (P_1 (x) ... (x) P_p)`` assembled from the recovered data."""
        in_dims = tuple(f.entries.shape[1] for f in self.factors)
        s = swap_operator(self.sigma, in_dims).entries
        out_dims = tuple(in_dims[i] for i in self.sigma.images)
        return Opr(s @ _kron([f.entries for f in self.factors]), out_dims, in_dims)

    def factors_unitary(self, tol=1e-8):
        """True when every P_i is a scalar multiple of a unitary."""
        if self.status != RECOVERED:
            return False
        for f in self.factors:
            a = f.entries
            g = a.conj().T @ a
            lam = np.trace(g).real / len(g)
            if lam <= 0 or np.linalg.norm(g / lam - np.eye(len(g))) > tol:
                return False
        return True

    def to_dict(self):
        from .io import to_dict

        out = {"status": self.status, "residual": self.residual, "cond": self.cond,
               "probes": self.probes}
        if self.sigma is not None:
            out["sigma"] = list(self.sigma.one_based())
            out["factors"] = [to_dict(f) for f in self.factors]
        if self.witness is not None:
            out["witness"] = to_dict(self.witness)
        return out


def _normalize_factor(a):
    """Scale so the first column has unit norm and a real positive leading entry."""
    col = a[:, 0]
    nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
    c = np.linalg.norm(col) * col[nz[0]] / abs(col[nz[0]])
    return a / c, c


def _probe_states(in_dims, ref):
    """Basis probes ``|j>`` and sum probes ``ref + |j>`` in each party."""
    for i, d in enumerate(in_dims):
        for j in range(d):
            e = np.zeros(d, dtype=complex)
            e[j] = 1.0
            yield i, j, "basis", e
            s = ref[i] + e
            if np.linalg.norm(s) > 1e-12 and not parallel(s, ref[i]):
                yield i, j, "sum", s / np.linalg.norm(s)


def _witness_search(op, in_dims, rng, tol, count=200):
    for _ in range(count):
        vecs = []
        for d in in_dims:
            g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            vecs.append(g / np.linalg.norm(g))
        v = _kron(vecs)
        img = Ket(op.entries @ v, op.row_dims)
        if img.norm() > 0 and not is_product_state(img, tol)[0]:
            return Ket(v, in_dims)
    return None


def recover_local_form_multipartite(op, tol=None, cond_bound=None, seed=0,
                                    strict=False) -> RecoveredForm:
    """Recover ``sigma`` and ``P_i`` with ``L = S_sigma (P_1 (x) ... (x) P_p)``.

    Probes: the reference product ket (all ``|0>``), the same with party
    ``i`` replaced by ``|j>``, and with party ``i`` replaced by
    ``|0> + |j>``. Every image must be a product; a basis probe in party ``i``
    changes exactly one output slot, which identifies where party ``i`` is
    sent. Columns of ``P_i`` are read off by contracting each image with the
    normalized reference factors of the other slots, so a single global
    scalar remains; it is fitted by least squares and attached to ``P_1``.

    Output party shapes are taken from ``op.row_dims``. With ``strict`` set,
    failures raise instead of being reported through ``status``.
    """
    op = as_opr(op)
    tol = 1e-8 if tol is None else tol
    bound = config.COND_BOUND if cond_bound is None else cond_bound
    in_dims, out_dims = op.col_dims, op.row_dims
    p = len(in_dims)
    if len(out_dims) != p or prod(out_dims) != prod(in_dims):
        raise ShapeError(f"expected a square operator on {p} parties, got {out_dims} x {in_dims}")
    mat = op.entries
    c = float(np.linalg.cond(mat))
    if not np.isfinite(c) or c > bound:
        if strict:
            raise InvertibilityUnknown(c, bound)
        return RecoveredForm(INVERTIBILITY_UNKNOWN, cond=c)
    rng = np.random.default_rng(seed)

    def fail(witness, n_probes, message):
        if strict:
            raise NotSeparabilityPreserving(message, witness=witness)
        return RecoveredForm(NOT_PRESERVING, witness=witness, cond=c, probes=n_probes)

    ref = [np.eye(d, dtype=complex)[0] for d in in_dims]
    base = mat @ _kron(ref)
    if np.linalg.norm(base) <= 1e-12 * np.linalg.norm(mat, 2):
        ref = []
        for d in in_dims:
            g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            ref.append(g / np.linalg.norm(g))
        base = mat @ _kron(ref)
    ok, base_f = is_product_state(Ket(base, out_dims))
    if not ok:
        return fail(Ket(_kron(ref), in_dims), 1, "image of the reference product ket is entangled")
    unit_base = [f.amps / f.norm() for f in base_f]

    slots = [set() for _ in range(p)]
    n_probes = 1
    basis_images = {}
    for i, j, kind, vec in _probe_states(in_dims, ref):
        n_probes += 1
        probe = _kron(ref[:i] + [vec] + ref[i + 1:])
        img = Ket(mat @ probe, out_dims)
        if img.norm() <= 1e-12 * np.linalg.norm(mat, 2):
            return fail(Ket(probe, in_dims), n_probes, "probe image vanishes")
        ok, fl = is_product_state(img)
        if not ok:
            return fail(Ket(probe, in_dims), n_probes, "probe image is entangled")
        if kind == "basis":
            basis_images[i, j] = img
            for s in range(p):
                if not parallel(fl[s].amps, unit_base[s]):
                    slots[i].add(s)

    targets = []
    for i in range(p):
        if len(slots[i]) != 1:
            msg = (f"party {i} changes output slots {sorted(slots[i])}; "
                   "expected exactly one")
            witness = _witness_search(op, in_dims, rng, config.SR_TOL)
            if witness is not None:
                return fail(witness, n_probes, msg)
            raise AmbiguousSubsystem(msg)
        targets.append(next(iter(slots[i])))
    if len(set(targets)) != p:
        raise AmbiguousSubsystem(f"two parties map to the same output slot: {targets}")
    images = [0] * p
    for i, k in enumerate(targets):
        images[k] = i
    sigma = Permutation(tuple(images))
    for i, k in enumerate(targets):
        if out_dims[k] != in_dims[i]:
            raise AmbiguousSubsystem(
                f"party {i} (dim {in_dims[i]}) lands in slot {k} of dim {out_dims[k]}"
            )

    factors = []
    scale = 1.0
    for i, k in enumerate(targets):
        cols = []
        others = [unit_base[s] for s in range(p) if s != k]
        for j in range(in_dims[i]):
            t = basis_images[i, j].tensor()
            t = np.moveaxis(t, k, -1)
            # contract every slot except k against the reference factors
            flat = t.reshape(-1, out_dims[k])
            cols.append(_kron(others).conj() @ flat if others else flat[0])
        a, cscale = _normalize_factor(np.array(cols).T)
        factors.append(a)
        scale *= cscale

    form = RecoveredForm(RECOVERED, sigma, [Opr(a) for a in factors], cond=c, probes=n_probes)
    recon = form.operator().entries
    alpha = np.vdot(recon, mat) / np.vdot(recon, recon)
    factors[0] = factors[0] * alpha
    form.factors = [Opr(a) for a in factors]
    recon = form.operator().entries
    form.residual = float(np.linalg.norm(mat - recon) / np.linalg.norm(mat))
    if form.residual > tol:
        witness = _witness_search(op, in_dims, rng, config.SR_TOL)
        if witness is not None:
            return fail(witness, n_probes, f"reconstruction residual {form.residual:.3g}")
        raise AmbiguousSubsystem(
            f"probes are consistent but the reconstruction residual is {form.residual:.3g}"
        )
    return form


# --- invariance of the geometric measure ---------------------------------------

@dataclass
class GmeInvarianceReport:
    samples: int
    max_deviation: float
    worst_input: Ket
    invariant: bool
    local_unitary: bool
    consistent: bool
    recovery_status: str

    def to_dict(self):
        from .io import to_dict

        return {
            "samples": self.samples,
            "max_deviation": self.max_deviation,
            "worst_input": to_dict(self.worst_input),
            "invariant": self.invariant,
            "local_unitary": self.local_unitary,
            "consistent": self.consistent,
            "recovery_status": self.recovery_status,
        }


def _random_inputs(dims, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for s in range(n):
        if s % 2 == 0:
            vecs = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in dims]
            v = _kron(vecs)
        else:
            v = rng.standard_normal(prod(dims)) + 1j * rng.standard_normal(prod(dims))
        out.append(Ket(v / np.linalg.norm(v), dims))
    return out


def gme_invariance_check(u, n_samples=50, tol=1e-6, seed=0, restarts=None) -> GmeInvarianceReport:
    """Compare E(v) and E(Uv) on random product and Haar kets.

    The measure is invariant exactly when ``U`` is a swap times a tensor
    product of unitaries; the recovery routine supplies that structural
    verdict and the two are required to agree.
    """
    u = as_opr(u)
    dims = u.col_dims
    if prod(u.row_dims) != prod(dims):
        raise ShapeError("gme_invariance_check needs a square operator")
    worst, worst_v = -1.0, None
    for idx, v in enumerate(_random_inputs(dims, n_samples, seed)):
        e0 = gme(v, restarts=restarts, seed=seed + idx).E
        e1 = gme(Ket(u.entries @ v.amps, u.row_dims), restarts=restarts, seed=seed + idx).E
        if abs(e1 - e0) > worst:
            worst, worst_v = abs(e1 - e0), v
    try:
        rec = recover_local_form_multipartite(u)
        status = rec.status
    except AmbiguousSubsystem:
        rec, status = None, "AmbiguousSubsystem"
    gram = u.entries.conj().T @ u.entries
    unitary = bool(np.linalg.norm(gram - np.eye(len(gram))) <= 1e-8)
    local = bool(unitary and rec is not None and rec.factors_unitary())
    invariant = worst <= tol
    return GmeInvarianceReport(n_samples, float(worst), worst_v, invariant, local,
                               invariant == local, status)
