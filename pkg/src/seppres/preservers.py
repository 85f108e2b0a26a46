"""Classify operators and maps by the structures that preserve Schmidt rank.

Local form of a bipartite operator: ``L = P (x) Q`` or, when both parties have
the same dimension, ``L = S (P (x) Q)`` with ``S`` the swap. Local form is
detected by the operator Schmidt decomposition (realignment SVD): ``L`` is an
elementary tensor exactly when its realigned matrix has rank one.
"""

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import NamedTuple, Optional

import numpy as np

from . import config
from .errors import (
    InvertibilityUnknown,
    MultipleKrausDirections,
    NotCompletelyPositive,
    NotIsometry,
    ShapeError,
)
from .schmidt import S_norm
from .superop import SuperOp
from .tensor import Ket, Opr, Permutation, as_opr, swap_operator

PRODUCT = "Product"
SWAP_TIMES_PRODUCT = "SwapTimesProduct"
NEITHER = "Neither"


def _bipartite(op):
    op = as_opr(op)
    if len(op.row_dims) != 2 or len(op.col_dims) != 2:
        raise ShapeError(
            f"expected an operator on a bipartite space, got {op.row_dims} x {op.col_dims}"
        )
    return op


def cond_gate(op, bound=None):
    """Raise InvertibilityUnknown when ``op`` is too ill-conditioned."""
    bound = config.COND_BOUND if bound is None else bound
    mat = op.entries if isinstance(op, Opr) else op.matrix
    c = float(np.linalg.cond(mat))
    if not np.isfinite(c) or c > bound:
        raise InvertibilityUnknown(c, bound)
    return c


# --- operator Schmidt decomposition ----------------------------------------

class OperatorSchmidt(NamedTuple):
    coeffs: np.ndarray
    left_ops: list
    right_ops: list


def realign(op):
    """Realigned matrix R[(a, a'), (b, b')] = L[(a, b), (a', b')]."""
    op = _bipartite(op)
    (m, n), (mc, nc) = op.row_dims, op.col_dims
    t = op.entries.reshape(m, n, mc, nc).transpose(0, 2, 1, 3)
    return t.reshape(m * mc, n * nc)


def operator_schmidt_split(op) -> OperatorSchmidt:
    """``L = sum_i c_i E_i (x) F_i`` with Frobenius-orthonormal E_i, F_i."""
    op = _bipartite(op)
    (m, n), (mc, nc) = op.row_dims, op.col_dims
    u, s, vh = np.linalg.svd(realign(op), full_matrices=False)
    left = [Opr(u[:, i].reshape(m, mc)) for i in range(len(s))]
    right = [Opr(vh[i].reshape(n, nc)) for i in range(len(s))]
    return OperatorSchmidt(s, left, right)


# --- local form -------------------------------------------------------------

@dataclass
class LocalFormReport:
    verdict: str
    P: Optional[Opr]
    Q: Optional[Opr]
    residual: float
    operator_schmidt_coeffs: np.ndarray
    unitary: bool = False

    def unitary_factors(self):
        """(W, Y) with ``W (x) Y = P (x) Q`` and W, Y unitary, if they exist."""
        if not self.unitary:
            return None
        lam = np.sqrt(self.P.entries.shape[0])
        return self.P * lam, self.Q / lam

    def reconstruct(self):
        if self.verdict == NEITHER:
            return None
        pq = np.kron(self.P.entries, self.Q.entries)
        if self.verdict == SWAP_TIMES_PRODUCT:
            m = self.P.entries.shape[0]
            pq = swap_operator(Permutation((1, 0)), (m, m)).entries @ pq
        return pq

    def to_dict(self):
        out = {
            "verdict": self.verdict,
            "residual": self.residual,
            "operator_schmidt_coeffs": [float(c) for c in self.operator_schmidt_coeffs],
            "unitary": self.unitary,
        }
        if self.P is not None:
            from .io import to_dict

            out["P"] = to_dict(self.P)
            out["Q"] = to_dict(self.Q)
        return out


def _normalize_pair(e, f, c):
    """Scale so P has unit Frobenius norm and a real positive leading entry."""
    flat = e.reshape(-1)
    lead = flat[np.argmax(np.abs(flat) > 1e-12 * np.abs(flat).max())]
    phase = lead / abs(lead)
    return e / phase, c * phase * f


def _proportional_to_unitary(a, tol):
    g = a @ a.conj().T
    lam = np.trace(g).real / len(g)
    return lam > 0 and np.linalg.norm(g / lam - np.eye(len(g))) <= tol


def _product_test(mat, row_dims, col_dims, tol):
    split = operator_schmidt_split(Opr(mat, row_dims, col_dims))
    c = split.coeffs
    residual = float(np.sqrt(np.sum(c[1:] ** 2)) / np.linalg.norm(c))
    ok = len(c) == 1 or c[1] <= tol * c[0]
    p, q = _normalize_pair(split.left_ops[0].entries, split.right_ops[0].entries, c[0])
    return ok, residual, p, q, c


def classify_local_form(op, tol=None) -> LocalFormReport:
    """Decide whether ``op`` is ``P (x) Q``, ``S (P (x) Q)`` or neither."""
    tol = config.REALIGN_TOL if tol is None else tol
    op = _bipartite(op)
    if not np.any(op.entries):
        raise ValueError("the zero operator has no local form")
    ok, res, p, q, coeffs = _product_test(op.entries, op.row_dims, op.col_dims, tol)
    verdict = PRODUCT if ok else NEITHER
    best_res = res
    if not ok and op.row_dims[0] == op.row_dims[1]:
        s = swap_operator(Permutation((1, 0)), op.row_dims).entries
        ok2, res2, p2, q2, _ = _product_test(s @ op.entries, op.row_dims, op.col_dims, tol)
        if ok2:
            verdict, p, q = SWAP_TIMES_PRODUCT, p2, q2
        best_res = min(res, res2)
    if verdict == NEITHER:
        return LocalFormReport(NEITHER, None, None, best_res, coeffs)
    report = LocalFormReport(verdict, Opr(p), Opr(q), 0.0, coeffs)
    recon = report.reconstruct()
    report.residual = float(np.linalg.norm(op.entries - recon) / np.linalg.norm(op.entries))
    utol = max(1e-8, 100 * tol)
    report.unitary = bool(_proportional_to_unitary(p, utol) and _proportional_to_unitary(q, utol))
    return report


# --- Schmidt-rank preservation -----------------------------------------------

@dataclass
class PreservationReport:
    samples: int
    k: int
    max_leak: float
    verdict: bool
    worst_input: Ket

    def to_dict(self):
        from .io import to_dict

        return {
            "samples": self.samples,
            "k": self.k,
            "max_leak": self.max_leak,
            "verdict": self.verdict,
            "worst_input": to_dict(self.worst_input),
        }


def _random_sr_le_k(rng, count, m, n, k):
    """Unit kets (count, m, n) whose Schmidt ranks are uniform in 1..k."""
    a = rng.standard_normal((count, m, k)) + 1j * rng.standard_normal((count, m, k))
    b = rng.standard_normal((count, n, k)) + 1j * rng.standard_normal((count, n, k))
    ranks = rng.integers(1, k + 1, size=count)
    mask = np.arange(k)[None, :] < ranks[:, None]
    a = a * mask[:, None, :]
    v = a @ np.swapaxes(b, 1, 2)
    return v / np.linalg.norm(v, axis=(1, 2))[:, None, None]


def schmidt_leaks(op, inputs, k):
    """Relative (k+1)-th Schmidt coefficient of ``op @ v`` for each input."""
    op = as_opr(op)
    m, n = op.row_dims
    count = inputs.shape[0]
    images = (inputs.reshape(count, -1) @ op.entries.T).reshape(count, m, n)
    s = np.linalg.svd(images, compute_uv=False)
    if k >= s.shape[1]:
        return np.zeros(count)
    floor = 1e-14 * max(op.op_norm(), 1e-300)
    top = s[:, 0]
    return np.where(top > floor, s[:, k] / np.where(top > floor, top, 1.0), 0.0)


def check_schmidt_rank_preservation(op, k, n_samples=None, tol=None, seed=0) -> PreservationReport:
    """Randomized test of ``L S_k subset S_k``.

    A leak above ``tol`` certifies a violation (``worst_input`` is the
    witness); no leak is evidence, not proof, of preservation.
    """
    op = _bipartite(op)
    n_samples = config.PRESERVE_SAMPLES if n_samples is None else int(n_samples)
    tol = config.PRESERVE_TOL if tol is None else tol
    m, n = op.col_dims
    if not 1 <= k < min(m, n):
        raise ValueError(f"k out of range: need 1 <= k < {min(m, n)}, got {k}")
    if min(op.row_dims) <= k:
        raise ShapeError("output parties are too small for a rank-k test")
    rng = np.random.default_rng(seed)
    inputs = _random_sr_le_k(rng, n_samples, m, n, k)
    leaks = schmidt_leaks(op, inputs, k)
    worst = int(np.argmax(leaks))
    max_leak = float(leaks[worst])
    return PreservationReport(
        samples=n_samples,
        k=k,
        max_leak=max_leak,
        verdict=max_leak <= tol,
        worst_input=Ket(inputs[worst].reshape(-1), (m, n)),
    )


@dataclass
class ThmMainRecord:
    k: int
    cond: float
    local_form: LocalFormReport
    preservation: PreservationReport
    consistent: bool

    @property
    def is_local(self):
        return self.local_form.verdict != NEITHER

    def to_dict(self):
        return {
            "k": self.k,
            "cond": self.cond,
            "local_form": self.local_form.to_dict(),
            "preservation": self.preservation.to_dict(),
            "consistent": self.consistent,
        }


def verify_thm_main(op, k, n_samples=None, tol=None, seed=0, cond_bound=None) -> ThmMainRecord:
    """Cross-check local form against sampled Schmidt-rank preservation.

    For invertible ``L`` the two must agree: ``L`` sends rank-<=k kets to
    rank-<=k kets (for some k below the smaller dimension) exactly when it has
    local form.
    """
    op = _bipartite(op)
    c = cond_gate(op, cond_bound)
    local = classify_local_form(op)
    pres = check_schmidt_rank_preservation(op, k, n_samples, tol, seed)
    return ThmMainRecord(k, c, local, pres, (local.verdict != NEITHER) == pres.verdict)


# --- completely positive maps -----------------------------------------------

@dataclass
class KrausSet:
    ops: list
    eigenvalue_weights: np.ndarray
    cp_defect: float
    trace_preserving: bool

    def superop(self, dims):
        return SuperOp.from_kraus(self.ops, dims)

    def proportionality_defect(self):
        """Relative size of everything beyond the dominant Kraus direction."""
        if len(self.ops) < 2:
            return 0.0
        stack = np.array([a.entries.reshape(-1) for a in self.ops])
        s = np.linalg.svd(stack, compute_uv=False)
        return float(np.sqrt(np.sum(s[1:] ** 2)) / s[0])


def choi_kraus(phi: SuperOp, tol=None) -> KrausSet:
    """Kraus operators from the eigendecomposition of the Choi matrix.

    Raises NotCompletelyPositive (carrying the Kraus set of the positive part)
    when the Choi matrix has a negative eigenvalue below ``-tol * max|eig|``
    or is not Hermitian.
    """
    tol = config.KRAUS_TOL if tol is None else tol
    c = phi.choi()
    d = phi.d
    scale = max(np.abs(c).max(), 1e-300)
    herm_err = float(np.linalg.norm(c - c.conj().T, 2))
    h = (c + c.conj().T) / 2
    lam, vecs = np.linalg.eigh(h)
    top = max(np.abs(lam).max(), 1e-300)
    cp_defect = float(min(lam.min(), 0.0))
    keep = np.flatnonzero(lam > tol * top)[::-1]
    ops = [Opr(np.sqrt(lam[i]) * vecs[:, i].reshape(d, d).T, phi.dims, phi.dims) for i in keep]
    kraus = KrausSet(ops, lam[keep], cp_defect, phi.is_trace_preserving())
    if herm_err > tol * scale * d:
        raise NotCompletelyPositive(-herm_err, kraus)
    if cp_defect < -tol * top:
        raise NotCompletelyPositive(cp_defect, kraus)
    return kraus


@dataclass
class CPPreserverResult:
    L: Opr
    report: LocalFormReport
    proportionality_defect: float
    trace_preserving: bool
    unitary: bool

    def to_dict(self):
        from .io import to_dict

        return {
            "L": to_dict(self.L),
            "local_form": self.report.to_dict(),
            "proportionality_defect": self.proportionality_defect,
            "trace_preserving": self.trace_preserving,
            "unitary": self.unitary,
        }


def _probe_kets(dims, k, rng, n_random=200):
    """Rank-<=k probes: basis products, two-term sums, then random kets."""
    m, n = dims
    for j, l in iproduct(range(m), range(n)):
        yield Ket.basis(dims, (j, l))
    for j, r, l in iproduct(range(m), range(m), range(n)):
        if j < r:
            v = Ket.basis(dims, (j, l)) + Ket.basis(dims, (r, l))
            yield v.normalized()
    for j, l, r in iproduct(range(m), range(n), range(n)):
        if l < r:
            v = Ket.basis(dims, (j, l)) + Ket.basis(dims, (j, r))
            yield v.normalized()
    for v in _random_sr_le_k(rng, n_random, m, n, k):
        yield Ket(v.reshape(-1), dims)


def _rank_ratio(mat):
    s = np.linalg.svd(mat, compute_uv=False)
    return float(s[1] / s[0]) if s[0] > 0 else 0.0


def find_rank_increase_witness(phi: SuperOp, k, tol=1e-8, seed=0):
    """A rank-<=k projector ``|w><w|`` whose image has rank at least two."""
    rng = np.random.default_rng(seed)
    best = (0.0, None)
    for w in _probe_kets(phi.dims, k, rng):
        ratio = _rank_ratio(phi(Opr.outer(w, w)).entries)
        if ratio > best[0]:
            best = (ratio, w)
        if ratio > 1e3 * tol:
            break
    return best if best[0] > tol else (best[0], None)


def classify_cp_sk_preserver(phi: SuperOp, k, tol=None, cond_bound=None, seed=0) -> CPPreserverResult:
    """Collapse a CP map sending rank-<=k projectors to rank-<=k projectors
    onto a single conjugation ``X -> L X L^*`` and classify ``L``.
    """
    if len(phi.dims) != 2:
        raise ShapeError("classify_cp_sk_preserver needs a bipartite space")
    m, n = phi.dims
    if not 1 <= k < min(m, n):
        raise ValueError(f"k out of range: need 1 <= k < {min(m, n)}, got {k}")
    kraus = choi_kraus(phi)
    defect = kraus.proportionality_defect()
    ptol = 1e-8 if tol is None else tol
    if defect > ptol:
        ratio, witness = find_rank_increase_witness(phi, k, seed=seed)
        if witness is None:
            cond_gate(phi, cond_bound)
        raise MultipleKrausDirections(
            f"{len(kraus.ops)} independent Kraus directions (defect {defect:.3g})",
            witness=witness,
            image_rank_ratio=ratio,
            proportionality_defect=defect,
        )
    lop = kraus.ops[0]
    cond_gate(lop, cond_bound)
    report = classify_local_form(lop)
    gram = lop.entries.conj().T @ lop.entries
    unitary = bool(np.linalg.norm(gram - np.eye(len(gram)), 2) <= 1e-8)
    return CPPreserverResult(lop, report, defect, kraus.trace_preserving, unitary)


# --- S(k)-norm isometries ---------------------------------------------------

@dataclass
class IsometryDecomposition:
    verdict: bool
    used_transpose: bool
    used_partial_transpose: bool
    U: Optional[Opr]
    V: Optional[Opr]
    U_report: Optional[LocalFormReport]
    V_report: Optional[LocalFormReport]
    residual: float
    frobenius_defect: float = 0.0
    candidates: dict = field(default_factory=dict)

    def superop(self):
        dims = self.U.row_dims
        base = SuperOp.sandwich(self.U, self.V, dims)
        return base.compose(_candidate_map(dims, self.used_transpose, self.used_partial_transpose))

    def to_dict(self):
        from .io import to_dict

        out = {
            "verdict": self.verdict,
            "used_transpose": self.used_transpose,
            "used_partial_transpose": self.used_partial_transpose,
            "residual": self.residual,
            "frobenius_defect": self.frobenius_defect,
            "candidates": self.candidates,
        }
        if self.U is not None:
            out["U"] = to_dict(self.U)
            out["V"] = to_dict(self.V)
            out["U_form"] = self.U_report.verdict
            out["V_form"] = self.V_report.verdict
        return out


def _candidate_map(dims, transpose, partial):
    if transpose and partial:
        return SuperOp.partial_transpose_map(dims, (0,))
    if transpose:
        return SuperOp.transpose_map(dims)
    if partial:
        return SuperOp.partial_transpose_map(dims, (1,))
    return SuperOp.identity(dims)


def candidate_compositions(k):
    """(used_transpose, used_partial_transpose) pairs allowed for this k."""
    base = [(False, False), (True, False)]
    return base + [(False, True), (True, True)] if k == 1 else base


@dataclass
class SandwichMatch:
    used_transpose: bool
    used_partial_transpose: bool
    U: Opr
    V: Opr
    U_report: LocalFormReport
    V_report: LocalFormReport
    residual: float
    realign_ratio: float


def match_sandwich_forms(phi: SuperOp, k, tol=None):
    """For each allowed ``c``, test whether ``phi o c`` is ``X -> U X V``.

    Returns one SandwichMatch per candidate whose realigned superoperator
    matrix has rank one; U and V are then classified for local form.
    """
    tol = config.REALIGN_TOL if tol is None else tol
    d = phi.d
    out = []
    for transpose, partial in candidate_compositions(k):
        c = _candidate_map(phi.dims, transpose, partial)
        psi = phi.matrix @ c.matrix
        split = operator_schmidt_split(Opr(psi, (d, d), (d, d)))
        coeffs = split.coeffs
        ratio = float(coeffs[1] / coeffs[0]) if len(coeffs) > 1 else 0.0
        if ratio > tol:
            out.append(SandwichMatch(transpose, partial, None, None, None, None, np.inf, ratio))
            continue
        e = split.left_ops[0].entries
        f = split.right_ops[0].entries
        e, f = _normalize_pair(e, f, coeffs[0])
        u = e * np.sqrt(d)
        v = (f / np.sqrt(d)).T
        recon = np.kron(u, v.T) @ c.matrix
        residual = float(np.linalg.norm(phi.matrix - recon) / np.linalg.norm(phi.matrix))
        uo, vo = Opr(u, phi.dims, phi.dims), Opr(v, phi.dims, phi.dims)
        out.append(
            SandwichMatch(transpose, partial, uo, vo, classify_local_form(uo),
                          classify_local_form(vo), residual, ratio)
        )
    return out


def _random_rank_one(rng, dims, k):
    m, n = dims
    v = _random_sr_le_k(rng, 2, m, n, k)
    return Opr(np.outer(v[0].reshape(-1), v[1].reshape(-1).conj()), dims, dims)


def find_norm_change_witness(phi: SuperOp, k, seed=0, n_random=8, restarts=20):
    """Search for X with ``S_norm(phi(X), k) != S_norm(X, k)``.

    Tries the maximally entangled projector, random rank-one operators built
    from Schmidt-rank-k kets, and Gaussian operators. Returns (gap, X).
    """
    m, n = phi.dims
    rng = np.random.default_rng(seed)
    d = min(m, n)
    phi_d = np.zeros((m, n), dtype=complex)
    phi_d[range(d), range(d)] = 1 / np.sqrt(d)
    cands = [Opr.outer(Ket(phi_d.reshape(-1), (m, n)), Ket(phi_d.reshape(-1), (m, n)))]
    for _ in range(n_random):
        cands.append(_random_rank_one(rng, (m, n), min(k + 1, d)))
        g = rng.standard_normal((m * n,) * 2) + 1j * rng.standard_normal((m * n,) * 2)
        cands.append(Opr(g, (m, n), (m, n)))
    best = (0.0, None)
    for i, x in enumerate(cands):
        a = S_norm(x, k, restarts=restarts, seed=seed + i).value
        b = S_norm(phi(x), k, restarts=restarts, seed=seed + i).value
        if abs(a - b) > best[0]:
            best = (abs(a - b), x)
    return best


def classify_norm_isometry(phi: SuperOp, k, tol=None, witness_seed=0) -> IsometryDecomposition:
    """Decompose an S(k)-norm isometry into local unitary sandwiches and
    (partial) transposes, or raise NotIsometry with a witness.
    """
    if len(phi.dims) != 2:
        raise ShapeError("classify_norm_isometry needs a bipartite space")
    m, n = phi.dims
    if not 1 <= k < min(m, n):
        raise ValueError(f"k out of range: need 1 <= k < {min(m, n)}, got {k}")
    frob = phi.frobenius_isometry_defect()
    recon_tol = 1e-8
    matches = [] if frob > recon_tol else match_sandwich_forms(phi, k, tol)
    good = [
        mt for mt in matches
        if mt.U is not None
        and mt.residual <= recon_tol
        and mt.U_report.verdict != NEITHER and mt.U_report.unitary
        and mt.V_report.verdict != NEITHER and mt.V_report.unitary
    ]
    cand_info = {
        f"T={int(mt.used_transpose)},PT={int(mt.used_partial_transpose)}": mt.realign_ratio
        for mt in matches
    }
    if not good:
        gap, witness = find_norm_change_witness(phi, k, seed=witness_seed)
        reason = (
            f"not Frobenius-isometric (defect {frob:.3g})"
            if frob > recon_tol
            else "no composition of local unitary sandwiches and allowed transposes matches"
        )
        raise NotIsometry(reason, witness=witness, gap=gap, frobenius_defect=frob,
                          candidates=cand_info)
    best = min(good, key=lambda mt: mt.residual)
    return IsometryDecomposition(
        verdict=True,
        used_transpose=best.used_transpose,
        used_partial_transpose=best.used_partial_transpose,
        U=best.U,
        V=best.V,
        U_report=best.U_report,
        V_report=best.V_report,
        residual=best.residual,
        frobenius_defect=frob,
        candidates=cand_info,
    )


# --- product-state length preservation ---------------------------------------

@dataclass
class UnitarityCheck:
    samples: int
    product_norm_deviation: float
    gram_defect: float
    preserves_product_norms: bool
    unitary: bool
    consistent: bool

    def to_dict(self):
        return dict(self.__dict__)


def sep_isometry_implies_unitary_check(op, n_samples=200, seed=0, tol=1e-8) -> UnitarityCheck:
    """Compare length preservation on product kets with ``||L^*L - I||_F``.

    ``L`` preserves the length of every product ket exactly when it is unitary,
    so the two tests must agree.
    """
    op = as_opr(op)
    rng = np.random.default_rng(seed)
    factors = []
    for d in op.col_dims:
        f = rng.standard_normal((n_samples, d)) + 1j * rng.standard_normal((n_samples, d))
        factors.append(f / np.linalg.norm(f, axis=1, keepdims=True))
    kets = factors[0]
    for f in factors[1:]:
        kets = np.einsum("si,sj->sij", kets, f).reshape(n_samples, -1)
    dev = float(np.max(np.abs(np.linalg.norm(kets @ op.entries.T, axis=1) - 1.0)))
    gram = op.entries.conj().T @ op.entries
    gdef = float(np.linalg.norm(gram - np.eye(len(gram))))
    pres, unit = dev <= tol, gdef <= tol
    return UnitarityCheck(n_samples, dev, gdef, pres, unit, pres == unit)
