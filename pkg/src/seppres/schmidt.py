"""Schmidt decomposition and the Schmidt-rank-restricted norms.

For a bipartite ket with Schmidt coefficients a_1 >= a_2 >= ... the vector
norm ``s_norm(v, k) = sqrt(a_1^2 + ... + a_k^2)`` is the largest overlap of
``v`` with a unit ket of Schmidt rank at most ``k``. The operator norm
``S_norm(X, k)`` is the largest ``|<w|X|y>|`` over such unit kets; it has no
closed form and is bounded from below by a multistart see-saw.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import config
from .errors import ShapeError
from .tensor import Ket, Opr, as_ket, as_opr, bipartite_matrix


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coeffs: np.ndarray
    left: np.ndarray  # columns are the left Schmidt vectors
    right: np.ndarray  # columns are the right Schmidt vectors
    left_dims: tuple
    right_dims: tuple

    @property
    def rank_bound(self):
        return len(self.coeffs)

    def left_kets(self):
        return [Ket(self.left[:, i], self.left_dims) for i in range(len(self.coeffs))]

    def right_kets(self):
        return [Ket(self.right[:, i], self.right_dims) for i in range(len(self.coeffs))]

    def reconstruct(self, terms=None):
        """Sum of the leading ``terms`` products, parties in cut order."""
        t = len(self.coeffs) if terms is None else terms
        mat = (self.left[:, :t] * self.coeffs[:t]) @ self.right[:, :t].T
        return Ket(mat.reshape(-1), self.left_dims + self.right_dims)


def schmidt_decompose(v, cut=None) -> SchmidtDecomposition:
    """Schmidt decomposition of ``v`` across ``cut`` (0-based left parties).

    Right vectors are conjugated right singular vectors, so that
    ``v = sum_i coeffs[i] * left[:, i] (x) right[:, i]`` with plain tensor
    products.
    """
    mat, ldims, rdims = bipartite_matrix(v, cut)
    if not np.any(mat):
        raise ValueError("the zero vector has no Schmidt decomposition")
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    return SchmidtDecomposition(s, u, vh.T, ldims, rdims)


def schmidt_rank(v, cut=None, tol=None) -> int:
    tol = config.SR_TOL if tol is None else tol
    s = schmidt_decompose(v, cut).coeffs
    return int(np.count_nonzero(s > tol * s[0]))


class SNorm(NamedTuple):
    value: float
    witness: Ket


def _check_k(k, m, n):
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k out of range: need 1 <= k <= {min(m, n)}, got {k}")


def s_norm(v, k, cut=None) -> SNorm:
    """Closed-form s(k) norm and the normalized top-k Schmidt truncation."""
    v = as_ket(v)
    mat, ldims, rdims = bipartite_matrix(v, cut)
    _check_k(k, mat.shape[0], mat.shape[1])
    dec = schmidt_decompose(v, cut)
    value = float(np.sqrt(np.sum(dec.coeffs[:k] ** 2)))
    witness = dec.reconstruct(k)
    return SNorm(value, witness / witness.norm())


def truncate_batch(z, k):
    """Best rank-``k`` approximations of a stack of matrices.

    Returns the truncations and their Frobenius norms (the s(k) values).
    """
    u, s, vh = np.linalg.svd(z, full_matrices=False)
    t = (u[..., :, :k] * s[..., None, :k]) @ vh[..., :k, :]
    return t, np.sqrt(np.sum(s[..., :k] ** 2, axis=-1))


@dataclass
class NormResult:
    value: float
    witness_left: Ket
    witness_right: Ket
    k: int
    restarts_used: int
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list)
    spread: float = 0.0

    def to_dict(self):
        return {
            "value": self.value,
            "k": self.k,
            "restarts_used": self.restarts_used,
            "iterations": self.iterations,
            "converged": self.converged,
            "spread": self.spread,
            "objective_trace": list(self.objective_trace),
        }


def _bipartite_dims(x):
    if len(x.row_dims) != 2 or len(x.col_dims) != 2:
        raise ShapeError(
            f"operator must be bipartite on both sides, got {x.row_dims} x {x.col_dims}"
        )
    return x.row_dims, x.col_dims


def _seesaw_starts(x, k, restarts, seed, cdims):
    m, n = cdims
    _, _, vh = np.linalg.svd(x)
    starts = np.empty((restarts, m, n), dtype=complex)
    n_svd = restarts // 2
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        if r < n_svd:
            j = r % vh.shape[0]
            y = vh[j].conj().reshape(m, n)
            if r >= vh.shape[0]:
                g = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
                y = y + 0.5 * g / np.linalg.norm(g)
        else:
            a = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
            b = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
            y = a @ b.T
        starts[r] = y
    t, nrm = truncate_batch(starts, k)
    return t / nrm[:, None, None]


def S_norm(x, k, restarts=None, max_iters=None, tol=None, seed=0) -> NormResult:
    """Lower bound on the S(k) operator norm by multistart see-saw.

    Each half-step replaces one argument by the exact maximizer for the other
    one fixed (normalized rank-k truncation of ``X y`` or ``X^* w``), so the
    objective never decreases. A step that would lower it in floating point is
    rejected and ends that restart.
    """
    x = as_opr(x)
    rdims, cdims = _bipartite_dims(x)
    _check_k(k, *rdims)
    _check_k(k, *cdims)
    restarts = config.SEESAW_RESTARTS if restarts is None else int(restarts)
    max_iters = config.SEESAW_MAX_ITERS if max_iters is None else int(max_iters)
    tol = config.SEESAW_TOL if tol is None else tol
    if restarts < 1:
        raise ValueError("need at least one restart")
    mat = x.entries

    if not np.any(mat):
        w = Ket.basis(rdims, (0, 0))
        y = Ket.basis(cdims, (0, 0))
        return NormResult(0.0, w, y, k, restarts, 0, True, [0.0], 0.0)

    y = _seesaw_starts(mat, k, restarts, seed, cdims)
    w = np.zeros((restarts,) + tuple(rdims), dtype=complex)
    obj = np.full(restarts, -np.inf)
    active = np.ones(restarts, dtype=bool)
    iters = np.zeros(restarts, dtype=int)
    traces = [[] for _ in range(restarts)]
    adj = mat.conj().T

    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        yv = y[idx].reshape(idx.size, -1)
        z = (yv @ mat.T).reshape((idx.size,) + tuple(rdims))
        wt, _ = truncate_batch(z, k)
        wn = np.linalg.norm(wt.reshape(idx.size, -1), axis=1)
        wn[wn == 0] = 1.0
        w_new = wt / wn[:, None, None]
        zz = (w_new.reshape(idx.size, -1) @ adj.T).reshape((idx.size,) + tuple(cdims))
        yt, _ = truncate_batch(zz, k)
        yn = np.linalg.norm(yt.reshape(idx.size, -1), axis=1)
        yn[yn == 0] = 1.0
        y_new = yt / yn[:, None, None]
        val = np.abs(
            np.einsum("ri,ij,rj->r", w_new.reshape(idx.size, -1).conj(), mat,
                      y_new.reshape(idx.size, -1))
        )
        for pos, r in enumerate(idx):
            if val[pos] < obj[r]:
                active[r] = False
                continue
            gain = val[pos] - obj[r]
            w[r], y[r], obj[r] = w_new[pos], y_new[pos], val[pos]
            traces[r].append(float(val[pos]))
            iters[r] += 1
            if gain < tol:
                active[r] = False

    best = int(np.argmax(obj))
    wk = Ket(w[best].reshape(-1), rdims)
    yk = Ket(y[best].reshape(-1), cdims)
    value = abs(wk.vdot(Opr(mat, rdims, cdims) @ yk))
    return NormResult(
        value=float(value),
        witness_left=wk,
        witness_right=yk,
        k=k,
        restarts_used=restarts,
        iterations=int(iters[best]),
        converged=not bool(active[best]),
        objective_trace=traces[best],
        spread=float(obj.max() - obj.min()),
    )
