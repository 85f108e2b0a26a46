"""Brute-force oracles and property harnesses.

Nothing in here calls the see-saw or the closed-form s(k) routine; these
functions exist to check them.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .tensor import as_opr


class OracleBudgetWarning(UserWarning):
    pass


@dataclass
class OracleConfig:
    samples: int = 100_000
    polish_top: int = 100
    polish_random: int = 300
    polish_sweeps: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1 or min(self.polish_top, self.polish_random, self.polish_sweeps) < 0:
            raise ValueError("oracle budgets must be positive")


def _gauss(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def _factor_pairs(rng, count, m, n, k):
    return _gauss(rng, (count, m, k)), _gauss(rng, (count, n, k))


def _low_rank_factors(mats, k):
    """Factors A (.., m, k), B (.., n, k) with A @ B.T the rank-k truncation."""
    u, s, vh = np.linalg.svd(mats, full_matrices=False)
    a = u[..., :, :k] * s[..., None, :k]
    b = np.swapaxes(vh[..., :k, :], -1, -2)
    return a, b


def _compose(a, b):
    return a @ np.swapaxes(b, -1, -2)


def _ratio(x, w, y):
    wv = w.reshape(w.shape[0], -1)
    yv = y.reshape(y.shape[0], -1)
    num = np.abs(np.einsum("ri,ij,rj->r", wv.conj(), x, yv))
    den = np.linalg.norm(wv, axis=1) * np.linalg.norm(yv, axis=1)
    return num / np.where(den == 0, 1.0, den)


def _als_update(z, a, b):
    """Maximize |<A B^T, z>| / ||A B^T|| over A for fixed B (and then B)."""
    nz = np.linalg.norm(z, axis=(-2, -1), keepdims=True)
    z = z / np.where(nz == 0, 1.0, nz)
    g = np.swapaxes(b, -1, -2) @ b.conj()
    a = (z @ b.conj()) @ np.linalg.pinv(g)
    zt = np.swapaxes(z, -1, -2)
    g = np.swapaxes(a, -1, -2) @ a.conj()
    b = (zt @ a.conj()) @ np.linalg.pinv(g)
    return a, b


def brute_force_S_norm(x, k, config=None, **overrides) -> float:
    """Sampled lower bound on the S(k) norm, polished factor by factor.

    Draws unit pairs (w, y) of Schmidt rank at most ``k`` from two strata
    (random Gaussian factors, and rank-k truncations of perturbed singular
    pairs of ``x``), then polishes the best ones by alternating least squares
    on the Schmidt factors ``w = A_w B_w^T``, ``y = A_y B_y^T``.
    """
    cfg = config or OracleConfig()
    if overrides:
        cfg = OracleConfig(**{**cfg.__dict__, **overrides})
    x = as_opr(x)
    if len(x.row_dims) != 2 or len(x.col_dims) != 2:
        raise ShapeError("brute_force_S_norm needs a bipartite operator")
    (m, n), (mc, nc) = x.row_dims, x.col_dims
    if not 1 <= k <= min(m, n, mc, nc):
        raise ValueError(f"k out of range: need 1 <= k <= {min(m, n, mc, nc)}, got {k}")
    if min(m, n) > 3 or min(mc, nc) > 3:
        raise ValueError("brute_force_S_norm is meant for desk scale (min dimension <= 3)")
    if cfg.samples < 10_000:
        warnings.warn(
            f"oracle budget of {cfg.samples} samples is small; 1e5 is recommended",
            OracleBudgetWarning,
            stacklevel=2,
        )
    mat = x.entries
    if not np.any(mat):
        return 0.0
    rng = np.random.default_rng(cfg.seed)

    n_rand = cfg.samples // 2
    aw, bw = _factor_pairs(rng, n_rand, m, n, k)
    ay, by = _factor_pairs(rng, n_rand, mc, nc, k)
    w = _compose(aw, bw)
    y = _compose(ay, by)

    n_svd = cfg.samples - n_rand
    u, s, vh = np.linalg.svd(mat)
    j = rng.integers(0, min(len(s), 3), size=n_svd)
    scale = 10.0 ** rng.uniform(-3, 0, size=n_svd)
    wu = u[:, j].T + scale[:, None] * _gauss(rng, (n_svd, m * n)) / np.sqrt(m * n)
    yv = vh[j].conj() + scale[:, None] * _gauss(rng, (n_svd, mc * nc)) / np.sqrt(mc * nc)
    w2 = _compose(*_low_rank_factors(wu.reshape(n_svd, m, n), k))
    y2 = _compose(*_low_rank_factors(yv.reshape(n_svd, mc, nc), k))
    w = np.concatenate([w, w2])
    y = np.concatenate([y, y2])

    vals = _ratio(mat, w, y)
    best = float(vals.max())
    if cfg.polish_top + cfg.polish_random == 0:
        return best

    # the best samples tend to share one basin, so also polish a uniform pick
    top = np.argsort(vals)[len(vals) - cfg.polish_top:]
    rest = np.setdiff1d(np.arange(len(vals)), top)
    pick = rng.choice(rest, size=min(cfg.polish_random, rest.size), replace=False)
    top = np.concatenate([top, pick])
    aw, bw = _low_rank_factors(w[top], k)
    ay, by = _low_rank_factors(y[top], k)
    adj = mat.conj().T
    cur = _ratio(mat, _compose(aw, bw), _compose(ay, by))
    for _ in range(cfg.polish_sweeps):
        yv = _compose(ay, by).reshape(len(top), -1)
        z = (yv @ mat.T).reshape(len(top), m, n)
        aw, bw = _als_update(z, aw, bw)
        wv = _compose(aw, bw).reshape(len(top), -1)
        z = (wv @ adj.T).reshape(len(top), mc, nc)
        ay, by = _als_update(z, ay, by)
        # keep factors balanced so pinv stays well scaled
        for fa, fb in ((aw, bw), (ay, by)):
            na = np.linalg.norm(fa, axis=(1, 2))
            nb = np.linalg.norm(fb, axis=(1, 2))
            r = np.sqrt(nb / np.where(na == 0, 1, na))
            fa *= r[:, None, None]
            fb /= np.where(r == 0, 1, r)[:, None, None]
        new = _ratio(mat, _compose(aw, bw), _compose(ay, by))
        gain = np.max(new - cur)
        cur = np.maximum(cur, new)
        if gain < 1e-15:
            break
    return max(best, float(cur.max()))


# --- rank-one sum property -------------------------------------------------

@dataclass
class SearchReport:
    trials: int
    candidates: list = field(default_factory=list)
    best_violation: float = 0.0
    stats: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "trials": self.trials,
            "candidates": self.candidates,
            "best_violation": self.best_violation,
            "stats": self.stats,
            "config": self.config,
        }


def rank_one_ratio(mat):
    """Second singular value over the first (0 for a rank-one matrix)."""
    s = np.linalg.svd(mat, compute_uv=False)
    return float(s[1] / s[0]) if s[0] > 0 and len(s) > 1 else 0.0


def pairwise_rank_one(mats, tol=1e-9):
    """True when every pairwise sum in ``mats`` has rank one."""
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            if rank_one_ratio(mats[i] + mats[j]) > tol:
                return False
    return True


def _family(rng, kind, p, m, n):
    if kind == "shared_column":
        u = _gauss(rng, m)
        return [np.outer(u, _gauss(rng, n)) for _ in range(p)]
    if kind == "shared_row":
        v = _gauss(rng, n)
        return [np.outer(_gauss(rng, m), v) for _ in range(p)]
    if kind == "near_miss":
        # shared column space except for the last member
        u = _gauss(rng, m)
        fam = [np.outer(u, _gauss(rng, n)) for _ in range(p - 1)]
        fam.append(np.outer(_gauss(rng, m), _gauss(rng, n)))
        return fam
    raise ValueError(kind)


def rank_one_sum_property(p, trials, seed=0, dims=(3, 3), tol=1e-9) -> SearchReport:
    """Check that pairwise-rank-one families of rank-one matrices sum to rank one.

    Families sharing a column space or a row space satisfy the hypothesis;
    near-miss families break it for one pair and are filtered out, with the
    number of those whose total sum is not rank one recorded. A candidate is a
    family that passes the hypothesis filter but whose sum has rank above one.
    """
    if p < 3:
        raise ValueError("the property is stated for p >= 3")
    m, n = dims
    kinds = ("shared_column", "shared_row", "near_miss")
    stats = {"hypothesis_held": 0, "excluded": 0, "excluded_sum_not_rank_one": 0}
    candidates = []
    worst = 0.0
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        kind = kinds[t % len(kinds)]
        fam = _family(rng, kind, p, m, n)
        ratio = rank_one_ratio(sum(fam))
        if not pairwise_rank_one(fam, tol):
            stats["excluded"] += 1
            if ratio > tol:
                stats["excluded_sum_not_rank_one"] += 1
            continue
        stats["hypothesis_held"] += 1
        worst = max(worst, ratio)
        if ratio > tol:
            candidates.append({"trial": t, "seed": seed + t, "kind": kind, "violation": ratio})
    return SearchReport(
        trials=trials,
        candidates=candidates,
        best_violation=worst,
        stats=stats,
        config={"p": p, "seed": seed, "dims": list(dims), "tol": tol},
    )


# --- geometric measure by parameter grid ---------------------------------------

def _qubit_products(theta, phi):
    """Product kets for parameter arrays of shape (count, p)."""
    amps = np.ones((theta.shape[0], 1), dtype=complex)
    for i in range(theta.shape[1]):
        f = np.stack([np.cos(theta[:, i]), np.exp(1j * phi[:, i]) * np.sin(theta[:, i])], axis=1)
        amps = np.einsum("ca,cb->cab", amps, f).reshape(theta.shape[0], -1)
    return amps


def grid_gme_oracle(v, density=9, zoom_steps=25, shrink=0.5):
    """Largest overlap of a qubit-register ket with product states, by grid.

    Each qubit factor is ``(cos t, e^{i f} sin t)`` with ``t`` in [0, pi/2] and
    ``f`` in [0, 2 pi); a global phase does not matter. A full grid of
    ``density`` points per parameter is followed by ``zoom_steps`` finer grids
    (3 points per parameter) around the current best. Returns ``(G, E)``.
    """
    v = np.asarray(getattr(v, "amps", v), dtype=complex).reshape(-1)
    p = int(round(np.log2(v.size)))
    if 2**p != v.size or not 1 <= p <= 3:
        raise ValueError("grid_gme_oracle handles 1 to 3 qubits")
    v = v / np.linalg.norm(v)
    ts = np.linspace(0, np.pi / 2, density)
    fs = np.linspace(0, 2 * np.pi, density, endpoint=False)
    axes = [ts] * p + [fs] * p
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2 * p)
    vals = np.abs(_qubit_products(mesh[:, :p], mesh[:, p:]).conj() @ v)
    best = mesh[np.argmax(vals)]
    g = float(vals.max())
    step = np.array([ts[1] - ts[0]] * p + [fs[1] - fs[0]] * p)
    offsets = np.stack(np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * (2 * p)), indexing="ij"),
                       axis=-1).reshape(-1, 2 * p)
    for _ in range(zoom_steps):
        pts = best + offsets * step
        vals = np.abs(_qubit_products(pts[:, :p], pts[:, p:]).conj() @ v)
        i = int(np.argmax(vals))
        if vals[i] > g:
            g, best = float(vals[i]), pts[i]
        else:
            step = step * shrink
    return g, 1.0 - g * g
