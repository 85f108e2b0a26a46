"""Kets and operators on tensor-product spaces.

Conventions
-----------
* Amplitudes and matrices are stored row-major, so party 1 is the most
  significant index of a flattened vector.
* The vector-operator isomorphism ``|a> (x) |b>  ->  |a> conj(<b|) = a b^T`` is
  a plain row-major reshape. No complex conjugation is applied, which means a
  Schmidt right-vector is the *conjugate* of a right singular vector of the
  reshaped matrix.
* Factor indices in the Python API are 0-based. Text and documentation that
  talk about basis states ``|1>, ..., |n>`` count from one.
"""

from dataclasses import dataclass
from functools import reduce
from math import prod
from typing import Sequence

import numpy as np

from . import config
from .errors import ShapeError


@dataclass(frozen=True)
class Shape:
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ShapeError("a shape needs at least one factor")
        if any(d < 1 for d in dims):
            raise ShapeError(f"dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self):
        return prod(self.dims)

    def __len__(self):
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, i):
        return self.dims[i]


def as_shape(dims) -> Shape:
    if isinstance(dims, Shape):
        return dims
    if np.isscalar(dims):
        return Shape((int(dims),))
    return Shape(tuple(dims))


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Ket:
    """Complex amplitude vector with a tensor-factor shape. Need not be unit."""

    amps: np.ndarray
    shape: Shape

    def __init__(self, amps, dims=None):
        amps = np.asarray(amps, dtype=complex)
        shape = as_shape(dims if dims is not None else (amps.size,))
        if amps.size != shape.total:
            raise ShapeError(f"{amps.size} amplitudes do not fit shape {shape.dims}")
        object.__setattr__(self, "amps", _frozen(amps.reshape(-1)))
        object.__setattr__(self, "shape", shape)

    @property
    def dims(self):
        return self.shape.dims

    def norm(self):
        return float(np.linalg.norm(self.amps))

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return Ket(self.amps / n, self.dims)

    def tensor(self):
        """Amplitudes as an array with one axis per party."""
        return self.amps.reshape(self.dims)

    def vdot(self, other):
        """<self|other>."""
        return complex(np.vdot(self.amps, _amps(other)))

    @classmethod
    def basis(cls, dims, index):
        """Elementary tensor |i_1> (x) ... (x) |i_p> with 0-based indices."""
        shape = as_shape(dims)
        if np.isscalar(index):
            index = (index,)
        amps = np.zeros(shape.dims, dtype=complex)
        amps[tuple(index)] = 1.0
        return cls(amps, shape)

    def __add__(self, other):
        if not isinstance(other, Ket) or other.dims != self.dims:
            return NotImplemented
        return Ket(self.amps + other.amps, self.dims)

    def __sub__(self, other):
        if not isinstance(other, Ket) or other.dims != self.dims:
            return NotImplemented
        return Ket(self.amps - other.amps, self.dims)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return Ket(c * self.amps, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Ket(self.amps / c, self.dims)

    def __neg__(self):
        return Ket(-self.amps, self.dims)

    def __repr__(self):
        return f"Ket(dims={self.dims}, norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class Opr:
    """Matrix with row and column tensor-factor shapes."""

    entries: np.ndarray
    row_shape: Shape
    col_shape: Shape

    def __init__(self, entries, row_dims=None, col_dims=None):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2:
            raise ShapeError(f"operator entries must be a matrix, got ndim={entries.ndim}")
        row = as_shape(row_dims if row_dims is not None else (entries.shape[0],))
        if col_dims is None:
            col_dims = row.dims if entries.shape[0] == entries.shape[1] else (entries.shape[1],)
        col = as_shape(col_dims)
        if entries.shape != (row.total, col.total):
            raise ShapeError(
                f"matrix of size {entries.shape} does not match row dims {row.dims} "
                f"and column dims {col.dims}"
            )
        object.__setattr__(self, "entries", _frozen(entries))
        object.__setattr__(self, "row_shape", row)
        object.__setattr__(self, "col_shape", col)

    @property
    def row_dims(self):
        return self.row_shape.dims

    @property
    def col_dims(self):
        return self.col_shape.dims

    @property
    def H(self):
        return Opr(self.entries.conj().T, self.col_dims, self.row_dims)

    @property
    def T(self):
        return Opr(self.entries.T, self.col_dims, self.row_dims)

    def fro(self):
        return float(np.linalg.norm(self.entries))

    def op_norm(self):
        return float(np.linalg.norm(self.entries, 2))

    def cond(self):
        return float(np.linalg.cond(self.entries))

    @classmethod
    def identity(cls, dims):
        shape = as_shape(dims)
        return cls(np.eye(shape.total), shape, shape)

    @classmethod
    def outer(cls, x, y):
        """|x><y|."""
        x, y = as_ket(x), as_ket(y)
        return cls(np.outer(x.amps, y.amps.conj()), x.dims, y.dims)

    def __matmul__(self, other):
        if isinstance(other, Ket):
            if other.dims != self.col_dims and other.shape.total != self.col_shape.total:
                raise ShapeError("operator and ket dimensions do not match")
            return Ket(self.entries @ other.amps, self.row_dims)
        if isinstance(other, Opr):
            return Opr(self.entries @ other.entries, self.row_dims, other.col_dims)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, Opr):
            return NotImplemented
        return Opr(self.entries + other.entries, self.row_dims, self.col_dims)

    def __sub__(self, other):
        if not isinstance(other, Opr):
            return NotImplemented
        return Opr(self.entries - other.entries, self.row_dims, self.col_dims)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return Opr(c * self.entries, self.row_dims, self.col_dims)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Opr(self.entries / c, self.row_dims, self.col_dims)

    def __neg__(self):
        return Opr(-self.entries, self.row_dims, self.col_dims)

    def __repr__(self):
        return f"Opr(row_dims={self.row_dims}, col_dims={self.col_dims})"


def as_ket(v, dims=None) -> Ket:
    if isinstance(v, Ket):
        return v if dims is None or as_shape(dims).dims == v.dims else Ket(v.amps, dims)
    return Ket(v, dims)


def as_opr(x, row_dims=None, col_dims=None) -> Opr:
    if isinstance(x, Opr):
        if row_dims is None and col_dims is None:
            return x
        return Opr(x.entries, row_dims or x.row_dims, col_dims or x.col_dims)
    return Opr(x, row_dims, col_dims)


def _amps(v):
    return v.amps if isinstance(v, Ket) else np.asarray(v, dtype=complex).reshape(-1)


@dataclass(frozen=True)
class Permutation:
    """Bijection on party labels, stored 0-based: ``images[j] = sigma(j)``.

    The associated swap operator puts input factor ``sigma(j)`` into output
    slot ``j``.
    """

    images: tuple

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"{images} is not a permutation of 0..{len(images) - 1}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, p):
        return cls(tuple(range(p)))

    @classmethod
    def from_one_based(cls, images):
        return cls(tuple(i - 1 for i in images))

    def one_based(self):
        return tuple(i + 1 for i in self.images)

    def __len__(self):
        return len(self.images)

    def __call__(self, j):
        return self.images[j]

    def inverse(self):
        inv = [0] * len(self.images)
        for j, i in enumerate(self.images):
            inv[i] = j
        return Permutation(tuple(inv))

    def __mul__(self, other):
        # swap_operator(s * t) == swap_operator(s) @ swap_operator(t)
        if len(other) != len(self):
            raise ValueError("permutation sizes differ")
        return Permutation(tuple(other.images[self.images[j]] for j in range(len(self))))

    def is_identity(self):
        return self.images == tuple(range(len(self.images)))


def tensor_product(a, b):
    """Kronecker product of two kets or two operators, shapes concatenated."""
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amps, b.amps), a.dims + b.dims)
    if isinstance(a, Opr) and isinstance(b, Opr):
        return Opr(
            np.kron(a.entries, b.entries), a.row_dims + b.row_dims, a.col_dims + b.col_dims
        )
    raise TypeError(
        f"tensor_product needs two kets or two operators, got {type(a).__name__} "
        f"and {type(b).__name__}"
    )


def kron_all(items):
    return reduce(tensor_product, items)


def _cut_groups(p, cut):
    left = sorted({int(i) for i in (range(1) if cut is None else cut)})
    if any(i < 0 or i >= p for i in left):
        raise ShapeError(f"cut {left} refers to parties outside 0..{p - 1}")
    right = [i for i in range(p) if i not in left]
    if not left or not right:
        raise ShapeError("a bipartite cut needs parties on both sides")
    return left, right


def bipartite_matrix(v, cut=None):
    """Amplitude matrix of ``v`` across ``cut`` plus the two group shapes.

    ``cut`` lists the 0-based parties on the left side (default: party 0).
    """
    v = as_ket(v)
    left, right = _cut_groups(len(v.dims), cut)
    t = np.transpose(v.tensor(), left + right)
    ldims = tuple(v.dims[i] for i in left)
    rdims = tuple(v.dims[i] for i in right)
    return t.reshape(prod(ldims), prod(rdims)), ldims, rdims


def vec_to_op(v, cut=None) -> Opr:
    """The vector-operator isomorphism: ``A_v[i, j] = v[i*n + j]``."""
    mat, ldims, rdims = bipartite_matrix(v, cut)
    return Opr(mat, ldims, rdims)


def op_to_vec(a) -> Ket:
    """Inverse of :func:`vec_to_op` for a two-group cut."""
    a = as_opr(a)
    return Ket(a.entries.reshape(-1), a.row_dims + a.col_dims)


def swap_operator(sigma: Permutation, dims) -> Opr:
    """Matrix of ``v_1 (x) ... (x) v_p  ->  v_sigma(1) (x) ... (x) v_sigma(p)``."""
    shape = as_shape(dims)
    if len(sigma) != len(shape):
        raise ShapeError(
            f"permutation acts on {len(sigma)} parties but the shape has {len(shape)}"
        )
    n = shape.total
    basis = np.eye(n, dtype=complex).reshape(shape.dims + (n,))
    axes = list(sigma.images) + [len(shape)]
    mat = np.transpose(basis, axes).reshape(n, n)
    out_dims = tuple(shape.dims[i] for i in sigma.images)
    return Opr(mat, out_dims, shape.dims)


def axis_transpose(x, subset) -> Opr:
    """Transpose ``x`` on the parties in ``subset`` only (0-based)."""
    x = as_opr(x)
    p = len(x.row_dims)
    if len(x.col_dims) != p:
        raise ShapeError("row and column shapes need the same number of parties")
    subset = sorted({int(i) for i in subset})
    for i in subset:
        if not 0 <= i < p:
            raise ShapeError(f"party {i} out of range")
        if x.row_dims[i] != x.col_dims[i]:
            raise ShapeError(f"party {i} is not square ({x.row_dims[i]} x {x.col_dims[i]})")
    t = x.entries.reshape(x.row_dims + x.col_dims)
    axes = list(range(2 * p))
    for i in subset:
        axes[i], axes[p + i] = p + i, i
    return Opr(np.transpose(t, axes).reshape(x.entries.shape), x.row_dims, x.col_dims)


def partial_transpose(x, party=1) -> Opr:
    return axis_transpose(x, [party])


def maximally_entangled(d, normalized=True) -> Ket:
    amps = np.eye(d).reshape(-1)
    if normalized:
        amps = amps / np.sqrt(d)
    return Ket(amps, (d, d))


# --- samplers ---------------------------------------------------------------

def _gaussian(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def _haar_unitary(rng, n):
    q, r = np.linalg.qr(_gaussian(rng, (n, n)))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def _sr_k_amps(rng, m, n, k):
    a = _gaussian(rng, (m, k))
    b = _gaussian(rng, (n, k))
    amps = (a @ b.T).reshape(-1)
    return amps / np.linalg.norm(amps)


def _invertible(rng, n, cond_bound, max_tries=1000):
    for _ in range(max_tries):
        g = _gaussian(rng, (n, n))
        if np.linalg.cond(g) <= cond_bound:
            return g
    raise RuntimeError(f"no sample with condition number below {cond_bound} in {max_tries} tries")


SAMPLE_KINDS = (
    "haar_ket",
    "haar_unitary",
    "gaussian_opr",
    "sr_k_ket",
    "product_multipartite_ket",
    "invertible_opr",
)


def sample(kind, seed=0, *, dims, k=None, cond_bound=None, rng=None):
    """Draw a random ket or operator, deterministic in ``seed``.

    ``rng`` (a ``numpy.random.Generator``) overrides ``seed`` when given, which
    lets callers draw several objects from one stream.
    """
    shape = as_shape(dims)
    rng = np.random.default_rng(seed) if rng is None else rng
    n = shape.total
    if kind == "haar_ket":
        amps = _gaussian(rng, n)
        return Ket(amps / np.linalg.norm(amps), shape)
    if kind == "haar_unitary":
        return Opr(_haar_unitary(rng, n), shape, shape)
    if kind == "gaussian_opr":
        return Opr(_gaussian(rng, (n, n)), shape, shape)
    if kind == "invertible_opr":
        bound = config.COND_BOUND if cond_bound is None else cond_bound
        return Opr(_invertible(rng, n, bound), shape, shape)
    if kind == "sr_k_ket":
        if len(shape) != 2:
            raise ShapeError(f"sr_k_ket needs a bipartite shape, got {shape.dims}")
        m, nn = shape.dims
        if k is None or not 1 <= k <= min(m, nn):
            raise ValueError(f"k out of range: need 1 <= k <= {min(m, nn)}, got {k}")
        return Ket(_sr_k_amps(rng, m, nn, k), shape)
    if kind == "product_multipartite_ket":
        factors = [_gaussian(rng, d) for d in shape.dims]
        factors = [f / np.linalg.norm(f) for f in factors]
        return Ket(reduce(np.kron, factors), shape)
    raise ValueError(f"unknown sample kind {kind!r}; expected one of {SAMPLE_KINDS}")
