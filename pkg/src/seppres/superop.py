"""Linear maps on operators, stored as matrices on row-major vectorizations.

For ``X`` acting on a space of dimension ``d``, ``vec(X)[i*d + j] = X[i, j]``
and the map ``X -> A X B`` has matrix ``kron(A, B.T)``. The Choi matrix is
``C = sum_ij E_ij (x) Phi(E_ij)`` with the input factor first.
"""

from math import prod

import numpy as np

from .errors import ShapeError
from .tensor import Opr, as_opr, as_shape, axis_transpose


class SuperOp:
    """Linear map on operators over a space with tensor factors ``dims``."""

    def __init__(self, matrix, dims):
        self.dims = as_shape(dims).dims
        d = prod(self.dims)
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (d * d, d * d):
            raise ShapeError(
                f"superoperator on dims {self.dims} must be {d * d}x{d * d}, got {matrix.shape}"
            )
        self.matrix = matrix

    @property
    def d(self):
        return prod(self.dims)

    def __repr__(self):
        return f"SuperOp(dims={self.dims})"

    def __call__(self, x):
        x = as_opr(x)
        out = self.matrix @ x.entries.reshape(-1)
        return Opr(out.reshape(self.d, self.d), self.dims, self.dims)

    apply = __call__

    def compose(self, other):
        """``self`` after ``other``."""
        if other.dims != self.dims:
            raise ShapeError("superoperators act on different spaces")
        return SuperOp(self.matrix @ other.matrix, self.dims)

    def choi(self):
        d = self.d
        t = self.matrix.reshape(d, d, d, d)  # (r, s, i, j)
        return t.transpose(2, 0, 3, 1).reshape(d * d, d * d)

    def as_opr(self):
        dd = self.dims + self.dims
        return Opr(self.matrix, dd, dd)

    def frobenius_isometry_defect(self):
        """Spectral distance of M^* M from the identity."""
        g = self.matrix.conj().T @ self.matrix
        return float(np.linalg.norm(g - np.eye(len(g)), 2))

    def is_trace_preserving(self, tol=1e-8):
        vec_id = np.eye(self.d).reshape(-1)
        return bool(np.linalg.norm(vec_id @ self.matrix - vec_id) <= tol * np.sqrt(self.d))

    def cond(self):
        return float(np.linalg.cond(self.matrix))

    # --- constructors -----------------------------------------------------

    @classmethod
    def from_choi(cls, choi, dims):
        d = prod(as_shape(dims).dims)
        c = np.asarray(choi, dtype=complex).reshape(d, d, d, d)  # (i, r, j, s)
        return cls(c.transpose(1, 3, 0, 2).reshape(d * d, d * d), dims)

    @classmethod
    def from_function(cls, f, dims):
        dims = as_shape(dims).dims
        d = prod(dims)
        cols = []
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                cols.append(as_opr(f(Opr(e, dims, dims))).entries.reshape(-1))
        return cls(np.array(cols).T, dims)

    @classmethod
    def sandwich(cls, left, right, dims=None):
        """``X -> left X right``."""
        left, right = as_opr(left), as_opr(right)
        return cls(np.kron(left.entries, right.entries.T), dims or left.row_dims)

    @classmethod
    def conjugation(cls, op, dims=None):
        """``X -> L X L^*``."""
        op = as_opr(op)
        return cls.sandwich(op, op.H, dims)

    @classmethod
    def from_kraus(cls, ops, dims=None):
        ops = [as_opr(a) for a in ops]
        dims = dims or ops[0].row_dims
        return cls(sum(np.kron(a.entries, a.entries.conj()) for a in ops), dims)

    @classmethod
    def identity(cls, dims):
        d = prod(as_shape(dims).dims)
        return cls(np.eye(d * d), dims)

    @classmethod
    def transpose_map(cls, dims):
        return cls.from_function(lambda x: x.T, dims)

    @classmethod
    def partial_transpose_map(cls, dims, parties=(1,)):
        return cls.from_function(lambda x: axis_transpose(x, parties), dims)

    @classmethod
    def depolarizing(cls, dims):
        """Completely depolarizing map ``X -> tr(X) I / d``."""
        d = prod(as_shape(dims).dims)
        return cls.from_function(
            lambda x: Opr(np.trace(x.entries) * np.eye(d) / d, x.row_dims, x.col_dims), dims
        )
