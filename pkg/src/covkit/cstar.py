"""Finite-dimensional C*-algebras and matrix-realized Hilbert modules.

An algebra is a direct sum of full matrix blocks, represented concretely on
its defining space (block-diagonal matrices of size sum of block sizes).
Module elements over M_k are n x k matrices with inner product v^+ w, and
every sesquilinear form is given by a matrix T via s(v, w) = v^+ T w.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numlin import DEFAULT_TOL, DimensionError, Tolerances, as_matrix, frob, psd_check


@dataclass(frozen=True)
class FiniteCStarAlgebra:
    """Direct sum of full matrix blocks M_{n_1} + ... + M_{n_r}."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks or any(b < 1 for b in blocks):
            raise ValueError("block sizes must be positive")

    @staticmethod
    def full(n: int) -> "FiniteCStarAlgebra":
        return FiniteCStarAlgebra((n,))

    @staticmethod
    def commutative(n: int) -> "FiniteCStarAlgebra":
        """Functions on an n-point set."""
        return FiniteCStarAlgebra((1,) * n)

    @property
    def defining_dim(self) -> int:
        return sum(self.blocks)

    @property
    def linear_dim(self) -> int:
        return sum(b * b for b in self.blocks)

    def block_offset(self, i: int) -> int:
        return sum(self.blocks[:i])

    def unit_index(self):
        """Triples (block, row, col) in the order the unit basis is listed."""
        out = []
        for i, n in enumerate(self.blocks):
            for a in range(n):
                for b in range(n):
                    out.append((i, a, b))
        return out

    def unit(self, i: int, a: int, b: int) -> np.ndarray:
        m = np.zeros((self.defining_dim, self.defining_dim), dtype=np.complex128)
        off = self.block_offset(i)
        m[off + a, off + b] = 1.0
        return m

    def units(self):
        for i, a, b in self.unit_index():
            yield self.unit(i, a, b)

    @property
    def n_units(self) -> int:
        return self.linear_dim

    def one(self) -> np.ndarray:
        return np.eye(self.defining_dim, dtype=np.complex128)

    def coefficients(self, mat) -> np.ndarray:
        """Coordinates of an algebra element in the matrix-unit basis."""
        mat = as_matrix(mat)
        if mat.shape != (self.defining_dim, self.defining_dim):
            raise DimensionError("element has the wrong size for this algebra")
        out = np.empty(self.n_units, dtype=np.complex128)
        for k, (i, a, b) in enumerate(self.unit_index()):
            off = self.block_offset(i)
            out[k] = mat[off + a, off + b]
        return out

    def element(self, coefficients) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=np.complex128)
        if coefficients.shape != (self.n_units,):
            raise DimensionError("need one coefficient per matrix unit")
        m = np.zeros((self.defining_dim, self.defining_dim), dtype=np.complex128)
        for k, (i, a, b) in enumerate(self.unit_index()):
            off = self.block_offset(i)
            m[off + a, off + b] = coefficients[k]
        return m

    def contains(self, mat, tol: Tolerances = DEFAULT_TOL) -> bool:
        """True iff the matrix vanishes outside the block-diagonal pattern."""
        mat = as_matrix(mat)
        if mat.shape != (self.defining_dim, self.defining_dim):
            return False
        residual = mat - self.element(self.coefficients(mat))
        return frob(residual) <= tol.recon_fro * max(1.0, frob(mat))

    def block_of(self, mat, i: int) -> np.ndarray:
        off, n = self.block_offset(i), self.blocks[i]
        return as_matrix(mat)[off : off + n, off : off + n]

    def unit_product_table(self):
        """(k1, k2) -> index of unit(k1) @ unit(k2), or None when zero."""
        idx = {t: k for k, t in enumerate(self.unit_index())}
        table = {}
        for k1, (i, a, b) in enumerate(self.unit_index()):
            for k2, (j, c, d) in enumerate(self.unit_index()):
                table[(k1, k2)] = idx[(i, a, d)] if (i == j and b == c) else None
        return table

    def adjoint_table(self):
        idx = {t: k for k, t in enumerate(self.unit_index())}
        return [idx[(i, b, a)] for (i, a, b) in self.unit_index()]


@dataclass(frozen=True)
class TensorSplit:
    """Identification of an algebra with a tensor product left (x) right.

    Blocks of the product are indexed left-major; the defining space of
    block (i, j) is C^{n_i} (x) C^{m_j} with the right index fast.
    """

    left: FiniteCStarAlgebra
    right: FiniteCStarAlgebra
    algebra: FiniteCStarAlgebra = field(init=False, default=None)

    def __post_init__(self):
        blocks = tuple(
            n * m for n in self.left.blocks for m in self.right.blocks
        )
        object.__setattr__(self, "algebra", FiniteCStarAlgebra(blocks))

    def embed(self, bmat, cmat) -> np.ndarray:
        """b (x) c as an element of the product algebra."""
        bmat, cmat = as_matrix(bmat), as_matrix(cmat)
        out = np.zeros(
            (self.algebra.defining_dim, self.algebra.defining_dim), dtype=np.complex128
        )
        pos = 0
        for i, n in enumerate(self.left.blocks):
            boff = self.left.block_offset(i)
            bblk = bmat[boff : boff + n, boff : boff + n]
            for j, m in enumerate(self.right.blocks):
                coff = self.right.block_offset(j)
                cblk = cmat[coff : coff + m, coff : coff + m]
                out[pos : pos + n * m, pos : pos + n * m] = np.kron(bblk, cblk)
                pos += n * m
        return out


@dataclass(frozen=True)
class ModuleSpace:
    """Module of n_V x k matrices over M_k with inner product v^+ w."""

    k: int
    n_v: int

    def __post_init__(self):
        if self.k < 1 or self.n_v < 1:
            raise ValueError("module dimensions must be positive")

    def element_shape(self):
        return (self.n_v, self.k)

    def check_element(self, v) -> np.ndarray:
        v = as_matrix(v)
        if v.shape != self.element_shape():
            raise DimensionError(
                f"module element must be {self.element_shape()}, got {v.shape}"
            )
        return v

    def inner(self, v, w) -> np.ndarray:
        return self.check_element(v).conj().T @ self.check_element(w)

    def random_element(self, rng) -> np.ndarray:
        return rng.normal(size=self.element_shape()) + 1j * rng.normal(
            size=self.element_shape()
        )


def form_eval(t, v, w) -> np.ndarray:
    """Evaluate the form with matrix ``t``: s(v, w) = v^+ t w (a k x k matrix)."""
    t, v, w = as_matrix(t), as_matrix(v), as_matrix(w)
    if t.shape[0] != t.shape[1] or v.shape[0] != t.shape[0] or w.shape[0] != t.shape[0]:
        raise DimensionError("form/element shapes disagree")
    return v.conj().T @ t @ w


def form_positive(t, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Positivity of the form s(v, w) = v^+ t w, equivalently of ``t``."""
    return psd_check(t, tol)


def algebra_element(alg: FiniteCStarAlgebra, coefficients) -> np.ndarray:
    return alg.element(coefficients)


def alg_positive(alg: FiniteCStarAlgebra, a, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Positivity in the algebra: every diagonal block is PSD."""
    a = as_matrix(a)
    if not alg.contains(a, tol):
        raise DimensionError("matrix is not an element of the algebra")
    return all(psd_check(alg.block_of(a, i), tol) for i in range(len(alg.blocks)))
