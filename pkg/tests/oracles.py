"""Independent brute-force convex-split oracles for extremality.

These decide extremality directly on the primal convex sets: a point fails
to be extreme exactly when some nonzero Hermitian perturbation direction
satisfies the class's linear constraints (covariance, normalization,
pinned entries) together with range containment in every positive
component.  No dilations or commutants are involved, so the verdicts are an
independent check of the engine's decision procedures; every non-extreme
verdict is backed by an explicit validated split.
"""

import dataclasses

import numpy as np

from covkit.cpmaps import CPMapSpec, cp_validate
from covkit.cstar import ModuleSpace
from covkit.fingroup import GroupAction, TwoCocycle
from covkit.instruments import (
    InstrumentSpec,
    ObservableSpec,
    validate_instrument,
    validate_observable,
)
from covkit.kernels import CovariantKernelSpec, validate_kernel
from covkit.numlin import hermitian_basis, null_space, vec


def _range_projector(mat, tol=1e-9):
    w, v = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    keep = w > tol * max(1.0, w.max(initial=0.0))
    cols = v[:, keep]
    return cols @ cols.conj().T


def _solve_real(system_rows, basis):
    """Nonzero real combination of Hermitian basis elements annihilated by
    all the complex-linear constraint rows, or None."""
    if not system_rows:
        mat = np.zeros((0, len(basis)))
    else:
        cols = np.stack(
            [np.concatenate([row(h) for row in system_rows]) for h in basis], axis=1
        )
        mat = np.vstack([cols.real, cols.imag])
    coeffs = null_space(mat)
    if coeffs.shape[1] == 0:
        return None
    c = coeffs[:, 0].real
    if isinstance(basis[0], tuple):
        direction = tuple(
            sum(float(ci) * h[j] for ci, h in zip(c, basis))
            for j in range(len(basis[0]))
        )
        norm = max((np.linalg.norm(p, 2) for p in direction if p.size), default=0.0)
        if norm < 1e-10:
            return None
        return tuple(p / norm for p in direction)
    direction = sum(float(ci) * hi for ci, hi in zip(c, basis))
    if np.linalg.norm(direction) < 1e-10:
        return None
    return direction / np.linalg.norm(direction, 2)


def _shrink_until(valid, make, start=0.5, tries=40):
    eps = start
    for _ in range(tries):
        candidate = make(eps)
        if valid(candidate):
            return candidate, eps
        eps *= 0.5
    raise AssertionError("split direction admitted no feasible step")


def split_oracle_observable(spec: ObservableSpec):
    """(extreme, split) for a covariant observable."""
    sym = spec.symmetry
    v = spec.v_dim
    u = sym.rep
    base = spec.effects[0]
    q = _range_projector(base)
    eye = np.eye(v)

    def transported(delta0):
        return np.stack(
            [
                u(sym.sub.section[w]) @ delta0 @ u(sym.sub.section[w]).conj().T
                for w in range(spec.n_outcomes)
            ]
        )

    rows = []
    for mem in sym.sub.members:
        rows.append(lambda d, m=mem: vec(u(m) @ d @ u(m).conj().T - d))
    rows.append(lambda d: vec(transported(d).sum(axis=0)))
    rows.append(lambda d: vec((eye - q) @ d))
    rows.append(lambda d: vec(d @ (eye - q)))

    direction = _solve_real(rows, hermitian_basis(v))
    if direction is None:
        return True, None
    deltas = transported(direction)

    def make(eps):
        return (
            ObservableSpec(spec.effects + eps * deltas, sym),
            ObservableSpec(spec.effects - eps * deltas, sym),
        )

    def valid(pair):
        return all(validate_observable(s).ok for s in pair)

    split, _ = _shrink_until(valid, make)
    assert np.linalg.norm(split[0].effects - split[1].effects) > 1e-10
    return False, split


def split_oracle_cpmap(spec: CPMapSpec):
    """(extreme, split) for a CP map at fixed unit value; supports both the
    symmetric and the plain case."""
    alg, nv = spec.algebra, spec.n_v
    m = alg.n_units

    # perturbation directions live on the Choi-type block of each algebra
    # block and must be Hermitian there; parametrize by one Hermitian matrix
    # per block of size (n_i * n_V)
    basis = []
    for bi, size in enumerate(alg.blocks):
        for h in hermitian_basis(size * nv):
            entry = [np.zeros((s * nv, s * nv), dtype=complex) for s in alg.blocks]
            entry[bi] = h
            basis.append(tuple(entry))

    unit_index = alg.unit_index()

    def values_of(delta_blocks):
        vals = np.zeros((m, nv, nv), dtype=complex)
        for k, (i, a, b) in enumerate(unit_index):
            vals[k] = delta_blocks[i][a * nv : (a + 1) * nv, b * nv : (b + 1) * nv]
        return vals

    choi_blocks = []
    for bi, size in enumerate(alg.blocks):
        c = np.zeros((size * nv, size * nv), dtype=complex)
        for k, (i, a, b) in enumerate(unit_index):
            if i == bi:
                c[a * nv : (a + 1) * nv, b * nv : (b + 1) * nv] = spec.values[k]
        choi_blocks.append(c)
    projs = [_range_projector(c) for c in choi_blocks]

    rows = []
    # unit value fixed: sum over diagonal units of the perturbation vanishes
    rows.append(
        lambda d: vec(
            sum(
                d[i][a * nv : (a + 1) * nv, a * nv : (a + 1) * nv]
                for (i, a, b) in unit_index
                if a == b
            )
        )
    )
    # range containment per block
    for bi, size in enumerate(alg.blocks):
        eye = np.eye(size * nv)
        rows.append(lambda d, b=bi, e=eye, q=projs[bi]: vec((e - q) @ d[b]))
        rows.append(lambda d, b=bi, e=eye, q=projs[bi]: vec(d[b] @ (e - q)))
    # covariance when a symmetry is declared
    if spec.symmetry is not None:
        group = spec.symmetry.group
        for g in group.elements():
            if g == group.identity:
                continue

            def cov_row(d, g=g):
                moved = values_of(d)
                out = []
                uinv = spec.symmetry.rep.inv_mat(g)
                for k, unit in enumerate(alg.units()):
                    coeffs = alg.coefficients(spec.beta(g, unit))
                    lhs = np.tensordot(coeffs, moved, axes=(0, 0))
                    rhs = uinv.conj().T @ moved[k] @ uinv
                    out.append(vec(lhs - rhs))
                return np.concatenate(out)

            rows.append(cov_row)

    direction = _solve_real(rows, basis)
    if direction is None:
        return True, None
    delta_vals = values_of(direction)

    def make(eps):
        return (
            dataclasses.replace(spec, values=spec.values + eps * delta_vals),
            dataclasses.replace(spec, values=spec.values - eps * delta_vals),
        )

    def valid(pair):
        return all(cp_validate(s).ok for s in pair)

    split, _ = _shrink_until(valid, make)
    assert np.linalg.norm(split[0].values - split[1].values) > 1e-12
    return False, split


def split_oracle_instrument(spec: InstrumentSpec):
    """(extreme, split) for a covariant instrument."""
    sym = spec.symmetry
    k, v = spec.k_dim, spec.v_dim
    base = spec.choi[0]
    q = _range_projector(base)
    eye = np.eye(k * v)

    def w_of(g):
        return np.kron(sym.out_rep(g).conj(), sym.rep(g))

    def transported(delta0):
        return np.stack(
            [
                w_of(sym.sub.section[w]) @ delta0 @ w_of(sym.sub.section[w]).conj().T
                for w in range(spec.n_outcomes)
            ]
        )

    def ptrace_out(mat):
        m4 = mat.reshape(k, v, k, v)
        return np.einsum("avaw->vw", m4)

    rows = []
    for mem in sym.sub.members:
        rows.append(lambda d, m=mem: vec(w_of(m) @ d @ w_of(m).conj().T - d))
    rows.append(lambda d: vec(sum(ptrace_out(x) for x in transported(d))))
    rows.append(lambda d: vec((eye - q) @ d))
    rows.append(lambda d: vec(d @ (eye - q)))

    direction = _solve_real(rows, hermitian_basis(k * v))
    if direction is None:
        return True, None
    deltas = transported(direction)

    def make(eps):
        return (
            InstrumentSpec(spec.choi + eps * deltas, sym),
            InstrumentSpec(spec.choi - eps * deltas, sym),
        )

    def valid(pair):
        return all(validate_instrument(s).ok for s in pair)

    split, _ = _shrink_until(valid, make)
    assert np.linalg.norm(split[0].choi - split[1].choi) > 1e-12
    return False, split


def split_oracle_kernel(spec: CovariantKernelSpec, z_pairs):
    """(extreme, split) for a covariant kernel with entries pinned on Z."""
    x, nv = spec.x_size, spec.n_v
    dim = x * nv
    grand = spec.grand_matrix()
    q = _range_projector(grand)
    eye = np.eye(dim)
    group = spec.action.group

    def block(mat, a, b):
        return mat[a * nv : (a + 1) * nv, b * nv : (b + 1) * nv]

    rows = []
    for xx, yy in z_pairs:
        rows.append(lambda d, a=xx, b=yy: vec(block(d, a, b)))
    rows.append(lambda d: vec((eye - q) @ d))
    rows.append(lambda d: vec(d @ (eye - q)))
    for g in group.elements():
        if g == group.identity:
            continue

        def cov_row(d, g=g):
            uinv = spec.rep.inv_mat(g)
            out = []
            for a in range(x):
                for b in range(x):
                    lhs = block(d, spec.action.apply(g, a), spec.action.apply(g, b))
                    rhs = (
                        np.conj(spec.alpha[g, a])
                        * spec.alpha[g, b]
                        * (uinv.conj().T @ block(d, a, b) @ uinv)
                    )
                    out.append(vec(lhs - rhs))
            return np.concatenate(out)

        rows.append(cov_row)

    direction = _solve_real(rows, hermitian_basis(dim))
    if direction is None:
        return True, None

    def to_blocks(mat):
        out = np.zeros((x, x, nv, nv), dtype=complex)
        for a in range(x):
            for b in range(x):
                out[a, b] = block(mat, a, b)
        return out

    delta_blocks = to_blocks(direction)

    def make(eps):
        return (
            dataclasses.replace(spec, blocks=spec.blocks + eps * delta_blocks),
            dataclasses.replace(spec, blocks=spec.blocks - eps * delta_blocks),
        )

    def valid(pair):
        return all(validate_kernel(s).ok for s in pair)

    split, _ = _shrink_until(valid, make)
    return False, split


def observable_as_cpmap(spec: ObservableSpec) -> CPMapSpec:
    """The observable as a CP map on functions over the outcomes, with the
    permutation implementation of the symmetry (the CP-level route)."""
    from covkit.cpmaps import CPSymmetry
    from covkit.cstar import FiniteCStarAlgebra
    from covkit.fingroup import MultiplierRep

    sym = spec.symmetry
    alg = FiniteCStarAlgebra.commutative(spec.n_outcomes)
    values = np.stack([spec.effects[w] for w in range(spec.n_outcomes)])
    perm = MultiplierRep.from_action(sym.action)
    return CPMapSpec(
        alg,
        ModuleSpace(k=1, n_v=spec.v_dim),
        values,
        CPSymmetry(u=perm, rep=sym.rep),
    )


def cpmap_kernel_form(spec: CPMapSpec):
    """A plain CP map (no symmetry) as a kernel over its matrix units plus a
    pinned unit point; the kernel-level route to extremality at fixed unit
    value."""
    assert spec.symmetry is None
    alg, nv = spec.algebra, spec.n_v
    m = alg.n_units
    adj = alg.adjoint_table()
    prod = alg.unit_product_table()
    blocks = np.zeros((m + 1, m + 1, nv, nv), dtype=complex)
    for i in range(m):
        for j in range(m):
            kk = prod[(adj[i], j)]
            if kk is not None:
                blocks[i, j] = spec.values[kk]
    for i in range(m):
        blocks[m, i] = spec.values[i]
        blocks[i, m] = spec.values[adj[i]]
    blocks[m, m] = spec.unit_value()
    from covkit.fingroup import FiniteGroup, MultiplierRep

    g = FiniteGroup.trivial()
    kernel = CovariantKernelSpec(
        action=GroupAction.trivial(g, m + 1),
        alpha=np.ones((1, m + 1), dtype=complex),
        sigma=TwoCocycle.trivial(g),
        rep=MultiplierRep.trivial(g, nv),
        module=ModuleSpace(k=1, n_v=nv),
        blocks=blocks,
    )
    return kernel, [(m, m)]
