"""Positive covariant kernels over a finite index set, their minimal
covariant Kolmogorov decompositions, and the extremality decision procedure.

A kernel assigns to each pair (x, y) a form matrix T[x, y] on the module
fiber; positivity means the grand block matrix over all of X is PSD, and
covariance couples the blocks through the group action, a scalar weight
family alpha, and a multiplier representation on the fiber.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .cstar import ModuleSpace
from .fingroup import GroupAction, MultiplierRep, TwoCocycle, cocycle_violation
from .numlin import (
    DEFAULT_TOL,
    DimensionError,
    Tolerances,
    as_matrix,
    constrained_commutant,
    frob,
    is_unitary,
    lstsq_define,
    psd_check,
    psd_factor,
    rank,
)


class KernelValidationError(ValueError):
    """Operation requires a valid covariant kernel."""


class DilationResidualError(RuntimeError):
    """A solve that is exact in exact arithmetic exceeded its tolerance;
    usually a sign of inconsistent alpha / cocycle data."""


@dataclass(frozen=True)
class CovariantKernelSpec:
    """Blocks T[x, y] of a positive kernel covariant for (action, alpha, rep).

    ``alpha`` has shape (|G|, |X|); ``sigma`` is the 2-cocycle attached to
    alpha by the composition rule alpha(gh, x) = sigma(g, h) alpha(h, x)
    alpha(g, hx).  ``rep`` acts on the fiber C^{n_V} and may carry its own
    cocycle; the dilation representation then has cocycle sigma * rep.cocycle.
    """

    action: GroupAction
    alpha: np.ndarray
    sigma: TwoCocycle
    rep: MultiplierRep
    module: ModuleSpace
    blocks: np.ndarray  # (|X|, |X|, n_V, n_V)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.complex128)
        blocks = np.asarray(self.blocks, dtype=np.complex128)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "blocks", blocks)
        g, x, n = self.action.group, self.action.set_size, self.rep.dim
        if alpha.shape != (g.order, x):
            raise DimensionError("alpha must be |G| x |X|")
        if blocks.shape != (x, x, n, n):
            raise DimensionError("blocks must be |X| x |X| x n_V x n_V")
        if self.module.n_v != n:
            raise DimensionError("module fiber and representation dimension differ")
        if self.rep.group is not self.action.group and self.rep.group.order != g.order:
            raise DimensionError("action and representation use different groups")

    @property
    def x_size(self) -> int:
        return self.action.set_size

    @property
    def n_v(self) -> int:
        return self.rep.dim

    def grand_matrix(self) -> np.ndarray:
        x, n = self.x_size, self.n_v
        out = np.zeros((x * n, x * n), dtype=np.complex128)
        for a in range(x):
            for b in range(x):
                out[a * n : (a + 1) * n, b * n : (b + 1) * n] = self.blocks[a, b]
        return out

    def dilation_cocycle(self) -> TwoCocycle:
        return self.sigma.multiply(self.rep.cocycle)


@dataclass(frozen=True)
class KernelReport:
    positive: bool
    covariant: bool
    alpha_ok: bool
    first_violation: tuple | None
    residuals: dict

    @property
    def ok(self) -> bool:
        return self.positive and self.covariant and self.alpha_ok


def validate_kernel(spec: CovariantKernelSpec, tol: Tolerances = DEFAULT_TOL) -> KernelReport:
    """Check positivity, the alpha composition rule, and block covariance."""
    g = spec.action.group
    first = None
    residuals = {}

    if np.any(np.abs(spec.alpha) < 1e-14):
        return KernelReport(False, False, False, ("alpha_zero",), {})

    alpha_ok = True
    err_alpha = 0.0
    ident_err = np.abs(spec.alpha[g.identity] - 1.0).max()
    err_alpha = max(err_alpha, float(ident_err))
    if ident_err > tol.recon_fro:
        alpha_ok = False
        first = first or ("alpha_identity",)
    if cocycle_violation(spec.sigma) is not None:
        alpha_ok = False
        first = first or ("sigma_invalid",)
    else:
        for a in g.elements():
            for b in g.elements():
                for x in range(spec.x_size):
                    lhs = spec.alpha[g.prod(a, b), x]
                    rhs = spec.sigma(a, b) * spec.alpha[b, x] * spec.alpha[a, spec.action.apply(b, x)]
                    err_alpha = max(err_alpha, abs(lhs - rhs))
        if err_alpha > tol.recon_fro * max(1.0, float(np.abs(spec.alpha).max()) ** 2):
            alpha_ok = False
            first = first or ("alpha_cocycle",)
    residuals["alpha"] = float(err_alpha)

    covariant = True
    err_cov = 0.0
    scale = max(1.0, float(np.abs(spec.blocks).max()) * float(np.abs(spec.alpha).max()) ** 2)
    for a in g.elements():
        ua_inv = spec.rep.inv_mat(a)
        for x in range(spec.x_size):
            for y in range(spec.x_size):
                lhs = spec.blocks[spec.action.apply(a, x), spec.action.apply(a, y)]
                rhs = (
                    np.conj(spec.alpha[a, x])
                    * spec.alpha[a, y]
                    * (ua_inv.conj().T @ spec.blocks[x, y] @ ua_inv)
                )
                err = frob(lhs - rhs)
                if err > err_cov:
                    err_cov = err
                    if err > tol.recon_fro * scale:
                        covariant = False
                        first = first or ("covariance", a, x, y)
    residuals["covariance"] = float(err_cov)

    positive = psd_check(spec.grand_matrix(), tol)
    if not positive:
        first = first or ("positivity",)
    return KernelReport(positive, covariant, alpha_ok, first, residuals)


@dataclass(frozen=True)
class KolmogorovDecomposition:
    """Minimal factorization T[x, y] = factors[x]^+ factors[y] together with
    the dilation multiplier representation intertwining the fibers."""

    spec: CovariantKernelSpec
    rank: int
    factors: np.ndarray  # (|X|, rank, n_V)
    sym: MultiplierRep  # dimension = rank, cocycle = sigma * rep.cocycle
    residuals: dict = field(default_factory=dict)

    def stacked(self) -> np.ndarray:
        return np.hstack(list(self.factors))


def _solve_dilation_rep(spec, factors, n_dil, tol):
    """Solve the dilation unitaries from sym(g) factors[x] =
    alpha(g, x)^{-1} factors[g x] rep(g) and certify them."""
    g = spec.action.group
    if n_dil == 0:
        mats = np.zeros((g.order, 0, 0), dtype=np.complex128)
        return MultiplierRep(g, spec.dilation_cocycle(), mats), 0.0
    stacked_in = np.hstack(list(factors))
    scale = max(1.0, frob(stacked_in))
    mats = np.zeros((g.order, n_dil, n_dil), dtype=np.complex128)
    worst = 0.0
    for a in g.elements():
        targets = np.hstack(
            [
                factors[spec.action.apply(a, x)] @ spec.rep(a) / spec.alpha[a, x]
                for x in range(spec.x_size)
            ]
        )
        mats[a], res = lstsq_define([(stacked_in, targets)], tol)
        worst = max(worst, res)
        if res > tol.recon_fro * scale:
            raise DilationResidualError(
                f"dilation solve residual {res:.2e} at group element {a}; "
                "alpha / cocycle data is inconsistent with the blocks"
            )
    sym = MultiplierRep(g, spec.dilation_cocycle(), mats)
    return sym, worst


def _certify_decomposition(spec, decomp, tol):
    g = spec.action.group
    residuals = dict(decomp.residuals)
    n = decomp.rank
    grand = spec.grand_matrix()
    scale = max(1.0, np.linalg.norm(grand, 2)) if grand.size else 1.0

    recon = 0.0
    for x in range(spec.x_size):
        for y in range(spec.x_size):
            recon = max(
                recon,
                frob(decomp.factors[x].conj().T @ decomp.factors[y] - spec.blocks[x, y]),
            )
    residuals["reconstruction"] = recon
    if recon > tol.recon_fro * scale:
        raise DilationResidualError(f"factor reconstruction residual {recon:.2e}")

    unit = max((frob(decomp.sym(a).conj().T @ decomp.sym(a) - np.eye(n)) for a in g.elements()), default=0.0)
    residuals["unitarity"] = unit
    if unit > tol.unitary_fro * max(1.0, np.sqrt(n)):
        raise DilationResidualError(f"dilation unitaries off by {unit:.2e}")

    cocycle = spec.dilation_cocycle()
    coc = 0.0
    for a in g.elements():
        for b in g.elements():
            coc = max(
                coc,
                frob(decomp.sym(a) @ decomp.sym(b) - cocycle(a, b) * decomp.sym(g.prod(a, b))),
            )
    residuals["cocycle"] = coc
    if coc > tol.recon_fro * max(1.0, np.sqrt(n)):
        raise DilationResidualError(f"dilation cocycle residual {coc:.2e}")

    inter = 0.0
    for a in g.elements():
        for x in range(spec.x_size):
            lhs = decomp.sym(a) @ decomp.factors[x]
            rhs = decomp.factors[spec.action.apply(a, x)] @ spec.rep(a) / spec.alpha[a, x]
            inter = max(inter, frob(lhs - rhs))
    residuals["intertwining"] = inter
    if inter > tol.recon_fro * max(1.0, scale):
        raise DilationResidualError(f"covariant intertwining residual {inter:.2e}")
    return replace(decomp, residuals=residuals)


def kolmogorov_decompose(
    spec: CovariantKernelSpec,
    tol: Tolerances = DEFAULT_TOL,
    basis_permutation=None,
) -> KolmogorovDecomposition:
    """Minimal covariant factorization of a valid kernel.

    The grand block matrix is factored through its eigendecomposition and the
    dilation representation is solved globally for each group element by
    least squares over the spanning factor blocks, then certified.

    ``basis_permutation`` optionally permutes the grand coordinates before
    factoring; the result is another minimal decomposition of the same
    kernel, useful for exercising uniqueness up to a connecting unitary.
    """
    report = validate_kernel(spec, tol)
    if not report.ok:
        raise KernelValidationError(f"kernel invalid: {report.first_violation}")
    grand = spec.grand_matrix()
    if basis_permutation is not None:
        perm = np.asarray(basis_permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(grand.shape[0])):
            raise DimensionError("basis_permutation must permute the grand coordinates")
        n_dil, f_perm = psd_factor(grand[np.ix_(perm, perm)], tol)
        f = np.zeros((n_dil, grand.shape[0]), dtype=np.complex128)
        f[:, perm] = f_perm
    else:
        n_dil, f = psd_factor(grand, tol)
    nv = spec.n_v
    factors = np.stack(
        [f[:, x * nv : (x + 1) * nv] for x in range(spec.x_size)]
    ) if n_dil else np.zeros((spec.x_size, 0, nv), dtype=np.complex128)
    sym, solve_res = _solve_dilation_rep(spec, factors, n_dil, tol)
    decomp = KolmogorovDecomposition(
        spec, n_dil, factors, sym, {"dilation_solve": solve_res}
    )
    return _certify_decomposition(spec, decomp, tol)


def transform_decomposition(decomp: KolmogorovDecomposition, q) -> KolmogorovDecomposition:
    """Unitarily transported decomposition (q factors[x], q sym q^+)."""
    q = as_matrix(q)
    factors = np.stack([q @ decomp.factors[x] for x in range(decomp.spec.x_size)])
    mats = np.stack([q @ decomp.sym(g) @ q.conj().T for g in decomp.spec.action.group.elements()])
    sym = MultiplierRep(decomp.spec.action.group, decomp.sym.cocycle, mats)
    return KolmogorovDecomposition(decomp.spec, decomp.rank, factors, sym, dict(decomp.residuals))


class EquivalenceError(RuntimeError):
    """The two decompositions do not dilate the same kernel."""


def equivalence_unitary(
    d1: KolmogorovDecomposition, d2: KolmogorovDecomposition, tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """The unitary connecting two minimal decompositions of the same kernel:
    w factors1[x] = factors2[x] for every x and w sym1(g) = sym2(g) w."""
    if d1.spec.x_size != d2.spec.x_size or d1.spec.n_v != d2.spec.n_v:
        raise DimensionError("decompositions live over different kernels")
    if d1.rank != d2.rank:
        raise EquivalenceError("ranks differ; not decompositions of one kernel")
    if d1.rank == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    w, res = lstsq_define([(d1.stacked(), d2.stacked())], tol)
    scale = max(1.0, frob(d1.stacked()))
    if res > tol.recon_fro * scale:
        raise EquivalenceError(f"factor matching residual {res:.2e}")
    if not is_unitary(w, tol):
        raise EquivalenceError("connecting map failed the unitarity certificate")
    worst = max(
        frob(w @ d1.sym(g) - d2.sym(g) @ w) for g in d1.spec.action.group.elements()
    )
    if worst > tol.recon_fro * max(1.0, np.sqrt(d1.rank)):
        raise EquivalenceError(f"intertwining residual {worst:.2e}")
    return w


@dataclass(frozen=True)
class ExtremalityCertificate:
    """Outcome of an extremality decision.

    ``witness`` is a Hermitian direction certifying non-extremality (norm
    one); ``perturbed`` holds the two neighbours whose midpoint is the
    tested object.  ``freedom`` is the dimension of the full solution space.
    """

    extreme: bool
    witness: np.ndarray | None
    perturbed: tuple | None
    freedom: int


def _hermitian_witness(basis, tol):
    """A norm-one Hermitian element of the span of ``basis``, or None."""
    for d in basis:
        h = 0.5 * (d + d.conj().T)
        if frob(h) > 1e-8:
            return h / np.linalg.norm(h, 2)
        h = 0.5j * (d.conj().T - d)
        if frob(h) > 1e-8:
            return h / np.linalg.norm(h, 2)
    return None


def kernel_extremal(
    spec: CovariantKernelSpec,
    z_pairs,
    decomp: KolmogorovDecomposition | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> ExtremalityCertificate:
    """Decide extremality of the kernel in the convex set of covariant
    kernels agreeing with it on the pairs in ``z_pairs``.

    The constrained commutant of the dilation representation is computed
    with one functional per matrix entry of factors[x]^+ D factors[y] for
    each (x, y) in Z; the kernel is extreme iff only D = 0 survives.  When Z
    is symmetric the search space is all matrices, otherwise Hermitian ones.
    On non-extremality the certificate carries a Hermitian witness and the
    two perturbed kernels built from I +- D, which agree with the original
    on Z and are themselves valid covariant kernels.
    """
    z_pairs = [(int(x), int(y)) for x, y in z_pairs]
    if not z_pairs:
        raise ValueError("Z must be nonempty")
    if decomp is None:
        decomp = kolmogorov_decompose(spec, tol)
    if decomp.rank == 0:
        return ExtremalityCertificate(True, None, None, 0)
    z_set = set(z_pairs)
    symmetric = all((y, x) in z_set for x, y in z_set)

    constraints = []
    for x, y in sorted(z_set):
        fx, fy = decomp.factors[x], decomp.factors[y]
        for a in range(spec.n_v):
            for b in range(spec.n_v):
                constraints.append(np.outer(fx[:, a], fy[:, b].conj()))
    generators = [decomp.sym(g) for g in spec.action.group.elements() if g != spec.action.group.identity]

    basis = constrained_commutant(
        generators,
        constraints,
        hermitian_only=not symmetric,
        dim=decomp.rank,
        tol=tol,
    )
    if not basis:
        return ExtremalityCertificate(True, None, None, 0)

    witness = _hermitian_witness(basis, tol)
    if witness is None:
        # the solution space is nontrivial but purely non-Hermitian; cannot
        # happen for symmetric Z, and Hermitian solves return Hermitians
        return ExtremalityCertificate(True, None, None, len(basis))

    perturbed = []
    eye = np.eye(decomp.rank)
    for sign in (+1.0, -1.0):
        mid = eye + sign * witness
        blocks = np.zeros_like(spec.blocks)
        for x in range(spec.x_size):
            for y in range(spec.x_size):
                blocks[x, y] = decomp.factors[x].conj().T @ mid @ decomp.factors[y]
        perturbed.append(replace(spec, blocks=blocks))
    return ExtremalityCertificate(False, witness, tuple(perturbed), len(basis))
