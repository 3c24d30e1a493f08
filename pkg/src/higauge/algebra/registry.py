"""Registry of differential (2-)crossed modules that pass full validation.

Every entry is constructed from closed-form data whose axioms hold exactly,
so the validation residuals are at floating-point roundoff level.  The
registry is the source of instances for all round-trip acceptance tests.
"""

from __future__ import annotations

import numpy as np

from higauge.algebra.lie import (LieAction, LieAlgebra, LinearLieMap,
                                 abelian_algebra, so3, su2_real)
from higauge.algebra.xmod import CrossedModule, TwoCrossedModule
from higauge.errors import ArgumentError


def _block_diag_basis(*algebras):
    """Basis of the direct sum embedded as block-diagonal matrices."""
    sizes = [a.mat_dim for a in algebras]
    total = sum(sizes)
    basis = []
    offset = 0
    for a, size in zip(algebras, sizes):
        for b in a.basis:
            m = np.zeros((total, total))
            m[offset:offset + size, offset:offset + size] = b
            basis.append(m)
        offset += size
    return np.array(basis)


def direct_sum_algebra(name, *algebras):
    ip_blocks = [a.ip for a in algebras]
    dim = sum(a.dim for a in algebras)
    ip = np.zeros((dim, dim))
    off = 0
    for block in ip_blocks:
        n = block.shape[0]
        ip[off:off + n, off:off + n] = block
        off += n
    return LieAlgebra(name, _block_diag_basis(*algebras), ip=ip)


def _embed_map(matrix, row_off, col_off, rows, cols):
    out = np.zeros((rows, cols))
    r, c = matrix.shape
    out[row_off:row_off + r, col_off:col_off + c] = matrix
    return out


def standard_action_tensor(algebra_g, rep_matrices, acted_dim):
    """Action tensor from representation matrices rho(e_a) on R^acted_dim."""
    tensor = np.zeros((algebra_g.dim, acted_dim, acted_dim))
    for a, rho in enumerate(rep_matrices):
        # alpha(e_a)(e_i) = sum_j rho[j, i] e_j
        tensor[a] = np.asarray(rho).T
    return tensor


def adjoint_action_tensor(algebra):
    """ad as an action tensor of an algebra on itself."""
    return algebra.structure.copy()


# -- crossed modules ---------------------------------------------------------

def so3_vector_module():
    """(a) representation module: G = SO(3) acting on abelian h = R^3, t = 0."""
    g = so3()
    h = abelian_algebra("r3", 3)
    t = LinearLieMap(h, g, np.zeros((3, 3)))
    alpha = LieAction(g, h, standard_action_tensor(g, g.basis, 3))
    return CrossedModule("so3_vector", g, h, t, alpha)


def identity_module(algebra_factory=so3, name=None):
    """(b) identity module: h = g, t = id, alpha = ad."""
    g = algebra_factory()
    h = algebra_factory()
    t = LinearLieMap(h, g, np.eye(g.dim))
    alpha = LieAction(g, h, adjoint_action_tensor(g))
    return CrossedModule(name or f"identity_{g.name}", g, h, t, alpha)


def identity_su2_module():
    return identity_module(su2_real, name="identity_su2")


def product_crossed(name, m1, m2):
    """(c) direct product of two crossed modules."""
    g = direct_sum_algebra(f"{m1.g.name}+{m2.g.name}", m1.g, m2.g)
    h = direct_sum_algebra(f"{m1.h.name}+{m2.h.name}", m1.h, m2.h)
    t_mat = np.zeros((g.dim, h.dim))
    t_mat[:m1.g.dim, :m1.h.dim] = m1.t.matrix
    t_mat[m1.g.dim:, m1.h.dim:] = m2.t.matrix
    t = LinearLieMap(h, g, t_mat)
    tensor = np.zeros((g.dim, h.dim, h.dim))
    tensor[:m1.g.dim, :m1.h.dim, :m1.h.dim] = m1.alpha.tensor
    tensor[m1.g.dim:, m1.h.dim:, m1.h.dim:] = m2.alpha.tensor
    return CrossedModule(name, g, h, t, LieAction(g, h, tensor))


def mixed_product_module():
    """(c) so3_vector x identity_so3: t has nontrivial kernel and image."""
    return product_crossed("so3_vector+identity_so3",
                           so3_vector_module(), identity_module())


# -- 2-crossed modules --------------------------------------------------------

def twocrossed_rep_module():
    """(d) zero Peiffer lifting, tau = 0, l an abelian g-representation.

    g = so(3) (+) so(3); t maps h = so(3) onto the first factor while beta
    acts through the second factor only, so beta o t = 0 as forced by p5.
    """
    g = direct_sum_algebra("so3+so3", so3(), so3())
    h = so3()
    l = abelian_algebra("r3_l", 3)
    t = LinearLieMap(h, g, _embed_map(np.eye(3), 0, 0, 6, 3))
    tau = LinearLieMap(l, h, np.zeros((3, 3)))
    alpha_tensor = np.zeros((6, 3, 3))
    alpha_tensor[:3] = adjoint_action_tensor(h)
    alpha = LieAction(g, h, alpha_tensor)
    so3_alg = so3()
    beta_tensor = np.zeros((6, 3, 3))
    beta_tensor[3:] = standard_action_tensor(so3_alg, so3_alg.basis, 3)
    beta = LieAction(g, l, beta_tensor)
    peiffer = np.zeros((3, 3, 3))
    return TwoCrossedModule("twocrossed_rep", g, h, l, t, tau, alpha, beta,
                            peiffer)


def twocrossed_adjoint_module():
    """(e) nonzero Peiffer lifting: l = h = g = so(3), tau = id, {u,v} = [u,v].

    With t = 0 and alpha = beta = ad, relations p1-p5 reduce to the Jacobi
    identity, giving a short complex whose lifting is genuinely nonzero.
    """
    g = so3()
    h = so3()
    l = so3()
    t = LinearLieMap(h, g, np.zeros((3, 3)))
    tau = LinearLieMap(l, h, np.eye(3))
    alpha = LieAction(g, h, adjoint_action_tensor(g))
    beta = LieAction(g, l, adjoint_action_tensor(g))
    peiffer = h.structure.copy()
    return TwoCrossedModule("twocrossed_adjoint", g, h, l, t, tau, alpha, beta,
                            peiffer)


def product_two_crossed(name, m1, m2):
    """Direct product of two 2-crossed modules."""
    g = direct_sum_algebra(f"{m1.g.name}+{m2.g.name}", m1.g, m2.g)
    h = direct_sum_algebra(f"{m1.h.name}+{m2.h.name}", m1.h, m2.h)
    l = direct_sum_algebra(f"{m1.l.name}+{m2.l.name}", m1.l, m2.l)
    t_mat = np.zeros((g.dim, h.dim))
    t_mat[:m1.g.dim, :m1.h.dim] = m1.t.matrix
    t_mat[m1.g.dim:, m1.h.dim:] = m2.t.matrix
    tau_mat = np.zeros((h.dim, l.dim))
    tau_mat[:m1.h.dim, :m1.l.dim] = m1.tau.matrix
    tau_mat[m1.h.dim:, m1.l.dim:] = m2.tau.matrix
    alpha_tensor = np.zeros((g.dim, h.dim, h.dim))
    alpha_tensor[:m1.g.dim, :m1.h.dim, :m1.h.dim] = m1.alpha.tensor
    alpha_tensor[m1.g.dim:, m1.h.dim:, m1.h.dim:] = m2.alpha.tensor
    beta_tensor = np.zeros((g.dim, l.dim, l.dim))
    beta_tensor[:m1.g.dim, :m1.l.dim, :m1.l.dim] = m1.beta.tensor
    beta_tensor[m1.g.dim:, m1.l.dim:, m1.l.dim:] = m2.beta.tensor
    peiffer = np.zeros((h.dim, h.dim, l.dim))
    peiffer[:m1.h.dim, :m1.h.dim, :m1.l.dim] = m1.peiffer
    peiffer[m1.h.dim:, m1.h.dim:, m1.l.dim:] = m2.peiffer
    return TwoCrossedModule(
        name, g, h, l,
        LinearLieMap(h, g, t_mat), LinearLieMap(l, h, tau_mat),
        LieAction(g, h, alpha_tensor), LieAction(g, l, beta_tensor), peiffer)


def twocrossed_mixed_module():
    """(f) product of (d) and (e): tau with nontrivial kernel and image."""
    return product_two_crossed("twocrossed_rep+adjoint",
                               twocrossed_rep_module(),
                               twocrossed_adjoint_module())


_REGISTRY = {
    "so3_vector": so3_vector_module,
    "identity_so3": identity_module,
    "identity_su2": identity_su2_module,
    "so3_vector+identity_so3": mixed_product_module,
    "twocrossed_rep": twocrossed_rep_module,
    "twocrossed_adjoint": twocrossed_adjoint_module,
    "twocrossed_rep+adjoint": twocrossed_mixed_module,
}


def registry():
    """Mapping of registry names to zero-argument constructors."""
    return dict(_REGISTRY)


def build_module(name):
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ArgumentError(
            f"unknown registry module {name!r}; known: {sorted(_REGISTRY)}"
        ) from None
