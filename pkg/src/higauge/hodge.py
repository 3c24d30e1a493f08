"""Discrete Hodge decomposition with normal boundary conditions.

omega = d alpha + codiff beta + harmonic, with beta_N = 0 enforced by
eliminating the constrained cells.  Both potentials are computed by CG on
the (consistent, possibly singular) normal equations from a zero start,
which selects the minimum-norm solution; that is the discrete realization
of the uniqueness side conditions.  Because codiff is the exact adjoint
of d and codiff o codiff = 0, the three parts are exactly L2-orthogonal
up to solver residuals.
"""

from __future__ import annotations

import numpy as np

from higauge.errors import StructureError
from higauge.forms.grid import GridCochain
from higauge.numutil import conjugate_gradient, nullspace_dimension

DEFAULT_TOL = 1e-10


class HodgeSplit:
    """Result of a decomposition: potentials, parts and diagnostics."""

    def __init__(self, alpha, beta, exact_part, coexact_part, harmonic,
                 diagnostics):
        self.alpha = alpha
        self.beta = beta
        self.exact_part = exact_part        # d alpha
        self.coexact_part = coexact_part    # codiff beta
        self.harmonic = harmonic
        self.diagnostics = diagnostics

    def summary(self):
        return dict(self.diagnostics)


def _zero_start_cg(op, rhs_cochain, tol, max_iter):
    rhs = rhs_cochain.flatten()
    template = rhs_cochain

    def apply_flat(flat):
        return op(template.from_flat(flat)).flatten()

    x, info = conjugate_gradient(apply_flat, rhs, tol=tol, max_iter=max_iter)
    return template.from_flat(x), info


def hodge_decompose(omega, tol=DEFAULT_TOL, max_iter=None):
    """Split a k-cochain as d(alpha) + codiff(beta) + harmonic.

    alpha is the minimum-norm solution of codiff(d alpha) = codiff(omega);
    beta solves d(codiff beta) = d(omega) on the beta_N = 0 subspace; the
    harmonic part is the remainder.
    """
    if tol <= 0:
        raise StructureError("tolerance must be positive")
    grid = omega.grid
    k = omega.degree
    algebra = omega.algebra
    scale = max(omega.l2_norm(), 1e-300)
    diagnostics = {"k": k, "tol": tol, "input_norm": omega.l2_norm()}

    if k >= 1:
        rhs_alpha = omega.codiff()

        def op_alpha(x):
            return x.d().codiff()

        alpha, info_a = _zero_start_cg(op_alpha, rhs_alpha, tol, max_iter)
        exact_part = alpha.d()
        diagnostics["alpha_iterations"] = info_a["iterations"]
        diagnostics["alpha_relative_residual"] = info_a["relative_residual"]
    else:
        alpha = None
        exact_part = omega.zeros_like()
        diagnostics["alpha_iterations"] = 0
        diagnostics["alpha_relative_residual"] = 0.0

    if k <= grid.m - 1:
        # least squares for d(codiff beta) = d(omega) over {beta_N = 0}:
        # the normal operator is P d codiff P with right side P d omega
        rhs_beta = omega.d().zero_normal()

        def op_beta(x):
            return x.zero_normal().codiff().d().zero_normal()

        beta, info_b = _zero_start_cg(op_beta, rhs_beta, tol, max_iter)
        beta = beta.zero_normal()
        coexact_part = beta.codiff()
        diagnostics["beta_iterations"] = info_b["iterations"]
        diagnostics["beta_relative_residual"] = info_b["relative_residual"]
    else:
        beta = None
        coexact_part = omega.zeros_like()
        diagnostics["beta_iterations"] = 0
        diagnostics["beta_relative_residual"] = 0.0

    harmonic = omega - exact_part - coexact_part
    recon = exact_part + coexact_part + harmonic - omega
    diagnostics["reconstruction_residual"] = recon.l2_norm() / scale
    diagnostics["harmonic_norm"] = harmonic.l2_norm()
    pairs = {
        "orth_exact_coexact": exact_part.inner(coexact_part),
        "orth_exact_harmonic": exact_part.inner(harmonic),
        "orth_coexact_harmonic": coexact_part.inner(harmonic),
    }
    for name, val in pairs.items():
        diagnostics[name] = abs(val) / scale ** 2
    if beta is not None:
        diagnostics["beta_normal_trace"] = beta.normal_trace_norm()
    return HodgeSplit(alpha, beta, exact_part, coexact_part, harmonic,
                      diagnostics)


def gaffney_ratio(omega, trace_tol=1e-12):
    """||omega||_W12 / (||d omega|| + ||codiff omega||) for omega_N = 0."""
    if not 1 <= omega.degree <= omega.grid.m - 1:
        raise StructureError("gaffney_ratio needs 1 <= k <= m-1")
    scale = max(omega.l2_norm(), 1e-300)
    if omega.normal_trace_norm() > trace_tol * scale:
        raise StructureError("gaffney_ratio requires a vanishing normal trace")
    denom = omega.d().l2_norm() + omega.codiff().l2_norm()
    if denom <= 1e-14 * scale:
        raise StructureError(
            "d and codiff both vanish on a nonzero form: harmonic-form "
            "violation (the cube should have none in this degree range)")
    return omega.w12_norm() / denom


def harmonic_normal_op(grid, k, algebra):
    """Self-adjoint operator whose kernel is {d w = 0, codiff w = 0, w_N = 0}.

    For k = 0 the codiff and trace constraints are vacuous.
    """
    template = GridCochain(grid, k, algebra)

    def op(flat):
        w = template.from_flat(flat)
        out = w.d().codiff()
        if k >= 1:
            out = out + w.codiff().d()
            out = out + w.normal_part()
        return out.flatten()

    return op, template.flatten().size


def harmonic_dimension(grid, k, algebra, probes=5, seed=0, tol=1e-7):
    """dim { w : d w = 0, codiff w = 0, w_N = 0 } by kernel probing.

    With the weak (adjoint) codifferential the k = 0 space is the span of
    the constants (dimension 1); for 1 <= k <= m the expected value on the
    cube is 0.
    """
    op, size = harmonic_normal_op(grid, k, algebra)
    return nullspace_dimension(op, (size,), probes=probes, seed=seed, tol=tol)


def measure_gaffney_constant(grid, k, algebra, seeds=5, tol=1e-10):
    """Empirical Gaffney constant: max ratio over random coexact fields.

    Uses the codiff(beta)-part of random fields (beta_N = 0), which have
    vanishing normal trace by the discrete trace lemma.
    """
    worst = 0.0
    for s in range(seeds):
        rng = np.random.default_rng(1000 + s)
        raw = GridCochain(grid, k, algebra)
        raw = raw.from_flat(rng.standard_normal(raw.flatten().size))
        split = hodge_decompose(raw, tol=tol)
        omega = split.coexact_part
        if omega.l2_norm() < 1e-12 * max(raw.l2_norm(), 1e-300):
            continue
        worst = max(worst, gaffney_ratio(omega))
    return worst
