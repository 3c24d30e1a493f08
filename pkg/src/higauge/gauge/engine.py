"""2- and 3-connections, gauge elements, gauge actions and curvatures.

Generic over the two form backends: everything is phrased through the
shared form interface (d, apply_map, apply_operator) plus a small wedge
dispatcher.  Matrix-product wedges of odd forms with themselves are
realized through the bracket, V ^ V = [V ^ V] / 2, which is an exact
matrix identity and keeps every field algebra-valued.

Composition convention: ``compose(first, second)`` is the gauge whose
action equals applying ``first`` and then ``second``.  The chi
coefficient is alpha(g'^{-1})(chi) + chi' (and the lambda coefficient
carries a Peiffer correction); both are pinned by the defining contract
"sequential equals composed", which the jet suite verifies to machine
precision rather than trusting any printed formula.
"""

from __future__ import annotations

import numpy as np

from higauge.errors import ArgumentError, DataError
from higauge.forms.grid import GridCochain
from higauge.forms.grid import wedge as grid_wedge
from higauge.forms.jets import JetForm
from higauge.forms.jets import wedge_action as jet_wedge


def form_norm(form):
    """Backend residual norm: sup over trusted jet coefficients, L2 on grids."""
    if isinstance(form, JetForm):
        return form.max_abs(form.ctx.order - 2)
    return form.l2_norm()


def wedge_with(pairing, va, vb, out_algebra):
    if isinstance(va, JetForm):
        return jet_wedge(pairing, va, vb, out_algebra)
    return grid_wedge(va, vb, pairing, out_algebra)


def bracket_wedge(va, vb):
    return wedge_with(va.algebra.structure, va, vb, va.algebra)


def maurer_cartan_form(group_field):
    """g^{-1} dg with a uniform (form, expansion_residual) signature."""
    result = group_field.maurer_cartan()
    if isinstance(result, tuple):
        return result
    return result, 0.0


class TwoConnection:
    """(A, B) with the fake-curvature residual ||F_A - t(B)|| as invariant."""

    def __init__(self, module, a, b, residual_cap=None):
        if a.algebra is not module.g or b.algebra is not module.h:
            raise ArgumentError("connection forms must be (g-valued, h-valued)")
        if a.degree != 1 or b.degree != 2:
            raise ArgumentError("a 2-connection needs a 1-form and a 2-form")
        self.module = module
        self.a = a
        self.b = b
        f = curvature_f(a)
        defect = f - b.apply_map(module.t)
        self.fake_curvature_residual = form_norm(defect)
        self.curvature_scale = max(form_norm(f), form_norm(b), 1e-30)
        if residual_cap is not None and self.fake_curvature_residual > residual_cap:
            raise ArgumentError(
                f"fake-curvature residual {self.fake_curvature_residual:.3e} "
                f"exceeds the cap {residual_cap:.3e}")


class ThreeConnection:
    """(A, B, C) with both fake-curvature residuals as invariants."""

    def __init__(self, module, a, b, c, residual_cap=None):
        if a.algebra is not module.g or b.algebra is not module.h \
                or c.algebra is not module.l:
            raise ArgumentError("connection forms must be (g, h, l)-valued")
        if (a.degree, b.degree, c.degree) != (1, 2, 3):
            raise ArgumentError("a 3-connection needs degrees (1, 2, 3)")
        self.module = module
        self.a = a
        self.b = b
        self.c = c
        f = curvature_f(a)
        self.fc1_residual = form_norm(f - b.apply_map(module.t))
        z = curvature_z(module, a, b)
        self.fc2_residual = form_norm(z - c.apply_map(module.tau))
        if residual_cap is not None:
            worst = max(self.fc1_residual, self.fc2_residual)
            if worst > residual_cap:
                raise ArgumentError(
                    f"fake-curvature residual {worst:.3e} exceeds the cap "
                    f"{residual_cap:.3e}")


class TwoGauge:
    """(g, chi): a group field and an h-valued 1-form."""

    def __init__(self, module, g, chi):
        if chi.algebra is not module.h or chi.degree != 1:
            raise ArgumentError("chi must be an h-valued 1-form")
        self.module = module
        self.g = g
        self.chi = chi


class ThreeGauge(TwoGauge):
    """(g, chi, lambda): adds an l-valued 2-form."""

    def __init__(self, module, g, chi, lam):
        super().__init__(module, g, chi)
        if lam.algebra is not module.l or lam.degree != 2:
            raise ArgumentError("lambda must be an l-valued 2-form")
        self.lam = lam


# -- curvatures ----------------------------------------------------------------

def curvature_f(a):
    """F_A = dA + A ^ A (the matrix wedge equals [A ^ A]/2 on 1-forms)."""
    return a.d() + 0.5 * bracket_wedge(a, a)


def curvature_z(module, a, b):
    """Z_{A,B} = dB + alpha(A) ^ B."""
    return b.d() + wedge_with(module.alpha.tensor, a, b, module.h)


def curvature2(conn):
    """(F_A, Z_{A,B}) for a TwoConnection."""
    return curvature_f(conn.a), curvature_z(conn.module, conn.a, conn.b)


def curvature_y(module, a, b, c):
    """Y_{A,B,C} = dC + beta(A) ^ C + {B ^ B}."""
    return (c.d() + wedge_with(module.beta.tensor, a, c, module.l)
            + wedge_with(module.peiffer, b, b, module.l))


def curvature3(conn):
    return curvature_y(conn.module, conn.a, conn.b, conn.c)


# -- gauge actions ---------------------------------------------------------------

def _transform_a(module, gauge, a):
    g_inv = gauge.g.inv()
    mc, mc_residual = maurer_cartan_form(gauge.g)
    a_conj = g_inv.act("ad", a)
    a_new = a_conj + mc - gauge.chi.apply_map(module.t)
    return a_new, g_inv, mc_residual


def apply_gauge2(gauge, conn, residual_cap=None):
    """(g, chi) * (A, B) by the transformation law of 2-gauge theory."""
    module = conn.module
    chi = gauge.chi
    a_new, g_inv, _ = _transform_a(module, gauge, conn.a)
    b_new = (g_inv.act("alpha", conn.b)
             - wedge_with(module.alpha.tensor, a_new, chi, module.h)
             - chi.d()
             - 0.5 * bracket_wedge(chi, chi))
    return TwoConnection(module, a_new, b_new, residual_cap=residual_cap)


def apply_gauge3(gauge, conn, residual_cap=None):
    """(g, chi, lambda) * (A, B, C)."""
    module = conn.module
    chi, lam = gauge.chi, gauge.lam
    a_new, g_inv, _ = _transform_a(module, gauge, conn.a)
    b_conj = g_inv.act("alpha", conn.b)
    b_new = (b_conj
             - wedge_with(module.alpha.tensor, a_new, chi, module.h)
             - chi.d()
             - 0.5 * bracket_wedge(chi, chi)
             - lam.apply_map(module.tau))
    c_new = (g_inv.act("beta", conn.c)
             - lam.d()
             - wedge_with(module.beta.tensor, a_new, lam, module.l)
             + wedge_with(module.peiffer, b_new, chi, module.l)
             + wedge_with(module.peiffer, chi, b_conj, module.l)
             + wedge_with(module.peiffer, lam.apply_map(module.tau), chi,
                          module.l))
    return ThreeConnection(module, a_new, b_new, c_new,
                           residual_cap=residual_cap)


def compose_gauge2(first, second):
    """Gauge acting like ``first`` followed by ``second``."""
    if first.module is not second.module:
        raise ArgumentError("gauges belong to different modules")
    module = first.module
    g2_inv = second.g.inv()
    chi = g2_inv.act("alpha", first.chi) + second.chi
    return TwoGauge(module, first.g @ second.g, chi)


def compose_gauge3(first, second):
    """3-gauge composition; the lambda part carries a Peiffer correction."""
    if first.module is not second.module:
        raise ArgumentError("gauges belong to different modules")
    module = first.module
    g2_inv = second.g.inv()
    chi1_t = g2_inv.act("alpha", first.chi)
    chi = chi1_t + second.chi
    lam = (g2_inv.act("beta", first.lam) + second.lam
           - wedge_with(module.peiffer, second.chi, chi1_t, module.l))
    return ThreeGauge(module, first.g @ second.g, chi, lam)


# -- functionals ------------------------------------------------------------------

def ym2(conn):
    """Integral of |Z|^2 over the cube (grid backend)."""
    z = curvature_z(conn.module, conn.a, conn.b)
    if not isinstance(z, GridCochain):
        raise ArgumentError("ym2 needs the grid backend (integrals)")
    return z.inner(z)


def ym3(conn):
    y = curvature_y(conn.module, conn.a, conn.b, conn.c)
    if not isinstance(y, GridCochain):
        raise ArgumentError("ym3 needs the grid backend (integrals)")
    return y.inner(y)


# -- special actions (checked against the general formula) -------------------------

def apply_special_g(module, group_field, conn3):
    """(g, 0, 0): conjugate every layer."""
    g_inv = group_field.inv()
    mc, _ = maurer_cartan_form(group_field)
    a_new = g_inv.act("ad", conn3.a) + mc
    return ThreeConnection(module, a_new, g_inv.act("alpha", conn3.b),
                           g_inv.act("beta", conn3.c))


def apply_special_chi(module, chi, conn3):
    """(e, chi, 0): shift A by -t(chi) with the induced B and C updates."""
    a_new = conn3.a - chi.apply_map(module.t)
    b_new = (conn3.b - wedge_with(module.alpha.tensor, a_new, chi, module.h)
             - chi.d() - 0.5 * bracket_wedge(chi, chi))
    c_new = (conn3.c + wedge_with(module.peiffer, b_new, chi, module.l)
             + wedge_with(module.peiffer, chi, conn3.b, module.l))
    return ThreeConnection(module, a_new, b_new, c_new)


def apply_special_lam(module, lam, conn3):
    """(e, 0, lambda): shift B by -tau(lambda), C by the covariant derivative."""
    b_new = conn3.b - lam.apply_map(module.tau)
    c_new = (conn3.c - lam.d()
             - wedge_with(module.beta.tensor, conn3.a, lam, module.l))
    return ThreeConnection(module, conn3.a, b_new, c_new)
