"""Differential crossed modules and differential 2-crossed modules.

A crossed module bundles Lie algebras g, h with a map t: h -> g and an
action alpha of g on h; the 2-crossed variant adds l, tau: l -> h, an
action beta of g on l and a bilinear Peiffer lifting {.,.}: h x h -> l.
``validate`` evaluates every axiom as a max residual: the differential
relations exactly on basis tuples, the group-level relations on group
elements generated as exponentials of random algebra elements.

Mixed liftings with one group argument, as they appear in the relation
beta(t(h))(x) = x - {tau(x), h} - {h, tau(x)}, are realized by pulling the
group element h = exp(v) to its generator v and contracting the bilinear
lifting tensor against the alpha(t(h))-twisted algebra argument:

    {h, xi} := {v, alpha(t(h))(xi)},     {xi, h} := {alpha(t(h))(xi), v}.

This realization is validated (not assumed) through the mr3 residual.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from higauge.algebra import lie
from higauge.algebra.lie import LieAction, LieAlgebra, LinearLieMap
from higauge.errors import ArgumentError
from higauge.numutil import batched_expm

AXIOM_TOL = 1e-10


class ValidationReport:
    """Per-axiom max residuals for a (2-)crossed module."""

    def __init__(self, module_name, residuals, tol=AXIOM_TOL):
        self.module_name = module_name
        self.residuals = dict(residuals)
        self.tol = tol

    @property
    def valid(self):
        return all(r <= self.tol for r in self.residuals.values())

    @property
    def max_residual(self):
        return max(self.residuals.values()) if self.residuals else 0.0

    def to_dict(self):
        return {
            "module": self.module_name,
            "tolerance": self.tol,
            "valid": self.valid,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }

    def table(self):
        lines = [f"module {self.module_name}  (tolerance {self.tol:.1e})"]
        width = max(len(k) for k in self.residuals) if self.residuals else 8
        for key in sorted(self.residuals):
            val = self.residuals[key]
            status = "ok" if val <= self.tol else "FAIL"
            lines.append(f"  {key:<{width}}  {val:12.3e}  {status}")
        lines.append(f"  => {'valid' if self.valid else 'INVALID'}")
        return "\n".join(lines)


class GroupElement:
    """A G-element carried in every representation a module needs.

    Stores the matrix realization together with the operators implementing
    Ad_g on g-coefficients, alpha(g) on h-coefficients and (for 2-crossed
    modules) beta(g) on l-coefficients.  Closed under products and
    inverses, so elements built from path-ordered exponentials keep exact
    track of their action on every algebra involved.
    """

    __slots__ = ("module", "mat", "ad", "oph", "opl")

    def __init__(self, module, mat, ad, oph, opl=None):
        self.module = module
        self.mat = mat
        self.ad = ad
        self.oph = oph
        self.opl = opl

    @classmethod
    def exp(cls, module, x):
        x = module.g.check_vector(x)
        mat = batched_expm(module.g.to_matrix(x))
        ad = batched_expm(module.g.ad_operator(x))
        oph = batched_expm(module.alpha.operator(x))
        opl = None
        if getattr(module, "beta", None) is not None:
            opl = batched_expm(module.beta.operator(x))
        return cls(module, mat, ad, oph, opl)

    @classmethod
    def identity(cls, module):
        opl = None
        if getattr(module, "beta", None) is not None:
            opl = np.eye(module.l.dim)
        return cls(module, np.eye(module.g.mat_dim), np.eye(module.g.dim),
                   np.eye(module.h.dim), opl)

    def __matmul__(self, other):
        if other.module is not self.module:
            raise ArgumentError("group elements belong to different modules")
        opl = None
        if self.opl is not None:
            opl = self.opl @ other.opl
        return GroupElement(self.module, self.mat @ other.mat,
                            self.ad @ other.ad, self.oph @ other.oph, opl)

    def inv(self):
        opl = None if self.opl is None else np.linalg.inv(self.opl)
        return GroupElement(self.module, np.linalg.inv(self.mat),
                            np.linalg.inv(self.ad), np.linalg.inv(self.oph), opl)

    def act_g(self, x):
        """Ad_g applied to g-coefficient vectors."""
        return np.einsum("ij,...j->...i", self.ad, x)

    def act_h(self, v):
        """alpha(g) applied to h-coefficient vectors."""
        return np.einsum("ij,...j->...i", self.oph, v)

    def act_l(self, w):
        """beta(g) applied to l-coefficient vectors."""
        return np.einsum("ij,...j->...i", self.opl, w)


class CrossedModule:
    """Differential crossed module (g, h, t, alpha) with group realizations."""

    kind = "crossed"

    def __init__(self, name, g, h, t, alpha):
        self.name = name
        self.g = g
        self.h = h
        self.t = t
        self.alpha = alpha
        self.beta = None
        if t.source is not h or t.target is not g:
            raise ArgumentError(f"{name}: t must map h -> g")
        if alpha.actor is not g or alpha.acted is not h:
            raise ArgumentError(f"{name}: alpha must be an action of g on h")

    # -- axiom residuals ------------------------------------------------------

    def _dcm1_residual(self):
        # t(alpha(x)(xi)) = [x, t(xi)] on basis pairs
        lhs = np.einsum("aij,bj->aib", self.alpha.tensor, self.t.matrix)
        rhs = np.einsum("ci,acb->aib", self.t.matrix, self.g.structure)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _dcm2_residual(self):
        # alpha(t(xi))(nu) = [xi, nu] on basis pairs
        lhs = np.einsum("ai,ajk->ijk", self.t.matrix, self.alpha.tensor)
        return float(np.abs(lhs - self.h.structure).max()) if lhs.size else 0.0

    def _sample_group(self, rng, n, algebra):
        return rng.uniform(-1.0, 1.0, size=(n, algebra.dim))

    def _mr1_residual(self, xs):
        # t(alpha(g)(xi)) = g t(xi) g^{-1}: operator identity T A(g) = Ad_g T
        oph = batched_expm(np.einsum("na,aij->nji", xs, self.alpha.tensor))
        adg = batched_expm(np.einsum("na,aij->nji", xs, self.g.structure))
        lhs = np.einsum("bi,nij->nbj", self.t.matrix, oph)
        rhs = np.einsum("nbc,cj->nbj", adg, self.t.matrix)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _mr2_residual(self, xis):
        # alpha(t(h))(xi) = h xi h^{-1} for h = exp(xi0)
        t_xi = np.einsum("ai,ni->na", self.t.matrix, xis)
        lhs_ops = batched_expm(np.einsum("na,aij->nji", t_xi, self.alpha.tensor))
        h_mats = batched_expm(self.h.to_matrix(xis))
        h_inv = np.linalg.inv(h_mats)
        conj = np.einsum("nab,ibc,ncd->niad", h_mats, self.h.basis, h_inv)
        coeffs = np.einsum(
            "kab,niab->nik",
            self.h._expand.reshape(self.h.dim, self.h.mat_dim, self.h.mat_dim),
            conj)
        recon = np.einsum("nik,kab->niab", coeffs, self.h.basis)
        span_resid = float(np.abs(recon - conj).max()) if conj.size else 0.0
        rhs_ops = coeffs.transpose(0, 2, 1)  # operator columns act on xi
        resid = float(np.abs(lhs_ops - rhs_ops).max()) if lhs_ops.size else 0.0
        return max(resid, span_resid)

    def _cm1_residual(self, xs, xis):
        # t(alpha(g)(h)) = g t(h) g^{-1} at group level, h = exp(xi)
        oph = batched_expm(np.einsum("na,aij->nji", xs, self.alpha.tensor))
        g_mats = batched_expm(self.g.to_matrix(xs))
        g_inv = np.linalg.inv(g_mats)
        acted = np.einsum("nij,nj->ni", oph, xis)
        lhs = batched_expm(self.g.to_matrix(np.einsum("ai,ni->na", self.t.matrix, acted)))
        th = batched_expm(self.g.to_matrix(np.einsum("ai,ni->na", self.t.matrix, xis)))
        rhs = np.einsum("nab,nbc,ncd->nad", g_mats, th, g_inv)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _cm2_residual(self, xi1s, xi2s):
        # alpha(t(h1))(h2) = h1 h2 h1^{-1} at group level
        t_xi1 = np.einsum("ai,ni->na", self.t.matrix, xi1s)
        ops = batched_expm(np.einsum("na,aij->nji", t_xi1, self.alpha.tensor))
        acted = np.einsum("nij,nj->ni", ops, xi2s)
        lhs = batched_expm(self.h.to_matrix(acted))
        h1 = batched_expm(self.h.to_matrix(xi1s))
        h2 = batched_expm(self.h.to_matrix(xi2s))
        rhs = np.einsum("nab,nbc,ncd->nad", h1, h2, np.linalg.inv(h1))
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _kernel_abelian_residual(self, mapping, algebra):
        kb = mapping.kernel_basis()
        if kb.size == 0:
            return 0.0
        brackets = np.einsum("ri,sj,ijk->rsk", kb, kb, algebra.structure)
        return float(np.abs(brackets).max())

    def _norm_invariance_residual(self, xs, action, algebra):
        ops = batched_expm(np.einsum("na,aij->nji", xs, action.tensor))
        gram = np.einsum("nij,ik,nkl->njl", ops, algebra.ip, ops)
        return float(np.abs(gram - algebra.ip).max()) if gram.size else 0.0

    def validate(self, n_samples=100, seed=0, tol=AXIOM_TOL):
        rng = np.random.default_rng(seed)
        xs = self._sample_group(rng, n_samples, self.g)
        xis = self._sample_group(rng, n_samples, self.h)
        residuals = {
            "t_homomorphism": self.t.hom_residual,
            "alpha_derivation": self.alpha.derivation_residual,
            "alpha_representation": self.alpha.representation_residual,
            "dcm1": self._dcm1_residual(),
            "dcm2": self._dcm2_residual(),
            "mr1": self._mr1_residual(xs),
            "mr2": self._mr2_residual(xis),
            "cm1": self._cm1_residual(xs, xis),
            "cm2": self._cm2_residual(xis, self._sample_group(rng, n_samples, self.h)),
            "ker_t_abelian": self._kernel_abelian_residual(self.t, self.h),
            "alpha_norm_invariance": self._norm_invariance_residual(
                xs, self.alpha, self.h),
        }
        return ValidationReport(self.name, residuals, tol=tol)

    # -- serialization ---------------------------------------------------------

    def to_dict(self):
        return {
            "kind": self.kind,
            "name": self.name,
            "algebras": {"g": self.g.to_dict(), "h": self.h.to_dict()},
            "t_hat": self.t.matrix.tolist(),
            "alpha_hat": self.alpha.tensor.tolist(),
        }

    @classmethod
    def from_dict(cls, payload):
        g = LieAlgebra.from_dict(payload["algebras"]["g"])
        h = LieAlgebra.from_dict(payload["algebras"]["h"])
        t = LinearLieMap(h, g, payload["t_hat"])
        alpha = LieAction(g, h, payload["alpha_hat"])
        return cls(payload.get("name", "module"), g, h, t, alpha)

    def content_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class TwoCrossedModule(CrossedModule):
    """Differential 2-crossed module (g, h, l, t, tau, alpha, beta, {.,.})."""

    kind = "two_crossed"

    def __init__(self, name, g, h, l, t, tau, alpha, beta, peiffer):
        super().__init__(name, g, h, t, alpha)
        self.l = l
        self.tau = tau
        self.beta = beta
        self.peiffer = np.array(peiffer, dtype=float)
        if tau.source is not l or tau.target is not h:
            raise ArgumentError(f"{name}: tau must map l -> h")
        if beta.actor is not g or beta.acted is not l:
            raise ArgumentError(f"{name}: beta must be an action of g on l")
        if self.peiffer.shape != (h.dim, h.dim, l.dim):
            raise ArgumentError(
                f"{name}: peiffer tensor must have shape "
                f"({h.dim}, {h.dim}, {l.dim}), got {self.peiffer.shape}")

    def lift(self, u, v):
        """The Peiffer lifting {u, v} on h-coefficient vectors."""
        return np.einsum("...i,...j,ijk->...k", self.h.check_vector(u),
                         self.h.check_vector(v), self.peiffer)

    # -- axiom residuals -------------------------------------------------------

    def _complex_residual(self):
        comp = self.t.matrix @ self.tau.matrix
        return float(np.abs(comp).max()) if comp.size else 0.0

    def _tau_equivariance_residual(self):
        # tau(beta(a)(x)) = alpha(a)(tau(x)) on basis pairs
        lhs = np.einsum("axy,jy->axj", self.beta.tensor, self.tau.matrix)
        rhs = np.einsum("jx,ajk->axk", self.tau.matrix, self.alpha.tensor)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _p1_residual(self):
        # tau({u,v}) = [u,v] - alpha(t(u))(v)
        lhs = np.einsum("ijk,mk->ijm", self.peiffer, self.tau.matrix)
        act = np.einsum("ai,ajm->ijm", self.t.matrix, self.alpha.tensor)
        rhs = self.h.structure - act
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _p2_residual(self):
        # [x,y]_l = {tau(x), tau(y)}
        lhs = self.l.structure
        rhs = np.einsum("ix,jy,xyk->ijk", self.tau.matrix.T, self.tau.matrix.T,
                        self.peiffer)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _p3_residual(self):
        # {[u,v],w} = beta(t(u)){v,w} + {u,[v,w]} - beta(t(v)){u,w} - {v,[u,w]}
        # (the action on the lifting values lives on l, hence beta)
        p, ch = self.peiffer, self.h.structure
        bt = np.einsum("ai,axy->ixy", self.t.matrix, self.beta.tensor)
        lhs = np.einsum("ijm,mwk->ijwk", ch, p)
        rhs = (np.einsum("ixk,jwx->ijwk", bt, p)
               + np.einsum("jwm,imk->ijwk", ch, p)
               - np.einsum("jxk,iwx->ijwk", bt, p)
               - np.einsum("iwm,jmk->ijwk", ch, p))
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _p4_residual(self):
        # {u,[v,w]} = {tau({u,v}),w} - {tau({u,w}),v}
        p, ch = self.peiffer, self.h.structure
        tau_p = np.einsum("ijx,mx->ijm", p, self.tau.matrix)
        lhs = np.einsum("jwm,imk->ijwk", ch, p)
        rhs = np.einsum("ijm,mwk->ijwk", tau_p, p) \
            - np.einsum("iwm,mjk->ijwk", tau_p, p)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _p5_residual(self):
        # {tau(x),u} + {u,tau(x)} = -beta(t(u))(x)
        p = self.peiffer
        lhs = np.einsum("ix,iuk->xuk", self.tau.matrix, p) \
            + np.einsum("ix,uik->xuk", self.tau.matrix, p)
        rhs = -np.einsum("au,axk->xuk", self.t.matrix, self.beta.tensor)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _lift_equivariance_residual(self):
        # beta(a)({u,v}) = {alpha(a)u, v} + {u, alpha(a)v}
        p = self.peiffer
        lhs = np.einsum("ijx,axk->aijk", p, self.beta.tensor)
        rhs = np.einsum("aim,mjk->aijk", self.alpha.tensor, p) \
            + np.einsum("ajm,imk->aijk", self.alpha.tensor, p)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def _mr3_residual(self, vs):
        # beta(t(h))(x) = x - {tau(x), h} - {h, tau(x)} for h = exp(v),
        # with the documented mixed-lifting realization.
        if self.l.dim == 0 or self.h.dim == 0:
            return 0.0
        t_v = np.einsum("ai,ni->na", self.t.matrix, vs)
        lhs = batched_expm(np.einsum("na,axy->nyx", t_v, self.beta.tensor))
        alpha_th = batched_expm(np.einsum("na,aij->nji", t_v, self.alpha.tensor))
        twisted_tau = np.einsum("nij,jx->nix", alpha_th, self.tau.matrix)
        m1 = np.einsum("nix,nj,ijk->nkx", twisted_tau, vs, self.peiffer)
        m2 = np.einsum("ni,njx,ijk->nkx", vs, twisted_tau, self.peiffer)
        rhs = np.eye(self.l.dim)[None, :, :] - m1 - m2
        return float(np.abs(lhs - rhs).max())

    def _tau_group_equivariance_residual(self, xs):
        # tau(beta(g)(x)) = alpha(g)(tau(x)) at group level
        opl = batched_expm(np.einsum("na,axy->nyx", xs, self.beta.tensor))
        oph = batched_expm(np.einsum("na,aij->nji", xs, self.alpha.tensor))
        lhs = np.einsum("jx,nxy->njy", self.tau.matrix, opl)
        rhs = np.einsum("njk,ky->njy", oph, self.tau.matrix)
        return float(np.abs(lhs - rhs).max()) if lhs.size else 0.0

    def validate(self, n_samples=100, seed=0, tol=AXIOM_TOL):
        rng = np.random.default_rng(seed)
        xs = self._sample_group(rng, n_samples, self.g)
        vs = self._sample_group(rng, n_samples, self.h)
        residuals = {
            "t_homomorphism": self.t.hom_residual,
            "tau_homomorphism": self.tau.hom_residual,
            "alpha_derivation": self.alpha.derivation_residual,
            "alpha_representation": self.alpha.representation_residual,
            "beta_derivation": self.beta.derivation_residual,
            "beta_representation": self.beta.representation_residual,
            "complex_t_tau": self._complex_residual(),
            "t_equivariance_dcm1": self._dcm1_residual(),
            "tau_equivariance": self._tau_equivariance_residual(),
            "tau_group_equivariance": self._tau_group_equivariance_residual(xs),
            "p1": self._p1_residual(),
            "p2": self._p2_residual(),
            "p3": self._p3_residual(),
            "p4": self._p4_residual(),
            "p5": self._p5_residual(),
            "mr3": self._mr3_residual(vs),
            "lift_equivariance": self._lift_equivariance_residual(),
            "cm1": self._cm1_residual(xs, vs),
            "mr1": self._mr1_residual(xs),
            "ker_tau_abelian": self._kernel_abelian_residual(self.tau, self.l),
            "alpha_norm_invariance": self._norm_invariance_residual(
                xs, self.alpha, self.h),
            "beta_norm_invariance": self._norm_invariance_residual(
                xs, self.beta, self.l),
        }
        return ValidationReport(self.name, residuals, tol=tol)

    def to_dict(self):
        payload = super().to_dict()
        payload["kind"] = self.kind
        payload["algebras"]["l"] = self.l.to_dict()
        payload["tau_hat"] = self.tau.matrix.tolist()
        payload["beta_hat"] = self.beta.tensor.tolist()
        payload["peiffer"] = self.peiffer.tolist()
        return payload

    @classmethod
    def from_dict(cls, payload):
        g = LieAlgebra.from_dict(payload["algebras"]["g"])
        h = LieAlgebra.from_dict(payload["algebras"]["h"])
        l = LieAlgebra.from_dict(payload["algebras"]["l"])
        t = LinearLieMap(h, g, payload["t_hat"])
        tau = LinearLieMap(l, h, payload["tau_hat"])
        alpha = LieAction(g, h, payload["alpha_hat"])
        beta = LieAction(g, l, payload["beta_hat"])
        return cls(payload.get("name", "module"), g, h, l, t, tau, alpha, beta,
                   payload["peiffer"])


def load_module(payload):
    """Instantiate a module from a parsed JSON description."""
    kind = payload.get("kind", "crossed")
    if kind == "two_crossed":
        return TwoCrossedModule.from_dict(payload)
    if kind == "crossed":
        return CrossedModule.from_dict(payload)
    raise ArgumentError(f"unknown module kind {kind!r}")
