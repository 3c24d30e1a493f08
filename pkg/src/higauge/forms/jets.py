"""Exact local calculus with truncated multivariate Taylor jets.

A jet stores the coefficients of a polynomial in m variables truncated at
total degree K.  Products, exterior derivatives, Hodge stars and group
exponentials are all exact on the retained coefficients, which is what
lets the identity suite certify algebraic laws to machine precision.

Identities that consume derivatives or products are only meaningful on
coefficients of total degree <= K - 2 (one degree lost to d, one to the
product); residual helpers take a degree cutoff for exactly this reason.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from higauge.errors import ArgumentError, StructureError


def _multi_indices(m, order):
    """All exponent tuples with total degree <= order, by (degree, lex)."""
    by_degree = []
    for deg in range(order + 1):
        level = []

        def rec_exact(prefix, remaining, left):
            if remaining == 1:
                level.append(tuple(prefix + [left]))
                return
            for e in range(left + 1):
                rec_exact(prefix + [e], remaining - 1, left - e)

        rec_exact([], m, deg)
        level.sort()
        by_degree.extend(level)
    return by_degree


def _perm_parity(seq):
    """Parity sign of the permutation sorting ``seq``."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class JetContext:
    """Shared tables for jets in m variables truncated at order K."""

    def __init__(self, m, order):
        if not 2 <= m <= 8:
            raise ArgumentError(f"jet dimension must be in 2..8, got {m}")
        if order < 3:
            raise ArgumentError(f"jet order must be >= 3, got {order}")
        self.m = m
        self.order = order
        self.indices = _multi_indices(m, order)
        self.n_coeffs = len(self.indices)
        self.index_of = {mu: i for i, mu in enumerate(self.indices)}
        self.degrees = np.array([sum(mu) for mu in self.indices])
        # multiplication table sorted by output coefficient
        table = []
        for ia, mu in enumerate(self.indices):
            for ib, nu in enumerate(self.indices):
                if sum(mu) + sum(nu) <= order:
                    sigma = tuple(a + b for a, b in zip(mu, nu))
                    table.append((self.index_of[sigma], ia, ib))
        table.sort()
        arr = np.array(table, dtype=np.int64)
        self._mul_out = arr[:, 0]
        self._mul_a = arr[:, 1]
        self._mul_b = arr[:, 2]
        starts = np.searchsorted(self._mul_out, np.arange(self.n_coeffs))
        self._mul_starts = starts
        # dense derivative operators: (d_i f)[mu - e_i] = mu_i f[mu]
        self.deriv_ops = np.zeros((m, self.n_coeffs, self.n_coeffs))
        for i in range(m):
            for src, mu in enumerate(self.indices):
                if mu[i] >= 1:
                    nu = tuple(e - 1 if j == i else e for j, e in enumerate(mu))
                    self.deriv_ops[i, self.index_of[nu], src] = mu[i]
        # combos per form degree
        self.combos = [list(combinations(range(m), k)) for k in range(m + 1)]
        self.combo_index = [
            {c: i for i, c in enumerate(self.combos[k])} for k in range(m + 1)
        ]
        self.star_tables = [self._star_table(k) for k in range(m + 1)]

    def _star_table(self, k):
        idx, signs = [], []
        for combo in self.combos[k]:
            comp = tuple(i for i in range(self.m) if i not in combo)
            idx.append(self.combo_index[self.m - k][comp])
            signs.append(_perm_parity(combo + comp))
        return np.array(idx, dtype=np.int64), np.array(signs, dtype=float)

    def mul(self, a, b):
        """Truncated product of jet coefficient arrays (last axis = coeffs)."""
        prod = a[..., self._mul_a] * b[..., self._mul_b]
        return np.add.reduceat(prod, self._mul_starts, axis=-1)

    def deriv(self, a, axis):
        return np.einsum("dc,...c->...d", self.deriv_ops[axis], a)

    def degree_mask(self, max_degree):
        return self.degrees <= max_degree

    def monomial(self, mu, value=1.0):
        coeffs = np.zeros(self.n_coeffs)
        coeffs[self.index_of[tuple(mu)]] = value
        return coeffs

    def random_scalar(self, rng, amplitude=1.0, decay=1.0):
        """Random jet with degree-damped coefficients."""
        coeffs = rng.standard_normal(self.n_coeffs) * amplitude
        return coeffs / (decay ** self.degrees if decay != 1.0 else 1.0)

    def __repr__(self):
        return f"JetContext(m={self.m}, order={self.order})"


@lru_cache(maxsize=32)
def jet_context(m, order):
    return JetContext(m, order)


# -- jet matrices (entries are jets) ------------------------------------------

def jet_matmul(ctx, a, b):
    """Product of jet matrices of shapes (r, s, nc) and (s, t, nc)."""
    prod = np.einsum("rsp,stp->rtp", a[..., ctx._mul_a], b[..., ctx._mul_b])
    return np.add.reduceat(prod, ctx._mul_starts, axis=-1)


def jet_matvec(ctx, a, v):
    """Apply a jet matrix (r, s, nc) to jet vectors (..., s, nc)."""
    prod = np.einsum("rsp,...sp->...rp", a[..., ctx._mul_a], v[..., ctx._mul_b])
    return np.add.reduceat(prod, ctx._mul_starts, axis=-1)


def jet_eye(ctx, dim):
    out = np.zeros((dim, dim, ctx.n_coeffs))
    out[np.arange(dim), np.arange(dim), 0] = 1.0
    return out


def jet_expm(ctx, mat):
    """Exponential of a jet matrix by scaling-and-squaring Taylor series."""
    dim = mat.shape[0]
    norm = float(np.abs(mat).sum(axis=(1, 2)).max()) if mat.size else 0.0
    s = max(0, int(np.ceil(np.log2(norm / 0.5))) if norm > 0.5 else 0)
    a = mat / (2.0 ** s)
    result = jet_eye(ctx, dim)
    term = jet_eye(ctx, dim)
    for n in range(1, 40):
        term = jet_matmul(ctx, term, a) / n
        result = result + term
        if float(np.abs(term).max()) < 1e-18:
            break
    for _ in range(s):
        result = jet_matmul(ctx, result, result)
    return result


def jet_matinv(ctx, mat):
    """Inverse of a jet matrix with invertible constant part."""
    const_inv = np.linalg.inv(mat[..., 0])
    # mat = C (I + N) with N nilpotent in the jet grading
    n_part = jet_matmul(ctx, _const_jet_matrix(ctx, const_inv), mat)
    n_part[..., 0] -= np.eye(mat.shape[0])
    out = jet_eye(ctx, mat.shape[0])
    term = jet_eye(ctx, mat.shape[0])
    for _ in range(ctx.order):
        term = -jet_matmul(ctx, term, n_part)
        out = out + term
    return jet_matmul(ctx, out, _const_jet_matrix(ctx, const_inv))


def _const_jet_matrix(ctx, mat):
    out = np.zeros(mat.shape + (ctx.n_coeffs,))
    out[..., 0] = mat
    return out


class JetForm:
    """A Lie-algebra-valued differential form with jet coefficients.

    ``values`` has shape (n_combos(k), algebra.dim, n_coeffs): one jet per
    (ordered k-index, algebra basis element).
    """

    def __init__(self, ctx, degree, algebra, values=None):
        self.ctx = ctx
        self.degree = int(degree)
        self.algebra = algebra
        n_combos = len(ctx.combos[self.degree])
        shape = (n_combos, algebra.dim, ctx.n_coeffs)
        if values is None:
            self.values = np.zeros(shape)
        else:
            self.values = np.asarray(values, dtype=float)
            if self.values.shape != shape:
                raise ArgumentError(
                    f"jet form values must have shape {shape}, "
                    f"got {self.values.shape}")

    @classmethod
    def zero(cls, ctx, degree, algebra):
        return cls(ctx, degree, algebra)

    @classmethod
    def random(cls, ctx, degree, algebra, rng, amplitude=1.0, decay=2.0):
        vals = rng.standard_normal(
            (len(ctx.combos[degree]), algebra.dim, ctx.n_coeffs)) * amplitude
        vals = vals / (decay ** ctx.degrees)
        return cls(ctx, degree, algebra, vals)

    def copy(self):
        return JetForm(self.ctx, self.degree, self.algebra, self.values.copy())

    def __add__(self, other):
        self._check_compatible(other)
        return JetForm(self.ctx, self.degree, self.algebra,
                       self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return JetForm(self.ctx, self.degree, self.algebra,
                       self.values - other.values)

    def __mul__(self, scalar):
        return JetForm(self.ctx, self.degree, self.algebra,
                       self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return JetForm(self.ctx, self.degree, self.algebra, -self.values)

    def _check_compatible(self, other):
        if other.ctx is not self.ctx or other.degree != self.degree \
                or other.algebra is not self.algebra:
            raise ArgumentError("incompatible jet forms")

    # -- calculus -------------------------------------------------------------

    def d(self):
        """Exterior derivative; the top degree maps to the zero m-form."""
        ctx = self.ctx
        if self.degree >= ctx.m:
            return JetForm(ctx, ctx.m, self.algebra)
        out = JetForm(ctx, self.degree + 1, self.algebra)
        combos_out = ctx.combo_index[self.degree + 1]
        for ci, combo in enumerate(ctx.combos[self.degree]):
            for axis in range(ctx.m):
                if axis in combo:
                    continue
                pos = sum(1 for j in combo if j < axis)
                sign = -1.0 if pos % 2 else 1.0
                target = combos_out[tuple(sorted(combo + (axis,)))]
                out.values[target] += sign * ctx.deriv(self.values[ci], axis)
        return out

    def star(self):
        """Flat Euclidean Hodge star; star(star) = (-1)^{k(m-k)}."""
        ctx = self.ctx
        idx, signs = ctx.star_tables[self.degree]
        out = JetForm(ctx, ctx.m - self.degree, self.algebra)
        out.values[idx] = signs[:, None, None] * self.values
        return out

    def codiff(self):
        """Codifferential d* = (-1)^{m(k+1)+1} * d * on k-forms."""
        k, m = self.degree, self.ctx.m
        if k == 0:
            return JetForm(self.ctx, 0, self.algebra) * 0.0
        sign = (-1.0) ** (m * (k + 1) + 1)
        res = self.star().d().star()
        return JetForm(self.ctx, k - 1, self.algebra, sign * res.values)

    def apply_map(self, lie_map):
        """Push values through a LinearLieMap componentwise."""
        if lie_map.source is not self.algebra:
            raise ArgumentError("map source does not match form algebra")
        vals = np.einsum("ai,cip->cap", lie_map.matrix, self.values)
        return JetForm(self.ctx, self.degree, lie_map.target, vals)

    def apply_operator(self, op, algebra=None):
        """Apply a constant operator matrix to the coefficient axis."""
        vals = np.einsum("ij,cjp->cip", op, self.values)
        return JetForm(self.ctx, self.degree, algebra or self.algebra, vals)

    def apply_jet_operator(self, jet_op, algebra=None):
        """Apply a jet-matrix operator (pointwise varying) to the values."""
        vals = jet_matvec(self.ctx, jet_op, self.values)
        return JetForm(self.ctx, self.degree, algebra or self.algebra, vals)

    def max_abs(self, max_degree=None):
        """Largest coefficient magnitude, optionally up to a total degree."""
        if self.values.size == 0:
            return 0.0
        if max_degree is None:
            return float(np.abs(self.values).max())
        mask = self.ctx.degree_mask(max_degree)
        return float(np.abs(self.values[..., mask]).max())

    def eval_at_zero(self):
        """Component values at the base point (coefficient of the 1 monomial)."""
        return self.values[..., 0].copy()


def wedge_pair(ctx, degree_a, degree_b):
    """Table of (ia, ib, iout, sign) for wedging k_a- with k_b-combos."""
    out = []
    if degree_a + degree_b > ctx.m:
        return out
    target_index = ctx.combo_index[degree_a + degree_b]
    for ia, ca in enumerate(ctx.combos[degree_a]):
        for ib, cb in enumerate(ctx.combos[degree_b]):
            if set(ca) & set(cb):
                continue
            merged = ca + cb
            sign = _perm_parity(merged)
            out.append((ia, ib, target_index[tuple(sorted(merged))], float(sign)))
    return out


def wedge_action(pairing, va, vb, out_algebra):
    """Graded wedge combined with a bilinear algebra pairing.

    ``pairing`` is a 3-index tensor Q with out_k = sum_ij Q[i,j,k] a_i b_j:
    an action tensor (alpha-hat, beta-hat), structure constants for the
    bracket wedge [V ^ W], or a Peiffer lifting tensor.
    """
    ctx = va.ctx
    if vb.ctx is not ctx:
        raise ArgumentError("jet forms from different contexts")
    if va.degree + vb.degree > ctx.m:
        raise ArgumentError("wedge degrees exceed the ambient dimension")
    q = np.asarray(pairing, dtype=float)
    if q.shape != (va.algebra.dim, vb.algebra.dim, out_algebra.dim):
        raise ArgumentError(
            f"pairing tensor shape {q.shape} does not match "
            f"({va.algebra.dim}, {vb.algebra.dim}, {out_algebra.dim})")
    out = JetForm(ctx, va.degree + vb.degree, out_algebra)
    for ia, ib, iout, sign in wedge_pair(ctx, va.degree, vb.degree):
        prod = np.einsum("ip,jp->ijp",
                         va.values[ia][:, ctx._mul_a],
                         vb.values[ib][:, ctx._mul_b])
        red = np.add.reduceat(prod, ctx._mul_starts, axis=-1)
        out.values[iout] += sign * np.einsum("ijp,ijk->kp", red, q)
    return out


def wedge_bracket(va, vb):
    """[V ^ W]: wedge through the Lie bracket of a common algebra."""
    if va.algebra is not vb.algebra:
        raise ArgumentError("bracket wedge needs forms valued in one algebra")
    return wedge_action(va.algebra.structure, va, vb, va.algebra)


def wedge_matrix_valued(va, vb):
    """V ^ W through raw matrix products X_i X_j, kept matrix-valued.

    The result lives in the ambient matrix algebra (shape: combos x d x d x
    n_coeffs), not in the Lie algebra; it is the reference value for
    identities like V ^ V = [V ^ V] / 2 on odd-degree forms.
    """
    ctx = va.ctx
    if va.algebra is not vb.algebra:
        raise ArgumentError("matrix wedge needs forms valued in one algebra")
    alg = va.algebra
    prods = np.einsum("iab,jbc->ijac", alg.basis, alg.basis)
    d_mat = alg.mat_dim
    out_degree = va.degree + vb.degree
    out = np.zeros((len(ctx.combos[out_degree]), d_mat, d_mat, ctx.n_coeffs))
    for ia, ib, iout, sign in wedge_pair(ctx, va.degree, vb.degree):
        prod = np.einsum("ip,jp->ijp",
                         va.values[ia][:, ctx._mul_a],
                         vb.values[ib][:, ctx._mul_b])
        red = np.add.reduceat(prod, ctx._mul_starts, axis=-1)
        out[iout] += sign * np.einsum("ijp,ijab->abp", red, prods)
    return out


def jetform_matrix_values(form):
    """Realize an algebra-valued jet form as matrix-valued coefficients."""
    return np.einsum("cip,iab->cabp", form.values, form.algebra.basis)


class JetGroupField:
    """A group-valued field g(x) = exp(gamma(x)) carried in every needed rep.

    ``ops`` maps a representation name ('mat', 'ad', 'alpha', 'beta') to a
    jet matrix.  Products and inverses act representation-wise, so fields
    assembled from several exponentials stay internally consistent.
    """

    def __init__(self, ctx, module, ops):
        self.ctx = ctx
        self.module = module
        self.ops = ops

    @classmethod
    def exp(cls, ctx, module, gamma_values):
        """Exponential of a g-valued jet 0-form given as (dim_g, nc) array."""
        gamma = np.asarray(gamma_values, dtype=float)
        if gamma.shape != (module.g.dim, ctx.n_coeffs):
            raise ArgumentError("gamma must have shape (dim_g, n_coeffs)")
        ops = {}
        generators = {
            "mat": module.g.basis,
            "ad": module.g.structure.transpose(0, 2, 1),
            "alpha": module.alpha.tensor.transpose(0, 2, 1),
        }
        if getattr(module, "beta", None) is not None:
            generators["beta"] = module.beta.tensor.transpose(0, 2, 1)
        for name, gens in generators.items():
            mat = np.einsum("aij,ap->ijp", gens, gamma)
            ops[name] = jet_expm(ctx, mat)
        return cls(ctx, module, ops)

    @classmethod
    def identity(cls, ctx, module):
        return cls.exp(ctx, module, np.zeros((module.g.dim, ctx.n_coeffs)))

    def __matmul__(self, other):
        ops = {k: jet_matmul(self.ctx, v, other.ops[k])
               for k, v in self.ops.items()}
        return JetGroupField(self.ctx, self.module, ops)

    def inv(self):
        ops = {k: jet_matinv(self.ctx, v) for k, v in self.ops.items()}
        return JetGroupField(self.ctx, self.module, ops)

    def act(self, rep, form, algebra=None):
        """Apply the group action in representation ``rep`` to a JetForm."""
        return form.apply_jet_operator(self.ops[rep], algebra=algebra)

    def maurer_cartan(self):
        """g^{-1} dg as a g-valued 1-form jet.

        Derivatives of an order-K jet are only trustworthy up to degree
        K-1, so the algebra-span check masks out the top degree (whose
        coefficients carry the truncation error of exp).
        """
        ctx = self.ctx
        g_alg = self.module.g
        mat = self.ops["mat"]
        mat_inv = jet_matinv(ctx, mat)
        out = JetForm(ctx, 1, g_alg)
        mask = ctx.degree_mask(ctx.order - 1)
        for axis in range(ctx.m):
            dmat = np.einsum("dc,ijc->ijd", ctx.deriv_ops[axis], mat)
            prod = jet_matmul(ctx, mat_inv, dmat)
            coeffs = np.einsum("kab,abp->kp", g_alg.expansion, prod)
            recon = np.einsum("kp,kab->abp", coeffs, g_alg.basis)
            resid = float(np.abs((recon - prod)[..., mask]).max())
            if resid > 1e-8 * max(1.0, float(np.abs(prod).max())):
                raise StructureError(
                    f"g^-1 dg leaves the algebra span (residual {resid:.2e})")
            out.values[ctx.combo_index[1][(axis,)]] = coeffs
        return out

    def identity_residual(self):
        """max |g g^{-1} - I| over all representations."""
        resid = 0.0
        for name, op in self.ops.items():
            prod = jet_matmul(self.ctx, op, jet_matinv(self.ctx, op))
            prod[..., 0] -= np.eye(op.shape[0])
            resid = max(resid, float(np.abs(prod).max()))
        return resid
