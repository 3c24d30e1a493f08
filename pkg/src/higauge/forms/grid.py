"""Global discrete calculus on a uniform cubical grid over [0,1]^m.

Cochains store integrated cell values: a k-cell carries (component at the
barycenter) x (cell k-volume).  A k-cell is addressed by its set S of
spanning axes plus an integer position p, with p_i in 0..N-1 for i in S
and 0..N+1 exclusive otherwise; per combo the values form a dense array
of shape sizes(S) + (algebra.dim,).

Operators:
  d       exact integer-incidence coboundary (d o d = 0 identically),
  codiff  the exact adjoint of d in the diagonal inner product
          <w, e>_k = h^(m-2k) sum_cells w . e  (uniform weights make the
          normal operators symmetric in the flat dot product as well),
  star    diagonal Hodge star pairing S with its complement at equal
          positions (values at truncated boundary indices drop, so
          star o star = (-1)^{k(m-k)} holds exactly on interior cells).

Boundary classification: a cell touching a face with normal axis i is
N-type when i is one of its spanning axes (p_i in {0, N-1}), T-type when
it lies inside the face (i non-spanning, p_i in {0, N}).  With this
convention beta_N = 0 implies (codiff beta)_N = 0 exactly, which the
canonical pipelines rely on.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from higauge.errors import ArgumentError
from higauge.forms.jets import _perm_parity, wedge_pair, jet_context
from higauge.numutil import batched_expm, batched_logm


class Grid:
    """Uniform cubical grid: m axes, N cells per axis, spacing h = 1/N."""

    def __init__(self, m, n_cells):
        if not 2 <= m <= 8:
            raise ArgumentError(f"grid dimension must be in 2..8, got {m}")
        if n_cells < 3:
            raise ArgumentError(f"need at least 3 cells per axis, got {n_cells}")
        self.m = m
        self.n = int(n_cells)
        self.h = 1.0 / self.n
        self.combos = [list(combinations(range(m), k)) for k in range(m + 1)]
        self.combo_index = [
            {c: i for i, c in enumerate(self.combos[k])} for k in range(m + 1)
        ]

    def shape(self, combo):
        return tuple(self.n if i in combo else self.n + 1 for i in range(self.m))

    def cell_count(self, k):
        return sum(int(np.prod(self.shape(c))) for c in self.combos[k])

    def weight(self, k):
        """Diagonal inner-product weight h^(m-2k) for integrated k-values."""
        return self.h ** (self.m - 2 * k)

    @lru_cache(maxsize=64)
    def barycenters(self, combo):
        """Barycenter coordinates for all cells of a combo: (..., m)."""
        axes = []
        for i in range(self.m):
            if i in combo:
                axes.append((np.arange(self.n) + 0.5) * self.h)
            else:
                axes.append(np.arange(self.n + 1) * self.h)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @lru_cache(maxsize=64)
    def normal_mask(self, combo):
        """True where a spanning axis touches a boundary face."""
        shape = self.shape(combo)
        mask = np.zeros(shape, dtype=bool)
        for i in combo:
            idx = [slice(None)] * self.m
            idx[i] = 0
            mask[tuple(idx)] = True
            idx[i] = self.n - 1
            mask[tuple(idx)] = True
        return mask

    @lru_cache(maxsize=64)
    def boundary_mask(self, combo):
        """True for all cells touching the boundary of the cube."""
        shape = self.shape(combo)
        mask = self.normal_mask(combo).copy()
        for i in range(self.m):
            if i in combo:
                continue
            idx = [slice(None)] * self.m
            idx[i] = 0
            mask[tuple(idx)] = True
            idx[i] = self.n
            mask[tuple(idx)] = True
        return mask

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.m, self.n) == (other.m, other.n)

    def __hash__(self):
        return hash((self.m, self.n))

    def __repr__(self):
        return f"Grid(m={self.m}, N={self.n})"


class GridCochain:
    """A Lie-algebra-valued k-cochain on a cubical grid."""

    def __init__(self, grid, degree, algebra, values=None):
        self.grid = grid
        self.degree = int(degree)
        self.algebra = algebra
        if not 0 <= self.degree <= grid.m:
            raise ArgumentError(f"degree {degree} out of range for m={grid.m}")
        if values is None:
            self.values = [
                np.zeros(grid.shape(c) + (algebra.dim,))
                for c in grid.combos[self.degree]
            ]
        else:
            self.values = list(values)
            for arr, combo in zip(self.values, grid.combos[self.degree]):
                expected = grid.shape(combo) + (algebra.dim,)
                if arr.shape != expected:
                    raise ArgumentError(
                        f"combo {combo}: expected array shape {expected}, "
                        f"got {arr.shape}")

    # -- structure ------------------------------------------------------------

    @classmethod
    def zero(cls, grid, degree, algebra):
        return cls(grid, degree, algebra)

    def copy(self):
        return GridCochain(self.grid, self.degree, self.algebra,
                           [v.copy() for v in self.values])

    def zeros_like(self):
        return GridCochain(self.grid, self.degree, self.algebra)

    def _check(self, other):
        if self.grid != other.grid or self.degree != other.degree \
                or self.algebra is not other.algebra:
            raise ArgumentError("incompatible cochains")

    def __add__(self, other):
        self._check(other)
        return GridCochain(self.grid, self.degree, self.algebra,
                           [a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other):
        self._check(other)
        return GridCochain(self.grid, self.degree, self.algebra,
                           [a - b for a, b in zip(self.values, other.values)])

    def __mul__(self, scalar):
        s = float(scalar)
        return GridCochain(self.grid, self.degree, self.algebra,
                           [a * s for a in self.values])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    # -- flattening for solvers -------------------------------------------------

    def flatten(self):
        return np.concatenate([v.ravel() for v in self.values]) \
            if self.values else np.zeros(0)

    def from_flat(self, flat):
        out = self.zeros_like()
        offset = 0
        for i, v in enumerate(out.values):
            size = v.size
            out.values[i] = flat[offset:offset + size].reshape(v.shape)
            offset += size
        return out

    # -- metric ------------------------------------------------------------------

    def inner(self, other):
        self._check(other)
        w = self.grid.weight(self.degree)
        total = 0.0
        ip = self.algebra.ip
        for a, b in zip(self.values, other.values):
            total += float(np.einsum("...i,ij,...j->...", a, ip, b).sum())
        return w * total

    def l2_norm(self):
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def grad_sq(self):
        """Squared L2 norm of componentwise forward differences."""
        w = self.grid.weight(self.degree) / self.grid.h ** 2
        ip = self.algebra.ip
        total = 0.0
        for arr in self.values:
            for axis in range(self.grid.m):
                diff = np.diff(arr, axis=axis)
                total += w * float(np.einsum("...i,ij,...j->...", diff, ip, diff).sum())
        return total

    def w12_norm(self):
        return float(np.sqrt(self.inner(self) + self.grad_sq()))

    def w22_norm(self):
        grad2 = 0.0
        w = self.grid.weight(self.degree) / self.grid.h ** 4
        ip = self.algebra.ip
        for arr in self.values:
            for ax1 in range(self.grid.m):
                d1 = np.diff(arr, axis=ax1)
                for ax2 in range(self.grid.m):
                    d2 = np.diff(d1, axis=ax2)
                    grad2 += w * float(np.einsum("...i,ij,...j->...", d2, ip, d2).sum())
        return float(np.sqrt(self.inner(self) + self.grad_sq() + grad2))

    def max_abs(self):
        return max((float(np.abs(v).max()) for v in self.values if v.size),
                   default=0.0)

    def pointwise_norms(self):
        """Per-cell ip-norms of the pointwise (volume-normalized) values."""
        scale = self.grid.h ** self.degree
        ip = self.algebra.ip
        return [
            np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", v, ip, v), 0.0))
            / scale
            for v in self.values
        ]

    # -- calculus -----------------------------------------------------------------

    def d(self):
        """Coboundary; exact (integer incidence applied to the values)."""
        g = self.grid
        k = self.degree
        if k >= g.m:
            return GridCochain(g, g.m, self.algebra)
        out = GridCochain(g, k + 1, self.algebra)
        for oi, combo_out in enumerate(g.combos[k + 1]):
            acc = out.values[oi]
            for pos, axis in enumerate(combo_out):
                sub = combo_out[:pos] + combo_out[pos + 1:]
                src = self.values[g.combo_index[k][sub]]
                sign = -1.0 if pos % 2 else 1.0
                upper = [slice(None)] * g.m
                lower = [slice(None)] * g.m
                upper[axis] = slice(1, g.n + 1)
                lower[axis] = slice(0, g.n)
                acc += sign * (src[tuple(upper)] - src[tuple(lower)])
        return out

    def codiff(self):
        """Adjoint of d in the diagonal inner product (degree k -> k-1)."""
        g = self.grid
        k = self.degree
        if k == 0:
            return GridCochain(g, 0, self.algebra)
        out = GridCochain(g, k - 1, self.algebra)
        factor = 1.0 / g.h ** 2
        for oi, combo_out in enumerate(g.combos[k - 1]):
            acc = out.values[oi]
            for axis in range(g.m):
                if axis in combo_out:
                    continue
                merged = tuple(sorted(combo_out + (axis,)))
                pos = merged.index(axis)
                sign = -1.0 if pos % 2 else 1.0
                src = self.values[g.combo_index[k][merged]]
                upper = [slice(None)] * g.m
                lower = [slice(None)] * g.m
                upper[axis] = slice(1, g.n + 1)
                lower[axis] = slice(0, g.n)
                acc[tuple(upper)] += sign * factor * src
                acc[tuple(lower)] -= sign * factor * src
        return out

    def star(self):
        """Diagonal Hodge star onto the complementary combo (degree m - k)."""
        g = self.grid
        k = self.degree
        factor = g.h ** (g.m - 2 * k)
        out = GridCochain(g, g.m - k, self.algebra)
        for ci, combo in enumerate(g.combos[k]):
            comp = tuple(i for i in range(g.m) if i not in combo)
            sign = _perm_parity(combo + comp)
            target = out.values[g.combo_index[g.m - k][comp]]
            sl_out = [slice(None)] * g.m
            sl_in = [slice(None)] * g.m
            for i in combo:       # axis leaves spanning: indices 0..N-1 kept
                sl_out[i] = slice(0, g.n)
            for i in comp:        # axis enters spanning: drop index N
                sl_in[i] = slice(0, g.n)
            target[tuple(sl_out)] = sign * factor * self.values[ci][tuple(sl_in)]
        return out

    # -- traces ----------------------------------------------------------------

    def normal_part(self):
        out = self.zeros_like()
        for ci, combo in enumerate(self.grid.combos[self.degree]):
            mask = self.grid.normal_mask(combo)
            out.values[ci][mask] = self.values[ci][mask]
        return out

    def tangential_part(self):
        out = self.zeros_like()
        for ci, combo in enumerate(self.grid.combos[self.degree]):
            mask = self.grid.boundary_mask(combo) & ~self.grid.normal_mask(combo)
            out.values[ci][mask] = self.values[ci][mask]
        return out

    def boundary_part(self):
        out = self.zeros_like()
        for ci, combo in enumerate(self.grid.combos[self.degree]):
            mask = self.grid.boundary_mask(combo)
            out.values[ci][mask] = self.values[ci][mask]
        return out

    def zero_normal(self):
        """Copy with all N-type boundary cells set to zero."""
        out = self.copy()
        for ci, combo in enumerate(self.grid.combos[self.degree]):
            out.values[ci][self.grid.normal_mask(combo)] = 0.0
        return out

    def normal_trace_norm(self):
        return self.normal_part().l2_norm()

    # -- algebra maps -------------------------------------------------------------

    def apply_map(self, lie_map):
        if lie_map.source is not self.algebra:
            raise ArgumentError("map source does not match cochain algebra")
        vals = [np.einsum("ai,...i->...a", lie_map.matrix, v)
                for v in self.values]
        return GridCochain(self.grid, self.degree, lie_map.target, vals)

    def apply_operator(self, op, algebra=None):
        """Apply a constant matrix on the coefficient axis."""
        vals = [np.einsum("ij,...j->...i", op, v) for v in self.values]
        return GridCochain(self.grid, self.degree, algebra or self.algebra, vals)

    def project_coefficients(self, projector, algebra=None):
        return self.apply_operator(projector, algebra=algebra)

    # -- sampling / interpolation ---------------------------------------------------

    @classmethod
    def sample(cls, grid, degree, algebra, field):
        """de Rham map: midpoint quadrature of a pointwise field.

        ``field(points)`` returns (npoints, n_combos(degree), algebra.dim)
        pointwise components; the cell value is the barycenter component
        times the cell k-volume (exact for affine components).
        """
        out = cls(grid, degree, algebra)
        vol = grid.h ** degree
        for ci, combo in enumerate(grid.combos[degree]):
            bary = grid.barycenters(combo)
            pts = bary.reshape(-1, grid.m)
            vals = np.asarray(field(pts))
            out.values[ci] = vals[:, ci, :].reshape(grid.shape(combo)
                                                    + (algebra.dim,)) * vol
        return out

    def pointwise_at(self, combo_target):
        """All components interpolated to the barycenters of a target combo.

        Returns (n_combos(self.degree), ..., algebra.dim) with the leading
        axis enumerating this cochain's combos and ... the target lattice.
        """
        g = self.grid
        outs = []
        for ci, combo in enumerate(g.combos[self.degree]):
            arr = self.values[ci] / g.h ** self.degree
            for axis in range(g.m):
                src_center = axis in combo
                dst_center = axis in combo_target
                arr = _axis_interp(arr, axis, src_center, dst_center, g.n)
            outs.append(arr)
        return np.stack(outs, axis=0)


def _axis_interp(arr, axis, src_center, dst_center, n):
    """1D staggered linear interpolation along one axis of a dense array."""
    if src_center == dst_center:
        return arr
    if not src_center and dst_center:
        # nodes (N+1) -> centers (N): average adjacent
        upper = [slice(None)] * arr.ndim
        lower = [slice(None)] * arr.ndim
        upper[axis] = slice(1, n + 1)
        lower[axis] = slice(0, n)
        return 0.5 * (arr[tuple(upper)] + arr[tuple(lower)])
    # centers (N) -> nodes (N+1): average adjacent, one-sided at the ends
    first = [slice(None)] * arr.ndim
    last = [slice(None)] * arr.ndim
    first[axis] = slice(0, 1)
    last[axis] = slice(n - 1, n)
    upper = [slice(None)] * arr.ndim
    lower = [slice(None)] * arr.ndim
    upper[axis] = slice(1, n)
    lower[axis] = slice(0, n - 1)
    mid = 0.5 * (arr[tuple(upper)] + arr[tuple(lower)])
    return np.concatenate([arr[tuple(first)], mid, arr[tuple(last)]], axis=axis)


def wedge(va, vb, pairing, out_algebra):
    """Discrete wedge by barycentric collocation.

    Both factors are interpolated to the barycenters of each output cell,
    combined with the pointwise jet-backend wedge formula through the
    bilinear ``pairing`` tensor, and resampled (times the output volume).
    Consistency is O(h) against sampling the smooth wedge.
    """
    g = va.grid
    if vb.grid != g:
        raise ArgumentError("wedge factors live on different grids")
    k_out = va.degree + vb.degree
    if k_out > g.m:
        raise ArgumentError("wedge degrees exceed the ambient dimension")
    q = np.asarray(pairing, dtype=float)
    ctx_pairs = wedge_pair(jet_context(g.m, 3), va.degree, vb.degree)
    out = GridCochain(g, k_out, out_algebra)
    vol = g.h ** k_out
    for oi, combo_out in enumerate(g.combos[k_out]):
        pa = va.pointwise_at(combo_out)
        pb = vb.pointwise_at(combo_out)
        acc = out.values[oi]
        for ia, ib, iout, sign in ctx_pairs:
            if iout != oi:
                continue
            acc += sign * vol * np.einsum("...i,...j,ijk->...k",
                                          pa[ia], pb[ib], q)
    return out


def wedge_bracket(va, vb):
    if va.algebra is not vb.algebra:
        raise ArgumentError("bracket wedge needs forms valued in one algebra")
    return wedge(va, vb, va.algebra.structure, va.algebra)


class GridGroupField:
    """A group-valued node field carried in every representation a module has.

    ``ops[rep]`` is an array of shape nodes + (dim_rep, dim_rep).  Fields
    are closed under pointwise products and inverses, so path-ordered
    constructions keep all representations consistent.
    """

    def __init__(self, grid, module, ops):
        self.grid = grid
        self.module = module
        self.ops = ops
        self._log_cache = {}

    @staticmethod
    def generator_tensors(module):
        gens = {
            "mat": module.g.basis,
            "ad": module.g.structure.transpose(0, 2, 1),
            "alpha": module.alpha.tensor.transpose(0, 2, 1),
        }
        if getattr(module, "beta", None) is not None:
            gens["beta"] = module.beta.tensor.transpose(0, 2, 1)
        return gens

    @classmethod
    def exp(cls, grid, module, gamma):
        """Exponential of a g-valued node field (nodes + (dim_g,))."""
        gamma = np.asarray(gamma, dtype=float)
        node_shape = tuple([grid.n + 1] * grid.m)
        if gamma.shape != node_shape + (module.g.dim,):
            raise ArgumentError("gamma must be a node field of g-coefficients")
        ops = {}
        for name, gens in cls.generator_tensors(module).items():
            mats = np.einsum("...a,aij->...ij", gamma, gens)
            ops[name] = batched_expm(mats)
        return cls(grid, module, ops)

    @classmethod
    def identity(cls, grid, module):
        node_shape = tuple([grid.n + 1] * grid.m)
        gens = cls.generator_tensors(module)
        ops = {name: np.broadcast_to(
            np.eye(g.shape[1]), node_shape + g.shape[1:]).copy()
            for name, g in gens.items()}
        return cls(grid, module, ops)

    def __matmul__(self, other):
        ops = {k: v @ other.ops[k] for k, v in self.ops.items()}
        return GridGroupField(self.grid, self.module, ops)

    def inv(self):
        return GridGroupField(self.grid, self.module,
                              {k: np.linalg.inv(v) for k, v in self.ops.items()})

    def group_residual(self):
        """Deviation of each representation from its defining relation.

        Measured as the orthogonality defect in the 'mat' representation
        after pulling back through the metric-free check g g^T ~ I is not
        available in general, so this reports |det(g)| - 1 drift instead.
        """
        mats = self.ops["mat"]
        dets = np.linalg.det(mats)
        return float(np.abs(np.abs(dets) - 1.0).max())

    def log_coeffs(self, rep="mat"):
        """Nodewise matrix logarithms of one representation (cached)."""
        if rep not in self._log_cache:
            self._log_cache[rep] = batched_logm(self.ops[rep])
        return self._log_cache[rep]

    def cell_operator(self, rep, combo):
        """Group operator at cell barycenters via the log-average of corners."""
        logs = self.log_coeffs(rep)
        for axis in combo:
            upper = [slice(None)] * self.grid.m
            lower = [slice(None)] * self.grid.m
            upper[axis] = slice(1, self.grid.n + 1)
            lower[axis] = slice(0, self.grid.n)
            logs = 0.5 * (logs[tuple(upper)] + logs[tuple(lower)])
        return batched_expm(logs)

    def act_on_cochain(self, rep, cochain, algebra=None):
        """Apply the group action to a cochain (barycentric midpoint ops)."""
        out_algebra = algebra or cochain.algebra
        out = GridCochain(cochain.grid, cochain.degree, out_algebra)
        for ci, combo in enumerate(cochain.grid.combos[cochain.degree]):
            ops = self.cell_operator(rep, combo)
            out.values[ci] = np.einsum("...ij,...j->...i", ops,
                                       cochain.values[ci])
        return out

    def act(self, rep, cochain, algebra=None):
        """Alias matching the jet group-field interface."""
        return self.act_on_cochain(rep, cochain, algebra=algebra)

    def maurer_cartan(self):
        """g^{-1} dg as a g-valued edge cochain (integrated values).

        The edge value is log(g(x)^{-1} g(x+he)), expanded in the algebra
        basis; returns (cochain, expansion_residual).
        """
        g_alg = self.module.g
        grid = self.grid
        mats = self.ops["mat"]
        out = GridCochain(grid, 1, g_alg)
        worst = 0.0
        for axis in range(grid.m):
            upper = [slice(None)] * grid.m
            lower = [slice(None)] * grid.m
            upper[axis] = slice(1, grid.n + 1)
            lower[axis] = slice(0, grid.n)
            prod = np.linalg.inv(mats[tuple(lower)]) @ mats[tuple(upper)]
            logs = batched_logm(prod)
            coeffs = np.einsum("kab,...ab->...k", g_alg.expansion, logs)
            recon = np.einsum("...k,kab->...ab", coeffs, g_alg.basis)
            worst = max(worst, float(np.abs(recon - logs).max()))
            out.values[grid.combo_index[1][(axis,)]] = coeffs
        return out, worst


# -- serialization ------------------------------------------------------------

def cochain_to_dict(cochain):
    """JSON form: data ordered by (combo lex, position C-order, basis index)."""
    return {
        "m": cochain.grid.m,
        "N": cochain.grid.n,
        "k": cochain.degree,
        "algebra": cochain.algebra.name,
        "data": np.concatenate([v.ravel() for v in cochain.values]).tolist(),
    }


def cochain_from_dict(payload, algebra, grid=None):
    grid = grid or Grid(payload["m"], payload["N"])
    if algebra.name != payload["algebra"]:
        raise ArgumentError(
            f"cochain was written for algebra {payload['algebra']!r}, "
            f"got {algebra.name!r}")
    out = GridCochain(grid, payload["k"], algebra)
    flat = np.asarray(payload["data"], dtype=float)
    if flat.size != sum(v.size for v in out.values):
        raise ArgumentError("cochain payload has the wrong length")
    return out.from_flat(flat)
