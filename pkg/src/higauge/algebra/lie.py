"""Dense matrix Lie algebra arithmetic.

Algebra elements are stored as coefficient vectors over a declared matrix
basis; the matrices themselves are only touched at validation time and for
group-level operations (exp, conjugation).  Every type is immutable after
construction and all operations are pure functions.
"""

from __future__ import annotations

import numpy as np

from higauge.errors import ArgumentError, StructureError
from higauge.numutil import batched_expm

CLOSURE_TOL = 1e-12


class LieAlgebra:
    """A real matrix Lie algebra with a fixed basis and invariant metric.

    Args:
        name: identifier used in JSON descriptions and reports.
        basis: array-like of shape (dim, d, d), linearly independent.
        ip: optional (dim, dim) SPD Gram matrix of an ad-invariant inner
            product.  Defaults to the negative Killing form when that is
            positive definite, else to the trace form tr(X^T Y) of the
            matrix realization.  Non-ad-invariant metrics are rejected.
    """

    def __init__(self, name, basis, ip=None, tol=CLOSURE_TOL):
        self.name = str(name)
        self.basis = np.array(basis, dtype=float)
        if self.basis.ndim != 3 or self.basis.shape[1] != self.basis.shape[2]:
            raise ArgumentError(f"{name}: basis must have shape (dim, d, d)")
        self.dim = self.basis.shape[0]
        self.mat_dim = self.basis.shape[1]
        flat = self.basis.reshape(self.dim, -1)
        gram = flat @ flat.T
        if self.dim and np.linalg.matrix_rank(gram, tol=1e-10) < self.dim:
            raise StructureError(f"{name}: basis matrices are linearly dependent")
        # expansion operator: matrix -> coefficients (least squares, exact
        # for matrices inside the span)
        self._expand = np.linalg.solve(gram, flat) if self.dim else flat
        comms = np.einsum("iab,jbc->ijac", self.basis, self.basis)
        comms = comms - comms.transpose(1, 0, 2, 3)
        self.structure = np.einsum(
            "ijab,kab->ijk", comms, self._expand.reshape(self.dim, self.mat_dim, self.mat_dim)
        ) if self.dim else np.zeros((0, 0, 0))
        recon = np.einsum("ijk,kab->ijab", self.structure, self.basis)
        self.closure_residual = float(np.abs(comms - recon).max()) if self.dim else 0.0
        scale = max(1.0, float(np.abs(comms).max())) if self.dim else 1.0
        if self.closure_residual > tol * scale:
            raise StructureError(
                f"{name}: bracket does not close in the basis "
                f"(residual {self.closure_residual:.2e})"
            )
        self.ip = self._resolve_ip(ip, tol)
        self._ip_chol = np.linalg.cholesky(self.ip) if self.dim else np.zeros((0, 0))
        self.jacobi_residual = self._jacobi_residual()
        if self.jacobi_residual > tol * scale:
            raise StructureError(
                f"{name}: Jacobi identity fails (residual {self.jacobi_residual:.2e})"
            )

    def _resolve_ip(self, ip, tol):
        if self.dim == 0:
            return np.zeros((0, 0))
        if ip is None:
            killing = np.einsum("ikl,jlk->ij", self.structure, self.structure)
            candidate = -killing
            eigs = np.linalg.eigvalsh(candidate)
            if eigs.min() > 1e-10 * max(1.0, eigs.max()):
                ip_mat = candidate
            else:
                ip_mat = np.einsum("iab,jab->ij", self.basis, self.basis)
        else:
            ip_mat = np.array(ip, dtype=float)
            if ip_mat.shape != (self.dim, self.dim):
                raise ArgumentError(f"{self.name}: ip must be {self.dim}x{self.dim}")
        if np.abs(ip_mat - ip_mat.T).max() > tol * max(1.0, np.abs(ip_mat).max()):
            raise StructureError(f"{self.name}: inner product is not symmetric")
        if np.linalg.eigvalsh(ip_mat).min() <= 0:
            raise StructureError(f"{self.name}: inner product is not positive definite")
        # ad-invariance: <[z,x],y> + <x,[z,y]> = 0 on all basis triples
        t1 = np.einsum("zxk,ky->zxy", self.structure, ip_mat)
        resid = float(np.abs(t1 + t1.transpose(0, 2, 1)).max())
        if resid > tol * max(1.0, float(np.abs(ip_mat).max())):
            raise StructureError(
                f"{self.name}: inner product is not ad-invariant (residual {resid:.2e})"
            )
        return ip_mat

    def _jacobi_residual(self):
        if self.dim == 0:
            return 0.0
        c = self.structure
        jac = (
            np.einsum("ijm,mkl->ijkl", c, c)
            + np.einsum("jkm,mil->ijkl", c, c)
            + np.einsum("kim,mjl->ijkl", c, c)
        )
        return float(np.abs(jac).max())

    # -- element operations -------------------------------------------------

    def check_vector(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ArgumentError(
                f"{self.name}: expected coefficient vectors of length {self.dim}, "
                f"got shape {x.shape}"
            )
        return x

    def bracket(self, x, y):
        """Coefficients of [X, Y]; broadcasts over leading axes."""
        x = self.check_vector(x)
        y = self.check_vector(y)
        return np.einsum("...i,...j,ijk->...k", x, y, self.structure)

    def inner(self, x, y):
        return np.einsum("...i,ij,...j->...", self.check_vector(x), self.ip,
                         self.check_vector(y))

    def norm(self, x):
        return np.sqrt(np.maximum(self.inner(x, x), 0.0))

    def to_matrix(self, x):
        return np.einsum("...i,iab->...ab", self.check_vector(x), self.basis)

    def from_matrix(self, mat, tol=1e-9):
        """Expand matrices in the basis; raises if they leave the span."""
        mat = np.asarray(mat, dtype=float)
        coeff = np.einsum("kab,...ab->...k",
                          self._expand.reshape(self.dim, self.mat_dim, self.mat_dim),
                          mat)
        recon = self.to_matrix(coeff)
        resid = float(np.abs(recon - mat).max())
        scale = max(1.0, float(np.abs(mat).max()))
        if resid > tol * scale:
            raise StructureError(
                f"{self.name}: matrix lies outside the algebra span "
                f"(residual {resid:.2e})"
            )
        return coeff

    def ad_operator(self, x):
        """Matrix of ad_x on coefficient vectors (columns act on input)."""
        return np.einsum("...i,ijk->...kj", self.check_vector(x), self.structure)

    @property
    def expansion(self):
        """Operator (dim, d, d) expanding matrices into basis coefficients."""
        return self._expand.reshape(self.dim, self.mat_dim, self.mat_dim)

    def exp(self, x):
        """Group element exp(X) in the matrix realization."""
        return batched_expm(self.to_matrix(x))

    def conj(self, g, x, tol=1e-10):
        """Coefficients of g X g^{-1}; g is a matrix in the realization."""
        g = np.asarray(g, dtype=float)
        mat = self.to_matrix(x)
        out = g @ mat @ np.linalg.inv(g)
        return self.from_matrix(out, tol=tol)

    def orthonormal_frame(self):
        """Cholesky factor L with ip = L L^T; x_on = L^T x is orthonormal."""
        return self._ip_chol

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        payload = {"name": self.name, "basis": self.basis.tolist(),
                   "ip": self.ip.tolist()}
        return payload

    @classmethod
    def from_dict(cls, payload):
        return cls(payload["name"], payload["basis"], ip=payload.get("ip"))

    def __repr__(self):
        return f"LieAlgebra({self.name!r}, dim={self.dim}, d={self.mat_dim})"


class LinearLieMap:
    """A linear map between Lie algebras given by a coefficient matrix.

    The homomorphism residual f([x,y]) - [f(x), f(y)] over all basis pairs
    is computed at construction and stored (flagged, not raised): crossed
    module validation consumes it.
    """

    def __init__(self, source, target, matrix):
        self.source = source
        self.target = target
        self.matrix = np.array(matrix, dtype=float)
        if self.matrix.shape != (target.dim, source.dim):
            raise ArgumentError(
                f"map matrix must be {target.dim}x{source.dim}, "
                f"got {self.matrix.shape}"
            )
        fx_bracket = np.einsum("ijk,ak->ija", self.source.structure, self.matrix)
        bracket_fx = np.einsum("pi,qj,pqa->ija", self.matrix, self.matrix,
                               self.target.structure)
        self.hom_residual = float(np.abs(fx_bracket - bracket_fx).max()) \
            if self.source.dim and self.target.dim else 0.0
        self.is_homomorphism = self.hom_residual <= 1e-12 * max(
            1.0, float(np.abs(self.matrix).max()) ** 2)

    def __call__(self, x):
        x = self.source.check_vector(x)
        return np.einsum("ai,...i->...a", self.matrix, x)

    def image_projector(self):
        """ip-orthogonal projector of the target onto im(f)."""
        if self.target.dim == 0:
            return np.zeros((0, 0))
        u, s, _ = np.linalg.svd(self.matrix, full_matrices=False)
        scale = s[0] if s.size and s[0] > 0 else 1.0
        rank = int(np.sum(s > 1e-12 * scale))
        if rank == 0:
            return np.zeros((self.target.dim, self.target.dim))
        u = u[:, :rank]
        g = self.target.ip
        mid = np.linalg.inv(u.T @ g @ u)
        return u @ mid @ u.T @ g

    def split_by_image(self, x):
        """Decompose x = x_top + x_perp with x_top in im(f), ip-orthogonal."""
        x = self.target.check_vector(x)
        p = self.image_projector()
        x_top = np.einsum("ab,...b->...a", p, x)
        return x_top, x - x_top

    def right_inverse(self):
        """Matrix R with f(R y) = y for y in im(f), minimal source ip-norm."""
        if self.source.dim == 0 or self.target.dim == 0:
            return np.zeros((self.source.dim, self.target.dim))
        g_inv = np.linalg.inv(self.source.ip)
        s = self.matrix @ g_inv @ self.matrix.T
        return g_inv @ self.matrix.T @ np.linalg.pinv(s, rcond=1e-12)

    def kernel_basis(self):
        """ip-orthonormal basis of Ker f as rows (may be empty)."""
        if self.source.dim == 0:
            return np.zeros((0, 0))
        _, s, vt = np.linalg.svd(self.matrix)
        scale = s[0] if s.size and s[0] > 0 else 1.0
        rank = int(np.sum(s > 1e-12 * scale))
        kernel = vt[rank:]
        if kernel.size == 0:
            return np.zeros((0, self.source.dim))
        # Gram-Schmidt in the source inner product
        g = self.source.ip
        rows = []
        for row in kernel:
            v = row.copy()
            for r in rows:
                v = v - (r @ g @ v) * r
            n = np.sqrt(v @ g @ v)
            if n > 1e-13:
                rows.append(v / n)
        return np.array(rows)

    def kernel_projector(self):
        """ip-orthogonal projector of the source onto Ker f."""
        kb = self.kernel_basis()
        if kb.size == 0:
            return np.zeros((self.source.dim, self.source.dim))
        return kb.T @ kb @ self.source.ip

    def to_dict(self):
        return {"source": self.source.name, "target": self.target.name,
                "matrix": self.matrix.tolist()}


class LieAction:
    """An algebra action given by a 3-index tensor.

    ``tensor[a, i, j]`` holds the j-th coefficient of actor basis element a
    applied to acted basis element i.  Validation computes the derivation
    and representation residuals; both must vanish for a Lie action.
    """

    def __init__(self, actor, acted, tensor):
        self.actor = actor
        self.acted = acted
        self.tensor = np.array(tensor, dtype=float)
        expected = (actor.dim, acted.dim, acted.dim)
        if self.tensor.shape != expected:
            raise ArgumentError(
                f"action tensor must have shape {expected}, got {self.tensor.shape}"
            )
        self.derivation_residual = self._derivation_residual()
        self.representation_residual = self._representation_residual()

    def _derivation_residual(self):
        if 0 in self.tensor.shape:
            return 0.0
        c = self.acted.structure
        lhs = np.einsum("ijk,akm->aijm", c, self.tensor)
        rhs = np.einsum("aik,kjm->aijm", self.tensor, c) \
            + np.einsum("ajk,ikm->aijm", self.tensor, c)
        return float(np.abs(lhs - rhs).max())

    def _representation_residual(self):
        if 0 in self.tensor.shape:
            return 0.0
        act_bracket = np.einsum("abc,cim->abim", self.actor.structure, self.tensor)
        # composed[a, b] is the operator alpha(e_a) o alpha(e_b)
        composed = np.einsum("bik,akm->abim", self.tensor, self.tensor)
        comm = composed - composed.transpose(1, 0, 2, 3)
        return float(np.abs(act_bracket - comm).max())

    def __call__(self, x, v):
        """alpha(x)(v); broadcasts over leading axes of both arguments."""
        x = self.actor.check_vector(x)
        v = self.acted.check_vector(v)
        return np.einsum("...a,...i,aij->...j", x, v, self.tensor)

    def operator(self, x):
        """Matrix of alpha(x) acting on acted coefficient column vectors."""
        x = self.actor.check_vector(x)
        return np.einsum("...a,aij->...ji", x, self.tensor)

    def to_dict(self):
        return {"actor": self.actor.name, "acted": self.acted.name,
                "tensor": self.tensor.tolist()}


def abelian_algebra(name, dim, mat_embed=True):
    """The abelian Lie algebra R^dim realized by strictly nilpotent matrices.

    Basis element i is the (dim+1)x(dim+1) matrix with a single 1 in the
    last column, so all products (hence all brackets) vanish and the group
    exponential is I + X.
    """
    basis = np.zeros((dim, dim + 1, dim + 1))
    for i in range(dim):
        basis[i, i, dim] = 1.0
    return LieAlgebra(name, basis, ip=np.eye(dim))


def so3():
    """so(3) with its defining 3x3 antisymmetric realization."""
    e = np.zeros((3, 3, 3))
    e[0] = [[0, 0, 0], [0, 0, -1], [0, 1, 0]]
    e[1] = [[0, 0, 1], [0, 0, 0], [-1, 0, 0]]
    e[2] = [[0, -1, 0], [1, 0, 0], [0, 0, 0]]
    return LieAlgebra("so3", e)


def su2_real():
    """su(2) realized as real 4x4 matrices via the C^2 -> R^4 embedding."""
    # complex basis: -i/2 sigma_k; embed a+ib -> [[a, -b], [b, a]] blocks
    sigma = np.array([
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ])
    basis = []
    for k in range(3):
        m = -0.5j * sigma[k]
        re, im = m.real, m.imag
        block = np.zeros((4, 4))
        block[0::2, 0::2] = re
        block[1::2, 1::2] = re
        block[0::2, 1::2] = -im
        block[1::2, 0::2] = im
        basis.append(block)
    return LieAlgebra("su2", np.array(basis))


def so2():
    """so(2), the one-dimensional rotation algebra."""
    e = np.zeros((1, 2, 2))
    e[0] = [[0, -1], [1, 0]]
    return LieAlgebra("so2", e, ip=np.eye(1))
