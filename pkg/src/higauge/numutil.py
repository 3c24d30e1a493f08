"""Dense/batched numerical helpers shared by both form backends.

Everything here is deterministic: fixed iteration orders, no randomized
pivoting, so repeated runs reproduce results bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np


class SolverError(RuntimeError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


def batched_expm(mats):
    """Matrix exponential of a stack of small square matrices.

    Scaling and squaring with a fixed-length Taylor core; the series is run
    to double-precision convergence, so results match scipy.linalg.expm to
    ~1e-14 while being vectorized over the leading axes.
    """
    mats = np.asarray(mats, dtype=float)
    d = mats.shape[-1]
    norms = np.abs(mats).sum(axis=-1).max(axis=-1)
    max_norm = float(norms.max()) if norms.size else 0.0
    # scale so the scaled norm is <= 0.5
    s = max(0, int(np.ceil(np.log2(max_norm / 0.5))) if max_norm > 0.5 else 0)
    a = mats / (2.0 ** s)
    eye = np.broadcast_to(np.eye(d), mats.shape).copy()
    result = eye.copy()
    term = eye.copy()
    for n in range(1, 30):
        term = term @ a / n
        result += term
        if float(np.abs(term).max()) < 1e-18:
            break
    for _ in range(s):
        result = result @ result
    return result


def batched_logm(mats, max_scalings=30):
    """Principal logarithm of a stack of matrices close to a group identity.

    Inverse scaling-and-squaring: take matrix square roots (Denman-Beavers)
    until ||M - I|| is small, then sum the alternating log series.  Intended
    for group elements reached by path-ordered integration, i.e. within the
    injectivity radius.
    """
    mats = np.asarray(mats, dtype=float)
    d = mats.shape[-1]
    eye = np.eye(d)
    a = mats.copy()
    scalings = 0
    while float(np.abs(a - eye).max()) > 0.25 and scalings < max_scalings:
        a = _batched_sqrtm_db(a)
        scalings += 1
    e = a - eye
    result = np.zeros_like(a)
    term = e.copy()
    for n in range(1, 40):
        result += term / n if n % 2 == 1 else -term / n
        term = term @ e
        if float(np.abs(term).max()) < 1e-18:
            break
    return result * (2.0 ** scalings)


def _batched_sqrtm_db(mats, iters=60, tol=1e-15):
    """Denman-Beavers square root iteration, batched."""
    y = mats.copy()
    z = np.broadcast_to(np.eye(mats.shape[-1]), mats.shape).copy()
    for _ in range(iters):
        y_inv = np.linalg.inv(y)
        z_inv = np.linalg.inv(z)
        y_next = 0.5 * (y + z_inv)
        z_next = 0.5 * (z + y_inv)
        delta = float(np.abs(y_next - y).max())
        y, z = y_next, z_next
        if delta < tol:
            break
    return y


def conjugate_gradient(apply_op, rhs, tol=1e-10, max_iter=None, x0=None):
    """CG for a symmetric positive semidefinite operator given matrix-free.

    Solves ``apply_op(x) = rhs`` for consistent systems.  Started from zero
    (the default) on a consistent singular system, CG converges to the
    minimum-norm (pseudo-inverse) solution, which several callers rely on.

    Returns ``(x, info)`` where info carries the relative residual history.
    """
    rhs = np.asarray(rhs, dtype=float)
    flat_rhs = rhs.ravel()
    n = flat_rhs.size
    if max_iter is None:
        max_iter = 10 * n
    x = np.zeros_like(rhs) if x0 is None else x0.astype(float).copy()
    r = rhs - apply_op(x) if x0 is not None else rhs.copy()
    p = r.copy()
    rs = float(np.vdot(r, r))
    rhs_norm = float(np.linalg.norm(flat_rhs))
    if rhs_norm == 0.0:
        return x, {"iterations": 0, "relative_residual": 0.0, "history": [0.0]}
    history = [np.sqrt(rs) / rhs_norm]
    it = 0
    while np.sqrt(rs) / rhs_norm > tol and it < max_iter:
        ap = apply_op(p)
        pap = float(np.vdot(p, ap))
        if pap <= 0.0:
            # numerical breakdown on a PSD operator: p is (nearly) in the
            # null space; the current x is the converged row-space part
            break
        alpha = rs / pap
        x = x + alpha * p
        r = r - alpha * ap
        rs_new = float(np.vdot(r, r))
        p = r + (rs_new / rs) * p
        rs = rs_new
        history.append(np.sqrt(rs) / rhs_norm)
        it += 1
    info = {
        "iterations": it,
        "relative_residual": history[-1],
        "history": history,
    }
    if history[-1] > tol and it >= max_iter:
        raise SolverError(
            f"CG stalled at relative residual {history[-1]:.3e} "
            f"after {it} iterations (target {tol:.1e})",
            residual_history=history,
        )
    return x, info


def lstsq_projection(normal_op, start, tol=1e-10, max_iter=None):
    """Project ``start`` onto the null space of a PSD normal operator.

    Runs CG on ``normal_op(y) = normal_op(start)`` from zero; the
    row-space component is ``y`` and ``start - y`` is the null-space
    projection.  Returns ``(projection, info)``.
    """
    rhs = normal_op(start)
    y, info = conjugate_gradient(normal_op, rhs, tol=tol, max_iter=max_iter)
    return start - y, info


def nullspace_dimension(normal_op, shape, probes=6, seed=0,
                        tol=1e-7, cg_tol=1e-12, max_iter=None):
    """Probabilistic kernel dimension of a PSD normal operator.

    Projects random probes onto the kernel, deflates previously found
    directions, and counts directions whose projection survives with
    relative norm above ``tol`` and a verified small operator image.
    """
    rng = np.random.default_rng(seed)
    basis = []
    for _ in range(probes):
        probe = rng.standard_normal(shape)
        for b in basis:
            probe = probe - float(np.vdot(b, probe)) * b
        norm0 = float(np.linalg.norm(probe))
        if norm0 == 0.0:
            continue
        proj, _ = lstsq_projection(normal_op, probe,
                                   tol=cg_tol, max_iter=max_iter)
        for b in basis:
            proj = proj - float(np.vdot(b, proj)) * b
        norm_p = float(np.linalg.norm(proj))
        if norm_p / norm0 <= tol:
            continue
        image_norm = float(np.linalg.norm(normal_op(proj)))
        if image_norm / norm_p <= 100 * tol:
            basis.append(proj / norm_p)
    return len(basis)


def orthogonal_procrustes_residual(fields_a, fields_b, gram):
    """Best orthogonal intertwiner between two coefficient fields.

    Finds Q orthogonal w.r.t. the inner product ``gram`` minimizing
    ``||a Q^T - b||`` over all cells and returns the relative residual
    together with Q (expressed in the original basis).
    """
    a = np.asarray(fields_a, dtype=float).reshape(-1, gram.shape[0])
    b = np.asarray(fields_b, dtype=float).reshape(-1, gram.shape[0])
    # work in an ip-orthonormal frame so plain Procrustes applies
    chol = np.linalg.cholesky(gram)
    a_on = a @ chol
    b_on = b @ chol
    u, _, vt = np.linalg.svd(a_on.T @ b_on)
    q_on = (u @ vt).T
    resid = np.linalg.norm(a_on @ q_on.T - b_on) / max(np.linalg.norm(b_on), 1e-300)
    chol_inv = np.linalg.inv(chol)
    q = chol_inv.T @ q_on @ chol.T
    return float(resid), q


def write_json_atomic(path, payload):
    """Serialize ``payload`` to JSON at ``path`` via a same-directory rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
