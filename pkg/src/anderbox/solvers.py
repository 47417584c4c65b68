"""Symmetric eigensolvers: dense LAPACK wrapper and a thick-restart
Lanczos iteration with full reorthogonalization for the top of the
spectrum."""

from __future__ import annotations

import numpy as np
from scipy import linalg as _la

from .errors import ConvergenceError


def dense_top_eigs(A: np.ndarray, n: int, vectors: bool = True):
    """Top-n eigenpairs of a symmetric matrix, descending."""
    dim = A.shape[0]
    n = min(n, dim)
    vals, vecs = _la.eigh(A, subset_by_index=[dim - n, dim - 1])
    order = np.argsort(vals)[::-1]
    return vals[order], (vecs[:, order] if vectors else None)


def lanczos_top(apply_fn, dim: int, n: int, v0: np.ndarray | None = None,
                tol: float = 1e-9, max_iter: int | None = None,
                seed: int = 0, sweep: int | None = None,
                max_sweeps: int = 12):
    """Top-n eigenpairs of a symmetric operator via thick-restart Lanczos.

    Each sweep runs a Lanczos factorization of length ``sweep`` with full
    reorthogonalization; between sweeps the best ``n + pad`` Ritz vectors
    are kept and the factorization is restarted against them.  Stops when
    every requested pair has residual norm estimate below ``tol``.

    Returns (values descending, vectors (dim, n), residual estimates).
    Raises ConvergenceError with a residual report on budget exhaustion.
    """
    n = min(n, dim)
    if sweep is None:
        sweep = min(dim, max(6 * n + 60, 180))
    if max_iter is not None:
        max_sweeps = max(1, int(np.ceil(max_iter / sweep)))
    rng = np.random.default_rng(seed)
    if v0 is None:
        v0 = rng.standard_normal(dim)
    v0 = np.asarray(v0, dtype=float)
    q = v0 / np.linalg.norm(v0)

    pad = min(max(n, 4), 10)
    keep = min(n + pad, sweep - 2)

    # basis kept across restarts: locked Ritz vectors + current Lanczos run
    V = np.empty((dim, sweep + keep + 1))
    V[:, 0] = q
    nloc = 0          # number of Ritz vectors carried from the last sweep
    theta = None      # their Ritz values
    coup = None       # their coupling row
    last_res = None

    for swp in range(max_sweeps):
        base = nloc          # columns 0..nloc-1 hold carried Ritz vectors
        k = base             # index of the current Lanczos vector
        alphas = []
        betas = []
        b_prev = 0.0
        while k - base < sweep:
            w = apply_fn(V[:, k])
            a = float(V[:, k] @ w)
            alphas.append(a)
            w -= a * V[:, k]
            if k - base > 0:
                w -= b_prev * V[:, k - 1]
            elif nloc > 0:
                w -= V[:, :nloc] @ coup
            for _ in range(2):
                w -= V[:, : k + 1] @ (V[:, : k + 1].T @ w)
            b = float(np.linalg.norm(w))
            betas.append(b)
            k += 1
            if b < 1e-14:
                break
            V[:, k] = w / b
            b_prev = b

        m = k - base  # Lanczos steps done this sweep
        # projected matrix: arrowhead over the locked part + tridiagonal
        size = nloc + m
        T = np.zeros((size, size))
        if nloc > 0:
            T[np.arange(nloc), np.arange(nloc)] = theta
            T[:nloc, nloc] = coup
            T[nloc, :nloc] = coup
        for i in range(m):
            T[nloc + i, nloc + i] = alphas[i]
        for i in range(m - 1):
            T[nloc + i, nloc + i + 1] = betas[i]
            T[nloc + i + 1, nloc + i] = betas[i]
        tvals, tvecs = _la.eigh(T)
        order = np.argsort(tvals)[::-1]
        b_last = betas[m - 1] if m > 0 else 0.0

        n_eff = min(n, size)
        top = order[:n_eff]
        res = np.abs(b_last * tvecs[size - 1, top])
        last_res = res
        if np.all(res <= tol) or b_last < 1e-14 or size >= dim:
            vals = tvals[top]
            vecs = V[:, :size] @ tvecs[:, top]
            vecs /= np.linalg.norm(vecs, axis=0, keepdims=True)
            return vals, vecs, res

        # thick restart: keep the best `keep` Ritz vectors + residual vector
        nkeep = min(keep, size - 1)
        sel = order[:nkeep]
        newV = V[:, :size] @ tvecs[:, sel]
        # orthonormalize defensively
        newV, _ = np.linalg.qr(newV)
        resid = V[:, size].copy()
        resid -= newV @ (newV.T @ resid)
        nrm = float(np.linalg.norm(resid))
        if nrm < 1e-14:
            resid = rng.standard_normal(dim)
            resid -= newV @ (newV.T @ resid)
            nrm = float(np.linalg.norm(resid))
        resid /= nrm
        V[:, :nkeep] = newV
        V[:, nkeep] = resid
        theta = tvals[sel]
        coup = b_last * tvecs[size - 1, sel]
        nloc = nkeep

    raise ConvergenceError(
        f"Lanczos did not converge in {max_sweeps} sweeps of {sweep}; "
        f"residual estimates {last_res}",
        residuals=last_res,
    )
