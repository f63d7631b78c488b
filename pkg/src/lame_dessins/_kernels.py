"""Double-precision multistart Newton kernels for the factorised Shabat system.

Unknowns are the low-order coefficients of the monic factors ``q, g, f, h``
(in that order) and the residual is ``x^3 q g^2 - f h^2 - 1`` truncated to
degree ``N - 1``.  Two interchangeable backends exist: a numba ``@njit`` loop
over starts and a batched numpy version.  Set ``LAME_DESSINS_NUMBA=0`` to force
the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def numba_enabled() -> bool:
    return HAVE_NUMBA and os.environ.get("LAME_DESSINS_NUMBA", "1") not in ("0", "false", "no")


# ---------------------------------------------------------------------------
# numpy backend (vectorised over the batch axis)
# ---------------------------------------------------------------------------


def _bconv(a, b):
    """Batched polynomial product of (B, m) and (B, n) coefficient arrays."""
    B, m = a.shape
    n = b.shape[1]
    out = np.zeros((B, m + n - 1), dtype=np.complex128)
    for i in range(m):
        out[:, i:i + n] += a[:, i:i + 1] * b
    return out


def _monic(u, lo, d):
    B = u.shape[0]
    return np.concatenate([u[:, lo:lo + d], np.ones((B, 1), dtype=np.complex128)], axis=1)


def system_numpy(U, N, ds, dg, df, dh):
    """Residuals (B, N) and Jacobians (B, N, N) for a batch of unknown vectors."""
    B = U.shape[0]
    o_g, o_f, o_h = ds, ds + dg, ds + dg + df
    q = _monic(U, 0, ds)
    g = _monic(U, o_g, dg)
    f = _monic(U, o_f, df)
    h = _monic(U, o_h, dh)
    gg = _bconv(g, g)
    hh = _bconv(h, h)
    qg = _bconv(q, g)
    fh = _bconv(f, h)
    lhs = _bconv(q, gg)                      # times x^3
    rhs = _bconv(f, hh)
    R = np.zeros((B, N), dtype=np.complex128)
    R[:, 3:3 + lhs.shape[1]] += lhs[:, :N - 3]
    R[:, :rhs.shape[1]] -= rhs[:, :N]
    R[:, 0] -= 1.0
    J = np.zeros((B, N, N), dtype=np.complex128)
    col = 0
    for k in range(ds):
        n = min(gg.shape[1], N - 3 - k)
        J[:, 3 + k:3 + k + n, col] = gg[:, :n]
        col += 1
    for k in range(dg):
        n = min(qg.shape[1], N - 3 - k)
        J[:, 3 + k:3 + k + n, col] = 2.0 * qg[:, :n]
        col += 1
    for k in range(df):
        n = min(hh.shape[1], N - k)
        J[:, k:k + n, col] = -hh[:, :n]
        col += 1
    for k in range(dh):
        n = min(fh.shape[1], N - k)
        J[:, k:k + n, col] = -2.0 * fh[:, :n]
        col += 1
    return R, J


def newton_batch_numpy(U0, N, ds, dg, df, dh, maxiter, tol, step_cap):
    U = np.array(U0, dtype=np.complex128, copy=True)
    B = U.shape[0]
    active = np.ones(B, dtype=bool)
    done = np.zeros(B, dtype=bool)
    res = np.full(B, np.inf)
    for _ in range(maxiter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        R, J = system_numpy(U[idx], N, ds, dg, df, dh)
        nr = np.sqrt(np.sum(np.abs(R) ** 2, axis=1))
        res[idx] = nr
        conv = nr < tol
        done[idx[conv]] = True
        active[idx[conv]] = False
        keep = ~conv
        idx, R, J = idx[keep], R[keep], J[keep]
        if idx.size == 0:
            break
        try:
            d = np.linalg.solve(J, R[..., None])[..., 0]
        except np.linalg.LinAlgError:
            # singular Jacobians are rare; drop those starts rather than regularise
            with np.errstate(all="ignore"):
                ok = np.abs(np.linalg.det(J)) > 1e-300
            active[idx[~ok]] = False
            idx, R, J = idx[ok], R[ok], J[ok]
            if idx.size == 0:
                break
            d = np.linalg.solve(J, R[..., None])[..., 0]
        nd = np.sqrt(np.sum(np.abs(d) ** 2, axis=1))
        scale = np.where(nd > step_cap, step_cap / np.maximum(nd, 1e-300), 1.0)
        U[idx] -= d * scale[:, None]
        blown = ~np.all(np.isfinite(U[idx]), axis=1) | (np.max(np.abs(U[idx]), axis=1) > 1e8)
        active[idx[blown]] = False
    return U, done, res


# ---------------------------------------------------------------------------
# numba backend (explicit loops, one start at a time)
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _conv(a, b):
        out = np.zeros(a.shape[0] + b.shape[0] - 1, dtype=np.complex128)
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                out[i + j] += a[i] * b[j]
        return out

    @numba.njit(cache=True)
    def _monic1(u, lo, d):
        out = np.ones(d + 1, dtype=np.complex128)
        for i in range(d):
            out[i] = u[lo + i]
        return out

    @numba.njit(cache=True)
    def system_jit(u, N, ds, dg, df, dh):
        q = _monic1(u, 0, ds)
        g = _monic1(u, ds, dg)
        f = _monic1(u, ds + dg, df)
        h = _monic1(u, ds + dg + df, dh)
        gg = _conv(g, g)
        hh = _conv(h, h)
        qg = _conv(q, g)
        fh = _conv(f, h)
        lhs = _conv(q, gg)
        rhs = _conv(f, hh)
        R = np.zeros(N, dtype=np.complex128)
        for i in range(lhs.shape[0]):
            if 3 + i < N:
                R[3 + i] += lhs[i]
        for i in range(rhs.shape[0]):
            if i < N:
                R[i] -= rhs[i]
        R[0] -= 1.0
        J = np.zeros((N, N), dtype=np.complex128)
        col = 0
        for k in range(ds):
            for i in range(gg.shape[0]):
                if 3 + k + i < N:
                    J[3 + k + i, col] = gg[i]
            col += 1
        for k in range(dg):
            for i in range(qg.shape[0]):
                if 3 + k + i < N:
                    J[3 + k + i, col] = 2.0 * qg[i]
            col += 1
        for k in range(df):
            for i in range(hh.shape[0]):
                if k + i < N:
                    J[k + i, col] = -hh[i]
            col += 1
        for k in range(dh):
            for i in range(fh.shape[0]):
                if k + i < N:
                    J[k + i, col] = -2.0 * fh[i]
            col += 1
        return R, J

    @numba.njit(cache=True)
    def _solve_inplace(A, b):
        """Gaussian elimination with partial pivoting; returns False on a (near) singular pivot."""
        n = A.shape[0]
        scale = 0.0
        for i in range(n):
            for j in range(n):
                scale = max(scale, abs(A[i, j]))
        for k in range(n):
            p = k
            best = abs(A[k, k])
            for i in range(k + 1, n):
                if abs(A[i, k]) > best:
                    best = abs(A[i, k])
                    p = i
            if best <= 1e-14 * scale:
                return False
            if p != k:
                for j in range(n):
                    A[k, j], A[p, j] = A[p, j], A[k, j]
                b[k], b[p] = b[p], b[k]
            for i in range(k + 1, n):
                m = A[i, k] / A[k, k]
                for j in range(k, n):
                    A[i, j] -= m * A[k, j]
                b[i] -= m * b[k]
        for k in range(n - 1, -1, -1):
            acc = b[k]
            for j in range(k + 1, n):
                acc -= A[k, j] * b[j]
            b[k] = acc / A[k, k]
        return True

    @numba.njit(cache=True)
    def _conv_into(a, b, out):
        out[:] = 0.0
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                out[i + j] += a[i] * b[j]

    @numba.njit(cache=True)
    def _system_into(u, N, ds, dg, df, dh, q, g, f, h, gg, hh, qg, fh, lhs, rhs, R, J):
        """Allocation-free variant of :func:`system_jit` writing into the given buffers."""
        o = 0
        for i in range(ds):
            q[i] = u[o + i]
        o += ds
        for i in range(dg):
            g[i] = u[o + i]
        o += dg
        for i in range(df):
            f[i] = u[o + i]
        o += df
        for i in range(dh):
            h[i] = u[o + i]
        _conv_into(g, g, gg)
        _conv_into(h, h, hh)
        _conv_into(q, g, qg)
        _conv_into(f, h, fh)
        _conv_into(q, gg, lhs)
        _conv_into(f, hh, rhs)
        R[:] = 0.0
        for i in range(lhs.shape[0]):
            if 3 + i < N:
                R[3 + i] += lhs[i]
        for i in range(rhs.shape[0]):
            if i < N:
                R[i] -= rhs[i]
        R[0] -= 1.0
        J[:, :] = 0.0
        col = 0
        for k in range(ds):
            for i in range(gg.shape[0]):
                if 3 + k + i < N:
                    J[3 + k + i, col] = gg[i]
            col += 1
        for k in range(dg):
            for i in range(qg.shape[0]):
                if 3 + k + i < N:
                    J[3 + k + i, col] = 2.0 * qg[i]
            col += 1
        for k in range(df):
            for i in range(hh.shape[0]):
                if k + i < N:
                    J[k + i, col] = -hh[i]
            col += 1
        for k in range(dh):
            for i in range(fh.shape[0]):
                if k + i < N:
                    J[k + i, col] = -2.0 * fh[i]
            col += 1

    @numba.njit(cache=True)
    def newton_batch_jit(U0, N, ds, dg, df, dh, maxiter, tol, step_cap):
        B = U0.shape[0]
        U = U0.copy()
        done = np.zeros(B, dtype=np.bool_)
        res = np.full(B, np.inf)
        c = np.complex128
        q, g = np.ones(ds + 1, dtype=c), np.ones(dg + 1, dtype=c)
        f, h = np.ones(df + 1, dtype=c), np.ones(dh + 1, dtype=c)
        gg, hh = np.zeros(2 * dg + 1, dtype=c), np.zeros(2 * dh + 1, dtype=c)
        qg, fh = np.zeros(ds + dg + 1, dtype=c), np.zeros(df + dh + 1, dtype=c)
        lhs, rhs = np.zeros(ds + 2 * dg + 1, dtype=c), np.zeros(df + 2 * dh + 1, dtype=c)
        R, J = np.zeros(N, dtype=c), np.zeros((N, N), dtype=c)
        u = np.zeros(U.shape[1], dtype=c)
        for b in range(B):
            u[:] = U[b]
            for _ in range(maxiter):
                _system_into(u, N, ds, dg, df, dh, q, g, f, h, gg, hh, qg, fh, lhs, rhs, R, J)
                nr = 0.0
                for i in range(N):
                    nr += R[i].real ** 2 + R[i].imag ** 2
                nr = np.sqrt(nr)
                res[b] = nr
                if nr < tol:
                    done[b] = True
                    break
                if not _solve_inplace(J, R):
                    break
                nd = 0.0
                for i in range(N):
                    nd += R[i].real ** 2 + R[i].imag ** 2
                nd = np.sqrt(nd)
                fac = step_cap / nd if nd > step_cap else 1.0
                bad = False
                for i in range(N):
                    u[i] -= fac * R[i]
                    a = abs(u[i])
                    if not np.isfinite(a) or a > 1e8:
                        bad = True
                if bad:
                    break
            U[b] = u
        return U, done, res


def newton_batch(U0, N, ds, dg, df, dh, *, maxiter=60, tol=1e-11, step_cap=1.0,
                 use_numba: bool | None = None):
    """Run damped Newton from every row of ``U0``.

    Returns ``(U, converged, residual_norm)``.  The step is capped at ``step_cap``
    in Euclidean norm, which keeps wild starts from escaping to infinity.
    """
    U0 = np.ascontiguousarray(U0, dtype=np.complex128)
    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba:
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        return newton_batch_jit(U0, N, ds, dg, df, dh, maxiter, tol, step_cap)
    return newton_batch_numpy(U0, N, ds, dg, df, dh, maxiter, tol, step_cap)


def system(u, N, ds, dg, df, dh):
    """Residual and Jacobian for a single unknown vector (numpy path)."""
    R, J = system_numpy(np.asarray(u, dtype=np.complex128)[None, :], N, ds, dg, df, dh)
    return R[0], J[0]
