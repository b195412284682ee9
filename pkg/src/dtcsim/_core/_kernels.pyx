# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: RK4 for the mean-field Bloch flow and the TEBD two-site update.

Both functions mirror ``_fallback.py`` argument for argument.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, fabs
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zgesdd

cnp.import_array()

cdef inline void _rhs(double x, double y, double z, double t, double h, double J,
                      double lam, double omega, bint frozen,
                      double* dx, double* dy, double* dz) noexcept nogil:
    # ds/dt = 2 grad(H) x s with H = -h c(t) x - J (1 + z^2) + lam (y + z)
    cdef double c, gx, gy, gz
    if frozen:
        c = 0.5
    else:
        c = cos(0.5 * omega * t)
        c = c * c
    gx = -h * c
    gy = lam
    gz = lam - 2.0 * J * z
    dx[0] = 2.0 * (gy * z - gz * y)
    dy[0] = 2.0 * (gz * x - gx * z)
    dz[0] = 2.0 * (gx * y - gy * x)


def rk4_bloch(double[::1] X, double[::1] Y, double[::1] Z, double t0, double step,
              long n_steps, long record_every, double h, double J, double lam,
              double omega, bint frozen, double[:, :, ::1] out):
    """Advance every Bloch vector ``n_steps`` RK4 steps, recording every ``record_every``.

    ``X``, ``Y``, ``Z`` are updated in place. ``out`` has shape
    (seeds, records, 3); record 0 is the initial state.
    """
    cdef Py_ssize_t s, i, col
    cdef Py_ssize_t nseeds = X.shape[0]
    cdef double x, y, z, t, half = 0.5 * step, sixth = step / 6.0
    cdef double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z
    with nogil:
        for s in range(nseeds):
            x = X[s]
            y = Y[s]
            z = Z[s]
            out[s, 0, 0] = x
            out[s, 0, 1] = y
            out[s, 0, 2] = z
            col = 1
            for i in range(n_steps):
                t = t0 + i * step
                _rhs(x, y, z, t, h, J, lam, omega, frozen, &k1x, &k1y, &k1z)
                _rhs(x + half * k1x, y + half * k1y, z + half * k1z, t + half,
                     h, J, lam, omega, frozen, &k2x, &k2y, &k2z)
                _rhs(x + half * k2x, y + half * k2y, z + half * k2z, t + half,
                     h, J, lam, omega, frozen, &k3x, &k3y, &k3z)
                _rhs(x + step * k3x, y + step * k3y, z + step * k3z, t + step,
                     h, J, lam, omega, frozen, &k4x, &k4y, &k4z)
                x = x + sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                y = y + sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
                z = z + sixth * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
                if (i + 1) % record_every == 0:
                    out[s, col, 0] = x
                    out[s, col, 1] = y
                    out[s, col, 2] = z
                    col += 1
            X[s] = x
            Y[s] = y
            Z[s] = z


def two_site_update(Bl, Br, S_in, U, int chi_max, double cutoff):
    """Apply a 4x4 gate to two right-canonical sites and re-split by SVD.

    Returns ``(Bl_new, S_new, Br_new, discarded_weight, norm_drift)``.
    """
    cdef int a = <int>Bl.shape[0]
    cdef int m = <int>Bl.shape[2]
    cdef int b = <int>Br.shape[2]
    cdef int rows = 2 * a, cols = 2 * b
    cdef int kk = rows if rows < cols else cols
    cdef double complex one = 1.0, zero = 0.0, alpha
    cdef char *nn = b"N"
    cdef char *cn = b"C"
    cdef char *js = b"S"

    cdef double[::1] S = np.ascontiguousarray(S_in, dtype=np.float64)
    Bl = np.ascontiguousarray(Bl, dtype=np.complex128)
    Br = np.ascontiguousarray(Br, dtype=np.complex128)
    U = np.ascontiguousarray(U, dtype=np.complex128)
    cdef double complex[:, :, ::1] bl = Bl
    cdef double complex[:, :, ::1] br = Br
    cdef double complex[:, ::1] u = U

    cdef double complex[::1] theta0 = np.empty(rows * cols, dtype=np.complex128)
    cdef double complex[::1] theta = np.empty(rows * cols, dtype=np.complex128)
    cdef double complex[::1] psi = np.empty(rows * cols, dtype=np.complex128)

    # Fortran view: theta0^T (cols x rows) = Br^T (cols x m) . Bl^T (m x rows)
    zgemm(nn, nn, &cols, &rows, &m, &one, &br[0, 0, 0], &cols, &bl[0, 0, 0], &m,
          &zero, &theta0[0], &cols)

    cdef Py_ssize_t x, y, i, j, base
    cdef double complex v0, v1, v2, v3
    for x in range(a):
        for y in range(b):
            base = x * 4 * b + y
            v0 = theta0[base]
            v1 = theta0[base + b]
            v2 = theta0[base + 2 * b]
            v3 = theta0[base + 3 * b]
            for i in range(4):
                theta[base + i * b] = u[i, 0] * v0 + u[i, 1] * v1 + u[i, 2] * v2 + u[i, 3] * v3
            for i in range(4):
                psi[base + i * b] = S[x] * theta[base + i * b]

    cdef double[::1] sv = np.empty(kk, dtype=np.float64)
    cdef double complex[::1] uf = np.empty(cols * kk, dtype=np.complex128)
    cdef double complex[::1] vtf = np.empty(kk * rows, dtype=np.complex128)
    cdef int mx = rows if rows > cols else cols
    cdef int lrwork = max(5 * kk * kk + 5 * kk, 2 * mx * kk + 2 * kk * kk + kk)
    cdef double[::1] rwork = np.empty(max(lrwork, 1), dtype=np.float64)
    cdef int[::1] iwork = np.empty(8 * kk, dtype=np.intc)
    cdef double complex wq
    cdef int lwork = -1, info = 0
    zgesdd(js, &cols, &rows, &psi[0], &cols, &sv[0], &uf[0], &cols, &vtf[0], &kk,
           &wq, &lwork, &rwork[0], &iwork[0], &info)
    lwork = <int>wq.real + 1
    cdef double complex[::1] work = np.empty(lwork, dtype=np.complex128)
    zgesdd(js, &cols, &rows, &psi[0], &cols, &sv[0], &uf[0], &cols, &vtf[0], &kk,
           &work[0], &lwork, &rwork[0], &iwork[0], &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgesdd failed with info={info}")

    cdef double total = 0.0, kept = 0.0
    cdef int k = 0
    for i in range(kk):
        total += sv[i] * sv[i]
        if sv[i] > cutoff * sv[0] and k < chi_max:
            k += 1
    if k < 1:
        k = 1
    for i in range(k):
        kept += sv[i] * sv[i]
    cdef double norm = sqrt(kept)

    # right factor rows = Fortran columns of uf (cols x kk)
    out_r = np.empty((k, 2, b), dtype=np.complex128)
    cdef double complex[:, :, ::1] r_new = out_r
    for i in range(k):
        for j in range(cols):
            r_new[i, j // b, j % b] = uf[i * cols + j]

    # Fortran: Bl_new^T (k x rows) = uf[:, :k]^H (k x cols) . theta^T (cols x rows)
    out_l = np.empty((a, 2, k), dtype=np.complex128)
    cdef double complex[:, :, ::1] l_new = out_l
    alpha = 1.0 / norm
    zgemm(cn, nn, &k, &rows, &cols, &alpha, &uf[0], &cols, &theta[0], &cols,
          &zero, &l_new[0, 0, 0], &k)

    out_s = np.empty(k, dtype=np.float64)
    cdef double[::1] s_new = out_s
    for i in range(k):
        s_new[i] = sv[i] / norm
    return out_l, out_s, out_r, (total - kept) / total, fabs(total - 1.0)
