"""Pure numpy versions of the compiled kernels (same signatures, same results)."""
import numpy as np


def _rhs(x, y, z, t, h, J, lam, omega, frozen):
    c = 0.5 if frozen else np.cos(0.5 * omega * t) ** 2
    gx = -h * c
    gy = lam
    gz = lam - 2.0 * J * z
    return 2.0 * (gy * z - gz * y), 2.0 * (gz * x - gx * z), 2.0 * (gx * y - gy * x)


def rk4_bloch(X, Y, Z, t0, step, n_steps, record_every, h, J, lam, omega, frozen, out):
    s = np.stack([X, Y, Z]).astype(float)
    out[:, 0, :] = s.T
    half = 0.5 * step
    col = 1
    for i in range(n_steps):
        t = t0 + i * step
        k1 = np.array(_rhs(*s, t, h, J, lam, omega, frozen))
        k2 = np.array(_rhs(*(s + half * k1), t + half, h, J, lam, omega, frozen))
        k3 = np.array(_rhs(*(s + half * k2), t + half, h, J, lam, omega, frozen))
        k4 = np.array(_rhs(*(s + step * k3), t + step, h, J, lam, omega, frozen))
        s = s + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % record_every == 0:
            out[:, col, :] = s.T
            col += 1
    X[:], Y[:], Z[:] = s


def two_site_update(Bl, Br, S, U, chi_max, cutoff):
    a, _, m = Bl.shape
    b = Br.shape[2]
    theta = (Bl.reshape(2 * a, m) @ Br.reshape(m, 2 * b)).reshape(a, 4, b)
    theta = np.einsum("ij,ajb->aib", U, theta).reshape(2 * a, 2 * b)
    psi = (S[:, None, None] * theta.reshape(a, 2, 2 * b)).reshape(2 * a, 2 * b)
    _, sv, right = np.linalg.svd(psi, full_matrices=False)
    total = float(np.sum(sv**2))
    k = int(np.count_nonzero(sv > cutoff * sv[0]))
    k = max(1, min(k, chi_max))
    kept = float(np.sum(sv[:k] ** 2))
    norm = np.sqrt(kept)
    r_new = right[:k]
    l_new = theta @ r_new.conj().T / norm
    return (
        l_new.reshape(a, 2, k),
        sv[:k] / norm,
        np.ascontiguousarray(r_new).reshape(k, 2, b),
        (total - kept) / total,
        abs(total - 1.0),
    )
