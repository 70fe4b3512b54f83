"""Cyclic Jacobi eigendecomposition for dense complex Hermitian matrices.

Rotations are scheduled round-robin so that each step annihilates n/2
disjoint off-diagonal pairs at once; disjoint rotations commute, so a step is
applied as one vectorized column update followed by one row update.
"""

import numpy as np

from ._validation import check_hermitian

MAX_SWEEPS = 60


def _round_robin(n):
    """Rounds of disjoint index pairs covering every (p, q) once (circle method)."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(a):
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return np.linalg.norm(off)


def hermitian_eig(m, tol=1e-12, hermitian_rtol=1e-10):
    """Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.

    Iterates until the off-diagonal Frobenius norm drops below
    ``tol * ||m||_F``. Returns ``(values, vectors)`` with ``vectors[:, i]``
    belonging to ``values[i]``.
    """
    a = check_hermitian(m, "m", hermitian_rtol).copy()
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    threshold = tol * np.linalg.norm(a)
    rounds = _round_robin(n)

    for _ in range(MAX_SWEEPS):
        if _off_norm(a) <= threshold:
            break
        for p, q in rounds:
            app = a[p, p].real
            aqq = a[q, q].real
            apq = a[p, q]
            mag = np.abs(apq)
            phase = np.exp(-1j * np.angle(apq))
            theta = 0.5 * np.arctan2(2.0 * mag, aqq - app)
            c = np.cos(theta)
            s = np.sin(theta)
            # G = diag(1, e^{-i phi}) @ [[c, s], [-s, c]]
            g00, g01, g10, g11 = c, s, -s * phase, c * phase

            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * g00 + cq * g10
            a[:, q] = cp * g01 + cq * g11
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = np.conj(g00)[:, None] * rp + np.conj(g10)[:, None] * rq
            a[q, :] = np.conj(g01)[:, None] * rp + np.conj(g11)[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * g00 + vq * g10
            v[:, q] = vp * g01 + vq * g11
    else:
        if _off_norm(a) > threshold:
            raise RuntimeError(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")

    values = np.real(np.diag(a)).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]
