"""SO(3)_{2m} modular data, Verlinde fusion, branching and modular invariants."""

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .nimrep import exponents
from .qnum import qint, qpow

VERLINDE_TOL = 1e-6


@dataclass
class ModularData:
    m: int
    labels: list
    dims: np.ndarray
    Y: np.ndarray
    omega: np.ndarray
    sigma: complex
    S: np.ndarray
    T: np.ndarray

    @property
    def rank(self):
        return len(self.labels)

    @property
    def vacuum(self):
        return 0


@dataclass
class ModularInvariant:
    Z: np.ndarray
    name: str = ""


def labels_for(m):
    return [f"rho{j}" for j in range(m)] + ["Q+", "Q-"]


def y_matrix(ctx):
    m = ctx.m
    Q = lambda n: qint(ctx, n)
    Y = np.zeros((m + 2, m + 2), dtype=complex)
    for i in range(m):
        for j in range(m):
            Y[i, j] = Q((2 * i + 1) * (2 * j + 1))
        Y[i, m] = Y[i, m + 1] = Y[m, i] = Y[m + 1, i] = 0.5 * Q((2 * i + 1) * (2 * m + 1))
    for a, e1 in ((m, 1), (m + 1, -1)):
        for b, e2 in ((m, 1), (m + 1, -1)):
            Y[a, b] = Q(2 * m + 1) / 4 * ((-1) ** m + e1 * e2 * 1j ** m * np.sqrt(2 * m + 1))
    return Y


def modular_data(ctx):
    m = ctx.m
    Q = lambda n: qint(ctx, n)
    dims = np.array([Q(2 * j + 1) for j in range(m)] + [Q(2 * m + 1) / 2] * 2)
    # twists q^{-2j(j+1)} taken at q^{-1}: the Q_+- entries of Y fix the orientation
    omega = np.array([qpow(ctx, 2 * j * (j + 1)) for j in range(m)]
                     + [qpow(ctx, 2 * m * (m + 1))] * 2)
    Y = y_matrix(ctx)
    sigma = complex(np.sum(dims ** 2 / omega))
    S = Y / abs(sigma)
    if np.max(np.abs(S @ S.conj().T - np.eye(m + 2))) > ctx.tol:
        raise ValueError(f"S is not unitary at m={m}")
    phase = sigma / abs(sigma)
    for k in range(3):
        root = np.exp(1j * (np.angle(phase) + 2 * np.pi * k) / 3)
        T = root * np.diag(omega)
        ST = S @ T
        if np.max(np.abs(ST @ ST @ ST - S @ S)) < ctx.tol:
            break
    else:
        raise ValueError(f"no cube-root branch gives (ST)^3 = S^2 at m={m}")
    return ModularData(m, labels_for(m), dims, Y, omega, sigma, S, T)


def charge_conjugation(md):
    return np.rint((md.S @ md.S).real).astype(int)


def verlinde(md, tol=VERLINDE_TOL):
    """N[l][mu, nu] = N_{l mu}^nu from the Verlinde formula."""
    S = md.S
    s0 = S[0]
    N = np.einsum("ls,ms,ns,s->lmn", S, S, S.conj(), 1 / s0)
    err = np.max(np.abs(N - np.rint(N.real)))
    if err >= tol:
        raise ValueError(f"Verlinde coefficients not integral (deviation {err:.3g})")
    N = np.rint(N.real).astype(int)
    if (N < 0).any():
        raise ValueError("negative fusion coefficient")
    return [N[l] for l in range(md.rank)]


def rho_fusion(N, m, j):
    """N_{rho_j} for j <= m; rho_m is not simple and splits as Q_+ + Q_-."""
    if j < m:
        return N[j]
    if j == m:
        return N[m] + N[m + 1]
    raise ValueError(f"rho_{j} is not among rho_0..rho_m")


def su2_modular_data(k, conjugate=False):
    """Level-k SU(2) Kac-Peterson S and T; conjugate=True flips the orientation."""
    a = np.arange(k + 1)
    S = np.sqrt(2 / (k + 2)) * np.sin(np.outer(a + 1, a + 1) * np.pi / (k + 2))
    h = a * (a + 2) / (4 * (k + 2))
    c = 3 * k / (k + 2)
    sign = -1 if conjugate else 1
    T = np.diag(np.exp(sign * 2j * np.pi * (h - c / 24)))
    return S, T


def branching(ctx):
    m = ctx.m
    b = np.zeros((m + 2, 4 * m + 1), dtype=int)
    for j in range(m):
        b[j, 2 * j] = 1
        b[j, 4 * m - 2 * j] = 1
    b[m, 2 * m] = b[m + 1, 2 * m] = 1
    return b


def branching_residual(ctx, md=None):
    md = md or modular_data(ctx)
    b = branching(ctx)
    S2, T2 = su2_modular_data(4 * ctx.m)
    rs = np.max(np.abs(md.S @ b - b @ S2))
    rt = np.max(np.abs(md.T @ b - b @ T2))
    return float(rs), float(rt)


def commutant_basis(md, tol=1e-9):
    """Real basis of {Z : ZS = SZ, ZT = TZ}, as (dim, n*n) rows in RREF."""
    n = md.rank
    I = np.eye(n)
    rows = []
    for M in (md.S, md.T):
        # vec(ZM - MZ) = (M^T kron I - I kron M) vec(Z), column-major vec
        K = np.kron(M.T, I) - np.kron(I, M)
        rows += [K.real, K.imag]
    A = np.vstack(rows)
    null = scipy.linalg.null_space(A, rcond=tol)
    return null  # columns span the commutant (column-major vec of Z)


def _rref(B, tol=1e-9):
    """Reduced row echelon form of the rows of B; returns (R, pivots)."""
    R = np.array(B, dtype=float)
    pivots = []
    r = 0
    for c in range(R.shape[1]):
        if r == R.shape[0]:
            break
        p = r + np.argmax(np.abs(R[r:, c]))
        if abs(R[p, c]) < tol:
            continue
        R[[r, p]] = R[[p, r]]
        R[r] /= R[r, c]
        for i in range(R.shape[0]):
            if i != r:
                R[i] -= R[i, c] * R[r]
        pivots.append(c)
        r += 1
    return R[:r], pivots


def classify_invariants(md, entry_bound=4, tol=1e-6):
    """All non-negative integer Z in the commutant with Z_00 = 1 and entries <= bound.

    The commutant is parameterized by its pivot entries (RREF of the basis), so
    every entry of Z is a linear function of those few coordinates and each
    coordinate ranges over 0..entry_bound.
    """
    n = md.rank
    null = commutant_basis(md)
    R, pivots = _rref(null.T)
    # Z_vec = sum_k c_k R[k] with c_k = Z_vec[pivots[k]]
    found = []
    vac = 0  # index of Z_00 in column-major vec
    ranges = []
    for k, p in enumerate(pivots):
        ranges.append([1] if p == vac else range(entry_bound + 1))
    if vac not in pivots and np.allclose(R[:, vac], 0):
        return []
    for coeffs in itertools.product(*ranges):
        z = np.asarray(coeffs, float) @ R
        zi = np.rint(z)
        if np.max(np.abs(z - zi)) > tol or zi.min() < 0 or zi.max() > entry_bound:
            continue
        if zi[vac] != 1:
            continue
        Z = zi.reshape(n, n, order="F").astype(int)
        found.append(Z)
    found.sort(key=lambda Z: tuple(Z.ravel()))
    return [ModularInvariant(Z, name=name_invariant(Z, md.m)) for Z in found]


def invariant_classes(invs, m):
    """Group invariants under Q+ <-> Q- relabeling and transposition."""
    P = np.eye(m + 2, dtype=int)
    P[[m, m + 1]] = P[[m + 1, m]]
    classes = []
    for inv in invs:
        orbit = {tuple(X.ravel()) for X in (inv.Z, inv.Z.T, P @ inv.Z @ P, (P @ inv.Z @ P).T)}
        for cls in classes:
            if tuple(cls[0].Z.ravel()) in orbit:
                cls.append(inv)
                break
        else:
            classes.append([inv])
    return classes


def known_invariant(name, ctx):
    """Z from the quadratic forms; Z[j, k] is the coefficient of chi_j conj(chi_k)."""
    m = ctx.m
    n = m + 2
    Z = np.zeros((n, n), dtype=int)
    p, mn = m, m + 1
    if name == "A":
        Z = np.eye(n, dtype=int)
    elif name == "Sigma":
        Z = np.eye(n, dtype=int)
        Z[p, p] = Z[mn, mn] = 0
        Z[p, mn] = Z[mn, p] = 1
    elif name in ("E8", "E8c"):
        if m != 4:
            raise ValueError(f"{name} requires m=4")
        for j in (0, 2, 3):
            Z[j, j] = 1
        if name == "E8":
            Z[mn, mn] = 1
            Z[1, p] = Z[p, 1] = 1
        else:
            Z[1, mn] = Z[mn, p] = Z[p, 1] = 1
    elif name in ("E14", "E14c"):
        if m != 7:
            raise ValueError(f"{name} requires m=7")
        for blk in ((0, 5), (3, 6)):
            for a in blk:
                for b in blk:
                    Z[a, b] = 1
    else:
        raise ValueError(f"unknown invariant {name!r}")
    return ModularInvariant(Z, name)


def name_invariant(Z, m):
    from .qnum import make_context
    ctx = make_context(m)
    names = ["A", "Sigma"] + (["E8", "E8c"] if m == 4 else []) + (["E14"] if m == 7 else [])
    for nm in names:
        if np.array_equal(known_invariant(nm, ctx).Z, Z):
            return nm
    return ""


def abc_label(Z, m):
    """(Z_{rho1,Q+}, Z_{Q+,rho1}, Z_{Q+,Q+}) labelling of the level-8 E-type invariants."""
    return int(Z[1, m]), int(Z[m, 1]), int(Z[m, m])


def invariant_exponents(Z, m):
    """Multiset of exponents read off the diagonal; Q_+- carry exponent m+1."""
    from collections import Counter
    c = Counter()
    for j in range(m + 2):
        e = j + 1 if j < m else m + 1
        if Z[j, j]:
            c[e] += int(Z[j, j])
    return c


def match_nimrep(g, inv):
    return exponents(g) == invariant_exponents(inv.Z, g.m)


def commutes(md, Z, tol=1e-9):
    Z = np.asarray(Z, dtype=complex)
    return max(np.max(np.abs(Z @ md.S - md.S @ Z)), np.max(np.abs(Z @ md.T - md.T @ Z))) < tol
