"""Graded dimensions, Hilbert series and the finite resolution of the SO(3)
preprojective algebra A = paths / (images of e_i, u_i)."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .pathalg import Generators, _column_blocks, _lift_columns, jw_basis, path_space
from .qnum import make_context


# ---------------------------------------------------------------- dimensions

def _block_counts(g, S, K):
    H = np.zeros((g.n, g.n), dtype=int)
    if K.shape[1]:
        st, en = _column_blocks(S, K)
        np.add.at(H, (st, en), 1)
    return H


def graded_dim_direct(g, W, p, method="kernel", tol=1e-8, log=None):
    """dim of the degree-p part of A per block (x, y).

    ``method="span"`` ranks the stacked images of e_i, u_i blockwise (dense,
    small p only); ``method="kernel"`` uses the orthogonal complement, which is
    the range of the Jones-Wenzl projection, built recursively.
    """
    if p == 0:
        return np.eye(g.n, dtype=int)
    if method == "kernel":
        S, K = jw_basis(g, W, p, tol=tol)
        return _block_counts(g, S, K)
    S = path_space(g, p)
    H = np.zeros((g.n, g.n), dtype=int)
    G = Generators(g, None, W, p)
    ops = [G.e(i).M for i in range(1, p)] + [G.u(i).M for i in range(1, p)]
    for x in range(g.n):
        for y in range(g.n):
            idx = S.block(x, y)
            if not len(idx):
                continue
            if not ops:
                H[x, y] = len(idx)
                continue
            B = np.hstack([op[idx][:, idx].toarray() for op in ops])
            sv = np.linalg.svd(B, compute_uv=False)
            rank = int(np.sum(sv > tol * sv[0])) if len(sv) and sv[0] > 0 else 0
            if log is not None:
                gap = (sv[rank - 1], sv[rank] if rank < len(sv) else 0.0) if rank else (0.0, 0.0)
                log.append({"p": p, "block": (x, y), "rank": rank, "gap": gap})
            H[x, y] = len(idx) - rank
    return H


@dataclass
class HilbertSeries:
    graph: object
    coeffs: list
    max_degree: int
    deviation: float = 0.0
    notes: list = field(default_factory=list)


def hilbert_closed(g, ctx=None, max_degree=None, tol=1e-6):
    """Coefficients of (1+t)(1+t^{2m+1}) (I + (I - Delta) t + t^2)^{-1}."""
    ctx = ctx or make_context(g.m)
    m = ctx.m
    D = np.asarray(g.adjacency, dtype=float)
    I = np.eye(g.n)
    top = max_degree if max_degree is not None else 2 * m + 4
    num = {0: 1.0, 1: 1.0, 2 * m + 1: 1.0, 2 * m + 2: 1.0}
    H = []
    for p in range(top + 1):
        h = num.get(p, 0.0) * I
        if p >= 1:
            h = h - (I - D) @ H[p - 1]
        if p >= 2:
            h = h - H[p - 2]
        H.append(h)
    rounded = [np.rint(h).astype(int) for h in H]
    dev = max(float(np.max(np.abs(h - r))) for h, r in zip(H, rounded))
    if dev >= tol:
        raise ValueError(f"non-integral Hilbert coefficient (deviation {dev:.3g})")
    for p in range(2 * m + 3, top + 1):
        if np.any(rounded[p]):
            raise ValueError(f"series does not terminate: nonzero coefficient at degree {p}")
    return HilbertSeries(g, rounded, top, dev, ["denominator uses I - Delta"])


def fusion_matrices(g, top=None):
    """Nimrep matrices G_j of rho_j: G_0 = I, G_1 = Delta, G_{j+1} = Delta G_j - G_j - G_{j-1}."""
    D = np.asarray(g.adjacency, dtype=int)
    top = 2 * g.m if top is None else top
    G = [np.eye(g.n, dtype=int), D.copy()]
    while len(G) <= top:
        G.append(D @ G[-1] - G[-1] - G[-2])
    return G[:top + 1]


# ---------------------------------------------------------------- resolution

class _Bases:
    """Orthonormal coordinates for A_p (columns K_p) and A_p (x) V (lifts L_p)."""

    def __init__(self, g, W, top):
        self.g = g
        self.K = {}
        self.L = {}
        for p in range(top + 1):
            S, K = jw_basis(g, W, p)
            self.K[p] = sp.csr_matrix(K)
            self.L[p] = _lift_columns(g, self.K[p], p)

    def A(self, p):
        return self.K[p] if p in self.K else None

    def dimA(self, p):
        return self.K[p].shape[1] if 0 <= p and p in self.K else 0

    def dimAV(self, p):
        return self.L[p].shape[1] if 0 <= p and p in self.L else 0


def _merge_operator(g, W, n):
    """Y: paths_{n+1} -> paths_n merging the last two strands; Y* Y = u_n."""
    phi = g.phi
    Sn, S1 = path_space(g, n), path_space(g, n + 1)
    rows, cols, vals = [], [], []
    for i, (v, p) in enumerate(zip(S1.starts, S1.paths)):
        a1, a2 = p[-2], p[-1]
        x, z = g.s(a1), g.r(a2)
        for lam in g.edges_between(z, x):
            w = np.conj(W(a1, a2, lam)) / np.sqrt(phi[x] * phi[z])
            if w != 0:
                rows.append(Sn.find(v, p[:-2] + (g.rev(lam),)))
                cols.append(i)
                vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(Sn), len(S1)), dtype=complex)


def _cup_operator(g, n):
    """paths_n -> paths_{n+2}: append sum_b sqrt(phi_r(b)/phi_s(b)) b b~."""
    phi = g.phi
    Sn, S2 = path_space(g, n), path_space(g, n + 2)
    rows, cols, vals = [], [], []
    for i, (v, p) in enumerate(zip(Sn.starts, Sn.paths)):
        end = Sn.ends[i]
        for b in g.out_edges(end):
            rows.append(S2.find(v, p + (b, g.rev(b))))
            cols.append(i)
            vals.append(np.sqrt(phi[g.r(b)] / phi[end]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(S2), len(Sn)), dtype=complex)


def _vertex_vectors(g, B, m):
    """psi_v in A_{2m} coordinates (one column per vertex)."""
    K = B.K[2 * m]
    S = path_space(g, 2 * m)
    st, _ = _column_blocks(S, K)
    M = np.zeros((K.shape[1], g.n), dtype=complex)
    for v in range(g.n):
        cols = np.nonzero(st == v)[0]
        if len(cols) != 1:
            raise ValueError(f"A_2m is not one-dimensional at vertex {v}")
        M[cols[0], v] = 1.0
    return M


def resolution_maps(g, W, d, B=None):
    """Matrices of mu_0..mu_4 in total degree d, in orthonormal coordinates.

    Nodes: N0 = R, N1 = A, N2 = (A (x) V) + R[2m+1], N3 = R[2] + (A (x) V)[1],
    N4 = A[3], N5 = R[2m+3]; mu_i maps N_{i+1} -> N_i.
    """
    m = g.m
    B = B or _Bases(g, W, max(d, 2 * m))
    n = g.n
    r2m1 = n if d == 2 * m + 1 else 0
    r2 = n if d == 2 else 0
    r2m3 = n if d == 2 * m + 3 else 0
    dims = [n if d == 0 else 0, B.dimA(d), B.dimAV(d - 1) + r2m1, r2 + B.dimAV(d - 2),
            B.dimA(d - 3), r2m3]
    mu = [np.zeros((dims[i], dims[i + 1]), dtype=complex) for i in range(5)]

    if d == 0:
        mu[0][:] = np.eye(n)

    # mu_1: x (x) a -> xa in A_d; the R[2m+1] summand maps to zero
    if dims[1] and B.dimAV(d - 1):
        mu[1][:, :B.dimAV(d - 1)] = (B.K[d].conj().T @ B.L[d - 1]).toarray()

    # mu_2 on R[2]: v -> cup at v in A_1 (x) V
    if r2 and B.dimAV(1):
        cup = _cup_operator(g, 0)
        mu[2][:B.dimAV(1), :n] = (B.L[1].conj().T @ cup).toarray()
    # mu_2 on (A_j (x) V)[1], j = d - 2: split of xa plus merge-then-cup
    j = d - 2
    if j >= 0 and B.dimAV(j):
        z = B.L[j]  # path vectors of the basis, degree j+1
        col0 = r2
        block = np.zeros((dims[2], B.dimAV(j)), dtype=complex)
        if B.dimAV(j + 1):
            P = B.K[j + 1] @ (B.K[j + 1].conj().T @ z)  # project xa into A_{j+1}
            split = _merge_operator(g, W, j + 1).conj().T @ P
            block[:B.dimAV(j + 1)] += (B.L[j + 1].conj().T @ split).toarray()
            if j >= 1:
                merged = B.K[j] @ (B.K[j].conj().T @ (_merge_operator(g, W, j) @ z))
                withcup = _cup_operator(g, j) @ merged
                block[:B.dimAV(j + 1)] += (B.L[j + 1].conj().T @ withcup).toarray()
        if r2m1:
            psi = _vertex_vectors(g, B, m)
            coords = (B.K[2 * m].conj().T @ z).toarray()
            block[B.dimAV(d - 1):] = psi.conj().T @ coords
        mu[2][:, col0:] = block

    # mu_3: x in A_{d-3} -> sum_b sqrt(phi) xb (x) b~ in (A_{d-2} (x) V)[1]
    if dims[4] and B.dimAV(d - 2):
        x = B.K[d - 3]
        mu[3][r2:, :] = (B.L[d - 2].conj().T @ (_cup_operator(g, d - 3) @ x)).toarray()

    # mu_4: v -> psi_v in A_{2m}
    if r2m3:
        mu[4][:] = _vertex_vectors(g, B, m)
    return dims, mu


def resolution_check(g, W, max_degree=None, tol=1e-8):
    """Composites mu_i mu_{i+1} and exactness at every node, degree by degree."""
    m = g.m
    top = 2 * m + 3 if max_degree is None else max_degree
    B = _Bases(g, W, max(top, 2 * m))
    report = {"composite": 0.0, "exact": True, "failures": [], "euler": []}
    for d in range(top + 1):
        dims, mu = resolution_maps(g, W, d, B)
        ranks = []
        for i, M in enumerate(mu):
            if M.size:
                sv = np.linalg.svd(M, compute_uv=False)
                ranks.append(int(np.sum(sv > tol * max(1.0, sv[0]))))
            else:
                ranks.append(0)
        for i in range(4):
            if mu[i].size and mu[i + 1].size:
                c = float(np.max(np.abs(mu[i] @ mu[i + 1])))
                report["composite"] = max(report["composite"], c)
                if c > tol:
                    report["failures"].append({"degree": d, "composite": i, "value": c})
        # node k: kernel of outgoing mu_{k-1} equals image of incoming mu_k
        for k in range(6):
            out_rank = ranks[k - 1] if k >= 1 else 0
            in_rank = ranks[k] if k <= 4 else 0
            if dims[k] - out_rank != in_rank:
                report["exact"] = False
                report["failures"].append({"degree": d, "node": k, "dim": dims[k],
                                           "rank_out": out_rank, "rank_in": in_rank})
        report["euler"].append(sum((-1) ** k * dims[k] for k in range(6)))
    return report
