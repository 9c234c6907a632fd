"""Path-algebra representation of the SO(3) Temperley-Lieb generators.

Operators of degree n act on the span of all length-n edge paths of a nimrep
graph. A matrix unit (alpha, beta) is stored as ``M[alpha, beta]`` so that
operator products are matrix products. Every operator built here pairs only
paths with equal endpoints, so the matrices are block diagonal over (s, r).
"""

from dataclasses import dataclass
import numpy as np
import scipy.sparse as sp

from .cells import RelationSystem
from .qnum import make_context, qint


# ---------------------------------------------------------------- paths

class PathSpace:
    """All length-n paths on g, from every start vertex."""

    def __init__(self, g, n):
        self.graph = g
        self.n = n
        paths = [(v, ()) for v in range(g.n)]
        for _ in range(n):
            paths = [(v, p + (e,)) for v, p in paths
                     for e in g.out_edges(g.r(p[-1]) if p else v)]
        self.starts = np.array([v for v, _ in paths], dtype=int)
        self.paths = [p for _, p in paths]
        self.ends = np.array([g.r(p[-1]) if p else v for v, p in paths], dtype=int)
        self.index = {(v, p): i for i, (v, p) in enumerate(paths)}
        # number of one-edge extensions of each path; extensions are contiguous
        # and ordered like out_edges(end), so extending by k edges keeps prefixes grouped
        self.out_degree = np.array([len(g.out_edges(r)) for r in self.ends], dtype=int)

    def __len__(self):
        return len(self.paths)

    def find(self, start, path):
        return self.index[(start, tuple(path))]

    def block(self, s, r):
        return np.nonzero((self.starts == s) & (self.ends == r))[0]

    def weights(self):
        """phi_r / phi_s for each path."""
        phi = self.graph.phi
        return phi[self.ends] / phi[self.starts]


_SPACES = {}


def path_space(g, n):
    key = (id(g), n)
    if key not in _SPACES or _SPACES[key].graph is not g:
        _SPACES[key] = PathSpace(g, n)
    return _SPACES[key]


@dataclass
class PathOperator:
    space: PathSpace
    M: sp.csr_matrix

    @property
    def degree(self):
        return self.space.n

    @property
    def graph(self):
        return self.space.graph

    def __matmul__(self, other):
        return PathOperator(self.space, (self.M @ other.M).tocsr())

    def __add__(self, other):
        return PathOperator(self.space, (self.M + other.M).tocsr())

    def __sub__(self, other):
        return PathOperator(self.space, (self.M - other.M).tocsr())

    def __mul__(self, c):
        return PathOperator(self.space, (self.M * c).tocsr())

    __rmul__ = __mul__

    def adjoint(self):
        return PathOperator(self.space, self.M.conj().T.tocsr())

    def dense(self):
        return self.M.toarray()

    def blocks(self):
        """{(s, r): dense block} over non-empty endpoint pairs."""
        S = self.space
        out = {}
        for s in range(S.graph.n):
            for r in range(S.graph.n):
                idx = S.block(s, r)
                if len(idx):
                    out[(s, r)] = self.M[idx][:, idx].toarray()
        return out

    def respects_blocks(self):
        S = self.space
        C = self.M.tocoo()
        return bool(np.all(S.starts[C.row] == S.starts[C.col]) and np.all(S.ends[C.row] == S.ends[C.col]))

    def norm(self):
        """Largest singular value (computed blockwise)."""
        return max((np.linalg.norm(B, 2) for B in self.blocks().values()), default=0.0)

    def max_abs(self):
        return float(np.max(np.abs(self.M.data), initial=0.0))


def identity(g, n):
    S = path_space(g, n)
    return PathOperator(S, sp.identity(len(S), dtype=complex, format="csr"))


def _local_operator(g, j, n, local):
    """Embed a two-edge operator at strands j, j+1 of degree n (1-indexed).

    ``local`` maps an edge pair (f1, f2) to a list of ((e1, e2), coef) giving
    column (f1, f2) of the local matrix.
    """
    if not 1 <= j <= n - 1:
        raise IndexError(f"strand position {j} out of range for degree {n}")
    S = path_space(g, n)
    rows, cols, vals = [], [], []
    for i, (v, p) in enumerate(zip(S.starts, S.paths)):
        pre, mid, post = p[:j - 1], p[j - 1:j + 1], p[j + 1:]
        for new, c in local.get(mid, ()):
            rows.append(S.find(v, pre + new + post))
            cols.append(i)
            vals.append(c)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(len(S), len(S)), dtype=complex)
    return PathOperator(S, M)


def _extension_offsets(g, n, k):
    """Start index and count of the degree n+k extensions of every degree-n path."""
    counts = np.ones(len(path_space(g, n)), dtype=int)
    for i in range(k):
        S = path_space(g, n + i)
        # each path at level n+i extends to out_degree paths; aggregate per prefix
        per = S.out_degree
        prefix = np.repeat(np.arange(len(counts)), counts)
        counts = np.bincount(prefix, weights=per, minlength=len(counts)).astype(int)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return offsets, counts


def tensor_identity(x, k):
    """x (x) 1_k: act with x on the first strands of a degree n + k path."""
    g = x.graph
    T = path_space(g, x.degree + k)
    off, cnt = _extension_offsets(g, x.degree, k)
    C = x.M.tocoo()
    reps = cnt[C.col]
    shift = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
    rows = np.repeat(off[C.row], reps) + shift
    cols = np.repeat(off[C.col], reps) + shift
    vals = np.repeat(C.data, reps)
    return PathOperator(T, sp.csr_matrix((vals, (rows, cols)), shape=(len(T), len(T)), dtype=complex))


# ---------------------------------------------------------------- generators

def _e_local(g, E=None):
    phi = g.phi
    loc = {}
    for x in range(g.n):
        outs = g.out_edges(x)
        for g_ in outs:
            col = (g_, g.rev(g_))
            loc[col] = [((b, g.rev(b)), np.sqrt(phi[g.r(b)] * phi[g.r(g_)]) / phi[x]) for b in outs]
    return loc


def e_op(g, E, j, n):
    """Temperley-Lieb cup-cap at strands j, j+1 of degree n (canonical forms)."""
    return _local_operator(g, j, n, _e_local(g, E))


def _u_local(g, W):
    phi = g.phi
    loc = {}
    for x in range(g.n):
        for z in range(g.n):
            pairs = [(a, b) for a in g.out_edges(x) for b in g.out_edges(g.r(a)) if g.r(b) == z]
            lams = g.edges_between(z, x)
            if not pairs or not lams:
                continue
            A = np.array([[W(a, b, l) for l in lams] for a, b in pairs])
            U = A @ A.conj().T / (phi[x] * phi[z])
            for jc, col in enumerate(pairs):
                loc[col] = [(row, U[ir, jc]) for ir, row in enumerate(pairs) if abs(U[ir, jc]) > 0]
    return loc


def u_op(g, W, j, n, check=True, tol=1e-8):
    """Trivalent projection at strands j, j+1 of degree n."""
    if check:
        rs = RelationSystem(g)
        worst = max(rs.max_residuals(W.vector(rs.keys)).values())
        if worst > tol:
            raise ValueError(f"cell system fails the relations (residual {worst:.3g})")
    return _local_operator(g, j, n, _u_local(g, W))


class Generators:
    """Cached e_i, u_i at a fixed degree."""

    def __init__(self, g, E, W, n):
        self.g, self.E, self.W, self.n = g, E, W, n
        self._e, self._u = {}, {}
        self._eloc = _e_local(g, E)
        self._uloc = _u_local(g, W) if W is not None else None

    def e(self, i):
        if i not in self._e:
            self._e[i] = _local_operator(self.g, i, self.n, self._eloc)
        return self._e[i]

    def u(self, i):
        if i not in self._u:
            self._u[i] = _local_operator(self.g, i, self.n, self._uloc)
        return self._u[i]

    def one(self):
        return identity(self.g, self.n)


# ---------------------------------------------------------------- traces

@dataclass
class TraceFunctional:
    graph: object
    mode: str = "A"  # "A": normalised, "Aj": scaled by [3]^j

    def __call__(self, x, vertex=None):
        S = x.space
        w = S.weights()
        if self.mode == "A":
            w = w * _three(self.graph) ** (-S.n)
        d = x.M.diagonal()
        if vertex is not None:
            d = np.where(S.starts == vertex, d, 0)
        return complex(np.sum(d * w))


def trace(t, x, vertex=None):
    return t(x, vertex)


def _three(g):
    return qint(make_context(g.m), 3)


def markov_check(g, E, depth):
    """max |tr_A((x (x) 1) e_j) - tr_A(x)/[3]| over all matrix units x of A_j, j < depth."""
    three = _three(g)
    worst = 0.0
    for j in range(1, depth):
        Sj, S = path_space(g, j), path_space(g, j + 1)
        e = e_op(g, E, j, j + 1).M.tocoo()
        w = S.weights() * three ** (-(j + 1))
        M = np.zeros((len(Sj), len(Sj)), dtype=complex)
        # entry (pi2, pi1) of e_j contributes to x = (alpha1, alpha2) when the last edges agree
        keep = [S.paths[r][-1] == S.paths[c][-1] for r, c in zip(e.row, e.col)]
        for r, c, val, k in zip(e.row, e.col, e.data, keep):
            if k:
                a2 = Sj.find(S.starts[r], S.paths[r][:-1])
                a1 = Sj.find(S.starts[c], S.paths[c][:-1])
                M[a2, a1] += val * w[c]
        expect = np.diag(Sj.weights() * three ** (-j)) / three
        worst = max(worst, float(np.max(np.abs(M - expect))))
    return {"markov": worst, "depth": depth}


# ---------------------------------------------------------------- Jones-Wenzl

def jw_coefficients(ctx, i):
    """Coefficients of P e_i P and P u_i P in the step f_i -> f_{i+1}."""
    Q = lambda k: qint(ctx, k)
    den = Q(2 * i + 2)
    if abs(den) < ctx.tol or abs(Q(2 * i + 1)) < ctx.tol:
        raise ZeroDivisionError(f"JW recursion coefficient blows up at index {i}")
    return Q(4 * i) / (Q(2 * i + 1) * den), Q(4) * Q(2 * i) / (Q(2) * den)


def jw(g, W, j, E=None):
    """F(f_j) in degree j built by the displayed recursion."""
    ctx = make_context(g.m)
    if not 0 <= j <= 2 * g.m:
        raise ValueError(f"JW index {j} outside 0..{2 * g.m}")
    f = identity(g, 0)
    for i in range(1, j):
        if i == 1:
            f = identity(g, 1)
        P = tensor_identity(f, 1)
        gens = Generators(g, E, W, i + 1)
        a, b = jw_coefficients(ctx, i)
        f = P - a * (P @ gens.e(i) @ P) - b * (P @ gens.u(i) @ P)
    if j == 1:
        f = identity(g, 1)
    return f


def jw_basis(g, W, j, E=None, tol=1e-8):
    """Orthonormal basis (columns) of the range of F(f_j), by recursive kernels.

    range f_{i+1} = kernel of e_i and u_i restricted to range(f_i) (x) edges,
    which keeps every linear-algebra step at the size of the multiplicity
    spaces rather than the full path space.
    """
    K = sp.identity(len(path_space(g, min(j, 1))), dtype=complex, format="csr")
    if j <= 1:
        return path_space(g, j), K.toarray()
    uloc, eloc = _u_local(g, W), _e_local(g, E)
    for i in range(1, j):
        S = path_space(g, i + 1)
        lifted = _lift_columns(g, K, i)
        Ae = (_local_operator(g, i, i + 1, eloc).M @ lifted).tocsc()
        Au = (_local_operator(g, i, i + 1, uloc).M @ lifted).tocsc()
        # null space of [e; u] within each start/end block
        cols = []
        starts, ends = _column_blocks(S, lifted)
        for key in sorted(set(zip(starts, ends))):
            idx = np.nonzero((starts == key[0]) & (ends == key[1]))[0]
            rws = S.block(*key)
            sub = np.vstack([Ae[:, idx][rws].toarray(), Au[:, idx][rws].toarray()])
            # only Vh is needed; the reduced form is complete when rows >= cols
            _, sv, Vh = np.linalg.svd(sub, full_matrices=sub.shape[0] < sub.shape[1])
            rank = int(np.sum(sv > tol * max(1.0, sv[0] if len(sv) else 1.0)))
            N = Vh[rank:].conj().T
            if N.shape[1]:
                cols.append((idx, N))
        nc = sum(N.shape[1] for _, N in cols)
        B = np.zeros((lifted.shape[1], nc), dtype=complex)
        k = 0
        for idx, N in cols:
            B[idx, k:k + N.shape[1]] = N
            k += N.shape[1]
        K = sp.csr_matrix(lifted @ B)
    return path_space(g, j), K.toarray()


def _lift_columns(g, K, i):
    """Columns of K (degree i) extended by each possible next edge."""
    S = path_space(g, i)
    off, cnt = _extension_offsets(g, i, 1)
    K = sp.csc_matrix(K)
    T = path_space(g, i + 1)
    rows, cols, vals = [], [], []
    nc = 0
    for c in range(K.shape[1]):
        lo, hi = K.indptr[c], K.indptr[c + 1]
        if lo == hi:
            continue
        r, d = K.indices[lo:hi], K.data[lo:hi]
        for t in range(cnt[r[0]]):
            rows.append(off[r] + t)
            cols.append(np.full(len(r), nc))
            vals.append(d)
            nc += 1
    if not rows:
        return sp.csr_matrix((len(T), 0), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(len(T), nc), dtype=complex)


def _column_blocks(S, X):
    X = sp.csc_matrix(X)
    starts, ends = [], []
    for c in range(X.shape[1]):
        r = X.indices[X.indptr[c]]
        starts.append(S.starts[r])
        ends.append(S.ends[r])
    return np.array(starts), np.array(ends)


def jw_projection(g, W, j, E=None):
    """F(f_j) = K K* from the recursive kernel basis."""
    S, K = jw_basis(g, W, j, E)
    return PathOperator(S, sp.csr_matrix(K @ K.conj().T))


def jw_kernel_direct(g, W, j, E=None, tol=1e-8):
    """Oracle: projection onto the common kernel of all e_i, u_i in degree j."""
    S = path_space(g, j)
    if j <= 1:
        return identity(g, j)
    gens = Generators(g, E, W, j)
    A = sp.vstack([gens.e(i).M for i in range(1, j)] + [gens.u(i).M for i in range(1, j)]).toarray()
    _, sv, Vh = np.linalg.svd(A)
    rank = int(np.sum(sv > tol * sv[0]))
    N = Vh[rank:].conj().T
    return PathOperator(S, sp.csr_matrix(N @ N.conj().T))


def jw_vertex_traces(g, W, j, E=None):
    """tr_{A_j}(e_v F(f_j)) for every vertex v."""
    S, K = jw_basis(g, W, j, E)
    d = np.sum(np.abs(K) ** 2, axis=1) * S.weights()
    return np.array([np.sum(d[S.starts == v]) for v in range(g.n)])


def jw_vertex_ranks(g, W, j, E=None):
    S, K = jw_basis(g, W, j, E)
    st, _ = _column_blocks(S, K) if K.shape[1] else (np.array([], int), None)
    return np.array([int(np.sum(st == v)) for v in range(g.n)])


# ---------------------------------------------------------------- relations

def tl_relations(g, E, W, n):
    """Max residual of each SO(3)-TL relation at degree n."""
    ctx = make_context(g.m)
    Q = lambda k: qint(ctx, k)
    G = Generators(g, E, W, n)
    one = G.one()
    r = {}

    def upd(name, x):
        r[name] = max(r.get(name, 0.0), x.max_abs())

    c24, c6 = Q(2) / Q(4), Q(6) / (Q(3) * Q(4))
    c5 = (Q(6) - Q(2) * Q(3)) / (Q(3) * Q(4))
    for i in range(1, n):
        e, u = G.e(i), G.u(i)
        upd("e^2=[3]e", e @ e - Q(3) * e)
        upd("u^2=u", u @ u - u)
        upd("ue=0", u @ e)
        upd("eu=0", e @ u)
        upd("self-adjoint", (e - e.adjoint()) + 0 * one)
        upd("self-adjoint", u - u.adjoint())
        for k in range(i + 2, n):
            upd("far commute", G.e(i) @ G.e(k) - G.e(k) @ G.e(i))
            upd("far commute", G.u(i) @ G.u(k) - G.u(k) @ G.u(i))
            upd("far commute", G.u(i) @ G.e(k) - G.e(k) @ G.u(i))
            upd("far commute", G.e(i) @ G.u(k) - G.u(k) @ G.e(i))
        for k in (i - 1, i + 1):
            if not 1 <= k < n:
                continue
            upd("eee=e", e @ G.e(k) @ e - e)
            upd("eue=e", e @ G.u(k) @ e - e)
            upd("uue", u @ G.u(k) @ e - c6 * (u @ G.e(k) @ e))  # multiplied out: [6] = 0 at m = 1
        if i + 1 < n:
            e1, u1 = G.e(i + 1), G.u(i + 1)
            upd("uue", u @ e1 @ e - (u1 @ e + c24 * (e1 @ e - e)))
            lhs = u @ e1 @ u - c24 * (u @ e1 + e1 @ u) + c24 ** 2 * e1
            rhs = u1 @ e @ u1 - c24 * (u1 @ e + e @ u1) + c24 ** 2 * e
            upd("ueu exchange", lhs - rhs)
            lhs = u @ u1 @ u - c5 * (u @ e1 @ u) - c24 ** 2 * u
            rhs = u1 @ u @ u1 - c5 * (u1 @ e @ u1) - c24 ** 2 * u1
            upd("uuu exchange", lhs - rhs)
    return r


# ---------------------------------------------------------------- BMW image

def bmw_g(g, W, i, n, E=None):
    q = make_context(g.m).q
    G = Generators(g, E, W, n)
    return q ** 2 * G.one() + (q ** -2 - 1) * G.e(i) - (q ** 2 + q ** -2) * G.u(i)


def bmw_relations(g, W, n, E=None):
    q = make_context(g.m).q
    G = Generators(g, E, W, n)
    gs = {i: q ** 2 * G.one() + (q ** -2 - 1) * G.e(i) - (q ** 2 + q ** -2) * G.u(i)
          for i in range(1, n)}
    r = {"braid": 0.0, "ge=q^-4e": 0.0, "far commute": 0.0}
    for i in range(1, n):
        e = G.e(i)
        r["ge=q^-4e"] = max(r["ge=q^-4e"], (gs[i] @ e - q ** -4 * e).max_abs(),
                            (e @ gs[i] - q ** -4 * e).max_abs())
        if i + 1 < n:
            a, b = gs[i], gs[i + 1]
            r["braid"] = max(r["braid"], (a @ b @ a - b @ a @ b).max_abs())
        for k in range(i + 2, n):
            r["far commute"] = max(r["far commute"], (gs[i] @ gs[k] - gs[k] @ gs[i]).max_abs())
    return r


def phi_q(g, W, E=None):
    """The kernel element evaluated in degree 4."""
    q = make_context(g.m).q
    G = Generators(g, E, W, 4)
    E1, E2, E3, U1, U3 = G.e(1), G.e(2), G.e(3), G.u(1), G.u(3)
    F = U1 @ U3
    a = 1 + (1 - q ** -2) ** 2
    b = a + (1 - q ** 2) ** 2
    c = (q ** 2 - q ** -2 + 2 * q ** -4 - 2 * q ** -6 + q ** -8) / (q ** 2 + q ** -2) ** 2
    d = (q - 1 / q) ** 2
    E2131 = E2 @ E1 @ E3 @ E2
    inner = q ** 2 * E2 + (q ** -2 - 1) * E2131 - (q ** 2 + q ** -2) * (E2 @ U1 @ E3 @ E2)
    return a * (F @ E2 @ F) - b * F - c * (F @ E2131 @ F) + d * (F @ inner @ F)


def phi_q_norm(g, W, E=None):
    return float(phi_q(g, W, E).norm())


# ---------------------------------------------------------------- t operator

def _word_sequence(m):
    rows = [list(range(m - k, m + k + 1, 2)) for k in range(m)]
    return [i for row in rows + rows[-2::-1] for i in row]


def e_word(g, m, E=None):
    """(E_m)(E_{m-1}E_{m+1})...(E_1E_3...E_{2m-1})...(E_m) in degree 2m."""
    G = Generators(g, E, None, 2 * m)
    R = G.one()
    for i in _word_sequence(m):
        R = R @ G.e(i)
    return R


def apply_e_word(g, m, X, E=None):
    """The E-word applied to the columns of X without forming the operator."""
    G = Generators(g, E, None, 2 * m)
    Y = np.asarray(X, dtype=complex)
    for i in reversed(_word_sequence(m)):
        Y = G.e(i).M @ Y
    return Y


def _closed_block(S, v):
    return np.nonzero((S.starts == v) & (S.ends == v))[0]


def _rotate(g, path):
    return path[1:] + path[:1]


def t_op(g, W, E=None, eps_star=1, star=None, tol=1e-8, strict=True):
    """F(t) in degree m from the rank-one pieces of F(f_{2m}).

    Returns ``(T, info)``; info carries the residuals and the rotation sign.
    With ``strict`` a residual above tol raises instead of being reported.
    """
    m = g.m
    n = 2 * m
    three = qint(make_context(m), 2 * m + 1)
    S, K = jw_basis(g, W, n, E)
    starts, ends = _column_blocks(S, K)
    for v in range(g.n):
        if int(np.sum(starts == v)) != 1:
            raise ValueError(f"e_v F(f_2m) is not rank one at vertex {v}")
    psi = {v: K[:, np.nonzero(starts == v)[0][0]] for v in range(g.n)}
    for v in range(g.n):
        k = np.argmax(np.abs(psi[v]))
        psi[v] = psi[v] * np.exp(-1j * np.angle(psi[v][k]))  # real gauge
    c = _word_vectors(g, S, E, tol)

    eps = _rotation_signs(g, S, psi, star if star is not None else g.star, eps_star, tol)
    Sm = path_space(g, m)
    rows, cols, vals = [], [], []
    for j, (v, p) in enumerate(zip(Sm.starts, Sm.paths)):
        back = tuple(g.rev(e) for e in reversed(p))
        cv = c[v][S.find(v, p + back)]
        if abs(cv) < tol:
            raise ValueError("E-word vector vanishes on a rainbow path")
        for i, (v2, p2) in enumerate(zip(Sm.starts, Sm.paths)):
            if v2 != v or Sm.ends[i] != Sm.ends[j]:
                continue
            val = eps["eps"][v] * np.sqrt(three) * psi[v][S.find(v, p2 + back)] / cv
            if abs(val) > 1e-14:
                rows.append(i)
                cols.append(j)
                vals.append(val)
    T = PathOperator(Sm, sp.csr_matrix((vals, (rows, cols)), shape=(len(Sm), len(Sm)), dtype=complex))
    info = t_residuals(g, W, T, E, c=c, K=K)
    info["rotation_sign"] = eps["sign"]
    info["eps"] = {int(k): int(v) for k, v in eps["eps"].items()}
    info["ok"] = all(info[k] < tol for k in ("T^2-f_m", "Tf_m-T", "symmetric", "word"))
    if strict and not info["ok"]:
        worst = {k: info[k] for k in ("T^2-f_m", "Tf_m-T", "symmetric", "word")}
        raise ValueError(f"no t-operator within tolerance: {worst}")
    return T, info


def _rotation_signs(g, S, psi, star, eps_star, tol):
    """Relative signs eps_v making the closed-path vector of t rotation-covariant."""
    constraints = []  # (v, w, sign of psi_w[rot p] / psi_v[p])
    for v in range(g.n):
        for i in _closed_block(S, v):
            p = S.paths[i]
            if abs(psi[v][i]) < 1e-6:
                continue
            w = g.r(p[0])
            j = S.find(w, _rotate(g, p))
            if abs(psi[w][j]) < 1e-6:
                continue
            constraints.append((v, w, np.sign((psi[w][j] / psi[v][i]).real)))
    for sign in (1, -1):
        eps = {star: eps_star}
        ok, changed = True, True
        while changed and ok:
            changed = False
            for v, w, s in constraints:
                if v in eps:
                    want = sign * s * eps[v]
                    if w in eps:
                        ok &= eps[w] == want
                    else:
                        eps[w] = want
                        changed = True
        if ok and len(eps) == g.n:
            return {"eps": eps, "sign": sign}
    raise ValueError("no consistent rotation signs for t")


def t_residuals(g, W, T, E=None, c=None, K=None):
    """Residuals of T^2 = f_m, T f_m = T, symmetry and the word relation.

    The word relation is checked through the rank-one pieces: the E-word is
    sum_v |c_v><c_v| and F(f_2m) is sum_v |psi_v><psi_v|, so it is enough to
    compare (T (x) 1) c_v (T (x) 1) c_v^* with [2m+1] psi_v psi_v^*.
    """
    m = g.m
    Sm, Km = jw_basis(g, W, m, E)
    fm = PathOperator(Sm, sp.csr_matrix(Km @ Km.conj().T))
    S, K = (path_space(g, 2 * m), K) if K is not None else jw_basis(g, W, 2 * m, E)
    c = c if c is not None else _word_vectors(g, S, E)
    starts, _ = _column_blocks(S, K)
    Tm = tensor_identity(T, m).M
    three = qint(make_context(m), 2 * m + 1)
    word = 0.0
    for v in range(g.n):
        x = Tm @ c[v]
        psi = K[:, starts == v]
        # x x^* - [2m+1] psi psi^* lives in the span of x and psi
        B = np.column_stack([x, psi])
        Qb, Rb = np.linalg.qr(B)
        core = np.outer(Rb[:, 0], Rb[:, 0].conj()) - three * Rb[:, 1:] @ Rb[:, 1:].conj().T
        word = max(word, float(np.linalg.norm(core)))  # Frobenius norm; Qb is an isometry
    return {
        "T^2-f_m": (T @ T - fm).max_abs(),
        "Tf_m-T": (T @ fm - T).max_abs(),
        "symmetric": (T - T.adjoint()).max_abs(),
        "word": word,
    }


def _word_vectors(g, S, E=None, tol=1e-8, seed=0):
    """c_v with E-word = sum_v |c_v><c_v|, from the word applied to random vectors.

    Raises if the word is not rank one on each closed-path block or leaks
    outside those blocks.
    """
    m = S.n // 2
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((len(S), 3))
    Y = apply_e_word(g, m, X, E)
    c = {}
    covered = np.zeros(len(S), dtype=bool)
    for v in range(g.n):
        idx = _closed_block(S, v)
        covered[idx] = True
        Yv = Y[idx]
        sv = np.linalg.svd(Yv, compute_uv=False)
        if sv[0] < tol or np.sum(sv > tol * sv[0]) != 1:
            raise ValueError(f"E-word is not rank one at vertex {v}")
        y = Yv[:, 0] if np.linalg.norm(Yv[:, 0]) > tol else Yv[:, 1]
        z = np.zeros(len(S), dtype=complex)
        z[idx] = y
        lam = np.vdot(z, apply_e_word(g, m, z, E)) / np.vdot(z, z)
        vec = np.zeros(len(S), dtype=complex)
        vec[idx] = y * np.sqrt(lam.real) / np.linalg.norm(y)
        c[v] = vec
    if np.max(np.abs(Y[~covered]), initial=0.0) > tol:
        raise ValueError("E-word has support outside the closed-path blocks")
    return c


# ---------------------------------------------------------------- Bratteli

def bratteli(g, depth, start_vertex=0):
    """Dimension vectors of M_0..M_depth and the inclusion matrices between them."""
    A = np.asarray(g.adjacency, dtype=int)
    dims = [np.eye(g.n, dtype=int)[start_vertex]]
    for _ in range(depth):
        dims.append(dims[-1] @ A)
    return {
        "dims": dims,
        "inclusions": [A.copy() for _ in range(depth)],
        "algebra_dims": [int(np.sum(d ** 2)) for d in dims],
    }
