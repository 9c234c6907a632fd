"""Canonical bilinear forms and trivalent cell systems on nimrep graphs."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .qnum import qint


# ---------------------------------------------------------------- loops

def canon(loop):
    """Lexicographically least rotation of an edge triple."""
    a, b, c = loop
    return min((a, b, c), (b, c, a), (c, a, b))


def closed_loops(g):
    """All closed length-3 edge paths (a, b, c)."""
    out = []
    for a in range(len(g.edges)):
        for b in g.out_edges(g.r(a)):
            for c in g.out_edges(g.r(b)):
                if g.r(c) == g.s(a):
                    out.append((a, b, c))
    return out


def loop_classes(g):
    return sorted({canon(l) for l in closed_loops(g)})


def reverse_loop(g, loop):
    a, b, c = loop
    return (g.rev(c), g.rev(b), g.rev(a))


# ---------------------------------------------------------------- forms

@dataclass
class BilinearFormSet:
    cup: dict  # (x, y) -> matrix over edges_between(x, y) x edges_between(y, x)

    def cap(self, x, y):
        return np.linalg.inv(self.cup[(y, x)])


def canonical_forms(g, tol=1e-9):
    cup = {}
    for x in range(g.n):
        for y in range(g.n):
            k = len(g.edges_between(x, y))
            if not k:
                continue
            if x == y:
                cup[(x, y)] = np.eye(k)
            else:
                cup[(x, y)] = np.array([[np.sqrt(g.phi[y] / g.phi[x])]])
    E = BilinearFormSet(cup)
    res = loop_sum_residual(g, E)
    if res >= tol:
        raise ValueError(f"loop-sum identity fails (residual {res:.3g})")
    return E


def loop_sum_residual(g, E):
    three = float(g.adjacency @ g.phi @ g.phi) / float(g.phi @ g.phi)
    worst = 0.0
    for x in range(g.n):
        tot = 0.0
        for y in range(g.n):
            if (x, y) in E.cup:
                tot += np.trace(E.cup[(x, y)] @ np.linalg.inv(E.cup[(y, x)].T))
        worst = max(worst, abs(tot - three))
    return worst


# ---------------------------------------------------------------- cells

@dataclass
class CellSystem:
    graph: object
    W: dict
    params: dict = field(default_factory=dict)

    def __call__(self, a, b, c):
        return self.W.get(canon((a, b, c)), 0.0)

    def vector(self, keys=None):
        keys = keys or loop_classes(self.graph)
        return np.array([self.W.get(k, 0.0) for k in keys], dtype=complex)

    def copy(self, **params):
        return CellSystem(self.graph, dict(self.W), {**self.params, **params})


def star_residual(W):
    """max |W(c~b~a~) - conj W(abc)| over all loop classes."""
    g = W.graph
    return max((abs(W(*reverse_loop(g, k)) - np.conj(W(*k))) for k in loop_classes(g)),
               default=0.0)


class _Cells:
    """Assign cells by vertex loops x -> y -> z -> x."""

    def __init__(self, g):
        self.g = g
        self.W = {}

    def path(self, verts, via=()):
        via = list(via)
        edges = []
        for x, y in zip(verts, verts[1:] + verts[:1]):
            cand = self.g.edges_between(x, y)
            if len(cand) > 1:
                cand = [cand[via.pop(0)]]
            if len(cand) != 1:
                raise KeyError(f"no unique edge {x}->{y}")
            edges.append(cand[0])
        return tuple(edges)

    def set(self, verts, value, via=()):
        self.W[canon(self.path(list(verts), via))] = complex(value)


def _double_vertex(g):
    d = g.double_loop_vertices()
    return d[0] if d else None


def rotation_gauge(g, theta, eps=1, eps_p=-1):
    """eta at the double-loop vertex: [[c, eps s], [eps' s, -eps eps' c]]."""
    v = _double_vertex(g)
    c, s = np.cos(theta), np.sin(theta)
    U = np.array([[c, eps * s], [eps_p * s, -eps * eps_p * c]])
    return identity_gauge(g, {(v, v): U})


def cell_closed_form(g, ctx, **params):
    fam = g.family
    builder = {"A": _cells_A, "Sigma": _cells_sigma, "E8": _cells_E8, "E8c": _cells_E8c,
               "E14": _cells_E14, "E14c": _cells_E14c}[fam]
    return builder(g, ctx, **params)


def _cells_A(g, ctx, tau=1.0):
    m = ctx.m
    Q = lambda n: qint(ctx, n)
    sq = np.sqrt
    C = _Cells(g)
    for l in range(1, m - 1):
        C.set((l - 1, l, l), sq(Q(2) * Q(2*l - 1) * Q(2*l + 1) * Q(2*l + 2) / (Q(4) * Q(2*l))))
        C.set((l, l, l), Q(4*l + 2) * sq(Q(2)) / sq(Q(4) * Q(2*l) * Q(2*l + 2)))
        C.set((l, l, l + 1), -sq(Q(2) * Q(2*l) * Q(2*l + 1) * Q(2*l + 3) / (Q(4) * Q(2*l + 2))))
    top, pp, pm = m - 1, m, m + 1
    if m >= 2:
        C.set((m - 2, top, top), sq(Q(2) * Q(2*m - 3) * Q(2*m - 1) * Q(2*m) / (Q(4) * Q(2*m - 2))))
        C.set((top, top, top), Q(4*m - 2) * sq(Q(2)) / sq(Q(4) * Q(2*m - 2) * Q(2*m)))
        w = -sq(Q(2) * Q(2*m - 2) * Q(2*m - 1) * Q(2*m + 1) / (2 * Q(4) * Q(2*m)))
        C.set((top, top, pp), w)
        C.set((top, top, pm), w)
    t = Q(2*m) / Q(2)
    C.set((top, pp, pm), tau * t)
    C.set((top, pm, pp), t / tau)
    return CellSystem(g, C.W, {"tau": tau})


def _sigma_chain(C, ctx, eps):
    """Cells of sigma_{2m} away from the double loop; eps[l-1] = eps_l."""
    m = ctx.m
    Q = lambda n: qint(ctx, n)
    sq = np.sqrt
    if m >= 2:
        e1 = eps[0]
        C.set((0, 0, 0), e1 * sq(Q(4) / (Q(2) * Q(3))))
        C.set((0, 0, 1), -e1 / sq(Q(3)))
    for l in range(2, m):
        e = eps[l - 1]
        i = l - 1  # vertex index of u_l
        C.set((i - 1, i, i), e * sq(Q(2*l - 2) * Q(2*l) * Q(2*l + 1) / (Q(2) * Q(4) * Q(2*l - 1))))
        C.set((i, i, i), e * Q(4*l) / sq(Q(2) * Q(4) * Q(2*l - 1) * Q(2*l + 1)))
        C.set((i, i, i + 1), -e * sq(Q(2*l - 1) * Q(2*l) * Q(2*l + 2) / (Q(2) * Q(4) * Q(2*l + 1))))


def _set_double(C, v, W0, W1, W2, W3):
    C.set((v, v, v), W0, via=(0, 0, 0))
    C.set((v, v, v), W1, via=(0, 0, 1))
    C.set((v, v, v), W2, via=(0, 1, 1))
    C.set((v, v, v), W3, via=(1, 1, 1))


def _cells_sigma(g, ctx, eps=None, theta=0.0, eps_m=1, eps_m_p=-1):
    """W_2 = 0 solution at the double loop, rotated by eta(theta, eps_m, eps_m')."""
    m = ctx.m
    Q = lambda n: qint(ctx, n)
    eps = list(eps) if eps is not None else [1] * max(m - 1, 0)
    C = _Cells(g)
    _sigma_chain(C, ctx, eps)
    v = m - 1
    if m == 1:
        # single vertex: R2 forces W2 = -W0, W3 = -W1 and R1 gives W0^2 + W1^2 = 1/2
        a = 1 / np.sqrt(2)
        _set_double(C, v, a, 0.0, -a, 0.0)
    else:
        sq = np.sqrt
        w0 = Q(2*m) * sq(Q(6) * Q(2*m - 2)) / (Q(3) * sq(Q(2) * Q(4) * Q(2*m - 1)))
        w1 = Q(2*m) / sq(Q(2) * Q(3) * Q(4))
        w3 = -Q(2*m - 1) * sq(Q(2) / (Q(3) * Q(4)))
        k = -sq(Q(2*m) / Q(2*m - 2))
        C.set((v - 1, v, v), k * w0, via=(0,))
        C.set((v - 1, v, v), k * (w1 + w3), via=(1,))
        _set_double(C, v, w0, w1, 0.0, w3)
    base = CellSystem(g, C.W, {})
    out = gauge_transform(base, rotation_gauge(g, theta, eps_m, eps_m_p))
    out.params = {"eps": eps, "theta": theta, "eps_m": eps_m, "eps_m_p": eps_m_p}
    return out


def _cells_E8(g, ctx, tau=1.0):
    Q = lambda n: qint(ctx, n)
    sq = np.sqrt
    C = _Cells(g)
    C.set((0, 1, 1), sq(Q(3)))
    C.set((1, 1, 1), Q(6) / Q(4))
    C.set((1, 1, 2), -sq(Q(2) * Q(3) / Q(4)))
    C.set((1, 1, 3), -sq(Q(2) * Q(3) * Q(6)) / Q(4))
    C.set((1, 3, 3), sq(Q(3) * Q(6) * Q(10)) / (Q(4) * sq(Q(5))))
    C.set((2, 3, 3), sq(Q(6) * Q(10) / (Q(2) * Q(4) * Q(5))))
    C.set((3, 3, 3), -Q(6) * sq(Q(10)) / sq(Q(2) ** 3 * Q(5)))
    t = sq(Q(3) * Q(6) / Q(4))
    C.set((1, 2, 3), tau * t)
    C.set((1, 3, 2), t / tau)
    return CellSystem(g, C.W, {"tau": tau})


def _cells_E14c(g, ctx, tau=1.0):
    Q = lambda n: qint(ctx, n)
    sq = np.sqrt
    C = _Cells(g)
    C.set((0, 0, 0), -sq(Q(4) / (Q(2) * Q(3))))
    C.set((0, 0, 1), 1 / sq(Q(3)))
    C.set((0, 1, 1), sq(Q(5) / Q(3)))
    C.set((1, 1, 1), Q(8) / sq(Q(2) * Q(3) * Q(4) * Q(5)))
    C.set((1, 1, 2), -Q(3) * sq(Q(4)) / (Q(5) * sq(Q(2))))
    C.set((1, 1, 3), -sq(Q(2) * Q(3) * Q(4)) / Q(5))
    C.set((1, 3, 3), sq(Q(2) * Q(4) / (Q(3) * Q(5))))
    C.set((2, 3, 3), sq(Q(2) * Q(4)) / Q(5))
    C.set((3, 3, 3), -sq(Q(2) * Q(4) ** 3) / (Q(5) * sq(Q(3))))
    t = Q(2) * Q(4) * sq(Q(3)) / sq(Q(5) ** 3)
    C.set((1, 2, 3), tau * t)
    C.set((1, 3, 2), t / tau)
    return CellSystem(g, C.W, {"tau": tau})


def _cells_E8c(g, ctx, eps3=1, theta=0.0, eps_m=1, eps_m_p=-1):
    """W_2 = 0 solution at the double loop, rotated by eta(theta, eps_m, eps_m')."""
    Q = lambda n: qint(ctx, n)
    sq = np.sqrt
    C = _Cells(g)
    C.set((0, 1, 1), -Q(3) / sq(Q(5)), via=(0,))
    C.set((0, 1, 1), -1.0, via=(1,))
    C.set((1, 1, 2), 0.0, via=(0,))
    C.set((1, 1, 2), sq(Q(2) ** 3 * Q(3) ** 3 / Q(4) ** 3), via=(1,))
    _set_double(C, 1, sq(Q(3) / Q(5)), -sq(Q(3)), 0.0, Q(2) * sq(Q(3)) / Q(4))
    C.set((1, 2, 2), eps3 * Q(2) * sq(Q(3)) / Q(4))
    C.set((2, 2, 2), -eps3 * sq(Q(2) * Q(3) / Q(4)))
    base = CellSystem(g, C.W, {})
    out = gauge_transform(base, rotation_gauge(g, theta, eps_m, eps_m_p))
    out.params = {"eps3": eps3, "theta": theta, "eps_m": eps_m, "eps_m_p": eps_m_p}
    return out


def _cells_E14(g, ctx, eps1=1, theta=0.0, eps_m=1, eps_m_p=-1):
    Q = lambda n: qint(ctx, n)
    sq = np.sqrt
    C = _Cells(g)
    C.set((0, 1, 1), eps1 * sq(Q(3)))
    C.set((1, 1, 1), eps1 * Q(6) / Q(4))
    C.set((1, 1, 2), -eps1 * Q(2) * sq(Q(3) * Q(5)) / Q(4))
    C.set((1, 2, 2), 0.0, via=(0,))
    C.set((1, 2, 2), sq(Q(2) * Q(3) * Q(5) * Q(6)) / Q(4), via=(1,))
    C.set((2, 2, 3), -sq(Q(5) ** 3 / (Q(4) * Q(6))), via=(0,))
    C.set((2, 2, 3), -Q(5) * sq(Q(2) / (Q(3) * Q(6))), via=(1,))
    _set_double(C, 2, sq(Q(5) ** 3 / (Q(3) * Q(4) * Q(6))), -Q(5) * sq(Q(2) / Q(6)), 0.0,
                Q(10) * sq(Q(2)) / (Q(4) * sq(Q(6))))
    base = CellSystem(g, C.W, {})
    out = gauge_transform(base, rotation_gauge(g, theta, eps_m, eps_m_p))
    out.params = {"eps1": eps1, "theta": theta, "eps_m": eps_m, "eps_m_p": eps_m_p}
    return out


# ---------------------------------------------------------------- relations

class RelationSystem:
    """All instances of the three cell relations as quadratic polynomials.

    Each instance is ``sum_t coef_t * W[k1_t] * W[k2_t] - const`` where a
    missing second key (``-1``) stands for a linear term.
    """

    def __init__(self, g):
        self.graph = g
        self.keys = loop_classes(g)
        self.index = {k: i for i, k in enumerate(self.keys)}
        self.kind = []
        self.terms = []
        self.const = []
        self._build()
        n = len(self.terms)
        self._row = np.concatenate([np.full(len(t), i) for i, t in enumerate(self.terms)]).astype(int)
        flat = [x for t in self.terms for x in t]
        self._coef = np.array([x[0] for x in flat], dtype=float)
        self._k1 = np.array([x[1] for x in flat], dtype=int)
        self._k2 = np.array([x[2] for x in flat], dtype=int)
        self._const = np.array(self.const, dtype=float)
        self._kind = np.array(self.kind)
        self.n_eq = n

    def _key(self, a, b, c):
        return self.index.get(canon((a, b, c)), -2)

    def _add(self, kind, terms, const):
        terms = [t for t in terms if t[1] != -2 and t[2] != -2 and t[0] != 0]
        if not terms and const == 0:
            return
        self.kind.append(kind)
        self.terms.append(terms)
        self.const.append(const)

    def _build(self):
        g = self.graph
        phi = g.phi
        r24 = _ratio_2_4(g)
        nE = len(g.edges)
        s = [g.s(a) for a in range(nE)]
        r = [g.r(a) for a in range(nE)]
        rev = g.partner
        out, between, K = g.out_edges, g.edges_between, self._key

        for a in range(nE):
            for d in between(s[a], r[a]):
                terms = [(1.0, K(a, b, c), K(rev[c], rev[b], rev[d]))
                         for b in out(r[a]) for c in between(r[b], s[a])]
                self._add("R1", terms, phi[s[a]] * phi[r[a]] if a == d else 0.0)

        for a in range(nE):
            if s[a] == r[a]:
                self._add("R2", [(np.sqrt(phi[r[b]]), K(a, b, rev[b]), -1) for b in out(r[a])], 0.0)

        for a in range(nE):
            x, y = s[a], r[a]
            for b in out(y):
                z = r[b]
                for c in out(x):
                    w = r[c]
                    for d in between(w, z):
                        f1, f2 = np.sqrt(phi[x] * phi[z]), np.sqrt(phi[y] * phi[w])
                        terms = [(f1, K(a, mm, rev[c]), K(rev[mm], b, rev[d]))
                                 for mm in between(y, w)]
                        terms += [(-f2, K(a, b, mm), K(rev[mm], rev[d], rev[c]))
                                  for mm in between(z, x)]
                        rhs = 0.0
                        if a == rev[b] and c == rev[d]:
                            rhs += phi[y] * phi[z] * phi[w]
                        if a == c and b == d:
                            rhs -= phi[x] * phi[y] * phi[z]
                        self._add("R3", terms, r24 * rhs)

    def residual(self, v):
        v = np.asarray(v)
        w2 = np.where(self._k2 >= 0, v[np.maximum(self._k2, 0)], 1.0)
        vals = self._coef * v[self._k1] * w2
        out = np.zeros(self.n_eq, dtype=v.dtype)
        np.add.at(out, self._row, vals)
        return out - self._const

    def jacobian(self, v):
        v = np.asarray(v)
        J = np.zeros((self.n_eq, len(self.keys)), dtype=v.dtype)
        lin = self._k2 < 0
        w2 = np.where(lin, 1.0, v[np.maximum(self._k2, 0)])
        np.add.at(J, (self._row, self._k1), self._coef * w2)
        q = ~lin
        np.add.at(J, (self._row[q], self._k2[q]), self._coef[q] * v[self._k1[q]])
        return J

    def max_residuals(self, v):
        res = np.abs(self.residual(v))
        return {k: float(np.max(res[self._kind == k], initial=0.0)) for k in ("R1", "R2", "R3")}


def verify_cells(g, E, W):
    """Max residual of each relation family (R1, R2, R3) over all instances."""
    rs = RelationSystem(g)
    return rs.max_residuals(W.vector(rs.keys))


def qint_from_graph(g):
    from .qnum import make_context
    return qint(make_context(g.m), 3)


def _ratio_2_4(g):
    from .qnum import make_context
    ctx = make_context(g.m)
    return qint(ctx, 2) / qint(ctx, 4)


# ---------------------------------------------------------------- gauge

@dataclass
class GaugeTransform:
    graph: object
    eta: dict  # (x, y) -> matrix over edges_between(x, y)

    def edge_matrix(self):
        """Full edge-space matrix (block diagonal over vertex pairs)."""
        g = self.graph
        M = np.zeros((len(g.edges), len(g.edges)), dtype=complex)
        for (x, y), B in self.eta.items():
            idx = g.edges_between(x, y)
            M[np.ix_(idx, idx)] = B
        return M


def identity_gauge(g, overrides=None):
    eta = {}
    for x in range(g.n):
        for y in range(g.n):
            k = len(g.edges_between(x, y))
            if k:
                eta[(x, y)] = np.eye(k, dtype=complex)
    eta.update(overrides or {})
    return GaugeTransform(g, eta)


def check_gauge(G, tol=1e-9):
    g = G.graph
    for (x, y), B in G.eta.items():
        if x == y:
            if np.max(np.abs(B.T @ B - np.eye(len(B)))) > tol * max(1.0, np.max(np.abs(B)) ** 2):
                return False
        else:
            if abs(B[0, 0] * G.eta[(y, x)][0, 0] - 1) > tol:
                return False
    return True


class _GaugePattern:
    """Sparsity pattern of W -> eta.W over the block structure of the edges."""

    def __init__(self, g):
        self.keys = loop_classes(g)
        index = {k: i for i, k in enumerate(self.keys)}
        block = {}
        for e in g.edges:
            block.setdefault((e.src, e.dst), []).append(e.id)
        same = [block[(e.src, e.dst)] for e in g.edges]
        rows = []
        for i, (a2, b2, c2) in enumerate(self.keys):
            for a1, b1, c1 in product(same[a2], same[b2], same[c2]):
                rows.append((i, a2, a1, b2, b1, c2, c1, index[canon((a1, b1, c1))]))
        self.rows = np.array(rows, dtype=int).T

    def apply(self, M, w):
        i, a2, a1, b2, b1, c2, c1, src = self.rows
        vals = M[a2, a1] * M[b2, b1] * M[c2, c1] * w[src]
        return np.bincount(i, vals.real, len(self.keys)) + 1j * np.bincount(i, vals.imag, len(self.keys))


_PATTERNS = {}


def _pattern(g):
    key = id(g)
    if key not in _PATTERNS or _PATTERNS[key][0] is not g:
        _PATTERNS[key] = (g, _GaugePattern(g))
    return _PATTERNS[key][1]


def gauge_transform(W, G, tol=1e-9):
    if not check_gauge(G, tol):
        raise ValueError("gauge transform violates the canonical constraints")
    pat = _pattern(W.graph)
    new = pat.apply(G.edge_matrix(), W.vector(pat.keys))
    return CellSystem(W.graph, dict(zip(pat.keys, new)), dict(W.params))


def cell_distance(W1, W2):
    keys = loop_classes(W1.graph)
    return float(np.max(np.abs(W1.vector(keys) - W2.vector(keys)), initial=0.0))


def _orthogonal(theta, det):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=complex) if det > 0 else np.array([[c, s], [s, -c]], dtype=complex)


def _best_orthogonal(err, grid, tol):
    """Minimise err over O(2, C): real angle grid, then refinement in the complex angle."""
    from scipy.optimize import least_squares, minimize_scalar

    ths = np.arange(0, 2 * np.pi, grid)
    cands = []
    for det in (1, -1):
        vals = np.array([err(_orthogonal(t, det)) for t in ths])
        for j in np.argsort(vals)[:3]:
            r = minimize_scalar(lambda t: err(_orthogonal(t, det)),
                                bounds=(ths[j] - grid, ths[j] + grid), method="bounded",
                                options={"xatol": 1e-13})
            cands.append((r.fun, complex(r.x), det))
            if r.fun < tol:
                continue
            # a complex angle: start on both sides of the real axis
            for im0 in (-0.5, 0.5):
                f = lambda z: [err(_orthogonal(z[0] + 1j * z[1], det))]
                sol = least_squares(lambda z: np.array(f(z) * 2), [r.x, im0], method="trf",
                                    xtol=1e-15, ftol=1e-15, gtol=1e-15)
                cands.append((f(sol.x)[0], sol.x[0] + 1j * sol.x[1], det))
    _, th, det = min(cands, key=lambda c: c[0])
    return _orthogonal(th, det)


def _branch_consistent_lstsq(A, b):
    """Least squares for complex logs, moving each rhs to the 2 pi i branch the
    earlier rows predict."""
    b = b.copy()
    for k in range(1, len(b) + 1):
        if k > 1:
            x = np.linalg.lstsq(A[:k - 1], b[:k - 1], rcond=None)[0]
            pred = A[k - 1] @ x
            b[k - 1] += 2j * np.pi * np.round((pred - b[k - 1]).imag / (2 * np.pi))
    return np.linalg.lstsq(A, b, rcond=None)[0]


def find_equivalence(W1, W2, tol=1e-6, grid=1e-2):
    """Search the gauge group for eta with |eta.W1 - W2| < tol; None if there is none.

    Every length-3 loop either runs through a loop edge at a single vertex or
    is a triangle on three distinct vertices, so the search splits: an O(2)
    element at each double-loop vertex (angle grid plus refinement), a sign at
    each self-loop, and a holonomy per triangle from the single-edge scalars.
    """
    g = W1.graph
    pat = _pattern(g)
    keys = pat.keys
    w1, w2 = W1.vector(keys), W2.vector(keys)
    scale = max(1.0, float(np.max(np.abs(w1), initial=0)))
    loops = {}
    for i, k in enumerate(keys):
        vs = {g.edges[e].src for e in k if g.edges[e].src == g.edges[e].dst}
        if vs:
            loops.setdefault(vs.pop(), []).append(i)

    overrides = {}
    for x, idx in loops.items():
        nloop = len(g.edges_between(x, x))

        def err(B):
            G = identity_gauge(g, {(x, x): B})
            return float(np.max(np.abs(pat.apply(G.edge_matrix(), w1)[idx] - w2[idx])))

        if nloop == 1:
            best = min((np.array([[sgn]], dtype=complex) for sgn in (1.0, -1.0)), key=err)
        else:
            best = _best_orthogonal(err, grid, tol)
        overrides[(x, x)] = best

    # triangles: fit log single-edge scalars to the observed ratios
    pairs = sorted({(min(e.src, e.dst), max(e.src, e.dst)) for e in g.edges if e.src != e.dst})
    pidx = {p: i for i, p in enumerate(pairs)}
    rows, rhs = [], []
    for i, k in enumerate(keys):
        verts = [g.edges[e].src for e in k]
        if len(set(verts)) < 3:
            continue
        if abs(w1[i]) < tol * 1e-3:
            if abs(w2[i]) > tol:
                return None
            continue
        if abs(w2[i]) < tol * 1e-3:
            return None
        row = np.zeros(len(pairs))
        for e in k:
            ed = g.edges[e]
            row[pidx[(min(ed.src, ed.dst), max(ed.src, ed.dst))]] += 1 if ed.src < ed.dst else -1
        rows.append(row)
        rhs.append(np.log(w2[i] / w1[i]))
    if rows:
        logt = _branch_consistent_lstsq(np.array(rows), np.array(rhs))
        for (x, y), lt in zip(pairs, logt):
            t = np.exp(lt)
            overrides[(x, y)] = np.array([[t]])
            overrides[(y, x)] = np.array([[1 / t]])

    G = identity_gauge(g, overrides)
    if np.max(np.abs(pat.apply(G.edge_matrix(), w1) - w2)) < tol * scale:
        return G
    return None


def solve_cells(g, restarts=50, max_iter=200, tol=1e-10, real_only=False, seed=0,
                reference=None, equiv_tol=1e-6):
    """Find cell systems on g numerically from random starts.

    Returns ``(representatives, stats)``: converged solutions deduplicated up to
    gauge equivalence, and counts of converged/failed starts. When ``reference``
    is given it is used as the first representative.
    """
    from scipy.optimize import least_squares

    rs = RelationSystem(g)
    n = len(rs.keys)
    d = qint_from_graph(g) * float(np.max(g.phi))
    if real_only:
        fun = lambda x: rs.residual(x)
        jac = lambda x: rs.jacobian(x)
        unpack = lambda x: x.astype(complex)
    else:
        def fun(x):
            r = rs.residual(x[:n] + 1j * x[n:])
            return np.concatenate([r.real, r.imag])

        def jac(x):
            J = rs.jacobian(x[:n] + 1j * x[n:])
            return np.block([[J.real, -J.imag], [J.imag, J.real]])

        unpack = lambda x: x[:n] + 1j * x[n:]

    reps = [reference] if reference is not None else []
    stats = {"converged": 0, "failed": 0, "new_classes": 0}
    for k in range(restarts):
        # restart k owns seed + k, so any single start can be replayed
        x0 = np.random.default_rng(seed + k).uniform(-d, d, n if real_only else 2 * n)
        sol = least_squares(fun, x0, jac=jac, method="lm", max_nfev=max_iter * (len(x0) + 1),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.max(np.abs(sol.fun)) > tol:
            stats["failed"] += 1
            continue
        stats["converged"] += 1
        W = CellSystem(g, dict(zip(rs.keys, unpack(sol.x))), {"solver": True})
        if not any(find_equivalence(R, W, equiv_tol) is not None for R in reps):
            reps.append(W)
            stats["new_classes"] += 1
    return reps, stats
