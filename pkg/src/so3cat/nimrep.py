"""The six SO(3)_{2m} nimrep graphs with Perron-Frobenius data."""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .qnum import qint

FAMILIES = ("A", "Sigma", "E8", "E8c", "E14", "E14c")
_FIXED_LEVEL = {"E8": 4, "E8c": 4, "E14": 7, "E14c": 7}


@dataclass(frozen=True)
class Edge:
    id: int
    src: int
    dst: int
    label: str


@dataclass
class NimrepGraph:
    family: str
    m: int
    labels: list
    phi: np.ndarray
    edges: list
    partner: list
    star: int = 0
    _out: dict = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.labels)

    @property
    def adjacency(self):
        D = np.zeros((self.n, self.n), dtype=int)
        for e in self.edges:
            D[e.src, e.dst] += 1
        return D

    def rev(self, a):
        return self.partner[a]

    def out_edges(self, x):
        if self._out is None:
            self._out = {v: [] for v in range(self.n)}
            for e in self.edges:
                self._out[e.src].append(e.id)
        return self._out[x]

    def edges_between(self, x, y):
        return [a for a in self.out_edges(x) if self.edges[a].dst == y]

    def s(self, a):
        return self.edges[a].src

    def r(self, a):
        return self.edges[a].dst

    def double_loop_vertices(self):
        return [v for v in range(self.n) if len(self.edges_between(v, v)) == 2]


def _assemble(family, m, labels, phi, layout):
    """layout: list of (x, y, mult); x == y gives self-loops, fixed by the involution."""
    edges, partner = [], []
    for x, y, mult in layout:
        for k in range(mult):
            if x == y:
                tag = "" if mult == 1 else ("g" if k == 0 else "g'")
                edges.append(Edge(len(edges), x, x, f"{labels[x]}@{tag}"))
                partner.append(len(edges) - 1)
            else:
                i = len(edges)
                edges.append(Edge(i, x, y, f"{labels[x]}>{labels[y]}"))
                edges.append(Edge(i + 1, y, x, f"{labels[y]}>{labels[x]}"))
                partner += [i + 1, i]
    return NimrepGraph(family, m, list(labels), np.asarray(phi, dtype=float), edges, partner)


def build_graph(family, ctx):
    m = ctx.m
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if family in _FIXED_LEVEL and m != _FIXED_LEVEL[family]:
        raise ValueError(f"{family} exists only at m={_FIXED_LEVEL[family]}, got m={m}")
    Q = lambda n: qint(ctx, n)

    if family == "A":
        labels = [f"v{j}" for j in range(m)] + ["p+", "p-"]
        phi = [Q(2 * l + 1) for l in range(m)] + [Q(2 * m) / Q(2)] * 2
        top, pp, pm = m - 1, m, m + 1
        layout = []
        for j in range(m - 1):
            layout.append((j, j + 1, 1))
            layout.append((j + 1, j + 1, 1))
        layout += [(top, pp, 1), (pp, pm, 1), (pm, top, 1)]
    elif family == "Sigma":
        labels = [f"u{l}" for l in range(1, m + 1)]
        phi = [Q(2 * l) / Q(2) for l in range(1, m + 1)]
        layout = []
        for l in range(m - 1):
            layout.append((l, l, 1))
            layout.append((l, l + 1, 1))
        layout.append((m - 1, m - 1, 2))
    elif family == "E8":
        labels = ["1", "2", "3", "4"]
        phi = [1, Q(3), Q(4) / Q(2), Q(6) / Q(2)]
        layout = [(0, 1, 1), (1, 1, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1), (3, 3, 1)]
    elif family == "E8c":
        labels = ["1", "2", "3"]
        phi = [1, Q(3), Q(2) * Q(3) / Q(4)]
        layout = [(0, 1, 1), (1, 1, 2), (1, 2, 1), (2, 2, 1)]
    elif family == "E14":
        labels = ["1", "2", "3", "4"]
        phi = [1, Q(3), Q(5), Q(12) / Q(6)]
        layout = [(0, 1, 1), (1, 1, 1), (1, 2, 1), (2, 2, 2), (2, 3, 1)]
    else:  # E14c
        labels = ["1", "2", "3", "4"]
        phi = [1, Q(4) / Q(2), Q(3) * Q(4) / (Q(2) * Q(5)), Q(2) * Q(4) / Q(5)]
        layout = [(0, 0, 1), (0, 1, 1), (1, 1, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1), (3, 3, 1)]
    return _assemble(family, m, labels, phi, layout)


def perron_frobenius(g):
    w, v = np.linalg.eigh(g.adjacency.astype(float))
    vec = v[:, -1]
    vec = vec / vec[g.star]
    return float(w[-1]), vec


def pf_residual(g, ctx):
    """max |Delta phi - [3] phi| for the closed-form weights."""
    return float(np.max(np.abs(g.adjacency @ g.phi - qint(ctx, 3) * g.phi)))


def spectrum(g):
    return np.linalg.eigvalsh(g.adjacency.astype(float))


def exponent_eigenvalue(m, j):
    """Eigenvalue S_{rho_1,lam}/S_{rho_0,lam} for lam = rho_{j-1} (j = m+1 covers Q_+-)."""
    return 2 * np.cos(2 * np.pi * (2 * j - 1) / (4 * m + 2)) + 1


def exponents(g, tol=1e-9):
    beta = {j: exponent_eigenvalue(g.m, j) for j in range(1, g.m + 2)}
    out = []
    for lam in spectrum(g):
        hits = [j for j, b in beta.items() if abs(lam - b) < tol]
        if not hits:
            raise ValueError(f"eigenvalue {lam} of {g.family} matches no exponent")
        out.append(hits[0])
    return Counter(out)


def unfold_bipartite(g):
    """Bipartite unfolding: vertices (v, 0), (v, 1) and one edge per edge of g."""
    n = g.n
    labels = [f"{l}'{i}" for i in (0, 1) for l in g.labels]
    phi = np.concatenate([g.phi, g.phi])
    D = g.adjacency
    layout = []
    for x in range(n):
        for y in range(n):
            if D[x, y]:
                layout.append((x, n + y, int(D[x, y])))
    return _assemble(g.family + "'", g.m, labels, phi, layout)


def check_involution(g):
    for e in g.edges:
        b = g.partner[e.id]
        if g.partner[b] != e.id or g.edges[b].src != e.dst or g.edges[b].dst != e.src:
            return False
    return True
