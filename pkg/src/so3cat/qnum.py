"""Quantum integers at q = exp(i*pi/(4m+2))."""

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class QContext:
    m: int
    q: complex
    tol: float = DEFAULT_TOL

    @property
    def order(self):
        """Multiplicative order of q, 8m+4."""
        return 8 * self.m + 4


def make_context(m, tol=DEFAULT_TOL):
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError(f"level parameter m must be a positive integer, got {m!r}")
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    m = int(m)
    q = complex(np.exp(1j * np.pi / (4 * m + 2)))
    return QContext(m=m, q=q, tol=float(tol))


def is_primitive(ctx):
    n = ctx.order
    if abs(ctx.q ** n - 1) > ctx.tol:
        return False
    return all(abs(ctx.q ** d - 1) > ctx.tol for d in range(1, n) if n % d == 0)


def qint(ctx, n):
    """[n]_q, evaluated through the sine form so the result is exactly real."""
    h = np.pi / (4 * ctx.m + 2)
    return float(np.sin(n * h) / np.sin(h))


def qint_from_powers(ctx, n):
    """[n]_q from (q^n - q^-n)/(q - q^-1); used as an independent cross-check."""
    q = ctx.q
    return complex((q ** n - q ** (-n)) / (q - 1 / q))


def qpow(ctx, k):
    """q^k computed from the exact angle to avoid error growth."""
    return complex(np.exp(1j * np.pi * k / (4 * ctx.m + 2)))


def gauss_product(ctx):
    m = ctx.m
    return complex(np.prod([1 - qpow(ctx, 4 * m - 2 * j) for j in range(2 * m)]))


def gauss_closed(m):
    return complex((-1j) ** m * np.sqrt(2 * m + 1))


def identity_residuals(ctx):
    """Max residuals of the recurrence, reflection and [3]-fusion identities."""
    m = ctx.m
    N = 4 * m
    qi = lambda n: qint(ctx, n)
    rec = max(abs(qi(2) * qi(n) - qi(n - 1) - qi(n + 1)) for n in range(1, N + 1))
    ref = max(abs(qi(N + 2 - n) - qi(n)) for n in range(0, N + 3))
    fus = max(abs(qi(3) * qi(n) - qi(n - 2) - qi(n) - qi(n + 2)) for n in range(2, N + 1))
    return {"recurrence": rec, "reflection": ref, "fusion": fus}
