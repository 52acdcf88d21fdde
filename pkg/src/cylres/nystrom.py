"""Nystrom discretization of the mode kernels on the support of V."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kernels import FULL_LINE, green

QUAD_RULES = ("gl_split", "gl")


@dataclass(frozen=True)
class Discretization:
    """n_t Gauss-Legendre nodes per panel; panels break at jumps of V.

    ``gl_split`` integrates each row's own panel by product integration split
    at the diagonal (spectral convergence despite the |t - t'| kink); ``gl`` is
    the plain rule. ``l_max=None`` picks the mode cutoff from ``tail_tol``.
    """
    n_t: int = 24
    quad: str = "gl_split"
    l_max: int | None = None
    tail_tol: float = 0.1
    certified_tail: float | None = None
    panel_max: float = 1.0

    def __post_init__(self):
        if self.n_t < 8:
            raise ValueError("n_t must be at least 8")
        if self.quad not in QUAD_RULES:
            raise ValueError(f"unknown quadrature {self.quad!r}")
        if self.l_max is not None and self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        if self.certified_tail is not None and self.certified_tail > self.tail_tol:
            raise ValueError("certified tail exceeds tail_tol")

    def refined(self, factor=2):
        return replace(self, n_t=self.n_t * factor, certified_tail=None,
                       l_max=None if self.l_max is None else self.l_max * factor)

    def with_l_max(self, l_max, certified):
        return replace(self, l_max=l_max, certified_tail=certified)


def _bary_matrix(x, targets):
    """Lagrange interpolation from nodes x to targets (rows sum to one)."""
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    wb = 1.0 / diff.prod(axis=1)
    d = targets[:, None] - x[None, :]
    hit = d == 0
    d[hit] = 1.0
    M = wb / d
    M /= M.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    M[rows] = hit[rows].astype(float)
    return M


class NystromGrid:
    def __init__(self, breaks, disc: Discretization, geometry=FULL_LINE):
        self.disc, self.geometry = disc, geometry
        edges = [float(breaks[0])]
        for a, b in zip(breaks[:-1], breaks[1:]):
            k = max(1, int(np.ceil((b - a) / disc.panel_max - 1e-12)))
            edges.extend(np.linspace(a, b, k + 1)[1:])
        self.edges = np.array(edges)
        n = disc.n_t
        xg, wg = np.polynomial.legendre.leggauss(n)
        ts, ws, pid = [], [], []
        for p, (a, b) in enumerate(zip(self.edges[:-1], self.edges[1:])):
            ts.append(0.5 * (b - a) * xg + 0.5 * (a + b))
            ws.append(0.5 * (b - a) * wg)
            pid.append(np.full(n, p))
        self.t = np.concatenate(ts)
        self.w = np.concatenate(ws)
        self.panel = np.concatenate(pid)
        self.n_p = n
        self.size = len(self.t)
        self._dist = np.abs(self.t[:, None] - self.t[None, :])
        self._sum = self.t[:, None] + self.t[None, :]
        if disc.quad == "gl_split":
            self._build_split(xg, wg)

    def _build_split(self, xg, wg):
        # for each row: sub-nodes on [a, t_i] and [t_i, b] and the interpolation
        # from the panel's nodes to them; all panels share the reference layout
        n = self.n_p
        self.sub_s, self.sub_w, self.sub_L = [], [], []
        for p, (a, b) in enumerate(zip(self.edges[:-1], self.edges[1:])):
            tp = self.t[self.panel == p]
            S = np.empty((n, 2 * n))
            Wt = np.empty((n, 2 * n))
            Lm = np.empty((n, 2 * n, n))
            for i, ti in enumerate(tp):
                left = 0.5 * (ti - a) * xg + 0.5 * (ti + a)
                right = 0.5 * (b - ti) * xg + 0.5 * (b + ti)
                S[i] = np.concatenate([left, right])
                Wt[i] = np.concatenate([0.5 * (ti - a) * wg, 0.5 * (b - ti) * wg])
                Lm[i] = _bary_matrix(tp, S[i])
            self.sub_s.append(S)
            self.sub_w.append(Wt)
            self.sub_L.append(Lm)

    def kernel(self, k):
        """Quadrature-weighted kernel matrices, shape (P, n, n), for roots k of shape (P,)."""
        k = np.asarray(k, dtype=complex).reshape(-1)
        kk = k[:, None, None]
        g = np.exp(1j * kk * self._dist)
        if self.geometry != FULL_LINE:
            g = g - np.exp(1j * kk * self._sum)
        W = (0.5j / kk) * g * self.w[None, None, :]
        if self.disc.quad == "gl_split":
            n = self.n_p
            for p in range(len(self.edges) - 1):
                idx = slice(p * n, (p + 1) * n)
                ti = self.t[idx]
                G = green(kk, ti[None, :, None], self.sub_s[p][None], self.geometry)  # (P, n, 2n)
                G = G * self.sub_w[p][None]
                # row i: sum_q G[:, i, q] L[i, q, j]
                W[:, idx, idx] = np.einsum("piq,iqj->pij", G, self.sub_L[p], optimize=True)
        return W
