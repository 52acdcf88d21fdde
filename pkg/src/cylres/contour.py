"""Argument-principle machinery for analytic functions given through their logarithm.

Functions are supplied as ``logf(z) -> log f(z)`` on arrays (real part
log|f|, imaginary part any determination of arg f). Working with logs keeps
Fredholm determinants, which span many orders of magnitude, in range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BudgetExceeded, ContourTooClose, NonIntegerWinding

TWO_PI = 2.0 * math.pi
SPLIT_FRACTIONS = (0.5, 0.4716, 0.5284, 0.4431, 0.5569, 0.4107, 0.5893)


@dataclass(frozen=True)
class ContourSettings:
    max_step: float = 0.5          # largest accepted phase change between samples (rad)
    max_logratio: float = 1.0      # largest accepted change of log|f| between samples
    n0: int = 8                    # initial samples per edge
    min_len: float = 1e-11         # shortest sample spacing, relative to the scale
    int_tol: float = 1e-3          # windings must be this close to an integer
    max_evals: int = 400_000
    newton_iter: int = 40
    cauchy_points: int = 16


def wrap(x):
    """Map phases into (-pi, pi]."""
    return x - TWO_PI * np.round(x / TWO_PI)


class CachedLog:
    """Memoized, batch-evaluated log f with an evaluation budget.

    With ``weights`` given, ``logf`` returns one column per factor of
    f = prod_k f_k^{weights[k]}; phases are then tracked factor by factor,
    so a high power of a slowly turning factor cannot alias a full turn
    between two samples.
    """

    def __init__(self, logf, scale: float, max_evals: int = 400_000, weights=None):
        self.logf = logf
        self.scale = float(scale)
        self._q = self.scale * 2.0 ** -42
        self.cache: dict = {}
        self.n_evals = 0
        self.max_evals = max_evals
        self.weights = None if weights is None else np.asarray(weights, dtype=float)

    def _key(self, z):
        return (round(z.real / self._q), round(z.imag / self._q))

    def parts(self, zs) -> np.ndarray:
        """Per-factor logs, shape (len(zs), K)."""
        zs = np.asarray(zs, dtype=complex).reshape(-1)
        keys = [self._key(z) for z in zs]
        todo = {}
        for z, k in zip(zs, keys):
            if k not in self.cache and k not in todo:
                todo[k] = z
        if todo:
            if self.n_evals + len(todo) > self.max_evals:
                raise BudgetExceeded(f"evaluation budget of {self.max_evals} points exhausted")
            vals = np.asarray(self.logf(np.array(list(todo.values()))), dtype=complex)
            if self.weights is None:
                vals = vals.reshape(-1, 1)
            self.n_evals += len(todo)
            for k, v in zip(todo, vals):
                self.cache[k] = v
        return np.array([self.cache[k] for k in keys], dtype=complex).reshape(len(zs), -1)

    def __call__(self, zs) -> np.ndarray:
        P = self.parts(zs)
        if self.weights is None:
            return P[:, 0]
        with np.errstate(invalid="ignore"):
            return P @ self.weights

    def phase_weights(self):
        return np.ones(1) if self.weights is None else self.weights


# ---------------------------------------------------------------- phase along paths

def _bad(L0, L1, st: ContourSettings):
    d = L1 - L0
    with np.errstate(invalid="ignore"):
        b = (np.abs(wrap(d.imag)) > st.max_step) | ~(np.abs(d.real) <= st.max_logratio)
    return b.any(axis=1)


def path_phase(F: CachedLog, paths, st: ContourSettings) -> np.ndarray:
    """Total change of arg f along each path, sampled adaptively.

    Each path is a vectorized map s in [0, 1] -> z. All paths are refined in
    lockstep so that every round is a single batched evaluation. An interval
    is final only once its midpoint has been sampled and both halves pass:
    two samples of equal modulus on either side of a multiple zero can
    otherwise hide a full turn.
    """
    n0 = st.n0
    ss = [np.linspace(0.0, 1.0, n0 + 1) for _ in paths]
    vers = [np.zeros(n0, dtype=bool) for _ in paths]
    Ls = [None] * len(paths)
    pending = list(range(len(paths)))
    new_s = [s for s in ss]
    new_v = [None] * len(paths)
    while pending:
        pts, owners = [], []
        for i in pending:
            z = paths[i](new_s[i])
            pts.append(z)
            owners.append(len(z))
        vals = F.parts(np.concatenate(pts))
        off = 0
        nxt = []
        for i, cnt in zip(pending, owners):
            v = vals[off:off + cnt]
            off += cnt
            if Ls[i] is None:
                Ls[i] = v
            else:
                s_all = np.concatenate([ss[i], new_s[i]])
                order = np.argsort(s_all, kind="stable")
                ss[i] = s_all[order]
                Ls[i] = np.concatenate([Ls[i], v])[order]
                vers[i] = new_v[i]
            if not np.isfinite(Ls[i].real).all():
                raise ContourTooClose("f vanishes on the contour")
            bad = _bad(Ls[i][:-1], Ls[i][1:], st)
            need = bad | ~vers[i]
            if need.any():
                s = ss[i]
                lo, hi = s[:-1][need], s[1:][need]
                if bad.any():
                    z_lo, z_hi = paths[i](s[:-1][bad]), paths[i](s[1:][bad])
                    if np.min(np.abs(z_hi - z_lo)) < st.min_len * F.scale:
                        raise ContourTooClose("contour passes too close to a zero of f")
                new_s[i] = 0.5 * (lo + hi)
                # halves of a good interval are verified, halves of a bad one are not
                new_v[i] = np.repeat(np.where(need, ~bad, True), np.where(need, 2, 1))
                nxt.append(i)
        pending = nxt
    wts = F.phase_weights()
    return np.array([float((wrap(np.diff(L.imag, axis=0)) @ wts).sum()) for L in Ls])


def segment(a: complex, b: complex):
    a, b = complex(a), complex(b)
    return lambda s: a + (b - a) * np.asarray(s)


def arc(c: complex, r: float, turns: float = 1.0):
    c = complex(c)
    return lambda s: c + r * np.exp(1j * TWO_PI * turns * np.asarray(s))


def to_integer(total_phase: float, st: ContourSettings) -> int:
    w = total_phase / TWO_PI
    n = round(w)
    if abs(w - n) > st.int_tol:
        raise NonIntegerWinding(f"winding {w:.6f} is not within {st.int_tol} of an integer")
    return int(n)


def circle_winding(F: CachedLog, c, r, st: ContourSettings, turns: int = 1) -> int:
    # one arc per quarter keeps the first sampling round reasonably dense
    paths = [(lambda q: (lambda s: c + r * np.exp(1j * TWO_PI * turns * (q + np.asarray(s)) / 4)))(q)
             for q in range(4)]
    return to_integer(float(path_phase(F, paths, st).sum()), st)


# ---------------------------------------------------------------- boxes

@dataclass(frozen=True)
class Box:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def center(self):
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def size(self):
        return max(self.x1 - self.x0, self.y1 - self.y0)

    def corners(self):
        return [complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1)]

    def inside(self, z, margin=0.0):
        return (self.x0 + margin < z.real < self.x1 - margin) and (self.y0 + margin < z.imag < self.y1 - margin)

    def dist_to_edge(self, z):
        return min(z.real - self.x0, self.x1 - z.real, z.imag - self.y0, self.y1 - z.imag)

    def split(self, fx=0.5, fy=0.5):
        xm = self.x0 + fx * (self.x1 - self.x0)
        ym = self.y0 + fy * (self.y1 - self.y0)
        return [Box(self.x0, xm, self.y0, ym), Box(xm, self.x1, self.y0, ym),
                Box(self.x0, xm, ym, self.y1), Box(xm, self.x1, ym, self.y1)]

    @classmethod
    def square(cls, c, h):
        return cls(c.real - h, c.real + h, c.imag - h, c.imag + h)


class EdgeCache:
    """Phase changes along straight edges, shared by neighbouring boxes."""

    def __init__(self, F: CachedLog, st: ContourSettings):
        self.F, self.st = F, st
        self.edges: dict = {}

    def _key(self, a, b):
        return (self.F._key(a), self.F._key(b))

    def windings(self, boxes) -> list[int]:
        need = []
        for b in boxes:
            c = b.corners()
            for a, e in zip(c, c[1:] + c[:1]):
                if self._key(a, e) not in self.edges and self._key(e, a) not in self.edges:
                    k = self._key(a, e)
                    if k not in [self._key(*x) for x in need]:
                        need.append((a, e))
        if need:
            ph = path_phase(self.F, [segment(a, e) for a, e in need], self.st)
            for (a, e), p in zip(need, ph):
                self.edges[self._key(a, e)] = float(p)
        out = []
        for b in boxes:
            c = b.corners()
            tot = 0.0
            for a, e in zip(c, c[1:] + c[:1]):
                k = self._key(a, e)
                tot += self.edges[k] if k in self.edges else -self.edges[self._key(e, a)]
            out.append(to_integer(tot, self.st))
        return out


# ---------------------------------------------------------------- refinement

def _dlog(F: CachedLog, z: complex, h: float, n: int, st: ContourSettings) -> complex:
    """f'/f at z, factor by factor: central difference for simple zeros,
    Cauchy circle otherwise."""
    P0 = F.parts([z])[0]
    if n == 1:
        Pp, Pm = F.parts([z + h, z - h])
        g = (np.exp(Pp - P0) - np.exp(Pm - P0)) / (2 * h)
    else:
        m = st.cauchy_points
        e = np.exp(TWO_PI * 1j * np.arange(m) / m)
        U = np.exp(F.parts(z + h * e) - P0)
        g = (U * e.conj()[:, None]).mean(axis=0) / h
    return complex(g @ F.phase_weights())


def newton_zero(F: CachedLog, z: complex, n: int, h: float, box: Box, st: ContourSettings):
    """Modified Newton z <- z - n f/f'; returns the limit inside ``box`` or None."""
    tol = 1e-13 * max(F.scale, abs(z))
    for _ in range(st.newton_iter):
        if not np.isfinite(F([z])[0].real):
            return z
        g = _dlog(F, z, h, n, st)
        if not np.isfinite(g) or g == 0:
            return None
        step = n / g
        z = z - step
        if not box.inside(z):
            return None
        if abs(step) < tol:
            return z
    return z if abs(step) < 1e-9 * F.scale else None


def zeros_in_box(F: CachedLog, box: Box, st: ContourSettings, count: int | None = None,
                 h: float | None = None, min_size: float | None = None):
    """Zeros of f in ``box`` as a list of (z, multiplicity).

    Boxes with nonzero winding are first attacked by modified Newton from their
    center; the candidate is accepted when a small box around it carries the
    whole count. Otherwise the box is split in four (jittered split lines when
    an internal edge meets a zero) and the children are processed in turn.
    Children counts must add up to the parent's count.
    """
    ec = EdgeCache(F, st)
    if count is None:
        count = ec.windings([box])[0]
    h = 1e-5 * F.scale if h is None else h
    min_size = 1e-9 * F.scale if min_size is None else min_size
    out = []
    stack = [(box, count)]
    while stack:
        b, n = stack.pop()
        if n == 0:
            continue
        if n < 0:
            raise NonIntegerWinding(f"negative winding {n}: the function has poles in the box")
        z = newton_zero(F, b.center, n, min(h, 0.1 * b.size), b, st)
        if z is not None:
            rc = min(0.5 * b.dist_to_edge(z), 1e-3 * b.size, 1e-4 * F.scale)
            if rc > 100 * st.min_len * F.scale:
                try:
                    if ec.windings([Box.square(z, rc)])[0] == n:
                        out.append((z, n))
                        continue
                except ContourTooClose:
                    pass
        if b.size < min_size:
            out.append((b.center, n))
            continue
        children = None
        for fx, fy in zip(SPLIT_FRACTIONS, SPLIT_FRACTIONS[::-1]):
            kids = b.split(fx, fy)
            try:
                cnt = ec.windings(kids)
            except ContourTooClose:
                continue
            if sum(cnt) == n:
                children = list(zip(kids, cnt))
                break
        if children is None:
            raise NonIntegerWinding(f"could not subdivide a box carrying {n} zeros consistently")
        # reversed so the lower-left child is processed first (fixed order)
        stack.extend(reversed(children))
    return out
