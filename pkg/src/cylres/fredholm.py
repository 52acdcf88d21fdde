"""Fredholm determinant D(z) = det(I + V R_0(z) chi) and its zeros on Z-hat.

The operator is discretized on the support of V by a Nystrom rule in t and
by the first ``l_max`` transverse modes. For a separable potential the
matrix is block diagonal over modes and D factors into one small
determinant per threshold, raised to the number of kept modes at that
threshold.

With the default ``gl_split`` rule the discrete trace misses part of the
diagonal; every determinant is multiplied by exp(tr K - tr K_n), an
analytic nonvanishing factor computed from the exact diagonal of the
kernel. It leaves zeros untouched and makes values converge like n^-2.

On a cylinder the truncated determinant does not converge as l_max grows:
each extra mode contributes a factor 1 + tr K_l with tr K_l of size
1/sigma_l, and these do not multiply to a limit. Modes beyond the cutoff
chosen by the tail bound (the "head") therefore enter through the
regularized determinant det(I + K_l) exp(-tr K_l), which is analytic and
nonvanishing off the ramification points of those modes and converges like
sum 1/sigma_l^2. With the default discretization every mode is in the head.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import Box, CachedLog, ContourSettings, circle_winding, zeros_in_box
from .cross_section import CrossSection
from .exceptions import (BudgetExceeded, ContourTooClose, CutError, PreconditionViolated,
                         RamificationPoint, TailBoundExceeded)
from .kernels import HALF_LINE, cutoff_for, mode_tail_bound, modes_needed
from .nystrom import Discretization, NystromGrid
from .potential import PotentialData
from .records import ResonanceRecord, sort_records
from .regions import Region
from .sheets import (BoundaryChart, Chart, LambdaChart, R1Chart, RampChart, SurfacePoint,
                     all_roots)

COUPLED_BATCH = 8


class DetEvaluator:
    """Vectorized log D on a chart.

    ``l_max`` comes from the discretization or, when unset, from the tail
    bound at the largest Re lambda the caller will visit.
    """

    def __init__(self, pot: PotentialData, cs: CrossSection, disc: Discretization = Discretization(),
                 lam_re_max: float | None = None):
        self.pot, self.cs, self.disc = pot, cs, disc
        self.geometry = pot.geometry
        if disc.l_max is not None:
            L = disc.l_max
        else:
            if lam_re_max is None:
                raise ValueError("lam_re_max is needed to choose l_max")
            L = cutoff_for(cs, lam_re_max, pot.support, pot.vnorm, disc.tail_tol)
        if L > cs.n_modes:
            raise PreconditionViolated(f"l_max={L} exceeds the {cs.n_modes} stored modes")
        self.L = L
        self.head = L
        if disc.l_max is not None and lam_re_max is not None and not pot.is_zero:
            try:
                self.head = min(L, cutoff_for(cs, lam_re_max, pot.support, pot.vnorm, disc.tail_tol))
            except PreconditionViolated:
                pass
        self.n_thr = modes_needed(cs, L)
        self.kept = np.bincount(cs.mode_threshold[:L], minlength=self.n_thr)[:self.n_thr]
        self.kept_tail = np.bincount(cs.mode_threshold[self.head:L], minlength=self.n_thr)[:self.n_thr]
        self.zero = pot.is_zero
        self.grid = NystromGrid(pot.breakpoints(), disc, self.geometry)
        g = self.grid
        if pot.separable:
            self.vdiag = pot.diagonal(g.t)
            self.coup = None
        else:
            self.coup = pot.coupling(g.t, L)           # (N, L, L)
            self.vdiag = None
        self.mode_thr = cs.mode_threshold[:L]

    def log_det(self, roots: np.ndarray) -> np.ndarray:
        """log D from root vectors r_1..r_nthr, shape (P, n_thr)."""
        roots = np.asarray(roots, dtype=complex)
        P = roots.shape[0]
        if self.zero:
            return np.zeros(P, dtype=complex)
        if np.any(roots == 0):
            raise RamificationPoint("a root r_j vanishes at an evaluation point")
        if self.coup is None:
            return self._log_det_separable(roots)
        return self._log_det_coupled(roots)

    def _log_det_separable(self, roots):
        return self.threshold_log_dets(roots) @ self.kept.astype(float)

    def threshold_log_dets(self, roots):
        """Separable case: log of each threshold's block determinant, shape (P, n_thr)."""
        if self.coup is not None:
            raise ValueError("per-threshold factors exist only for separable potentials")
        roots = np.asarray(roots, dtype=complex)
        P, nthr = roots.shape
        g = self.grid
        k = roots.reshape(-1)
        W = g.kernel(k)                                   # (P*nthr, N, N)
        vt = self.vdiag
        A = vt[None, :, None] * W
        tr_disc = np.einsum("pii->p", A)
        idx = np.arange(g.size)
        A[:, idx, idx] += 1.0
        sign, logabs = np.linalg.slogdet(A)
        ld = logabs + 1j * np.angle(sign)
        tr = _diag_green(k[:, None], g.t[None, :], self.geometry) @ (g.w * vt)
        if self.disc.quad == "gl_split":
            ld = ld + (tr - tr_disc)
        ld = ld.reshape(P, nthr)
        if self.head < self.L:
            # thresholds wholly in the tail are regularized; a straddling one
            # is handled by its head/tail mode counts in log_det
            part = self.kept_tail > 0
            ld[:, part] -= tr.reshape(P, nthr)[:, part] * (self.kept_tail[part] / self.kept[part])
        return ld

    def _log_det_coupled(self, roots):
        P = roots.shape[0]
        g = self.grid
        N, L = g.size, self.L
        out = np.empty(P, dtype=complex)
        Vd = np.einsum("ill->il", self.coup)              # (N, L)
        for s in range(0, P, COUPLED_BATCH):
            r = roots[s:s + COUPLED_BATCH]
            p = r.shape[0]
            k = r[:, self.mode_thr]                       # (p, L) per mode
            W = g.kernel(k.reshape(-1)).reshape(p, L, N, N)
            # K[(i,l),(i',l')] = V_{l l'}(t_i) W_{l'}[i, i']
            K = np.einsum("ilm,pmij->pilj", self.coup, W).reshape(p, N * L, N * L)
            tr_disc = np.einsum("pii->p", K)
            K[:, np.arange(N * L), np.arange(N * L)] += 1.0
            sign, logabs = np.linalg.slogdet(K)
            ld = logabs + 1j * np.angle(sign)
            tr_l = np.einsum("pli,il,i->pl", _diag_green(k[:, :, None], g.t[None, None, :], self.geometry),
                             Vd, g.w)
            if self.disc.quad == "gl_split":
                ld = ld + (tr_l.sum(axis=1) - tr_disc)
            out[s:s + p] = ld - tr_l[:, self.head:].sum(axis=1)
        return out

    def log_det_chart(self, chart: Chart, w, normalize: bool = True) -> np.ndarray:
        """log D at chart coordinates w; in an r_m chart the pole of the m-th
        factor is removed by multiplying with r_m^{M}."""
        w = np.asarray(w, dtype=complex).reshape(-1)
        if isinstance(chart, RampChart):
            # D r_m^M is continuous at the ramification point; sample next to it
            w = np.where(w == 0, 1e-13, w)
        ld = self.log_det(chart.roots(w, self.n_thr))
        if normalize and isinstance(chart, RampChart) and chart.m <= self.n_thr and not self.zero:
            ld = ld + self.kept[chart.m - 1] * np.log(w)
        return ld

    def _ramp_norm(self, chart):
        return isinstance(chart, RampChart) and chart.m <= self.n_thr and not self.zero

    def part_weights(self, chart: Chart) -> np.ndarray:
        if self.zero or self.coup is not None:
            wts = [1.0]
        else:
            wts = list(self.kept.astype(float))
        if self._ramp_norm(chart):
            wts.append(float(self.kept[chart.m - 1]))
        return np.array(wts)

    def log_parts_chart(self, chart: Chart, w) -> np.ndarray:
        """Per-factor logs, one column per threshold block (separable case)
        plus the r_m normalization; weighted by :meth:`part_weights` they sum
        to :meth:`log_det_chart`."""
        w = np.asarray(w, dtype=complex).reshape(-1)
        if isinstance(chart, RampChart):
            w = np.where(w == 0, 1e-13, w)
        roots = chart.roots(w, self.n_thr)
        if self.zero:
            parts = np.zeros((len(w), 1), dtype=complex)
        elif self.coup is None:
            if np.any(roots == 0):
                raise RamificationPoint("a root r_j vanishes at an evaluation point")
            parts = self.threshold_log_dets(roots)
        else:
            parts = self.log_det(roots)[:, None]
        if self._ramp_norm(chart):
            parts = np.hstack([parts, np.log(w)[:, None]])
        return parts

    def cached_log(self, chart: Chart, scale: float, max_evals: int) -> CachedLog:
        return CachedLog(lambda w: self.log_parts_chart(chart, w), scale, max_evals,
                         weights=self.part_weights(chart))

    def normalization(self, chart: Chart, w):
        if isinstance(chart, RampChart) and chart.m <= self.n_thr and not self.zero:
            return self.kept[chart.m - 1] * np.log(np.asarray(w, dtype=complex))
        return 0.0


def _diag_green(k, t, geometry):
    d = 0.5j / k * np.ones_like(t)
    if geometry == HALF_LINE:
        d = d * (1.0 - np.exp(2j * k * t))
    return d


# ---------------------------------------------------------------- point API

def _cutoff_at(p: SurfacePoint, pot, cs, disc):
    if disc.l_max is not None:
        L = disc.l_max
        if pot.vnorm > 0 and L < cs.n_modes + (cs.next_sigma_sq is not None):
            tail = mode_tail_bound(cs, p, pot.support, L, pot.vnorm)
            if tail > disc.tail_tol:
                raise TailBoundExceeded(f"tail bound {tail:.3g} exceeds tail_tol={disc.tail_tol}")
        return disc
    L = cutoff_for(cs, p.lam.real, pot.support, pot.vnorm, disc.tail_tol)
    tail = mode_tail_bound(cs, p, pot.support, L, pot.vnorm) if pot.vnorm > 0 else 0.0
    if tail > disc.tail_tol:
        raise TailBoundExceeded(f"tail bound {tail:.3g} exceeds tail_tol={disc.tail_tol}")
    return disc.with_l_max(L, tail)


def build_K(p: SurfacePoint, pot: PotentialData, cs: CrossSection,
            disc: Discretization = Discretization()) -> np.ndarray:
    """Nystrom matrix of V R_0(z) chi, indexed by (t-node, mode)."""
    p.check(cs)
    d = _cutoff_at(p, pot, cs, disc)
    ev = DetEvaluator(pot, cs, d)
    r = all_roots(cs, p, ev.n_thr)
    if np.any(r == 0):
        raise RamificationPoint(f"{p} is a ramification point")
    g = ev.grid
    N, L = g.size, ev.L
    k = r[ev.mode_thr]
    W = g.kernel(k)                                       # (L, N, N)
    C = pot.coupling(g.t, L)
    K = np.einsum("ilm,mij->iljm", C, W)
    return K.reshape(N * L, N * L)


def fredholm_det(p: SurfacePoint, pot: PotentialData, cs: CrossSection,
                 disc: Discretization = Discretization()) -> complex:
    """D at a surface point (trace-corrected when the split rule is used)."""
    p.check(cs)
    if pot.is_zero:
        return 1.0 + 0j
    d = _cutoff_at(p, pot, cs, disc)
    ev = DetEvaluator(pot, cs, d, p.lam.real)
    r = all_roots(cs, p, ev.n_thr)[None, :]
    return complex(np.exp(ev.log_det(r)[0]))


def fredholm_log_det(points, pot, cs, disc: Discretization) -> np.ndarray:
    """log D at several points with one fixed l_max (which must be set)."""
    if disc.l_max is None:
        raise ValueError("fix l_max for batched evaluation")
    ev = DetEvaluator(pot, cs, disc, max(p.lam.real for p in points))
    r = np.array([all_roots(cs, p, ev.n_thr) for p in points])
    return ev.log_det(r)


# ---------------------------------------------------------------- analytic cells

def _cut_lines(chart: Chart):
    """Cuts of the chart's root functions as (axis, lo, hi) pieces of the
    real axis ('re') or the imaginary axis ('im') of the w-plane."""
    cs = chart.cs
    nu = cs.nu_sq
    if isinstance(chart, LambdaChart):
        return [("re", nu[0], np.inf)]
    if isinstance(chart, RampChart):
        m = chart.m
        out = []
        if m < len(nu):
            g = math.sqrt(nu[m] - nu[m - 1])
            out += [("re", g, np.inf), ("re", -np.inf, -g)]
        if m >= 2:
            g = math.sqrt(nu[m - 1] - nu[m - 2])
            out += [("im", g, np.inf), ("im", -np.inf, -g)]
        return out
    if isinstance(chart, BoundaryChart):
        lo, hi = chart.segment()
        return [("re", -np.inf, lo), ("re", hi, np.inf)]
    if isinstance(chart, R1Chart):
        if len(nu) < 2:
            return []
        g = math.sqrt(nu[1] - nu[0])
        return [("re", g, np.inf), ("re", -np.inf, -g)]
    raise TypeError(f"unsupported chart {chart!r}")


def analytic_cells(chart: Chart, box: Box, gap: float) -> list[Box]:
    """Split ``box`` along the axes wherever it meets a cut, leaving a strip of
    half-width ``gap`` around the axis."""
    cuts = _cut_lines(chart)
    split_re = any(ax == "re" and box.y0 < 0 < box.y1 and hi > box.x0 and lo < box.x1
                   for ax, lo, hi in cuts)
    split_im = any(ax == "im" and box.x0 < 0 < box.x1 and hi > box.y0 and lo < box.y1
                   for ax, lo, hi in cuts)
    xs = [(box.x0, -gap), (gap, box.x1)] if split_im else [(box.x0, box.x1)]
    ys = [(box.y0, -gap), (gap, box.y1)] if split_re else [(box.y0, box.y1)]
    return [Box(x0, x1, y0, y1) for y0, y1 in ys for x0, x1 in xs if x1 > x0 and y1 > y0]


def _meets_cut(chart, c, r):
    for ax, lo, hi in _cut_lines(chart):
        if ax == "re":
            if abs(c.imag) < r:
                h = math.sqrt(r * r - c.imag ** 2)
                if c.real + h > lo and c.real - h < hi:
                    return True
        elif abs(c.real) < r:
            h = math.sqrt(r * r - c.real ** 2)
            if c.imag + h > lo and c.imag - h < hi:
                return True
    return False


def _region_lam_re_max(chart, center, radius):
    th = 2 * np.pi * np.arange(512) / 512
    w = center + radius * np.exp(1j * th)
    return float(np.max(chart.lam(w).real))


# ---------------------------------------------------------------- counting and locating

@dataclass
class LocateResult:
    records: list
    outer_count: int
    n_evals: int
    l_max: int


def _logf(ev: DetEvaluator, chart: Chart):
    return lambda w: ev.log_det_chart(chart, w)


def winding_count(chart: Chart, center, radius: float, pot: PotentialData,
                  disc: Discretization = Discretization(), turns: int = 1,
                  settings: ContourSettings = ContourSettings()) -> int:
    """Winding number of D (normalized in r_m charts) along a circle in a chart."""
    center = complex(center)
    if _meets_cut(chart, center, radius):
        raise CutError("the counting circle meets a cut of the chart")
    if pot.is_zero:
        return 0
    ev = DetEvaluator(pot, chart.cs, disc, _region_lam_re_max(chart, center, radius))
    F = ev.cached_log(chart, max(radius, abs(center), 1.0), settings.max_evals)
    return circle_winding(F, center, radius, settings, turns)


def locate_resonances(region: Region, pot: PotentialData, disc: Discretization = Discretization(),
                      settings: ContourSettings = ContourSettings(), gap: float | None = None,
                      full: bool = False):
    """Zeros of D in ``region`` with multiplicities.

    The bounding square of the region is cut into analytic cells along the
    chart's cuts, each cell is searched by the quadtree/Newton procedure, and
    zeros outside the disk (or inside its puncture, or on another sheet
    than ``region.sheet``) are dropped.
    """
    chart, c, R = region.chart, region.center, region.radius
    cs = chart.cs
    if pot.is_zero:
        res = LocateResult([], 0, 0, 0)
        return res if full else []
    ev = DetEvaluator(pot, cs, disc, _region_lam_re_max(chart, c, R * 1.01))
    scale = max(R, 1e-3)
    gap = 1e-7 * scale if gap is None else gap
    F = ev.cached_log(chart, scale, settings.max_evals)
    # slightly lopsided so that no split line passes through the center
    pad = R * 1.0123
    outer = Box(c.real - pad, c.real + 1.0371 * pad, c.imag - 1.0213 * pad, c.imag + pad)
    cells = analytic_cells(chart, outer, gap)
    found = []
    total = 0
    for cell in cells:
        if region.sheet is not None and _single_sheet(cell):
            if chart.point(cell.center).sheet != region.sheet:
                continue
        try:
            zs = zeros_in_box(F, cell, settings)
        except BudgetExceeded as e:
            raise BudgetExceeded(str(e), partial=_records(found, ev, chart, region, F))
        total += sum(n for _, n in zs)
        found.extend(zs)
    recs = _records(found, ev, chart, region, F)
    if full:
        return LocateResult(recs, total, F.n_evals, ev.L)
    return recs


def _single_sheet(cell):
    # sheets change only across the axes of a chart
    return not (cell.x0 < 0 < cell.x1 or cell.y0 < 0 < cell.y1)


def _records(found, ev, chart, region, F):
    out = []
    for z, n in found:
        if not region.contains(z):
            continue
        p = chart.point(z)
        if region.sheet is not None and p.sheet != region.sheet:
            continue
        L = F([z])[0] - ev.normalization(chart, z)
        res = float(np.exp(L.real)) if np.isfinite(L.real) else 0.0
        out.append(ResonanceRecord(p, int(n), res, region.radius, chart.rm(z)))
    return sort_records(out)


def jensen_integral(chart: Chart, center, radius: float, pot: PotentialData,
                    disc: Discretization = Discretization(), tol: float = 1e-10) -> float:
    """(1/2 pi) int log|D(c + r e^{it})| dt - log|D(c)| for the chart function."""
    center = complex(center)
    if _meets_cut(chart, center, radius):
        raise CutError("the Jensen circle meets a cut of the chart")
    if pot.is_zero:
        return 0.0
    ev = DetEvaluator(pot, chart.cs, disc, _region_lam_re_max(chart, center, radius))
    f = _logf(ev, chart)
    L0 = f(np.array([center]))[0].real
    if not np.isfinite(L0):
        raise ContourTooClose("D vanishes at the center")
    n, prev = 64, None
    while n <= 2 ** 16:
        th = 2 * np.pi * np.arange(n) / n
        vals = f(center + radius * np.exp(1j * th)).real
        if not np.all(np.isfinite(vals)):
            raise ContourTooClose("D vanishes on the Jensen circle")
        cur = float(vals.mean()) - L0
        if prev is not None and abs(cur - prev) < tol * max(1.0, abs(cur)):
            return cur
        prev, n = cur, 2 * n
    return cur


def jensen_from_zeros(center, radius, zeros) -> float:
    return float(sum(n * math.log(radius / abs(z - center)) for z, n in zeros))


def eigenvalue_exclusion(tau: float, pot: PotentialData, cs: CrossSection) -> bool:
    """True when tau cannot be an eigenvalue: ||V|| (a + 1) / min_j |r_j(tau)| <= 1/2."""
    rmin = float(np.min(np.sqrt(np.abs(tau - cs.nu_sq))))
    if rmin == 0.0:
        return False
    return pot.vnorm * (pot.support_length + 1.0) / rmin <= 0.5


# ---------------------------------------------------------------- self-tests

def det_inequality_holds(A: np.ndarray, B: np.ndarray) -> bool:
    """|det(I+A+B)| <= det(I+|A|)^2 det(I+|B|)^2 with |X| = (X*X)^(1/2)."""
    n = A.shape[0]
    lhs = np.linalg.slogdet(np.eye(n) + A + B)[1]
    sa = np.linalg.svd(A, compute_uv=False)
    sb = np.linalg.svd(B, compute_uv=False)
    rhs = 2 * np.log1p(sa).sum() + 2 * np.log1p(sb).sum()
    return bool(lhs <= rhs + 1e-10 * max(1.0, abs(rhs)))


def schatten_holds(K: np.ndarray) -> bool:
    """log|det(I+K)| <= ||K||_1."""
    lhs = np.linalg.slogdet(np.eye(K.shape[0]) + K)[1]
    return bool(lhs <= np.linalg.svd(K, compute_uv=False).sum() * (1 + 1e-12) + 1e-12)
