"""Scattering matrices S_E(z) from generalized eigenfunctions.

The mode system

    -u_b'' + sum_b' (V_bb'(x) - k_b^2 delta_bb') u_b' = 0,   k_b = r~_b(z),

is solved on [-T, T] (or [0, T] for the Dirichlet half-cylinder) with a
fourth-order Numerov discretization on a grid aligned with the jumps of V.
Derivatives at the jumps and at the ends use one-sided fourth-order
formulas that integrate u'' = Q u over a single cell, so continuity of u'
across a jump and the outgoing closure u' = +-i k u + forcing are imposed
to the same order. Past the support of V each mode is exactly a
combination of e^{+-ikx}, which makes the closure exact.

Channels are sigma-indices of the stored cross-section. For the full line
it must be a two-ended catalog whose labels carry the end ("L": t = -x,
"R": t = x); the half-cylinder uses the base catalog directly.
Entries are normalized so that S_mj multiplies e^{i r~_m t}.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contour import CachedLog, ContourSettings, circle_winding
from .cross_section import CrossSection
from .exceptions import DisagreementWithResolvent, IllConditioned, RamificationPoint
from .kernels import FULL_LINE, HALF_LINE
from .potential import PotentialData
from .sheets import Chart, Sheet, SurfacePoint, all_roots, involution_w


@dataclass(frozen=True)
class SolverParams:
    h: float = 1.0 / 64        # largest grid step
    margin: float = 0.5        # distance from supp V to the closure points
    extra_modes: int = 4       # closed base modes kept beyond the channels (coupled V only)
    cond_max: float = 1e12

    def refined(self, factor: int = 2):
        return replace(self, h=self.h / factor)


@dataclass(frozen=True)
class SMatrixSample:
    point: SurfacePoint
    modes: tuple               # sigma-indices of E~
    entries: np.ndarray
    solver_residual: float

    def flux_normalized(self, k):
        s = np.sqrt(np.asarray(k, dtype=complex))
        return s[:, None] * self.entries / s[None, :]


class ChannelMap:
    """sigma-index -> (base mode, end) for the geometry at hand."""

    def __init__(self, cs: CrossSection, geometry: str):
        self.cs, self.geometry = cs, geometry
        n = cs.n_modes
        if geometry == FULL_LINE:
            ends = [lab[:1] for lab in cs.labels]
            if set(ends) != {"L", "R"}:
                raise ValueError("full-line scattering needs a two-ended cross-section (labels L/R)")
            pos = {"L": 0, "R": 0}
            self.base, self.end = [], []
            for l in range(n):
                e = ends[l]
                self.base.append(pos[e])
                self.end.append(e)
                pos[e] += 1
            left = [cs.sigma_sq[l] for l in range(n) if ends[l] == "L"]
            right = [cs.sigma_sq[l] for l in range(n) if ends[l] == "R"]
            if left != right:
                raise ValueError("the two ends carry different spectra")
            self.base_sigma = np.array(left)
        else:
            self.base = list(range(n))
            self.end = ["R"] * n
            self.base_sigma = np.asarray(cs.sigma_sq, dtype=float)
        self.base = np.array(self.base)
        # threshold (0-based) of each base mode
        thr = {}
        for l in range(n):
            thr[self.base[l]] = cs.mode_threshold[l]
        self.base_thr = np.array([thr[b] for b in range(len(self.base_sigma))])

    def channels(self, E: Sheet):
        return tuple(l + 1 for l in range(self.cs.n_modes) if int(self.cs.mode_threshold[l]) + 1 in E)


# ---------------------------------------------------------------- discretization

def _pieces(pot: PotentialData, params: SolverParams):
    lo, hi = pot.support
    br = [float(x) for x in pot.breakpoints()]
    T = max(abs(lo), abs(hi)) + params.margin
    if pot.geometry == HALF_LINE:
        pts = [0.0] + [x for x in br if x > 0] + [T]
    else:
        pts = [-T] + br + [T]
    pts = sorted(set(pts))
    pieces = []
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(4, int(math.ceil((b - a) / params.h - 1e-9)))
        pieces.append((a, b, n))
    return T, pieces


class ModeSystem:
    """Sparse Numerov system for fixed roots k (one per kept base mode)."""

    def __init__(self, k: np.ndarray, pot: PotentialData, params: SolverParams):
        self.k = np.asarray(k, dtype=complex)
        B = len(self.k)
        self.B, self.pot = B, pot
        self.T, pieces = _pieces(pot, params)
        xs = []
        for p, (a, b, n) in enumerate(pieces):
            x = np.linspace(a, b, n + 1)
            xs.append(x if p == 0 else x[1:])
        self.x = np.concatenate(xs)
        N = len(self.x)
        rows, cols, vals = [], [], []
        eye = np.eye(B)
        K2 = np.diag(self.k ** 2)

        def add(r_node, c_node, M):
            # dense B x B block at (r_node, c_node)
            rr, cc = np.meshgrid(np.arange(B), np.arange(B), indexing="ij")
            rows.append(r_node * B + rr.ravel())
            cols.append(c_node * B + cc.ravel())
            vals.append(np.asarray(M, dtype=complex).ravel())

        def Q_on(a, b, x):
            eps = 1e-12 * (b - a)
            xe = np.clip(x, a + eps, b - eps)
            V = pot.coupling(xe, B) if not pot.separable else \
                pot.diagonal(xe)[:, None, None] * eye[None]
            return V - K2[None]

        start = 0
        self.deriv_left, self.deriv_right = [], []      # one-sided u' stencils per piece
        for p, (a, b, n) in enumerate(pieces):
            h = (b - a) / n
            nodes = start + np.arange(n + 1)
            Q = Q_on(a, b, self.x[nodes])
            c1 = h * h / 12.0
            for j in range(1, n):
                add(nodes[j], nodes[j - 1], eye - c1 * Q[j - 1])
                add(nodes[j], nodes[j], -2.0 * (eye + 5.0 * c1 * Q[j]))
                add(nodes[j], nodes[j + 1], eye - c1 * Q[j + 1])
            c2 = h / 24.0
            # u'(a) = [u1 - u0 - h^2 (7 f0 + 6 f1 - f2)/24] / h, f = Q u
            left = [(nodes[0], -eye / h - 7 * c2 * Q[0]), (nodes[1], eye / h - 6 * c2 * Q[1]),
                    (nodes[2], c2 * Q[2])]
            # u'(b) = [u_n - u_{n-1} + h^2 (7 f_n + 6 f_{n-1} - f_{n-2})/24] / h
            right = [(nodes[n], eye / h + 7 * c2 * Q[n]), (nodes[n - 1], -eye / h + 6 * c2 * Q[n - 1]),
                     (nodes[n - 2], -c2 * Q[n - 2])]
            self.deriv_left.append(left)
            self.deriv_right.append(right)
            start += n
        # continuity of u' at inner breakpoints
        for p in range(len(pieces) - 1):
            node = self.deriv_right[p][0][0]
            for c, M in self.deriv_right[p]:
                add(node, c, M)
            for c, M in self.deriv_left[p + 1]:
                add(node, c, -M)
        ik = np.diag(1j * self.k)
        # x = T: u' - i k u = forcing
        last = N - 1
        for c, M in self.deriv_right[-1]:
            add(last, c, M)
        add(last, last, -ik)
        if pot.geometry == HALF_LINE:
            add(0, 0, eye)
        else:
            for c, M in self.deriv_left[0]:
                add(0, c, M)
            add(0, 0, ik)
        self.N = N
        A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N * B, N * B)).tocsc()
        self.A = A
        try:
            self.lu = spla.splu(A)
        except RuntimeError as e:
            raise IllConditioned(f"singular mode system: {e}", cond=np.inf)

    def incoming_rhs(self, b: int, end: str) -> np.ndarray:
        rhs = np.zeros(self.N * self.B, dtype=complex)
        k = self.k[b]
        ph = np.exp(-1j * k * self.T)
        if end == "R":
            rhs[(self.N - 1) * self.B + b] = -2j * k * ph
        else:
            rhs[b] = 2j * k * ph
        return rhs

    def solve(self, rhs: np.ndarray, cond_max: float):
        rhs = np.atleast_2d(rhs.T).T if rhs.ndim == 1 else rhs
        U = self.lu.solve(rhs)
        res = np.linalg.norm(self.A @ U - rhs) / max(np.linalg.norm(rhs), 1e-300)
        anorm = spla.norm(self.A, 1)
        cond = anorm * np.linalg.norm(U, axis=0).max() / max(np.linalg.norm(rhs, axis=0).min(), 1e-300)
        if not np.all(np.isfinite(U)) or cond > cond_max:
            raise IllConditioned(f"condition estimate {cond:.3g} exceeds {cond_max:.3g}", cond=cond)
        return U, float(res)

    def end_values(self, U):
        """Mode values at x = -T and x = T, shape (2, B, ncol)."""
        B = self.B
        return np.stack([U[:B], U[(self.N - 1) * B:]])


# ---------------------------------------------------------------- operations

def _roots_for(cmap: ChannelMap, roots_thr: np.ndarray, B: int) -> np.ndarray:
    return roots_thr[cmap.base_thr[:B]]


def _n_base(cmap: ChannelMap, chans, pot, params) -> int:
    if not chans:
        return 0
    need = max(cmap.base[l - 1] for l in chans) + 1
    if not pot.separable:
        need = min(len(cmap.base_sigma), need + params.extra_modes)
    return need


def _smatrix_from_roots(cs, pot, chans, roots_thr, params, cmap=None):
    """S restricted to ``chans`` given r_1..r_n (threshold roots)."""
    cmap = cmap or ChannelMap(cs, pot.geometry)
    if not chans:
        return np.zeros((0, 0), dtype=complex), 0.0
    B = _n_base(cmap, chans, pot, params)
    k = _roots_for(cmap, roots_thr, B)
    if np.any(k == 0):
        raise RamificationPoint("a channel root vanishes")
    sysm = ModeSystem(k, pot, params)
    rhs = np.stack([sysm.incoming_rhs(cmap.base[l - 1], cmap.end[l - 1]) for l in chans], axis=1)
    U, res = sysm.solve(rhs, params.cond_max)
    ends = sysm.end_values(U)                            # (2, B, ncol)
    S = np.empty((len(chans), len(chans)), dtype=complex)
    for a, m in enumerate(chans):
        b, e = cmap.base[m - 1], cmap.end[m - 1]
        val = ends[1 if e == "R" else 0, b, :]
        ph = np.exp(-1j * k[b] * sysm.T)
        col = val.copy()
        for c, j in enumerate(chans):
            if j == m:
                col[c] -= ph
        S[a] = col * ph
    return S, res


def solve_generalized_eigenfunction(cs: CrossSection, pot: PotentialData, p: SurfacePoint, j: int,
                                    params: SolverParams = SolverParams()):
    """Outgoing coefficients of Phi_j at both ends.

    Returns a dict with arrays ``left`` and ``right`` over the kept base modes
    (``left`` is absent on the half-line), the grid size and the residual.
    """
    p.check(cs)
    cmap = ChannelMap(cs, pot.geometry)
    B = _n_base(cmap, (j,), pot, params)
    roots = all_roots(cs, p, int(cmap.base_thr[:B].max()) + 1)
    k = _roots_for(cmap, roots, B)
    if np.any(k == 0):
        raise RamificationPoint(f"{p} is a ramification point")
    sysm = ModeSystem(k, pot, params)
    b, e = cmap.base[j - 1], cmap.end[j - 1]
    U, res = sysm.solve(sysm.incoming_rhs(b, e), params.cond_max)
    ends = sysm.end_values(U)[:, :, 0]
    ph = np.exp(-1j * k * sysm.T)
    out = {}
    for idx, name in ((1, "right"), (0, "left")):
        if name == "left" and pot.geometry == HALF_LINE:
            continue
        v = ends[idx].copy()
        if (e == "R") == (idx == 1):
            v[b] -= ph[b]
        out[name] = v * ph
    out["residual"] = res
    out["nodes"] = sysm.N
    return out


def assemble_S(cs: CrossSection, pot: PotentialData, E: Sheet, p: SurfacePoint,
               params: SolverParams = SolverParams()) -> SMatrixSample:
    p.check(cs)
    cmap = ChannelMap(cs, pot.geometry)
    chans = cmap.channels(E)
    roots = all_roots(cs, p)
    S, res = _smatrix_from_roots(cs, pot, chans, roots, params, cmap)
    return SMatrixSample(p, chans, S, res)


def check_inverse_identity(cs: CrossSection, pot: PotentialData, E: Sheet, p: SurfacePoint,
                           params: SolverParams = SolverParams()) -> float:
    """||S_E(p) S_E(w_E(p)) - I|| in the spectral norm."""
    S1 = assemble_S(cs, pot, E, p, params).entries
    if S1.size == 0:
        return 0.0
    S2 = assemble_S(cs, pot, E, involution_w(p, E.flipped), params).entries
    return float(np.linalg.norm(S1 @ S2 - np.eye(len(S1)), 2))


def unitarity_defect(sample: SMatrixSample, cs: CrossSection) -> float:
    """||S~* S~ - I|| for the flux-normalized matrix (open channels only)."""
    k = np.array([all_roots(cs, sample.point)[int(cs.mode_threshold[l - 1])] for l in sample.modes])
    if not np.all(np.abs(k.imag) == 0) or np.any(k.real <= 0):
        raise ValueError("unitarity needs a boundary point with every channel open")
    St = sample.flux_normalized(k)
    return float(np.linalg.norm(St.conj().T @ St - np.eye(len(k)), 2))


def smatrix_multiplicity(cs: CrossSection, pot: PotentialData, E: Sheet, chart: Chart, center,
                         radius: float, params: SolverParams = SolverParams(),
                         settings: ContourSettings = ContourSettings(), check_with=None) -> int:
    """mu_d of S_E inside a chart circle: minus the winding of det S_E.

    ``check_with`` may hold (base cross-section, discretization) for a
    Fredholm winding on the same circle; disagreement raises.
    """
    center = complex(center)
    cmap = ChannelMap(cs, pot.geometry)
    chans = cmap.channels(E)
    if not chans or pot.is_zero:
        mu = 0
    else:
        nthr = cs.n_thresholds

        def logdet(ws):
            out = []
            for r in chart.roots(np.asarray(ws), nthr):
                S, _ = _smatrix_from_roots(cs, pot, chans, r, params, cmap)
                sign, la = np.linalg.slogdet(S)
                out.append(la + 1j * np.angle(sign))
            return np.array(out)

        F = CachedLog(logdet, max(radius, 1.0), settings.max_evals)
        mu = -circle_winding(F, center, radius, settings)
    if check_with is not None:
        from .fredholm import winding_count
        base_chart, disc = check_with
        wf = winding_count(base_chart, center, radius, pot, disc, settings=settings)
        if wf != mu:
            raise DisagreementWithResolvent(f"S-matrix multiplicity {mu} but Fredholm winding {wf}")
    return mu


def smatrix_csv(samples, sheet_of=str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_lambda", "im_lambda", "sheet", "i", "j", "re_S", "im_S", "residual"])
    for s in samples:
        for a, i in enumerate(s.modes):
            for b, j in enumerate(s.modes):
                v = s.entries[a, b]
                w.writerow([repr(s.point.lam.real), repr(s.point.lam.imag), sheet_of(s.point.sheet),
                            i, j, repr(float(v.real)), repr(float(v.imag)), repr(s.solver_residual)])
    return buf.getvalue()
