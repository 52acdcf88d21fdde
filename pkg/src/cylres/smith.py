"""Local Smith form of meromorphic matrix germs in truncated power series.

A germ A(z) = sum_{p >= low} C_p (z - z0)^p is stored through the
coefficients C_low, ..., C_{low+trunc}. Multiplying by (z - z0)^{-low}
gives a holomorphic germ B, which is reduced by pivot-and-eliminate:
the entry of lowest vanishing order is moved to the corner, its row and
column are cleared by series division, and the procedure recurses on the
remaining minor. The orders found, shifted back by ``low``, are the
exponents of A = E diag((z - z0)^{e_i}) F with E, F holomorphic and
invertible at z0.

Each division by a pivot of order o costs o known coefficients, and the
code keeps track of how many remain valid.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from .exceptions import IdenticallySingular, IndeterminateOrder

ZERO_RTOL = 1e-10
CERTIFY_FACTOR = 100.0     # pivots closer than this to the zero threshold are not certified


@dataclass(frozen=True, eq=False)
class LaurentMatrixGerm:
    z0: complex
    low: int
    coeffs: np.ndarray          # (trunc + 1, d, d), coeffs[q] multiplies (z - z0)^(low + q)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[1] < 1:
            raise ValueError("coefficients must have shape (trunc + 1, d, d) with d >= 1")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "z0", complex(self.z0))
        object.__setattr__(self, "low", int(self.low))

    @property
    def d(self):
        return self.coeffs.shape[1]

    @property
    def trunc(self):
        return self.coeffs.shape[0] - 1

    @property
    def scale(self):
        return float(np.abs(self.coeffs).max())

    @classmethod
    def from_series(cls, z0, low, series):
        """From an array (d, d, n) of per-entry coefficient lists."""
        s = np.asarray(series, dtype=complex)
        return cls(z0, low, np.moveaxis(s, 2, 0))

    def series(self):
        return np.moveaxis(self.coeffs, 0, 2).copy()

    def evaluate(self, z):
        dz = complex(z) - self.z0
        p = self.low + np.arange(self.trunc + 1)
        return np.tensordot(dz ** p, self.coeffs, axes=1)


@dataclass(frozen=True)
class SmithData:
    pole_exps: tuple
    zero_exps: tuple
    rank0: int
    mu_m: int
    mu_d: int
    certified: bool
    margin: float               # smallest pivot leading coefficient over the zero threshold
    window_left: int = 0        # known coefficients left after the last division
    exponents: tuple = ()       # all d exponents, nondecreasing
    left: np.ndarray | None = field(default=None, repr=False)
    right: np.ndarray | None = field(default=None, repr=False)


# ---------------------------------------------------------------- series helpers

def _order(a: np.ndarray, prec: int, thr: float):
    nz = np.flatnonzero(np.abs(a[:prec]) > thr)
    return int(nz[0]) if len(nz) else None


def _mul(a, b, n):
    return np.convolve(a[:n], b[:n])[:n]


def _div_unit(a, u, n):
    """a / u for a unit u (u[0] != 0), first n coefficients."""
    q = np.zeros(n, dtype=complex)
    for i in range(n):
        s = a[i] - np.dot(u[1:i + 1], q[i - 1::-1][:i]) if i else a[0]
        q[i] = s / u[0]
    return q


def _shift(a, o):
    out = np.zeros_like(a)
    out[:len(a) - o] = a[o:]
    return out


def local_smith(germ: LaurentMatrixGerm, accumulate: bool = False, rtol: float = ZERO_RTOL) -> SmithData:
    d, n = germ.d, germ.trunc + 1
    M = germ.series()
    thr = rtol * max(germ.scale, 1e-300)
    prec = n
    Lm = Rm = None
    if accumulate:
        Lm = np.zeros((d, d, n), dtype=complex)
        Rm = np.zeros((d, d, n), dtype=complex)
        Lm[np.arange(d), np.arange(d), 0] = 1.0
        Rm[np.arange(d), np.arange(d), 0] = 1.0
    orders = []
    margin = np.inf
    lost = False
    for s in range(d):
        best = None
        for i in range(s, d):
            for j in range(s, d):
                o = _order(M[i, j], prec, thr)
                if o is None:
                    continue
                lead = abs(M[i, j, o])
                if best is None or o < best[0] or (o == best[0] and lead > best[1]):
                    best = (o, lead, i, j)
        if best is None:
            if not lost:
                raise IdenticallySingular(f"minor of size {d - s} vanishes on the whole window")
            raise IndeterminateOrder(f"truncation exhausted with a {d - s}x{d - s} minor unresolved")
        o, lead, i, j = best
        margin = min(margin, lead / thr)
        M[[s, i]] = M[[i, s]]
        M[:, [s, j]] = M[:, [j, s]]
        if accumulate:
            Lm[[s, i]] = Lm[[i, s]]
            Rm[:, [s, j]] = Rm[:, [j, s]]
        piv = _shift(M[s, s], o)
        m = prec - o
        for r in range(s + 1, d):
            f = _div_unit(_shift(M[r, s], o), piv, m)
            for c in range(s, d):
                M[r, c, :m] -= _mul(f, M[s, c], m)
            if accumulate:
                for c in range(d):
                    Lm[r, c, :m] -= _mul(f, Lm[s, c], m)
        for c in range(s + 1, d):
            g = _div_unit(_shift(M[s, c], o), piv, m)
            for r in range(s, d):
                M[r, c, :m] -= _mul(M[r, s], g, m)
            if accumulate:
                for r in range(d):
                    Rm[r, c, :m] -= _mul(Rm[r, s], g, m)
        if o > 0 and s < d - 1:
            lost = True
        M[:, :, m:] = 0.0
        prec = m
        orders.append(o)
    exps = tuple(sorted(o + germ.low for o in orders))
    poles = tuple(sorted(-e for e in exps if e < 0))
    zeros = tuple(sorted(e for e in exps if e > 0))
    rank0 = sum(1 for e in exps if e == 0)
    return SmithData(pole_exps=poles, zero_exps=zeros, rank0=rank0, mu_m=int(sum(poles)),
                     mu_d=int(sum(poles) - sum(zeros)), certified=bool(margin > CERTIFY_FACTOR),
                     margin=float(margin), window_left=prec,
                     exponents=exps, left=Lm, right=Rm)


def mu_d_via_det(germ: LaurentMatrixGerm, rtol: float = ZERO_RTOL) -> int:
    """Minus the order of det A at z0, from the Leibniz expansion in series."""
    d, n = germ.d, germ.trunc + 1
    S = germ.series()
    det = np.zeros(n, dtype=complex)
    for perm in itertools.permutations(range(d)):
        sign = _perm_sign(perm)
        term = np.zeros(n, dtype=complex)
        term[0] = 1.0
        for i, j in enumerate(perm):
            term = _mul(term, S[i, j], n)
        det += sign * term
    thr = rtol * max(germ.scale, 1e-300) ** d
    o = _order(det, n, thr)
    if o is None:
        raise IndeterminateOrder("determinant vanishes on the whole window")
    return -(o + d * germ.low)


def _perm_sign(perm):
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------- germ construction

def random_unit_germ(rng: np.random.Generator, d: int, n: int, degree: int = 2, spread: float = 0.3):
    """Polynomial matrix germ (d, d, n) with a well-conditioned constant term."""
    g = np.zeros((d, d, n), dtype=complex)
    g[:, :, 0] = np.eye(d) + spread * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    for q in range(1, min(degree, n - 1) + 1):
        g[:, :, q] = spread * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    return g


def series_matmul(A, B, n):
    d = A.shape[0]
    out = np.zeros((d, B.shape[1], n), dtype=complex)
    for i in range(d):
        for j in range(B.shape[1]):
            for k in range(A.shape[1]):
                out[i, j] += _mul(A[i, k], B[k, j], n)
    return out


def conjugated_germ(exps, E, F, trunc: int, z0=0j) -> LaurentMatrixGerm:
    """Germ of E diag(z^e) F truncated to ``trunc`` + 1 coefficients."""
    d = len(exps)
    low = min(min(exps), 0)
    n = trunc + 1
    D = np.zeros((d, d, n), dtype=complex)
    for i, e in enumerate(exps):
        if e - low < n:
            D[i, i, e - low] = 1.0
    A = series_matmul(series_matmul(E, D, n), F, n)
    return LaurentMatrixGerm.from_series(z0, low, A)


def conjugate(germ: LaurentMatrixGerm, E, F) -> LaurentMatrixGerm:
    n = germ.trunc + 1
    return LaurentMatrixGerm.from_series(germ.z0, germ.low, series_matmul(series_matmul(E, germ.series(), n), F, n))


# ---------------------------------------------------------------- germ files

def write_germ(germ: LaurentMatrixGerm) -> str:
    lines = [f"z0 = {_c(germ.z0)}", f"d = {germ.d}", f"low = {germ.low}", f"trunc = {germ.trunc}"]
    for q in range(germ.trunc + 1):
        lines.append(f"power {germ.low + q}")
        for row in germ.coeffs[q]:
            lines.append(" ".join(_c(v) for v in row))
    return "\n".join(lines) + "\n"


def _c(v):
    v = complex(v)
    return f"{v.real!r}{v.imag:+}j"


_HEADER = re.compile(r"^\s*(z0|d|low|trunc)\s*=\s*(\S+)\s*$")


def read_germ(text: str) -> LaurentMatrixGerm:
    """Parse the germ file format written by :func:`write_germ`.

    Blank lines and ``#`` comments are ignored; powers may appear in any
    order, missing powers are zero.
    """
    head, blocks, cur = {}, {}, None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            head[m.group(1)] = m.group(2)
            continue
        if line.startswith("power"):
            try:
                cur = int(line.split()[1])
            except (IndexError, ValueError):
                raise ValueError(f"bad power line {raw!r}")
            blocks[cur] = []
            continue
        if cur is None:
            raise ValueError(f"coefficient row before any power line: {raw!r}")
        try:
            blocks[cur].append([complex(tok) for tok in line.split()])
        except ValueError:
            raise ValueError(f"bad coefficient row {raw!r}")
    for key in ("z0", "d", "low", "trunc"):
        if key not in head:
            raise ValueError(f"germ file lacks '{key} ='")
    d, low, trunc = int(head["d"]), int(head["low"]), int(head["trunc"])
    C = np.zeros((trunc + 1, d, d), dtype=complex)
    for p, rows in blocks.items():
        q = p - low
        if not 0 <= q <= trunc:
            raise ValueError(f"power {p} outside [{low}, {low + trunc}]")
        arr = np.array(rows, dtype=complex)
        if arr.shape != (d, d):
            raise ValueError(f"power {p} block has shape {arr.shape}, expected ({d}, {d})")
        C[q] = arr
    return LaurentMatrixGerm(complex(head["z0"]), low, C)
