"""Experiment drivers: window counts, fixed-sheet sums, eigenvalue counts,
S-matrix probes, local Smith forms and the Carleman check.

Work items are pure functions of their arguments. They may run in a
process pool, and results are put back in input order and sorted before
anything is written, so the number of workers never changes the output.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy

from .carleman import CarlemanResult, carleman_check
from .config import ExperimentConfig
from .contour import Box, zeros_in_box
from .cross_section import CrossSection, TwoEnded, build_catalog, h1_certificate
from .exceptions import BudgetExceeded, ConfigError, CylresError
from .fredholm import DetEvaluator, eigenvalue_exclusion, locate_resonances, winding_count
from .kernels import FULL_LINE
from .oracle import bound_state_count, separable_oracle
from .potential import PotentialData
from .records import records_from_csv, records_to_csv, sort_records
from .regions import Region
from .sheets import BoundaryChart, R1Chart, RampChart, SurfacePoint, local_sheets_at
from .smatrix import assemble_S, check_inverse_identity
from .smith import local_smith, read_germ

from . import __version__


def pool_map(fn, items, workers: int = 1):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _oracle_profile(pot: PotentialData):
    if pot.separable and len(pot.terms) == 1:
        return pot.profile_1d()
    return None


# ---------------------------------------------------------------- window counts

@dataclass
class WindowResult:
    m: int
    side: int
    radius: float
    records: list
    deficit: int | None = None
    oracle: list | None = None
    error: str | None = None
    n_evals: int = 0
    seconds: float = 0.0
    sheets: tuple = ()

    @property
    def count(self):
        return sum(r.multiplicity for r in self.records)

    @property
    def oracle_count(self):
        return None if self.oracle is None else sum(r.multiplicity for r in self.oracle)

    def counts_by_sheet(self):
        out = {}
        for r in self.records:
            out[str(r.sheet)] = out.get(str(r.sheet), 0) + r.multiplicity
        return out


def window_radius(cfg: ExperimentConfig, cs: CrossSection, m: int, alpha: float | None) -> float:
    if cfg.rho is not None:
        return cfg.rho
    if cfg.beta is None:
        raise ConfigError("window_count needs rho or beta")
    return cfg.beta * math.sqrt(alpha * math.sqrt(cs.nu_sq[m - 1]))


def _window_job(args):
    cs, pot, m, side, radius, puncture, disc, settings, oracle = args
    t0 = time.perf_counter()
    chart = RampChart(cs, m, side)
    region = Region(chart, 0.0, radius, None, puncture)
    res = WindowResult(m, side, radius, [], sheets=tuple(str(s) for s in local_sheets_at(cs, m)))
    try:
        out = locate_resonances(region, pot, disc, settings, full=True)
        res.records, res.n_evals = out.records, out.n_evals
        if puncture > 0 and not pot.is_zero:
            res.deficit = winding_count(chart, 0.0, puncture, pot, disc, settings=settings)
        elif puncture > 0:
            res.deficit = 0
    except BudgetExceeded as e:
        res.records = e.partial or []
        res.error = f"BudgetExceeded: {e}"
    except CylresError as e:
        res.error = f"{type(e).__name__}: {e}"
    if oracle:
        prof = _oracle_profile(pot)
        res.oracle = separable_oracle(prof, cs, region, pot.geometry)
    res.seconds = time.perf_counter() - t0
    return res


@dataclass
class CountReport:
    windows: list
    dim_total: int
    mult: dict                       # m -> M_Y(nu_m^2)

    @property
    def partial(self):
        return any(w.error for w in self.windows)

    def ms(self):
        return sorted({w.m for w in self.windows})

    def count(self, m):
        return sum(w.count for w in self.windows if w.m == m)

    def oracle_count(self, m):
        ws = [w for w in self.windows if w.m == m]
        if any(w.oracle is None for w in ws):
            return None
        return sum(w.oracle_count for w in ws)

    def deficit(self, m):
        return sum(w.deficit or 0 for w in self.windows if w.m == m)

    def envelope_ppp(self):
        """max over m of count / (1 + m^(n-2))."""
        n = self.dim_total
        return max((self.count(m) / (1.0 + m ** (n - 2)) for m in self.ms()), default=0.0)

    def envelope_ln(self):
        """max over m of count / m^(n-1)."""
        n = self.dim_total
        return max((self.count(m) / float(m) ** (n - 1) for m in self.ms()), default=0.0)

    def deficit_flags(self):
        """Windows whose ramification deficit is positive, with its bound M_Y(nu_m^2)."""
        return [(w.m, w.side, w.deficit, self.mult[w.m]) for w in self.windows if w.deficit]

    def all_records(self):
        rows, extra = [], []
        for w in sorted(self.windows, key=lambda w: (w.m, -w.side)):
            for r in sort_records(w.records):
                rows.append(r)
                extra.append((w.m, "+" if w.side > 0 else "-"))
        return rows, extra

    def records_csv(self):
        rows, extra = self.all_records()
        return records_to_csv(rows, ("m", "side"), extra)

    def counts_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "side", "sheet", "count", "radius", "deficit", "oracle_count", "status"])
        for win in sorted(self.windows, key=lambda w: (w.m, -w.side)):
            by = win.counts_by_sheet()
            side = "+" if win.side > 0 else "-"
            orc = {}
            for r in win.oracle or []:
                orc[str(r.sheet)] = orc.get(str(r.sheet), 0) + r.multiplicity
            sheets = sorted(set(by) | set(orc) | set(win.sheets))
            for s in sheets:
                w.writerow([win.m, side, s, by.get(s, 0), repr(win.radius),
                            "" if win.deficit is None else win.deficit,
                            "" if win.oracle is None else orc.get(s, 0),
                            "ok" if win.error is None else "failed"])
        return buf.getvalue()

    def verify_round_trip(self, text: str):
        """Counts recomputed from the record CSV must equal the report's."""
        recs, extra = records_from_csv(text)
        tally = {}
        for r, (m, _side) in zip(recs, extra):
            tally[int(m)] = tally.get(int(m), 0) + r.multiplicity
        for m in self.ms():
            if tally.get(m, 0) != self.count(m):
                raise AssertionError(f"record CSV gives {tally.get(m, 0)} for m={m}, report {self.count(m)}")


def run_window_count(cfg: ExperimentConfig, workers: int = 1) -> CountReport:
    cs = cfg.catalog()
    pot = cfg.potential
    if cfg.m_max > cs.n_thresholds - 1:
        raise ConfigError(f"m_max={cfg.m_max} needs more than the {cs.n_thresholds} stored thresholds")
    alpha = None
    if cfg.rho is None:
        alpha = h1_certificate(cs, cfg.m_min).alpha
    oracle = cfg.oracle and _oracle_profile(pot) is not None
    jobs = []
    for m in range(cfg.m_min, cfg.m_max + 1):
        R = window_radius(cfg, cs, m, alpha)
        for side in cfg.sides:
            jobs.append((cs, pot, m, side, R, cfg.puncture, cfg.disc, cfg.settings, oracle))
    wins = pool_map(_window_job, jobs, workers)
    mult = {m: int(cs.multiplicity(m)) for m in range(cfg.m_min, cfg.m_max + 1)}
    # every record must lie on one of the sheets meeting the ramification point
    for w in wins:
        allowed = set(local_sheets_at(cs, w.m))
        for r in w.records:
            if r.sheet not in allowed:
                w.error = w.error or f"record on unexpected sheet {r.sheet}"
    return CountReport(wins, cs.dim_total, mult)


# ---------------------------------------------------------------- fixed-sheet sums

@dataclass
class SheetSum:
    sheet: object
    rows: list                 # (R, resonances with |r_1| <= R, partial sum, increment)
    records: list
    partial: bool = False

    @property
    def total(self):
        return self.rows[-1][2] if self.rows else 0.0

    def csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "n_resonances", "partial_sum", "increment"])
        for R, n, s, d in self.rows:
            w.writerow([repr(float(R)), n, repr(float(s)), repr(float(d))])
        return buf.getvalue()


def sheet_sum_term(rec) -> float:
    r1 = rec.rm
    return rec.multiplicity * abs(r1.imag) / abs(r1) ** 2


def run_fixed_sheet_sum(cfg: ExperimentConfig) -> SheetSum:
    cs = cfg.catalog()
    pot = cfg.potential
    E = cfg.sheet
    Rmax = cfg.radii[-1]
    region = Region(R1Chart(cs, E), 0.0, Rmax, E)
    partial = False
    if pot.is_zero:
        recs = []
    elif cfg.method == "oracle":
        prof = _oracle_profile(pot)
        if prof is None:
            raise ConfigError("the oracle method needs a separable single-profile potential")
        recs = separable_oracle(prof, cs, region, pot.geometry)
    else:
        try:
            recs = locate_resonances(region, pot, cfg.disc, cfg.settings)
        except BudgetExceeded as e:
            recs, partial = e.partial or [], True
    recs = sort_records(recs)
    rows, prev = [], 0.0
    for R in cfg.radii:
        inside = [r for r in recs if abs(r.rm) <= R]
        # sum smallest terms first for a stable rounding order
        s = math.fsum(sorted(sheet_sum_term(r) for r in inside))
        rows.append((R, sum(r.multiplicity for r in inside), s, s - prev))
        prev = s
    return SheetSum(E, rows, recs, partial)


# ---------------------------------------------------------------- eigenvalues

@dataclass
class EigenTable:
    eigenvalues: list              # (lambda, multiplicity, threshold)
    searched: list                 # (lo, hi) real intervals actually searched
    expected: dict | None          # threshold -> expected count (separable oracle)
    dim_total: int
    discarded: list = field(default_factory=list)

    def per_threshold(self):
        out = {}
        for _, n, j in self.eigenvalues:
            out[j] = out.get(j, 0) + n
        return out

    def n_rows(self):
        """Cumulative N(lambda) at each eigenvalue."""
        out, tot = [], 0
        for lam, n, _ in sorted(self.eigenvalues):
            tot += n
            out.append((lam, tot))
        return out

    def envelope(self):
        """max N(lambda) / max(1, lambda)^(n-1), with eigenvalues lambda^2."""
        n = self.dim_total
        return max((N / max(1.0, math.sqrt(max(t, 0.0))) ** (n - 1) for t, N in self.n_rows()), default=0.0)

    def csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "multiplicity", "threshold", "N"])
        for (lam, n, j), (_, N) in zip(sorted(self.eigenvalues), self.n_rows()):
            w.writerow([repr(float(lam)), n, j, N])
        return buf.getvalue()


def nonexcluded_intervals(pot: PotentialData, cs: CrossSection, lo: float, hi: float):
    """Parts of (lo, hi) where eigenvalue_exclusion does not rule out eigenvalues."""
    rad = (2.0 * pot.vnorm * (pot.support_length + 1.0)) ** 2
    iv = sorted((nu - rad, nu + rad) for nu in cs.nu_sq)
    merged = []
    for a, b in iv:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    out = []
    for a, b in merged:
        x0, x1 = max(a, lo), min(b, hi)
        if x1 > x0:
            out.append((x0, x1))
    return out


def run_eigenvalue_count(cfg: ExperimentConfig) -> EigenTable:
    cs = cfg.catalog()
    pot = cfg.potential
    n = cfg.thresholds
    if cs.n_thresholds <= n:
        raise ConfigError(f"eigenvalue_count with thresholds={n} needs more stored thresholds")
    prof = _oracle_profile(pot)
    expected = None
    if prof is not None and cfg.oracle:
        b = 0 if pot.is_zero else bound_state_count(prof)
        expected = {j: b * int(cs.multiplicity(j)) for j in range(1, n + 1)}
    if pot.is_zero:
        return EigenTable([], [], expected, cs.dim_total)
    lam_min = cs.nu_sq[0] - pot.vnorm - 1.0
    found, searched, discarded = [], [], []
    for J in range(0, n):
        lo = lam_min if J == 0 else float(cs.nu_sq[J - 1])
        hi = float(cs.nu_sq[J])
        chart = BoundaryChart(cs, J, 1)
        for x0, x1 in nonexcluded_intervals(pot, cs, lo, hi):
            width = x1 - x0
            delta = 1e-6 * max(1.0, width)
            eta = 0.25 * min(1.0, width)
            box = Box(x0 + delta, x1 - delta * 1.0371, -eta * 1.0213, eta)
            ev = DetEvaluator(pot, cs, cfg.disc, box.x1)
            F = ev.cached_log(chart, max(1.0, abs(x1)), cfg.settings.max_evals)
            searched.append((box.x0, box.x1))
            for z, mult in zeros_in_box(F, box, cfg.settings):
                if abs(z.imag) > 1e-8 * (1.0 + abs(z)):
                    discarded.append((z, mult))
                    continue
                lam = z.real
                if eigenvalue_exclusion(lam, pot, cs):
                    raise AssertionError(f"eigenvalue {lam} lies in an excluded interval")
                j = _attribute(ev, chart, z) if pot.separable else 0
                found.append((lam, mult, j))
    return EigenTable(sorted(found), searched, expected, cs.dim_total, discarded)


def _attribute(ev: DetEvaluator, chart, z):
    ld = ev.threshold_log_dets(chart.roots(np.array([z]), ev.n_thr))[0]
    return int(np.argmin(ld.real)) + 1


# ---------------------------------------------------------------- S-matrix probes

def scattering_catalog(cfg: ExperimentConfig) -> CrossSection:
    if cfg.cs_spec is None:
        raise ConfigError("no [cross_section] given")
    spec = TwoEnded(cfg.cs_spec) if cfg.potential.geometry == FULL_LINE else cfg.cs_spec
    trunc = None if cfg.truncate is None else (2 * cfg.truncate if cfg.potential.geometry == FULL_LINE
                                               else cfg.truncate)
    return build_catalog(spec, truncate=trunc, n_thresholds=cfg.n_thresholds)


def run_smatrix_probe(cfg: ExperimentConfig):
    cs = scattering_catalog(cfg)
    samples, idents = [], []
    for lam in cfg.points:
        p = SurfacePoint(cfg.sheet, lam)
        p.check(cs)
        samples.append(assemble_S(cs, cfg.potential, cfg.sheet, p, cfg.solver))
        idents.append(check_inverse_identity(cs, cfg.potential, cfg.sheet, p, cfg.solver))
    return samples, idents


# ---------------------------------------------------------------- smith / carleman

def run_smith(germ_text: str):
    return local_smith(read_germ(germ_text))


def run_carleman_check(cfg: ExperimentConfig) -> list[CarlemanResult]:
    return [carleman_check(name, R) for name in cfg.functions for R in cfg.radii_carleman]


def carleman_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["function", "R", "zero_side", "integral_side", "residual"])
    for r in results:
        w.writerow([r.name, repr(r.R), repr(r.zero_side), repr(r.integral_side), repr(r.residual)])
    return buf.getvalue()


# ---------------------------------------------------------------- persistence

def manifest(cfg: ExperimentConfig, command: str, status: str, cert: dict) -> str:
    lines = [
        f"command = {command}",
        f"status = {status}",
        f"config_sha256 = {hashlib.sha256(cfg.text.encode()).hexdigest()}",
        f"cylres = {__version__}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
    ]
    if cfg.cs_spec is not None:
        lines.append(f"catalog_truncate = {cfg.truncate if cfg.truncate is not None else ''}")
        lines.append(f"catalog_n_thresholds = {cfg.n_thresholds if cfg.n_thresholds is not None else ''}")
    for k in sorted(cert):
        lines.append(f"{k} = {cert[k]}")
    lines.append("")
    lines.append("[config]")
    lines.extend(cfg.text.rstrip("\n").splitlines())
    return "\n".join(lines) + "\n"


def write_outputs(out_dir: str, files: dict, timings: dict | None = None):
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if timings is not None:
        with open(os.path.join(out_dir, "timings.txt"), "w", encoding="utf-8") as fh:
            for k, v in timings.items():
                fh.write(f"{k} = {v:.3f}\n")
