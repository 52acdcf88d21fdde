"""Command line entry point.

    cylres SUBCOMMAND [--config PATH] [--out DIR] [--workers N] [--germ PATH]

Exit status: 0 success, 2 partial results (some window or item failed),
1 configuration or usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
import time

from . import harness
from .config import ExperimentConfig, read_config
from .cross_section import catalog_csv
from .exceptions import ConfigError, CylresError
from .records import records_to_csv, sort_records
from .smatrix import smatrix_csv

SUBCOMMANDS = ("resonances", "count", "sum", "eigs", "smatrix", "smith", "carleman", "catalog")
_KIND_OF = {"resonances": "window_count", "count": "window_count", "sum": "fixed_sheet_sum",
            "eigs": "eigenvalue_count", "smatrix": "smatrix_probe", "smith": "smith",
            "carleman": "carleman_check"}
EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser():
    p = _Parser(prog="cylres", description="Resonances of potential perturbations on R x Y.")
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (does not change results)")
    p.add_argument("--germ", help="germ file for the smith subcommand")
    return p


def _load(args, needed: bool) -> ExperimentConfig:
    if args.config is None:
        if needed:
            raise ConfigError(f"'{args.command}' needs --config")
        cfg = ExperimentConfig()
    else:
        cfg = read_config(args.config)
    want = _KIND_OF.get(args.command)
    if cfg.kind is not None and want is not None and cfg.kind != want:
        raise ConfigError(f"config is for '{cfg.kind}', but '{args.command}' runs '{want}'")
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _cmd_windows(cfg, args, full):
    t0 = time.perf_counter()
    rep = harness.run_window_count(cfg, workers=args.workers)
    text = rep.records_csv()
    rep.verify_round_trip(text)
    files = {"resonances.csv": text}
    cert = {"partial": str(rep.partial).lower(),
            "failed_windows": ";".join(f"m={w.m}{'+' if w.side > 0 else '-'}:{w.error}"
                                       for w in rep.windows if w.error) or "none"}
    if full:
        files["counts.csv"] = rep.counts_csv()
        cert["envelope_ppp"] = repr(rep.envelope_ppp())
        cert["envelope_ln"] = repr(rep.envelope_ln())
        flags = rep.deficit_flags()
        cert["deficit_flags"] = ";".join(f"m={m}{'+' if s > 0 else '-'}:{d}<={M}" for m, s, d, M in flags) or "none"
        if all(w.oracle is not None for w in rep.windows):
            agree = all(rep.oracle_count(m) <= rep.count(m) + rep.deficit(m) <= rep.oracle_count(m) + rep.mult[m]
                        for m in rep.ms())
            cert["oracle_consistent"] = str(agree).lower()
    timings = {f"window_m{w.m}{'p' if w.side > 0 else 'm'}": w.seconds for w in rep.windows}
    timings["total"] = time.perf_counter() - t0
    status = "partial" if rep.partial else "ok"
    harness.write_outputs(cfg.out_dir, {**files, "manifest.txt": harness.manifest(cfg, args.command, status, cert)},
                          timings)
    if full:
        for m in rep.ms():
            print(f"m={m} count={rep.count(m)}")
        print(f"envelope_ppp={rep.envelope_ppp():.6g} envelope_ln={rep.envelope_ln():.6g}")
    else:
        print(f"{sum(w.count for w in rep.windows)} resonances (with multiplicity)")
    return EXIT_PARTIAL if rep.partial else EXIT_OK


def _cmd_sum(cfg, args):
    t0 = time.perf_counter()
    tab = harness.run_fixed_sheet_sum(cfg)
    cert = {"sheet": str(tab.sheet), "method": cfg.method, "partial": str(tab.partial).lower()}
    status = "partial" if tab.partial else "ok"
    files = {"sheet_sum.csv": tab.csv(), "sheet_sum_records.csv": records_to_csv(sort_records(tab.records)),
             "manifest.txt": harness.manifest(cfg, args.command, status, cert)}
    harness.write_outputs(cfg.out_dir, files, {"total": time.perf_counter() - t0})
    for R, n, s, d in tab.rows:
        print(f"R={R:g} n={n} sum={s:.10g} increment={d:.3g}")
    return EXIT_PARTIAL if tab.partial else EXIT_OK


def _cmd_eigs(cfg, args):
    t0 = time.perf_counter()
    tab = harness.run_eigenvalue_count(cfg)
    per = tab.per_threshold()
    cert = {"per_threshold": ";".join(f"{j}:{per[j]}" for j in sorted(per)) or "none",
            "envelope": repr(tab.envelope()),
            "discarded_nonreal": str(len(tab.discarded))}
    if tab.expected is not None:
        cert["matches_oracle"] = str(all(per.get(j, 0) == c for j, c in tab.expected.items())).lower()
    files = {"eigenvalues.csv": tab.csv(), "manifest.txt": harness.manifest(cfg, args.command, "ok", cert)}
    harness.write_outputs(cfg.out_dir, files, {"total": time.perf_counter() - t0})
    for j in sorted(per):
        print(f"threshold {j}: {per[j]}")
    return EXIT_OK


def _cmd_smatrix(cfg, args):
    t0 = time.perf_counter()
    samples, idents = harness.run_smatrix_probe(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_lambda", "im_lambda", "sheet", "inverse_residual"])
    for s, r in zip(samples, idents):
        w.writerow([repr(s.point.lam.real), repr(s.point.lam.imag), str(s.point.sheet), repr(r)])
    files = {"smatrix.csv": smatrix_csv(samples), "inverse_identity.csv": buf.getvalue(),
             "manifest.txt": harness.manifest(cfg, args.command, "ok",
                                              {"max_inverse_residual": repr(max(idents, default=0.0))})}
    harness.write_outputs(cfg.out_dir, files, {"total": time.perf_counter() - t0})
    print(f"{len(samples)} points, max inverse-identity residual {max(idents, default=0.0):.3g}")
    return EXIT_OK


def _cmd_smith(cfg, args):
    path = args.germ or cfg.germ
    if path is None:
        raise ConfigError("smith needs --germ PATH")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read germ file {path}: {e}") from None
    try:
        sd = harness.run_smith(text)
    except ValueError as e:
        raise ConfigError(f"bad germ file: {e}") from None
    line = f"mu_m={sd.mu_m} mu_d={sd.mu_d} certified={str(sd.certified).lower()}"
    print(line)
    if args.out or args.config:
        body = (line + "\n" + f"exponents = {' '.join(str(e) for e in sd.exponents)}\n"
                + f"margin = {sd.margin!r}\n")
        harness.write_outputs(cfg.out_dir, {"smith.txt": body})
    return EXIT_OK


def _cmd_carleman(cfg, args):
    res = harness.run_carleman_check(cfg)
    text = harness.carleman_csv(res)
    if args.out or args.config:
        harness.write_outputs(cfg.out_dir, {"carleman.csv": text,
                                            "manifest.txt": harness.manifest(cfg, args.command, "ok", {})})
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_catalog(cfg, args):
    cs = cfg.catalog()
    harness.write_outputs(cfg.out_dir, {"catalog.csv": catalog_csv(cs)})
    print(f"{cs.n_modes} modes, {cs.n_thresholds} thresholds")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        print(f"cylres: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load(args, needed=args.command not in ("smith", "carleman"))
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.command in ("resonances", "count"):
            return _cmd_windows(cfg, args, args.command == "count")
        return {"sum": _cmd_sum, "eigs": _cmd_eigs, "smatrix": _cmd_smatrix, "smith": _cmd_smith,
                "carleman": _cmd_carleman, "catalog": _cmd_catalog}[args.command](cfg, args)
    except ConfigError as e:
        print(f"cylres: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CylresError as e:
        print(f"cylres: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
