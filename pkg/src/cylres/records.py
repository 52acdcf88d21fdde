"""Resonance records and their CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .sheets import Sheet, Side, SurfacePoint

RESONANCE_HEADER = ["sheet", "re_lambda", "im_lambda", "re_rm", "im_rm",
                    "multiplicity", "residual", "contour_radius"]


@dataclass(frozen=True)
class ResonanceRecord:
    point: SurfacePoint
    multiplicity: int
    residual: float
    contour_radius: float
    rm: complex | None = None       # chart coordinate r_m when located in an r_m chart

    @property
    def lam(self):
        return self.point.lam

    @property
    def sheet(self):
        return self.point.sheet

    def sort_key(self):
        return (str(self.point.sheet), self.lam.real, self.lam.imag)

    def row(self):
        rm = self.rm
        return [str(self.point.sheet), repr(self.lam.real), repr(self.lam.imag),
                "" if rm is None else repr(rm.real), "" if rm is None else repr(rm.imag),
                str(self.multiplicity), repr(float(self.residual)), repr(float(self.contour_radius))]


def sort_records(records):
    return sorted(records, key=lambda r: (len(r.sheet.flipped), sorted(r.sheet.flipped),
                                          r.lam.real, r.lam.imag))


def records_to_csv(records, extra_cols=(), extra=None) -> str:
    """CSV text; ``extra`` maps each record to values for ``extra_cols`` placed first."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(extra_cols) + RESONANCE_HEADER)
    for i, r in enumerate(records):
        pre = list(extra[i]) if extra is not None else []
        w.writerow(pre + r.row())
    return buf.getvalue()


def records_from_csv(text: str):
    """Inverse of :func:`records_to_csv`; returns (records, extra column rows)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return [], []
    head = rows[0]
    k = len(head) - len(RESONANCE_HEADER)
    if head[k:] != RESONANCE_HEADER:
        raise ValueError("not a resonance CSV")
    recs, extras = [], []
    for row in rows[1:]:
        pre, row = row[:k], row[k:]
        lam = complex(float(row[1]), float(row[2]))
        rm = None if row[3] == "" else complex(float(row[3]), float(row[4]))
        side = Side.OFF_CUT if lam.imag != 0 else Side.FROM_ABOVE
        recs.append(ResonanceRecord(SurfacePoint(Sheet.parse(row[0]), lam, side),
                                    int(row[5]), float(row[6]), float(row[7]), rm))
        extras.append(pre)
    return recs, extras
