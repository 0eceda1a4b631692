"""Verification records and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

from ._numerics import EQUALITY_GAP_TOL

CSV_HEADER = ("body_id", "class", "n", "u1", "u2", "u3", "u4", "t", "measured", "bound",
              "gap", "equality", "method", "samples", "seed")
MAX_CSV_DIM = 4


def fmt(x):
    """12 significant digits; blanks for missing values."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


@dataclass(frozen=True)
class CutReport:
    """One barycentric-cut verification.

    ``measured`` and ``bound`` are on the same scale (a fraction of the
    total mass, or an absolute mass where the bound is stated that way).
    ``gap`` is always ``measured - bound``.  ``equality`` is ``None`` when no
    verdict can be given (Monte-Carlo runs report the gap band instead).
    """

    measured: float
    bound: float
    cut_offset: float
    direction: tuple = (1.0,)
    t: float = 1.0
    equality: bool | None = None
    affinity: float | None = None
    method: str = "quadrature"
    tolerance: float | None = None
    samples: int | None = None
    seed: int | None = None
    standard_error: float | None = None
    label: str = ""
    body_id: str = ""
    notes: tuple = field(default_factory=tuple)

    @property
    def gap(self):
        return self.measured - self.bound

    @property
    def n(self):
        return len(self.direction)

    @property
    def oracle(self):
        return {"method": self.method,
                "samples_or_tolerance": self.samples if self.samples is not None else self.tolerance,
                "seed": self.seed}

    def violates(self, tol):
        """True when the gap is negative beyond ``tol`` (or 3 SE for MC rows)."""
        slack = tol
        if self.standard_error is not None:
            slack = max(tol, 3.0 * self.standard_error)
        return self.gap < -slack

    def with_ids(self, body_id="", label=None):
        return replace(self, body_id=body_id, label=self.label if label is None else label)

    def row(self):
        u = list(self.direction)[:MAX_CSV_DIM]
        u += [None] * (MAX_CSV_DIM - len(u))
        return [self.body_id, self.label, self.n, *map(fmt, u), fmt(self.t), fmt(self.measured),
                fmt(self.bound), fmt(self.gap),
                "" if self.equality is None else fmt(bool(self.equality)),
                self.method, fmt(self.samples), fmt(self.seed)]


def equality_verdict(gap, affinity, gap_tol=EQUALITY_GAP_TOL, affinity_tol=1e-6):
    return abs(gap) <= gap_tol and affinity is not None and affinity <= affinity_tol


def write_csv(rows, header=CSV_HEADER, stream=None):
    """Write rows with a fixed header and minimal RFC 4180 quoting.

    Returns the text when ``stream`` is None.
    """
    own = stream is None
    stream = io.StringIO() if own else stream
    w = csv.writer(stream, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    for r in rows:
        w.writerow(r.row() if isinstance(r, CutReport) else r)
    return stream.getvalue() if own else None
