"""Algebra between interarrival, arrival, and counting representations.

Arrival times are prefix sums of interarrivals computed with Neumaier
compensated summation, so each stored arrival is the correctly rounded exact
prefix sum even for long paths; the jump locations of the counting step
function are stored exactly, making counting -> arrivals recovery exact.

The counting-process axioms are validated on sampled (t, N_t) grids.  The
"counts diverge" axiom is not falsifiable on finite data and is reported as
informational only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import IngestionError, InvalidInterarrivalError, OutOfHorizonError
from .report import VerificationReport


def compensated_cumsum(values: np.ndarray) -> np.ndarray:
    """Neumaier prefix sums of a 1-D array (correctly rounded in practice)."""
    out = np.empty(len(values), dtype=np.float64)
    s = 0.0
    c = 0.0
    for i, v in enumerate(np.asarray(values, dtype=np.float64)):
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return out


def compensated_cumsum_rows(w: np.ndarray) -> np.ndarray:
    """Row-wise Neumaier prefix sums of an (n, k) array, vectorized over rows."""
    w = np.asarray(w, dtype=np.float64)
    out = np.empty_like(w)
    s = np.zeros(w.shape[0])
    c = np.zeros(w.shape[0])
    for j in range(w.shape[1]):
        v = w[:, j]
        t = s + v
        big = np.abs(s) >= np.abs(v)
        c += np.where(big, (s - t) + v, (v - t) + s)
        s = t
        out[:, j] = s + c
    return out


def arrivals_from_interarrivals(interarrivals: Sequence[float]) -> np.ndarray:
    """Arrival times [T_0=0, T_1, ..., T_n] from positive interarrivals."""
    w = np.asarray(interarrivals, dtype=np.float64)
    bad = np.flatnonzero(~(w > 0.0))
    if bad.size:
        i = int(bad[0])
        raise InvalidInterarrivalError(
            f"interarrival {i + 1} is not strictly positive: {w[i]!r}"
        )
    out = np.empty(len(w) + 1, dtype=np.float64)
    out[0] = 0.0
    out[1:] = compensated_cumsum(w)
    return out


@dataclass(frozen=True)
class CountingPath:
    """A right-continuous unit-jump step function given by its jump locations."""

    event_times: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.event_times, dtype=np.float64)
        object.__setattr__(self, "event_times", t)
        if t.size and not t[0] > 0.0:
            raise IngestionError(f"first event time must be positive, got {t[0]!r}")
        if np.any(np.diff(t) <= 0.0):
            i = int(np.flatnonzero(np.diff(t) <= 0.0)[0])
            raise IngestionError(
                f"event times must be strictly increasing (tie or inversion at position {i + 1})"
            )
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise IngestionError(f"horizon must be positive and finite, got {self.horizon!r}")
        if t.size and self.horizon < t[-1]:
            raise IngestionError("horizon must not precede the last event")

    @classmethod
    def from_arrivals(cls, arrivals: Sequence[float], horizon: float | None = None) -> "CountingPath":
        """Build from [T_0=0, T_1, ...]; horizon defaults to the last event."""
        arr = np.asarray(arrivals, dtype=np.float64)
        if arr.size == 0 or arr[0] != 0.0:
            raise IngestionError("arrival list must start at T_0 = 0")
        events = arr[1:]
        if horizon is None:
            horizon = float(events[-1]) if events.size else 1.0
        return cls(events, float(horizon))

    @property
    def n_events(self) -> int:
        return int(self.event_times.size)


def count_at(path: CountingPath, t: float) -> int:
    """N_t = number of events at or before t (right-continuous)."""
    if t < 0.0:
        raise OutOfHorizonError(f"count requested at negative time {t!r}")
    if t > path.horizon:
        raise OutOfHorizonError(
            f"count requested at t={t!r} beyond the observed horizon {path.horizon!r}"
        )
    return int(np.searchsorted(path.event_times, t, side="right"))


def counts_on_grid(path: CountingPath, ts: Sequence[float]) -> np.ndarray:
    """Vectorized `count_at` over a grid (all points must be within horizon)."""
    ts = np.asarray(ts, dtype=np.float64)
    if ts.size and (ts.min() < 0.0 or ts.max() > path.horizon):
        raise OutOfHorizonError("grid extends beyond the observed horizon")
    return np.searchsorted(path.event_times, ts, side="right").astype(np.int64)


def arrivals_from_counting(path: CountingPath) -> np.ndarray:
    """Recover [T_0=0, T_1, ...] as the jump locations of the step function."""
    out = np.empty(path.n_events + 1, dtype=np.float64)
    out[0] = 0.0
    out[1:] = path.event_times
    return out


def interarrivals_from_arrivals(arrivals: Sequence[float]) -> np.ndarray:
    arr = np.asarray(arrivals, dtype=np.float64)
    return np.diff(arr)


def validate_counting_axioms(samples: Iterable[tuple[float, float]]) -> VerificationReport:
    """Check the counting-process axioms on a sorted (t, N_t) sample grid.

    Grid-level semantics: start at zero, nonnegative-integer values,
    no decreases, and no jumps larger than one between grid neighbours.
    Divergence of the counts cannot be decided from finite data and is
    reported as a caveat with the observed maximum, never as a failure.
    """
    pts = [(float(t), float(n)) for t, n in samples]
    if not pts:
        raise IngestionError("no samples provided")
    ts = np.array([p[0] for p in pts])
    ns = np.array([p[1] for p in pts])
    if np.any(~np.isfinite(ts)) or np.any(~np.isfinite(ns)):
        raise IngestionError("samples must be finite")
    if np.any(np.diff(ts) < 0.0):
        raise IngestionError("samples must be sorted by t")
    if np.any(np.diff(ts) == 0.0):
        dup = int(np.flatnonzero(np.diff(ts) == 0.0)[0])
        if ns[dup] != ns[dup + 1]:
            raise IngestionError(f"duplicate grid point t={ts[dup]!r} with conflicting counts")

    violations: list[str] = []
    checks: dict[str, str] = {}

    if ts[0] == 0.0:
        if ns[0] != 0.0:
            violations.append(f"start-at-zero: N_0 = {ns[0]:g} != 0")
            checks["start_at_zero"] = "violated"
        else:
            checks["start_at_zero"] = "ok"
    else:
        checks["start_at_zero"] = "not sampled (t=0 missing)"

    integral = np.all(ns >= 0.0) and np.all(ns == np.floor(ns))
    if not integral:
        i = int(np.flatnonzero(~((ns >= 0.0) & (ns == np.floor(ns))))[0])
        violations.append(f"integer-values: N at t={ts[i]:g} is {ns[i]!r}")
        checks["integer_values"] = "violated"
    else:
        checks["integer_values"] = "ok"

    dec = np.flatnonzero(np.diff(ns) < 0.0)
    if dec.size:
        i = int(dec[0])
        violations.append(
            f"right-continuity/monotonicity: N decreases from {ns[i]:g} to {ns[i+1]:g} at t={ts[i+1]:g}"
        )
        checks["right_continuity"] = "violated"
    else:
        checks["right_continuity"] = "ok"

    running_max = np.maximum.accumulate(ns)
    jump = np.flatnonzero(ns[1:] > running_max[:-1] + 1.0)
    if jump.size:
        i = int(jump[0])
        violations.append(
            f"unit-jumps: N jumps from {running_max[i]:g} to {ns[i+1]:g} between "
            f"t={ts[i]:g} and t={ts[i+1]:g}"
        )
        checks["unit_jumps"] = "violated"
    else:
        checks["unit_jumps"] = "ok"

    checks["divergence"] = f"informational: observed max N = {ns.max():g}"

    return VerificationReport(
        check="counting-axioms",
        passed=not violations,
        statistic=float(len(violations)),
        level=None,
        sample_sizes={"grid_points": len(pts)},
        caveats=(
            "divergence of counts is not falsifiable on finite data; observed max "
            f"N = {ns.max():g}",
            "unit-jump check has grid-level semantics: a jump of 2 between "
            "neighbouring grid points is reported even if the grid is coarse",
        ),
        details={"checks": checks, "violations": violations},
    )


def export_step_csv(path: CountingPath, grid: Sequence[float], file) -> None:
    """Write the step function sampled on a grid as CSV with header t,N."""
    writer = csv.writer(file)
    writer.writerow(["t", "N"])
    for t, n in zip(grid, counts_on_grid(path, grid)):
        writer.writerow([repr(float(t)), int(n)])


def read_counting_samples(file) -> list[tuple[float, float]]:
    """Read (t, N) samples from CSV; the t,N header is required."""
    reader = csv.reader(file)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestionError("empty counting CSV") from None
    if [h.strip() for h in header[:2]] != ["t", "N"]:
        raise IngestionError(f"expected header 't,N', got {header!r}")
    out = []
    for i, row in enumerate(reader):
        if not row:
            continue
        try:
            out.append((float(row[0]), float(row[1])))
        except (ValueError, IndexError) as exc:
            raise IngestionError(f"bad row {i + 2}: {row!r}") from exc
    return out
