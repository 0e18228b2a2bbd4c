"""Time-series injection data (chronics): loading, validation, synthesis.

An episode directory holds one CSV per series plus metadata:

    chronics/<episode>/
        meta.json     {"step_minutes": 5, "start": "2026-01-15T00:00:00"}
        load_p.csv    header = load ids, one row per step, MW
        gen_p.csv     header = generator ids, one row per step, MW

The slack generator's column is a reference schedule only; its real output
comes from balancing at solve time. Chronics are immutable after load and
safe to share.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleProfile, ParseError, ValidationError
from .grid_model import GridCase


@dataclass(frozen=True)
class Chronics:
    step_minutes: int
    start: str  # ISO timestamp of step 0
    load_ids: tuple[str, ...]
    gen_ids: tuple[str, ...]
    load_p: tuple[tuple[float, ...], ...]  # steps x loads, MW
    gen_p: tuple[tuple[float, ...], ...]   # steps x generators, MW

    @property
    def steps(self) -> int:
        return len(self.load_p)

    def load_row(self, t: int) -> dict[str, float]:
        return dict(zip(self.load_ids, self.load_p[t]))

    def gen_row(self, t: int) -> dict[str, float]:
        return dict(zip(self.gen_ids, self.gen_p[t]))


def _read_series(path: Path) -> tuple[tuple[str, ...], tuple[tuple[float, ...], ...]]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not text.strip():
        raise ParseError(f"{path}: file is empty")

    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header row and at least one data row")
    header = tuple(h.strip() for h in rows[0])
    if any(not h for h in header):
        raise ParseError(f"{path}: blank column id in header")

    data = []
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ValidationError(
                f"{path}: row {r} has {len(row)} values, expected {len(header)}"
            )
        vals = []
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError as exc:
                raise ParseError(
                    f"{path}: row {r}, column {header[c]!r}: not a number: {cell!r}"
                ) from exc
            if math.isnan(v) or math.isinf(v):
                raise ValidationError(
                    f"{path}: row {r}, column {header[c]!r}: non-finite value {cell!r}"
                )
            if v < 0:
                raise ValidationError(
                    f"{path}: row {r}, column {header[c]!r}: negative value {v}"
                )
            vals.append(v)
        data.append(tuple(vals))
    return header, tuple(data)


def load_chronics(path: str | Path) -> Chronics:
    """Load one episode directory; raises ParseError / ValidationError."""
    path = Path(path)
    meta_path = path / "meta.json"
    try:
        meta = json.loads(meta_path.read_text())
    except OSError as exc:
        raise ParseError(f"{meta_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{meta_path}: not valid JSON: {exc}") from exc

    try:
        step_minutes = int(meta["step_minutes"])
        start = str(meta["start"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{meta_path}: bad metadata: {exc}") from exc
    if step_minutes <= 0:
        raise ValidationError(f"{meta_path}: step_minutes must be positive")

    load_ids, load_p = _read_series(path / "load_p.csv")
    gen_ids, gen_p = _read_series(path / "gen_p.csv")
    if len(load_p) != len(gen_p):
        raise ValidationError(
            f"{path}: load_p.csv has {len(load_p)} steps but gen_p.csv has {len(gen_p)}"
        )
    return Chronics(
        step_minutes=step_minutes,
        start=start,
        load_ids=load_ids,
        gen_ids=gen_ids,
        load_p=load_p,
        gen_p=gen_p,
    )


def write_chronics(chron: Chronics, path: str | Path) -> None:
    """Write an episode directory; round-trips exactly through load_chronics."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "meta.json").write_text(
        json.dumps({"step_minutes": chron.step_minutes, "start": chron.start}, indent=2) + "\n"
    )
    for name, ids, matrix in (
        ("load_p.csv", chron.load_ids, chron.load_p),
        ("gen_p.csv", chron.gen_ids, chron.gen_p),
    ):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(ids)
        for row in matrix:
            writer.writerow([repr(v) for v in row])
        (path / name).write_text(out.getvalue())


@dataclass(frozen=True)
class SynthProfile:
    """Shape parameters for synthetic daily chronics.

    The demand curve is a double-peaked diurnal shape (morning and evening
    peaks) riding on a base level, jittered per load. peak_total_mw pins
    the system-wide maximum demand; load_share weights split it across
    loads (equal split when omitted).
    """

    peak_total_mw: float | None = None  # default: 60% of total p_max
    base_level: float = 0.55            # trough fraction of the peak
    morning_peak_hour: float = 8.5
    evening_peak_hour: float = 18.5
    peak_width_hours: float = 2.4
    morning_amplitude: float = 0.7      # relative to the evening peak
    jitter: float = 0.02
    load_share: dict[str, float] = field(default_factory=dict)
    start: str = "2026-01-15T00:00:00"
    step_minutes: int = 5


def _diurnal_shape(hour: float, profile: SynthProfile) -> float:
    """Double-peak daily curve in (0, 1], 1.0 at the evening peak."""
    morning = profile.morning_amplitude * math.exp(
        -(((hour - profile.morning_peak_hour) / profile.peak_width_hours) ** 2)
    )
    evening = math.exp(
        -(((hour - profile.evening_peak_hour) / profile.peak_width_hours) ** 2)
    )
    bump = max(morning, evening)
    return profile.base_level + (1.0 - profile.base_level) * bump


def synthesize_chronics(
    case: GridCase,
    steps: int,
    seed: int,
    profile: SynthProfile | None = None,
) -> Chronics:
    """Deterministic synthetic chronics for a case.

    Loads follow the diurnal curve scaled per load; generation is
    dispatched proportionally to p_max so the schedule balances total
    demand. Raises InfeasibleProfile if demand ever exceeds total
    generating capability.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    profile = profile or SynthProfile()
    rng = np.random.RandomState(seed)

    load_ids = tuple(d.id for d in case.loads)
    gen_ids = tuple(g.id for g in case.generators)
    total_pmax = sum(g.p_max for g in case.generators)
    peak_total = profile.peak_total_mw
    if peak_total is None:
        peak_total = 0.6 * total_pmax
    if peak_total > total_pmax:
        raise InfeasibleProfile(
            f"peak demand {peak_total} MW exceeds total capability {total_pmax} MW"
        )

    shares = np.array(
        [profile.load_share.get(d, 1.0) for d in load_ids], dtype=float
    )
    if load_ids and shares.sum() <= 0:
        raise ValueError("load_share weights must sum to a positive value")
    if load_ids:
        shares = shares / shares.sum()

    pmax = np.array([case.generator(g).p_max for g in gen_ids], dtype=float)
    pmin = np.array([case.generator(g).p_min for g in gen_ids], dtype=float)

    load_rows = []
    gen_rows = []
    for t in range(steps):
        hour = (t * profile.step_minutes / 60.0) % 24.0
        shape = _diurnal_shape(hour, profile)
        noise = 1.0 + profile.jitter * rng.standard_normal(len(load_ids))
        loads = peak_total * shape * shares * np.clip(noise, 0.5, 1.5)
        total = float(loads.sum())
        if total > total_pmax:
            raise InfeasibleProfile(
                f"step {t}: demand {total:.1f} MW exceeds capability {total_pmax} MW"
            )

        dispatch = pmax / total_pmax * total if total_pmax > 0 else pmax * 0.0
        # Respect generator floors; shave the excess off the largest units.
        short = np.maximum(pmin - dispatch, 0.0)
        if short.sum() > 0:
            dispatch = np.maximum(dispatch, pmin)
            headroom = dispatch - pmin
            excess = float(dispatch.sum()) - total
            if excess > 0 and headroom.sum() > 0:
                dispatch -= headroom / headroom.sum() * min(excess, float(headroom.sum()))

        load_rows.append(tuple(round(float(v), 3) for v in loads))
        gen_rows.append(tuple(round(float(v), 3) for v in dispatch))

    return Chronics(
        step_minutes=profile.step_minutes,
        start=profile.start,
        load_ids=load_ids,
        gen_ids=gen_ids,
        load_p=tuple(load_rows),
        gen_p=tuple(gen_rows),
    )
