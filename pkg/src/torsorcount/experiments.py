"""Experiment plans: count over a B schedule, compare with predictions, write CSV + JSON.

Outputs contain no timings or other run-dependent data, so a plan run twice
produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .fan_core import FanData
from .peyre_constants import alpha_constant, kappa_level, kappa_truncated
from .polyexpr import parse_poly
from .sieve_lab import (
    PolyPair,
    geometric_sieve_profile,
    prime_section_count,
    sieve_curves,
    subvariety_count,
)
from .torsor_points import Box, Congruence, CountQuery, count, flat_complement_count

KINDS = ("manin", "equidist", "flat_complement", "geom_sieve", "subvariety", "prime_section")
DEFAULT_P_MAX = 10**4
CSV_COLUMNS = ("B", "param", "count", "reference", "ratio")


class PlanError(ValueError):
    pass


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    fan: str
    kind: str
    schedule: tuple[int, ...]
    params: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlanError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        sched = tuple(int(b) for b in self.schedule)
        if not sched:
            raise PlanError("empty B schedule")
        if any(b2 <= b1 for b1, b2 in zip(sched, sched[1:])):
            raise PlanError("B schedule must be strictly increasing")
        if sched[0] < 1:
            raise PlanError("height bounds must be positive")
        object.__setattr__(self, "schedule", sched)
        need = {
            "flat_complement": ("A",),
            "geom_sieve": ("f", "g", "N"),
            "subvariety": ("phi",),
            "prime_section": ("s",),
        }.get(self.kind, ())
        missing = [k for k in need if k not in self.params]
        if missing:
            raise PlanError(f"{self.kind} plan is missing parameter(s): {', '.join(missing)}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = {"fan", "kind", "schedule", "params", "output"}
        extra = set(d) - known
        if extra:
            raise PlanError(f"unknown plan field(s): {', '.join(sorted(extra))}")
        try:
            return cls(d["fan"], d["kind"], tuple(d["schedule"]), dict(d.get("params", {})), d.get("output"))
        except KeyError as exc:
            raise PlanError(f"plan is missing field {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentPlan":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise PlanError(f"plan file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise PlanError("plan file must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "fan": self.fan,
            "kind": self.kind,
            "schedule": list(self.schedule),
            "params": self.params,
            "output": self.output,
        }


@dataclass(frozen=True)
class Row:
    B: int
    param: str
    count: int
    reference: float | None

    @property
    def ratio(self) -> float | None:
        if not self.reference:
            return None
        return self.count / self.reference


@dataclass
class FitReport:
    kind: str
    fan: str
    rows: list[Row]
    constants: dict[str, Any] = field(default_factory=dict)
    C1: float | None = None
    C2: float | None = None
    predicted: float | None = None
    residual: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def deviation(self) -> float | None:
        if self.C1 is None or not self.predicted:
            return None
        return abs(self.C1 - self.predicted) / self.predicted

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "fan": self.fan,
            "constants": self.constants,
            "fit": {
                "C1": self.C1,
                "C2": self.C2,
                "predicted_C1": self.predicted,
                "deviation": self.deviation,
                "residual": self.residual,
            },
            "rows": [
                {"B": r.B, "param": r.param, "count": r.count, "reference": r.reference, "ratio": r.ratio}
                for r in self.rows
            ],
            "notes": self.notes,
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.B, r.param, r.count, _fmt(r.reference), _fmt(r.ratio)])
        return buf.getvalue()

    def json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(x)


def _exact(q: Fraction) -> dict:
    return {"exact": str(q), "decimal": float(q)}


# -- fitting ---------------------------------------------------------------------------


def manin_basis(B: int, r: int) -> tuple[float, float]:
    L = math.log(B)
    return B * L ** (r - 1), B * L ** (r - 2)


def two_term_fit(schedule: Sequence[int], counts: Sequence[int], r: int) -> tuple[float, float, float]:
    """Least squares count ~ C1 B (log B)^(r-1) + C2 B (log B)^(r-2).

    Rows are scaled by 1/(B (log B)^(r-1)) so that every B carries the same
    weight; the 2x2 normal equations are solved in closed form.  Returns
    (C1, C2, rms relative residual).
    """
    if len(schedule) < 3:
        raise FitError("a two-term fit needs at least 3 schedule points")
    rows = []
    for B, c in zip(schedule, counts):
        u, v = manin_basis(B, r)
        rows.append((1.0, v / u, c / u))
    s11 = sum(a * a for a, _, _ in rows)
    s12 = sum(a * b for a, b, _ in rows)
    s22 = sum(b * b for _, b, _ in rows)
    t1 = sum(a * y for a, _, y in rows)
    t2 = sum(b * y for _, b, y in rows)
    det = s11 * s22 - s12 * s12
    C1 = (t1 * s22 - t2 * s12) / det
    C2 = (s11 * t2 - s12 * t1) / det
    res = math.sqrt(sum((C1 * a + C2 * b - y) ** 2 for a, b, y in rows) / len(rows))
    return C1, C2, res


# -- runners -----------------------------------------------------------------------------


def run_manin(
    fd: FanData, schedule: Sequence[int], workers: int = 1, fit: bool = True, P_max: int = DEFAULT_P_MAX
) -> FitReport:
    """#C_0(B)^+ in total and per cone (full box), against alpha * kappa."""
    alpha = alpha_constant(fd)
    kappa = kappa_truncated(fd, P_max)
    per_cone_pred = float(alpha) * kappa.value
    rows = []
    totals = []
    for B in schedule:
        main = manin_basis(B, fd.r)[0]
        total = count(fd, CountQuery(B, coprime_only=True), workers=workers)
        totals.append(total)
        rows.append(Row(B, "all", total, per_cone_pred * len(fd.cones) * main))
        for s in range(len(fd.cones)):
            q = CountQuery(B, box=Box(s, (Fraction(1),) * fd.d), coprime_only=True)
            rows.append(Row(B, f"cone{s}", count(fd, q, workers=workers), per_cone_pred * main))
    rep = FitReport(
        "manin",
        fd.name,
        rows,
        {"alpha": _exact(alpha), "kappa": kappa.to_dict(), "cones": len(fd.cones), "r": fd.r},
        predicted=per_cone_pred * len(fd.cones),
    )
    if fit:
        rep.C1, rep.C2, rep.residual = two_term_fit(schedule, totals, fd.r)
    return rep


def congruence_compatible(fd: FanData, l: int, xi: Sequence[int]) -> bool:
    """Whether some coprime point can reduce to xi mod l."""
    for p in range(2, l + 1):
        if l % p == 0 and all(p % q for q in range(2, p)):
            mask = sum(1 << i for i, x in enumerate(xi) if x % p == 0)
            if not fd.is_face(mask):
                return False
    return True


def _classes(fd: FanData, params: dict) -> list[tuple[int, tuple[int, ...]]]:
    if "classes" in params:
        return [(int(l), tuple(int(x) for x in xi)) for l, xi in params["classes"]]
    l = int(params.get("l", 1))
    xi = params.get("xi")
    if xi is None:
        if l != 1:
            raise PlanError("equidist plan with l > 1 needs residues xi")
        xi = [0] * fd.n
    return [(l, tuple(int(x) for x in xi))]


def run_equidist(
    fd: FanData,
    schedule: Sequence[int],
    classes: Sequence[tuple[int, Sequence[int]]] = ((1, ()),),
    cone: int = 0,
    lam: Sequence[Fraction] | None = None,
    workers: int = 1,
    fit: bool = False,
    P_max: int = DEFAULT_P_MAX,
) -> FitReport:
    """#C_0([xi_l, B_inf]; B)^+ summed over the given classes, against kappa_(l) vol alpha B (log B)^(r-1)."""
    lam = tuple(Fraction(x) for x in (lam if lam is not None else (1,) * fd.d))
    alpha = alpha_constant(fd)
    vol = math.prod(lam, start=Fraction(1))
    notes = []
    pred_coeff = 0.0
    constants: dict[str, Any] = {"alpha": _exact(alpha), "box_volume": _exact(vol), "cone": cone, "classes": []}
    live = []
    for l, xi in classes:
        xi = tuple(xi) if xi else (0,) * fd.n
        entry = {"l": l, "xi": list(xi)}
        if l > 1 and not congruence_compatible(fd, l, xi):
            notes.append(f"class {list(xi)} mod {l} contains no coprime point")
            entry["compatible"] = False
        else:
            kl = kappa_level(fd, l, P_max)
            entry["kappa_l"] = kl.to_dict()
            pred_coeff += kl.value * float(vol) * float(alpha)
            live.append((l, xi))
        constants["classes"].append(entry)
    rows = []
    counts = []
    for B in schedule:
        total = 0
        for l, xi in live:
            cong = Congruence(l, xi) if l > 1 else None
            q = CountQuery(B, box=Box(cone, lam), congruence=cong, coprime_only=True)
            total += count(fd, q, workers=workers)
        counts.append(total)
        rows.append(Row(B, f"cone{cone}", total, pred_coeff * manin_basis(B, fd.r)[0]))
    rep = FitReport("equidist", fd.name, rows, constants, predicted=pred_coeff, notes=notes)
    if fit:
        rep.C1, rep.C2, rep.residual = two_term_fit(schedule, counts, fd.r)
    return rep


def run_flat_complement(fd: FanData, schedule: Sequence[int], A: float) -> FitReport:
    rows = []
    for B in schedule:
        c = flat_complement_count(fd, B, A)
        rows.append(Row(B, f"A={A}", c, sieve_curves(B, fd.r)["B_logB_r_minus_2_loglogB"]))
    return FitReport("flat_complement", fd.name, rows, {"A": A, "r": fd.r})


def run_geom_sieve(
    fd: FanData, schedule: Sequence[int], f: str, g: str, Ns: Sequence[int], coprime_only: bool = False
) -> FitReport:
    pair = PolyPair.make(parse_poly(f, fd.n), parse_poly(g, fd.n))
    rows = []
    notes = []
    for B in schedule:
        for N in Ns:
            prof = geometric_sieve_profile(fd, pair, N, B, coprime_only)
            if prof.undecided:
                notes.append(f"B={B} N={N}: {prof.undecided} points with an unfactored cofactor")
            rows.append(Row(B, f"N={N}", prof.count, sieve_curves(B, fd.r, N)["geom_envelope"]))
    return FitReport(
        "geom_sieve", fd.name, rows, {"f": str(pair.f), "g": str(pair.g), "witness": pair.witness}, notes=notes
    )


def run_subvariety(fd: FanData, schedule: Sequence[int], phi: str) -> FitReport:
    poly = parse_poly(phi, fd.n)
    rows = [
        Row(B, str(poly), subvariety_count(fd, poly, B), sieve_curves(B, fd.r)["B_logB_r_minus_2_loglogB"])
        for B in schedule
    ]
    return FitReport("subvariety", fd.name, rows, {"phi": str(poly)})


def run_prime_section(fd: FanData, schedule: Sequence[int], s: str, theta: float = 1.0) -> FitReport:
    poly = parse_poly(s, fd.n)
    rows = []
    for B in schedule:
        curve = sieve_curves(B, fd.r)["B_logB_r_minus_1"] / math.log(math.log(B)) ** theta if B >= 3 else None
        rows.append(Row(B, str(poly), prime_section_count(fd, poly, B), curve))
    return FitReport("prime_section", fd.name, rows, {"s": str(poly), "theta": theta})


def run_plan(plan: ExperimentPlan, workers: int = 1) -> FitReport:
    fd = FanData.load(plan.fan)
    p = plan.params
    if plan.kind == "manin":
        rep = run_manin(fd, plan.schedule, workers, fit=len(plan.schedule) >= 3)
    elif plan.kind == "equidist":
        lam = [Fraction(x) for x in p["lambda"]] if "lambda" in p else None
        rep = run_equidist(
            fd, plan.schedule, _classes(fd, p), int(p.get("cone", 0)), lam, workers, fit=bool(p.get("fit", False))
        )
    elif plan.kind == "flat_complement":
        rep = run_flat_complement(fd, plan.schedule, float(p["A"]))
    elif plan.kind == "geom_sieve":
        Ns = p["N"] if isinstance(p["N"], list) else [p["N"]]
        rep = run_geom_sieve(fd, plan.schedule, p["f"], p["g"], [int(N) for N in Ns], bool(p.get("coprime", False)))
    elif plan.kind == "subvariety":
        rep = run_subvariety(fd, plan.schedule, p["phi"])
    else:
        rep = run_prime_section(fd, plan.schedule, p["s"], float(p.get("theta", 1.0)))
    rep.constants["plan"] = plan.to_dict()
    return rep


def write_outputs(report: FitReport, prefix: str | Path) -> tuple[Path, Path]:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_name(prefix.name + ".csv")
    json_path = prefix.with_name(prefix.name + ".json")
    csv_path.write_text(report.csv_text())
    json_path.write_text(report.json_text())
    return csv_path, json_path


def residue_classes(l: int, n: int):
    """All residue vectors mod l, lexicographically."""
    return itertools.product(range(l), repeat=n)
