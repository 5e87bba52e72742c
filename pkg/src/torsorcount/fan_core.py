"""Smooth complete fans: parsing, validation, Picard lattice and cone data.

Rays are indexed 0..n-1 in input order and every per-ray vector in this
module (a-vectors, E- and F-exponents) is indexed the same way.  The
admissible ordering of a cone is recorded separately in ``ConeData.order``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import intlinalg as la


class FanError(ValueError):
    """Malformed fan input, or a fan outside the supported hypotheses."""


class FanSourceError(FanError):
    """The fan file is missing or unreadable."""


@dataclass(frozen=True)
class Fan:
    dim: int
    rays: tuple[tuple[int, ...], ...]
    max_cones: tuple[tuple[int, ...], ...]
    name: str | None = None

    @property
    def n(self) -> int:
        return len(self.rays)


def parse_fan(text: str) -> Fan:
    """Parse the JSON fan format; checks syntax and shapes only."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FanError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise FanError("fan file must hold a JSON object")
    unknown = set(obj) - {"rays", "max_cones", "name"}
    if unknown:
        raise FanError(f"unknown keys: {sorted(unknown)}")
    rays = obj.get("rays")
    cones = obj.get("max_cones")
    if not isinstance(rays, list) or not rays:
        raise FanError("'rays' must be a non-empty array")
    if not isinstance(cones, list) or not cones:
        raise FanError("'max_cones' must be a non-empty array")
    for i, ray in enumerate(rays):
        if not isinstance(ray, list) or not ray or not all(_is_int(x) for x in ray):
            raise FanError(f"ray {i} is not a non-empty integer array")
    d = len(rays[0])
    for i, ray in enumerate(rays):
        if len(ray) != d:
            raise FanError(f"ray {i} has dimension {len(ray)}, expected {d}")
    n = len(rays)
    for k, cone in enumerate(cones):
        if not isinstance(cone, list) or not all(_is_int(x) for x in cone):
            raise FanError(f"cone {k} is not an integer array")
        if len(cone) != d:
            raise FanError(f"cone {k} has {len(cone)} rays, expected {d}")
        for i in cone:
            if not 0 <= i < n:
                raise FanError(f"cone {k} references ray index {i} out of range")
    name = obj.get("name")
    if name is not None and not isinstance(name, str):
        raise FanError("'name' must be a string")
    return Fan(
        dim=d,
        rays=tuple(tuple(r) for r in rays),
        max_cones=tuple(tuple(c) for c in cones),
        name=name,
    )


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def serialize_fan(fan: Fan) -> str:
    obj = {"rays": [list(r) for r in fan.rays], "max_cones": [list(c) for c in fan.max_cones]}
    if fan.name is not None:
        obj["name"] = fan.name
    return json.dumps(obj, sort_keys=True)


BUILTIN_FANS = ("p1", "p2", "p3", "p1xp1", "f1", "dp7", "dp6", "p1xp1xp1")


def builtin_fan(name: str) -> Fan:
    key = name.lower().replace("×", "x").replace("^", "")
    if key not in BUILTIN_FANS:
        raise FanError(f"unknown builtin fan {name!r}; choose from {', '.join(BUILTIN_FANS)}")
    text = resources.files("torsorcount").joinpath(f"data/fans/{key}.json").read_text()
    return parse_fan(text)


def load_fan(ref: str | Path) -> Fan:
    """Load a fan from a file path, or from a builtin name such as ``p2``.

    A missing ``<name>.json`` whose stem is a builtin name falls back to
    the builtin, so ``p2.json`` works from any directory.
    """
    path = Path(ref)
    if path.exists():
        try:
            return parse_fan(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError) as exc:
            raise FanSourceError(f"cannot read {path}: {exc}") from None
    key = path.name[:-5] if path.name.endswith(".json") else str(ref)
    if key.lower() in BUILTIN_FANS and (key == str(ref) or path.parent == Path(".")):
        return builtin_fan(key)
    raise FanSourceError(f"no such fan file: {ref}")


# -- validation ---------------------------------------------------------------


@dataclass
class FanReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(self.violations)


def validate_fan(fan: Fan) -> FanReport:
    """Check primitivity, regularity and completeness of a parsed fan."""
    report = FanReport()
    bad = report.violations
    d = fan.dim
    for i, ray in enumerate(fan.rays):
        if all(x == 0 for x in ray):
            bad.append(f"ray {i} is zero")
        elif math.gcd(*ray) != 1:
            bad.append(f"ray {i} {list(ray)} is not primitive")
    seen = {}
    for i, ray in enumerate(fan.rays):
        if ray in seen:
            bad.append(f"rays {seen[ray]} and {i} are equal")
        seen.setdefault(ray, i)
    cone_sets = []
    for k, cone in enumerate(fan.max_cones):
        if len(set(cone)) != len(cone):
            bad.append(f"cone {k} repeats a ray")
        key = frozenset(cone)
        if key in cone_sets:
            bad.append(f"cone {k} duplicates cone {cone_sets.index(key)}")
        cone_sets.append(key)
        det = la.det([fan.rays[i] for i in cone])
        if abs(det) != 1:
            bad.append(f"cone {k} {list(cone)} is not regular (determinant {det})")
    if bad:
        return report

    # facet pairing: each (d-1)-face lies in exactly two maximal cones,
    # one on each side of its hyperplane
    facets: dict[frozenset, list[int]] = {}
    for k, cone in enumerate(fan.max_cones):
        for facet in itertools.combinations(sorted(cone), d - 1):
            facets.setdefault(frozenset(facet), []).append(k)
    for facet, owners in sorted(facets.items(), key=lambda kv: sorted(kv[0])):
        label = "{" + ", ".join(str(list(fan.rays[i])) for i in sorted(facet)) + "}"
        if len(owners) == 1:
            bad.append(f"facet {label} of cone {owners[0]} is unmatched (fan not complete)")
        elif len(owners) > 2:
            bad.append(f"facet {label} is shared by cones {owners}")
        elif not _opposite_sides(fan, facet, owners):
            bad.append(f"cones {owners} overlap across facet {label}")
    if bad:
        return report

    # dual graph connectivity
    adj = {k: set() for k in range(len(fan.max_cones))}
    for owners in facets.values():
        if len(owners) == 2:
            a, b = owners
            adj[a].add(b)
            adj[b].add(a)
    reach = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in reach:
                reach.add(nb)
                stack.append(nb)
    if len(reach) != len(fan.max_cones):
        missing = sorted(set(adj) - reach)
        bad.append(f"dual graph is disconnected; cones {missing} unreachable from cone 0")

    # support panel: every vector of {-1,0,1}^d \ 0 lies in some cone
    inverses = [la.inverse([list(fan.rays[i]) for i in cone]) for cone in fan.max_cones]
    for v in itertools.product((-1, 0, 1), repeat=d):
        if not any(v):
            continue
        if not any(all(c >= 0 for c in la.matvec(la.transpose(inv), v)) for inv in inverses):
            bad.append(f"direction {list(v)} is not covered by any cone (fan not complete)")
    return report


def _opposite_sides(fan: Fan, facet: frozenset, owners: list[int]) -> bool:
    # normal to the facet hyperplane via cofactors of a completed matrix
    rows = [list(fan.rays[i]) for i in sorted(facet)]
    sides = []
    for k in owners:
        (apex,) = set(fan.max_cones[k]) - facet
        sides.append(la.det(rows + [list(fan.rays[apex])]))
    return sides[0] * sides[1] < 0


# -- Picard lattice -----------------------------------------------------------


@dataclass(frozen=True)
class PicData:
    """Class map Z^{rays} -> Pic(X) = Z^r, stored as an n x r matrix."""

    rank: int
    class_map: tuple[tuple[int, ...], ...]

    def cls(self, vec: Sequence[int]) -> tuple[int, ...]:
        """Class of the divisor sum_rho vec[rho] D_rho."""
        return tuple(
            sum(v * self.class_map[i][k] for i, v in enumerate(vec)) for k in range(self.rank)
        )


def picard_lattice(fan: Fan) -> PicData:
    """Cokernel of M -> Z^{rays}, m -> (<m, n_rho>)_rho, via Smith normal form."""
    n, d = fan.n, fan.dim
    h = [list(ray) for ray in fan.rays]  # n x d
    S, P, _ = la.smith_normal_form(h)
    diag = [S[i][i] for i in range(min(n, d))]
    if any(x == 0 for x in diag):
        raise FanError("rays do not span the lattice rationally")
    if any(x != 1 for x in diag):
        raise FanError(f"Picard group has torsion (invariants {diag}); fan is not smooth complete")
    r = n - d
    rows = P[d:]  # r x n, kills the image of h
    return PicData(rank=r, class_map=tuple(tuple(rows[k][i] for k in range(r)) for i in range(n)))


# -- per-cone data -------------------------------------------------------------


@dataclass(frozen=True)
class ConeData:
    index: int
    order: tuple[int, ...]  # admissible ordering: r base rays, then the d rays of the cone
    m_vec: tuple[int, ...]
    a_vec: tuple[int, ...]
    f_vecs: tuple[tuple[int, ...], ...]  # F(j) exponents over all rays
    e_vecs: tuple[tuple[int, ...], ...]  # E(j) = D_{fiber j} - F(j), zero on the cone's rays

    @property
    def base(self) -> tuple[int, ...]:
        return self.order[: len(self.order) - len(self.f_vecs)]

    @property
    def fiber(self) -> tuple[int, ...]:
        return self.order[len(self.order) - len(self.f_vecs) :]

    def e_base(self, j: int) -> tuple[int, ...]:
        """E(j) restricted to the base rays, in admissible order."""
        return tuple(self.e_vecs[j][i] for i in self.base)


class NotGloballyGenerated(FanError):
    """The anticanonical divisor is not globally generated."""


def cone_data(fan: Fan, sigma: int, pic: PicData | None = None) -> ConeData:
    """Support vector m, height exponents a and E/F exponent vectors of cone sigma.

    ``pic`` is accepted for symmetry with the other fan-level calls; the cone
    data do not depend on the Picard basis.
    """
    cone = fan.max_cones[sigma]
    in_cone = set(cone)
    fiber = tuple(sorted(in_cone))
    base = tuple(i for i in range(fan.n) if i not in in_cone)
    Msig = [list(fan.rays[i]) for i in fiber]  # d x d, rows are rays
    inv = la.unimodular_inverse(Msig)  # columns: dual basis vectors
    m = [sum(inv[k][j] for j in range(fan.dim)) for k in range(fan.dim)]
    a = tuple(1 - sum(mk * xk for mk, xk in zip(m, ray)) for ray in fan.rays)
    if any(x < 0 for x in a):
        neg = [i for i, x in enumerate(a) if x < 0]
        raise NotGloballyGenerated(
            f"anticanonical not globally generated: a_rho(cone {sigma}) < 0 for rays {neg}"
        )
    f_vecs, e_vecs = [], []
    for j, rho_j in enumerate(fiber):
        dual = [inv[k][j] for k in range(fan.dim)]
        f = tuple(sum(u * x for u, x in zip(dual, ray)) for ray in fan.rays)
        e = tuple(int(i == rho_j) - f[i] for i in range(fan.n))
        f_vecs.append(f)
        e_vecs.append(e)
    return ConeData(
        index=sigma,
        order=base + fiber,
        m_vec=tuple(m),
        a_vec=a,
        f_vecs=tuple(f_vecs),
        e_vecs=tuple(e_vecs),
    )


def chart_map(fan: Fan, cd: ConeData, X: Sequence) -> tuple[Fraction, ...]:
    """Chart coordinates z_j = X^{F(j)} of the image of X in the cone's affine chart."""
    if any(x == 0 for x in X):
        raise ValueError("chart_map needs nonzero coordinates")
    return tuple(monomial(X, f) for f in cd.f_vecs)


def monomial(X: Sequence, exps: Sequence[int]) -> Fraction:
    num, den = 1, 1
    for x, e in zip(X, exps):
        if e > 0:
            num *= x**e
        elif e < 0:
            den *= x ** (-e)
    return Fraction(num, den)


# -- bundled fan data -----------------------------------------------------------


class FanData:
    """A validated fan together with everything derived from it.

    Build once with ``FanData(fan)`` (or ``FanData.load``) and share; all
    attributes are computed eagerly or cached and never mutated afterwards.
    """

    def __init__(self, fan: Fan):
        report = validate_fan(fan)
        if not report.ok:
            raise FanError("invalid fan:\n" + str(report))
        self.fan = fan
        self.pic = picard_lattice(fan)
        self.cones = tuple(cone_data(fan, k, self.pic) for k in range(len(fan.max_cones)))

    @classmethod
    def load(cls, ref: str | Path) -> "FanData":
        return cls(load_fan(ref))

    def __getstate__(self):
        return {"fan": self.fan}

    def __setstate__(self, state):
        self.__init__(state["fan"])

    @property
    def n(self) -> int:
        return self.fan.n

    @property
    def d(self) -> int:
        return self.fan.dim

    @property
    def r(self) -> int:
        return self.pic.rank

    @property
    def name(self) -> str:
        return self.fan.name or "fan"

    @cached_property
    def cone_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << i for i in cone) for cone in self.fan.max_cones)

    def is_face(self, mask: int) -> bool:
        """Whether the ray subset encoded by ``mask`` spans a cone of the fan."""
        return any(mask & cm == mask for cm in self.cone_masks)

    @cached_property
    def face_masks(self) -> frozenset[int]:
        """Bitmasks of all ray subsets spanning a cone, the empty set included."""
        return frozenset(m for m in range(1 << self.n) if self.is_face(m))

    @cached_property
    def f_vector(self) -> tuple[int, ...]:
        """Number of cones of each dimension 0..d."""
        counts = [0] * (self.d + 1)
        for mask in self.face_masks:
            counts[bin(mask).count("1")] += 1
        return tuple(counts)

    @cached_property
    def primitive_collections(self) -> tuple[tuple[int, ...], ...]:
        """Minimal ray subsets that span no cone."""
        out: list[int] = []
        for size in range(1, self.n + 1):
            for combo in itertools.combinations(range(self.n), size):
                mask = sum(1 << i for i in combo)
                if self.is_face(mask) or any(p & mask == p for p in out):
                    continue
                out.append(mask)
        return tuple(tuple(i for i in range(self.n) if m >> i & 1) for m in out)

    @cached_property
    def coord_caps(self) -> tuple[int, ...]:
        """Largest exponent of each Cox coordinate over all height monomials."""
        return tuple(max(cd.a_vec[i] for cd in self.cones) for i in range(self.n))
