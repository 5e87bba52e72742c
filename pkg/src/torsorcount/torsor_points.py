"""Cox-coordinate points of bounded anticanonical height.

Everything here runs on Python ints.  Enumeration walks one maximal cone
at a time in its admissible order: the r base coordinates are bounded by
the cone's height monomial, the d fiber coordinates by
X_fiber(j) <= lambda_j * X^{E(j)}.  Without a box, a point lying on the
boundary of several cones is reported only by the smallest such cone.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .arith import iroot, prime_divisors
from .fan_core import FanData, chart_map, monomial

DEFAULT_MAX_POINTS = 20_000_000
DEFAULT_MAX_WORK = 2_000_000_000


class QueryError(ValueError):
    """A count query is inconsistent with itself or with the fan."""


class EnumerationTooLarge(RuntimeError):
    def __init__(self, estimate: float, cap: int):
        super().__init__(
            f"refusing to enumerate: about {estimate:.3g} points expected, cap is {cap:,} "
            "(raise max_points to override)"
        )
        self.estimate = estimate
        self.cap = cap


@dataclass(frozen=True)
class Box:
    """Chart box 0 < z_j <= lam_j in the affine chart of maximal cone ``cone``.

    z_j is the chart coordinate dual to the j-th ray of the cone, rays taken
    in increasing index order.
    """

    cone: int
    lam: tuple[Fraction, ...]

    def __post_init__(self):
        lam = tuple(Fraction(x) for x in self.lam)
        if any(not 0 < x <= 1 for x in lam):
            raise QueryError("box side lengths must lie in (0, 1]")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class Congruence:
    modulus: int
    residues: tuple[int, ...]

    def __post_init__(self):
        if self.modulus < 1:
            raise QueryError("congruence modulus must be positive")
        object.__setattr__(self, "residues", tuple(x % self.modulus for x in self.residues))


@dataclass(frozen=True)
class CountQuery:
    B: int
    box: Box | None = None
    congruence: Congruence | None = None
    divisibility: tuple[int, ...] | None = None
    coprime_only: bool = False

    def __post_init__(self):
        if self.B < 0:
            raise QueryError("height bound must be nonnegative")
        if self.divisibility is not None:
            dv = tuple(int(x) for x in self.divisibility)
            if any(x < 1 for x in dv):
                raise QueryError("divisibility entries must be positive")
            object.__setattr__(self, "divisibility", dv)
            if self.congruence is not None and any(
                math.gcd(x, self.congruence.modulus) != 1 for x in dv
            ):
                raise QueryError("divisibility vector must be coprime to the congruence modulus")

    def check(self, fd: FanData) -> None:
        if self.box is not None:
            if not 0 <= self.box.cone < len(fd.cones):
                raise QueryError(f"box cone {self.box.cone} out of range")
            if len(self.box.lam) != fd.d:
                raise QueryError(f"box needs {fd.d} side lengths")
        if self.congruence is not None and len(self.congruence.residues) != fd.n:
            raise QueryError(f"congruence needs {fd.n} residues")
        if self.divisibility is not None and len(self.divisibility) != fd.n:
            raise QueryError(f"divisibility vector needs {fd.n} entries")

    def to_dict(self) -> dict:
        out: dict = {"B": self.B, "coprime_only": self.coprime_only}
        if self.box is not None:
            out["box"] = {"cone": self.box.cone, "lambda": [str(x) for x in self.box.lam]}
        if self.congruence is not None:
            out["congruence"] = {
                "modulus": self.congruence.modulus,
                "residues": list(self.congruence.residues),
            }
        if self.divisibility is not None:
            out["divisibility"] = list(self.divisibility)
        return out


@dataclass(frozen=True)
class TorsorPoint:
    coords: tuple[int, ...]
    height: int
    integral: bool


# -- pointwise predicates --------------------------------------------------------


def _check_nonzero(X: Sequence[int]) -> None:
    if any(x == 0 for x in X):
        raise ValueError("Cox coordinates must be nonzero")


def height_monomials(fd: FanData, X: Sequence[int]) -> list[int]:
    """|X^{D_0(sigma)}| for every maximal cone, in cone order."""
    return [abs(math.prod(x**e for x, e in zip(X, cd.a_vec) if e)) for cd in fd.cones]


def toric_height(fd: FanData, X: Sequence[int]) -> int:
    _check_nonzero(X)
    return max(height_monomials(fd, X))


def which_cone(fd: FanData, X: Sequence[int]) -> int:
    """Smallest maximal cone index whose height monomial attains the height."""
    _check_nonzero(X)
    mons = height_monomials(fd, X)
    return mons.index(max(mons))


def is_cox_integral(fd: FanData, X: Sequence[int]) -> bool:
    """For every prime p, the rays with p | X_rho must span a cone of the fan."""
    _check_nonzero(X)
    masks: dict[int, int] = {}
    for i, x in enumerate(X):
        if abs(x) > 1:
            for p in prime_divisors(abs(x)):
                masks[p] = masks.get(p, 0) | (1 << i)
    return all(fd.is_face(m) for m in masks.values())


def complement_gcd(fd: FanData, X: Sequence[int]) -> int:
    """gcd over maximal cones of the product of |X_rho| over rays outside the cone."""
    return math.gcd(
        *(math.prod(abs(X[i]) for i in range(fd.n) if not cm >> i & 1) for cm in fd.cone_masks)
    )


def _primitive_ok(fd: FanData, X: Sequence[int]) -> bool:
    return all(math.gcd(*(X[i] for i in pc)) == 1 for pc in fd.primitive_collections)


# -- enumeration engine ------------------------------------------------------------


def _progression(residue: int | None, modulus: int, divisor: int) -> tuple[int, int]:
    """(start, step) of the positive integers x = residue mod modulus, divisor | x."""
    if residue is None or modulus == 1:
        return divisor, divisor
    step = modulus * divisor
    for x in range(divisor, step + 1, divisor):
        if x % modulus == residue:
            return x, step
    raise QueryError("congruence and divisibility constraints are incompatible")


def _count_progression(lo: int, hi: int, start: int, step: int) -> int:
    """#{x in [lo, hi] : x = start mod step}."""
    if hi < lo:
        return 0
    first = lo + (start - lo) % step
    if first > hi:
        return 0
    return (hi - first) // step + 1


def count_coprime_progression(lo: int, hi: int, start: int, step: int, primes: Sequence[int]) -> int:
    """#{x in [lo, hi] : x = start mod step, no p in primes divides x}."""
    if hi < lo:
        return 0
    free = []
    for p in primes:
        if step % p == 0:
            if start % p == 0:
                return 0
        else:
            free.append(p)
    total = 0
    for k in range(len(free) + 1):
        for combo in itertools.combinations(free, k):
            m = math.prod(combo)
            # x = start + step*t with m | x
            t0 = (-start * pow(step, -1, m)) % m if m > 1 else 0
            total += (-1) ** k * _count_progression(lo, hi, start + step * t0, step * m)
    return total


@dataclass
class _ConePlan:
    fd: FanData
    cone: int
    B: int
    lam: tuple[Fraction, ...]
    dedup: bool
    coprime: bool
    order: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        fd = self.fd
        cd = fd.cones[self.cone]
        self.cd = cd
        self.order = cd.order
        self.r, self.d, self.n = fd.r, fd.d, fd.n
        self.a = [cd.a_vec[rho] for rho in cd.base]
        self.caps = [iroot(self.B, fd.coord_caps[rho]) for rho in self.order]
        self.e_terms = [
            [(k, e) for k, e in enumerate(cd.e_base(j)) if e] for j in range(self.d)
        ]
        pos = {rho: k for k, rho in enumerate(self.order)}
        # coprimality: primitive collections grouped by their last position
        self.closing: list[list[list[int]]] = [[] for _ in range(self.n)]
        if self.coprime:
            for pc in fd.primitive_collections:
                ps = sorted(pos[i] for i in pc)
                self.closing[ps[-1]].append(ps[:-1])
        # boundary tie-break: cone sigma' < sigma ties iff all fibers in T are pinned
        self.ties: list[int] = []
        self.dead = False
        if self.dedup:
            fiber = cd.fiber
            masks = set()
            for other in fd.cones[: self.cone]:
                masks.add(sum(1 << j for j, rho in enumerate(fiber) if other.a_vec[rho] > 0))
            minimal = [m for m in masks if not any(o != m and o & m == o for o in masks)]
            self.ties = sorted(minimal)
            self.dead = 0 in masks
        self.prog = [(1, 1)] * self.n

    def set_constraints(self, congruence: Congruence | None, divisibility) -> None:
        prog = []
        for rho in self.order:
            res = congruence.residues[rho] if congruence else None
            mod = congruence.modulus if congruence else 1
            dv = divisibility[rho] if divisibility else 1
            prog.append(_progression(res, mod, dv))
        self.prog = prog

    def _tied(self, pinned: int) -> bool:
        return any(t & pinned == t for t in self.ties)

    def prefixes(self, first_offset: int = 0, first_stride: int = 1) -> Iterator[tuple]:
        """Yield (vals, M, t_last, last_excluded_if_pinned, last_primes).

        ``vals`` holds the first n-1 coordinates in admissible order and is
        reused between yields.  The last coordinate ranges over the
        progression in [1, M]; ``t_last`` is its pinned value or None.
        """
        if self.dead or self.B < 1:
            return
        vals = [0] * self.n
        yield from self._base(0, 1, vals, first_offset, first_stride)

    def _base(self, k, P, vals, off=0, stride=1):
        if k == self.r:
            yield from self._fiber(0, 0, vals)
            return
        a = self.a[k]
        hi = self.caps[k]
        if a > 0:
            hi = min(hi, iroot(self.B // P, a))
        start, step = self.prog[k]
        start += off * step
        step *= stride
        closing = self.closing[k]
        for x in range(start, hi + 1, step):
            if closing and any(math.gcd(x, *(vals[i] for i in c)) != 1 for c in closing):
                continue
            vals[k] = x
            yield from self._base(k + 1, P * x**a, vals)

    def _fiber_bound(self, j, vals):
        num, den = 1, 1
        for k, e in self.e_terms[j]:
            if e > 0:
                num *= vals[k] ** e
            else:
                den *= vals[k] ** (-e)
        lam = self.lam[j]
        M = (lam.numerator * num) // (lam.denominator * den)
        t = num // den if self.dedup and num % den == 0 else None
        return M, t

    def _fiber(self, j, pinned, vals):
        k = self.r + j
        M, t = self._fiber_bound(j, vals)
        if j == self.d - 1:
            excl = t is not None and self._tied(pinned | 1 << j)
            primes: set[int] = set()
            for c in self.closing[k]:
                g = math.gcd(*(vals[i] for i in c))
                if g > 1:
                    primes.update(prime_divisors(g))
            yield vals, M, t, excl, tuple(sorted(primes))
            return
        start, step = self.prog[k]
        closing = self.closing[k]
        for x in range(start, M + 1, step):
            if closing and any(math.gcd(x, *(vals[i] for i in c)) != 1 for c in closing):
                continue
            p = pinned
            if x == t:
                p |= 1 << j
                if self._tied(p):
                    continue
            vals[k] = x
            yield from self._fiber(j + 1, p, vals)

    def count_last(self, lo, hi, M, t, excl, primes) -> int:
        hi = min(hi, M)
        lo = max(lo, 1)
        if hi < lo:
            return 0
        start, step = self.prog[self.n - 1]
        c = count_coprime_progression(lo, hi, start, step, primes)
        if excl and lo <= t <= hi and (t - start) % step == 0 and all(t % p for p in primes):
            c -= 1
        return c

    def last_values(self, M, t, excl, primes) -> Iterator[int]:
        start, step = self.prog[self.n - 1]
        for x in range(start, M + 1, step):
            if excl and x == t:
                continue
            if primes and any(x % p == 0 for p in primes):
                continue
            yield x

    def unpermute(self, vals) -> tuple[int, ...]:
        out = [0] * self.n
        for k, rho in enumerate(self.order):
            out[rho] = vals[k]
        return tuple(out)


def _plans(fd: FanData, query: CountQuery) -> list[_ConePlan]:
    query.check(fd)
    if query.box is not None:
        cones = [query.box.cone]
        lam = query.box.lam
        dedup = False
    else:
        cones = range(len(fd.cones))
        lam = (Fraction(1),) * fd.d
        dedup = True
    plans = []
    for s in cones:
        plan = _ConePlan(fd, s, query.B, lam, dedup, query.coprime_only)
        plan.set_constraints(query.congruence, query.divisibility)
        plans.append(plan)
    return plans


def estimate_size(fd: FanData, B: int) -> float:
    """Rough size of A(B): #cones * B * (log B)^(r-1)."""
    if B < 1:
        return 0.0
    return len(fd.cones) * B * max(1.0, math.log(B)) ** (fd.r - 1)


def enumerate_points(
    fd: FanData, query: CountQuery, max_points: int = DEFAULT_MAX_POINTS
) -> Iterator[TorsorPoint]:
    """Yield every positive-orthant point matching ``query`` exactly once.

    Order: cone by cone, lexicographic in each cone's admissible order.
    """
    est = estimate_size(fd, query.B)
    if est > max_points:
        raise EnumerationTooLarge(est, max_points)
    for plan in _plans(fd, query):
        cd = plan.cd
        for vals, M, t, excl, primes in plan.prefixes():
            for x in plan.last_values(M, t, excl, primes):
                vals[-1] = x
                X = plan.unpermute(vals)
                h = math.prod(v**e for v, e in zip(X, cd.a_vec) if e)
                yield TorsorPoint(X, h, query.coprime_only or _primitive_ok(fd, X))


def _count_plan(plan: _ConePlan, offset: int = 0, stride: int = 1) -> int:
    total = 0
    for _, M, t, excl, primes in plan.prefixes(offset, stride):
        total += plan.count_last(1, M, M, t, excl, primes)
    return total


def _count_task(args) -> int:
    fd, query, cone_pos, offset, stride = args
    return _count_plan(_plans(fd, query)[cone_pos], offset, stride)


def count(
    fd: FanData, query: CountQuery, workers: int = 1, max_work: int = DEFAULT_MAX_WORK
) -> int:
    """Number of points ``enumerate_points`` would yield, without materializing them.

    With ``workers > 1`` the first base coordinate is dealt round-robin into
    disjoint chunks counted in separate processes.
    """
    est = estimate_size(fd, query.B)
    if est > max_work:
        raise EnumerationTooLarge(est, max_work)
    plans = _plans(fd, query)
    if workers <= 1:
        return sum(_count_plan(p) for p in plans)
    stride = workers * 4
    tasks = [(fd, query, i, off, stride) for i in range(len(plans)) for off in range(stride)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_count_task, tasks))


def count_per_cone(fd: FanData, query: CountQuery) -> list[int]:
    """Counts of the deduplicated pieces A_sigma(B), one per maximal cone."""
    if query.box is not None:
        raise QueryError("per-cone split is defined for unboxed queries")
    return [_count_plan(p) for p in _plans(fd, query)]


# -- derived counts ------------------------------------------------------------------


def kernel_sign_masks(fd: FanData) -> frozenset[int]:
    """Image of {+-1}^r (the Neron-Severi torus over Z) in sign patterns on rays."""
    out = set()
    for v in itertools.product((0, 1), repeat=fd.r):
        mask = 0
        for i, row in enumerate(fd.pic.class_map):
            if sum(c * x for c, x in zip(row, v)) % 2:
                mask |= 1 << i
        out.add(mask)
    return frozenset(out)


def sign_classes(fd: FanData) -> int:
    """Number of sign patterns on the rays modulo the kernel sign action."""
    kernel = kernel_sign_masks(fd)
    return len({min(s ^ k for k in kernel) for s in range(1 << fd.n)})


def rational_point_count(fd: FanData, B: int, brute: bool = False) -> int:
    """Number of rational points of the open torus with height <= B.

    Each positive integral point contributes one point per sign class.  With
    ``brute=True`` every signed integer vector in the coordinate box is
    tested and reduced modulo the kernel sign action instead (small B only).
    """
    if B < 1:
        return 0
    if not brute:
        return sign_classes(fd) * count(fd, CountQuery(B, coprime_only=True))
    kernel = kernel_sign_masks(fd)
    caps = [iroot(B, c) for c in fd.coord_caps]
    seen = set()
    ranges = [[x for x in range(-c, c + 1) if x] for c in caps]
    for X in itertools.product(*ranges):
        if toric_height(fd, X) > B or not is_cox_integral(fd, X):
            continue
        s = sum(1 << i for i, x in enumerate(X) if x < 0)
        canon = min(s ^ k for k in kernel)
        key = tuple(-abs(x) if canon >> i & 1 else abs(x) for i, x in enumerate(X))
        seen.add(key)
    return len(seen)


def _first_at_least(c: Fraction, e: int, T: Fraction) -> int:
    """Smallest integer x >= 1 with c * x**e >= T (e > 0)."""
    x = max(1, math.floor((float(T) / float(c)) ** (1.0 / e)) - 1)
    while x > 1 and c * (x - 1) ** e >= T:
        x -= 1
    while c * x**e < T:
        x += 1
    return x


def _last_at_least(c: Fraction, e: int, T: Fraction) -> int:
    """Largest integer x >= 0 with c >= T * x**e (e > 0)."""
    if c < T:
        return 0
    x = max(1, math.floor((float(c) / float(T)) ** (1.0 / e)) - 1)
    while x > 1 and c < T * x**e:
        x -= 1
    while c >= T * (x + 1) ** e:
        x += 1
    return x


def flat_complement_count(fd: FanData, B: int, A: float) -> int:
    """#(A(B) minus the points where every X^{E_sigma(j)} >= (log B)^A)."""
    if B < 3:
        raise QueryError("flat complement needs B >= 3")
    T = Fraction((math.log(B)) ** A)
    exps = [e for cd in fd.cones for e in cd.e_vecs]
    total = 0
    for plan in _plans(fd, CountQuery(B)):
        last = plan.order[-1]
        prefix_order = plan.order[:-1]
        split = [([(k, e[rho]) for k, rho in enumerate(prefix_order) if e[rho]], e[last]) for e in exps]
        for vals, M, t, excl, primes in plan.prefixes():
            lo, hi = 1, M
            for terms, e_last in split:
                c = monomial([vals[k] for k, _ in terms], [e for _, e in terms])
                if e_last == 0:
                    if c < T:
                        lo, hi = 1, 0
                        break
                elif e_last > 0:
                    lo = max(lo, _first_at_least(c, e_last, T))
                else:
                    hi = min(hi, _last_at_least(c, -e_last, T))
                if hi < lo:
                    break
            full = plan.count_last(1, M, M, t, excl, primes)
            flat = plan.count_last(lo, hi, M, t, excl, primes) if lo <= hi else 0
            total += full - flat
    return total


def chart_coordinates(fd: FanData, cone: int, X: Sequence[int]) -> tuple[Fraction, ...]:
    return chart_map(fd.fan, fd.cones[cone], X)
