"""Leading-constant ingredients: alpha(X), local densities kappa_p, mu_X, alpha_0."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .arith import factorint, is_prime, primes_up_to
from .fan_core import FanData, FanError
from .intlinalg import det, rank, solve

MAX_ALPHA_RANK = 6


class ConstantError(ValueError):
    pass


# -- alpha -------------------------------------------------------------------------


@dataclass(frozen=True)
class EffConePolytope:
    """{y : <[D_rho], y> >= 0 for all rho, <-K, y> <= 1}, stored as rows a.y <= b."""

    rows: tuple[tuple[Fraction, ...], ...]
    rhs: tuple[Fraction, ...]
    vertices: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.rows[0])

    def tight(self, v) -> frozenset[int]:
        return frozenset(
            i for i, (a, b) in enumerate(zip(self.rows, self.rhs)) if sum(x * y for x, y in zip(a, v)) == b
        )

    def contains(self, y) -> bool:
        return all(sum(x * c for x, c in zip(a, y)) <= b for a, b in zip(self.rows, self.rhs))


def eff_dual_polytope(class_map: Sequence[Sequence[int]]) -> EffConePolytope:
    r = len(class_map[0])
    if r > MAX_ALPHA_RANK:
        raise ConstantError(f"Picard rank {r} exceeds the vertex-enumeration guard ({MAX_ALPHA_RANK})")
    anti = [sum(row[k] for row in class_map) for k in range(r)]
    rows = [tuple(Fraction(-x) for x in row) for row in class_map] + [tuple(map(Fraction, anti))]
    rhs = [Fraction(0)] * len(class_map) + [Fraction(1)]
    poly = EffConePolytope(tuple(rows), tuple(rhs), ())
    verts = set()
    for idx in itertools.combinations(range(len(rows)), r):
        y = solve([rows[i] for i in idx], [rhs[i] for i in idx])
        if y is not None and poly.contains(y):
            verts.add(tuple(y))
    if len(verts) < r + 1 or rank([[a - b for a, b in zip(v, min(verts))] for v in verts]) < r:
        raise ConstantError("-K is not big: the dual effective polytope is not full-dimensional")
    return EffConePolytope(poly.rows, poly.rhs, tuple(sorted(verts)))


def _affine_dim(points) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    return rank([[a - b for a, b in zip(p, base)] for p in points[1:]])


def _triangulate(poly: EffConePolytope, face: tuple, k: int) -> list[tuple]:
    """Pulling triangulation of a k-dimensional face given by its vertex tuple."""
    if k == 0:
        return [face]
    apex = face[0]
    apex_tight = poly.tight(apex)
    on_face = frozenset.intersection(*(poly.tight(v) for v in face))
    facets = set()
    for i in range(len(poly.rows)):
        if i in on_face or i in apex_tight:
            continue
        sub = tuple(v for v in face if i in poly.tight(v))
        if sub and _affine_dim(list(sub)) == k - 1:
            facets.add(sub)
    out = []
    for sub in sorted(facets):
        out.extend((apex,) + s for s in _triangulate(poly, sub, k - 1))
    return out


def polytope_volume(poly: EffConePolytope) -> Fraction:
    r = poly.dim
    total = Fraction(0)
    for simplex in _triangulate(poly, poly.vertices, r):
        v0 = simplex[0]
        total += abs(det([[a - b for a, b in zip(v, v0)] for v in simplex[1:]]))
    return total / math.factorial(r)


def alpha_constant(fd: FanData, class_map: Sequence[Sequence[int]] | None = None) -> Fraction:
    """alpha(X) = r * vol{y in Eff-dual : <-K, y> <= 1}.

    ``class_map`` overrides the Picard basis (rows = ray classes); a
    unimodular change of basis leaves the value unchanged.
    """
    cm = class_map if class_map is not None else fd.pic.class_map
    return len(cm[0]) * polytope_volume(eff_dual_polytope(cm))


# -- local densities -------------------------------------------------------------------


def _require_prime(p: int) -> None:
    if not is_prime(p):
        raise ConstantError(f"{p} is not prime")


def local_density_kappa(fd: FanData, p: int) -> Fraction:
    """#{x in (Z/p)^n : the zero set of x spans a cone} / p^n."""
    _require_prime(p)
    n = fd.n
    total = sum((p - 1) ** (n - bin(m).count("1")) for m in fd.face_masks)
    return Fraction(total, p**n)


def kappa_via_fvector(fd: FanData, p: int) -> Fraction:
    """(1 - 1/p)^r * #X(F_p) / p^d, with #X(F_p) = sum_k f_k (p-1)^(d-k)."""
    _require_prime(p)
    d = fd.d
    points = sum(f * (p - 1) ** (d - k) for k, f in enumerate(fd.f_vector))
    return Fraction(p - 1, p) ** fd.r * Fraction(points, p**d)


@lru_cache(maxsize=64)
def _support_mu(fd: FanData) -> dict[int, int]:
    faces = fd.face_masks
    out = {}
    for S in range(1 << fd.n):
        total = 0
        sub = S
        while True:
            if sub in faces:
                total += (-1) ** bin(S & ~sub).count("1")
            if sub == 0:
                break
            sub = (sub - 1) & S
        out[S] = total
    return out


def support_mu(fd: FanData, S: int) -> int:
    """mu_S: Mobius inversion of the face indicator over subsets of the support mask S."""
    return _support_mu(fd)[S]


def mobius_muX(fd: FanData, d: Sequence[int]) -> int:
    if len(d) != fd.n or any(x < 1 for x in d):
        raise ConstantError(f"need {fd.n} positive integers")
    supports: dict[int, int] = {}
    for i, x in enumerate(d):
        if x == 1:
            continue
        for p, e in factorint(x).items():
            if e > 1:
                return 0
            supports[p] = supports.get(p, 0) | 1 << i
    return math.prod(support_mu(fd, S) for S in supports.values())


def kappa_via_mobius(fd: FanData, p: int) -> Fraction:
    """sum over square-free d = (p^{e_i}) of mu_X(d) / prod(d)."""
    _require_prime(p)
    mu = _support_mu(fd)
    return sum((Fraction(v, p ** bin(S).count("1")) for S, v in mu.items() if v), Fraction(0))


def mobius_sum_over_divisors(fd: FanData, d: Sequence[int]) -> int:
    """sum_{d' | d} mu_X(d'), brute force over componentwise divisors."""
    divs = [[k for k in range(1, x + 1) if x % k == 0] for x in d]
    return sum(mobius_muX(fd, dd) for dd in itertools.product(*divs))


def height_gcd_is_one(fd: FanData, d: Sequence[int]) -> bool:
    """Whether gcd over maximal cones of d^{D_0(sigma)} equals 1."""
    return math.gcd(*(math.prod(x**a for x, a in zip(d, cd.a_vec)) for cd in fd.cones)) == 1


def alpha_zero(fd: FanData) -> int:
    """Fewest rays not contained in a common cone."""
    faces = fd.face_masks
    for k in range(2, fd.n + 1):
        for combo in itertools.combinations(range(fd.n), k):
            if sum(1 << i for i in combo) not in faces:
                return k
    raise FanError("every set of rays spans a cone; the fan is not complete")


# -- Euler products --------------------------------------------------------------------------


@dataclass(frozen=True)
class KappaEstimate:
    """prod_{p <= P_max} kappa_p times a tail factor known to lie in [tail_lo, tail_hi]."""

    product: Fraction
    tail_lo: float
    tail_hi: float
    P_max: int
    scale: Fraction = Fraction(1)

    @property
    def lo(self) -> float:
        return float(self.scale * self.product) * self.tail_lo

    @property
    def hi(self) -> float:
        return float(self.scale * self.product) * self.tail_hi

    @property
    def value(self) -> float:
        return float(self.scale * self.product)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "tail_lo": self.tail_lo,
            "tail_hi": self.tail_hi,
            "P_max": self.P_max,
            "lo": self.lo,
            "hi": self.hi,
        }


def kappa_expansion(fd: FanData) -> list[int]:
    """Integer coefficients c_j with kappa_p - 1 = sum_j c_j p^(-j)."""
    n = fd.n
    coeffs = [0] * (n + 1)
    for m in fd.face_masks:
        k = bin(m).count("1")
        # x^k (1 - x)^(n-k)
        for j in range(n - k + 1):
            coeffs[k + j] += math.comb(n - k, j) * (-1) ** j
    coeffs[0] -= 1
    if coeffs[0] or coeffs[1]:
        raise FanError("kappa_p - 1 is not O(1/p^2); fan is not complete")
    return coeffs


def kappa_tail_constant(fd: FanData) -> int:
    """C with |kappa_p - 1| <= C / p^2 for every prime p."""
    return sum(abs(c) for c in kappa_expansion(fd)[2:])


def _tail_bounds(coeffs: list[int], P_max: int) -> tuple[float, float]:
    # |kappa_p - 1| <= t_p := sum_j |c_j| p^-j, and sum_{m > P} m^-j <= 1 / ((j-1) P^(j-1));
    # since 0 < kappa_p <= 1 and log(1 - t) >= -t / (1 - t), the tail lies in [exp(-S), 1]
    t_max = sum(abs(c) / (P_max + 1) ** j for j, c in enumerate(coeffs) if j >= 2)
    if t_max >= 1:
        return 0.0, 1.0
    S = sum(abs(c) / ((j - 1) * P_max ** (j - 1)) for j, c in enumerate(coeffs) if j >= 2)
    return math.exp(-S / (1 - t_max)) * (1 - 1e-15), 1.0


def kappa_truncated(fd: FanData, P_max: int, skip: int = 1) -> KappaEstimate:
    """Exact partial Euler product over p <= P_max (omitting p | skip) with a tail interval."""
    if P_max < 2:
        raise ConstantError("P_max must be at least 2")
    prod = Fraction(1)
    for p in primes_up_to(P_max):
        if skip % p:
            prod *= local_density_kappa(fd, p)
    lo, hi = _tail_bounds(kappa_expansion(fd), P_max)
    return KappaEstimate(prod, lo, hi, P_max)


def kappa_level(fd: FanData, l: int, P_max: int = 10**4) -> KappaEstimate:
    """kappa_(l) = l^{-n} prod_{p not dividing l} kappa_p."""
    if l < 1:
        raise ConstantError("level must be positive")
    est = kappa_truncated(fd, P_max, skip=l)
    return KappaEstimate(est.product, est.tail_lo, est.tail_hi, P_max, Fraction(1, l**fd.n))


# -- Mobius growth ---------------------------------------------------------------------------------


def _prime_power_weights(fd: FanData) -> list[int]:
    """g(p^k) = sum of |mu_S| over supports of size k."""
    g = [0] * (fd.n + 1)
    for S, v in _support_mu(fd).items():
        g[bin(S).count("1")] += abs(v)
    return g


MOBIUS_CAP_FACTOR = 100


def mobius_partial_sums(fd: FanData, b: int) -> tuple[int, Fraction]:
    """(sum_{Pi(d) <= b} |mu_X(d)|, sum_{b < Pi(d) <= 100 b} |mu_X(d)| / Pi(d)).

    d = 1 is included in the first sum.  Uses multiplicativity: the weight
    of m = Pi(d) is a product over p^k || m of g(p^k).
    """
    if b < 1:
        raise ConstantError("b must be positive")
    cap = MOBIUS_CAP_FACTOR * b
    g = _prime_power_weights(fd)
    kmin = next((k for k in range(1, len(g)) if g[k]), None)
    head = 1
    tail = Fraction(0)
    if kmin is None:
        return head, tail
    primes = primes_up_to(math.isqrt(cap) if kmin >= 2 else cap)
    tail_terms: list[tuple[int, int]] = []

    def walk(start: int, m: int, w: int) -> None:
        nonlocal head
        for i in range(start, len(primes)):
            p = primes[i]
            pk = p**kmin
            if m * pk > cap:
                break
            for k in range(kmin, len(g)):
                pk = p**k
                if m * pk > cap:
                    break
                if not g[k]:
                    continue
                mm, ww = m * pk, w * g[k]
                if mm <= b:
                    head += ww
                else:
                    tail_terms.append((ww, mm))
                walk(i + 1, mm, ww)

    walk(0, 1, 1)
    for w, m in tail_terms:
        tail += Fraction(w, m)
    return head, tail


@lru_cache(maxsize=None)
def _zeta_float(s: float) -> float:
    # Euler-Maclaurin would be overkill: direct sum plus integral tail
    N = 100_000
    return sum(k**-s for k in range(1, N)) + N ** (1 - s) / (s - 1) + 0.5 * N**-s


def zeta(s: float) -> float:
    """Riemann zeta for real s > 1 (about 1e-12 accuracy for s >= 2)."""
    if s <= 1:
        raise ValueError("zeta needs s > 1")
    return _zeta_float(float(s))


def constants_report(fd: FanData, P_max: int = 10**4, per_prime_upto: int = 50) -> dict:
    kappa = kappa_truncated(fd, P_max)
    return {
        "fan": fd.name,
        "alpha": str(alpha_constant(fd)),
        "alpha0": alpha_zero(fd),
        "kappa": kappa.to_dict(),
        "per_prime": [
            {"p": p, "kappa_p": str(local_density_kappa(fd, p))} for p in primes_up_to(per_prime_upto)
        ],
    }
