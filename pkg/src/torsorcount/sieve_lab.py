"""Selberg upper-bound sieve and sieve-flavoured counts over torsor points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .arith import has_prime_factor_at_least, is_prime
from .fan_core import FanData
from .polyexpr import Poly, coprimality_witness
from .torsor_points import DEFAULT_MAX_POINTS, CountQuery, enumerate_points


class SieveError(ValueError):
    pass


# -- Selberg ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SieveProblem:
    sequence: tuple[int, ...]
    primes: tuple[int, ...]
    g: Mapping[int, Fraction]
    D: Fraction
    mass: Fraction

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))
        object.__setattr__(self, "primes", tuple(sorted(set(self.primes))))
        object.__setattr__(self, "D", Fraction(self.D))
        object.__setattr__(self, "mass", Fraction(self.mass))
        g = {p: Fraction(self.g[p]) for p in self.primes}
        object.__setattr__(self, "g", g)
        if any(not is_prime(p) for p in self.primes):
            raise SieveError("sieving set must consist of primes")
        if any(not 0 < v < 1 for v in g.values()):
            raise SieveError("densities g(p) must lie strictly between 0 and 1")
        if self.D <= 1:
            raise SieveError("sieve level D must exceed 1")
        if self.mass <= 0:
            raise SieveError("mass must be positive")


@dataclass(frozen=True)
class SelbergResult:
    bound: Fraction
    J: Fraction
    remainder: Fraction
    main: Fraction

    def __float__(self) -> float:
        return float(self.bound)


def _squarefree_below(primes: Sequence[int], limit: Fraction) -> list[tuple[int, tuple[int, ...]]]:
    """(d, prime factors) for squarefree d composed of ``primes`` with d < limit."""
    out = [(1, ())]

    def walk(start, d, fs):
        for i in range(start, len(primes)):
            dd = d * primes[i]
            if dd >= limit:
                break
            out.append((dd, fs + (primes[i],)))
            walk(i + 1, dd, fs + (primes[i],))

    walk(0, 1, ())
    return out


def sifted_count(sequence: Sequence[int], primes: Sequence[int]) -> int:
    """S(A, P): members coprime to every prime in P."""
    P = math.prod(primes)
    return sum(1 for a in sequence if math.gcd(a, P) == 1)


def selberg_bound(problem: SieveProblem) -> SelbergResult:
    """S(A, P) <= mass / J(P, D) + sum_{d | Pi(P), d < D} tau_3(d) |R_d|."""
    A = problem.sequence
    if not problem.primes:
        n = Fraction(len(A))
        return SelbergResult(n, Fraction(1), Fraction(0), n)
    primes = problem.primes
    g = problem.g
    # d < sqrt(D)  <=>  d^2 < D
    J = Fraction(0)
    for d, fs in _squarefree_below(primes, Fraction(math.isqrt(math.floor(problem.D)) + 2)):
        if d * d < problem.D:
            J += math.prod((g[p] / (1 - g[p]) for p in fs), start=Fraction(1))
    remainder = Fraction(0)
    for d, fs in _squarefree_below(primes, problem.D):
        size = sum(1 for a in A if a % d == 0)
        gd = math.prod((g[p] for p in fs), start=Fraction(1))
        remainder += 3 ** len(fs) * abs(size - gd * problem.mass)
    main = problem.mass / J
    return SelbergResult(main + remainder, J, remainder, main)


# -- torsor-point sieves ------------------------------------------------------------------


@dataclass(frozen=True)
class PolyPair:
    f: Poly
    g: Poly
    witness: str = field(default="")

    @classmethod
    def make(cls, f: Poly, g: Poly) -> "PolyPair":
        w = coprimality_witness(f, g)
        if w is None:
            raise SieveError(f"polynomials {f} and {g} share a common factor")
        return cls(f, g, w)


@dataclass(frozen=True)
class GeomSieveResult:
    count: int  # gcd(f(X), g(X)) has a prime factor >= N
    small_only: int  # gcd > 1, every prime factor < N
    coprime: int  # gcd == 1
    undecided: int  # a cofactor >= N resisted factoring; maybe in ``count``

    @property
    def total(self) -> int:
        return self.count + self.small_only + self.coprime + self.undecided


def _points(fd: FanData, B: int, coprime_only: bool, max_points: int):
    for pt in enumerate_points(fd, CountQuery(B, coprime_only=coprime_only), max_points=max_points):
        yield pt.coords


def geometric_sieve_profile(
    fd: FanData,
    pair: PolyPair,
    N: int,
    B: int,
    coprime_only: bool = False,
    max_points: int = DEFAULT_MAX_POINTS,
) -> GeomSieveResult:
    if N < 2:
        raise SieveError("N must be at least 2")
    big = small = one = undecided = 0
    f, g = pair.f, pair.g
    for X in _points(fd, B, coprime_only, max_points):
        G = math.gcd(f(X), g(X))
        if G == 1:
            one += 1
            continue
        verdict = has_prime_factor_at_least(G, N)
        if verdict is None:
            undecided += 1
        elif verdict:
            big += 1
        else:
            small += 1
    return GeomSieveResult(big, small, one, undecided)


def geometric_sieve_count(
    fd: FanData, pair: PolyPair, N: int, B: int, coprime_only: bool = False, **kw
) -> int:
    """#{X : some prime p >= N divides gcd(f(X), g(X))} (undecided points excluded)."""
    return geometric_sieve_profile(fd, pair, N, B, coprime_only, **kw).count


def _filtered_count(fd, B, coprime_only, keep: Callable[[tuple], bool], max_points) -> int:
    return sum(1 for X in _points(fd, B, coprime_only, max_points) if keep(X))


def subvariety_count(fd: FanData, phi: Poly, B: int, max_points: int = DEFAULT_MAX_POINTS) -> int:
    """#{X in A(B) : phi(X) = 0}."""
    if phi.is_zero:
        raise SieveError("phi vanishes identically")
    if phi.is_constant:
        return 0
    return _filtered_count(fd, B, False, lambda X: phi(X) == 0, max_points)


def prime_section_count(fd: FanData, s: Poly, B: int, max_points: int = DEFAULT_MAX_POINTS) -> int:
    """#{X in C_0(B)^+ : |s(X)| is prime}."""
    if s.is_constant:
        return 0
    return _filtered_count(fd, B, True, lambda X: is_prime(abs(s(X))), max_points)


def sieve_curves(B: int, r: int, N: int | None = None) -> dict[str, float]:
    """Reference growth curves the harness divides counts by."""
    L = math.log(B)
    LL = math.log(L)
    out = {
        "B_logB_r_minus_2_loglogB": B * L ** max(r - 2, 0) * LL,
        "B_logB_r_minus_1": B * L ** (r - 1),
    }
    if N is not None:
        out["geom_envelope"] = B * L / (N * math.log(N)) + B * LL
    return out


def random_instance(rng, max_len: int = 1000, prime_cap: int = 50) -> SieveProblem:
    """A small random Selberg instance with g(p) = 1/p and mass = |A|."""
    small = [p for p in range(2, prime_cap) if is_prime(p)]
    primes = tuple(sorted(rng.sample(small, rng.randint(1, len(small)))))
    n = rng.randint(1, max_len)
    if rng.random() < 0.5:
        lo = rng.randint(1, 10**4)
        A = tuple(range(lo, lo + n))
    else:
        A = tuple(rng.randint(1, 10**5) for _ in range(n))
    D = Fraction(rng.randint(2, 4 * n + 2))
    return SieveProblem(A, primes, {p: Fraction(1, p) for p in primes}, D, Fraction(n))


__all__ = [
    "GeomSieveResult",
    "PolyPair",
    "SelbergResult",
    "SieveError",
    "SieveProblem",
    "geometric_sieve_count",
    "geometric_sieve_profile",
    "prime_section_count",
    "random_instance",
    "selberg_bound",
    "sieve_curves",
    "sifted_count",
    "subvariety_count",
]
