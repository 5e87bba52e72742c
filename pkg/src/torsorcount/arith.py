"""Elementary number theory on Python ints: primes, factoring, roots."""

from __future__ import annotations

import math
from functools import lru_cache

# Deterministic Miller-Rabin witnesses; correct for all n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_DETERMINISTIC_LIMIT = 3317044064679887385961981

TRIAL_DIVISION_LIMIT = 10**6


def primes_up_to(n: int) -> list[int]:
    """All primes p <= n (sieve of Eratosthenes)."""
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytes(len(range(p * p, n + 1, p)))
    return [i for i, flag in enumerate(sieve) if flag]


@lru_cache(maxsize=None)
def _small_primes(limit: int) -> tuple[int, ...]:
    return tuple(primes_up_to(limit))


def is_prime(n: int) -> bool:
    """Miller-Rabin with a fixed witness set.

    Deterministic below 3.3e24.  Above that a strong Lucas test is added,
    which makes it a Baillie-PSW test (no known counterexample).
    """
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return n < _MR_DETERMINISTIC_LIMIT or _strong_lucas(n)


def _strong_lucas(n: int) -> bool:
    """Strong Lucas probable-prime test with Selfridge parameters (odd n, not a square)."""
    if math.isqrt(n) ** 2 == n:
        return False
    D = 5
    while True:
        j = _jacobi(D, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -D - 2 if D > 0 else -D + 2
    P, Q = 1, (1 - D) // 4
    d, s = n + 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    inv2 = pow(2, -1, n)
    # binary ladder for U_d, V_d
    U, V, Qk = 1, P, Q % n
    for bit in bin(d)[3:]:
        U, V = U * V % n, (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = (P * U + V) * inv2 % n, (D * U + P * V) * inv2 % n
            Qk = Qk * Q % n
    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if V == 0:
            return True
    return False


def _jacobi(a: int, n: int) -> int:
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def pollard_rho(n: int, max_iter: int = 200_000) -> int | None:
    """Return a nontrivial factor of composite n, or None on failure."""
    if n % 2 == 0:
        return 2
    for c in range(1, 20):
        x = y = 2
        g = 1
        f = lambda v: (v * v + c) % n  # noqa: E731
        it = 0
        while g == 1 and it < max_iter:
            x = f(x)
            y = f(f(y))
            g = math.gcd(abs(x - y), n)
            it += 1
        if 1 < g < n:
            return g
    return None


class FactorizationIncomplete(Exception):
    """A cofactor could be neither proven prime nor split."""

    def __init__(self, partial: dict[int, int], cofactor: int):
        super().__init__(f"could not factor cofactor {cofactor}")
        self.partial = partial
        self.cofactor = cofactor


def factorint(n: int, trial_limit: int = TRIAL_DIVISION_LIMIT) -> dict[int, int]:
    """Prime factorization of |n| (n != 0) as {prime: exponent}.

    Trial division by primes up to ``trial_limit``, then Miller-Rabin and
    Pollard rho on what remains.  Raises FactorizationIncomplete if some
    cofactor resists.
    """
    if n == 0:
        raise ValueError("cannot factor 0")
    n = abs(n)
    out: dict[int, int] = {}
    for p in _small_primes(trial_limit):
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
    if n == 1:
        return out
    stack = [n]
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if m <= trial_limit * trial_limit or is_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        f = pollard_rho(m)
        if f is None:
            raise FactorizationIncomplete(out, m)
        stack.extend((f, m // f))
    return dict(sorted(out.items()))


@lru_cache(maxsize=1 << 16)
def prime_divisors(n: int) -> tuple[int, ...]:
    if n == 0:
        raise ValueError("0 has infinitely many prime divisors")
    return tuple(factorint(n))


def has_prime_factor_at_least(n: int, N: int, trial_limit: int = TRIAL_DIVISION_LIMIT) -> bool | None:
    """Whether |n| has a prime divisor p >= N.

    n == 0 counts as yes (every prime divides 0).  Returns None when the
    answer depends on a cofactor that could not be factored.
    """
    if n == 0:
        return True
    n = abs(n)
    bound = min(N, trial_limit + 1)
    for p in _small_primes(bound - 1) if bound > 2 else ():
        if p * p > n:
            break
        while n % p == 0:
            n //= p
    if n == 1:
        return False
    if N <= trial_limit + 1:
        # every prime factor below N has been removed, except possibly n itself
        return n >= N
    # all prime factors of n exceed the trial limit here
    try:
        return max(factorint(n, trial_limit=2)) >= N
    except FactorizationIncomplete as exc:
        if any(p >= N for p in exc.partial):
            return True
        if exc.cofactor < N:
            return False
        return None


def iroot(n: int, k: int) -> int:
    """Largest x >= 0 with x**k <= n (n >= 0, k >= 1)."""
    if n < 0:
        raise ValueError("negative radicand")
    if k == 1 or n < 2:
        return n
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def mobius(n: int) -> int:
    if n < 1:
        raise ValueError("mobius needs n >= 1")
    out = 1
    for e in factorint(n).values():
        if e > 1:
            return 0
        out = -out
    return out
