"""Naive reference implementations used to pin expected values.

Nothing here reuses the enumeration engine or the cone data of the
package: heights come from solving <m, n_rho> = -1 afresh with sympy, and
point sets come from filtering whole integer boxes.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import sympy


@lru_cache(maxsize=None)
def height_exponents(rays: tuple, cones: tuple) -> tuple[tuple[int, ...], ...]:
    """a_rho(sigma) = 1 + <m_sigma, n_rho> with <m_sigma, n_rho> = -1 on sigma(1)."""
    out = []
    for cone in cones:
        M = sympy.Matrix([list(rays[i]) for i in cone])
        m = M.solve(sympy.Matrix([-1] * len(cone)))
        out.append(tuple(int(1 + sum(m[k] * v for k, v in enumerate(ray))) for ray in rays))
    return tuple(out)


def naive_height(fan, X) -> int:
    exps = height_exponents(fan.rays, fan.max_cones)
    return max(abs(math.prod(x**e for x, e in zip(X, a))) for a in exps)


@lru_cache(maxsize=None)
def _primefactors(x: int) -> tuple[int, ...]:
    return tuple(sympy.primefactors(x))


def naive_integral(fan, X) -> bool:
    """Zero-set test prime by prime, with sympy factoring."""
    primes = set()
    for x in X:
        primes |= set(_primefactors(abs(x)))
    cones = [set(c) for c in fan.max_cones]
    for p in primes:
        S = {i for i, x in enumerate(X) if x % p == 0}
        if not any(S <= c for c in cones):
            return False
    return True


def literal_cone_gcd(fan, X) -> int:
    """gcd over maximal cones of the product of X_rho over rho IN the cone."""
    return math.gcd(*(math.prod(abs(X[i]) for i in c) for c in fan.max_cones))


def box_side(fan, B: int) -> int:
    """Every coordinate of a point of height <= B is at most B^(1/min positive exponent)."""
    exps = height_exponents(fan.rays, fan.max_cones)
    e = min(a for row in exps for a in row if a > 0)
    k = 1
    while (k + 1) ** e <= B:
        k += 1
    return k


def coordinate_caps(fan, B: int) -> list[int]:
    """Coordinate i of a point of height <= B is at most B^(1 / max_sigma a_i(sigma))."""
    exps = height_exponents(fan.rays, fan.max_cones)
    out = []
    for i in range(len(fan.rays)):
        e = max(a[i] for a in exps)
        k = 1
        while (k + 1) ** e <= B:
            k += 1
        out.append(k)
    return out


def naive_points(fan, B: int, coprime_only=False, congruence=None, divisibility=None):
    out = []
    for X in itertools.product(*(range(1, c + 1) for c in coordinate_caps(fan, B))):
        if naive_height(fan, X) > B:
            continue
        if congruence and any((x - r) % congruence[0] for x, r in zip(X, congruence[1])):
            continue
        if divisibility and any(x % d for x, d in zip(X, divisibility)):
            continue
        if coprime_only and not naive_integral(fan, X):
            continue
        out.append(X)
    return out


def naive_box_points(fan, B: int, cone: int, lam, coprime_only=True):
    """Points with every chart coordinate of ``cone`` in (0, lam_j]; chart via sympy inverse."""
    rays = fan.rays
    sigma = sorted(fan.max_cones[cone])  # lam_j belongs to the j-th ray of the cone by ray index
    M = sympy.Matrix([list(rays[i]) for i in sigma])
    dual = M.inv()  # columns pair with sigma's rays: <dual col j, n_sigma(i)> = delta
    fcols = [[sum(dual[k, j] * v for k, v in enumerate(ray)) for ray in rays] for j in range(len(sigma))]
    out = []
    for X in naive_points(fan, B, coprime_only):
        z = [math.prod(Fraction(x) ** int(f) for x, f in zip(X, col)) for col in fcols]
        if all(zj <= l for zj, l in zip(z, lam)):
            out.append(X)
    return out


def naive_eff_monomials(fan):
    """E_sigma(j) exponent vectors: D_{sigma(1)_j} - F_sigma(j), from scratch."""
    rays = fan.rays
    out = []
    for sigma in fan.max_cones:
        M = sympy.Matrix([list(rays[i]) for i in sigma])
        dual = M.inv()
        for j, rho_j in enumerate(sigma):
            F = [int(sum(dual[k, j] * v for k, v in enumerate(ray))) for ray in rays]
            E = [int(i == rho_j) - F[i] for i in range(len(rays))]
            out.append(E)
    return out


def naive_flat_complement(fan, B: int, A: float) -> int:
    T = math.log(B) ** A
    Es = naive_eff_monomials(fan)
    bad = 0
    for X in naive_points(fan, B):
        if any(float(math.prod(Fraction(x) ** e for x, e in zip(X, E))) < T for E in Es):
            bad += 1
    return bad


def mertens_coprime_square(N: int) -> int:
    """#{(a, b) in [1, N]^2 : gcd(a, b) = 1} = sum_k mu(k) floor(N/k)^2."""
    return sum(int(sympy.mobius(k)) * (N // k) ** 2 for k in range(1, N + 1))


def faces(fan):
    cones = [set(c) for c in fan.max_cones]
    n = len(fan.rays)
    return [S for k in range(n + 1) for S in itertools.combinations(range(n), k) if any(set(S) <= c for c in cones)]


def naive_kappa(fan, p: int) -> Fraction:
    """Direct count of (Z/p)^n points whose zero set spans a cone."""
    n = len(fan.rays)
    cones = [set(c) for c in fan.max_cones]
    good = sum(
        1
        for x in itertools.product(range(p), repeat=n)
        if any({i for i, v in enumerate(x) if v == 0} <= c for c in cones)
    )
    return Fraction(good, p**n)


def numpy_box_points(fan, B: int) -> tuple[set[tuple[int, ...]], set[tuple[int, ...]]]:
    """Vectorised box filter over prod_i [1, cap_i]: (A(B), coprime part of A(B)).

    Integrality uses the complement form: gcd over cones of the product of
    the coordinates outside the cone equals 1.
    """
    import numpy as np

    exps = height_exponents(fan.rays, fan.max_cones)
    caps = coordinate_caps(fan, B)
    n = len(caps)
    grids = np.meshgrid(*(np.arange(1, c + 1, dtype=np.int64) for c in caps[1:]), indexing="ij")
    rest = np.stack([g.ravel() for g in grids])
    everything: set[tuple[int, ...]] = set()
    coprime: set[tuple[int, ...]] = set()
    for x0 in range(1, caps[0] + 1):
        X = np.vstack([np.full(rest.shape[1], x0, dtype=np.int64), rest])
        H = np.zeros(rest.shape[1], dtype=np.int64)
        for a in exps:
            mono = np.ones(rest.shape[1], dtype=np.int64)
            for i, e in enumerate(a):
                if e:
                    mono *= X[i] ** e
            H = np.maximum(H, mono)
        keep = H <= B
        Xk = X[:, keep]
        g = np.zeros(Xk.shape[1], dtype=np.int64)
        for cone in fan.max_cones:
            prod = np.ones(Xk.shape[1], dtype=np.int64)
            for i in range(n):
                if i not in cone:
                    prod *= Xk[i]
            g = np.gcd(g, prod)
        for col, unit in zip(Xk.T.tolist(), (g == 1).tolist()):
            t = tuple(col)
            everything.add(t)
            if unit:
                coprime.add(t)
    return everything, coprime


# alpha closed forms: for r = 1, int_0^oo e^{-n y} dy = 1/n; for r = 2 the
# integral of e^{-<-K, y>} over a simplicial 2-d cone is elementary.
ALPHA_ORACLE = {"p1": Fraction(1, 2), "p2": Fraction(1, 3), "p3": Fraction(1, 4), "p1xp1": Fraction(1, 4), "f1": Fraction(1, 6)}


def cone_integral_2d(cone_gens, anti) -> Fraction:
    """int over cone(u, v) of e^{-<anti, y>} dy = |det(u, v)| / (<anti,u> <anti,v>)."""
    u, v = cone_gens
    au = sum(a * x for a, x in zip(anti, u))
    av = sum(a * x for a, x in zip(anti, v))
    return Fraction(abs(u[0] * v[1] - u[1] * v[0]), au * av)


def dual_cone_gens_2d(classes):
    """Extreme rays of {y : <c, y> >= 0 for all classes c} in R^2."""
    cands = []
    for c in classes:
        for y in ((-c[1], c[0]), (c[1], -c[0])):
            if all(k[0] * y[0] + k[1] * y[1] >= 0 for k in classes):
                g = math.gcd(*y)
                cands.append((y[0] // g, y[1] // g))
    return sorted(set(cands))


def alpha_closed_form(classes) -> Fraction:
    """alpha = (1/(r-1)!) int_{Eff dual} e^{-<-K, y>} dy for Picard rank 1 or 2."""
    r = len(classes[0])
    anti = [sum(c[k] for c in classes) for k in range(r)]
    if r == 1:
        return Fraction(1, abs(anti[0]))
    if r == 2:
        gens = dual_cone_gens_2d(classes)
        if len(gens) != 2:
            raise ValueError("effective cone dual is not a 2-d simplicial cone")
        return cone_integral_2d(gens, anti)
    raise ValueError("closed form only for Picard rank 1 or 2")
