"""Gauss-Legendre quadrature and Stieltjes integration against a quantile function.

Integrals against the left-continuous integrator F^{-1} use the half-open
convention: the range [a, b) includes an atom sitting exactly at a and
excludes one at b.  Absolutely continuous parts are integrated as
g(u) * quantile_density(u) du; atoms of F^{-1} contribute g(u_j) * jump_j.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import CapabilityError, DomainError, NumericError

Integrand = Callable[[np.ndarray], np.ndarray]

#: Interior band kept clear of an endpoint where the quantile is unbounded.
SAFETY_MARGIN = 1e-6


@lru_cache(maxsize=None)
def _gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def fixed_gl(f: Integrand, a: float, b: float, order: int = 10,
             breakpoints: tuple[float, ...] = ()) -> float:
    """Fixed-order Gauss-Legendre estimate of the integral of f over [a, b].

    Exact for polynomials of degree <= 2*order - 1 on each piece; pieces are
    split at any breakpoints strictly inside (a, b) so that kinks never sit
    inside a panel.
    """
    if a == b:
        return 0.0
    x, w = _gl_rule(order)
    inner = [p for p in breakpoints if a < p < b]
    pts = [a] + sorted(inner) + [b]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        vals = np.asarray(f(mid + half * x), dtype=float)
        total += half * float(np.dot(w, vals))
    return total


def adaptive_gl(f: Integrand, a: float, b: float, tol: float = 1e-10,
                order: int = 10, max_depth: int = 60, max_panels: int = 200_000,
                breakpoints: tuple[float, ...] = ()) -> float:
    """Adaptive composite Gauss-Legendre integral of f over [a, b], a <= b.

    The local error is estimated by comparing one panel against its two
    halves; panels are bisected until the estimate drops below the (absolute)
    tolerance, which is split evenly between halves.  A panel budget turns
    pathological integrands into an error instead of unbounded work.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"integration limits must be finite, got [{a}, {b}]")
    if a > b:
        raise DomainError(f"integration limits out of order: a={a} > b={b}")
    if a == b:
        return 0.0
    budget = [max_panels]

    def panel(lo: float, hi: float) -> float:
        budget[0] -= 1
        if budget[0] < 0:
            raise NumericError(
                f"quadrature exceeded its panel budget on [{a}, {b}] at tolerance {tol:g}")
        val = fixed_gl(f, lo, hi, order, breakpoints)
        if not math.isfinite(val):
            raise NumericError(f"non-finite integrand on [{lo}, {hi}]")
        return val

    def refine(lo: float, hi: float, whole: float, tol: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        left = panel(lo, mid)
        right = panel(mid, hi)
        better = left + right
        if abs(better - whole) <= tol or (hi - lo) <= 64.0 * math.ulp(max(abs(lo), abs(hi), 1.0)):
            return better
        if depth <= 0:
            raise NumericError(
                f"quadrature failed to reach tolerance {tol:g} on [{lo}, {hi}]")
        half_tol = 0.5 * tol
        return (refine(lo, mid, left, half_tol, depth - 1)
                + refine(mid, hi, right, half_tol, depth - 1))

    return refine(a, b, panel(a, b), tol, max_depth)


def signed_adaptive(f: Integrand, a: float, b: float, tol: float = 1e-10,
                    breakpoints: tuple[float, ...] = ()) -> float:
    """Oriented integral: equals -integral over [b, a] when a > b."""
    if a <= b:
        return adaptive_gl(f, a, b, tol, breakpoints=breakpoints)
    return -adaptive_gl(f, b, a, tol, breakpoints=breakpoints)


def _check_stieltjes_range(model, a: float, b: float) -> None:
    if not (0.0 <= a < b <= 1.0):
        raise DomainError(f"need 0 <= a < b <= 1, got a={a}, b={b}")
    if getattr(model, "unbounded_low", False) and a < SAFETY_MARGIN:
        raise DomainError(
            f"a={a} too close to 0 for model '{model.name}' with unbounded lower quantile")
    if getattr(model, "unbounded_high", False) and b > 1.0 - SAFETY_MARGIN:
        raise DomainError(
            f"b={b} too close to 1 for model '{model.name}' with unbounded upper quantile")


def _scalar(g: Integrand, u: float) -> float:
    return float(np.asarray(g(np.asarray([u]))).reshape(-1)[0])


def stieltjes_1d(g: Integrand, model, a: float, b: float, tol: float = 1e-10) -> float:
    """Integral of g over [a, b) against dF^{-1} for the given model."""
    _check_stieltjes_range(model, a, b)
    dens = model.quantile_density
    atoms = model.atoms
    if dens is None and atoms is None:
        raise CapabilityError(
            f"model '{model.name}' supplies neither a quantile density nor a jump list")
    total = 0.0
    if dens is not None:
        total = adaptive_gl(lambda u: np.asarray(g(u), dtype=float) * np.asarray(dens(u), dtype=float),
                            a, b, tol)
    if atoms:
        total += math.fsum(_scalar(g, uj) * wj for uj, wj in atoms if a <= uj < b)
    return total


def stieltjes_2d_kernel(J: Integrand, model, a: float, b: float, tol: float = 1e-8) -> float:
    """Double integral of J(u) J(v) (min(u,v) - u v) over [a, b)^2 against dF^{-1} x dF^{-1}.

    The kernel is symmetric, so the absolutely continuous part is computed as
    twice the lower triangle (u < v, where the kernel equals u(1-v)); the
    diagonal carries no mass.  Atom cross terms and the atom-atom diagonal are
    added explicitly.  The iterated inner integral runs at one tenth of the
    outer tolerance.
    """
    _check_stieltjes_range(model, a, b)
    dens = model.quantile_density
    atoms = model.atoms
    if dens is None and atoms is None:
        raise CapabilityError(
            f"model '{model.name}' supplies neither a quantile density nor a jump list")
    inner_tol = tol / 10.0
    total = 0.0
    if dens is not None:
        def f_lower(u):
            return np.asarray(J(u), dtype=float) * np.asarray(dens(u), dtype=float) * np.asarray(u)

        def f_upper(u):
            return np.asarray(J(u), dtype=float) * np.asarray(dens(u), dtype=float) * (1.0 - np.asarray(u))

        def outer(v_arr):
            v_arr = np.atleast_1d(np.asarray(v_arr, dtype=float))
            inner = np.array([adaptive_gl(f_lower, a, v, inner_tol) if v > a else 0.0
                              for v in v_arr])
            return np.asarray(J(v_arr), dtype=float) * np.asarray(dens(v_arr), dtype=float) \
                * (1.0 - v_arr) * inner

        total += 2.0 * adaptive_gl(outer, a, b, tol)

    live_atoms = [(uj, wj) for uj, wj in (atoms or ()) if a <= uj < b]
    if live_atoms and dens is not None:
        for uj, wj in live_atoms:
            low = adaptive_gl(f_lower, a, uj, inner_tol) * (1.0 - uj) if uj > a else 0.0
            high = uj * adaptive_gl(f_upper, uj, b, inner_tol) if uj < b else 0.0
            total += 2.0 * wj * _scalar(J, uj) * (low + high)
    if live_atoms:
        for uj, wj in live_atoms:
            for ul, wl in live_atoms:
                total += wj * wl * _scalar(J, uj) * _scalar(J, ul) * (min(uj, ul) - uj * ul)
    return total
