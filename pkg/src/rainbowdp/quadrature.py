"""Adaptive Simpson quadrature."""

from __future__ import annotations

from typing import Callable


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, abs_tol: float = 1e-12,
                     rel_tol: float = 0.0, max_depth: int = 48) -> float:
    """Integrate ``f`` over [a, b] by adaptive Simpson with Richardson correction.

    An interval is accepted when |S_left + S_right - S_whole| <= 15 * tol,
    with the tolerance halved at every split.  ``rel_tol`` is applied to a
    coarse first estimate of the integral and the looser of the two
    tolerances wins.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = max(abs_tol, rel_tol * abs(whole))

    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return sign * total
