"""Exact rational linear feasibility via a phase-one simplex with Bland's rule."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

_MAX_PIVOTS = 100_000


def solve_feasibility(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """Find x >= 0 with a @ x == b, exactly, or return None.

    Phase-one simplex over Fractions: one artificial variable per row,
    minimize their sum. Bland's rule (smallest eligible index for both the
    entering column and the leaving basic variable) guarantees termination.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    zero, one = Fraction(0), Fraction(1)

    tab: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in a[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        row.extend(zero for _ in range(m))
        row.append(rhs)
        row[n + i] = one
        tab.append(row)
    basis = list(range(n, n + m))

    # Reduced costs for min(sum of artificials): -column sums on the original
    # variables, zero on the (basic) artificials.
    red = [-sum(tab[i][j] for i in range(m)) for j in range(n)]
    red.extend(zero for _ in range(m))

    for _ in range(_MAX_PIVOTS):
        enter = next((j for j in range(n + m) if red[j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            coeff = tab[i][enter]
            if coeff > 0:
                ratio = tab[i][-1] / coeff
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:  # phase-one objective is bounded; defensive only
            raise ArithmeticError("phase-one column without positive entries")
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        lrow = tab[leave]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [vi - f * vl for vi, vl in zip(tab[i], lrow)]
        f = red[enter]
        if f != 0:
            red = [rj - f * vl for rj, vl in zip(red, lrow[:-1])]
        basis[leave] = enter
    else:
        raise ArithmeticError("pivot budget exhausted")

    infeasibility = sum((tab[i][-1] for i in range(m) if basis[i] >= n), zero)
    if infeasibility != 0:
        return None
    x = [zero] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][-1]
    return x
