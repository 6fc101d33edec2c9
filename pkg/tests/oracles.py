"""Independent reference computations that pin expected test values.

Everything here is deliberately separate from the library's code paths:
exact rational arithmetic for the count predictive, and brute-force
enumeration over change-point configurations for the run-length joint.
"""

from fractions import Fraction
from itertools import product
from math import factorial


def compositions(total, parts):
    """All vectors of ``parts`` non-negative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in compositions(total - head, parts - 1):
            yield (head,) + rest


def exact_count_predictive(alpha, counts) -> Fraction:
    """Marginal count-vector probability as an exact rational.

    Multinomial coefficient times rising factorials of the concentrations,
    divided by the rising factorial of their total; valid for rational
    concentrations.
    """
    alpha = [Fraction(a) for a in alpha]
    counts = [int(c) for c in counts]
    s = sum(counts)
    value = Fraction(factorial(s))
    for c in counts:
        value /= factorial(c)
    for a, c in zip(alpha, counts):
        for j in range(c):
            value *= a + j
    s_alpha = sum(alpha)
    for m in range(s):
        value /= s_alpha + m
    return value


def _segment_marginals(counts_seq, alpha0):
    """seg[i][j]: exact probability of observations i..j-1 forming one segment."""
    t = len(counts_seq)
    seg = [[None] * (t + 1) for _ in range(t)]
    for i in range(t):
        alpha = [Fraction(a) for a in alpha0]
        prob = Fraction(1)
        for j in range(i, t):
            prob *= exact_count_predictive(alpha, counts_seq[j])
            alpha = [a + int(c) for a, c in zip(alpha, counts_seq[j])]
            seg[i][j + 1] = prob
    return seg


def enumerate_runlength_joint(counts_seq, alpha0, lam) -> dict[int, Fraction]:
    """p(r_T, c_{1:T}) by summing every change-point configuration exactly.

    A configuration marks, for each observation, whether it starts a new
    segment; configurations are weighted by the geometric constant-hazard
    prior h = 1/lam and each segment contributes its exact marginal.
    """
    t = len(counts_seq)
    h = Fraction(1, int(lam))
    g = 1 - h
    seg = _segment_marginals(counts_seq, alpha0)
    joint: dict[int, Fraction] = {}
    for bits in product((0, 1), repeat=t):
        prior = h ** sum(bits) * g ** (t - sum(bits))
        starts = [i for i in range(t) if bits[i] == 1]
        cut_points = [0] + [i for i in starts if i > 0] + [t]
        lik = Fraction(1)
        for a, b in zip(cut_points[:-1], cut_points[1:]):
            lik *= seg[a][b]
        last_start = max(starts, default=-1)
        r = t - 1 - last_start
        joint[r] = joint.get(r, Fraction(0)) + prior * lik
    return joint
