"""Brute-force evaluation of shuffle products at exact rational points.

Sums F(sigma x) over the full product of symmetric groups and divides by
the stabilizer order, where F = f(first block) g(second block) fac.  Shares
no code with the engine: inputs are Python expressions over L, Z, t1, t2.
"""
import math
import re
from fractions import Fraction
from itertools import permutations, product


def pyexpr(text):
    """'l[1,2]^2 + t1' -> 'L["1"][1]**2 + t1' (indices become 0-based)."""
    text = re.sub(r"l\[(\w+),(\d+)\]", lambda m: f'L["{m.group(1)}"][{int(m.group(2)) - 1}]', text)
    text = re.sub(r"zf\[(\w+),(\d+)\]", lambda m: f'Z["{m.group(1)}"][{int(m.group(2)) - 1}]', text)
    return text.replace("^", "**")


def _eval(text, L, Z, t1, t2):
    return eval(pyexpr(text), {"L": L, "Z": Z, "t1": t1, "t2": t2})  # noqa: S307


def kernel_value(coeffs, kernel, beta=1):
    """coeffs: list of (value, integer coefficient)."""
    if kernel == "additive":
        return sum(c * x for x, c in coeffs)
    prod_ = Fraction(1)
    for x, c in coeffs:
        prod_ *= (1 - beta * x) ** c
    return (1 - prod_) / beta


def product_value(vertices, arrows, d1, d2, f, g, point, kernel="additive"):
    """Value of f*g at ``point`` = (L, Z, t1, t2) with L, Z dicts of lists."""
    L, Z, t1, t2 = point
    (v1, w1), (v2, w2) = d1, d2
    n = dict(zip(vertices, (a + b for a, b in zip(v1, v2))))
    m = dict(zip(vertices, (a + b for a, b in zip(w1, w2))))
    a = dict(zip(vertices, v1))
    b = dict(zip(vertices, w1))

    def F(Lp, Zp):
        first_L = {x: Lp[x][: a[x]] for x in vertices}
        first_Z = {x: Zp[x][: b[x]] for x in vertices}
        second_L = {x: Lp[x][a[x]:] for x in vertices}
        second_Z = {x: Zp[x][b[x]:] for x in vertices}
        val = _eval(f, first_L, first_Z, t1, t2) * _eval(g, second_L, second_Z, t1, t2)
        K = lambda coeffs: kernel_value(coeffs, kernel)  # noqa: E731
        for x in vertices:
            for s in first_L[x]:
                for t in second_L[x]:
                    val *= K([(s, 1), (t, -1), (t1, 1), (t2, 1)]) / K([(t, 1), (s, -1)])
        for src, tgt, mh, mhs in arrows:
            for s in first_L[src]:
                for t in second_L[tgt]:
                    val *= K([(t, 1), (s, -1), (t1, mh)])
            for s in first_L[tgt]:
                for t in second_L[src]:
                    val *= K([(t, 1), (s, -1), (t2, mhs)])
        for x in vertices:
            for s in first_L[x]:
                for t in second_Z[x]:
                    val *= K([(t, 1), (s, -1), (t1, 1)])
            for s in first_Z[x]:
                for t in second_L[x]:
                    val *= K([(t, 1), (s, -1), (t2, 1)])
        return val

    blocks = [list(permutations(L[x])) for x in vertices] + [list(permutations(Z[x])) for x in vertices]
    total = Fraction(0)
    k = len(vertices)
    for choice in product(*blocks):
        Lp = {x: list(choice[i]) for i, x in enumerate(vertices)}
        Zp = {x: list(choice[k + i]) for i, x in enumerate(vertices)}
        total += F(Lp, Zp)
    stab = math.prod(math.factorial(x) for x in v1 + v2 + w1 + w2)
    return total / stab


def random_point(vertices, n, m, rng):
    """Distinct random rationals for every variable; n, m map vertex -> count."""
    used = set()

    def draw():
        while True:
            x = Fraction(int(rng.integers(-97, 98)), int(rng.integers(1, 13)))
            if x not in used:
                used.add(x)
                return x

    L = {x: [draw() for _ in range(n[x])] for x in vertices}
    Z = {x: [draw() for _ in range(m[x])] for x in vertices}
    return L, Z, draw(), draw()


def bindings(point):
    L, Z, t1, t2 = point
    out = {"t1": t1, "t2": t2}
    for x, vals in L.items():
        out.update({f"l[{x},{s}]": v for s, v in enumerate(vals, 1)})
    for x, vals in Z.items():
        out.update({f"zf[{x},{s}]": v for s, v in enumerate(vals, 1)})
    return out
