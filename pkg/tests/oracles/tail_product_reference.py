"""Reference computations for the split-ratio tail products behind the
support-tightness and domination conditions of beta-split trees.

1. cos/sin rule on ternary mid-points x: along the all-zeros path the relevant
   ratio is tan(pi/2 * x_m) with x_m = (1/2) 3^-m.  Convexity of tan on
   [0, pi/2) with tan(0)=0 gives tan(t/3) <= tan(t)/3, so the term ratios are
   certified <= 1/3 and the series sum is finite (the product stays positive).
   This script checks the ratios numerically to depth 40 and prints partial and
   bounded total sums, plus the small-angle estimate 3*pi/8.

2. homogeneous closed form (1 + 1/(2 b_m + 1))^m for the per-depth dominated-
   mass statistic: values for b_m = m (bounded by e^(1/2)), b_m = 1 (grows like
   exp(m log(4/3)), i.e. roughly e^(m/3)), b_m = m^2 (bounded).

Run:  python tail_product_reference.py
"""

import math


def cos_sin_report(depth=40):
    terms = [math.tan(0.5 * math.pi * 0.5 * 3.0**-m) for m in range(depth)]
    ratios = [terms[m + 1] / terms[m] for m in range(depth - 1)]
    print(f"max term ratio over {depth - 1} steps: {max(ratios):.12f} (<= 1/3: {max(ratios) <= 1/3})")
    partial = sum(terms)
    tail_bound = terms[-1] * (1 / 3) / (1 - 1 / 3)
    print(f"sum tan terms to depth {depth}: {partial:.12f}  certified total <= {partial + tail_bound:.12f}")
    print(f"small-angle estimate 3*pi/8 = {3 * math.pi / 8:.12f}")
    # the product of left-shares cos/(cos+sin) along the path stays positive
    prod = 1.0
    for m in range(depth):
        x = 0.5 * 3.0**-m
        c, s = math.cos(0.5 * math.pi * x), math.sin(0.5 * math.pi * x)
        prod *= c / (c + s)
    print(f"left-share product to depth {depth}: {prod:.12f} (positive)")
    # log-sum telescoping: sum log(1 + tan) equals -log(product)
    logsum = sum(math.log1p(t) for t in terms)
    print(f"sum log(1+tan) = {logsum:.12f}  -log(prod) = {-math.log(prod):.12f}")


def homogeneous_closed_form(depth=40):
    for name, f in [("b_m = m", lambda m: float(m)),
                    ("b_m = 1", lambda m: 1.0),
                    ("b_m = m^2", lambda m: float(m * m))]:
        vals = [(1.0 + 1.0 / (2.0 * f(m) + 1.0)) ** m for m in range(1, depth + 1)]
        print(f"{name:10s} sup over depth<= {depth}: {max(vals):.6f}  last: {vals[-1]:.6g}")
    print(f"e^(1/2) = {math.exp(0.5):.6f}   log(4/3) = {math.log(4/3):.6f} (~1/3)")


if __name__ == "__main__":
    cos_sin_report()
    print()
    homogeneous_closed_form()
