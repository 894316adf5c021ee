"""Independent numpy oracle for the values frozen in the C++ unit tests.

Run: python3 tests/oracles/oracle.py
"""
import math

import numpy as np


def sinc(x):
    return 1.0 if x == 0 else math.sin(math.pi * x) / (math.pi * x)


def sinc_table(l):
    qx = 2**l / 10.0
    s = [sinc(i / qx) for i in range(2**l)]
    lo, hi = min(s), max(s)
    ya, yb = lo, hi + max(1e-9, 1e-9 * (hi - lo))
    qy = 2**l / (yb - ya)
    v = [min(max(math.floor(qy * (y - ya) + 0.5), 0), 2**l - 1) for y in s]
    return np.array(v, float), qy


def fit(p, d, kind):
    """Coefficients (ascending, in the offset variable) and max residual."""
    n = len(p)
    x = np.arange(n, dtype=float)
    if kind == "plain":
        if d == 0:
            return [(p.max() + p.min()) / 2], (p.max() - p.min()) / 2
        dd = min(d, n - 1)
        V = np.vander(x, dd + 1, increasing=True)
        c, *_ = np.linalg.lstsq(V, p, rcond=None)
        c = list(c) + [0.0] * (d - dd)
        return c, np.abs(V @ c[: dd + 1] - p).max()
    if n < 2:
        return [p[0]] + [0.0] * d, 0.0
    m = (p[-1] - p[0]) / (n - 1)
    e1 = p - (p[0] + m * x)
    if d == 1:
        return [p[0], m], np.abs(e1).max()
    w = x * (x - (n - 1))
    den = (w * w).sum()
    b2 = (e1 * w).sum() / den if den > 0 else 0.0
    return [p[0], m - b2 * (n - 1), b2], np.abs(e1 - b2 * w).max()


def bisect(v, d, thr, kind):
    leaves = []
    st = [(0, len(v))]
    while st:
        a, w = st.pop()
        c, e = fit(v[a : a + w], d, kind)
        if w == 1 or e <= thr:
            leaves.append((a, w, c))
        else:
            st += [(a + w // 2, w // 2), (a, w // 2)]
    return leaves


def widths(leaves, d, lx):
    lv = math.ceil(math.log2(max(w for _, w, _ in leaves)))
    base = max(0, math.ceil(math.log2(d + 1)) - 1)
    lki = [max(0, i * lv + math.ceil(math.log2(d + 1)) - 1) for i in range(d + 1)]
    lui = []
    for i in range(d + 1):
        m = max(abs(c[i]) for _, _, c in leaves)
        u = 0 if m < 1 else math.ceil(math.log2(m))
        while any(abs(math.floor(abs(c[i]) * 2 ** lki[i] + 0.5)) >= 2 ** (u + lki[i]) for _, _, c in leaves):
            u += 1
        lui.append(u)
    lp = lx + sum(u + k + 1 for u, k in zip(lui, lki))
    return lv, lki, lui, lp


if __name__ == "__main__":
    for l in (8, 12):
        v, qy = sinc_table(l)
        for e in (0.1, 0.05, 0.01, 0.005):
            plain = [len(bisect(v, d, e * qy, "plain")) for d in (0, 1, 2, 3)]
            cont = [len(bisect(v, d, e * qy, "cont")) for d in (1, 2)]
            print(f"segments l={l} eps={e}: plain {plain} continuous {cont}")
    v, qy = sinc_table(8)
    print("sinc8 qy", repr(qy))
    print("sinc8 first 16", list(map(int, v[:16])))
    print("sinc8 sum", int(v.sum()), "argmin", int(v.argmin()))
    print("fit_linear [0,0,3,3]", fit(np.array([0, 0, 3, 3], float), 1, "plain"))
    print("fit_poly d=2 [1,2,2,1]", fit(np.array([1, 2, 2, 1], float), 2, "plain"))
    print("fit_constant sinc8", fit(v, 0, "plain"))
    print("fit_poly d=1 sinc8[0:32]", fit(v[:32], 1, "plain"))
    print("fit_cont_quad sinc8[0:32]", fit(v[:32], 2, "cont"))
    for d in (1, 2):
        leaves = bisect(v, d, 0.1 * qy, "plain")
        print(f"widths sinc8 eps=0.1 d={d}", widths(leaves, d, 8))
