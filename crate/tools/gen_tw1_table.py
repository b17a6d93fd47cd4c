"""Generate the embedded Tracy-Widom (beta = 1) CDF table.

F1(s) = det(I - K_s) on L^2(0, inf) with K_s(u, v) = Ai(s + (u + v) / 2) / 2,
discretised with Gauss-Legendre quadrature on a truncated interval
(Bornemann, Math. Comp. 79 (2010)).

Usage: python3 tools/gen_tw1_table.py > crates/core/data/tw1_cdf.txt
"""

import numpy as np
from scipy.special import airy

NODES = 160
X_MIN, X_MAX, STEP = -10.0, 6.0, 0.01


def tw1_cdf(s):
    length = max(14.0 - s, 14.0)
    x, w = np.polynomial.legendre.leggauss(NODES)
    u = 0.5 * length * (x + 1.0)
    w = 0.5 * length * w
    arg = s + 0.5 * (u[:, None] + u[None, :])
    kernel = 0.5 * airy(arg)[0]
    sw = np.sqrt(w)
    mat = np.eye(NODES) - sw[:, None] * kernel * sw[None, :]
    sign, logdet = np.linalg.slogdet(mat)
    return 0.0 if sign <= 0 else float(np.exp(logdet))


def main():
    count = int(round((X_MAX - X_MIN) / STEP)) + 1
    xs = X_MIN + STEP * np.arange(count)
    values = np.array([tw1_cdf(s) for s in xs])
    values = np.clip(values, 0.0, 1.0)
    values = np.maximum.accumulate(values)
    print("# Tracy-Widom beta=1 CDF; columns: x F1(x)")
    for s, f in zip(xs, values):
        print(f"{s:.2f} {f:.17e}")


if __name__ == "__main__":
    main()
