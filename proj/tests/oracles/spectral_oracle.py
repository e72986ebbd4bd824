"""High-precision reference spectra for random Hessian draws.

Each draw builds B = s2 nu L (I - L^2 D_h)^{-M} densely from its stencil,
R the same way on the observation grid, whitens H B H^T with the Cholesky
factor of R and solves the symmetric eigenproblem at 50 digits. The
eigenvalues of S are 1 + mu together with n - m ones.
"""

import json
import random
import sys

import mpmath as mp

mp.mp.dps = 50

GRIDS = [(64, 1), (64, 2), (60, 3)]
ORDERS = [2, 4, 8]
DRAWS = 20


def nu(M):
    return mp.mpf(2) ** (2 * M - 1) * mp.factorial(M - 1) ** 2 / mp.factorial(2 * M - 2)


def dense_cov(s2, M, lt, n):
    # lt is L/h; unit spacing in grid units.
    T = mp.zeros(n, n)
    a = mp.mpf(lt) ** 2
    for i in range(n):
        T[i, i] = 1 + 2 * a
        T[i, (i + 1) % n] = -a
        T[i, (i - 1) % n] = -a
    Ti = mp.inverse(T)
    P = mp.eye(n)
    for _ in range(M):
        P = P * Ti
    P = (P + P.T) / 2
    return mp.mpf(s2) * nu(M) * mp.mpf(lt) * P


def draw_case(rng, n, zeta):
    Mb = rng.choice(ORDERS)
    lb = rng.uniform(1.0, 8.0)
    Mo = rng.choice(ORDERS)
    lo = rng.uniform(1.0, 8.0)
    return {"n": n, "zeta": zeta, "Mb": Mb, "Ltilde_b": lb, "Mo": Mo, "Ltilde_o": lo}


def solve(case):
    n, zeta = case["n"], case["zeta"]
    m = n // zeta
    B = dense_cov(1, case["Mb"], case["Ltilde_b"], n)
    R = dense_cov(1, case["Mo"], case["Ltilde_o"], m)
    HBH = mp.matrix(m, m)
    for p in range(m):
        for q in range(m):
            HBH[p, q] = B[p * zeta, q * zeta]
    L = mp.cholesky(R)
    Li = mp.inverse(L)
    W = Li * HBH * Li.T
    W = (W + W.T) / 2
    mu = mp.eigsy(W, eigvals_only=True)
    hbh = mp.eigsy(HBH, eigvals_only=True)
    s = sorted([1 + x for x in mu] + [mp.mpf(1)] * (n - m))
    return {
        "eigenvalues_S": [mp.nstr(x, 25) for x in s],
        "eigenvalues_HBHt": [mp.nstr(x, 25) for x in sorted(hbh)],
    }


def main(path):
    rng = random.Random(20240611)
    cases = []
    for n, zeta in GRIDS:
        for _ in range(DRAWS):
            c = draw_case(rng, n, zeta)
            c.update(solve(c))
            cases.append(c)
            print(len(cases), c["Mb"], c["Mo"], file=sys.stderr, flush=True)
    with open(path, "w") as f:
        json.dump({"dps": mp.mp.dps, "cases": cases}, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
