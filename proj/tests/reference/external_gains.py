"""Gain bounds of the shipped plant at sector [0, 1], solved with cvxpy.

Independent of the C++ solver; the values frozen in tests/support were
produced by this script with Clarabel (SCS agrees to about 1e-3).

    python3 tests/reference/external_gains.py [data/example_plant.json] [CLARABEL|SCS]
"""
import itertools
import json
import sys

import cvxpy as cp
import numpy as np


def load(path):
    d = json.load(open(path))
    return {k: np.array(v, float) for k, v in d.items()}


def gain(sys_, cls, a, b, solver):
    A, B1, B2, C1, C2 = (sys_[k] for k in ("A", "B1", "B2", "C1", "C2"))
    D11, D12, D21, D22 = (sys_[k] for k in ("D11", "D12", "D21", "D22"))
    nx, m, nu = A.shape[0], B1.shape[1], B2.shape[1]
    c, r = (a + b) / 2, (b - a) / 2
    P = cp.Variable((nx, nx), symmetric=True)
    g2 = cp.Variable()
    cons = [P >> 0]
    if cls == "md":
        lam = cp.Variable(m, nonneg=True)
        L = cp.diag(lam)
        M = cp.bmat([[-2 * a * b * L, (a + b) * L], [(a + b) * L, -2 * L]])
    else:
        M = cp.Variable((2 * m, 2 * m), symmetric=True)
    if cls == "mc":
        cons.append(M[m:, m:] << -1e-7 * np.eye(m))
        for v in itertools.product([a, b], repeat=m):
            X = np.vstack([np.eye(m), np.diag(v)])
            H = X.T @ M @ X
            cons.append((H + H.T) / 2 >> 0)
    if cls == "minc":
        I = np.eye(m)
        for gb in itertools.product([-1, 1], repeat=m):
            for gh in itertools.product([-1, 1], repeat=m):
                Gb, Gh = np.diag(gb), np.diag(gh)
                T = np.block([[Gb, -Gh], [c * Gb + r * I, -c * Gh - r * I]])
                S = cp.Variable((2 * m, 2 * m), symmetric=True)
                N = cp.Variable((2 * m, 2 * m), symmetric=True)
                cons += [S >> 0, N >= 0, T.T @ M @ T == S + N]
    Z = np.zeros
    AB = np.hstack([A, B1, B2])
    Y = np.hstack([C2, D21, D22])
    W = np.vstack([np.hstack([C1, D11, D12]), np.hstack([Z((m, nx)), np.eye(m), Z((m, nu))])])
    E1 = np.hstack([np.eye(nx), Z((nx, m + nu))])
    E3 = np.hstack([Z((nu, nx + m)), np.eye(nu)])
    L = AB.T @ P @ AB - E1.T @ P @ E1 - g2 * (E3.T @ E3) + Y.T @ Y + W.T @ M @ W
    cons.append((L + L.T) / 2 << -1e-7 * np.eye(nx + m + nu))
    prob = cp.Problem(cp.Minimize(g2), cons)
    prob.solve(solver=solver)
    return prob.status, float(np.sqrt(g2.value))


if __name__ == "__main__":
    path = sys.argv[1] if len(sys.argv) > 1 else "data/example_plant.json"
    solver = sys.argv[2] if len(sys.argv) > 2 else "CLARABEL"
    s = load(path)
    for cls in ("md", "mc", "minc"):
        status, g = gain(s, cls, 0.0, 1.0, solver)
        print(f"{cls} {g:.6f} {status}")
