"""Solves a cone program written by `qcgain analyze --dump-program` with cvxpy.

    python3 tests/reference/solve_dump.py PROGRAM.txt [CLARABEL|SCS]

Prints the optimal objective, which for analysis programs is gamma^2.
"""
import sys

import cvxpy as cp
import numpy as np
import scipy.sparse as sp


def read(path):
    blocks, c, b, rows, cols, vals = [], {}, {}, [], [], []
    with open(path) as f:
        header = f.readline().strip()
        if header != "# qcgain cone program v1":
            raise SystemExit(f"{path}: unexpected header {header!r}")
        _, nrows, _, nvars, _, _ = f.readline().split()
        nrows, nvars = int(nrows), int(nvars)
        for line in f:
            tok = line.split()
            if tok[0] == "block":
                blocks.append((tok[2], int(tok[3]), int(tok[4]), int(tok[5])))
            elif tok[0] == "c":
                c[int(tok[1])] = float(tok[2])
            elif tok[0] == "b":
                b[int(tok[1])] = float(tok[2])
            elif tok[0] == "A":
                rows.append(int(tok[1]))
                cols.append(int(tok[2]))
                vals.append(float(tok[3]))
    cvec = np.zeros(nvars)
    for j, v in c.items():
        cvec[j] = v
    bvec = np.zeros(nrows)
    for i, v in b.items():
        bvec[i] = v
    A = sp.csr_matrix((vals, (rows, cols)), shape=(nrows, nvars))
    return blocks, cvec, A, bvec


def main():
    path = sys.argv[1]
    solver = sys.argv[2] if len(sys.argv) > 2 else "CLARABEL"
    blocks, c, A, b = read(path)
    x = cp.Variable(len(c))
    cons = [A @ x == b]
    for kind, order, offset, length in blocks:
        part = x[offset:offset + length]
        if kind == "nonneg":
            cons.append(part >= 0)
        elif kind == "psd":
            X = cp.Variable((order, order), symmetric=True)
            cons.append(X >> 0)
            idx = offset
            for i in range(order):
                cons.append(x[idx] == X[i, i])
                idx += 1
                for j in range(i + 1, order):
                    cons.append(x[idx] == np.sqrt(2) * X[i, j])
                    idx += 1
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver=solver)
    print(f"{prob.value:.9g} {prob.status}")


if __name__ == "__main__":
    main()
