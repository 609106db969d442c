#!/usr/bin/env python3
"""Solve a sparse SDPA file (min c'x s.t. sum_i x_i F_i - F_0 psd) with cvxopt.

Prints the optimal value, including the offset recorded in a
`* objective offset` comment, and the solver status.
"""

import sys

from cvxopt import matrix, solvers, spmatrix


def read_sdpa(path):
    offset = 0.0
    rows = []
    with open(path) as f:
        for line in f:
            t = line.strip()
            if t.startswith("* objective offset"):
                offset = float(t.split()[-1])
            elif t and t[0] not in '*"':
                rows.append(t.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " "))
    m = int(rows[0].split()[0])
    nblocks = int(rows[1].split()[0])
    struct = [int(float(v)) for v in rows[2].split()][:nblocks]
    c = [float(v) for v in rows[3].split()]
    entries = []
    for r in rows[4:]:
        mat, blk, i, j, v = r.split()
        entries.append((int(mat), int(blk), int(i), int(j), float(v)))
    return m, struct, c, entries, offset


def main():
    m, struct, c, entries, offset = read_sdpa(sys.argv[1])
    # G x + s = h with s in the cone; G_i = -F_i and h = -F_0
    lp_offset = {}
    lp_size = 0
    for k, b in enumerate(struct):
        if b < 0:
            lp_offset[k + 1] = lp_size
            lp_size += -b
    gl = {}
    hl = [0.0] * lp_size
    gs = {k + 1: {} for k, b in enumerate(struct) if b > 0}
    hs = {k + 1: [0.0] * (b * b) for k, b in enumerate(struct) if b > 0}
    for mat, blk, i, j, v in entries:
        b = struct[blk - 1]
        if b < 0:
            row = lp_offset[blk] + i - 1
            if mat == 0:
                hl[row] -= v
            else:
                gl[(row, mat - 1)] = gl.get((row, mat - 1), 0.0) - v
            continue
        cells = {((i - 1) + (j - 1) * b), ((j - 1) + (i - 1) * b)}
        for cell in cells:
            if mat == 0:
                hs[blk][cell] -= v
            else:
                key = (cell, mat - 1)
                gs[blk][key] = gs[blk].get(key, 0.0) - v
    args = {}
    if lp_size:
        keys = list(gl)
        args["Gl"] = spmatrix([gl[k] for k in keys], [k[0] for k in keys], [k[1] for k in keys], (lp_size, m))
        args["hl"] = matrix(hl)
    gs_list, hs_list = [], []
    for blk in sorted(gs):
        b = struct[blk - 1]
        keys = list(gs[blk])
        gs_list.append(spmatrix([gs[blk][k] for k in keys], [k[0] for k in keys], [k[1] for k in keys], (b * b, m)))
        hs_list.append(matrix(hs[blk], (b, b)))
    if gs_list:
        args["Gs"] = gs_list
        args["hs"] = hs_list
    solvers.options["show_progress"] = False
    # tight tolerances first; degenerate problems can break the scaling
    # update near the optimum, so loosen on failure
    for tol in (1e-10, 1e-9, 1e-8):
        solvers.options["abstol"] = tol
        solvers.options["reltol"] = tol
        solvers.options["feastol"] = tol
        try:
            sol = solvers.sdp(matrix(c), **args)
        except ArithmeticError:
            continue
        if sol["status"] == "optimal":
            break
    else:
        sys.exit("cvxopt did not converge")
    print(f"status {sol['status']}")
    print(f"value {sol['primal objective'] + offset:.12f}")


if __name__ == "__main__":
    main()
