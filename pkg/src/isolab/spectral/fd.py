"""Five-point finite-difference oracle on a masked uniform grid."""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from ..errors import GridTooCoarse
from ..geometry import as_boundary

MIN_NODES = 1000


def fd_oracle(domain, h, n_eigs=4):
    """Lowest n_eigs Dirichlet eigenvalues.  Grid points outside the domain
    are deleted (staircase boundary), so the error is O(h)."""
    bd = as_boundary(domain)
    lo, hi = bd.bbox
    half = 0.5 * float(np.max(hi - lo))
    if not 0 < h <= half / 50 * (1 + 1e-12):
        raise GridTooCoarse(f"grid spacing h={h} must be <= {half / 50:g}")
    nx = int(np.floor((hi[0] - lo[0]) / h)) + 1
    ny = int(np.floor((hi[1] - lo[1]) / h)) + 1
    xs = lo[0] + h * np.arange(nx)
    ys = lo[1] + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = bd.contains(np.c_[X.ravel(), Y.ravel()]).reshape(nx, ny)
    n = int(inside.sum())
    if n < MIN_NODES:
        raise GridTooCoarse(f"only {n} interior nodes (need {MIN_NODES})")
    idx = -np.ones((nx, ny), dtype=np.int64)
    idx[inside] = np.arange(n)
    I, J = np.nonzero(inside)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 4.0)]
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        I2, J2 = I + di, J + dj
        ok = (I2 >= 0) & (I2 < nx) & (J2 >= 0) & (J2 < ny)
        nb = np.full(n, -1)
        nb[ok] = idx[I2[ok], J2[ok]]
        m = nb >= 0
        rows.append(np.arange(n)[m])
        cols.append(nb[m])
        vals.append(np.full(m.sum(), -1.0))
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)) / h ** 2
    # fixed start vector: ARPACK's own random start drifts between calls
    w = eigsh(A, k=n_eigs, sigma=0.0, which="LM", v0=np.ones(n), return_eigenvectors=False)
    return sorted(float(v) for v in w)
