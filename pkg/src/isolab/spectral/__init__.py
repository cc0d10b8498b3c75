"""Dirichlet eigenvalues, eigenfunctions and normal-derivative traces."""
from .eigen import (BoundaryTrace, EigenPair, eval_eigenfunction, find_eigs, ground_state,
                    indicator, normal_trace, sweep)
from .fd import fd_oracle
from .mfs import HelmholtzBasis, make_basis, mfs_indicator, mfs_refine

__all__ = ["BoundaryTrace", "EigenPair", "HelmholtzBasis", "eval_eigenfunction", "fd_oracle",
           "find_eigs", "ground_state", "indicator", "make_basis", "mfs_indicator", "mfs_refine",
           "normal_trace", "sweep"]
