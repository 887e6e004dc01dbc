"""
Brute-force oracles module.
This module evaluates the HSIC U-statistic by explicit enumeration of index
tuples. It is exponentially slower than the estimators and only meant to check
them on small samples.
"""
from itertools import islice, permutations

import numpy as np

from app.errors import SampleSizeError
from app.hsic.estimators import check_pair
from app.kernels.gram import GramMatrix

MAX_M_HSIC = 40
MAX_M_H_VECTOR = 30
CHUNK_ROWS = 100_000

_ORDERINGS = np.array(list(permutations(range(4))))


def u_kernel(k: np.ndarray, l: np.ndarray, tuples: np.ndarray) -> np.ndarray:
    """
    Symmetrized U-statistic kernel h_ijqr for each row (i, j, q, r) of ``tuples``.

    h = 1/24 sum over the 24 orderings (s, t, u, v) of k_st (l_st + l_uv - 2 l_su).
    """
    h = np.zeros(len(tuples))
    for ordering in _ORDERINGS:
        s, t, u, v = (tuples[:, position] for position in ordering)
        h += k[s, t] * (l[s, t] + l[u, v] - 2.0 * l[s, u])
    return h / 24.0


def _chunks(iterator, size=CHUNK_ROWS):
    while True:
        block = list(islice(iterator, size))
        if not block:
            return
        yield np.array(block)


def hsic_bruteforce(kt: GramMatrix, lt: GramMatrix) -> float:
    """
    Average of h over all ordered 4-tuples of distinct indices.

    Raises:
        SampleSizeError: If m is outside [4, 40]
    """
    m = check_pair(kt, lt)
    if m > MAX_M_HSIC:
        raise SampleSizeError(f"brute-force HSIC is limited to m <= {MAX_M_HSIC}, got m={m}")
    total = 0.0
    count = 0
    for block in _chunks(permutations(range(m), 4)):
        total += u_kernel(kt.values, lt.values, block).sum()
        count += len(block)
    return total / count


def h_vector_bruteforce(kt: GramMatrix, lt: GramMatrix) -> np.ndarray:
    """
    Entry i is the sum of h_ijqr over ordered 3-tuples (j, q, r) of distinct
    indices different from i.

    Raises:
        SampleSizeError: If m is outside [4, 30]
    """
    m = check_pair(kt, lt)
    if m > MAX_M_H_VECTOR:
        raise SampleSizeError(f"brute-force h-vector is limited to m <= {MAX_M_H_VECTOR}, got m={m}")
    sums = np.zeros(m)
    for i in range(m):
        others = [j for j in range(m) if j != i]
        for block in _chunks(permutations(others, 3)):
            tuples = np.column_stack([np.full(len(block), i), block])
            sums[i] += u_kernel(kt.values, lt.values, tuples).sum()
    return sums
