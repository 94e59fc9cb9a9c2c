"""Recovery certificates and branch-vector design.

Evaluates the classical incoherence conditions (mutual coherence, cumulative
coherence, the Gram-based worst-support condition) and their multi-branch
generalizations, which gate guaranteed recovery for the tree solver.  Also
finds the smallest per-level branch count two independent ways: an exhaustive
scan over supports and an exact branch-and-bound over an equivalent binary
program.

All support scans run off a precomputed absolute Gram matrix so that
dictionary sweeps stay affordable; supports are enumerated lexicographically
under an explicit budget.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import numlin
from .dictionary import babel, coherence, matrix_of
from .errors import (
    DegenerateDenominator,
    Infeasible,
    NotEnoughCandidates,
    OIRTooLarge,
    RankDeficientSupport,
    TooLarge,
)
from .pursuit import BranchVector, PursuitConfig, d_max

DEFAULT_SUPPORT_BUDGET = 10**6
_SCAN_CHUNK = 32768


@dataclass(frozen=True)
class OIRValue:
    """Out-support to in-support energy ratio of the residual subspace.

    ``oracle`` mode means the true support was known when the ratio was
    computed (experiments); ``assumed`` marks a user-supplied estimate.
    """

    value: float
    mode: str = "oracle"

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("energy ratio cannot be negative")
        if self.mode not in ("oracle", "assumed"):
            raise ValueError("mode must be 'oracle' or 'assumed'")


@dataclass(frozen=True)
class CertificateReport:
    """One evaluated recovery condition: lhs vs threshold, strict inequality."""

    kind: str
    lhs: float
    threshold: float
    holds: bool
    support: tuple = ()
    d: int | None = None
    K: int | None = None
    oir: float | None = None


def _report(kind, lhs, threshold, **context):
    return CertificateReport(kind, float(lhs), float(threshold), bool(lhs < threshold), **context)


def _as_oir(oir):
    if isinstance(oir, OIRValue):
        return oir
    return OIRValue(float(oir), "assumed")


def _check_oir_below_one(o):
    if o.value >= 1.0:
        raise OIRTooLarge(f"energy ratio {o.value} leaves no selection margin")


def _support_tuple(C):
    return tuple(sorted({int(c) for c in C}))


def refined_columns(A, C, rtol=numlin.DEFAULT_RTOL, zero_atom_floor=1e-10):
    """Refined dictionary outside a provisional support.

    Projects every atom not in C against span(A_C) and renormalizes; atoms
    inside the span become zero columns.  Returns (Abar, indices) where
    ``indices`` maps the columns of Abar back to the original dictionary.
    """
    Amat = matrix_of(A)
    C = _support_tuple(C)
    n = Amat.shape[1]
    rest = [g for g in range(n) if g not in set(C)]
    if not rest:
        raise ValueError("the provisional support covers every column")
    if not C:
        return Amat, np.arange(n)
    Q = numlin.orthonormal_basis(Amat[:, list(C)], rtol)
    if Q.shape[1] < len(C):
        raise RankDeficientSupport("provisional support is rank deficient")
    B = Amat[:, rest] - Q @ (Q.conj().T @ Amat[:, rest])
    norms = np.linalg.norm(B, axis=0)
    safe = np.maximum(norms, zero_atom_floor)
    Abar = np.where(norms > zero_atom_floor, B / safe, 0.0)
    return Abar, np.asarray(rest)


def oir(A, Y, S_star, C, cfg=None):
    """Oracle energy ratio at a node with provisional support C inside S_star.

    The scoring subspace is the raw observation for a single snapshot and an
    orthonormal basis of the projected observations otherwise.  The numerator
    projects the out-of-support refined atoms against the span of the refined
    in-support atoms, which makes the ratio vanish exactly on noiseless data.
    """
    cfg = cfg or PursuitConfig()
    Amat = matrix_of(A)
    Ymat = numlin.as_complex_matrix(getattr(Y, "y", Y))
    C = _support_tuple(C)
    Sstar = {int(s) for s in S_star}
    if not set(C) < Sstar:
        raise ValueError("C must be a proper subset of S_star")
    missing = sorted(Sstar - set(C))
    Abar, idx = refined_columns(A, C, cfg.rank_tolerance, cfg.zero_atom_floor)
    pos = {int(g): i for i, g in enumerate(idx)}
    if Ymat.shape[1] == 1:
        U = Ymat
    else:
        R = Ymat
        if C:
            Q = numlin.orthonormal_basis(Amat[:, list(C)], cfg.rank_tolerance)
            R = Ymat - Q @ (Q.conj().T @ Ymat)
        U = numlin.orthonormal_basis(R, cfg.rank_tolerance)
    in_cols = Abar[:, [pos[g] for g in missing]]
    denominator = float(np.linalg.norm(U.conj().T @ in_cols, axis=0).max())
    if denominator <= 1e-14:
        raise DegenerateDenominator("in-support scores are numerically zero")
    out_positions = [i for i, g in enumerate(idx) if int(g) not in Sstar]
    if not out_positions:
        return OIRValue(0.0, "oracle")
    out_cols = Abar[:, out_positions]
    if np.linalg.norm(in_cols) > numlin.ABS_ZERO_FLOOR:
        P = numlin.orthonormal_basis(in_cols, cfg.rank_tolerance)
        out_cols = out_cols - P @ (P.conj().T @ out_cols)
    numerator = float(np.linalg.norm(U.conj().T @ out_cols, axis=0).max())
    return OIRValue(numerator / denominator, "oracle")


def mb_erc(A, S_star, C, d, oir_value=0.0, rtol=numlin.DEFAULT_RTOL, zero_atom_floor=1e-10):
    """Multi-branch exact recovery condition at one node.

    lhs is the d-th largest l1 norm of the refined in-support pseudo-inverse
    applied to an out-of-support refined atom; the threshold is one minus the
    energy ratio.  With an empty C, d = 1 and zero ratio this is the classic
    exact recovery condition.
    """
    o = _as_oir(oir_value)
    _check_oir_below_one(o)
    C = _support_tuple(C)
    Sstar = {int(s) for s in S_star}
    if not set(C) < Sstar:
        raise ValueError("C must be a proper subset of S_star")
    missing = sorted(Sstar - set(C))
    Abar, idx = refined_columns(A, C, rtol, zero_atom_floor)
    pos = {int(g): i for i, g in enumerate(idx)}
    AS = Abar[:, [pos[g] for g in missing]]
    sv = np.linalg.svd(AS, compute_uv=False)
    if sv[0] <= numlin.ABS_ZERO_FLOOR or sv[-1] <= rtol * sv[0]:
        raise RankDeficientSupport("refined in-support atoms are rank deficient")
    out_positions = [i for i, g in enumerate(idx) if int(g) not in Sstar]
    out_cols = Abar[:, out_positions]
    coef, *_ = np.linalg.lstsq(AS, out_cols, rcond=None)
    l1 = np.abs(coef).sum(axis=0)
    _, lhs = d_max(l1, (), d)
    return _report(
        "mb_erc",
        lhs,
        1.0 - o.value,
        support=C,
        d=int(d),
        K=len(Sstar),
        oir=o.value,
    )


def coherence_condition(A, K):
    """Mutual coherence below 1/(2K - 1) guarantees recovery of K-sparse signals."""
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    return _report("coherence", coherence(A), 1.0 / (2 * K - 1), K=K)


def cumulative_coherence_condition(A, K):
    """Cumulative coherence test: babel(K-1) + babel(K) below one."""
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    lhs = (0.0 if K == 1 else babel(A, K - 1)) + babel(A, K)
    return _report("cumulative_coherence", lhs, 1.0, K=K)


@lru_cache(maxsize=8)
def _combination_array(n, k):
    count = math.comb(n, k)
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.int64,
        count=count * k,
    )
    arr = flat.reshape(count, k)
    arr.setflags(write=False)
    return arr


def _check_support_budget(p, k, budget):
    count = math.comb(p, k)
    if count > budget:
        raise TooLarge(f"{count} supports exceed the budget of {budget}")
    return count


def _scan_chunks(Q, k):
    """Yield (colsums, in_values) per chunk of lexicographic size-k supports.

    ``colsums`` holds, per support S and atom g, the l1 correlation mass
    sum_{i in S} Q[i, g]; ``in_values`` gathers the k in-support columns.
    """
    combos = _combination_array(Q.shape[0], k)
    for lo in range(0, combos.shape[0], _SCAN_CHUNK):
        chunk = combos[lo : lo + _SCAN_CHUNK]
        colsums = Q[chunk[:, 0]].copy()
        for t in range(1, k):
            colsums += Q[chunk[:, t]]
        rows = np.arange(chunk.shape[0])
        in_values = np.stack([colsums[rows, chunk[:, t]] for t in range(k)])
        yield chunk, colsums, in_values


def _max_fixed_d(Q, k, d, gamma, budget):
    """max over supports of (in-support max + gamma * d-th largest out value)."""
    p = Q.shape[0]
    _check_support_budget(p, k, budget)
    if d < 1 or d > p - k:
        raise NotEnoughCandidates(f"d = {d} is outside 1..{p - k}")
    best = -math.inf
    for chunk, colsums, in_values in _scan_chunks(Q, k):
        in_max = in_values.max(axis=0)
        rows = np.arange(chunk.shape[0])
        out = colsums
        for t in range(k):
            out[rows, chunk[:, t]] = -math.inf
        dth = np.partition(out, p - d, axis=1)[:, p - d]
        best = max(best, float((in_max + gamma * dth).max()))
    return best


def _max_violation_count(Q, k, gamma, budget):
    """max over supports of 1 + #{out atoms g : in_max + gamma * value_g >= 2}.

    This is the smallest branch count that would restore the strict
    inequality at the worst support (and may exceed the number of available
    out-of-support atoms, in which case no branch count works).
    """
    p = Q.shape[0]
    _check_support_budget(p, k, budget)
    worst = 1
    for chunk, colsums, in_values in _scan_chunks(Q, k):
        in_max = in_values.max(axis=0)
        lhs = in_max[:, None] + gamma * colsums
        count_all = (lhs >= 2.0).sum(axis=1)
        count_in = np.zeros(chunk.shape[0], dtype=np.int64)
        rows = np.arange(chunk.shape[0])
        for t in range(k):
            count_in += lhs[rows, chunk[:, t]] >= 2.0
        worst = max(worst, 1 + int((count_all - count_in).max()))
    return worst


def _gram_for(A, C, rtol, zero_atom_floor):
    Abar, idx = refined_columns(A, C, rtol, zero_atom_floor)
    Q = np.abs(Abar.conj().T @ Abar)
    return Q, idx


def neuman_erc(A, K, nsr=0.0, budget=DEFAULT_SUPPORT_BUDGET):
    """Worst-support Gram condition (the weak exact recovery condition).

    lhs is the worst over size-K supports of the largest in-support plus the
    largest out-of-support l1 correlation mass; the threshold is 2(1 - nsr).
    """
    if nsr < 0:
        raise ValueError("nsr must be nonnegative")
    K = int(K)
    Amat = matrix_of(A)
    Q = np.abs(Amat.conj().T @ Amat)
    lhs = _max_fixed_d(Q, K, 1, 1.0, budget)
    return _report("neuman_erc", lhs, 2.0 * (1.0 - nsr), K=K, oir=float(nsr))


def mb_coherence(
    A,
    C,
    K,
    d,
    oir_value=0.0,
    budget=DEFAULT_SUPPORT_BUDGET,
    rtol=numlin.DEFAULT_RTOL,
    zero_atom_floor=1e-10,
):
    """Multi-branch coherence condition at a node with provisional support C.

    For every candidate remainder support S of size K - |C| the lhs adds the
    largest in-support l1 correlation mass to the d-th largest out-of-support
    mass scaled by 1/(1 - ratio); the condition holds when the worst support
    stays strictly below 2.  The out-of-support ranking uses atoms outside S,
    matching the single-branch specialization.
    """
    o = _as_oir(oir_value)
    _check_oir_below_one(o)
    C = _support_tuple(C)
    K = int(K)
    k = K - len(C)
    if k < 1:
        raise ValueError("need K - |C| >= 1")
    Q, _ = _gram_for(A, C, rtol, zero_atom_floor)
    gamma = 1.0 / (1.0 - o.value)
    lhs = _max_fixed_d(Q, k, int(d), gamma, budget)
    return _report("mb_coherence", lhs, 2.0, support=C, d=int(d), K=K, oir=o.value)


def smallest_d_bruteforce(
    A,
    C,
    K,
    oir_value=0.0,
    budget=DEFAULT_SUPPORT_BUDGET,
    rtol=numlin.DEFAULT_RTOL,
    zero_atom_floor=1e-10,
):
    """Least d making the multi-branch coherence condition hold, by full scan.

    Returns None when even the widest usable branch count fails.
    """
    o = _as_oir(oir_value)
    _check_oir_below_one(o)
    C = _support_tuple(C)
    K = int(K)
    k = K - len(C)
    if k < 1:
        raise ValueError("need K - |C| >= 1")
    Q, _ = _gram_for(A, C, rtol, zero_atom_floor)
    p = Q.shape[0]
    if k >= p:
        raise ValueError("no out-of-support atoms remain")
    gamma = 1.0 / (1.0 - o.value)
    d_star = _max_violation_count(Q, k, gamma, budget)
    return d_star if d_star <= p - k else None


def _mip_optimum(Q, k, gamma, node_budget):
    """Exact optimum of the binary program bounding the critical branch count.

    Searches over a distinguished in-support index j (binary vector y), the
    remaining support (binary vector s, |s| = k - 1), and counts the atoms g
    whose paired constraint value q_j^T chi_S + gamma q_g^T chi_S reaches 2
    (binary vector z, disjoint from the support).  The objective 1 + sum(z)
    is maximized by depth-first branch and bound with best-incumbent pruning.
    """
    p = Q.shape[0]
    best = 0
    visited = 0

    def leaf_count(j, u, chosen):
        vals = u[j] + gamma * u
        vals[list(chosen)] = -math.inf
        return int((vals >= 2.0).sum())

    def upper_bound(j, u, chosen, start, remaining):
        cand = [c for c in range(start, p) if c != j]
        if len(cand) < remaining:
            return -1
        sub = Q[:, cand]
        if remaining == 0:
            add = np.zeros(p)
        elif len(cand) > remaining:
            cut = len(cand) - remaining
            add = np.partition(sub, cut, axis=1)[:, cut:].sum(axis=1)
        else:
            add = sub.sum(axis=1)
        u_ub = u + add
        vals = u_ub[j] + gamma * u_ub
        vals[list(chosen)] = -math.inf
        return int((vals >= 2.0).sum())

    def dfs(j, u, chosen, start, remaining):
        nonlocal best, visited
        visited += 1
        if visited > node_budget:
            raise TooLarge(f"branch-and-bound exceeded {node_budget} nodes")
        if remaining == 0:
            best = max(best, 1 + leaf_count(j, u, chosen))
            return
        bound = upper_bound(j, u, chosen, start, remaining)
        if bound < 0 or 1 + bound <= best:
            return
        for c in range(start, p):
            if c == j:
                continue
            if p - c - (1 if j > c else 0) < remaining:
                break
            dfs(j, u + Q[:, c], chosen + (c,), c + 1, remaining - 1)

    for j in range(p):
        dfs(j, Q[:, j].copy(), (j,), 0, k - 1)
    return best


def smallest_d_mip(
    A,
    C,
    K,
    oir_value=0.0,
    node_budget=10**6,
    rtol=numlin.DEFAULT_RTOL,
    zero_atom_floor=1e-10,
):
    """Least d making the multi-branch coherence condition hold, via the
    exact binary program.  Must agree with the exhaustive scan everywhere.
    """
    o = _as_oir(oir_value)
    _check_oir_below_one(o)
    C = _support_tuple(C)
    K = int(K)
    k = K - len(C)
    if k < 1:
        raise ValueError("need K - |C| >= 1")
    Q, _ = _gram_for(A, C, rtol, zero_atom_floor)
    p = Q.shape[0]
    if k >= p:
        raise ValueError("no out-of-support atoms remain")
    gamma = 1.0 / (1.0 - o.value)
    d_star = _mip_optimum(Q, k, gamma, node_budget)
    return d_star if d_star <= p - k else None


def design_branch_vector(
    A,
    K,
    strategy="level1_uniform",
    method="bruteforce",
    budget=DEFAULT_SUPPORT_BUDGET,
    rtol=numlin.DEFAULT_RTOL,
    zero_atom_floor=1e-10,
):
    """Branch vector sized so the coherence condition holds while exploring.

    ``level1_uniform`` finds the smallest root branch count and repeats it at
    every level (valid because the condition only relaxes deeper in the
    tree); ``per_node`` recomputes the smallest count over every possible
    provisional support at each level, which is exhaustive and only for small
    problems.  Design is noiseless (zero energy ratio).
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    if method == "bruteforce":
        def solver(C):
            return smallest_d_bruteforce(A, C, K, 0.0, budget, rtol, zero_atom_floor)
    elif method == "mip":
        def solver(C):
            return smallest_d_mip(A, C, K, 0.0, 10**6, rtol, zero_atom_floor)
    else:
        raise ValueError("method must be 'bruteforce' or 'mip'")
    if K == 1:
        return BranchVector([1])
    if strategy == "level1_uniform":
        d1 = solver(())
        if d1 is None:
            raise Infeasible("no branch count satisfies the condition at the root")
        return BranchVector([d1] * (K - 1) + [1])
    if strategy != "per_node":
        raise ValueError("strategy must be 'level1_uniform' or 'per_node'")
    n = matrix_of(A).shape[1]
    work = sum(
        math.comb(n, size) * math.comb(n - size, K - size)
        for size in range(K - 1)
    )
    if work > budget:
        raise TooLarge(f"per-node design would scan {work} supports (budget {budget})")
    widths = []
    for size in range(K - 1):
        worst = 1
        for C in itertools.combinations(range(n), size):
            try:
                dC = solver(C)
            except RankDeficientSupport:
                continue  # unreachable node: its atoms are dependent
            if dC is None:
                raise Infeasible(f"no branch count works at provisional support {C}")
            worst = max(worst, dC)
        widths.append(worst)
    return BranchVector(widths + [1])
