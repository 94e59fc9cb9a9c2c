"""Independent oracles the tests check the package against.

Everything here is written the straightforward slow way on purpose: plain
loops, classical Gram-Schmidt, normal equations, definitional scans.  None of
it shares code with the package internals it verifies.
"""

import itertools

import numpy as np


def gram_schmidt(M, tol=1e-12):
    """Classical Gram-Schmidt orthonormal basis of the columns of M."""
    basis = []
    for j in range(M.shape[1]):
        v = M[:, j].astype(complex)
        for q in basis:
            v = v - q * (q.conj() @ v)
        # second pass for numerical hygiene
        for q in basis:
            v = v - q * (q.conj() @ v)
        nv = np.linalg.norm(v)
        if nv > tol:
            basis.append(v / nv)
    return np.column_stack(basis) if basis else np.zeros((M.shape[0], 0), dtype=complex)


def normal_equations_ls(A, Y):
    """Least squares through the normal equations (A^H A) X = A^H Y."""
    G = A.conj().T @ A
    return np.linalg.solve(G, A.conj().T @ Y)


def ra_ormp_reference(Y, A, K, zero_floor=1e-10):
    """Plain rank-aware ORMP: greedy chain, fresh least-squares each step.

    Scores every candidate by the subspace correlation of its projected,
    renormalized atom; ties break toward the smaller index.
    """
    Y = np.asarray(Y, dtype=complex)
    if Y.ndim == 1:
        Y = Y[:, None]
    A = np.asarray(A, dtype=complex)
    n = A.shape[1]
    chosen = []
    for _ in range(K):
        if chosen:
            AC = A[:, chosen]
            coef, *_ = np.linalg.lstsq(AC, Y, rcond=None)
            R = Y - AC @ coef
        else:
            R = Y
        if Y.shape[1] > 1:
            U, s, _ = np.linalg.svd(R, full_matrices=False)
            rank = int(np.count_nonzero(s > 1e-10 * s[0])) if s[0] > 0 else 0
            U = U[:, :rank]
        else:
            U = R
        best_g, best_score = None, -1.0
        for g in range(n):
            if g in chosen:
                continue
            v = A[:, g]
            if chosen:
                coef, *_ = np.linalg.lstsq(A[:, chosen], v[:, None], rcond=None)
                v = v - (A[:, chosen] @ coef).ravel()
            nv = np.linalg.norm(v)
            if nv <= zero_floor:
                continue
            score = np.linalg.norm(U.conj().T @ (v / nv))
            if score > best_score + 1e-15:
                best_g, best_score = g, score
        chosen.append(best_g)
    return set(chosen)


def pairwise_coherence(A):
    """Mutual coherence by explicit double loop."""
    n = A.shape[1]
    best = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                best = max(best, abs(A[:, i].conj() @ A[:, j]))
    return best


def babel_bruteforce(A, K):
    """Cumulative coherence straight from the definition: max over supports."""
    n = A.shape[1]
    best = 0.0
    for S in itertools.combinations(range(n), K):
        AS = A[:, list(S)]
        for g in range(n):
            if g in S:
                continue
            best = max(best, float(np.abs(AS.conj().T @ A[:, g]).sum()))
    return best


def classic_erc_lhs(A, S_star):
    """Classic exact-recovery-condition lhs: worst l1 norm of A_S^+ a_g."""
    S = sorted(S_star)
    AS = A[:, S]
    pinv = np.linalg.pinv(AS)
    best = 0.0
    for g in range(A.shape[1]):
        if g in S_star:
            continue
        best = max(best, float(np.abs(pinv @ A[:, g]).sum()))
    return best


def refined_atoms_reference(A, C, zero_floor=1e-10):
    """Projected and renormalized atoms outside C, by per-atom least squares."""
    n = A.shape[1]
    rest = [g for g in range(n) if g not in set(C)]
    cols = []
    for g in rest:
        v = A[:, g].astype(complex)
        if C:
            AC = A[:, sorted(C)]
            coef, *_ = np.linalg.lstsq(AC, v[:, None], rcond=None)
            v = v - (AC @ coef).ravel()
        nv = np.linalg.norm(v)
        cols.append(v / nv if nv > zero_floor else np.zeros_like(v))
    return np.column_stack(cols), rest


def worst_support_lhs(A, C, K, d, oir_value):
    """Definitional multi-branch coherence lhs: loop every support and atom."""
    Abar, rest = refined_atoms_reference(A, C)
    k = K - len(C)
    gamma = 1.0 / (1.0 - oir_value)
    worst = -np.inf
    for S in itertools.combinations(range(len(rest)), k):
        AS = Abar[:, list(S)]
        in_mass = max(float(np.abs(AS.conj().T @ Abar[:, g]).sum()) for g in S)
        out = sorted(
            (float(np.abs(AS.conj().T @ Abar[:, g]).sum()) for g in range(len(rest)) if g not in S),
            reverse=True,
        )
        worst = max(worst, in_mass + gamma * out[d - 1])
    return worst


def smallest_d_by_scanning(A, C, K, oir_value):
    """Least d with the definitional lhs strictly below 2; None if none works."""
    Abar, rest = refined_atoms_reference(A, C)
    k = K - len(C)
    for d in range(1, len(rest) - k + 1):
        if worst_support_lhs(A, C, K, d, oir_value) < 2.0:
            return d
    return None


def neuman_lhs_bruteforce(A, K):
    """Definitional worst-support Gram lhs (in-support plus out-support mass)."""
    n = A.shape[1]
    worst = -np.inf
    for S in itertools.combinations(range(n), K):
        AS = A[:, list(S)]
        in_mass = max(float(np.abs(AS.conj().T @ A[:, g]).sum()) for g in S)
        out_mass = max(float(np.abs(AS.conj().T @ A[:, g]).sum()) for g in range(n) if g not in S)
        worst = max(worst, in_mass + out_mass)
    return worst
