"""Multi-branch matching pursuit and its single-branch degenerations.

The solver explores a tree of provisional supports: each node at level i
spawns d_i children tagged with the d_i best-scoring candidate atoms, and the
leaf support with the smallest projection residual wins.  With a branch
vector of all ones and both refinements enabled this is exactly rank-aware
ORMP; switching the refinements off yields RA-OMP, ORMP and SOMP/OMP style
selection.

Index convention: columns are 0-based everywhere.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import numlin
from .dictionary import matrix_of
from .errors import InfiniteMargin, NotEnoughCandidates, RankDeficientSupport, TooLarge

DEFAULT_SUBSET_BUDGET = 10**6


class BranchVector(tuple):
    """Per-level child counts [d_1, ..., d_K]; the last level always gets one branch.

    A wider final level could only revisit supports that cannot improve the
    objective, so d_K = 1 is enforced at construction.
    """

    def __new__(cls, widths):
        w = tuple(int(x) for x in widths)
        if not w:
            raise ValueError("branch vector must be nonempty")
        if any(x < 1 for x in w):
            raise ValueError("branch widths must be positive integers")
        if w[-1] != 1:
            raise ValueError("the final level takes exactly one branch (d_K = 1)")
        return super().__new__(cls, w)

    @classmethod
    def from_string(cls, text):
        """Parse '2,2,2,2,1' (surrounding brackets tolerated)."""
        body = text.strip().strip("[]")
        return cls(int(tok) for tok in body.split(",") if tok.strip())

    def __repr__(self):
        return f"BranchVector({list(self)})"


@dataclass(frozen=True)
class PursuitConfig:
    """Refinement switches and numerical floors for the tree solver."""

    dictionary_refinement: bool = True
    subspace_refinement: bool = True
    rank_tolerance: float = 1e-10
    zero_atom_floor: float = 1e-10

    def __post_init__(self):
        if self.rank_tolerance <= 0 or self.zero_atom_floor <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(eq=False)
class NodeState:
    """One tree node: committed indices, forbidden indices, cached residual.

    ``basis`` is an orthonormal basis of span(A_C) grown one column per level;
    ``residual`` is Y minus its projection onto that span.
    """

    support: tuple
    excluded: frozenset
    basis: np.ndarray
    residual: np.ndarray

    @property
    def level(self):
        return len(self.support) + 1


@dataclass(eq=False)
class RecoveryResult:
    """Winning support with its least-squares coefficients and diagnostics."""

    support: tuple
    coefficients: np.ndarray
    residual_norm: float
    nodes_expanded: int
    winning_leaf_path: tuple = ()


def node_count(d):
    """Nodes in the first K levels of the tree: 1 + sum_i prod_{j<i} d_j."""
    w = BranchVector(d)
    total, width = 1, 1
    for di in w[:-1]:
        width *= di
        total += width
    return total


def d_max(values, excluded, d):
    """Index and value of the d-th largest entry outside an exclusion set.

    Ties break toward the smaller index.  Raises NotEnoughCandidates when
    fewer than d entries survive the exclusion.
    """
    vals = np.asarray(values, dtype=float).ravel()
    excl = {int(g) for g in excluded}
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1")
    candidates = [(i, float(v)) for i, v in enumerate(vals) if i not in excl]
    if len(candidates) < d:
        raise NotEnoughCandidates(f"need {d} candidates, only {len(candidates)} available")
    candidates.sort(key=lambda t: (-t[1], t[0]))
    return candidates[d - 1]


def refine_atom(A, C, g, zero_atom_floor=1e-10, rtol=numlin.DEFAULT_RTOL):
    """Atom g projected against the span of A_C and renormalized.

    Returns the zero vector when the projected atom falls below the floor
    (the atom lies in the span of the provisional support).
    """
    A = matrix_of(A)
    C = [int(c) for c in C]
    g = int(g)
    if g in C:
        raise ValueError("g must lie outside the provisional support")
    column = A[:, [g]]
    if C:
        column = numlin.project_out(A, C, column, rtol)
    v = column.ravel()
    nv = np.linalg.norm(v)
    if nv <= zero_atom_floor:
        return np.zeros_like(v)
    return v / nv


def _observation_matrix(Y):
    """Unwrap harness observation objects and coerce to a 2-d complex array."""
    Y = getattr(Y, "y", Y)
    return numlin.as_complex_matrix(Y)


def _snapshot_compression(Y):
    """Square-root factor B (m x m) with B B^H = Y Y^H, via QR of Y^H.

    Used when there are more snapshots than measurements: the projection
    objective depends on Y only through Y Y^H, so any square root substitutes.
    """
    R = np.linalg.qr(Y.conj().T, mode="r")
    return R.conj().T


def _candidate_scores(node, A, cfg):
    """Projected atoms, their norms, and the selection score per atom."""
    Q = node.basis
    if Q.shape[1]:
        projected = A - Q @ (Q.conj().T @ A)
    else:
        projected = A
    norms = np.linalg.norm(projected, axis=0)
    R = node.residual
    if cfg.subspace_refinement and R.shape[1] > 1:
        if np.linalg.norm(R) <= numlin.ABS_ZERO_FLOOR:
            # exhausted residual: every score vanishes, selection falls back
            # to the index tie-break among nonzero atoms
            return np.zeros(A.shape[1]), projected, norms
        U = numlin.orthonormal_basis(R, cfg.rank_tolerance)
    else:
        U = R
    raw = np.linalg.norm(U.conj().T @ projected, axis=0)
    if cfg.dictionary_refinement:
        safe = np.maximum(norms, cfg.zero_atom_floor)
        scores = np.where(norms > cfg.zero_atom_floor, raw / safe, 0.0)
    else:
        scores = raw
    return scores, projected, norms


class _TreeRun:
    """Depth-first expansion of the pursuit tree with incumbent tracking."""

    def __init__(self, Y, A, widths, cfg):
        self.A = A
        self.widths = widths
        self.cfg = cfg
        self.K = len(widths)
        self.nodes = 1  # the root
        self.best_support = None
        self.best_objective = math.inf
        self.leaves = []
        m = A.shape[0]
        root = NodeState((), frozenset(), np.zeros((m, 0), dtype=complex), Y)
        self._expand(root)

    def _expand(self, node):
        level = len(node.support)  # picks made so far; tree level is this + 1
        width = self.widths[level]
        scores, projected, norms = _candidate_scores(node, self.A, self.cfg)
        eligible = np.ones(self.A.shape[1], dtype=bool)
        if node.excluded:
            eligible[list(node.excluded)] = False
        eligible &= norms > self.cfg.zero_atom_floor
        picks = []
        for _ in range(width):
            if not eligible.any():
                raise NotEnoughCandidates(
                    f"level {level + 1} needs {width} candidates; "
                    f"only {len(picks)} usable atoms remain"
                )
            masked = np.where(eligible, scores, -1.0)
            g = int(np.argmax(masked))
            picks.append(g)
            eligible[g] = False
        children = []
        for j, g in enumerate(picks):
            v = projected[:, g]
            if node.basis.shape[1]:
                # second orthogonalization pass keeps the growing basis clean
                v = v - node.basis @ (node.basis.conj().T @ v)
            q = (v / np.linalg.norm(v))[:, None]
            basis = np.hstack([node.basis, q])
            residual = node.residual - q @ (q.conj().T @ node.residual)
            child = NodeState(
                node.support + (g,),
                node.excluded | frozenset(picks[: j + 1]),
                basis,
                residual,
            )
            self.nodes += 1
            if len(child.support) == self.K:
                objective = float(np.linalg.norm(child.residual))
                self.leaves.append((child.support, objective))
                if objective < self.best_objective:
                    self.best_objective = objective
                    self.best_support = child.support
            else:
                children.append(child)
        for child in children:
            self._expand(child)


def _iter_leaves(Y, A, d, cfg=None):
    """All (ordered support, objective) leaves of the tree, in visit order."""
    cfg = cfg or PursuitConfig()
    A = matrix_of(A)
    Y = _observation_matrix(Y)
    if Y.shape[1] > Y.shape[0]:
        Y = _snapshot_compression(Y)
    return _TreeRun(Y, A, BranchVector(d), cfg).leaves


def mbmp(Y, A, d, cfg=None):
    """Multi-branch matching pursuit.

    Parameters
    ----------
    Y : (m, l) array or harness observation
        Snapshots sharing a common support.  When l exceeds m, a square root
        of Y Y^H substitutes for Y without changing the objective.
    A : (m, n) array or Dictionary
        Measurement matrix with (ideally) unit-norm columns.
    d : BranchVector or sequence of ints
        Tree widths per level; its length is the target sparsity K.
    cfg : PursuitConfig, optional
        Refinement switches; both refinements default to on.

    Returns a RecoveryResult whose support is sorted ascending; coefficient
    rows follow that order.
    """
    cfg = cfg or PursuitConfig()
    widths = BranchVector(d)
    Amat = matrix_of(A)
    Yfull = _observation_matrix(Y)
    if Yfull.shape[0] != Amat.shape[0]:
        raise ValueError("Y and A must have the same number of rows")
    if len(widths) > Amat.shape[0]:
        raise ValueError("target sparsity exceeds the number of measurements")
    Ywork = Yfull if Yfull.shape[1] <= Yfull.shape[0] else _snapshot_compression(Yfull)
    run = _TreeRun(Ywork, Amat, widths, cfg)
    winner = run.best_support
    support = tuple(sorted(winner))
    coefficients = numlin.least_squares(Amat[:, support], Yfull)
    path = tuple(winner[:t] for t in range(len(winner) + 1))
    return RecoveryResult(
        support=support,
        coefficients=coefficients,
        residual_norm=run.best_objective,
        nodes_expanded=run.nodes,
        winning_leaf_path=path,
    )


def _residual_norm_for(A, S, Y, rtol):
    """||Y - proj_span(A_S) Y||_F, tolerant of rank-deficient subsets."""
    AS = A[:, list(S)]
    U, sv, _ = np.linalg.svd(AS, full_matrices=False)
    if sv[0] <= numlin.ABS_ZERO_FLOOR:
        return float(np.linalg.norm(Y))
    rank = int(np.count_nonzero(sv > rtol * sv[0]))
    Ur = U[:, :rank]
    return float(np.linalg.norm(Y - Ur @ (Ur.conj().T @ Y)))


def exhaustive_l0(Y, A, K, budget=DEFAULT_SUBSET_BUDGET, rtol=numlin.DEFAULT_RTOL):
    """Global minimizer of the projection residual over all size-K supports.

    Scans supports in lexicographic order (which also breaks ties); refuses
    to run when C(n, K) exceeds the budget.
    """
    Amat = matrix_of(A)
    Yfull = _observation_matrix(Y)
    if Yfull.shape[0] != Amat.shape[0]:
        raise ValueError("Y and A must have the same number of rows")
    n = Amat.shape[1]
    K = int(K)
    total = math.comb(n, K)
    if total > budget:
        raise TooLarge(f"{total} supports exceed the budget of {budget}")
    Ywork = Yfull if Yfull.shape[1] <= Yfull.shape[0] else _snapshot_compression(Yfull)
    best_support = None
    best_objective = math.inf
    for S in itertools.combinations(range(n), K):
        objective = _residual_norm_for(Amat, S, Ywork, rtol)
        if objective < best_objective:
            best_objective = objective
            best_support = S
    coefficients, *_ = np.linalg.lstsq(Amat[:, list(best_support)], Yfull, rcond=None)
    path = tuple(best_support[:t] for t in range(K + 1))
    return RecoveryResult(
        support=tuple(best_support),
        coefficients=coefficients,
        residual_norm=best_objective,
        nodes_expanded=total,
        winning_leaf_path=path,
    )


def selection_margin(A, S_star, C, U, d_i, cfg=None):
    """Ratio of the d_i-th best out-of-support score to the best in-support score.

    A value below one certifies that expanding this node with d_i branches
    places at least one still-missing correct index in some child.
    """
    cfg = cfg or PursuitConfig()
    Amat = matrix_of(A)
    Cset = {int(c) for c in C}
    Sstar = {int(s) for s in S_star}
    if not Cset < Sstar:
        raise ValueError("C must be a proper subset of S_star")
    missing = sorted(Sstar - Cset)
    Umat = numlin.as_complex_matrix(U)
    if Cset:
        Q = numlin.orthonormal_basis(Amat[:, sorted(Cset)], cfg.rank_tolerance)
        if Q.shape[1] < len(Cset):
            raise RankDeficientSupport("provisional support is rank deficient")
        projected = Amat - Q @ (Q.conj().T @ Amat)
    else:
        projected = Amat
    norms = np.linalg.norm(projected, axis=0)
    safe = np.maximum(norms, cfg.zero_atom_floor)
    refined = np.where(norms > cfg.zero_atom_floor, projected / safe, 0.0)
    scores = np.linalg.norm(Umat.conj().T @ refined, axis=0)
    denominator = max(float(scores[g]) for g in missing)
    if denominator <= 1e-14:
        raise InfiniteMargin("in-support scores are numerically zero")
    _, value = d_max(scores, Sstar | Cset, d_i)
    return value / denominator
