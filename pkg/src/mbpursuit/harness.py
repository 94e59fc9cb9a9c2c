"""Seeded Monte Carlo experiment engine.

Generates target scenes and noisy snapshots, runs the configured solvers and
baselines, and reports per-sweep-point error probabilities with Wilson
confidence intervals as CSV rows.  A complete experiment is a pure function
of its config plus master seed: per-trial generators derive from
(master seed, sweep point index, trial index), so re-runs give byte-identical
output apart from wall-clock columns.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import guarantees, pursuit
from .dictionary import (
    gaussian_dictionary,
    matrix_of,
    mimo_radar_dictionary,
    random_geometry,
)
from .errors import CardinalityMismatch, RankDeficient, ZeroMatrix
from .numlin import as_complex_matrix, orthonormal_basis
from .pursuit import BranchVector, PursuitConfig

CONDITION_HEADER = ("MN", "d1", "prob", "ci95", "trials")
RECOVERY_HEADER = ("method", "param", "error_prob", "ci95", "mean_ms", "mean_nodes")

# two-sided 95% normal quantile used by the Wilson interval
_Z95 = 1.959963984540054


@dataclass(eq=False)
class TargetScene:
    """Planted support plus unit-modulus gains, one column per snapshot."""

    support: tuple
    gains: np.ndarray

    @property
    def sparsity(self):
        return len(self.support)

    @property
    def snapshots(self):
        return self.gains.shape[1]


@dataclass(eq=False)
class Observations:
    """Snapshot matrix with the generating scene attached when known."""

    y: np.ndarray
    scene: TargetScene | None = None


@dataclass(frozen=True)
class TrialOutcome:
    """One (method, trial) record inside a sweep point."""

    method: str
    param: object
    error: bool
    wall_time_ms: float
    nodes_expanded: int


def generate_scene(n, K, l, seed):
    """Uniform random support (without replacement) and i.i.d. uniform phases."""
    n, K, l = int(n), int(K), int(l)
    if K > n:
        raise ValueError("sparsity cannot exceed the grid size")
    rng = np.random.default_rng(seed)
    support = tuple(sorted(int(g) for g in rng.choice(n, size=K, replace=False)))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(K, l))
    return TargetScene(support, np.exp(-1j * phases))


def scene_snapshots(A, scene):
    """Noise-free snapshots A_S X for a scene on dictionary A."""
    Amat = matrix_of(A)
    return Amat[:, list(scene.support)] @ scene.gains


def add_noise(Y0, snr_db, seed, scene=None):
    """Add i.i.d. complex Gaussian noise at per-entry variance 10^(-snr/10).

    Unit-modulus gains make the conventional per-target SNR reduce to the
    inverse noise variance, so snr_db = 0 means unit variance.
    """
    Y0 = as_complex_matrix(Y0)
    sigma = math.sqrt(10.0 ** (-float(snr_db) / 10.0))
    rng = np.random.default_rng(seed)
    re = rng.standard_normal(Y0.shape)
    im = rng.standard_normal(Y0.shape)
    noise = sigma / math.sqrt(2.0) * (re + 1j * im)
    return Observations(Y0 + noise, scene)


def _top_k(scores, K):
    """Indices of the K largest scores, ties toward the smaller index."""
    scores = np.asarray(scores, dtype=float).ravel()
    order = np.lexsort((np.arange(scores.size), -scores))
    return tuple(sorted(int(g) for g in order[:K]))


def music_discrete(Y, A, K):
    """Grid MUSIC: the K atoms best aligned with the observation subspace."""
    Ymat = as_complex_matrix(getattr(Y, "y", Y))
    if Ymat.shape[1] < 2:
        raise ValueError("subspace scoring needs more than one snapshot")
    try:
        U = orthonormal_basis(Ymat)
    except ZeroMatrix as exc:
        raise RankDeficient("observations have no usable column space") from exc
    scores = np.linalg.norm(matrix_of(A).conj().T @ U, axis=1)
    return _top_k(scores, int(K))


def beamform_smv(y, A, K):
    """Single-snapshot beamforming: top-K correlations against the atoms."""
    yvec = as_complex_matrix(getattr(y, "y", y))
    if yvec.shape[1] != 1:
        raise ValueError("beamforming scores a single snapshot")
    scores = np.abs(matrix_of(A).conj().T @ yvec).ravel()
    return _top_k(scores, int(K))


def support_error(estimated, truth):
    """True iff the index sets differ (order is irrelevant)."""
    est = {int(g) for g in estimated}
    tru = {int(g) for g in truth}
    if len(est) != len(tru):
        raise CardinalityMismatch(f"supports have sizes {len(est)} and {len(tru)}")
    return est != tru


def wilson_interval(successes, trials, z=_Z95):
    """Wilson score interval (lo, hi) for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# --------------------------------------------------------------------------
# experiment configuration


@dataclass(eq=False)
class ExperimentConfig:
    """Parsed flat key=value experiment description."""

    kind: str
    dictionary: str = "mimo"
    Z: int | None = None
    M: int | None = None
    N: int | None = None
    n: int | None = None
    K: int = 1
    l: int = 1
    snr_db: tuple = ()
    mn: tuple = ()
    branch_vectors: tuple = ()
    baselines: tuple = ()
    trials: int = 1
    seed: int = 0
    out: str = "results.csv"
    budget: int = guarantees.DEFAULT_SUPPORT_BUDGET


def _closest_factors(v):
    """Factor v = M * N with M <= N as close to square as possible."""
    v = int(v)
    best = (1, v)
    for M in range(int(math.isqrt(v)), 0, -1):
        if v % M == 0:
            best = (M, v // M)
            break
    return best


def _parse_mn_token(token, kind):
    token = token.strip()
    if "x" in token:
        M, N = token.split("x")
        return (int(M), int(N))
    if kind == "gaussian":
        return int(token)
    return _closest_factors(int(token))


def parse_experiment_config(text):
    """Parse the flat key=value config format (see README for the keys)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()

    known = {
        "kind", "dictionary", "Z", "M", "N", "n", "K", "l", "snr_db", "mn",
        "branch_vectors", "baselines", "trials", "seed", "out", "budget",
    }
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "kind" not in values:
        raise ValueError("config needs kind=condition or kind=recovery")
    kind = values["kind"]
    if kind not in ("condition", "recovery"):
        raise ValueError("kind must be condition or recovery")

    cfg = ExperimentConfig(kind=kind)
    cfg.dictionary = values.get("dictionary", "mimo")
    if cfg.dictionary not in ("mimo", "gaussian"):
        raise ValueError("dictionary must be mimo or gaussian")
    for key in ("Z", "M", "N", "n", "K", "l", "trials", "seed", "budget"):
        if key in values:
            setattr(cfg, key, int(values[key]))
    if "snr_db" in values:
        cfg.snr_db = tuple(float(tok) for tok in values["snr_db"].split(",") if tok.strip())
    if "mn" in values:
        cfg.mn = tuple(
            _parse_mn_token(tok, cfg.dictionary)
            for tok in values["mn"].split(",")
            if tok.strip()
        )
    if "branch_vectors" in values:
        body = values["branch_vectors"].strip().strip("[]")
        cfg.branch_vectors = tuple(
            BranchVector.from_string(part) for part in body.split("|") if part.strip()
        )
    if "baselines" in values:
        cfg.baselines = tuple(tok.strip() for tok in values["baselines"].split(",") if tok.strip())
        bad = set(cfg.baselines) - {"music", "beamform"}
        if bad:
            raise ValueError(f"unknown baselines: {sorted(bad)}")
    if "out" in values:
        cfg.out = values["out"]

    _validate_config(cfg)
    return cfg


def _validate_config(cfg):
    if cfg.trials < 1:
        raise ValueError("trials must be >= 1")
    if cfg.dictionary == "mimo" and cfg.Z is None:
        raise ValueError("mimo dictionaries need an aperture Z")
    if cfg.dictionary == "gaussian" and cfg.n is None:
        raise ValueError("gaussian dictionaries need a column count n")
    if cfg.kind == "condition":
        if not cfg.mn:
            raise ValueError("condition sweeps need an mn list")
        if not cfg.branch_vectors:
            raise ValueError("condition sweeps derive d1 values from branch_vectors")
    else:
        if not cfg.branch_vectors and not cfg.baselines:
            raise ValueError("recovery sweeps need methods to run")
        if not cfg.mn and not cfg.snr_db:
            raise ValueError("recovery sweeps need an mn or snr_db sweep")
        if cfg.mn and len(cfg.snr_db) > 1:
            raise ValueError("sweep either mn or snr_db, not both")
        if not cfg.mn and (cfg.M is None or cfg.N is None):
            raise ValueError("snr sweeps need fixed M and N")
        if "music" in cfg.baselines and cfg.l < 2:
            raise ValueError("the music baseline needs l > 1")
        if "beamform" in cfg.baselines and cfg.l != 1:
            raise ValueError("the beamform baseline is single-snapshot (l = 1)")


def _trial_rngs(master_seed, point_index, trial_index, count):
    """Independent generators derived from (master, point, trial)."""
    ss = np.random.SeedSequence([int(master_seed), int(point_index), int(trial_index)])
    return [np.random.default_rng(child) for child in ss.spawn(count)]


def _build_dictionary(cfg, point, rng):
    if cfg.dictionary == "gaussian":
        m = point if isinstance(point, int) else cfg.M * cfg.N
        return gaussian_dictionary(m, cfg.n, rng)
    if isinstance(point, tuple):
        M, N = point
    else:
        M, N = cfg.M, cfg.N
    geom = random_geometry(M, N, cfg.Z, rng)
    return mimo_radar_dictionary(geom)


def _point_label(point):
    if isinstance(point, tuple):
        return point[0] * point[1]
    return point


def format_value(x):
    """Stable text form for CSV cells (12 significant digits)."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def format_interval(lo, hi):
    return f"{format_value(lo)},{format_value(hi)}"


def run_condition_sweep(cfg, dictionary_factory=None):
    """Probability of the level-1 multi-branch coherence condition per d1.

    For every measurement-count point, fresh dictionaries are drawn and the
    smallest working branch count is computed once per draw; the condition at
    width d1 holds iff that count is at most d1.  Reference rows report the
    mutual-coherence and cumulative-coherence conditions on the same draws.
    """
    factory = dictionary_factory or _build_dictionary
    d1_values = sorted({bv[0] for bv in cfg.branch_vectors})
    rows = []
    for p_idx, point in enumerate(cfg.mn):
        critical = []
        coh_hits = 0
        babel_hits = 0
        for t in range(cfg.trials):
            (rng,) = _trial_rngs(cfg.seed, p_idx, t, 1)
            A = factory(cfg, point, rng)
            d_star = guarantees.smallest_d_bruteforce(A, (), cfg.K, 0.0, cfg.budget)
            critical.append(math.inf if d_star is None else d_star)
            coh_hits += guarantees.coherence_condition(A, cfg.K).holds
            babel_hits += guarantees.cumulative_coherence_condition(A, cfg.K).holds
        label = _point_label(point)
        for d1 in d1_values:
            hits = sum(1 for c in critical if c <= d1)
            lo, hi = wilson_interval(hits, cfg.trials)
            rows.append((label, str(d1), hits / cfg.trials, (lo, hi), cfg.trials))
        for name, hits in (("coherence", coh_hits), ("babel", babel_hits)):
            lo, hi = wilson_interval(hits, cfg.trials)
            rows.append((label, name, hits / cfg.trials, (lo, hi), cfg.trials))
    return rows


def _run_method(method, obs, A, K):
    """Returns (estimated support, nodes expanded, elapsed ms)."""
    start = time.perf_counter()
    if isinstance(method, BranchVector):
        result = pursuit.mbmp(obs.y, A, method, PursuitConfig())
        elapsed = (time.perf_counter() - start) * 1000.0
        return result.support, result.nodes_expanded, elapsed
    if method == "music":
        est = music_discrete(obs.y, A, K)
    elif method == "beamform":
        est = beamform_smv(obs.y, A, K)
    else:
        raise ValueError(f"unknown method {method!r}")
    elapsed = (time.perf_counter() - start) * 1000.0
    return est, 0, elapsed


def _method_id(method):
    if isinstance(method, BranchVector):
        return "mbmp[" + ",".join(str(x) for x in method) + "]"
    return method


def run_recovery_sweep(cfg):
    """Support-error probability per method across an SNR or measurement sweep.

    Every method sees the same dictionary, scene and noise draw per trial, so
    method comparisons use common random numbers.
    """
    methods = list(cfg.branch_vectors) + list(cfg.baselines)
    sweep_mn = bool(cfg.mn)
    points = cfg.mn if sweep_mn else cfg.snr_db
    fixed_snr = cfg.snr_db[0] if (sweep_mn and cfg.snr_db) else None
    rows = []
    for p_idx, point in enumerate(points):
        label = _point_label(point) if sweep_mn else point
        outcomes = {m: [] for m in range(len(methods))}
        for t in range(cfg.trials):
            rng_geom, rng_scene, rng_noise = _trial_rngs(cfg.seed, p_idx, t, 3)
            A = _build_dictionary(cfg, point if sweep_mn else None, rng_geom)
            n = matrix_of(A).shape[1]
            scene = generate_scene(n, cfg.K, cfg.l, rng_scene)
            Y0 = scene_snapshots(A, scene)
            snr = fixed_snr if sweep_mn else point
            if snr is None:
                snr = math.inf
            obs = add_noise(Y0, snr, rng_noise, scene)
            for m_idx, method in enumerate(methods):
                est, nodes, elapsed = _run_method(method, obs, A, cfg.K)
                outcomes[m_idx].append(
                    TrialOutcome(
                        _method_id(method),
                        label,
                        support_error(est, scene.support),
                        elapsed,
                        nodes,
                    )
                )
        for m_idx, method in enumerate(methods):
            recorded = outcomes[m_idx]
            fails = sum(o.error for o in recorded)
            lo, hi = wilson_interval(fails, cfg.trials)
            rows.append(
                (
                    _method_id(method),
                    label,
                    fails / cfg.trials,
                    (lo, hi),
                    sum(o.wall_time_ms for o in recorded) / cfg.trials,
                    sum(o.nodes_expanded for o in recorded) / cfg.trials,
                )
            )
    return rows


def rows_to_csv(header, rows):
    """Serialize sweep rows with stable formatting; fields join with ';'."""
    lines = [";".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, tuple):
                cells.append(format_interval(*cell))
            else:
                cells.append(format_value(cell))
        lines.append(";".join(cells))
    return "\n".join(lines) + "\n"


def run_experiment(cfg):
    """Dispatch on config kind; returns the CSV text."""
    if cfg.kind == "condition":
        return rows_to_csv(CONDITION_HEADER, run_condition_sweep(cfg))
    return rows_to_csv(RECOVERY_HEADER, run_recovery_sweep(cfg))
