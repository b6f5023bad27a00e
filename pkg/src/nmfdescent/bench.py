"""Benchmark campaigns, summary tables and the smooth-mixture experiment."""

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import StopReason, StopRule, init_scaled
from .regularized import RegularizerSpec, run_regularized
from .solvers import Algorithm, SolverConfig, run

RECORD_FIELDS = ("m", "n", "r", "epsilon", "matrix_id", "start_id", "algorithm",
                 "succeeded", "stop_reason", "elapsed_s", "sweeps",
                 "initial_objective", "final_objective", "final_pgrad_ratio")


@dataclass
class Campaign:
    sizes: list                      # (m, n, r) triples
    epsilons: list
    n_matrices: int = 20
    n_starts: int = 1
    algorithms: list = field(default_factory=lambda: [Algorithm.RRI, Algorithm.MULT,
                                                      Algorithm.CLINE])
    time_limit_s: float = 45.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.sizes = [tuple(int(x) for x in s) for s in self.sizes]
        self.epsilons = [float(e) for e in self.epsilons]
        self.algorithms = [Algorithm.parse(a) for a in self.algorithms]
        if self.n_matrices < 1 or self.n_starts < 1 or self.workers < 1:
            raise ValueError("counts must be at least 1")
        if not self.sizes or not self.epsilons or not self.algorithms:
            raise ValueError("campaign needs sizes, tolerances and algorithms")
        if any(not 0 < e < 1 for e in self.epsilons):
            raise ValueError("tolerances must lie in (0, 1)")
        if any(min(s) < 1 or s[2] > min(s[:2]) for s in self.sizes):
            raise ValueError("each size needs 1 <= r <= min(m, n)")
        if self.time_limit_s <= 0:
            raise ValueError("time limit must be positive")


@dataclass
class RunRecord:
    m: int
    n: int
    r: int
    epsilon: float
    matrix_id: int
    start_id: int
    algorithm: str
    succeeded: bool
    stop_reason: str
    elapsed_s: float
    sweeps: int
    initial_objective: float
    final_objective: float
    final_pgrad_ratio: float

    def key(self):
        return (self.m, self.n, self.r, self.epsilon, self.matrix_id, self.start_id,
                self.algorithm)


def matrix_seed(seed, m, n, matrix_id):
    return [seed, m, n, matrix_id]


def start_seed(seed, m, n, r, matrix_id, start_id):
    return [seed, m, n, r, matrix_id, start_id, 1]


def gen_random_instance(m, n, seed):
    """Matrix with i.i.d. uniform ``[0, 1)`` entries; `seed` is anything ``default_rng`` takes."""
    if m < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    return np.random.default_rng(seed).random((m, n))


def _one_run(task):
    m, n, r, eps, mid, sid, alg, limit, seed = task
    A = gen_random_instance(m, n, matrix_seed(seed, m, n, mid))
    start = init_scaled(A, r, start_seed(seed, m, n, r, mid, sid))
    cfg = SolverConfig(alg, rank=r, stop=StopRule(epsilon_rel=eps, max_seconds=limit))
    rep = run(A, cfg, start=start)
    return RunRecord(m, n, r, eps, mid, sid, alg.value,
                     rep.stop_reason is StopReason.CRITERION,
                     rep.stop_reason.value, rep.elapsed, rep.sweeps,
                     rep.trace[0].objective, rep.trace[-1].objective, rep.pgrad_ratio)


def campaign_tasks(c):
    return [(m, n, r, eps, mid, sid, alg, c.time_limit_s, c.seed)
            for (m, n, r) in c.sizes for eps in c.epsilons
            for mid in range(c.n_matrices) for sid in range(c.n_starts)
            for alg in c.algorithms]


def run_campaign(c, progress=None):
    """Run every (size, tolerance, matrix, start, algorithm) combination.

    All algorithms share the start of a given (matrix, start) pair, and
    every tolerance restarts from it. Records come back sorted by key,
    whatever order the workers finished in.
    """
    tasks = campaign_tasks(c)
    records = []
    if c.workers > 1:
        with ProcessPoolExecutor(max_workers=c.workers) as pool:
            for rec in pool.map(_one_run, tasks, chunksize=1):
                records.append(rec)
                if progress:
                    progress(rec)
    else:
        for t in tasks:
            rec = _one_run(t)
            records.append(rec)
            if progress:
                progress(rec)
    order = {a.value: i for i, a in enumerate(c.algorithms)}
    records.sort(key=lambda rec: rec.key()[:-1] + (order[rec.algorithm],))
    return records


class SummaryCell(NamedTuple):
    mean_elapsed: float  # over successful runs; nan if none
    successes: int
    runs: int


def summarize(records):
    """Group records into ``{(m, n, r, epsilon, algorithm): SummaryCell}``."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.m, rec.n, rec.r, rec.epsilon, rec.algorithm), []).append(rec)
    out = {}
    for key, recs in groups.items():
        ok = [r.elapsed_s for r in recs if r.succeeded]
        mean = sum(ok) / len(ok) if ok else float("nan")
        out[key] = SummaryCell(mean, len(ok), len(recs))
    return out


def format_cell(cell, time_limit):
    """``0.0213(96)`` style: mean successful time and success count."""
    if cell.successes == 0:
        return f"{time_limit:g}*(0)"
    return f"{cell.mean_elapsed:.3g}({cell.successes})"


def format_table(records, time_limit):
    cells = summarize(records)
    algs = list(dict.fromkeys(k[4] for k in cells))
    rows = list(dict.fromkeys(k[:4] for k in cells))
    head = ["size", "eps"] + algs
    lines = [head]
    for m, n, r, eps in rows:
        line = [f"({m},{n},{r})", f"{eps:g}"]
        line += [format_cell(cells[(m, n, r, eps, a)], time_limit)
                 if (m, n, r, eps, a) in cells else "-" for a in algs]
        lines.append(line)
    widths = [max(len(l[i]) for l in lines) for i in range(len(head))]
    return "\n".join("  ".join(s.rjust(w) for s, w in zip(l, widths)) for l in lines)


def median_sweeps(records, algorithm, only_success=True, **where):
    vals = [r.sweeps for r in records if r.algorithm == Algorithm.parse(algorithm).value
            and (r.succeeded or not only_success)
            and all(getattr(r, k) == v for k, v in where.items())]
    return statistics.median(vals) if vals else float("nan")


# --- smooth mixtures ----------------------------------------------------------

def smooth_sources(n_points=200):
    """Four smooth nonnegative profiles on ``[0, 1]`` with peak value 1."""
    x = np.linspace(0.0, 1.0, n_points)
    half_sine = np.sin(np.pi * x)
    bump = np.exp(-0.5 * ((x - 0.3) / 0.08) ** 2)
    w = 0.25
    raised = np.where(np.abs(x - 0.7) < w, 0.5 * (1 + np.cos(np.pi * (x - 0.7) / w)), 0.0)
    s = np.clip((x - 0.2) / 0.4, 0.0, 1.0)
    ramp = 3 * s**2 - 2 * s**3
    F = np.column_stack([half_sine, bump, raised, ramp])
    return F / F.max(axis=0)


class Mixture(NamedTuple):
    A: np.ndarray      # noisy clipped data
    F: np.ndarray      # sources, one per column
    E: np.ndarray      # mixing weights
    clean: np.ndarray  # F E^T


def gen_smooth_mixture(n_points=200, n_mixtures=100, noise_rel=0.2, seed=0):
    """``A = max(F E^T + N, 0)`` with ``||N|| = noise_rel ||F E^T||``."""
    rng = np.random.default_rng(seed)
    F = smooth_sources(n_points)
    E = rng.random((n_mixtures, F.shape[1]))
    clean = F @ E.T
    N = rng.standard_normal(clean.shape)
    if noise_rel > 0:
        N *= noise_rel * np.linalg.norm(clean) / np.linalg.norm(N)
    else:
        N[:] = 0.0
    return Mixture(np.maximum(clean + N, 0.0), F, E, clean)


def second_difference_energy(U):
    """Sum over columns of ``sum_i (u_{i+1} - 2 u_i + u_{i-1})^2``, columns scaled to unit norm."""
    U = np.asarray(U, dtype=np.float64)
    nrm = np.linalg.norm(U, axis=0)
    U = np.divide(U, nrm, out=np.zeros_like(U), where=nrm > 0)
    D = U[2:] - 2 * U[1:-1] + U[:-2]
    return float(np.sum(D * D))


class SmoothResult(NamedTuple):
    delta: float
    seed: int
    energy: float
    rel_error: float      # ||F E^T - U V^T|| / ||F E^T||
    sweeps: int
    stop_reason: str


def run_smooth(deltas=(0.0, 10.0, 100.0), seeds=(0,), rank=4, stop=None,
               n_points=200, n_mixtures=100, noise_rel=0.2):
    """Fit each mixture with smoothing weight ``delta`` on every column of U."""
    stop = stop or StopRule(epsilon_rel=1e-4, max_seconds=30, max_sweeps=500)
    out = []
    for seed in seeds:
        mix = gen_smooth_mixture(n_points, n_mixtures, noise_rel, seed)
        start = init_scaled(mix.A, rank, [seed, 2])
        for delta in deltas:
            rep = run_regularized(mix.A, rank, RegularizerSpec(smooth_delta=delta),
                                  stop=stop, start=start)
            fp = rep.final
            err = np.linalg.norm(mix.clean - fp.U @ fp.V.T) / np.linalg.norm(mix.clean)
            out.append(SmoothResult(float(delta), seed, second_difference_energy(fp.U),
                                    float(err), rep.sweeps, rep.stop_reason.value))
    return out
