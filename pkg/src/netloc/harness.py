"""Random network generation, rigid alignment, error metrics and density sweeps."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import GenerationError, LocalizationError, ParameterError, ShapeError
from .minimax import BoxRegion, SolverConfig
from .network import NetworkInstance
from .rootfind import localize

log = logging.getLogger(__name__)

MIN_DISTANCE = 1e-3
MAX_ATTEMPTS = 1000

# 20 random starts screened at mu=1e-2, best 2 resumed: reaches the good basin
# far more often than 5 unscreened starts at a fraction of the cost
SWEEP_SOLVER = SolverConfig(multistart_count=20, screen_keep=2)


@dataclass(frozen=True)
class GenerationSpec:
    n: int
    target_density: float
    noise_fraction: float = 0.1
    field_lower: float = 0.0
    field_upper: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError("a network needs at least two nodes")
        if not 0 < self.target_density <= 1:
            raise ParameterError("target_density must lie in (0, 1]")
        if not 0 <= self.noise_fraction <= 0.5:
            raise ParameterError("noise_fraction must lie in [0, 0.5]")
        if not self.field_lower < self.field_upper:
            raise ParameterError("field_lower must be below field_upper")

    @property
    def edge_count(self) -> int:
        return max(self.n - 1, round(self.target_density * self.n * (self.n - 1) / 2))

    @property
    def diameter(self) -> float:
        return (self.field_upper - self.field_lower) * math.sqrt(2.0)

    @property
    def noise_half_width(self) -> float:
        return self.noise_fraction * self.diameter


@dataclass(frozen=True)
class TruthAndInstance:
    truth: np.ndarray
    instance: NetworkInstance


@dataclass(frozen=True)
class ErrorReport:
    mean_error: float
    max_error: float
    per_node_offsets: np.ndarray
    density: float
    aligned_estimate: np.ndarray


def _connected(n: int, pairs: np.ndarray) -> bool:
    parent = list(range(n))

    def root(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        parent[root(a)] = root(b)
    return len({root(a) for a in range(n)}) == 1


def generate_network(spec: GenerationSpec) -> TruthAndInstance:
    """Uniform nodes in the square field, random connected edge set, noisy bounds.

    Each edge gets one noisy reading ``d + e`` with ``e ~ U[-eta, eta]`` and
    ``eta = noise_fraction * diameter``; bounds are ``reading -/+ eta`` (lower
    floored at ``MIN_DISTANCE``), widened if needed so the truth stays feasible.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n = spec.n
    all_pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
    m = spec.edge_count
    for _ in range(MAX_ATTEMPTS):
        pts = rng.uniform(spec.field_lower, spec.field_upper, size=(n, 2))
        pairs = all_pairs[np.sort(rng.choice(len(all_pairs), size=m, replace=False))]
        if _connected(n, pairs):
            break
    else:
        raise GenerationError(f"no connected graph with {m} edges on {n} nodes after {MAX_ATTEMPTS} attempts")

    eta = spec.noise_half_width
    diff = pts[pairs[:, 0]] - pts[pairs[:, 1]]
    exact_sq = np.einsum("ij,ij->i", diff, diff)
    exact = np.sqrt(exact_sq)
    reading = exact + rng.uniform(-eta, eta, size=m)
    lower = np.maximum(MIN_DISTANCE, reading - eta)
    upper = reading + eta
    # widen in squared form so the truth passes the feasibility test with zero slack
    lower_sq = np.minimum(lower**2, exact_sq)
    upper_sq = np.maximum(upper**2, exact_sq)
    net = NetworkInstance(n, pairs[:, 0], pairs[:, 1], lower_sq, upper_sq)
    return TruthAndInstance(pts.ravel(), net)


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.size % 2:
            raise ShapeError("flat configuration must have even length")
        return x.reshape(-1, 2)
    return x


def align(estimate, truth) -> np.ndarray:
    """Rigid motion (rotation, translation, optional reflection) of ``estimate`` closest to ``truth``."""
    est = _as_points(estimate)
    ref = _as_points(truth)
    if est.shape != ref.shape:
        raise ShapeError(f"shape mismatch: {est.shape} vs {ref.shape}")
    if est.shape[0] < 2:
        raise ShapeError("alignment needs at least two points")
    est_c = est.mean(axis=0)
    ref_c = ref.mean(axis=0)
    a = est - est_c
    b = ref - ref_c
    if not np.any(a):
        return (np.broadcast_to(ref_c, est.shape)).ravel().copy()
    u, _, vt = np.linalg.svd(a.T @ b)
    # unrestricted orthogonal Procrustes: reflections allowed
    rot = u @ vt
    return (a @ rot + ref_c).ravel()


def error_metrics(truth, estimate, density: float = float("nan"), aligned: bool = True) -> ErrorReport:
    ref = _as_points(truth)
    est = _as_points(estimate)
    if ref.shape != est.shape:
        raise ShapeError(f"shape mismatch: {ref.shape} vs {est.shape}")
    moved = _as_points(align(est, ref)) if aligned else est
    offsets = np.linalg.norm(moved - ref, axis=1)
    return ErrorReport(float(offsets.mean()), float(offsets.max()), offsets, density, moved.ravel())


@dataclass(frozen=True)
class SweepRow:
    density: float
    avg_mean_error: float
    avg_max_error: float
    trials: int
    failures: int


def field_box(spec: GenerationSpec) -> BoxRegion:
    """Centred box holding every congruent copy of a field realization near the origin."""
    return BoxRegion.symmetric(spec.diameter)


def _trial(args) -> tuple[float, float] | None:
    spec, cfg, root_tol = args
    data = generate_network(spec)
    try:
        result = localize(data.instance, field_box(spec), cfg, root_tol=root_tol)
    except LocalizationError as exc:
        log.info("trial seed=%s failed: %s", spec.rng_seed, exc)
        return None
    if not result.converged:
        return None
    report = error_metrics(data.truth, result.x_star)
    return report.mean_error, report.max_error


def trial_seed(rng_seed: int, density_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence([rng_seed, density_index, trial_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def density_sweep(
    densities,
    trials_per_density: int,
    n: int,
    noise_fraction: float,
    cfg: SolverConfig | None = None,
    rng_seed: int = 0,
    root_tol: float = 1e-2,
    jobs: int = 1,
) -> list[SweepRow]:
    """Average mean/max error per density over independent random trials.

    Failed trials (no bracket, solver error, unconverged root) are counted and
    left out of the averages.
    """
    densities = [float(d) for d in densities]
    if densities != sorted(densities):
        raise ParameterError("densities must be sorted ascending")
    if trials_per_density < 1:
        raise ParameterError("trials_per_density must be at least 1")
    cfg = cfg or SWEEP_SOLVER
    tasks = [
        (GenerationSpec(n, dens, noise_fraction, rng_seed=trial_seed(rng_seed, di, t)), cfg, root_tol)
        for di, dens in enumerate(densities)
        for t in range(trials_per_density)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_trial, tasks))
    else:
        outcomes = [_trial(task) for task in tasks]

    rows = []
    for di, dens in enumerate(densities):
        chunk = outcomes[di * trials_per_density : (di + 1) * trials_per_density]
        ok = [o for o in chunk if o is not None]
        failures = len(chunk) - len(ok)
        if ok:
            means, maxes = zip(*ok)
            avg_mean, avg_max = float(np.mean(means)), float(np.mean(maxes))
        else:
            avg_mean = avg_max = float("nan")
        rows.append(SweepRow(dens, avg_mean, avg_max, trials_per_density, failures))
        log.info("density %.3f: mean %.4f max %.4f failures %d", dens, avg_mean, avg_max, failures)
    return rows


def format_sweep_csv(rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["density", "avg_mean_error", "avg_max_error", "trials", "failures"])
    for row in rows:
        out.writerow([f"{row.density:.12g}", f"{row.avg_mean_error:.12g}", f"{row.avg_max_error:.12g}",
                      row.trials, row.failures])
    return buf.getvalue()


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_sweep_csv(rows))


def write_scatter_csv(truth, report: ErrorReport, path) -> None:
    ref = _as_points(truth)
    est = _as_points(report.aligned_estimate)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["node", "truth_x", "truth_y", "est_x", "est_y", "offset"])
        for k, (t, e, off) in enumerate(zip(ref, est, report.per_node_offsets), start=1):
            out.writerow([k, f"{t[0]:.12g}", f"{t[1]:.12g}", f"{e[0]:.12g}", f"{e[1]:.12g}", f"{off:.12g}"])


def scatter_svg(truth, estimate, size: int = 480, margin: int = 24) -> str:
    """Truth as circles, estimates as crosses, offsets as connecting segments."""
    ref = _as_points(truth)
    est = _as_points(estimate)
    both = np.vstack([ref, est])
    lo = both.min(axis=0)
    span = max(float((both.max(axis=0) - lo).max()), 1e-12)
    scale = (size - 2 * margin) / span

    def px(p):
        # SVG y grows downward
        return margin + (p[0] - lo[0]) * scale, size - margin - (p[1] - lo[1]) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for t, e in zip(ref, est):
        (tx, ty), (ex, ey) = px(t), px(e)
        parts.append(f'<line class="offset" x1="{tx:.2f}" y1="{ty:.2f}" x2="{ex:.2f}" y2="{ey:.2f}" '
                     'stroke="gray" stroke-width="1"/>')
    for k, t in enumerate(ref, start=1):
        tx, ty = px(t)
        parts.append(f'<circle class="truth" cx="{tx:.2f}" cy="{ty:.2f}" r="4" fill="none" stroke="blue">'
                     f"<title>{k}</title></circle>")
    for k, e in enumerate(est, start=1):
        ex, ey = px(e)
        parts.append(f'<path class="estimate" d="M{ex - 4:.2f},{ey - 4:.2f} L{ex + 4:.2f},{ey + 4:.2f} '
                     f'M{ex - 4:.2f},{ey + 4:.2f} L{ex + 4:.2f},{ey - 4:.2f}" stroke="red" stroke-width="1.5">'
                     f"<title>{k}</title></path>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
