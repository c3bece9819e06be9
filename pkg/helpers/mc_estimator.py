"""Monte Carlo arm-event estimates at p = 1/2 and what is read off them.

Trials are split into chunks by trial index and handed to joblib workers;
every trial draws its colours from (radius seed, trial index) alone, so
the merged counts do not depend on the number of workers.
"""
import csv
import io
import math
import time
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from __init__ import LOGGER
from config import config
from helpers.arms import event_function
from helpers.errors import CapacityError, DegenerateFit, DomainError, InsufficientData
from helpers.lattice import GOLDEN, Region, RegionKind, RegionSpec, build_region, mix64, sample_coloring
from helpers.utils import get_progress_bar, get_readable_time

CSV_COLUMNS = ["event", "r_in", "r_out", "samples", "successes", "p_hat", "lo", "hi"]
ANNULUS_RATIO = 4
Z_95 = 1.96
QUASI_MULT_SIGMAS = 3.0
DECAY_SIGMAS = 3.0

RadiusLike = Union[int, Tuple[int, int]]


@dataclass(frozen=True)
class ArmTrialBatch:
    event: str
    r_in: int
    r_out: int
    samples: int
    successes: int
    seed: int
    trial_range: Tuple[int, int]
    p: float = 0.5

    def __post_init__(self):
        if not (0 <= self.successes <= self.samples):
            raise DomainError(f"successes={self.successes} outside [0, samples={self.samples}]")

    @property
    def spec(self) -> RegionSpec:
        return RegionSpec.ball(self.r_out) if self.r_in == 0 else RegionSpec.annulus(self.r_in, self.r_out)

    @property
    def p_hat(self) -> float:
        return self.successes / self.samples if self.samples else float("nan")

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.samples)

    @property
    def interval(self) -> Tuple[float, float]:
        return wilson_interval(self.successes, self.samples)

    def merge(self, other: "ArmTrialBatch") -> "ArmTrialBatch":
        if (self.event, self.r_in, self.r_out, self.seed) != (other.event, other.r_in, other.r_out, other.seed):
            raise DomainError("only batches of the same event, region and seed can be merged")
        lo = min(self.trial_range[0], other.trial_range[0])
        hi = max(self.trial_range[1], other.trial_range[1])
        return ArmTrialBatch(self.event, self.r_in, self.r_out, self.samples + other.samples,
                             self.successes + other.successes, self.seed, (lo, hi), self.p)

    def to_row(self) -> dict:
        lo, hi = self.interval
        return {"event": self.event, "r_in": self.r_in, "r_out": self.r_out, "samples": self.samples,
                "successes": self.successes, "p_hat": self.p_hat, "lo": lo, "hi": hi}


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    points_used: int

    @property
    def exponent(self) -> float:
        return -self.slope

    def to_dict(self) -> dict:
        return dict(asdict(self), exponent=self.exponent)


# ---------------------------------------------------------------------------
# simulation


def region_spec(event: str, radius: RadiusLike, ratio: Optional[int] = None) -> RegionSpec:
    """Ball(n) for plain radii, Annulus(r, r') for pairs or when a ratio is given."""
    if isinstance(radius, (tuple, list)):
        r_in, r_out = (int(r) for r in radius)
        return RegionSpec.ball(r_out) if r_in == 0 else RegionSpec.annulus(r_in, r_out)
    radius = int(radius)
    if ratio is None and event == "bww":
        ratio = ANNULUS_RATIO
    if ratio:
        return RegionSpec.annulus(radius, ratio * radius)
    return RegionSpec.ball(radius)


def radius_seed(seed: int, spec: RegionSpec) -> int:
    return mix64(seed ^ mix64(GOLDEN * (1 + (spec.r_in << 20) + spec.r_out)))


@lru_cache(maxsize=8)
def _cached_region(spec: RegionSpec) -> Region:
    return build_region(spec)


def _run_chunk(event: str, spec: RegionSpec, p: float, seed: int, lo: int, hi: int) -> int:
    region = _cached_region(spec)
    detect = event_function(event, spec)
    return sum(1 for trial in range(lo, hi) if detect(sample_coloring(region, p, seed, trial), region))


def _chunks(samples: int, size: int) -> List[Tuple[int, int]]:
    return [(lo, min(lo + size, samples)) for lo in range(0, samples, size)]


def run_trials(event: str, radii: Sequence[RadiusLike], samples_per_radius: int, seed: Optional[int] = None,
               workers: Optional[int] = None, p: float = 0.5, ratio: Optional[int] = None,
               chunk_trials: Optional[int] = None) -> List[ArmTrialBatch]:
    seed = config.SEED if seed is None else seed
    workers = workers or config.WORKERS
    chunk_trials = chunk_trials or config.CHUNK_TRIALS
    if samples_per_radius < 1:
        raise DomainError(f"samples_per_radius must be >= 1, got {samples_per_radius}")
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p={p} outside [0, 1]")
    specs = [region_spec(event, r, ratio) for r in radii]
    outer = [s.r_out for s in specs]
    if any(b <= a for a, b in zip(outer, outer[1:])):
        raise DomainError(f"radii must be increasing, got {list(radii)}")
    for spec in specs:
        if spec.r_out > config.MAX_RADIUS:
            raise CapacityError(f"radius {spec.r_out} above BACKBONE_MAX_RADIUS={config.MAX_RADIUS}")
        event_function(event, spec)

    batches = []
    for done, spec in enumerate(specs, 1):
        start = time.time()
        rseed = radius_seed(seed, spec)
        chunks = _chunks(samples_per_radius, chunk_trials)
        if workers == 1:
            counts = [_run_chunk(event, spec, p, rseed, lo, hi) for lo, hi in chunks]
        else:
            counts = Parallel(n_jobs=workers)(
                delayed(_run_chunk)(event, spec, p, rseed, lo, hi) for lo, hi in chunks
            )
        batch = ArmTrialBatch(event, spec.r_in, spec.r_out, samples_per_radius, int(sum(counts)), rseed,
                              (0, samples_per_radius), p)
        batches.append(batch)
        LOGGER.info(
            f"{event} {spec}: {batch.successes}/{batch.samples} p_hat={batch.p_hat:.5f} "
            f"[{get_progress_bar(done / len(specs))}] {done}/{len(specs)} "
            f"in {get_readable_time(time.time() - start)}"
        )
    return batches


# ---------------------------------------------------------------------------
# statistics


def wilson_interval(successes: int, samples: int, z: float = Z_95) -> Tuple[float, float]:
    if samples < 1 or not (0 <= successes <= samples):
        raise DomainError(f"invalid counts {successes}/{samples}")
    n = float(samples)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == samples else min(1.0, center + half)
    return lo, hi


def fit_power_law(points: Sequence[Tuple[float, float, float]]) -> FitResult:
    """Weighted least squares of log p̂ on log n; the slope estimates minus the exponent.

    Weights are 1/σ² with σ = stderr/p̂. If any stderr is zero the fit is
    unweighted and the slope error comes from the residual variance.
    """
    if len(points) < 3:
        raise DomainError(f"need at least 3 points, got {len(points)}")
    n = np.array([pt[0] for pt in points], dtype=float)
    p = np.array([pt[1] for pt in points], dtype=float)
    se = np.array([pt[2] for pt in points], dtype=float)
    if np.any(p <= 0) or np.any(n <= 0):
        raise DomainError("power-law fit needs positive radii and probabilities")
    if np.all(n == n[0]):
        raise DegenerateFit("all radii are equal")
    x = np.log(n)
    y = np.log(p)
    design = np.column_stack([np.ones_like(x), x])
    if np.all(se > 0):
        sigma = se / p
        w = 1.0 / sigma
        coef, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
        cov = np.linalg.inv(design.T @ (design * (w * w)[:, None]))
    else:
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ coef
        dof = max(len(x) - 2, 1)
        cov = np.linalg.inv(design.T @ design) * float(resid @ resid) / dof
    return FitResult(float(coef[1]), float(coef[0]), float(math.sqrt(max(cov[1, 1], 0.0))), len(points))


def fit_batches(batches: Iterable[ArmTrialBatch]) -> FitResult:
    return fit_power_law([(b.r_out, b.p_hat, b.stderr) for b in batches])


@dataclass(frozen=True)
class QuasiMultReport:
    radii: Tuple[int, int, int]
    p12: float
    p23: float
    p13: float
    c1_hat: float
    slack: float
    upper_holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def quasi_mult_check(b12: ArmTrialBatch, b23: ArmTrialBatch, b13: ArmTrialBatch) -> QuasiMultReport:
    """π(r1,r3) <= π(r1,r2)·π(r2,r3) up to propagated 3σ noise, and the lower ratio ĉ1."""
    r1, r2, r3 = b12.r_in, b12.r_out, b23.r_out
    if (b23.r_in, b13.r_in, b13.r_out) != (r2, r1, r3):
        raise DomainError(f"batches do not describe (r1,r2), (r2,r3), (r1,r3): "
                          f"{(b12.r_in, b12.r_out)}, {(b23.r_in, b23.r_out)}, {(b13.r_in, b13.r_out)}")
    if r1 < 1 or r2 < 2 * r1 or r3 < 2 * r2:
        raise DomainError(f"need r2 >= 2 r1 and r3 >= 2 r2, got {(r1, r2, r3)}")
    for b in (b12, b23, b13):
        if b.interval[0] == 0.0:
            raise InsufficientData(f"{b.event} ({b.r_in},{b.r_out}): confidence interval contains 0")
    p12, p23, p13 = b12.p_hat, b23.p_hat, b13.p_hat
    product = p12 * p23
    rel = math.sqrt(sum((b.stderr / b.p_hat) ** 2 for b in (b12, b23, b13)))
    slack = QUASI_MULT_SIGMAS * rel
    report = QuasiMultReport((r1, r2, r3), p12, p23, p13, p13 / product, slack, p13 <= product * (1.0 + slack))
    LOGGER.info(f"quasi-multiplicativity {report.radii}: c1_hat={report.c1_hat:.4f} upper_holds={report.upper_holds}")
    return report


@dataclass(frozen=True)
class AnnulusEstimate:
    r_in: int
    r_out: int
    xi: float
    stderr: float


def annulus_exponent(batch: ArmTrialBatch) -> AnnulusEstimate:
    """-log π(r, r')/log(r'/r) from a single crossing estimate."""
    if batch.r_in < 1:
        raise DomainError("annulus estimator needs r_in >= 1")
    if batch.successes == 0:
        raise InsufficientData(f"no successes in ({batch.r_in},{batch.r_out})")
    log_ratio = math.log(batch.r_out / batch.r_in)
    return AnnulusEstimate(batch.r_in, batch.r_out, -math.log(batch.p_hat) / log_ratio,
                           batch.stderr / (batch.p_hat * log_ratio))


def monotone_decay_check(batches: Sequence[ArmTrialBatch], sigmas: float = DECAY_SIGMAS) -> List[Tuple[int, int]]:
    """Consecutive radius pairs whose estimate rises by more than the noise band."""
    violations = []
    for a, b in zip(batches, batches[1:]):
        band = sigmas * math.sqrt(a.stderr ** 2 + b.stderr ** 2)
        if b.p_hat > a.p_hat + band:
            violations.append((a.r_out, b.r_out))
    return violations


def pooled_annulus_exponent(estimates: Sequence[AnnulusEstimate]) -> Optional[AnnulusEstimate]:
    """Inverse-variance weighted mean of fixed-ratio annulus exponents."""
    usable = [e for e in estimates if e.stderr > 0]
    if not usable:
        return None
    weights = np.array([1.0 / e.stderr ** 2 for e in usable])
    values = np.array([e.xi for e in usable])
    mean = float(weights @ values / weights.sum())
    return AnnulusEstimate(min(e.r_in for e in usable), max(e.r_out for e in usable), mean,
                           float(math.sqrt(1.0 / weights.sum())))


def fit_report(batches: Sequence[ArmTrialBatch], annuli: Sequence[ArmTrialBatch] = (),
               reference: Optional[float] = None) -> dict:
    events = {b.event for b in (*batches, *annuli)}
    report = {"event": events.pop() if len(events) == 1 else sorted(events),
              "batches": [b.to_row() for b in (*batches, *annuli)]}
    if len(batches) >= 3:
        report["fit"] = fit_batches(batches).to_dict()
    estimates = [annulus_exponent(b) for b in annuli if b.successes]
    report["annulus"] = [asdict(e) for e in estimates]
    pooled = pooled_annulus_exponent(estimates)
    report["annulus_pooled"] = asdict(pooled) if pooled else None
    report["monotone_violations"] = monotone_decay_check(batches)
    if reference is not None:
        report["reference_exponent"] = reference
    return report


# ---------------------------------------------------------------------------
# csv


def write_csv(batches: Iterable[ArmTrialBatch], stream: TextIO, provenance: Optional[dict] = None):
    for key, value in (provenance or {}).items():
        stream.write(f"# {key}: {value}\n")
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for batch in batches:
        row = batch.to_row()
        row.update({k: f"{row[k]:.10g}" for k in ("p_hat", "lo", "hi")})
        writer.writerow(row)


def to_csv_text(batches: Iterable[ArmTrialBatch], provenance: Optional[dict] = None) -> str:
    buf = io.StringIO()
    write_csv(batches, buf, provenance)
    return buf.getvalue()


def read_csv(stream: TextIO) -> Tuple[List[ArmTrialBatch], dict]:
    provenance = {}
    lines = []
    for line in stream:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            provenance[key.strip()] = value.strip()
        elif line.strip():
            lines.append(line)
    reader = csv.DictReader(lines)
    missing = set(CSV_COLUMNS) - set(reader.fieldnames or [])
    if missing:
        raise DomainError(f"CSV is missing columns: {sorted(missing)}")
    seed = int(provenance["seed"]) if "seed" in provenance else None
    batches = []
    for row in reader:
        samples = int(row["samples"])
        batch = ArmTrialBatch(row["event"], int(row["r_in"]), int(row["r_out"]), samples,
                              int(row["successes"]), -1, (0, samples))
        # batches carry the per-radius seed, the same one run_trials stores
        if seed is not None:
            batch = replace(batch, seed=radius_seed(seed, batch.spec))
        batches.append(batch)
    return batches, provenance


def split_by_kind(batches: Iterable[ArmTrialBatch]) -> Tuple[List[ArmTrialBatch], List[ArmTrialBatch]]:
    balls, annuli = [], []
    for b in batches:
        (balls if b.spec.kind is RegionKind.BALL else annuli).append(b)
    return balls, annuli
