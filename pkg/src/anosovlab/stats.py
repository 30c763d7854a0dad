"""Statistical battery for generator output.

Chi-square uniformity, lag-k serial correlation and star discrepancy (exact
in 1-D, certified grid bounds in 2-D and 3-D). ``compare_generators`` puts
the spectral invariants next to the measured battery results.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as _st

from .errors import InvalidInputError
from .matrix_core import build_mixmax, cat_map, rcarry_companion
from .generator import fill, seed_state

DEFAULT_ALPHA = 0.01


@dataclass
class TestReport:
    name: str
    statistic: float
    p_value: float
    n: int
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _two_sided_pass(p, alpha):
    return alpha / 2 <= p <= 1 - alpha / 2


def chi_square_uniformity(samples, bins: int = 1000, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Pearson chi-square of binned samples against the uniform law.

    The test is two-sided: a suspiciously perfect fit fails as well.
    """
    x = np.asarray(samples, dtype=float)
    if bins < 2:
        raise InvalidInputError("need at least 2 bins")
    if x.size < 10 * bins:
        raise InvalidInputError(f"{x.size} samples is too few for {bins} bins (need {10 * bins})")
    counts = np.bincount(np.minimum((x * bins).astype(np.int64), bins - 1), minlength=bins)
    expected = x.size / bins
    stat = float(np.sum((counts - expected) ** 2) / expected)
    p = float(_st.chi2.sf(stat, bins - 1))
    return TestReport("chi_square", stat, p, int(x.size), _two_sided_pass(p, alpha),
                      {"bins": bins, "alpha": alpha})


def serial_correlation(samples, lag: int = 1, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Pearson correlation between x[:-lag] and x[lag:]; p-value from the
    normal approximation z = r sqrt(n - lag)."""
    x = np.asarray(samples, dtype=float)
    if lag < 0:
        raise InvalidInputError("lag must be >= 0")
    if x.size <= lag + 2:
        raise InvalidInputError("sequence too short for this lag")
    if np.ptp(x) == 0:
        raise InvalidInputError("zero-variance sequence")
    if lag == 0:
        r = 1.0
    else:
        a, b = x[:-lag], x[lag:]
        a = a - a.mean()
        b = b - b.mean()
        den = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
        if den == 0:
            raise InvalidInputError("zero-variance sequence")
        r = float(np.dot(a, b)) / den
    m = x.size - lag
    p = 1.0 if lag == 0 else float(2 * _st.norm.sf(abs(r) * math.sqrt(m)))
    return TestReport("serial_correlation", r, p, int(x.size), lag == 0 or p >= alpha,
                      {"lag": lag, "alpha": alpha})


@dataclass
class Discrepancy:
    lower: float
    upper: float
    n: int
    dim: int
    exact: bool


def star_discrepancy_1d(x) -> float:
    xs = np.sort(np.asarray(x, dtype=float).ravel())
    n = xs.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - xs), np.max(xs - (i - 1) / n)))


def star_discrepancy(points, grid: int | None = None) -> Discrepancy:
    """Star discrepancy of points in [0,1)^dim.

    dim 1: exact. dim 2-3: with g grid steps per axis, every anchored box
    [0, x) lies between grid boxes [0, a) and [0, b) whose corners differ by
    one step per axis, giving
    ``lower = max |C(b)/n - vol(b)|`` over grid corners and
    ``upper = max(C(b)/n - vol(a), vol(b) - C(a)/n)``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, dim = pts.shape
    if n == 0:
        raise InvalidInputError("empty point set")
    if dim == 1:
        d = star_discrepancy_1d(pts[:, 0])
        return Discrepancy(d, d, n, 1, True)
    if dim > 3:
        raise InvalidInputError("dimension must be 1, 2 or 3")
    if n > 10 ** 5:
        raise InvalidInputError("at most 1e5 points for dim > 1")
    if grid is None:
        grid = {2: 256, 3: 48}[dim]
    edges = np.linspace(0.0, 1.0, grid + 1)
    hist, _ = np.histogramdd(pts, bins=[edges] * dim)
    cum = hist
    for ax in range(dim):
        cum = np.cumsum(cum, axis=ax)
    # C[b] for corners b = (k_1, ..., k_dim)/grid, k >= 0, with C = 0 on the k=0 faces
    C = np.zeros((grid + 1,) * dim)
    C[(slice(1, None),) * dim] = cum
    C /= n
    ticks = edges
    vol = ticks
    for _ in range(dim - 1):
        vol = np.multiply.outer(vol, ticks)
    lower = float(np.max(np.abs(C - vol)))
    hi = (slice(1, None),) * dim
    lo = (slice(None, -1),) * dim
    upper = float(max(np.max(C[hi] - vol[lo]), np.max(vol[hi] - C[lo])))
    return Discrepancy(lower, max(upper, lower), n, dim, False)


# --- generator comparison --------------------------------------------------

@dataclass
class GeneratorConfig:
    family: str
    N: int = 2
    s: int = 0
    seed: str = "01"

    @property
    def label(self):
        if self.family == "mixmax":
            return f"mixmax({self.N},{self.s})"
        return self.family

    def matrix(self):
        if self.family == "mixmax":
            return build_mixmax(self.N, self.s)
        if self.family == "cat":
            return cat_map()
        if self.family == "rcarry":
            return rcarry_companion()
        raise InvalidInputError(f"unknown generator family {self.family!r}")


@dataclass
class BatteryConfig:
    samples: int = 100_000
    bins: int = 100
    lags: tuple = (1, 2)
    alpha: float = DEFAULT_ALPHA
    discrepancy_points: int = 4096
    discrepancy_dims: tuple = (1, 2)
    discrepancy_budgets: tuple = ()


def generator_samples(cfg: GeneratorConfig, count: int) -> np.ndarray:
    m = cfg.matrix()
    st = seed_state(m.n, bytes.fromhex(cfg.seed))
    out, _ = fill(st, count, m)
    return out


def _tuples(x, dim, npts):
    k = min(npts, x.size // dim)
    return x[: k * dim].reshape(k, dim)


def compare_generators(configs, battery: BatteryConfig | None = None) -> list[dict]:
    """One row per generator: spectral invariants plus battery results.

    Rows come back sorted by h, largest first.
    """
    from .entropy import entropy, r2_split, r_tuple
    from .spectrum import eigenvalues_numeric
    import warnings

    if len(configs) < 2:
        raise InvalidInputError("need at least two generator configs")
    battery = battery or BatteryConfig()
    rows = []
    for cfg in configs:
        m = cfg.matrix()
        spec = eigenvalues_numeric(m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r2t = r_tuple(spec, 2).value
            r2s = r2_split(spec).value
        x = generator_samples(cfg, battery.samples)
        tests = [chi_square_uniformity(x, battery.bins, battery.alpha)]
        tests += [serial_correlation(x, lag, battery.alpha) for lag in battery.lags]
        disc = {}
        for dim in battery.discrepancy_dims:
            d = star_discrepancy(_tuples(x, dim, battery.discrepancy_points))
            disc[f"D{dim}"] = [d.lower, d.upper]
        growth = []
        for budget in battery.discrepancy_budgets:
            d = star_discrepancy(_tuples(x, 2, budget))
            growth.append([budget, d.lower, d.upper])
        rows.append(dict(generator=cfg.label, N=m.n, h=entropy(spec), r2_tuple=r2t,
                         r2_split=r2s, tests_passed=sum(t.passed for t in tests),
                         tests_run=len(tests), tests=[t.to_dict() for t in tests],
                         discrepancy=disc, discrepancy_growth=growth))
    rows.sort(key=lambda r: -r["h"])
    return rows
