"""Kolmogorov entropy, extended entropies r_k, Tsallis q-entropies and an
empirical itinerary-based entropy estimator."""
from __future__ import annotations

import math
from fractions import Fraction
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import InvalidInputError, NumericError
from .matrix_core import IntegerMatrix
from .spectrum import WEDGE, Spectrum

LOG_OVERFLOW = math.log(1e300)


class EntropyWarning(UserWarning):
    pass


def _branch(spec: Spectrum, branch: str | None) -> str:
    if branch is None:
        # analytic spectra drop the divergent phi = pi point, so only the
        # contracting side is complete there
        branch = "contracting" if spec.source == "analytic" else "expanding"
    if branch not in ("expanding", "contracting"):
        raise InvalidInputError(f"unknown branch {branch!r}")
    return branch


def expanding_logs(spec: Spectrum, branch: str | None = None) -> np.ndarray:
    """h_i = ln|lambda_i| over the expanding eigenvalues, in phase order.

    With ``branch="contracting"`` the contracting eigenvalues of T are used
    as the expanding eigenvalues of T^{-1} (h_i = -ln|lambda_i|); for a
    unimodular matrix both give the same entropy.
    """
    mod = spec.moduli
    if _branch(spec, branch) == "expanding":
        return np.log(mod[mod > 1])
    return -np.log(mod[mod < 1])


def entropy(spec: Spectrum, branch: str | None = None) -> float:
    h = expanding_logs(spec, branch)
    if h.size == 0:
        raise InvalidInputError("no expanding eigenvalues: not a C-system")
    return float(np.sum(h))


def relaxation_time(h: float) -> float:
    if not h > 0:
        raise InvalidInputError(f"relaxation time needs h > 0, got {h}")
    return 1.0 / h


@dataclass
class RValue:
    order: int
    method: str
    value: float
    log_value: float
    log_domain: bool = False
    warning: str | None = None

    def to_dict(self):
        return dict(order=self.order, method=self.method,
                    value=None if self.log_domain else self.value,
                    log_value=self.log_value if math.isfinite(self.log_value) else None,
                    log_domain=self.log_domain,
                    warning=self.warning)


def log_elementary_symmetric(x: np.ndarray, kmax: int) -> np.ndarray:
    """log e_k(x) for k = 0..kmax, x > 0, by the recurrence
    e_k <- e_k + x_i e_{k-1} carried out in log space (no overflow)."""
    le = np.full(kmax + 1, -np.inf)
    le[0] = 0.0
    for lx in np.log(np.asarray(x, dtype=float)):
        le[1:] = np.logaddexp(le[1:], lx + le[:-1])
    return le


def _rvalue(order, method, log_value, warning=None):
    big = log_value > LOG_OVERFLOW
    value = math.inf if big else (math.exp(log_value) if log_value > -math.inf else 0.0)
    return RValue(order, method, value, log_value, big, warning)


LAST_ORDER_FORMS = ("ordered", "product")


def _check_last(last: str) -> None:
    if last not in LAST_ORDER_FORMS:
        raise InvalidInputError(f"unknown top-order form {last!r}")


def r_tuple_from_logs(h: np.ndarray, k: int, last: str = "ordered") -> RValue:
    """r_k = sum over ordered distinct k-tuples of prod h_ij = k! e_k(h).

    ``last="product"`` takes r_d as the single product e_d instead of d! e_d.
    """
    _check_last(last)
    d = len(h)
    if k < 2:
        raise InvalidInputError("extended entropy order must be >= 2")
    if k > d:
        msg = f"order {k} exceeds expanding count d={d}"
        warnings.warn(msg, EntropyWarning, stacklevel=3)
        return RValue(k, "tuple", 0.0, -math.inf, False, msg)
    le = log_elementary_symmetric(h, k)[k]
    if k < d or last == "ordered":
        le += math.lgamma(k + 1)
    return _rvalue(k, "tuple", float(le))


def r_tuple(spec: Spectrum, k: int, branch: str | None = None, last: str = "ordered") -> RValue:
    return r_tuple_from_logs(expanding_logs(spec, branch), k, last)


def split_sum(weights) -> float:
    """sum_m (sum_{i<m} w_i) (sum_{i>m} w_i) in O(n) via prefix sums."""
    w = np.asarray(weights, dtype=float)
    if w.size < 3:
        return 0.0
    prefix = np.cumsum(w)
    left = prefix - w
    right = prefix[-1] - prefix
    return float(np.dot(left, right))


def split_weights(spec: Spectrum, weights: str = "modulus") -> np.ndarray:
    """Phase-ordered positive weights for the split sum.

    ``modulus``: w_i = -ln|lambda_i| over the contracting eigenvalues.
    ``curve``: w_i = ln(4 cos^2(phi_i/2)) over phases inside the open wedge
    |phi| < 2 pi / 3, i.e. the moduli read off the limiting parabola.
    The two coincide on analytic spectra.
    """
    ph = spec.phases
    if weights == "modulus":
        mask = spec.moduli < 1
        w = -np.log(spec.moduli[mask])
    elif weights == "curve":
        mask = np.abs(ph) < WEDGE
        w = np.log(4 * np.cos(ph[mask] / 2) ** 2)
    else:
        raise InvalidInputError(f"unknown weights {weights!r}")
    order = np.argsort(ph[mask], kind="stable")
    return w[order]


def r2_split(spec: Spectrum, weights: str = "modulus") -> RValue:
    w = split_weights(spec, weights)
    if w.size < 3:
        msg = f"only {w.size} qualifying phases; split sum is empty"
        warnings.warn(msg, EntropyWarning, stacklevel=2)
        return RValue(2, "split", 0.0, -math.inf, False, msg)
    v = split_sum(w)
    return RValue(2, "split", v, math.log(v) if v > 0 else -math.inf)


def s_total(spec: Spectrum, branch: str | None = None, last: str = "ordered") -> RValue:
    """h + r_2 + ... + r_d with tuple-form r_k, summed in log space."""
    _check_last(last)
    h = expanding_logs(spec, branch)
    d = len(h)
    terms = [math.log(float(np.sum(h)))] if d else []
    if d >= 2:
        le = log_elementary_symmetric(h, d)
        for k in range(2, d + 1):
            terms.append(float(le[k]) + (math.lgamma(k + 1) if k < d or last == "ordered" else 0.0))
    if not terms:
        return RValue(0, "tuple", 0.0, -math.inf)
    return _rvalue(0, "tuple", float(np.logaddexp.reduce(terms)))


# --- Tsallis ---------------------------------------------------------------

def ln_q(x, q: float):
    """Deformed logarithm (x^(1-q) - 1) / (1 - q); ln x at q = 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise InvalidInputError("ln_q needs x > 0")
    if q == 1:
        out = np.log(x)
    else:
        a = 1.0 - q
        out = np.expm1(a * np.log(x)) / a
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Partition:
    measures: tuple

    def __post_init__(self):
        mu = np.asarray(self.measures, dtype=float)
        if mu.ndim != 1 or mu.size == 0:
            raise InvalidInputError("partition needs at least one cell")
        if np.any(mu < 0) or abs(mu.sum() - 1) > 1e-12:
            raise InvalidInputError("cell measures must be >= 0 and sum to 1")
        object.__setattr__(self, "measures", tuple(float(m) for m in mu))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.measures)


def partition_entropy(p: Partition) -> float:
    mu = p.array
    mu = mu[mu > 0]
    return float(-np.sum(mu * np.log(mu)))


def tsallis_partition_entropy(p: Partition, q: float, form: str = "power") -> float:
    """Tsallis entropy of a partition; empty cells contribute nothing.

    ``form="power"``: (1 - sum p^q) / (q - 1).
    ``form="lnq"``: sum p ln_q(1/p).
    """
    mu = p.array
    mu = mu[mu > 0]
    if q == 1:
        return float(-np.sum(mu * np.log(mu)))
    if form == "power":
        return float((1.0 - np.sum(mu ** q)) / (q - 1.0))
    if form == "lnq":
        return float(np.sum(mu * ln_q(1.0 / mu, q)))
    raise InvalidInputError(f"unknown form {form!r}")


def hq_spectrum(spec: Spectrum, q: float, branch: str | None = None) -> tuple[float, float]:
    """Both sides of h_q(T) = ln_q(prod |lambda_beta|).

    The right side is the nested expansion
    sum_k (1-q)^(k-1) * sum_{i1<...<ik} prod ln_q|lambda_ij|, whose last term
    is the single product over all d expanding eigenvalues.
    """
    h = expanding_logs(spec, branch)
    if h.size == 0:
        raise InvalidInputError("no expanding eigenvalues")
    return hq_from_logs(h, q)


HQ_EXACT_MAX_D = 512


def hq_from_logs(h, q: float) -> tuple[float, float]:
    h = np.asarray(h, dtype=float)
    lhs = ln_q(math.exp(float(np.sum(h))), q)
    lq = np.atleast_1d(ln_q(np.exp(h), q))
    if q > 1.0 and len(lq) > 1:
        # alternating terms cancel badly in floating point; sum them exactly
        if len(lq) > HQ_EXACT_MAX_D:
            return float(lhs), math.nan
        c = Fraction(1.0 - q)
        e = [Fraction(1)] + [Fraction(0)] * len(lq)
        for x in lq:
            fx = Fraction(float(x))
            for k in range(len(e) - 1, 0, -1):
                e[k] += fx * e[k - 1]
        total, ck = Fraction(0), Fraction(1)
        for k in range(1, len(e)):
            total += ck * e[k]
            ck *= c
        return float(lhs), float(total)
    e = np.zeros(len(lq) + 1)
    e[0] = 1.0
    for x in lq:
        e[1:] = e[1:] + x * e[:-1]
    rhs = float(sum((1.0 - q) ** (k - 1) * e[k] for k in range(1, len(lq) + 1)))
    return float(lhs), rhs


# --- report ----------------------------------------------------------------

def _finite_or_none(x):
    return float(x) if math.isfinite(x) else None


@dataclass
class EntropyReport:
    h: float
    tau0: float
    d: int
    r: list = field(default_factory=list)
    s_total: RValue | None = None
    hq: list = field(default_factory=list)
    source: str = "numeric"
    branch: str = "expanding"

    def to_dict(self):
        return dict(h=self.h, tau0=self.tau0, d=self.d,
                    r=[rv.to_dict() for rv in self.r],
                    s_total=self.s_total.to_dict() if self.s_total else None,
                    hq=[dict(q=q, value=v, expansion=e) for q, v, e in self.hq],
                    source=self.source, branch=self.branch)


def entropy_report(spec: Spectrum, orders=(2,), methods=("tuple", "split"), qs=(),
                   branch: str | None = None, split_weight: str = "modulus") -> EntropyReport:
    br = _branch(spec, branch)
    hs = expanding_logs(spec, br)
    h = entropy(spec, br)
    # orders beyond d are undefined and left out of the report
    rs = []
    for k in orders:
        if k < 2:
            raise InvalidInputError("extended entropy order must be >= 2")
        if "tuple" in methods and k <= len(hs):
            rs.append(r_tuple_from_logs(hs, k))
        if "split" in methods and k == 2 and len(split_weights(spec, split_weight)) >= 3:
            rs.append(r2_split(spec, split_weight))
    hq = []
    for q in qs:
        with np.errstate(over="ignore", invalid="ignore"):
            lhs, rhs = hq_from_logs(hs, q) if h < 700 else (math.nan, math.nan)
        hq.append((q, _finite_or_none(lhs), _finite_or_none(rhs)))
    return EntropyReport(h, relaxation_time(h), len(hs), rs, s_total(spec, br), hq,
                         spec.source, br)


# --- empirical estimator -----------------------------------------------------

_HASH_MUL = np.uint64(0x9E3779B97F4A7C15)


@dataclass
class EmpiricalEntropy:
    estimate: float
    stderr: float
    depth_used: int
    block_entropies: list
    increments: list
    occupied: list
    block_rate: float
    undersampled: bool
    samples: int


def _itinerary_counts(a: np.ndarray, grid: int, depth: int, n: int, seed) -> list:
    rng = np.random.default_rng(seed)
    u = rng.random((n, 2))
    code = np.zeros(n, dtype=np.uint64)
    out = []
    for _ in range(depth):
        cell = (np.floor(u[:, 0] * grid) * grid + np.floor(u[:, 1] * grid)).astype(np.uint64)
        code = code * _HASH_MUL + cell + np.uint64(1)
        out.append(np.unique(code, return_counts=True))
        u = (u @ a.T) % 1.0
    return out


def _merge(parts):
    codes = np.concatenate([c for c, _ in parts])
    counts = np.concatenate([k for _, k in parts])
    uniq, inv = np.unique(codes, return_inverse=True)
    return np.bincount(inv, weights=counts).astype(np.int64)


def empirical_ks_entropy(m: IntegerMatrix, grid: int = 16, depth: int = 12,
                         samples: int = 10 ** 6, seed: int = 0, chunks: int = 8,
                         workers: int = 1, min_mean_count: float = 5.0) -> EmpiricalEntropy:
    """Monte-Carlo entropy rate of the grid partition under u -> m u mod 1.

    Itineraries of uniform samples through a ``grid`` x ``grid`` partition are
    hashed and counted for every length k <= depth; block entropies H_k carry
    the Miller-Madow correction. The rate is read from the conditional
    increment H_k - H_{k-1} at the deepest k whose itineraries are still well
    sampled (on average ``min_mean_count`` samples each), so doubling
    ``depth`` past that point leaves the estimate unchanged.
    """
    if m.n != 2:
        raise InvalidInputError("empirical estimator supports 2x2 matrices only")
    if grid < 2 or depth < 2 or samples < 1:
        raise InvalidInputError("need grid >= 2, depth >= 2, samples >= 1")
    a = m.to_numpy()
    seeds = np.random.SeedSequence(seed).spawn(chunks)
    sizes = [samples // chunks + (i < samples % chunks) for i in range(chunks)]
    jobs = [(a, grid, depth, sz, sd) for sz, sd in zip(sizes, seeds) if sz]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            per_chunk = list(ex.map(lambda j: _itinerary_counts(*j), jobs))
    else:
        per_chunk = [_itinerary_counts(*j) for j in jobs]
    H, var, occ = [], [], []
    for k in range(depth):
        counts = _merge([pc[k] for pc in per_chunk])
        p = counts / samples
        lp = np.log(p)
        hk = float(-np.sum(p * lp))
        H.append(hk + (len(counts) - 1) / (2 * samples))
        var.append(max(float(np.sum(p * lp * lp)) - hk * hk, 0.0) / samples)
        occ.append(len(counts))
    inc = [H[0]] + [H[k] - H[k - 1] for k in range(1, depth)]
    good = [k for k in range(depth) if occ[k] * min_mean_count <= samples]
    kbest = max(good) if good else 0
    undersampled = kbest < depth - 1
    if kbest == 0:
        warnings.warn("itinerary counts undersampled at every depth", EntropyWarning, stacklevel=2)
        est, se = inc[0], math.sqrt(var[0])
    else:
        est = inc[kbest]
        se = math.sqrt(var[kbest] + var[kbest - 1])
    if undersampled:
        warnings.warn(f"itineraries undersampled beyond length {kbest + 1}", EntropyWarning, stacklevel=2)
    return EmpiricalEntropy(float(est), float(se), kbest + 1, H, inc, occ,
                            H[-1] / depth, undersampled, samples)
