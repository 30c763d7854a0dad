"""Large-N entropy integrals and the closed-form N-scaling predictions."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericError

WEDGE = 2 * math.pi / 3

# 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1]
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int


def _gk15(f, a, b):
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    fx = f(c + h * _NODES)
    k = h * np.dot(_KW, fx)
    g = h * np.dot(_GW, fx)
    return k, abs(k - g)


def gauss_kronrod(f, a: float, b: float, tol: float = 1e-10, max_intervals: int = 5000) -> QuadratureResult:
    """Globally adaptive G7-K15 quadrature of a vectorised ``f`` over [a, b].

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``tol``. Integrable endpoint singularities are fine
    since the nodes never touch the endpoints.
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    v, e = _gk15(f, a, b)
    heap = [(-e, a, b, v)]
    total_v, total_e, evals = v, e, 15
    while total_e > tol:
        if len(heap) >= max_intervals:
            raise NumericError(f"quadrature did not reach tol={tol:g} within {max_intervals} intervals")
        ne, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        evals += 30
        total_v += v1 + v2 - val
        total_e += e1 + e2 + ne
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
    # re-sum to shed accumulated rounding from the running updates
    total_v = math.fsum(item[3] for item in heap)
    total_e = math.fsum(-item[0] for item in heap)
    return QuadratureResult(total_v, total_e, evals)


def log_weight(phi):
    """ln(4 cos^2(phi/2)); clamped at 0 just inside the wedge edges."""
    phi = np.asarray(phi, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(4 * np.cos(phi / 2) ** 2)
    near_edge = np.abs(np.abs(phi) - WEDGE) < 1e-15
    return np.where(near_edge & (np.abs(phi) <= WEDGE), np.maximum(out, 0.0), out)


def entropy_integral_constant(tol: float = 1e-12, lo: float = -WEDGE, hi: float = WEDGE) -> QuadratureResult:
    """Integral of ln(4 cos^2(phi/2)) over [lo, hi] (the wedge by default).

    h(T) ~ constant * N / (2 pi) for the MIXMAX family.
    """
    if tol < 1e-13:
        raise InvalidInputError("tol must be >= 1e-13")
    return gauss_kronrod(log_weight, lo, hi, tol)


def r2_integral_constant(tol: float = 1e-8) -> QuadratureResult:
    """Outer integral over the wedge of L(phi) * R(phi), with
    L(phi) = int_{-2pi/3}^{phi} and R(phi) = int_{phi}^{2pi/3} of ln(4cos^2/2).

    Each outer node evaluates both inner partial integrals by their own
    adaptive quadrature. With the dphi/2pi measure inside and out the N^3
    integral equals this constant times (N/2pi)^3.
    """
    if tol < 1e-8:
        raise InvalidInputError("tol must be >= 1e-8")
    inner_tol = tol * 1e-2
    inner_evals = [0]

    def partial(a, b):
        res = gauss_kronrod(log_weight, a, b, inner_tol)
        inner_evals[0] += res.evaluations
        return res.value

    def integrand(phis):
        return np.array([partial(-WEDGE, p) * partial(p, WEDGE) for p in phis])

    outer = gauss_kronrod(integrand, -WEDGE, WEDGE, tol)
    return QuadratureResult(outer.value, outer.abs_error_estimate + 2 * inner_tol * 4.06,
                            outer.evaluations + inner_evals[0])


def inner_partials(phi: float, tol: float = 1e-12) -> tuple[float, float]:
    left = gauss_kronrod(log_weight, -WEDGE, phi, tol).value
    right = gauss_kronrod(log_weight, phi, WEDGE, tol).value
    return left, right


_CONSTANTS: dict = {}


def constants() -> tuple[float, float]:
    if not _CONSTANTS:
        _CONSTANTS["h"] = entropy_integral_constant(1e-12).value
        _CONSTANTS["r2"] = r2_integral_constant(1e-8).value
    return _CONSTANTS["h"], _CONSTANTS["r2"]


def predict(N: float) -> tuple[float, float]:
    """(h, r_2) predicted from the integral constants for dimension N."""
    if N < 2 and not math.isclose(N, 2 * math.pi):
        raise InvalidInputError("N must be >= 2")
    ch, cr = constants()
    x = N / (2 * math.pi)
    return ch * x, cr * x ** 3
