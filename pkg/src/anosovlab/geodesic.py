"""Geometry of the suspension manifold built over the cat map.

Coordinates are (w1, w2, u). The metric depends on u only:

    g(u) = sum_a lambda_a^(2u) v_a v_a^T  (+ du^2),  v_a = (lambda_a, 1 - lambda_a)

with lambda_1 > 1 > lambda_2 = 1 / lambda_1. Curvature is computed from
Christoffel symbols either with closed-form u-derivatives or with central
differences of the metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericError

CAT_LAMBDA1 = (3 + math.sqrt(5)) / 2

# the automorphism's action on (w1, w2), u -> u - 1
_PULLBACK = np.array([[2.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


class FrameError(NumericError):
    pass


class AccuracyError(NumericError):
    pass


@dataclass(frozen=True)
class SuspensionPoint:
    w1: float = 0.0
    w2: float = 0.0
    u: float = 0.0
    lambda1: float = CAT_LAMBDA1

    def __post_init__(self):
        if not self.lambda1 > 1:
            raise InvalidInputError(f"lambda1 must exceed 1, got {self.lambda1}")

    @property
    def lambda2(self) -> float:
        return 1.0 / self.lambda1

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.u])


def _lams(lam1):
    return np.array([lam1, 1.0 / lam1])


def metric_derivative(u: float, lam1: float = CAT_LAMBDA1, order: int = 0) -> np.ndarray:
    """d^order g / du^order at fibre coordinate u (order 0 is g itself)."""
    g = np.zeros((3, 3))
    for lam in _lams(lam1):
        v = np.array([lam, 1.0 - lam])
        g[:2, :2] += (2 * math.log(lam)) ** order * lam ** (2 * u) * np.outer(v, v)
    if order == 0:
        g[2, 2] = 1.0
    return g


def metric_inverse(u: float, lam1: float = CAT_LAMBDA1) -> np.ndarray:
    """Closed-form g^-1. With V the matrix of rows v_a, the 2x2 block is
    V^-1 diag(lambda_a^-2u) V^-T; a generic inverse loses accuracy here
    because the block's condition number grows like lambda_1^(4|u|)."""
    lams = _lams(lam1)
    V = np.array([[lam, 1.0 - lam] for lam in lams])
    Vi = np.linalg.inv(V)
    ginv = np.zeros((3, 3))
    ginv[:2, :2] = Vi @ np.diag(lams ** (-2 * u)) @ Vi.T
    ginv[2, 2] = 1.0
    return ginv


def metric_tensor(pt: SuspensionPoint) -> np.ndarray:
    return metric_derivative(pt.u, pt.lambda1)


def metric_closed_form(pt: SuspensionPoint) -> np.ndarray:
    """The component formulas written out, kept as a cross-check."""
    l1, l2, u = pt.lambda1, pt.lambda2, pt.u
    g11 = l1 ** (2 + 2 * u) + l2 ** (2 + 2 * u)
    g12 = (1 - l1) * l1 ** (1 + 2 * u) + (1 - l2) * l2 ** (1 + 2 * u)
    g22 = (1 - l1) ** 2 * l1 ** (2 * u) + (1 - l2) ** 2 * l2 ** (2 * u)
    return np.array([[g11, g12, 0.0], [g12, g22, 0.0], [0.0, 0.0, 1.0]])


def pullback_metric(pt: SuspensionPoint) -> np.ndarray:
    """Metric seen in primed coordinates after w = J w', u = u' - 1."""
    g = metric_derivative(pt.u - 1.0, pt.lambda1)
    return _PULLBACK.T @ g @ _PULLBACK


def _dg_tensor(gp):
    """dg[s, n, r] = d_s g_nr with only the u-direction (s = 2) non-zero."""
    dg = np.zeros((3, 3, 3))
    dg[2] = gp
    return dg


def christoffel(ginv, dg):
    """Gamma^m_nr = 1/2 g^ms (d_n g_sr + d_r g_sn - d_s g_nr)."""
    t = np.einsum("nsr->snr", dg) + np.einsum("rsn->snr", dg) - dg
    return 0.5 * np.einsum("ms,snr->mnr", ginv, t)


def _christoffel_analytic(u, lam1):
    g = metric_derivative(u, lam1)
    g1 = metric_derivative(u, lam1, 1)
    g2 = metric_derivative(u, lam1, 2)
    ginv = metric_inverse(u, lam1)
    gam = christoffel(ginv, _dg_tensor(g1))
    dginv = -ginv @ g1 @ ginv
    # d_u Gamma, product rule over g^-1 and the bracket of first derivatives
    dgam = christoffel(dginv, _dg_tensor(g1)) + christoffel(ginv, _dg_tensor(g2))
    return g, gam, dgam


def _christoffel_fd(u, lam1, h):
    def gamma_at(x):
        gp = (metric_derivative(x + h, lam1) - metric_derivative(x - h, lam1)) / (2 * h)
        return christoffel(metric_inverse(x, lam1), _dg_tensor(gp))

    dgam = (gamma_at(u + h) - gamma_at(u - h)) / (2 * h)
    return metric_derivative(u, lam1), gamma_at(u), dgam


def riemann(gam, dgam_u):
    """R^r_{s m n} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}.

    ``dgam_u`` is d_u Gamma; the w-derivatives vanish.
    """
    dG = np.zeros((3, 3, 3, 3))  # dG[m, r, n, s] = d_m Gamma^r_ns
    dG[2] = dgam_u
    R = (np.einsum("mrns->rsmn", dG) - np.einsum("nrms->rsmn", dG)
         + np.einsum("rml,lns->rsmn", gam, gam) - np.einsum("rnl,lms->rsmn", gam, gam))
    return R


def frame(pt: SuspensionPoint):
    l1, l2 = pt.lambda1, pt.lambda2
    return (np.array([l1 - 1, l1, 0.0]), np.array([l2 - 1, l2, 0.0]), np.array([0.0, 0.0, 1.0]))


def sectional_curvature(Rlow, g, e, f) -> float:
    area2 = (e @ g @ e) * (f @ g @ f) - (e @ g @ f) ** 2
    if area2 <= 1e-14 * (e @ g @ e) * (f @ g @ f):
        raise FrameError("degenerate frame: |e ^ f| is ~0")
    return float(np.einsum("abcd,a,b,c,d->", Rlow, e, f, e, f) / area2)


@dataclass
class CurvatureReport:
    metric: np.ndarray
    frame: tuple
    frame_lengths: tuple
    K12: float
    K13: float
    K23: float
    R: float
    method: str
    christoffel: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return dict(metric=self.metric.tolist(), frame=[list(map(float, e)) for e in self.frame],
                    frame_lengths=list(self.frame_lengths), K12=self.K12, K13=self.K13,
                    K23=self.K23, R=self.R, method=self.method)


def _christoffel_adapted(u, lam1):
    """Metric, Gamma and d_u Gamma in eigen-coordinates (y_a = v_a . w, u),
    where g = diag(lambda_a^2u, 1) inverts exactly at any u."""
    g = _adapted_metric(u, lam1)
    g1 = _adapted_metric(u, lam1, 1)
    g2 = _adapted_metric(u, lam1, 2)
    ginv = np.diag(1.0 / np.diag(g))
    gam = christoffel(ginv, _dg_tensor(g1))
    dginv = -ginv @ g1 @ ginv
    dgam = christoffel(dginv, _dg_tensor(g1)) + christoffel(ginv, _dg_tensor(g2))
    return g, ginv, gam, dgam


def _to_adapted(lam1):
    t = np.eye(3)
    t[:2, :2] = _eigen_basis(lam1)
    return t


def _christoffel_fd_adapted(u, lam1, h):
    def gamma_at(x):
        gp = (_adapted_metric(x + h, lam1) - _adapted_metric(x - h, lam1)) / (2 * h)
        g = _adapted_metric(x, lam1)
        return christoffel(np.diag(1.0 / np.diag(g)), _dg_tensor(gp))

    dgam = (gamma_at(u + h) - gamma_at(u - h)) / (2 * h)
    g = _adapted_metric(u, lam1)
    return g, np.diag(1.0 / np.diag(g)), gamma_at(u), dgam


def curvature_report(pt: SuspensionPoint, method: str = "analytic", h_fd: float = 1e-4,
                     chart: str = "eigen") -> CurvatureReport:
    """Sectional curvatures of the frame planes and the scalar curvature.

    ``method`` picks exact or central-difference metric derivatives.
    ``chart="eigen"`` works in (y_a = v_a . w, u), where the metric is
    diagonal and full accuracy holds at any u; ``chart="w"`` uses (w1, w2, u)
    directly, whose 2x2 block has condition number ~ lambda_1^(4|u|).
    """
    if method in ("finite-difference", "fd"):
        if not 1e-6 <= h_fd <= 1e-3:
            raise InvalidInputError("finite-difference step must lie in [1e-6, 1e-3]")
        method = "finite-difference"
    elif method != "analytic":
        raise InvalidInputError(f"unknown method {method!r}")
    if chart not in ("eigen", "w"):
        raise InvalidInputError(f"unknown chart {chart!r}")
    fr = frame(pt)
    if chart == "eigen":
        if method == "analytic":
            g, ginv, gam, dgam = _christoffel_adapted(pt.u, pt.lambda1)
        else:
            g, ginv, gam, dgam = _christoffel_fd_adapted(pt.u, pt.lambda1, h_fd)
        T = _to_adapted(pt.lambda1)
        vecs = [T @ e for e in fr]
    else:
        if method == "analytic":
            g, gam, dgam = _christoffel_analytic(pt.u, pt.lambda1)
        else:
            g, gam, dgam = _christoffel_fd(pt.u, pt.lambda1, h_fd)
        ginv = metric_inverse(pt.u, pt.lambda1)
        vecs = list(fr)
    Rlow = np.einsum("ar,rsmn->asmn", g, riemann(gam, dgam))
    K12 = sectional_curvature(Rlow, g, vecs[0], vecs[1])
    K13 = sectional_curvature(Rlow, g, vecs[0], vecs[2])
    K23 = sectional_curvature(Rlow, g, vecs[1], vecs[2])
    R = float(np.einsum("ac,bd,abcd->", ginv, ginv, Rlow))
    lengths = tuple(float(e @ g @ e) for e in vecs)
    return CurvatureReport(metric_tensor(pt), fr, lengths, K12, K13, K23, R, method,
                           _christoffel_analytic(pt.u, pt.lambda1)[1])


def frame_lengths(pt: SuspensionPoint) -> tuple[float, float, float]:
    g = metric_tensor(pt)
    return tuple(float(e @ g @ e) for e in frame(pt))


def frame_lengths_closed_form(pt: SuspensionPoint) -> tuple[float, float, float]:
    d2 = (pt.lambda1 - pt.lambda2) ** 2
    return d2 * pt.lambda2 ** (2 * pt.u), d2 * pt.lambda1 ** (2 * pt.u), 1.0


def geodesic_acceleration(x, v, lam1=CAT_LAMBDA1):
    _, gam, _ = _christoffel_analytic(x[2], lam1)
    return -np.einsum("mnr,n,r->m", gam, v, v)


def printed_geodesic_acceleration(x, v, lam1=CAT_LAMBDA1):
    """Accelerations from the geodesic equations as printed in closed form,
    for comparison against the ones derived from the metric."""
    L = math.log(lam1)
    u = x[2]
    c = (lam1 - 1) * L / (lam1 + 1)
    w1, w2, ud = v
    a1 = -(2 * c * w1 * ud - 4 * c * w2 * ud)
    a2 = -(-2 * c * w2 * ud - 4 * c * w1 * ud)
    q = lam1 ** (2 * u + 2)
    a3 = -((1 - lam1 ** (4 * u + 4)) * L / q * w1 * w1
           + 2 * (1 + lam1 ** (4 * u + 3)) * (lam1 - 1) * L / q * w1 * w2
           + (1 - lam1 ** (4 * u + 2)) * (lam1 - 1) ** 2 * L / q * w2 * w2)
    return np.array([a1, a2, a3])


def printed_equation_mismatch(lam1=CAT_LAMBDA1, samples: int = 50, seed: int = 0) -> dict:
    """Max abs difference between printed and derived accelerations, per
    component, over random points and velocities."""
    rng = np.random.default_rng(seed)
    worst = np.zeros(3)
    scale = np.zeros(3)
    for _ in range(samples):
        x = np.array([0.0, 0.0, rng.uniform(-1, 1)])
        v = rng.normal(size=3)
        a = geodesic_acceleration(x, v, lam1)
        b = printed_geodesic_acceleration(x, v, lam1)
        worst = np.maximum(worst, np.abs(a - b))
        scale = np.maximum(scale, np.abs(a))
    return {"abs": worst.tolist(), "relative": (worst / np.maximum(scale, 1e-300)).tolist()}


def energy(x, v, lam1=CAT_LAMBDA1) -> float:
    """g(v, v) at x, evaluated in eigen-coordinates to avoid cancellation."""
    V = _eigen_basis(lam1)
    xi = np.concatenate([V @ np.asarray(v)[:2], [v[2]]])
    return _adapted_energy(x[2], xi, lam1)


def _eigen_basis(lam1):
    return np.array([[lam, 1.0 - lam] for lam in _lams(lam1)])


def _adapted_metric(u, lam1, order=0):
    lams = _lams(lam1)
    g = np.zeros((3, 3))
    g[0, 0], g[1, 1] = (2 * np.log(lams)) ** order * lams ** (2 * u)
    if order == 0:
        g[2, 2] = 1.0
    return g


def _adapted_energy(u, xi, lam1):
    lams = _lams(lam1)
    return float(np.sum(lams ** (2 * u) * xi[:2] ** 2) + xi[2] ** 2)


def _adapted_acceleration(u, xi, lam1):
    """-Gamma(xi, xi) for the diagonal metric diag(lambda_a^2u, 1), whose only
    symbols are Gamma^a_au = ln lambda_a and Gamma^u_aa = -ln lambda_a lambda_a^2u."""
    lams = _lams(lam1)
    logs = np.log(lams)
    out = np.empty(3)
    out[:2] = -2.0 * logs * xi[:2] * xi[2]
    out[2] = float(np.sum(logs * lams ** (2 * u) * xi[:2] ** 2))
    return out


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    energy_drift: float


def integrate_geodesic(pt: SuspensionPoint, velocity, t_end: float, dt: float,
                       max_drift: float = 1e-3) -> Trajectory:
    """Fixed-step RK4 for the geodesic equations; monitors g(x', x').

    The integration runs in eigen-coordinates (y_a = v_a . w, u), where the
    metric is diagonal and the quadratic terms do not cancel; the linear
    change of coordinates commutes with RK4, and the trajectory is returned
    in (w1, w2, u).
    """
    if t_end <= 0 or dt <= 0:
        raise InvalidInputError("t_end and dt must be positive")
    if dt > t_end / 100 * (1 + 1e-12):
        raise InvalidInputError("dt must be <= t_end / 100")
    v = np.asarray(velocity, dtype=float)
    if v.shape != (3,):
        raise InvalidInputError("velocity must be a 3-vector")
    lam1 = pt.lambda1
    V = _eigen_basis(lam1)
    to_adapted = np.eye(3)
    to_adapted[:2, :2] = V
    from_adapted = np.linalg.inv(to_adapted)
    steps = int(round(t_end / dt))
    y = to_adapted @ pt.coords
    eta = to_adapted @ v
    ys = np.empty((steps + 1, 3))
    etas = np.empty((steps + 1, 3))
    ys[0], etas[0] = y, eta
    acc = lambda yy, ee: _adapted_acceleration(yy[2], ee, lam1)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            k1x, k1v = eta, acc(y, eta)
            k2x, k2v = eta + 0.5 * dt * k1v, acc(y + 0.5 * dt * k1x, eta + 0.5 * dt * k1v)
            k3x, k3v = eta + 0.5 * dt * k2v, acc(y + 0.5 * dt * k2x, eta + 0.5 * dt * k2v)
            k4x, k4v = eta + dt * k3v, acc(y + dt * k3x, eta + dt * k3v)
            y = y + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            eta = eta + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
            if not (np.all(np.isfinite(y)) and np.all(np.isfinite(eta))):
                raise AccuracyError(f"integration diverged at t={(i + 1) * dt:.4g}; reduce dt")
            ys[i + 1], etas[i + 1] = y, eta
    e0 = _adapted_energy(ys[0, 2], etas[0], lam1)
    e1 = _adapted_energy(y[2], eta, lam1)
    drift = abs(e1 - e0) / e0 if e0 else abs(e1 - e0)
    if not drift <= max_drift:
        raise AccuracyError(f"energy drift {drift:.3g} exceeds {max_drift:g}; reduce dt")
    return Trajectory(np.linspace(0.0, steps * dt, steps + 1), ys @ from_adapted.T,
                      etas @ from_adapted.T, drift)


def geodesic_residual(traj: Trajectory, lam1: float = CAT_LAMBDA1) -> float:
    """Max |x'' + Gamma(x)(x', x')| along a trajectory, with x'' from central
    differences of the stored velocities and Gamma in (w1, w2, u)."""
    dt = traj.t[1] - traj.t[0]
    acc_fd = (traj.v[2:] - traj.v[:-2]) / (2 * dt)
    worst = 0.0
    for k in range(1, len(traj.t) - 1):
        a = geodesic_acceleration(traj.x[k], traj.v[k], lam1)
        scale = max(1.0, float(np.max(np.abs(a))))
        worst = max(worst, float(np.max(np.abs(acc_fd[k - 1] - a))) / scale)
    return worst


def transform_trajectory(traj: Trajectory) -> Trajectory:
    """Map a trajectory into primed coordinates: w' = J^-1 w, u' = u + 1."""
    jinv = np.linalg.inv(_PULLBACK)
    x = traj.x @ jinv.T + np.array([0.0, 0.0, 1.0])
    v = traj.v @ jinv.T
    return Trajectory(traj.t, x, v, traj.energy_drift)


def suspension_flow_check(t: float, which: str = "expanding", u: float = 0.0,
                          lam1: float = CAT_LAMBDA1) -> float:
    """|T^t e| / |e| for the flow u -> u + t, measured with the metric."""
    pt = SuspensionPoint(u=u, lambda1=lam1)
    e1, e2, _ = frame(pt)
    e = {"contracting": e1, "expanding": e2}.get(which)
    if e is None:
        raise InvalidInputError(f"which must be 'contracting' or 'expanding', not {which!r}")
    g0 = metric_derivative(u, lam1)
    gt = metric_derivative(u + t, lam1)
    return math.sqrt((e @ gt @ e) / (e @ g0 @ e))
