"""Charts, metrics, frames and Lie derivatives of natural objects.

Tensor components are numpy object arrays of :class:`~liespin.expr.Expr`.
Index conventions:

* ``g[mu, nu]`` metric, ``gamma[rho, mu, nu]`` Christoffel symbols;
* ``frame[a, mu] = e_a^mu`` and ``coframe[a, mu] = theta^a_mu``;
* natural lift ``L[a, b] = (L xi)^a_b``; lowered ``L_ab = eta_aa L[a, b]``;
* tensors of valence (r, s) store the r upper indices first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .expr import (Const, Expr, ZERO, ONE, apply, compile_exprs, differentiate,
                   parse, simplify)
from .liealg import SignatureMetric

__all__ = [
    "Chart", "MetricField", "VectorFieldExpr", "FrameField", "NumericFrame",
    "Connection", "LiftCoefficients", "Residual", "SingularMetricError",
    "FlavorError", "default_points", "evaluate_array", "d",
    "christoffel", "orthonormal_frame", "natural_lift_coeffs", "kosmann_coeffs",
    "penrose_coeffs", "kosmann_part", "lie_derivative_metric",
    "lie_derivative_tensor_density", "covariant_derivative_vector", "divergence",
    "killing_residual", "conformal_killing_residual", "g_killing_residual",
    "reductive_metric_lie", "frame_gradient",
]

HALF = Const(Fraction(1, 2))


class SingularMetricError(ValueError):
    pass


class FlavorError(ValueError):
    pass


@lru_cache(maxsize=200_000)
def d(e: Expr, coord: str) -> Expr:
    """Cached partial derivative."""
    return differentiate(e, coord)


def zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(ZERO)
    return out


def simplify_array(arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = simplify(arr[idx])
    return out


def evaluate_array(arr, coords: Sequence[str], points) -> np.ndarray:
    """Evaluate an object array of expressions at each point.

    Returns an array of shape ``(len(points),) + arr.shape``.
    """
    arr = np.asarray(arr, dtype=object)
    flat = [e if isinstance(e, Expr) else Const(e) for e in arr.reshape(-1)]
    fn = compile_exprs(flat, list(coords))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.array([fn(tuple(p)) for p in pts], dtype=float)
    return out.reshape((len(pts),) + arr.shape)


def default_points(lower: Sequence[float], upper: Sequence[float], n: int = 20) -> np.ndarray:
    """Deterministic quasi-random points in a box (unscrambled Halton, origin skipped)."""
    sampler = qmc.Halton(d=len(lower), scramble=False)
    sampler.fast_forward(1)
    return qmc.scale(sampler.random(n), lower, upper)


@dataclass(frozen=True)
class Chart:
    coords: tuple[str, ...]
    signature: SignatureMetric

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ValueError("chart needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"coordinate names must be distinct: {self.coords}")
        if self.signature.m != len(self.coords):
            raise ValueError(f"signature {self.signature.p},{self.signature.q} does not match "
                             f"dimension {len(self.coords)}")

    @property
    def m(self) -> int:
        return len(self.coords)

    @property
    def eta(self) -> np.ndarray:
        return self.signature.diag


def _to_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, str):
        return simplify(parse(v))
    return Const(v)


@dataclass
class VectorFieldExpr:
    components: tuple[Expr, ...]
    name: str = ""

    def __post_init__(self):
        self.components = tuple(_to_expr(c) for c in self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def check(self, chart: Chart):
        if len(self.components) != chart.m:
            raise ValueError(f"vector field {self.name!r} has {len(self.components)} "
                             f"components, chart dimension is {chart.m}")


@dataclass
class MetricField:
    chart: Chart
    g: np.ndarray

    def __post_init__(self):
        m = self.chart.m
        arr = np.empty((m, m), dtype=object)
        src = np.asarray(self.g, dtype=object)
        if src.shape != (m, m):
            raise ValueError(f"metric must be {m}x{m}, got {src.shape}")
        for i in range(m):
            for j in range(i, m):
                arr[i, j] = arr[j, i] = _to_expr(src[i, j])
        self.g = arr

    @property
    def m(self) -> int:
        return self.chart.m

    @property
    def is_diagonal(self) -> bool:
        return all(self.g[i, j].is_zero for i in range(self.m) for j in range(self.m) if i != j)

    def inverse(self) -> np.ndarray:
        return _inverse(self.g)

    def values(self, points) -> np.ndarray:
        return evaluate_array(self.g, self.chart.coords, points)

    def check(self, points) -> None:
        """Raise if g is singular or has the wrong signature at a point."""
        for x, G in zip(np.atleast_2d(points), self.values(points)):
            ev = np.linalg.eigvalsh(G)
            if np.min(np.abs(ev)) <= 1e-12 * max(1.0, np.max(np.abs(ev))):
                raise SingularMetricError(f"metric is singular at {list(x)}")
            p, q = int(np.sum(ev > 0)), int(np.sum(ev < 0))
            sig = self.chart.signature
            if (p, q) != (sig.p, sig.q):
                raise SingularMetricError(
                    f"metric has signature ({p},{q}) at {list(x)}, expected ({sig.p},{sig.q})")


def _inverse(g: np.ndarray) -> np.ndarray:
    m = g.shape[0]
    if all(g[i, j].is_zero for i in range(m) for j in range(m) if i != j):
        inv = zeros((m, m))
        for i in range(m):
            inv[i, i] = ONE / g[i, i]
        return inv
    det = _det(g)
    inv = zeros((m, m))
    for i in range(m):
        for j in range(i, m):
            minor = np.delete(np.delete(g, j, axis=0), i, axis=1)
            cof = _det(minor)
            if (i + j) % 2:
                cof = -cof
            inv[i, j] = inv[j, i] = cof / det
    return inv


def _det(a: np.ndarray) -> Expr:
    n = a.shape[0]
    if n == 0:
        return ONE
    if n == 1:
        return a[0, 0]
    total = ZERO
    for j in range(n):
        if a[0, j].is_zero:
            continue
        minor = np.delete(a[1:], j, axis=1)
        term = a[0, j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


@dataclass
class Connection:
    chart: Chart
    gamma: np.ndarray  # gamma[rho, mu, nu]

    def metricity(self, g: MetricField) -> np.ndarray:
        """Components of nabla_lambda g_{mu nu}, index order (lambda, mu, nu)."""
        m, c = self.chart.m, self.chart.coords
        out = zeros((m, m, m))
        for lam, mu, nu in itertools.product(range(m), repeat=3):
            e = d(g.g[mu, nu], c[lam])
            for rho in range(m):
                e = e - self.gamma[rho, lam, mu] * g.g[rho, nu] - self.gamma[rho, lam, nu] * g.g[mu, rho]
            out[lam, mu, nu] = e
        return out


def christoffel(g: MetricField, points=None) -> Connection:
    """Levi-Civita connection.  With ``points``, the metric is checked there first."""
    if points is not None:
        g.check(points)
    m, c = g.m, g.chart.coords
    ginv = g.inverse()
    # dg[s, mu, nu] = d_s g_{mu nu}
    dg = np.empty((m, m, m), dtype=object)
    for s, mu, nu in itertools.product(range(m), repeat=3):
        dg[s, mu, nu] = d(g.g[mu, nu], c[s])
    gamma = zeros((m, m, m))
    for rho in range(m):
        for mu in range(m):
            for nu in range(mu, m):
                e = ZERO
                for sg in range(m):
                    if ginv[rho, sg].is_zero:
                        continue
                    bracket = dg[mu, sg, nu] + dg[nu, sg, mu] - dg[sg, mu, nu]
                    e = e + ginv[rho, sg] * bracket
                gamma[rho, mu, nu] = gamma[rho, nu, mu] = HALF * e
    return Connection(g.chart, gamma)


@dataclass
class FrameField:
    chart: Chart
    frame: np.ndarray    # e[a, mu]
    coframe: np.ndarray  # theta[a, mu]

    def __post_init__(self):
        m = self.chart.m
        self.frame = _expr_matrix(self.frame, m)
        self.coframe = _expr_matrix(self.coframe, m)

    @classmethod
    def from_frame(cls, chart: Chart, frame) -> "FrameField":
        """Build a frame from e_a^mu alone; the coframe is its symbolic inverse."""
        e = _expr_matrix(frame, chart.m)
        # theta = (e^T)^-1 as e[a,mu] theta[b,mu] = delta_ab  =>  theta = inv(e)^T
        inv = _general_inverse(e)
        return cls(chart, e, inv.T.copy())

    def check(self, g: MetricField, points) -> dict[str, float]:
        """Residuals of duality and orthonormality at the points."""
        c = self.chart.coords
        E = evaluate_array(self.frame, c, points)
        T = evaluate_array(self.coframe, c, points)
        G = g.values(points)
        eta = np.diag(self.chart.eta)
        dual = max(float(np.max(np.abs(e @ t.T - np.eye(len(eta))))) for e, t in zip(E, T))
        ortho = max(float(np.max(np.abs(e @ gg @ e.T - eta))) for e, gg in zip(E, G))
        return {"duality": dual, "orthonormality": ortho}


def _expr_matrix(src, m: int) -> np.ndarray:
    src = np.asarray(src, dtype=object)
    if src.shape != (m, m):
        raise ValueError(f"expected a {m}x{m} matrix, got {src.shape}")
    out = np.empty((m, m), dtype=object)
    for idx in np.ndindex(m, m):
        out[idx] = _to_expr(src[idx])
    return out


def _general_inverse(a: np.ndarray) -> np.ndarray:
    m = a.shape[0]
    if all(a[i, j].is_zero for i in range(m) for j in range(m) if i != j):
        inv = zeros((m, m))
        for i in range(m):
            inv[i, i] = ONE / a[i, i]
        return inv
    det = _det(a)
    inv = zeros((m, m))
    for i in range(m):
        for j in range(m):
            minor = np.delete(np.delete(a, j, axis=0), i, axis=1)
            cof = _det(minor)
            if (i + j) % 2:
                cof = -cof
            inv[i, j] = cof / det
    return inv


@dataclass
class NumericFrame:
    """Pointwise orthonormal frames ``frames[k, a, mu]`` at ``points[k]``."""

    chart: Chart
    points: np.ndarray
    frames: np.ndarray

    def check(self, g: MetricField) -> float:
        eta = np.diag(self.chart.eta)
        G = g.values(self.points)
        return max(float(np.max(np.abs(e @ gg @ e.T - eta))) for e, gg in zip(self.frames, G))


def orthonormal_frame(g: MetricField, points=None):
    """Orthonormal frame for g.

    Diagonal metrics get a symbolic :class:`FrameField` with frame vector a
    along coordinate a; the diagonal signs must follow eta (plus signs
    first).  Other metrics need ``points`` and get a :class:`NumericFrame`
    from signature-aware Gram-Schmidt.
    """
    chart, m = g.chart, g.m
    eta = chart.eta
    if g.is_diagonal:
        theta = zeros((m, m))
        e = zeros((m, m))
        for a in range(m):
            norm = apply("sqrt", g.g[a, a] if eta[a] > 0 else -g.g[a, a])
            theta[a, a] = norm
            e[a, a] = ONE / norm
        frame = FrameField(chart, e, theta)
        if points is not None:
            for x, G in zip(np.atleast_2d(points), g.values(points)):
                diag = np.diag(G)
                if np.any(diag * eta <= 0):
                    raise SingularMetricError(
                        f"diagonal metric entries {diag.tolist()} at {list(x)} do not match signature "
                        f"({chart.signature.p},{chart.signature.q}) or vanish")
        return frame
    if points is None:
        raise ValueError("non-diagonal metric: sample points are required for a numeric frame")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    frames = np.array([_gram_schmidt(G, eta, x) for x, G in zip(pts, g.values(pts))])
    return NumericFrame(chart, pts, frames)


def _gram_schmidt(G: np.ndarray, eta: np.ndarray, where) -> np.ndarray:
    m = G.shape[0]
    vecs, signs = [], []
    for a in range(m):
        v = np.zeros(m)
        v[a] = 1.0
        for u, s in zip(vecs, signs):
            v = v - s * (u @ G @ v) * u
        n = float(v @ G @ v)
        if abs(n) < 1e-12:
            raise SingularMetricError(f"null vector in Gram-Schmidt at {list(where)}")
        vecs.append(v / np.sqrt(abs(n)))
        signs.append(1.0 if n > 0 else -1.0)
    plus = [v for v, s in zip(vecs, signs) if s > 0]
    minus = [v for v, s in zip(vecs, signs) if s < 0]
    if len(plus) != int(np.sum(eta > 0)):
        raise SingularMetricError(f"metric signature at {list(where)} does not match eta")
    return np.array(plus + minus)


# ---------------------------------------------------------------------------
# lifts


@dataclass
class LiftCoefficients:
    """A vector part xi^a plus an algebra part Xi_ab in a local frame."""

    xi: tuple[Expr, ...]
    Xi: np.ndarray
    flavor: str
    trace_scalar: Expr | None = None
    frame: FrameField | None = field(default=None, repr=False)

    FLAVORS = ("natural", "kosmann", "penrose", "custom")

    def __post_init__(self):
        if self.flavor not in self.FLAVORS:
            raise FlavorError(f"unknown lift flavor {self.flavor!r}")

    def mixed(self, eta: np.ndarray) -> np.ndarray:
        """Xi^a_b = eta^aa Xi_ab (plus the trace part for penrose)."""
        m = len(eta)
        out = zeros((m, m))
        for a in range(m):
            for b in range(m):
                v = self.Xi[a, b] if eta[a] > 0 else -self.Xi[a, b]
                if self.trace_scalar is not None and a == b:
                    v = v + self.trace_scalar
                out[a, b] = v
        return out

    def max_asymmetry(self, coords, points) -> float:
        """max |Xi_ab + Xi_ba| over the points."""
        m = self.Xi.shape[0]
        s = zeros((m, m))
        for a in range(m):
            for b in range(m):
                s[a, b] = self.Xi[a, b] + self.Xi[b, a]
        if all(v.is_zero for v in s.reshape(-1)):
            return 0.0
        return float(np.max(np.abs(evaluate_array(s, coords, points))))


def frame_gradient(xi: VectorFieldExpr, F: FrameField) -> np.ndarray:
    """Natural lift coefficients (L xi)^a_b of xi in the frame F."""
    m, c = F.chart.m, F.chart.coords
    xi.check(F.chart)
    L = zeros((m, m))
    for b in range(m):
        # w^rho = d_nu xi^rho e_b^nu - xi^nu d_nu e_b^rho
        w = []
        for rho in range(m):
            e = ZERO
            for nu in range(m):
                if not F.frame[b, nu].is_zero:
                    e = e + d(xi[rho], c[nu]) * F.frame[b, nu]
                e = e - xi[nu] * d(F.frame[b, rho], c[nu])
            w.append(e)
        for a in range(m):
            e = ZERO
            for rho in range(m):
                if not F.coframe[a, rho].is_zero:
                    e = e + F.coframe[a, rho] * w[rho]
            L[a, b] = e
    return L


def _frame_components(xi: VectorFieldExpr, F: FrameField) -> tuple[Expr, ...]:
    m = F.chart.m
    out = []
    for a in range(m):
        e = ZERO
        for mu in range(m):
            if not F.coframe[a, mu].is_zero:
                e = e + F.coframe[a, mu] * xi[mu]
        out.append(e)
    return tuple(out)


def _lower(L: np.ndarray, eta: np.ndarray) -> np.ndarray:
    m = len(eta)
    out = zeros((m, m))
    for a in range(m):
        for b in range(m):
            out[a, b] = L[a, b] if eta[a] > 0 else -L[a, b]
    return out


def _antisym(X: np.ndarray) -> np.ndarray:
    """X_[ab] = (X_ab - X_ba)/2, built so that Xi_ba is structurally -Xi_ab."""
    m = X.shape[0]
    out = zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            v = HALF * (X[a, b] - X[b, a])
            out[a, b] = v
            out[b, a] = -v
    return out


def natural_lift_coeffs(xi: VectorFieldExpr, F: FrameField) -> LiftCoefficients:
    eta = F.chart.eta
    L = frame_gradient(xi, F)
    return LiftCoefficients(_frame_components(xi, F), _lower(L, eta), "natural", frame=F)


def kosmann_coeffs(xi: VectorFieldExpr, F: FrameField, eta: SignatureMetric | None = None) -> LiftCoefficients:
    eta_d = (eta or F.chart.signature).diag
    L = frame_gradient(xi, F)
    return LiftCoefficients(_frame_components(xi, F), _antisym(_lower(L, eta_d)), "kosmann", frame=F)


def penrose_coeffs(xi: VectorFieldExpr, F: FrameField, eta: SignatureMetric | None = None) -> LiftCoefficients:
    eta_d = (eta or F.chart.signature).diag
    m = len(eta_d)
    L = frame_gradient(xi, F)
    trace = ZERO
    for c_ in range(m):
        trace = trace + L[c_, c_]
    return LiftCoefficients(_frame_components(xi, F), _antisym(_lower(L, eta_d)), "penrose",
                            trace_scalar=trace / m, frame=F)


def kosmann_part(lift: LiftCoefficients) -> LiftCoefficients:
    """so(p,q) projection of an arbitrary lift."""
    return LiftCoefficients(lift.xi, _antisym(lift.Xi), "kosmann", frame=lift.frame)


def vector_from_lift(lift: LiftCoefficients, F: FrameField) -> VectorFieldExpr:
    m = F.chart.m
    comps = []
    for mu in range(m):
        e = ZERO
        for a in range(m):
            if not F.frame[a, mu].is_zero:
                e = e + lift.xi[a] * F.frame[a, mu]
        comps.append(e)
    return VectorFieldExpr(tuple(comps))


# ---------------------------------------------------------------------------
# Lie derivatives of natural objects


def lie_derivative_metric(xi: VectorFieldExpr, g: MetricField) -> np.ndarray:
    """xi^rho d_rho g_{mu nu} + g_{rho mu} d_nu xi^rho + g_{rho nu} d_mu xi^rho."""
    m, c = g.m, g.chart.coords
    xi.check(g.chart)
    dxi = [[d(xi[rho], c[nu]) for nu in range(m)] for rho in range(m)]  # dxi[rho][nu]
    out = zeros((m, m))
    for mu in range(m):
        for nu in range(mu, m):
            e = ZERO
            for rho in range(m):
                e = e + xi[rho] * d(g.g[mu, nu], c[rho])
            for rho in range(m):
                e = e + g.g[rho, mu] * dxi[rho][nu] + g.g[rho, nu] * dxi[rho][mu]
            out[mu, nu] = out[nu, mu] = e
    return out


def lie_derivative_tensor_density(xi: VectorFieldExpr, T, chart: Chart, upper: int = 0,
                                  lower: int = 0, weight=0) -> np.ndarray | Expr:
    """Lie derivative of a tensor density of valence (upper, lower) and weight w.

    ``T`` holds the upper indices first.  Only ``upper + lower <= 2`` is
    supported symbolically.
    """
    rank = upper + lower
    if upper < 0 or lower < 0 or rank > 2:
        raise ValueError(f"unsupported valence ({upper},{lower}); at most 2 indices")
    m, c = chart.m, chart.coords
    xi.check(chart)
    if rank == 0:
        T = np.array(_to_expr(T) if not isinstance(T, np.ndarray) else T.reshape(()).item(), dtype=object)
        T = T.reshape(())
    else:
        src = np.asarray(T, dtype=object)
        if src.shape != (m,) * rank:
            raise ValueError(f"tensor must have shape {(m,) * rank}, got {src.shape}")
        T = np.empty(src.shape, dtype=object)
        for idx in np.ndindex(src.shape):
            T[idx] = _to_expr(src[idx])
    w = _to_expr(weight) if not isinstance(weight, Expr) else weight
    dxi = [[d(xi[rho], c[nu]) for nu in range(m)] for rho in range(m)]
    div = ZERO
    for rho in range(m):
        div = div + dxi[rho][rho]
    out = np.empty(T.shape, dtype=object)
    for idx in np.ndindex(T.shape):
        e = ZERO
        for rho in range(m):
            e = e + xi[rho] * d(T[idx], c[rho])
        for slot in range(rank):
            for rho in range(m):
                moved = list(idx)
                moved[slot] = rho
                if slot < upper:
                    e = e - T[tuple(moved)] * dxi[idx[slot]][rho]
                else:
                    e = e + T[tuple(moved)] * dxi[rho][idx[slot]]
        if not w.is_zero:
            e = e + w * div * T[idx]
        out[idx] = e
    return out.reshape(()).item() if rank == 0 else out


def covariant_derivative_vector(xi: VectorFieldExpr, conn: Connection) -> np.ndarray:
    """nabla[mu, rho] = d_mu xi^rho + Gamma^rho_{mu s} xi^s."""
    m, c = conn.chart.m, conn.chart.coords
    out = zeros((m, m))
    for mu in range(m):
        for rho in range(m):
            e = d(xi[rho], c[mu])
            for s in range(m):
                if not conn.gamma[rho, mu, s].is_zero:
                    e = e + conn.gamma[rho, mu, s] * xi[s]
            out[mu, rho] = e
    return out


def divergence(xi: VectorFieldExpr, g: MetricField, conn: Connection | None = None) -> Expr:
    conn = conn or christoffel(g)
    nab = covariant_derivative_vector(xi, conn)
    e = ZERO
    for mu in range(g.m):
        e = e + nab[mu, mu]
    return e


@dataclass
class Residual:
    matrix: np.ndarray
    max_norm: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_norm <= self.tol

    def to_json(self) -> dict:
        return {"max_norm": self.max_norm, "tol": self.tol, "ok": self.ok}


def _max_norm(arr: np.ndarray, coords, points) -> float:
    if all(isinstance(e, Expr) and e.is_zero for e in arr.reshape(-1)):
        return 0.0
    return float(np.max(np.abs(evaluate_array(arr, coords, points))))


def killing_residual(xi: VectorFieldExpr, g: MetricField, points, tol: float = 1e-9) -> Residual:
    R = simplify_array(lie_derivative_metric(xi, g))
    return Residual(R, _max_norm(R, g.chart.coords, points), tol)


def conformal_killing_residual(xi: VectorFieldExpr, g: MetricField, points, tol: float = 1e-9,
                               conn: Connection | None = None) -> Residual:
    m = g.m
    lg = lie_derivative_metric(xi, g)
    factor = Const(Fraction(2, m)) * divergence(xi, g, conn)
    R = zeros((m, m))
    for mu in range(m):
        for nu in range(m):
            R[mu, nu] = simplify(lg[mu, nu] - factor * g.g[mu, nu])
    return Residual(R, _max_norm(R, g.chart.coords, points), tol)


def g_killing_residual(xi: VectorFieldExpr, F: FrameField, group: str, points,
                       eta: SignatureMetric | None = None, tol: float = 1e-9) -> Residual:
    """Natural lift minus its projection onto the group's algebra.

    so  -> symmetric part of (L xi)_ab
    cso -> traceless symmetric part
    gl  -> zero
    """
    group = group.lower()
    if group not in ("so", "cso", "gl"):
        raise ValueError(f"unknown group {group!r}; expected so, cso or gl")
    eta_d = (eta or F.chart.signature).diag
    m = len(eta_d)
    if group == "gl":
        return Residual(zeros((m, m)), 0.0, tol)
    Ll = _lower(frame_gradient(xi, F), eta_d)
    S = zeros((m, m))
    for a in range(m):
        for b in range(m):
            S[a, b] = HALF * (Ll[a, b] + Ll[b, a])
    if group == "cso":
        tr = ZERO
        for c_ in range(m):
            tr = tr + (Ll[c_, c_] if eta_d[c_] > 0 else -Ll[c_, c_])
        tr = tr / m
        for a in range(m):
            S[a, a] = S[a, a] - (tr if eta_d[a] > 0 else -tr)
    S = simplify_array(S)
    return Residual(S, _max_norm(S, F.chart.coords, points), tol)


def reductive_metric_lie(lift: LiftCoefficients, g: MetricField, F: FrameField) -> np.ndarray:
    """SO(p,q)-reductive Lie derivative of the metric along a Kosmann lift.

    Uses the coordinate form of the vertical part,
    (xi_K)^rho_nu = e_a^rho K^a_b theta^b_nu + xi^s d_s e_b^rho theta^b_nu,
    and returns xi^rho d_rho g_{mu nu} + 2 g_{rho(mu} (xi_K)^rho_{nu)}.
    Vanishes identically for every xi.
    """
    if lift.flavor != "kosmann":
        raise FlavorError(f"reductive metric Lie derivative needs a kosmann lift, got {lift.flavor!r}")
    m, c = g.m, g.chart.coords
    eta_d = F.chart.eta
    xi = vector_from_lift(lift, F)
    K = lift.mixed(eta_d)
    A = zeros((m, m))  # (xi_K)^rho_nu
    for rho in range(m):
        for nu in range(m):
            e = ZERO
            for a in range(m):
                if F.frame[a, rho].is_zero:
                    continue
                for b in range(m):
                    if not F.coframe[b, nu].is_zero:
                        e = e + F.frame[a, rho] * K[a, b] * F.coframe[b, nu]
            for b in range(m):
                if F.coframe[b, nu].is_zero:
                    continue
                transport = ZERO
                for s in range(m):
                    transport = transport + xi[s] * d(F.frame[b, rho], c[s])
                e = e + transport * F.coframe[b, nu]
            A[rho, nu] = e
    out = zeros((m, m))
    for mu in range(m):
        for nu in range(mu, m):
            e = ZERO
            for rho in range(m):
                e = e + xi[rho] * d(g.g[mu, nu], c[rho])
            for rho in range(m):
                e = e + g.g[rho, mu] * A[rho, nu] + g.g[rho, nu] * A[rho, mu]
            out[mu, nu] = out[nu, mu] = e
    return out
