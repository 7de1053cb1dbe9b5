"""Flow-based numerical Lie derivatives.

Everything here works from point values only: the field is integrated with
fixed-step RK4, the flow Jacobian comes from central differences of the
flow map, and the Lie derivative is the t -> 0 limit of the pulled-back
field, taken as a symmetric difference quotient at t and t/2 and combined
by Richardson extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .expr import compile_exprs, DomainError
from .geometry import Chart, FrameField, VectorFieldExpr

__all__ = [
    "FlowConfig", "FlowDomainError", "FlowProbe", "field_function", "frame_functions", "flow_map", "flow_jacobian",
    "numeric_lie_tensor", "numeric_natural_lift", "parallel_transport_spinor",
    "convergence_order", "richardson_gain", "limit_quotient", "holonomy_closed_form",
]


class FlowDomainError(ValueError):
    pass


@dataclass(frozen=True)
class FlowConfig:
    t: float = 0.0025  # balances t^4 truncation against Jacobian noise / t
    steps: int = 16
    h: float = 1e-5  # Jacobian finite-difference step, scaled by |x_i|

    def __post_init__(self):
        if self.t == 0:
            raise ValueError("flow parameter t must be non-zero")
        if self.steps < 8:
            raise ValueError("RK4 needs at least 8 steps")


def field_function(xi: VectorFieldExpr, coords: Sequence[str]) -> Callable[[np.ndarray], np.ndarray]:
    fn = compile_exprs(list(xi.components), list(coords))

    def f(x: np.ndarray) -> np.ndarray:
        try:
            return np.asarray(fn(tuple(x)), dtype=float)
        except DomainError as exc:
            raise FlowDomainError(f"vector field not evaluable at {list(x)}: {exc}") from None

    return f


def _rk4(f, y: np.ndarray, t: float, steps: int) -> np.ndarray:
    dt = t / steps
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise FlowDomainError("trajectory left the evaluable domain")
    return y


def flow_map(xi, x, t: float, steps: int, coords: Sequence[str] | None = None) -> np.ndarray:
    """phi_t(x) by fixed-step RK4.  ``xi`` is a VectorFieldExpr or a callable."""
    f = xi if callable(xi) else field_function(xi, coords)
    return _rk4(f, np.asarray(x, dtype=float), t, steps)


def flow_jacobian(f, x: np.ndarray, t: float, steps: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(phi_t(x), D phi_t(x)) with the Jacobian by central differences."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    J = np.empty((m, m))
    for j in range(m):
        hj = h * max(1.0, abs(x[j]))
        dx = np.zeros(m)
        dx[j] = hj
        J[:, j] = (_rk4(f, x + dx, t, steps) - _rk4(f, x - dx, t, steps)) / (2 * hj)
    return _rk4(f, x, t, steps), J


def limit_quotient(pullback: Callable[[float], np.ndarray], t: float,
                   extrapolate: bool = True) -> np.ndarray:
    """d/dt pullback(t) at 0 from symmetric quotients at t and t/2."""
    def quotient(s):
        return (pullback(s) - pullback(-s)) / (2 * s)

    q1 = quotient(t)
    if not extrapolate:
        return q1
    q2 = quotient(t / 2)
    return (4 * q2 - q1) / 3


def _pull_tensor(values: np.ndarray, J: np.ndarray, upper: int, lower: int, weight: float) -> np.ndarray:
    out = np.asarray(values, dtype=float)
    Jinv = np.linalg.inv(J)
    for slot in range(upper + lower):
        M = Jinv if slot < upper else J.T
        # contract M[new, old] with the tensor's axis `slot`
        out = np.moveaxis(np.tensordot(M, out, axes=([1], [slot])), 0, slot)
    if weight:
        out = out * abs(np.linalg.det(J)) ** weight
    return out


class FlowProbe:
    """Flow samples of one field at one point, shared by several pullbacks.

    The flow and its Jacobian at each parameter value are computed once, so
    the Lie derivatives of several objects along the same field cost little
    more than one.
    """

    def __init__(self, xi, chart: Chart, x, config: FlowConfig = FlowConfig()):
        self.f = xi if callable(xi) else field_function(xi, chart.coords)
        self.chart = chart
        self.x = np.asarray(x, dtype=float)
        self.config = config
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def sample(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        if s not in self._cache:
            y, J = flow_jacobian(self.f, self.x, s, self.config.steps, self.config.h)
            if np.linalg.cond(J) > 1e12:
                raise FlowDomainError(f"ill-conditioned flow Jacobian at {list(self.x)}")
            self._cache[s] = (y, J)
        return self._cache[s]

    def lie_tensor(self, tensor: Callable[[np.ndarray], np.ndarray], upper: int = 0, lower: int = 0,
                   weight: float = 0.0, extrapolate: bool = True) -> np.ndarray:
        def pullback(s):
            y, J = self.sample(s)
            return _pull_tensor(tensor(y), J, upper, lower, weight)
        return limit_quotient(pullback, self.config.t, extrapolate)

    def natural_lift(self, frame_fn, coframe_fn, extrapolate: bool = True) -> np.ndarray:
        m = self.chart.m
        E0 = np.array(frame_fn(tuple(self.x))).reshape(m, m)

        def pullback(s):
            y, J = self.sample(s)
            theta = np.array(coframe_fn(tuple(y))).reshape(m, m)
            # M[a, b] = theta^a_rho(phi_s x) J^rho_nu e_b^nu(x)
            return theta @ J @ E0.T
        return limit_quotient(pullback, self.config.t, extrapolate)


def numeric_lie_tensor(xi: VectorFieldExpr, tensor: Callable[[np.ndarray], np.ndarray], chart: Chart,
                       x, config: FlowConfig = FlowConfig(), upper: int = 0, lower: int = 0,
                       weight: float = 0.0, extrapolate: bool = True) -> np.ndarray:
    """Lie derivative of a (weighted) tensor field at x from its flow pullback.

    ``tensor(point)`` returns the components with the upper indices first.
    A density of weight w picks up the factor |det J|^w.
    """
    return FlowProbe(xi, chart, x, config).lie_tensor(tensor, upper, lower, weight, extrapolate)


def frame_functions(F: FrameField):
    """Compiled (frame, coframe) evaluators for a symbolic frame."""
    c = list(F.chart.coords)
    return (compile_exprs(list(F.frame.reshape(-1)), c),
            compile_exprs(list(F.coframe.reshape(-1)), c))


def numeric_natural_lift(xi: VectorFieldExpr, F: FrameField, x, config: FlowConfig = FlowConfig(),
                         extrapolate: bool = True) -> np.ndarray:
    """(L xi)^a_b at x: push each frame vector along the flow, read it in the frame there."""
    frame_fn, coframe_fn = frame_functions(F)
    return FlowProbe(xi, F.chart, x, config).natural_lift(frame_fn, coframe_fn, extrapolate)


def parallel_transport_spinor(psi0, xi: VectorFieldExpr, omega, R, chart: Chart, x0, t: float,
                              steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Transport spinor values along the flow line of xi from x0.

    Solves dpsi/dt = +1/4 (dx^mu/dt) omega_{mu ab} gamma^a gamma^b psi
    together with dx/dt = xi(x).  Returns (end point, transported spinor).
    """
    m = chart.m
    f = field_function(xi, chart.coords)
    om = compile_exprs(list(omega.omega.reshape(-1)), list(chart.coords))
    pairs = np.array([R.product(a, b) for a in range(m) for b in range(m)])  # (m*m, N, N)

    def rhs(state: np.ndarray) -> np.ndarray:
        x = state[:m].real
        psi = state[m:]
        v = f(x)
        w = np.array(om(tuple(x))).reshape(m, m, m)
        coeff = np.tensordot(v, w, axes=([0], [0])).reshape(m * m)
        S = 0.25 * np.tensordot(coeff, pairs, axes=([0], [0]))
        return np.concatenate([v.astype(complex), S @ psi])

    state = np.concatenate([np.asarray(x0, dtype=complex), np.asarray(psi0, dtype=complex)])
    dt = t / steps
    for _ in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(state)):
        raise FlowDomainError("trajectory left the evaluable domain")
    return state[:m].real, state[m:]


def convergence_order(xi: VectorFieldExpr, coords, x, t: float, steps: int = 8) -> float:
    """log2 of the step-halving error ratio of RK4 (about 4 for smooth fields)."""
    f = field_function(xi, coords)
    y1 = _rk4(f, np.asarray(x, float), t, steps)
    y2 = _rk4(f, np.asarray(x, float), t, 2 * steps)
    y4 = _rk4(f, np.asarray(x, float), t, 4 * steps)
    e1 = np.max(np.abs(y1 - y2))
    e2 = np.max(np.abs(y2 - y4))
    if e2 == 0 or e1 == 0:
        return float("inf")
    return float(np.log2(e1 / e2))


def richardson_gain(raw: np.ndarray, extrapolated: np.ndarray, exact: np.ndarray) -> tuple[float, float]:
    """Errors (raw, extrapolated) against an exact value."""
    return float(np.max(np.abs(raw - exact))), float(np.max(np.abs(extrapolated - exact)))


def holonomy_closed_form(omega_coeffs: np.ndarray, R, t: float) -> np.ndarray:
    """exp(t * 1/4 c_ab gamma^a gamma^b) for constant c_ab = xi^mu omega_{mu ab}."""
    m = R.m
    S = 0.25 * sum(omega_coeffs[a, b] * R.product(a, b) for a in range(m) for b in range(m))
    return scipy.linalg.expm(t * S)
