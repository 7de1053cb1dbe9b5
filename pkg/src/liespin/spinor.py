"""Dirac matrices, spin connection and Lie derivatives of spinor fields.

Spinor components are pairs of real expressions (real part, imaginary
part).  Constant complex matrices act on them through
:func:`apply_matrix`.

Sign convention: the spin connection is
``omega_mu^a_b = theta^a_nu (d_mu e_b^nu + Gamma^nu_{mu s} e_b^s)`` and the
spinor covariant derivative is
``nabla_a psi = e_a^mu (d_mu psi - 1/4 omega_{mu bc} gamma^b gamma^c psi)``.
This is the sign for which the natural-lift form of the Kosmann derivative
and its covariant form agree.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .expr import Const, Expr, ZERO, simplify
from .geometry import (Chart, Connection, FlavorError, FrameField, LiftCoefficients,
                       MetricField, VectorFieldExpr, _to_expr, christoffel,
                       covariant_derivative_vector, d, evaluate_array, kosmann_coeffs,
                       zeros)
from .liealg import SignatureMetric

__all__ = [
    "GammaRep", "SpinorFieldExpr", "SpinConnection", "KosmannResult",
    "KosmannMismatchError", "ExperimentalWarning", "build_gamma", "spin_connection",
    "spinor_cov_derivative", "lie_spinor_general", "lie_spinor_kosmann",
    "lie_spinor_penrose", "apply_matrix", "frame_covariant_gradient",
]

QUARTER = Const(Fraction(1, 4))

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class KosmannMismatchError(AssertionError):
    pass


class ExperimentalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GammaRep:
    signature: SignatureMetric
    gammas: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return self.signature.m

    @property
    def N(self) -> int:
        return self.gammas[0].shape[0]

    def clifford_residual(self) -> float:
        """max over (a, b) of |{gamma^a, gamma^b} - 2 eta^ab I|, entrywise."""
        eta = self.signature.diag
        I = np.eye(self.N)
        worst = 0.0
        for a, b in itertools.product(range(self.m), repeat=2):
            ga, gb = self.gammas[a], self.gammas[b]
            target = 2 * eta[a] * I if a == b else 0.0
            worst = max(worst, float(np.max(np.abs(ga @ gb + gb @ ga - target))))
        return worst

    def product(self, a: int, b: int) -> np.ndarray:
        return self.gammas[a] @ self.gammas[b]

    def to_json(self) -> list:
        return [[[[float(z.real), float(z.imag)] for z in row] for row in g] for g in self.gammas]


def _kron(*ms):
    return reduce(np.kron, ms)


def build_gamma(p: int, q: int) -> GammaRep:
    """Clifford generators with gamma^a gamma^b + gamma^b gamma^a = 2 eta^ab.

    (1,3) gets the chiral (Weyl) basis.  Other signatures use Pauli tensor
    products for m Hermitian generators squaring to +1, then multiply the
    last q of them by i.
    """
    sig = SignatureMetric(p, q)
    m = sig.m
    if m % 2 or m > 6:
        raise ValueError(f"signature ({p},{q}): need even dimension m <= 6, got m={m}")
    if (p, q) == (1, 3):
        Z2 = np.zeros((2, 2), dtype=complex)
        g0 = np.block([[Z2, _I2], [_I2, Z2]])
        gk = [np.block([[Z2, s], [-s, Z2]]) for s in (_X, _Y, _Z)]
        return GammaRep(sig, (g0, *gk))
    k = m // 2
    herm = []
    for j in range(k):
        left = [_Z] * j
        right = [_I2] * (k - j - 1)
        herm.append(_kron(*left, _X, *right))
        herm.append(_kron(*left, _Y, *right))
    gammas = tuple(g if a < p else 1j * g for a, g in enumerate(herm))
    return GammaRep(sig, gammas)


def _exact(x: float) -> Const:
    return Const(Fraction(x).limit_denominator(1 << 20) if abs(x - round(x * 1024) / 1024) < 1e-15 else x)


def apply_matrix(M: np.ndarray, re, im, scale: Expr | None = None):
    """(re + i im) -> scale * M (re + i im), componentwise expressions."""
    n = M.shape[0]
    out_re, out_im = [], []
    for r in range(n):
        er, ei = ZERO, ZERO
        for c in range(n):
            z = M[r, c]
            if z.real != 0:
                cr = _exact(z.real)
                er = er + cr * re[c]
                ei = ei + cr * im[c]
            if z.imag != 0:
                ci = _exact(z.imag)
                er = er - ci * im[c]
                ei = ei + ci * re[c]
        if scale is not None:
            er, ei = scale * er, scale * ei
        out_re.append(er)
        out_im.append(ei)
    return out_re, out_im


@dataclass
class SpinorFieldExpr:
    re: tuple[Expr, ...]
    im: tuple[Expr, ...]

    def __post_init__(self):
        self.re = tuple(_to_expr(e) for e in self.re)
        self.im = tuple(_to_expr(e) for e in self.im)
        if len(self.re) != len(self.im):
            raise ValueError("spinor real and imaginary parts differ in length")

    @property
    def N(self) -> int:
        return len(self.re)

    def check(self, R: GammaRep):
        if self.N != R.N:
            raise ValueError(f"spinor has {self.N} components, gamma representation needs {R.N}")

    def values(self, coords, points) -> np.ndarray:
        arr = np.empty((2, self.N), dtype=object)
        arr[0, :] = self.re
        arr[1, :] = self.im
        v = evaluate_array(arr, coords, points)
        return v[:, 0, :] + 1j * v[:, 1, :]

    def __add__(self, other: "SpinorFieldExpr") -> "SpinorFieldExpr":
        return SpinorFieldExpr(tuple(a + b for a, b in zip(self.re, other.re)),
                               tuple(a + b for a, b in zip(self.im, other.im)))

    def __sub__(self, other: "SpinorFieldExpr") -> "SpinorFieldExpr":
        return SpinorFieldExpr(tuple(a - b for a, b in zip(self.re, other.re)),
                               tuple(a - b for a, b in zip(self.im, other.im)))

    def scaled(self, s: Expr) -> "SpinorFieldExpr":
        return SpinorFieldExpr(tuple(s * a for a in self.re), tuple(s * a for a in self.im))

    def simplified(self) -> "SpinorFieldExpr":
        return SpinorFieldExpr(tuple(simplify(e) for e in self.re), tuple(simplify(e) for e in self.im))

    def to_json(self) -> dict:
        return {"re": [str(e) for e in self.re], "im": [str(e) for e in self.im]}


@dataclass
class SpinConnection:
    chart: Chart
    omega: np.ndarray  # omega[mu, a, b], lowered frame indices

    def max_asymmetry(self, points) -> float:
        m = self.chart.m
        s = zeros((m, m, m))
        for mu, a, b in itertools.product(range(m), repeat=3):
            s[mu, a, b] = self.omega[mu, a, b] + self.omega[mu, b, a]
        if all(e.is_zero for e in s.reshape(-1)):
            return 0.0
        return float(np.max(np.abs(evaluate_array(s, self.chart.coords, points))))


def spin_connection(F: FrameField, conn: Connection, eta: SignatureMetric | None = None) -> SpinConnection:
    """omega_{mu ab} = eta_aa theta^a_nu (d_mu e_b^nu + Gamma^nu_{mu s} e_b^s)."""
    eta_d = (eta or F.chart.signature).diag
    m, c = F.chart.m, F.chart.coords
    omega = zeros((m, m, m))
    for mu in range(m):
        for b in range(m):
            # (nabla_mu e_b)^nu
            col = []
            for nu in range(m):
                e = d(F.frame[b, nu], c[mu])
                for s in range(m):
                    if not F.frame[b, s].is_zero and not conn.gamma[nu, mu, s].is_zero:
                        e = e + conn.gamma[nu, mu, s] * F.frame[b, s]
                col.append(e)
            for a in range(m):
                e = ZERO
                for nu in range(m):
                    if not F.coframe[a, nu].is_zero:
                        e = e + F.coframe[a, nu] * col[nu]
                omega[mu, a, b] = e if eta_d[a] > 0 else -e
    return SpinConnection(F.chart, omega)


def _sigma_apply(coeffs: np.ndarray, R: GammaRep, re, im, scale: Expr):
    """scale * sum_ab coeffs[a,b] gamma^a gamma^b psi for expression coefficients."""
    m, N = R.m, R.N
    acc_re, acc_im = [ZERO] * N, [ZERO] * N
    for a, b in itertools.product(range(m), repeat=2):
        cab = coeffs[a, b]
        if cab.is_zero:
            continue
        gr, gi = apply_matrix(R.product(a, b), re, im)
        acc_re = [x + cab * y for x, y in zip(acc_re, gr)]
        acc_im = [x + cab * y for x, y in zip(acc_im, gi)]
    return [scale * x for x in acc_re], [scale * x for x in acc_im]


def _pfaff(psi: SpinorFieldExpr, F: FrameField, a: int):
    """e_a psi = e_a^mu d_mu psi."""
    c = F.chart.coords
    re, im = [], []
    for comp_re, comp_im in zip(psi.re, psi.im):
        er, ei = ZERO, ZERO
        for mu in range(F.chart.m):
            if F.frame[a, mu].is_zero:
                continue
            er = er + F.frame[a, mu] * d(comp_re, c[mu])
            ei = ei + F.frame[a, mu] * d(comp_im, c[mu])
        re.append(er)
        im.append(ei)
    return re, im


def spinor_cov_derivative(psi: SpinorFieldExpr, omega: SpinConnection, R: GammaRep,
                          F: FrameField) -> list[SpinorFieldExpr]:
    """[nabla_a psi for a in range(m)]."""
    psi.check(R)
    m, c = F.chart.m, F.chart.coords
    # d_mu psi - 1/4 omega_{mu bc} gamma^b gamma^c psi
    coord = []
    for mu in range(m):
        s_re, s_im = _sigma_apply(omega.omega[mu], R, psi.re, psi.im, -QUARTER)
        coord.append(([d(e, c[mu]) + s for e, s in zip(psi.re, s_re)],
                      [d(e, c[mu]) + s for e, s in zip(psi.im, s_im)]))
    out = []
    for a in range(m):
        re, im = [ZERO] * psi.N, [ZERO] * psi.N
        for mu in range(m):
            ea = F.frame[a, mu]
            if ea.is_zero:
                continue
            re = [x + ea * y for x, y in zip(re, coord[mu][0])]
            im = [x + ea * y for x, y in zip(im, coord[mu][1])]
        out.append(SpinorFieldExpr(tuple(re), tuple(im)))
    return out


def lie_spinor_general(L: LiftCoefficients, psi: SpinorFieldExpr, R: GammaRep, F: FrameField,
                       points=None, tol: float = 1e-12) -> SpinorFieldExpr:
    """xi^a e_a psi + 1/4 Xi_ab gamma^a gamma^b psi for an so(p,q)-valued lift.

    A lift whose Xi_ab is not antisymmetric is rejected; without
    ``points`` the check must succeed structurally.
    """
    psi.check(R)
    if L.trace_scalar is not None and not (isinstance(L.trace_scalar, Expr) and L.trace_scalar.is_zero):
        raise FlavorError("general spinor Lie derivative takes so(p,q)-valued lifts; "
                          "use lie_spinor_penrose for a trace part")
    if points is None:
        asym = L.max_asymmetry(F.chart.coords, np.zeros((1, F.chart.m))) if _structurally_antisym(L.Xi) else None
        if asym is None:
            raise FlavorError("lift coefficients are not structurally antisymmetric; pass sample points")
    else:
        asym = L.max_asymmetry(F.chart.coords, points)
    if asym > tol:
        raise FlavorError(f"lift coefficients are not antisymmetric (max |Xi_ab + Xi_ba| = {asym:.3g})")
    re, im = [ZERO] * psi.N, [ZERO] * psi.N
    for a in range(F.chart.m):
        if L.xi[a].is_zero:
            continue
        pr, pi = _pfaff(psi, F, a)
        re = [x + L.xi[a] * y for x, y in zip(re, pr)]
        im = [x + L.xi[a] * y for x, y in zip(im, pi)]
    s_re, s_im = _sigma_apply(L.Xi, R, psi.re, psi.im, QUARTER)
    return SpinorFieldExpr(tuple(x + y for x, y in zip(re, s_re)),
                           tuple(x + y for x, y in zip(im, s_im)))


def _structurally_antisym(Xi: np.ndarray) -> bool:
    m = Xi.shape[0]
    return all(simplify(Xi[a, b] + Xi[b, a]).is_zero for a in range(m) for b in range(m))


def frame_covariant_gradient(xi: VectorFieldExpr, conn: Connection, F: FrameField,
                             eta: SignatureMetric | None = None) -> np.ndarray:
    """nabla_a xi_b = e_a^mu eta_bb theta^b_rho nabla_mu xi^rho."""
    eta_d = (eta or F.chart.signature).diag
    m = F.chart.m
    nab = covariant_derivative_vector(xi, conn)
    out = zeros((m, m))
    for a in range(m):
        for b in range(m):
            e = ZERO
            for mu in range(m):
                if F.frame[a, mu].is_zero:
                    continue
                for rho in range(m):
                    if not F.coframe[b, rho].is_zero:
                        e = e + F.frame[a, mu] * F.coframe[b, rho] * nab[mu, rho]
            out[a, b] = e if eta_d[b] > 0 else -e
    return out


def _covariant_form(xi: VectorFieldExpr, psi: SpinorFieldExpr, g: MetricField, F: FrameField,
                    R: GammaRep, conn: Connection):
    """xi^a nabla_a psi - 1/4 nabla_[a xi_b] gamma^a gamma^b psi, plus nabla_a xi_b."""
    m = F.chart.m
    omega = spin_connection(F, conn)
    nab_psi = spinor_cov_derivative(psi, omega, R, F)
    xi_frame = []
    for a in range(m):
        e = ZERO
        for mu in range(m):
            if not F.coframe[a, mu].is_zero:
                e = e + F.coframe[a, mu] * xi[mu]
        xi_frame.append(e)
    re, im = [ZERO] * psi.N, [ZERO] * psi.N
    for a in range(m):
        if xi_frame[a].is_zero:
            continue
        re = [x + xi_frame[a] * y for x, y in zip(re, nab_psi[a].re)]
        im = [x + xi_frame[a] * y for x, y in zip(im, nab_psi[a].im)]
    grad = frame_covariant_gradient(xi, conn, F)
    skew = zeros((m, m))
    for a in range(m):
        for b in range(m):
            skew[a, b] = Const(Fraction(1, 2)) * (grad[a, b] - grad[b, a])
    s_re, s_im = _sigma_apply(skew, R, psi.re, psi.im, -QUARTER)
    out = SpinorFieldExpr(tuple(x + y for x, y in zip(re, s_re)),
                          tuple(x + y for x, y in zip(im, s_im)))
    return out, grad


@dataclass
class KosmannResult:
    value: SpinorFieldExpr        # natural-lift form
    covariant: SpinorFieldExpr    # Levi-Civita form
    discrepancy: float

    def values(self, coords, points) -> np.ndarray:
        return self.value.values(coords, points)


def lie_spinor_kosmann(xi: VectorFieldExpr, psi: SpinorFieldExpr, g: MetricField, F: FrameField,
                       R: GammaRep, points, tol: float = 1e-9,
                       conn: Connection | None = None) -> KosmannResult:
    """Kosmann Lie derivative, computed from the Kosmann lift and from nabla.

    Raises :class:`KosmannMismatchError` when the two forms differ by more
    than ``tol`` at any of the points.
    """
    psi.check(R)
    conn = conn or christoffel(g)
    lifted = lie_spinor_general(kosmann_coeffs(xi, F), psi, R, F)
    covariant, _ = _covariant_form(xi, psi, g, F, R, conn)
    coords = F.chart.coords
    gap = float(np.max(np.abs(lifted.values(coords, points) - covariant.values(coords, points))))
    if gap > tol:
        raise KosmannMismatchError(f"Kosmann derivative forms disagree by {gap:.3g} (tol {tol:g})")
    return KosmannResult(lifted, covariant, gap)


def lie_spinor_penrose(xi: VectorFieldExpr, psi: SpinorFieldExpr, g: MetricField, F: FrameField,
                       R: GammaRep, conn: Connection | None = None) -> SpinorFieldExpr:
    """xi^a nabla_a psi - (1/4 nabla_[a xi_b] gamma^a gamma^b + 1/4 nabla_c xi^c) psi."""
    psi.check(R)
    if F.chart.m != 4:
        warnings.warn(f"Penrose spinor Lie derivative in dimension {F.chart.m} uses the m=4 "
                      "trace coefficient 1/4; experimental", ExperimentalWarning, stacklevel=2)
    conn = conn or christoffel(g)
    base, grad = _covariant_form(xi, psi, g, F, R, conn)
    eta_d = F.chart.eta
    div = ZERO
    for c_ in range(F.chart.m):
        div = div + (grad[c_, c_] if eta_d[c_] > 0 else -grad[c_, c_])
    return base - psi.scaled(QUARTER * div)
