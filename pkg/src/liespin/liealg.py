"""Matrix Lie algebra tools for gl(m) with a signature metric.

``gl(m) = so(p,q) + V + R I`` where ``so(p,q)`` holds the eta-antisymmetric
matrices, ``V`` the eta-symmetric traceless ones and ``R I`` the multiples of
the identity.  ``V`` and ``R I`` are invariant under conjugation by
``SO(p,q)``, which is what :func:`check_ad_invariance` measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "SignatureMetric", "ReductiveSplit", "ProjectorReport", "AdInvarianceReport",
    "eta_transpose", "decompose_reductive", "ad_action", "matrix_exp",
    "project_so", "project_v", "project_trace", "random_so_element",
    "reductive_projectors", "verify_projector_family", "check_ad_invariance",
]


@dataclass(frozen=True)
class SignatureMetric:
    """eta = diag(+1 * p, -1 * q), plus signs first."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise ValueError(f"invalid signature ({self.p}, {self.q})")

    @property
    def m(self) -> int:
        return self.p + self.q

    @property
    def diag(self) -> np.ndarray:
        return np.array([1.0] * self.p + [-1.0] * self.q)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    @classmethod
    def parse(cls, text: str) -> "SignatureMetric":
        try:
            p, q = (int(t) for t in text.split(","))
        except ValueError:
            raise ValueError(f"signature must look like 'p,q', got {text!r}") from None
        return cls(p, q)


def _as_matrix(M, m: int | None = None) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if m is not None and A.shape[0] != m:
        raise ValueError(f"dimension mismatch: matrix is {A.shape[0]}x{A.shape[0]}, signature has m={m}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def eta_transpose(M, eta: SignatureMetric) -> np.ndarray:
    """Adjoint with respect to eta: eta(M^T v, w) = eta(v, M w)."""
    A = _as_matrix(M, eta.m)
    d = eta.diag
    return d[:, None] * A.T * d[None, :]


def project_so(M, eta: SignatureMetric) -> np.ndarray:
    A = _as_matrix(M, eta.m)
    return 0.5 * (A - eta_transpose(A, eta))


def project_trace(M, eta: SignatureMetric) -> np.ndarray:
    A = _as_matrix(M, eta.m)
    return np.trace(A) / eta.m * np.eye(eta.m)


def project_v(M, eta: SignatureMetric) -> np.ndarray:
    A = _as_matrix(M, eta.m)
    return 0.5 * (A + eta_transpose(A, eta)) - project_trace(A, eta)


@dataclass(frozen=True)
class ReductiveSplit:
    antisym: np.ndarray
    sym_traceless: np.ndarray
    trace_scalar: float

    def recompose(self) -> np.ndarray:
        m = self.antisym.shape[0]
        return self.antisym + self.sym_traceless + self.trace_scalar * np.eye(m)

    def to_json(self) -> dict:
        return {
            "antisym": self.antisym.tolist(),
            "sym_traceless": self.sym_traceless.tolist(),
            "trace_scalar": float(self.trace_scalar),
        }


def decompose_reductive(M, eta: SignatureMetric) -> ReductiveSplit:
    A = _as_matrix(M, eta.m)
    return ReductiveSplit(
        antisym=project_so(A, eta),
        sym_traceless=project_v(A, eta),
        trace_scalar=float(np.trace(A) / eta.m),
    )


def ad_action(O, M) -> np.ndarray:
    """O M O^-1.  Raises ``np.linalg.LinAlgError`` for singular O."""
    O = _as_matrix(O)
    A = _as_matrix(M, O.shape[0])
    cond = np.linalg.cond(O)
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError(f"singular matrix (condition number {cond:.3g})")
    # O M O^-1 = solve(O^T, (O M)^T)^T
    return np.linalg.solve(O.T, (O @ A).T).T


def matrix_exp(M) -> np.ndarray:
    return scipy.linalg.expm(_as_matrix(M))


def random_so_element(eta: SignatureMetric, rng: np.random.Generator) -> np.ndarray:
    """exp of a random eta-antisymmetric matrix; lies in the identity component."""
    m = eta.m
    K = rng.uniform(-1.0, 1.0, size=(m, m))
    K = K - K.T
    return matrix_exp(eta.matrix @ K)


def _as_operator(fn, m: int) -> np.ndarray:
    """Matrix of a linear map on m x m matrices, acting on row-major vec."""
    n = m * m
    op = np.zeros((n, n))
    for k in range(n):
        E = np.zeros(n)
        E[k] = 1.0
        op[:, k] = fn(E.reshape(m, m)).reshape(n)
    return op


def reductive_projectors(eta: SignatureMetric) -> list[np.ndarray]:
    """The so / V / R I projectors as operators on the m^2-dim matrix space."""
    m = eta.m
    return [
        _as_operator(lambda X: project_so(X, eta), m),
        _as_operator(lambda X: project_v(X, eta), m),
        _as_operator(lambda X: project_trace(X, eta), m),
    ]


@dataclass
class ProjectorReport:
    product_residual: float
    sum_residual: float
    tol: float = 1e-12

    @property
    def ok(self) -> bool:
        return self.product_residual <= self.tol and self.sum_residual <= self.tol

    def to_json(self) -> dict:
        return {"product_residual": self.product_residual,
                "sum_residual": self.sum_residual, "tol": self.tol, "ok": self.ok}


def verify_projector_family(family, tol: float = 1e-12) -> ProjectorReport:
    """Max residuals of P_i P_j - delta_ij P_j and sum_i P_i - I."""
    ops = [np.asarray(P, dtype=float) for P in family]
    if not ops:
        raise ValueError("empty projector family")
    n = ops[0].shape[0]
    for P in ops:
        if P.shape != (n, n):
            raise ValueError(f"dimension mismatch: {P.shape} vs {(n, n)}")
    prod = 0.0
    for i, Pi in enumerate(ops):
        for j, Pj in enumerate(ops):
            target = Pj if i == j else 0.0
            prod = max(prod, float(np.max(np.abs(Pi @ Pj - target))))
    total = float(np.max(np.abs(sum(ops) - np.eye(n))))
    return ProjectorReport(prod, total, tol)


@dataclass
class AdInvarianceReport:
    signature: tuple[int, int]
    samples: int
    so_part_of_ad_v: float
    trace_part_of_ad_v: float
    projector_commutation: float
    so_closure: float
    tol: float = 1e-9
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return max(self.so_part_of_ad_v, self.trace_part_of_ad_v,
                   self.projector_commutation, self.so_closure) <= self.tol

    def to_json(self) -> dict:
        return {
            "signature": list(self.signature), "samples": self.samples,
            "so_part_of_ad_v": self.so_part_of_ad_v,
            "trace_part_of_ad_v": self.trace_part_of_ad_v,
            "projector_commutation": self.projector_commutation,
            "so_closure": self.so_closure, "tol": self.tol, "ok": self.ok,
        }


def check_ad_invariance(eta: SignatureMetric, samples: int, seed: int = 42,
                        tol: float = 1e-9) -> AdInvarianceReport:
    """Sample O in SO(p,q) and check Ad_O keeps V in V and so in so."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    m = eta.m
    so_v = tr_v = comm = closure = 0.0
    for _ in range(samples):
        O = random_so_element(eta, rng)
        V = project_v(rng.uniform(-1, 1, (m, m)), eta)
        AdV = ad_action(O, V)
        so_v = max(so_v, float(np.max(np.abs(project_so(AdV, eta)))))
        tr_v = max(tr_v, abs(float(np.trace(AdV))) / m)
        M = rng.uniform(-1, 1, (m, m))
        diff = project_v(ad_action(O, M), eta) - ad_action(O, project_v(M, eta))
        comm = max(comm, float(np.max(np.abs(diff))))
        A = project_so(rng.uniform(-1, 1, (m, m)), eta)
        AdA = ad_action(O, A)
        closure = max(closure, float(np.max(np.abs(AdA - project_so(AdA, eta)))))
    return AdInvarianceReport((eta.p, eta.q), samples, so_v, tr_v, comm, closure, tol)
