"""Assembly and solution of the truncated moment system ``A F = h``.

Rows and columns run over every monomial of order ``0..N`` (order-major,
lexical).  ``A[a, b]`` is the sum-moment at the exponent vector ``a + b``, so
``A`` is symmetric and block-Hankel; in one dimension it is an ordinary Hankel
matrix.  Multiplicities and Taylor factorials live in the unknowns, so no
combinatorial factor appears in ``A``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import hankel, lapack

from .errors import InputError, OrderError, SingularSystemError
from .moments import CombinedMoments
from .tensor_index import Basis, basis_size, get_basis, global_positions


@lru_cache(maxsize=16)
def pair_positions(d: int, degree: int) -> np.ndarray:
    """(M, M) table of basis positions of ``a + b`` for all row/column monomials."""
    exps = get_basis(d, degree).exponents
    table = global_positions(exps[:, None, :] + exps[None, :, :])
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class MomentSystem:
    dim: int
    degree: int
    matrix: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    @property
    def basis(self) -> Basis:
        return get_basis(self.dim, self.degree)

    @property
    def size(self) -> int:
        return self.rhs.shape[0]


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray = field(repr=False)
    condition: float
    lam: float
    residual_norm: float


def assemble(cm: CombinedMoments, degree: int | None = None) -> MomentSystem:
    """Build the system of a given degree (default: the degree ``cm`` was combined for)."""
    degree = cm.degree if degree is None else degree
    if degree > cm.degree:
        raise OrderError(f"moments were combined for degree {cm.degree}, cannot assemble degree {degree}")
    if degree < 0:
        raise InputError("degree must be >= 0")
    matrix = cm.g[pair_positions(cm.dim, degree)]
    rhs = cm.h[: basis_size(cm.dim, degree)].copy()
    return MomentSystem(cm.dim, degree, matrix, rhs)


def solve(system: MomentSystem, lam: float = 0.0) -> SolveReport:
    """Solve ``(A + lam I) F = h`` with a Bunch-Kaufman (symmetric indefinite) factorization.

    The reported residual is that of the unregularized system.
    """
    if lam < 0:
        raise InputError(f"ridge parameter must be >= 0, got {lam}")
    A, rhs = system.matrix, system.rhs
    if not (np.isfinite(A).all() and np.isfinite(rhs).all()):
        raise InputError("moment system contains non-finite entries")
    reg = A + lam * np.eye(A.shape[0]) if lam else A.copy()
    anorm = float(np.abs(reg).sum(axis=0).max())
    ldu, ipiv, info = lapack.dsytrf(reg, lower=1)
    if info > 0:
        raise SingularSystemError(
            f"moment matrix is singular (zero pivot at {info}); retry with a ridge term lambda > 0"
        )
    if info < 0:
        raise InputError(f"dsytrf rejected argument {-info}")
    x, info = lapack.dsytrs(ldu, ipiv, rhs[:, None], lower=1)
    x = x[:, 0]
    if not np.isfinite(x).all():
        raise SingularSystemError("solution is not finite; retry with a ridge term lambda > 0")
    rcond, _ = lapack.dsycon(ldu, ipiv, anorm, lower=1)
    condition = float(np.inf) if rcond == 0 else 1.0 / float(rcond)
    residual = float(np.linalg.norm(A @ x - rhs))
    return SolveReport(solution=x, condition=condition, lam=float(lam), residual_norm=residual)


def hankel_system(g, h, degree: int) -> MomentSystem:
    """One-dimensional system from scalar moment sequences ``g^0..g^2N`` and ``h^0..h^N``."""
    g = np.asarray(g, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    if g.shape[0] < 2 * degree + 1 or h.shape[0] < degree + 1:
        raise OrderError(f"degree {degree} needs g to order {2 * degree} and h to order {degree}")
    n = degree + 1
    matrix = hankel(g[:n], g[n - 1 : 2 * n - 1])
    return MomentSystem(1, degree, matrix, h[:n].copy())


def solve_1d(moments, degree: int | None = None, lam: float = 0.0) -> SolveReport:
    """Scalar case; ``moments`` is a 1-D :class:`CombinedMoments` or a ``(g, h)`` pair."""
    if isinstance(moments, CombinedMoments):
        if moments.dim != 1:
            raise InputError(f"solve_1d needs d = 1, got d = {moments.dim}")
        g, h = moments.g, moments.h
        degree = moments.degree if degree is None else degree
    else:
        g, h = moments
        if degree is None:
            degree = len(h) - 1
    return solve(hankel_system(g, h, degree), lam)


def training_loss(system: MomentSystem, coeffs, target_moment: float) -> float:
    """Weighted squared error ``E[(F - y)^2]`` under the sum measure.

    Expands as ``E[y^2] - 2 F.h + F.A.F``; for binary targets with per-class
    normalization ``E[y^2] = pi_s + pi_b``.
    """
    F = np.asarray(coeffs, dtype=float)
    return float(target_moment - 2.0 * F @ system.rhs + F @ system.matrix @ F)
