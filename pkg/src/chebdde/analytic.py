"""Exact delay-side characteristic function and scalar-family closed forms.

Delta_0(lambda) = lambda I - sum_k C_k e^{-lambda tau_k} is the transcendental
characteristic function the collocation ODE approximates; it serves as the
reference oracle. The rest of the module charts the scalar delayed-feedback
family x' = b1 x(t) + b2 x(t-1): Hopf boundary curves (exact and discretized),
the (b1, b2) <-> (mu, beta) change of parameters for the delayed-recruitment
interpretation, crossing speeds, and first Lyapunov coefficients along the
boundary in closed form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .cheb_mesh import diff_matrix, make_mesh
from .errors import SingularityError, UnknownSymbolError
from .model import DdeModel, LinearPart, equilibrium_solve, linearize

__all__ = [
    "CharFn0",
    "BoundaryPoint",
    "make_charfn0",
    "delta0_eval",
    "delta0_dlambda",
    "delta0_dalpha",
    "dde_boundary",
    "ps_boundary",
    "to_mu_beta",
    "c0_blowfly",
    "cn_blowfly",
    "lambda_prime_n2",
    "lambda_prime_n2_re",
    "boundary_point",
    "admissible_omegas",
]


class CharFn0:
    """Exact characteristic function of a point-delay linear(ized) system."""

    def __init__(
        self,
        linear: LinearPart,
        model: Optional[DdeModel] = None,
        equilibrium=None,
    ):
        self.linear = linear
        self.model = model
        self.equilibrium = (
            None if equilibrium is None else np.asarray(equilibrium, dtype=float)
        )
        self.dim = linear.dim

    def with_param(self, name: str, value: float) -> "CharFn0":
        if self.model is None:
            raise UnknownSymbolError(
                "parameter derivatives need a model-backed characteristic function"
            )
        model = self.model.with_params(**{name: value})
        xbar = equilibrium_solve(model, guess=self.equilibrium)
        return CharFn0(linearize(model, xbar), model=model, equilibrium=xbar)

    def _as_result(self, mat: np.ndarray):
        return mat[0, 0] if self.dim == 1 else mat


def make_charfn0(model: DdeModel, equilibrium=None) -> CharFn0:
    xbar = (
        np.asarray(equilibrium, dtype=float)
        if equilibrium is not None
        else equilibrium_solve(model)
    )
    return CharFn0(linearize(model, xbar), model=model, equilibrium=xbar)


def delta0_eval(cf: CharFn0, lam: complex):
    """Delta_0(lambda); a scalar for one-dimensional models."""
    lam = complex(lam)
    out = lam * np.eye(cf.dim).astype(complex)
    for tau, mat in cf.linear.terms:
        out -= mat * cmath.exp(-lam * tau)
    return cf._as_result(out)


def delta0_dlambda(cf: CharFn0, lam: complex):
    lam = complex(lam)
    out = np.eye(cf.dim).astype(complex)
    for tau, mat in cf.linear.terms:
        out += mat * (tau * cmath.exp(-lam * tau))
    return cf._as_result(out)


def delta0_dalpha(cf: CharFn0, lam: complex, param: str):
    """Parameter derivative; analytic dC_k/dalpha when registered, else a
    central difference through the rebuilt linearization."""
    lam = complex(lam)
    derivs = cf.linear.param_derivs
    if derivs is not None and param in derivs:
        out = np.zeros((cf.dim, cf.dim), dtype=complex)
        for tau, dmat in zip(cf.linear.delays, derivs[param]):
            out -= np.asarray(dmat) * cmath.exp(-lam * tau)
        return cf._as_result(out)
    if cf.model is None or param not in cf.model.params:
        raise UnknownSymbolError(f"unknown parameter {param!r}")
    alpha = float(cf.model.params[param])
    h = 1e-6 * max(1.0, abs(alpha))
    hi = delta0_eval(cf.with_param(param, alpha + h), lam)
    lo = delta0_eval(cf.with_param(param, alpha - h), lam)
    return (hi - lo) / (2.0 * h)


def dde_boundary(omega: float) -> tuple:
    """Principal Hopf boundary of x' = b1 x + b2 x(t-1) at root i*omega:
    b1 = omega cos(omega)/sin(omega), b2 = -omega/sin(omega). A series
    fallback covers |omega| < 1e-4 where the quotient degenerates to 0/0."""
    w = float(omega)
    if abs(w) < 1e-4:
        w2 = w * w
        return (1.0 - w2 / 3.0 - w2 * w2 / 45.0, -(1.0 + w2 / 6.0 + 7.0 * w2 * w2 / 360.0))
    s = math.sin(w)
    if abs(s) < 1e-9:
        raise SingularityError(
            f"boundary is singular at omega={w} (multiple of pi)"
        )
    return (w * math.cos(w) / s, -w / s)


@lru_cache(maxsize=64)
def _diff_op(n: int):
    mesh = make_mesh(n)
    return diff_matrix(mesh)


def lag_solve_last(n: int, lam: complex, power: int = 1) -> complex:
    """Last entry of (D - lambda I)^{-power} D 1 on the degree-n mesh."""
    diff = _diff_op(n)
    mat = diff.D - complex(lam) * np.eye(n)
    vec = -diff.d0  # D applied to the all-ones vector
    for _ in range(power):
        vec = np.linalg.solve(mat, vec)
    return complex(vec[-1])


def ps_boundary(n: int, omega: float) -> tuple:
    """Hopf boundary of the degree-n collocation ODE, from the last entry of
    zeta = (D - i omega I)^{-1} D 1: b1 = -omega Re zeta_n / Im zeta_n,
    b2 = omega / Im zeta_n."""
    w = float(omega)
    zn = lag_solve_last(n, 1j * w)
    if abs(zn.imag) < 1e-13 * max(1.0, abs(zn)):
        raise SingularityError(
            f"discrete boundary is singular at omega={w} (Im zeta_n = 0)"
        )
    return (-w * zn.real / zn.imag, w / zn.imag)


def to_mu_beta(b1: float, b2: float) -> tuple:
    """Map linearization coefficients to delayed-recruitment parameters:
    mu = -b1, beta = -b1 e^{1 + b2/b1}."""
    if b1 >= 0.0:
        raise ValueError(
            f"b1={b1} >= 0: interpretation as population parameters needs mu > 0"
        )
    try:
        beta = -b1 * math.exp(1.0 + b2 / b1)
    except OverflowError:
        raise ValueError(
            f"beta overflows at (b1, b2)=({b1}, {b2}): boundary end point"
        ) from None
    return (-b1, beta)


def _g_derivatives(b1: float, b2: float) -> tuple:
    """Second and third derivative of the recruitment nonlinearity at the
    positive equilibrium, mu ln(beta/mu) - 2 mu and -mu ln(beta/mu) + 3 mu,
    rewritten via mu = -b1 and mu ln(beta/mu) = -(b1 + b2) so they stay
    finite at the boundary ends where beta itself overflows."""
    if b1 >= 0.0:
        raise ValueError(
            f"b1={b1} >= 0: interpretation as population parameters needs mu > 0"
        )
    return (b1 - b2, -2.0 * b1 + b2)


def c0_blowfly(omega: float) -> complex:
    """First Lyapunov coefficient along the exact boundary, pi/2 < omega < pi."""
    w = float(omega)
    b1, b2 = dde_boundary(w)
    if abs(b1 + b2) < 1e-12:
        raise SingularityError(
            f"transcritical point at omega={w}: b1 + b2 = 0"
        )
    d2, d3 = _g_derivatives(b1, b2)
    e1 = cmath.exp(-1j * w)
    den1 = 1.0 + b2 * e1
    if abs(den1) < 1e-12:
        raise SingularityError(f"B10 denominator vanishes at omega={w}")
    b10 = e1 / den1
    e2 = cmath.exp(-2j * w)
    den2 = 2j * w - b1 - b2 * e2
    if abs(den2) < 1e-12:
        raise SingularityError(f"B20 denominator vanishes at omega={w}")
    b20 = e2 / den2 * b10
    return 0.5 * d3 * b10 - d2 * d2 / (b1 + b2) * b10 + 0.5 * d2 * d2 * b20


def cn_blowfly(n: int, omega: float) -> complex:
    """First Lyapunov coefficient along the degree-n discretized boundary.

    The second amplitude denominator uses the resonant lag solve at 2 i omega,
    mirroring the exact B20; with the solve at i omega the coefficient would
    not converge to the exact one.
    """
    w = float(omega)
    b1, b2 = ps_boundary(n, w)
    if abs(b1 + b2) < 1e-12:
        raise SingularityError(f"transcritical point at omega={w}: b1 + b2 = 0")
    d2, d3 = _g_derivatives(b1, b2)
    z_plus = lag_solve_last(n, 1j * w)
    z_minus = lag_solve_last(n, -1j * w)
    z_sq = lag_solve_last(n, 1j * w, power=2)
    den1 = 1.0 - b2 * z_sq
    if abs(den1) < 1e-12:
        raise SingularityError(f"B1n denominator vanishes at omega={w}")
    b1n = z_plus * z_plus * z_minus / den1
    z2 = lag_solve_last(n, 2j * w)
    den2 = 2j * w - b1 - b2 * z2
    if abs(den2) < 1e-12:
        raise SingularityError(f"B2n denominator vanishes at omega={w}")
    b2n = z2 / den2 * b1n
    return 0.5 * d3 * b1n - d2 * d2 / (b1 + b2) * b1n + 0.5 * d2 * d2 * b2n


def _b1_n2(omega: float) -> float:
    w2 = omega * omega
    if abs(w2 - 16.0) < 1e-12:
        raise SingularityError(f"n=2 boundary singular at omega={omega}")
    return (7.0 * w2 - 16.0) / (w2 - 16.0)


def lambda_prime_n2(omega: float) -> complex:
    """Eigenvalue crossing speed d lambda / d b2 along the n=2 boundary."""
    w = float(omega)
    if w == 0.0:
        raise ValueError("crossing speed is undefined at omega = 0")
    if not -4.0 < w < 4.0:
        raise ValueError(f"omega={w} outside the principal n=2 branch (-4, 4)")
    b1 = _b1_n2(w)
    return (1j * w - 4.0) / (w * (-2.0 * w + 6j - 2j * b1))


def lambda_prime_n2_re(omega: float) -> float:
    """Closed-form real part of the crossing speed: (14-2 b1)/(4 w^2+(6-2 b1)^2)."""
    w = float(omega)
    if w == 0.0:
        raise ValueError("crossing speed is undefined at omega = 0")
    if not -4.0 < w < 4.0:
        raise ValueError(f"omega={w} outside the principal n=2 branch (-4, 4)")
    b1 = _b1_n2(w)
    return (14.0 - 2.0 * b1) / (4.0 * w * w + (6.0 - 2.0 * b1) ** 2)


@dataclass(frozen=True)
class BoundaryPoint:
    """One admissible point on a Hopf boundary chart."""

    omega: float
    b1: float
    b2: float
    mu: float
    beta: float
    re_c: float


def boundary_point(omega: float, n: Optional[int] = None) -> BoundaryPoint:
    """Chart row at omega: exact curve when n is None, else the degree-n one.

    Raises SingularityError near poles of the curve and ValueError where the
    (mu, beta) interpretation fails (b1 >= 0).
    """
    if n is None:
        b1, b2 = dde_boundary(omega)
        c = c0_blowfly(omega)
    else:
        b1, b2 = ps_boundary(n, omega)
        c = cn_blowfly(n, omega)
    mu, beta = to_mu_beta(b1, b2)
    return BoundaryPoint(omega=float(omega), b1=b1, b2=b2, mu=mu, beta=beta, re_c=c.real)


def admissible_omegas(
    lo: float, hi: float, steps: int, n: Optional[int] = None, margin: float = 1e-3
) -> np.ndarray:
    """Uniform omega grid with exclusion zones around curve singularities.

    Singular abscissas are zeros of sin(omega) for the exact curve and sign
    changes of Im zeta_n for the discretized one, located by bisection on a
    fine scan; points within `margin` of one are dropped, as are points where
    the (mu, beta) interpretation fails.
    """
    grid = np.linspace(lo, hi, steps)
    if n is None:
        sing = [k * math.pi for k in range(max(1, int(lo / math.pi)), int(hi / math.pi) + 1)]
    else:
        sing = []
        scan = np.linspace(lo, hi, max(steps * 8, 800))
        vals = [lag_solve_last(n, 1j * w).imag for w in scan]
        for a, b, fa, fb in zip(scan, scan[1:], vals, vals[1:]):
            if fa == 0.0 or (fa < 0) != (fb < 0):
                x, y = a, b
                for _ in range(60):
                    m = 0.5 * (x + y)
                    fm = lag_solve_last(n, 1j * m).imag
                    if (fm < 0) == (fa < 0):
                        x = m
                    else:
                        y = m
                sing.append(0.5 * (x + y))
    keep = []
    for w in grid:
        if any(abs(w - s) <= margin for s in sing):
            continue
        try:
            b1, _ = dde_boundary(w) if n is None else ps_boundary(n, w)
        except SingularityError:
            continue
        if b1 >= 0.0:
            continue
        keep.append(w)
    return np.array(keep)
