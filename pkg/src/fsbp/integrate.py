"""Adaptive definite integration on finite intervals.

A 15-point Kronrod extension of 7-point Gauss quadrature provides the
base rule together with an embedded lower-order estimate.  Globally
adaptive bisection always splits the interval with the largest error
estimate first, so results are deterministic for identical inputs.

Integrands must be vectorised (accept an ndarray of abscissae) and
finite everywhere on the closed interval.  Everything here is pure and
reentrant; concurrent use only requires that the integrand itself be
safe to call concurrently.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "IntegralResult",
    "VectorIntegralResult",
    "IntegrationError",
    "Engine",
    "DEFAULT_ENGINE",
    "integrate",
    "integrate_vector",
    "moments",
]


class IntegrationError(RuntimeError):
    """Raised for non-finite integrand values or failed convergence."""


# 15-point Kronrod abscissae on [-1, 1]; every second entry (odd index)
# is a node of the embedded 7-point Gauss rule.
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])

_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])

_GAUSS_IDX = np.arange(1, 15, 2)

_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])


@dataclass(frozen=True)
class IntegralResult:
    """Outcome of a scalar adaptive integration."""

    value: float
    error_estimate: float
    subdivisions: int
    converged: bool


@dataclass(frozen=True)
class VectorIntegralResult:
    """Outcome of a component-wise controlled vector integration."""

    values: np.ndarray
    error_estimates: np.ndarray
    subdivisions: int
    converged: bool


def _panel(f, a: float, b: float):
    """Evaluate the Kronrod/Gauss pair on one interval.

    Returns the Kronrod values (shape (d,)) and the per-component
    difference against the embedded Gauss estimate.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _XK), dtype=float)
    if fx.ndim == 1:
        fx = fx[np.newaxis, :]
    if fx.shape[-1] != _XK.size:
        raise IntegrationError(
            f"integrand returned shape {fx.shape}, expected trailing axis of {_XK.size}"
        )
    if not np.all(np.isfinite(fx)):
        raise IntegrationError(f"non-finite integrand value on [{a}, {b}]")
    kron = half * (fx @ _WK)
    gauss = half * (fx[:, _GAUSS_IDX] @ _WG)
    return kron, np.abs(kron - gauss)


def integrate_vector(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-12,
    max_subdivisions: int = 10_000,
    noise_floors: np.ndarray | None = None,
) -> VectorIntegralResult:
    """Integrate a vector-valued function on [a, b].

    ``f`` maps an array of abscissae of shape (m,) to values of shape
    (d, m) (or (m,) for d = 1).  All d components share one adaptive
    subdivision; the error of every component is controlled to
    ``max(abs_tol, rel_tol * |value|)``.

    ``noise_floors`` optionally gives per-component bounds on the
    attainable accuracy (evaluation rounding noise of the integrand); a
    component whose error estimate is below its floor counts as
    converged even if the requested tolerance is tighter, since no
    amount of subdivision can improve it.
    """
    if not (a < b):
        raise ValueError(f"require a < b, got [{a}, {b}]")
    if abs_tol <= 0 or rel_tol <= 0:
        raise ValueError("tolerances must be positive")

    values, errors = _panel(f, a, b)
    # heap entries: (-max component error, insertion counter, a, b, values, errors)
    counter = 0
    heap = [(-float(errors.max()), counter, a, b, values, errors)]
    total = values.copy()
    total_err = errors.copy()
    width_floor = 1e3 * np.finfo(float).eps * max(abs(a), abs(b), 1.0)

    subdivisions = 0
    while True:
        bound = np.maximum(abs_tol, rel_tol * np.abs(total))
        if noise_floors is not None:
            bound = np.maximum(bound, noise_floors)
        if np.all(total_err <= bound):
            return VectorIntegralResult(total, total_err, subdivisions, True)
        if subdivisions >= max_subdivisions:
            return VectorIntegralResult(total, total_err, subdivisions, False)

        _, _, pa, pb, pv, pe = heapq.heappop(heap)
        if pb - pa < width_floor:
            # cannot refine further in double precision
            return VectorIntegralResult(total, total_err, subdivisions, False)
        pm = 0.5 * (pa + pb)
        lv, le = _panel(f, pa, pm)
        rv, re = _panel(f, pm, pb)
        total += lv + rv - pv
        total_err += le + re - pe
        counter += 1
        heapq.heappush(heap, (-float(le.max()), counter, pa, pm, lv, le))
        counter += 1
        heapq.heappush(heap, (-float(re.max()), counter, pm, pb, rv, re))
        subdivisions += 1


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-12,
    max_subdivisions: int = 10_000,
) -> IntegralResult:
    """Integrate a scalar function on [a, b] with an honest error estimate.

    The returned ``converged`` flag is true only when the accumulated
    error estimate satisfies ``error <= max(abs_tol, rel_tol * |value|)``;
    hitting the subdivision cap never silently returns a bad value.
    """
    res = integrate_vector(f, a, b, abs_tol, rel_tol, max_subdivisions)
    return IntegralResult(
        float(res.values[0]),
        float(res.error_estimates[0]),
        res.subdivisions,
        res.converged,
    )


@dataclass(frozen=True)
class Engine:
    """Integration engine: tolerance bundle passed through the pipeline."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_subdivisions: int = 10_000

    def integrate(self, f, a, b) -> IntegralResult:
        return integrate(f, a, b, self.abs_tol, self.rel_tol, self.max_subdivisions)

    def integrate_vector(self, f, a, b) -> VectorIntegralResult:
        return integrate_vector(f, a, b, self.abs_tol, self.rel_tol, self.max_subdivisions)


DEFAULT_ENGINE = Engine()


def evaluation_noise_floors(space, weight=None) -> np.ndarray:
    """Attainable integral accuracy per basis function of a space.

    Basis functions represented as coefficient vectors over an
    ill-conditioned parent basis cannot be evaluated more accurately
    than epsilon times their amplification factor (stored on the
    function as ``noise_scale``); the corresponding integral over the
    interval inherits that floor.  Plain closures get a floor of zero.
    """
    a, b = space.interval
    wmax = 1.0
    if weight is not None:
        xs = np.linspace(a, b, 65)
        wmax = float(np.max(np.abs(weight(xs))))
    eps = np.finfo(float).eps
    floors = np.zeros(len(space.basis))
    for i, f in enumerate(space.basis):
        amp = getattr(f, "noise_scale", None)
        if amp is not None:
            floors[i] = 32.0 * eps * amp * (b - a) * wmax
    return floors


def moments(space, weight=None, engine: Engine = DEFAULT_ENGINE) -> np.ndarray:
    """Integrals of every basis function of ``space`` against a weight.

    ``weight`` is a positive vectorised function of x, or None for the
    unit weight.  Tolerances are floored at the attainable evaluation
    accuracy of each basis function; raises :class:`IntegrationError`
    if any component still fails to converge.
    """
    a, b = space.interval

    if weight is None:
        f = lambda xs: space.collocation(xs).T
    else:
        f = lambda xs: space.collocation(xs).T * np.asarray(weight(xs), dtype=float)

    res = integrate_vector(
        f, a, b, engine.abs_tol, engine.rel_tol, engine.max_subdivisions,
        noise_floors=evaluation_noise_floors(space, weight),
    )
    if not res.converged:
        worst = int(np.argmax(res.error_estimates))
        raise IntegrationError(
            f"moment of basis function {worst} did not converge "
            f"(error estimate {res.error_estimates[worst]:.3e})"
        )
    return res.values
