"""Finite-dimensional function spaces on an interval.

Built-in families (monomial, trigonometric, exponential-plus-polynomial,
Bessel, explicit callables) carry analytic first and second derivatives.
Derived spaces -- pairwise product-derivative spans, orthonormal bases,
monomial augmentations -- represent their members as exact linear
combinations of a parent basis, so differentiation never falls back to
numerical differencing.

All spaces are immutable after construction and safe to share across
threads; every operation here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .integrate import DEFAULT_ENGINE, Engine

__all__ = [
    "BasisFunction",
    "FunctionSpace",
    "TchebyshevReport",
    "FamilyError",
    "RankError",
    "make_family",
    "product_derivative_space",
    "orthonormalize",
    "augment_to_even",
    "tchebyshev_screen",
    "pull_back",
]

# Relative singular-value cutoff for all rank decisions, applied to the
# quadrature-weighted collocation matrix on a 4m-point reference grid.
RANK_CUTOFF = 1e-12


class FamilyError(ValueError):
    """Unsupported family descriptor or invalid family parameters."""


class RankError(RuntimeError):
    """A derived space collapsed below the requested rank."""


@dataclass(frozen=True)
class BasisFunction:
    """A single C^1 function with analytic derivatives.

    ``value_at`` and ``deriv_at`` map arrays of abscissae to arrays of
    values.  ``deriv2_at`` is optional and only needed when the function
    participates in a product-derivative construction.  ``coeffs``, when
    present, expands the function over a parent basis.  ``noise_scale``
    bounds the amplification of rounding noise when the function is
    evaluated through such a coefficient vector (None for plain
    closures, which evaluate to relative machine accuracy).
    """

    label: str
    value_at: Callable[[np.ndarray], np.ndarray]
    deriv_at: Callable[[np.ndarray], np.ndarray]
    deriv2_at: Callable[[np.ndarray], np.ndarray] | None = None
    coeffs: np.ndarray | None = None
    noise_scale: float | None = None


class FunctionSpace:
    """An ordered basis of C^1 functions on a common interval.

    Spaces whose members are linear combinations of a common parent
    basis additionally carry ``parent`` and ``coeff_matrix`` (rows =
    members), letting collocation go through one parent evaluation and
    a matrix product instead of per-function closure chains.
    """

    def __init__(
        self,
        interval,
        basis: Sequence[BasisFunction],
        family_spec: dict,
        parent: "FunctionSpace | None" = None,
        coeff_matrix: np.ndarray | None = None,
    ):
        a, b = float(interval[0]), float(interval[1])
        if not (a < b):
            raise FamilyError(f"degenerate interval [{a}, {b}]")
        if len(basis) < 1:
            raise FamilyError("a function space needs at least one basis function")
        self.interval = (a, b)
        self.basis = tuple(basis)
        self.family_spec = family_spec
        self.parent = parent
        if coeff_matrix is not None:
            coeff_matrix = np.asarray(coeff_matrix, dtype=float)
            if parent is None or coeff_matrix.shape != (len(basis), parent.dim):
                raise ValueError("coeff_matrix must be (dim, parent.dim) with a parent set")
        self.coeff_matrix = coeff_matrix

    @property
    def dim(self) -> int:
        return len(self.basis)

    def collocation(self, xs) -> np.ndarray:
        """Matrix of basis values, shape (len(xs), dim)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if self.coeff_matrix is not None:
            return self.parent.collocation(xs) @ self.coeff_matrix.T
        return np.column_stack([np.broadcast_to(f.value_at(xs), xs.shape) for f in self.basis])

    def collocation_deriv(self, xs) -> np.ndarray:
        """Matrix of basis first derivatives, shape (len(xs), dim)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if self.coeff_matrix is not None:
            return self.parent.collocation_deriv(xs) @ self.coeff_matrix.T
        return np.column_stack([np.broadcast_to(f.deriv_at(xs), xs.shape) for f in self.basis])

    def prefix(self, k: int) -> "FunctionSpace":
        """Subspace spanned by the first k basis functions."""
        if not (1 <= k <= self.dim):
            raise ValueError(f"prefix size {k} out of range 1..{self.dim}")
        spec = {"derived": "prefix", "parent": self.family_spec, "dim": k,
                "interval": list(self.interval)}
        coeff = None if self.coeff_matrix is None else self.coeff_matrix[:k]
        return FunctionSpace(self.interval, self.basis[:k], spec,
                             parent=self.parent if coeff is not None else None,
                             coeff_matrix=coeff)

    def __repr__(self):
        fam = self.family_spec.get("family", self.family_spec.get("derived", "?"))
        return f"FunctionSpace({fam!r}, dim={self.dim}, interval={self.interval})"


def _reference_grid(space: FunctionSpace, n_points: int):
    """Gauss-Legendre grid and weights on the space's interval."""
    a, b = space.interval
    s, w = np.polynomial.legendre.leggauss(n_points)
    return a + 0.5 * (b - a) * (s + 1.0), 0.5 * (b - a) * w


def sampled_gram(space: FunctionSpace, n_points: int | None = None) -> np.ndarray:
    """Gram matrix of the basis under a 4m-point Gauss-Legendre rule."""
    if n_points is None:
        n_points = 4 * space.dim
    xs, w = _reference_grid(space, n_points)
    c = space.collocation(xs) * np.sqrt(w)[:, None]
    return c.T @ c


# ---------------------------------------------------------------------------
# built-in families

def _monomial(j: int) -> BasisFunction:
    def value(x, j=j):
        return np.asarray(x, dtype=float) ** j if j else np.ones_like(np.asarray(x, dtype=float))

    def deriv(x, j=j):
        x = np.asarray(x, dtype=float)
        return j * x ** (j - 1) if j >= 1 else np.zeros_like(x)

    def deriv2(x, j=j):
        x = np.asarray(x, dtype=float)
        return j * (j - 1) * x ** (j - 2) if j >= 2 else np.zeros_like(x)

    return BasisFunction(f"x^{j}", value, deriv, deriv2)


def _constant() -> BasisFunction:
    return _monomial(0)


def _trig_pair(j: int, a: float, b: float, freq_scale: float = 1.0):
    # sin/cos of the j-th half-harmonic in the local coordinate (x-a)/(b-a);
    # freq_scale < 1 restricts a wider-period family to this interval
    om = j * math.pi * freq_scale / (b - a)

    def s_val(x):
        return np.sin(om * (np.asarray(x, dtype=float) - a))

    def s_der(x):
        return om * np.cos(om * (np.asarray(x, dtype=float) - a))

    def s_der2(x):
        return -om * om * np.sin(om * (np.asarray(x, dtype=float) - a))

    def c_val(x):
        return np.cos(om * (np.asarray(x, dtype=float) - a))

    def c_der(x):
        return -om * np.sin(om * (np.asarray(x, dtype=float) - a))

    def c_der2(x):
        return -om * om * np.cos(om * (np.asarray(x, dtype=float) - a))

    return (
        BasisFunction(f"sin({j}pi*s)", s_val, s_der, s_der2),
        BasisFunction(f"cos({j}pi*s)", c_val, c_der, c_der2),
    )


def _local_monomial(j: int, a: float, b: float) -> BasisFunction:
    # (x-a)/(b-a) raised to j; on [0, 1] this is literally x^j
    L = b - a

    def value(x, j=j):
        s = (np.asarray(x, dtype=float) - a) / L
        return s ** j if j else np.ones_like(s)

    def deriv(x, j=j):
        s = (np.asarray(x, dtype=float) - a) / L
        return j * s ** (j - 1) / L if j >= 1 else np.zeros_like(s)

    def deriv2(x, j=j):
        s = (np.asarray(x, dtype=float) - a) / L
        return j * (j - 1) * s ** (j - 2) / L**2 if j >= 2 else np.zeros_like(s)

    label = "1" if j == 0 else ("s" if j == 1 else f"s^{j}")
    return BasisFunction(label, value, deriv, deriv2)


def _exponential(rate: float, a: float, b: float) -> BasisFunction:
    # exp(rate * s) in the local coordinate s = (x-a)/(b-a)
    L = b - a
    r = rate / L

    def value(x):
        return np.exp(r * (np.asarray(x, dtype=float) - a))

    def deriv(x):
        return r * np.exp(r * (np.asarray(x, dtype=float) - a))

    def deriv2(x):
        return r * r * np.exp(r * (np.asarray(x, dtype=float) - a))

    return BasisFunction(f"exp({rate}s)", value, deriv, deriv2)


def _bessel(order: int) -> BasisFunction:
    from scipy.special import jvp

    def value(x, v=order):
        return jvp(v, np.asarray(x, dtype=float), 0)

    def deriv(x, v=order):
        return jvp(v, np.asarray(x, dtype=float), 1)

    def deriv2(x, v=order):
        return jvp(v, np.asarray(x, dtype=float), 2)

    return BasisFunction(f"J{order}", value, deriv, deriv2)


def make_family(spec: dict) -> FunctionSpace:
    """Build a FunctionSpace from a family descriptor.

    Supported descriptors (all need an ``interval`` entry):

    - ``{"family": "monomial", "degree": d}`` -- 1, x, ..., x^d
    - ``{"family": "trig", "max_harmonic": k}`` -- 1 plus sin/cos of the
      first k half-harmonics of the local coordinate (2k+1 functions)
    - ``{"family": "exponential", "rates": [...], "poly_degree": p}`` --
      local monomials up to degree p plus exp(rate * s) for each rate
    - ``{"family": "bessel", "orders": [...]}`` -- Bessel J_v of the
      physical coordinate (needs the optional Bessel feature, i.e. a
      usable scipy.special)
    - ``{"family": "explicit", "functions": [(value, deriv[, deriv2]), ...]}``
    """
    if "family" not in spec:
        raise FamilyError("descriptor lacks a 'family' entry")
    if "interval" not in spec:
        raise FamilyError("descriptor lacks an 'interval' entry")
    family = spec["family"]
    a, b = spec["interval"]
    a, b = float(a), float(b)
    if not (a < b):
        raise FamilyError(f"degenerate interval [{a}, {b}]")

    if family == "monomial":
        d = int(spec["degree"])
        if d < 0:
            raise FamilyError("monomial degree must be >= 0")
        basis = [_monomial(j) for j in range(d + 1)]
    elif family == "trig":
        k = int(spec["max_harmonic"])
        if k < 1:
            raise FamilyError("trig family needs max_harmonic >= 1")
        freq_scale = float(spec.get("freq_scale", 1.0))
        if freq_scale <= 0:
            raise FamilyError("freq_scale must be positive")
        basis = [_constant()]
        for j in range(1, k + 1):
            s, c = _trig_pair(j, a, b, freq_scale)
            basis.extend([s, c])
    elif family == "exponential":
        rates = [float(r) for r in spec.get("rates", [])]
        p = int(spec.get("poly_degree", 0))
        if p < 0 or (p == -1 and not rates):
            raise FamilyError("exponential family needs poly_degree >= 0 or rates")
        basis = [_local_monomial(j, a, b) for j in range(p + 1)]
        for r in rates:
            if r == 0.0:
                raise FamilyError("exponential rate 0 duplicates the constant")
            basis.append(_exponential(r, a, b))
        if not basis:
            raise FamilyError("empty exponential family")
    elif family == "bessel":
        if not spec.get("enabled", True):
            raise FamilyError("Bessel family requested but the feature is disabled")
        try:
            import scipy.special  # noqa: F401
        except ImportError as exc:  # pragma: no cover - scipy is a hard dep
            raise FamilyError("Bessel family requires scipy.special") from exc
        orders = [int(v) for v in spec["orders"]]
        if not orders:
            raise FamilyError("bessel family needs at least one order")
        basis = [_bessel(v) for v in orders]
    elif family == "explicit":
        funcs = spec["functions"]
        if not funcs:
            raise FamilyError("explicit family needs at least one function")
        basis = []
        for i, item in enumerate(funcs):
            if isinstance(item, BasisFunction):
                basis.append(item)
                continue
            value, deriv, *rest = item
            basis.append(BasisFunction(f"f{i}", value, deriv, rest[0] if rest else None))
    else:
        raise FamilyError(f"unsupported family {family!r}")

    stored = {k: v for k, v in spec.items() if k != "functions"}
    stored["interval"] = [a, b]
    if family == "explicit":
        stored["labels"] = [f.label for f in basis]
    return FunctionSpace((a, b), basis, stored)


# ---------------------------------------------------------------------------
# derived spaces

def _product_derivative(fi: BasisFunction, fj: BasisFunction) -> BasisFunction:
    """(f_i * f_j)' with its own derivative via second derivatives."""
    if fi.deriv2_at is None or fj.deriv2_at is None:
        raise FamilyError(
            f"second derivative required for product-derivative of "
            f"{fi.label!r} and {fj.label!r}"
        )

    def value(x):
        return fi.deriv_at(x) * fj.value_at(x) + fi.value_at(x) * fj.deriv_at(x)

    def deriv(x):
        return (
            fi.deriv2_at(x) * fj.value_at(x)
            + 2.0 * fi.deriv_at(x) * fj.deriv_at(x)
            + fi.value_at(x) * fj.deriv2_at(x)
        )

    return BasisFunction(f"({fi.label}*{fj.label})'", value, deriv)


def product_derivative_space(space: FunctionSpace) -> FunctionSpace:
    """Span of derivatives of all pairwise products of the basis.

    The raw spanning set {(f_i f_j)' : i <= j} is reduced to a
    numerically full-rank subset, selected by column-pivoted QR of the
    quadrature-weighted collocation matrix on a 4m-point grid with the
    usual relative singular-value cutoff.
    """
    candidates = []
    for i in range(space.dim):
        for j in range(i, space.dim):
            candidates.append(_product_derivative(space.basis[i], space.basis[j]))
    raw = FunctionSpace(space.interval, candidates, {"derived": "products"})

    xs, w = _reference_grid(raw, 4 * raw.dim)
    a_mat = raw.collocation(xs) * np.sqrt(w)[:, None]
    mags = np.max(np.abs(a_mat), axis=0)
    live = mags > 0.0
    if not np.any(live):
        raise RankError("all product derivatives vanish identically")
    a_mat = a_mat / np.where(live, mags, 1.0)
    svals = np.linalg.svd(a_mat[:, live], compute_uv=False)
    rank = int(np.sum(svals >= RANK_CUTOFF * svals[0]))
    if rank < 1:
        raise RankError("product-derivative space has rank zero")

    _, _, piv = scipy.linalg.qr(a_mat, mode="economic", pivoting=True)
    keep = sorted(piv[:rank])
    basis = [candidates[k] for k in keep]
    spec = {
        "derived": "product_derivative",
        "parent": space.family_spec,
        "dim": rank,
        "interval": list(space.interval),
    }
    return FunctionSpace(space.interval, basis, spec)


def _combination(
    space: FunctionSpace,
    coeffs: np.ndarray,
    label: str,
    parent_mags: np.ndarray | None = None,
) -> BasisFunction:
    """Linear combination of a space's basis with exact derivatives."""
    coeffs = np.asarray(coeffs, dtype=float)
    parents = space.basis

    def value(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return space.collocation(xs) @ coeffs

    def deriv(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return space.collocation_deriv(xs) @ coeffs

    deriv2 = None
    if all(f.deriv2_at is not None for f in parents):
        def deriv2(x):
            xs = np.atleast_1d(np.asarray(x, dtype=float))
            cols = np.column_stack([f.deriv2_at(xs) for f in parents])
            return cols @ coeffs

    noise = None
    if parent_mags is not None:
        parent_amp = np.array(
            [max(f.noise_scale or 0.0, m) for f, m in zip(parents, parent_mags)]
        )
        noise = 2.0 * float(np.abs(coeffs) @ parent_amp)
    return BasisFunction(label, value, deriv, deriv2, coeffs=coeffs, noise_scale=noise)


def orthonormalize(
    space: FunctionSpace,
    engine: Engine = DEFAULT_ENGINE,
    rel_cutoff: float = RANK_CUTOFF,
) -> FunctionSpace:
    """L2-orthonormal basis of the same span, rank-reduced.

    The rank decision and the initial orthonormal directions come from an
    SVD of the quadrature-weighted collocation matrix on a 4m-point
    Gauss-Legendre grid; the result is then polished against the Gram
    matrix computed with the adaptive engine so that orthonormality holds
    with respect to the true L2 inner product.  When the constant
    function lies in the span, the first output function is the
    normalised constant (positive sign).

    Output functions carry coefficient vectors over the input basis, so
    their derivatives are exact linear combinations.
    """
    from .integrate import IntegrationError, integrate_vector

    a, b = space.interval
    m = space.dim
    xs, w = _reference_grid(space, 4 * m)
    colloc = space.collocation(xs)
    parent_mags = np.max(np.abs(colloc), axis=0)
    if np.any(parent_mags == 0.0):
        raise RankError("a basis function vanishes identically on the sample grid")
    a_mat = (colloc / parent_mags) * np.sqrt(w)[:, None]
    _, svals, vt = np.linalg.svd(a_mat, full_matrices=False)
    if svals[0] <= 0 or not np.isfinite(svals[0]):
        raise RankError("basis is numerically zero")
    rank = int(np.sum(svals >= rel_cutoff * svals[0]))
    # rows expand the candidates over the (unnormalised) input basis
    coeff = (vt[:rank] / svals[:rank, None]) / parent_mags

    eps = np.finfo(float).eps
    h_mags = np.max(np.abs(colloc @ coeff.T), axis=0)
    parent_amp = np.array(
        [max(f.noise_scale or 0.0, m) for f, m in zip(space.basis, parent_mags)]
    )
    amps = np.abs(coeff) @ parent_amp
    pair_i, pair_j = np.triu_indices(rank)
    floors = 32.0 * eps * (b - a) * (
        amps[pair_i] * h_mags[pair_j] + amps[pair_j] * h_mags[pair_i]
    )

    # polish: make the candidates orthonormal w.r.t. the adaptive-engine Gram
    def stacked(xsamp):
        vals = space.collocation(xsamp) @ coeff.T   # (npts, rank)
        prods = vals[:, :, None] * vals[:, None, :]
        return prods[:, pair_i, pair_j].T

    res = integrate_vector(
        stacked, a, b, engine.abs_tol, engine.rel_tol, engine.max_subdivisions,
        noise_floors=floors,
    )
    if not res.converged:
        raise IntegrationError("Gram matrix integration did not converge")
    gram = np.zeros((rank, rank))
    gram[pair_i, pair_j] = res.values
    gram = gram + gram.T - np.diag(np.diag(gram))
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] <= 0:
        raise RankError("Gram matrix not positive definite after rank reduction")
    inv_sqrt = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
    coeff = inv_sqrt @ coeff

    # rotate to the basis diagonalising the derivative-energy form, in
    # ascending order: functions come out sorted by oscillation (the
    # constant, when in span, lands first with zero energy), which keeps
    # the even-dimensional prefixes well behaved for rule escalation
    kd = (space.collocation_deriv(xs) @ coeff.T) * np.sqrt(w)[:, None]
    k_form = kd.T @ kd
    k_form = 0.5 * (k_form + k_form.T)
    _, u_rot = np.linalg.eigh(k_form)
    coeff = u_rot.T @ coeff

    # deterministic signs: value at the right endpoint positive, falling
    # back to the largest coefficient for functions vanishing there
    h_end = space.collocation(np.array([b])) @ coeff.T
    h_peak = np.max(np.abs(space.collocation(xs) @ coeff.T), axis=0)
    for i in range(rank):
        s = h_end[0, i]
        if abs(s) <= 1e-8 * h_peak[i]:
            s = coeff[i, int(np.argmax(np.abs(coeff[i])))]
        if s < 0:
            coeff[i] = -coeff[i]

    basis = [
        _combination(space, coeff[i], f"q{i}", parent_mags=parent_mags)
        for i in range(rank)
    ]
    spec = {
        "derived": "orthonormal",
        "parent": space.family_spec,
        "dim": rank,
        "interval": [a, b],
    }
    return FunctionSpace(space.interval, basis, spec, parent=space, coeff_matrix=coeff)


def augment_to_even(
    space: FunctionSpace,
    engine: Engine = DEFAULT_ENGINE,
    max_extra_degree: int | None = None,
) -> FunctionSpace:
    """Append the lowest-degree monomial outside the span if dim is odd.

    Even-dimensional spaces are returned unchanged.  The scan checks the
    relative residual of each monomial after projection onto the span,
    on the weighted reference grid; it gives up past ``dim + 4``.
    """
    if space.dim % 2 == 0:
        return space
    cap = space.dim + 4 if max_extra_degree is None else max_extra_degree
    xs, w = _reference_grid(space, 4 * (space.dim + 1))
    sw = np.sqrt(w)[:, None]
    a_mat = space.collocation(xs) * sw
    q, _ = np.linalg.qr(a_mat)
    for deg in range(cap + 1):
        cand = _monomial(deg)
        v = cand.value_at(xs) * sw[:, 0]
        norm = np.linalg.norm(v)
        if norm == 0.0:
            continue
        resid = np.linalg.norm(v - q @ (q.T @ v)) / norm
        if resid > 1e-8:
            basis = list(space.basis) + [cand]
            spec = {
                "derived": "augmented",
                "parent": space.family_spec,
                "augment": f"x^{deg}",
                "interval": list(space.interval),
            }
            return FunctionSpace(space.interval, basis, spec)
    raise RankError(f"no independent monomial up to degree {cap}; space looks pathological")


# ---------------------------------------------------------------------------
# Tchebyshev screening

@dataclass(frozen=True)
class TchebyshevReport:
    """Outcome of the heuristic Tchebyshev-system screen (advisory only)."""

    tested_grids: int
    min_abs_det: float
    verdict: str  # "pass" | "fail" | "inconclusive"


FAIL_THRESHOLD = 1e-13
PASS_THRESHOLD = 1e-8


def _log_scaled_det(space: FunctionSpace, nodes: np.ndarray) -> float:
    """log of the row-equilibrated collocation determinant, normalised by
    the pairwise node-gap product so that coalescing nodes do not mask
    genuine sign-degeneracies."""
    c = space.collocation(nodes)
    scale = np.abs(c).max(axis=1)
    if np.any(scale == 0.0):
        return -np.inf
    c = c / scale[:, None]
    sign, logdet = np.linalg.slogdet(c)
    if sign == 0.0:
        return -np.inf
    i, j = np.triu_indices(len(nodes), k=1)
    log_vand = float(np.sum(np.log(nodes[j] - nodes[i])))
    return logdet - log_vand


def tchebyshev_screen(
    space: FunctionSpace,
    trials: int = 200,
    rng_seed: int = 0,
) -> TchebyshevReport:
    """Sample collocation determinants on random and adversarial node sets.

    Determinants are row-equilibrated and normalised by the Vandermonde
    gap product (so the screen measures sign-degeneracy rather than node
    clustering).  For spaces of dimension <= 12 the worst random
    configurations are additionally refined by a local minimiser.  The
    verdict is heuristic: "fail" below 1e-13, "pass" only if everything
    stays above 1e-8, otherwise "inconclusive".
    """
    a, b = space.interval
    m = space.dim
    rng = np.random.default_rng(rng_seed)
    gap_floor = 1e-4 * (b - a)

    def draw_sorted():
        while True:
            nodes = np.sort(rng.uniform(a, b, size=m))
            if np.min(np.diff(nodes)) > gap_floor if m > 1 else True:
                return nodes

    configs = [draw_sorted() for _ in range(trials)]
    # adversarial probes: midpoint-symmetric sets and near-coincident pairs
    for _ in range(max(8, trials // 10)):
        half = np.sort(rng.uniform(0.5 * (a + b) + 0.25 * gap_floor, b, size=(m + 1) // 2))
        mirrored = np.sort(np.concatenate([(a + b) - half, half]))[:m]
        if m == 1 or np.min(np.diff(mirrored)) > 0:
            configs.append(np.sort(mirrored))
        squeezed = draw_sorted()
        if m > 1:
            k = rng.integers(0, m - 1)
            squeezed[k + 1] = squeezed[k] + gap_floor
            configs.append(np.sort(squeezed))

    logs = []
    for nodes in configs:
        if m > 1 and np.min(np.diff(nodes)) <= 0:
            continue
        logs.append(_log_scaled_det(space, nodes))
    logs = np.asarray(logs)
    tested = len(logs)

    min_log = float(np.min(logs))
    if m <= 12 and np.isfinite(min_log):
        # refine the worst few configurations with a derivative-free search
        order = np.argsort(logs)[:3]
        for idx in order:
            start = configs[int(idx)]

            def objective(y):
                nodes = np.sort(np.clip(y, a, b))
                if m > 1 and np.min(np.diff(nodes)) < 0.25 * gap_floor:
                    return 50.0  # barrier against coalescence
                val = _log_scaled_det(space, nodes)
                return val if np.isfinite(val) else -700.0

            res = scipy.optimize.minimize(
                objective, start, method="Nelder-Mead",
                options={"maxiter": 50 * m, "xatol": 1e-10, "fatol": 1e-3},
            )
            tested += res.nfev
            min_log = min(min_log, float(res.fun))

    min_det = float(np.exp(min_log)) if np.isfinite(min_log) else 0.0
    if min_det < FAIL_THRESHOLD:
        verdict = "fail"
    elif min_det > PASS_THRESHOLD:
        verdict = "pass"
    else:
        verdict = "inconclusive"
    return TchebyshevReport(tested_grids=tested, min_abs_det=min_det, verdict=verdict)


# ---------------------------------------------------------------------------
# affine pull-back

def pull_back(space: FunctionSpace, target=(-1.0, 1.0), renormalize: bool = False) -> FunctionSpace:
    """The same space expressed on a target interval via an affine map.

    With ``renormalize`` the functions are scaled by sqrt(dx/ds) so an
    L2-orthonormal basis stays orthonormal on the target interval.
    """
    a, b = space.interval
    ta, tb = float(target[0]), float(target[1])
    jac = (b - a) / (tb - ta)            # dx/ds
    scale = math.sqrt(jac) if renormalize else 1.0

    def wrap(f: BasisFunction) -> BasisFunction:
        def value(s, f=f):
            x = a + (np.asarray(s, dtype=float) - ta) * jac
            return scale * f.value_at(x)

        def deriv(s, f=f):
            x = a + (np.asarray(s, dtype=float) - ta) * jac
            return scale * jac * f.deriv_at(x)

        deriv2 = None
        if f.deriv2_at is not None:
            def deriv2(s, f=f):
                x = a + (np.asarray(s, dtype=float) - ta) * jac
                return scale * jac * jac * f.deriv2_at(x)

        noise = None if f.noise_scale is None else scale * f.noise_scale
        return BasisFunction(f.label, value, deriv, deriv2, noise_scale=noise)

    spec = {
        "derived": "pull_back",
        "parent": space.family_spec,
        "interval": [ta, tb],
        "renormalized": renormalize,
    }
    parent = None
    coeff = None
    if space.coeff_matrix is not None:
        parent = pull_back(space.parent, target, renormalize=False)
        coeff = scale * space.coeff_matrix
    return FunctionSpace((ta, tb), [wrap(f) for f in space.basis], spec,
                         parent=parent, coeff_matrix=coeff)
