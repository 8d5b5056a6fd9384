"""Generalised Gauss and Gauss-Lobatto quadrature for function spaces.

Given an even-dimensional space G of dimension 2n on [a, b], the open
rule uses n interior nodes and the closed rule n+1 nodes including both
endpoints; either is exact for all of G with positive weights whenever G
behaves as a Tchebyshev system.

Nodes are found by a damped quasi-Newton iteration on a (quasi-)cardinal
basis built from the Hermite-Vandermonde matrix, with initial guesses
supplied by continuation in the integration measure: the target weight
is blended with a sum of point masses whose locations come from the
previously converged rule of one size smaller.

All solves are pure and reentrant; a single solve is sequential.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np
import scipy.optimize

from .integrate import DEFAULT_ENGINE, Engine
from .spaces import FunctionSpace, pull_back, sampled_gram, orthonormalize, tchebyshev_screen

__all__ = [
    "QuadratureRule",
    "ExactnessCertificate",
    "HermiteLagrangeBasis",
    "ContinuationState",
    "BlendedMeasure",
    "SolveOptions",
    "SolverError",
    "ScreenFailure",
    "hermite_vandermonde",
    "hermite_lagrange",
    "residuals_and_weights",
    "newton_solve",
    "continuation_solve",
    "verify_exactness",
    "measure_moments",
    "equispaced_rule",
    "classical_gauss_rule",
    "classical_lobatto_rule",
]


class SolverError(RuntimeError):
    """Newton or continuation failure (stall, singularity, bad weights)."""


class ScreenFailure(RuntimeError):
    """The Tchebyshev screen rejected the space and no force flag was set."""


@dataclass(frozen=True)
class ExactnessCertificate:
    """Per-function quadrature errors against a target space."""

    target_dim: int
    max_abs_error: float
    per_function_errors: np.ndarray
    tol: float

    @property
    def valid(self) -> bool:
        return bool(self.max_abs_error <= self.tol)

    def to_dict(self) -> dict:
        return {
            "target_dim": self.target_dim,
            "max_abs_error": self.max_abs_error,
            "per_function_errors": [float(e) for e in self.per_function_errors],
            "tol": self.tol,
            "valid": self.valid,
        }


@dataclass
class QuadratureRule:
    """Nodes and positive weights, optionally certified against a space."""

    nodes: np.ndarray
    weights: np.ndarray
    closed: bool
    interval: tuple
    certificate: ExactnessCertificate | None = None
    trace: dict | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        a, b = self.interval
        if self.nodes.size != self.weights.size:
            raise ValueError("nodes and weights length mismatch")
        if self.nodes.size > 1 and np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if self.closed:
            tol = 1e-12 * (b - a)
            if abs(self.nodes[0] - a) > tol or abs(self.nodes[-1] - b) > tol:
                raise ValueError("closed rule must include both endpoints")
            self.nodes[0], self.nodes[-1] = a, b

    @property
    def size(self) -> int:
        return self.nodes.size

    def apply(self, f) -> float:
        return float(self.weights @ np.asarray(f(self.nodes), dtype=float))

    def to_dict(self) -> dict:
        d = {
            "nodes": [float(x) for x in self.nodes],
            "weights": [float(w) for w in self.weights],
            "closed": self.closed,
            "interval": [float(self.interval[0]), float(self.interval[1])],
        }
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        if self.trace is not None:
            d["trace"] = self.trace
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuadratureRule":
        cert = None
        if d.get("certificate") is not None:
            c = d["certificate"]
            cert = ExactnessCertificate(
                target_dim=int(c["target_dim"]),
                max_abs_error=float(c["max_abs_error"]),
                per_function_errors=np.asarray(c["per_function_errors"], dtype=float),
                tol=float(c["tol"]),
            )
        return cls(
            nodes=np.asarray(d["nodes"], dtype=float),
            weights=np.asarray(d["weights"], dtype=float),
            closed=bool(d["closed"]),
            interval=(float(d["interval"][0]), float(d["interval"][1])),
            certificate=cert,
            trace=d.get("trace"),
        )


@dataclass(frozen=True)
class HermiteLagrangeBasis:
    """Cardinal basis {sigma_i, eta_i} of a space at a node set.

    Open case (n nodes, dim 2n): sigma_i vanish at every node with unit
    derivative at node i only; eta_i are one at node i with vanishing
    derivative everywhere.  Closed case (n+1 nodes): derivative
    conditions are dropped at the two endpoints, leaving n-1 sigma and
    n+1 eta functions.  Rows of the coefficient matrices expand each
    function over the space's basis.
    """

    sigma_coeffs: np.ndarray
    eta_coeffs: np.ndarray
    node_set: np.ndarray
    closed: bool
    space: FunctionSpace

    def sigma_values(self, xs) -> np.ndarray:
        return self.space.collocation(xs) @ self.sigma_coeffs.T

    def eta_values(self, xs) -> np.ndarray:
        return self.space.collocation(xs) @ self.eta_coeffs.T

    def sigma_derivs(self, xs) -> np.ndarray:
        return self.space.collocation_deriv(xs) @ self.sigma_coeffs.T

    def eta_derivs(self, xs) -> np.ndarray:
        return self.space.collocation_deriv(xs) @ self.eta_coeffs.T


@dataclass(frozen=True)
class BlendedMeasure:
    """t * (continuous weight) + (1 - t) * sum of unit point masses."""

    t: float
    anchors: np.ndarray
    weight: Callable | None = None  # None means the unit weight


@dataclass
class ContinuationState:
    """Progress of one measure-continuation stage."""

    t: float
    anchors: np.ndarray
    current_nodes: np.ndarray
    step: float
    history: list = field(default_factory=list)  # (t, nodes) pairs

    def record(self):
        self.history.append((self.t, self.current_nodes.copy()))


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances and schedule knobs for the quadrature solvers."""

    residual_tol: float = 1e-11
    residual_accept: float = 1e-8       # stagnation acceptance band (noise floor)
    step_tol: float = 1e-13
    max_iterations: int = 100
    certificate_tol: float = 1e-8
    max_condition: float = 1e13
    damping_levels: int = 10            # lambda down to 2**-10
    ordering_margin: float = 1e-3       # fraction of the local gap preserved
    t_step: float = 0.1
    t_step_min: float = 1e-6
    t_growth: float = 1.5
    screen_trials: int = 100


DEFAULT_OPTIONS = SolveOptions()


def measure_moments(space: FunctionSpace, measure=None, engine: Engine = DEFAULT_ENGINE) -> np.ndarray:
    """Moments of every basis function against a weight or blended measure.

    Point-mass components are evaluated analytically, never numerically.
    """
    from .integrate import moments as _moments

    if isinstance(measure, BlendedMeasure):
        cont = _moments(space, measure.weight, engine) if measure.t > 0 else np.zeros(space.dim)
        delta = space.collocation(measure.anchors).sum(axis=0)
        return measure.t * cont + (1.0 - measure.t) * delta
    return _moments(space, measure, engine)


# ---------------------------------------------------------------------------
# Hermite-Vandermonde machinery

def hermite_vandermonde(space: FunctionSpace, nodes, closed: bool):
    """The square collocation matrix driving the cardinal-basis solve.

    Open: for n nodes and dim 2n, rows are the basis values at every
    node followed by the basis derivatives at every node.  Closed: for
    n+1 nodes, rows are the values at all nodes followed by derivatives
    at the interior nodes only.  Returns (matrix, condition estimate).
    """
    nodes = np.asarray(nodes, dtype=float)
    m = space.dim
    if m % 2 != 0:
        raise ValueError(f"space dimension must be even, got {m}")
    n = m // 2
    expected = n + 1 if closed else n
    if nodes.size != expected:
        raise ValueError(f"expected {expected} nodes for dim {m} ({'closed' if closed else 'open'}), got {nodes.size}")
    if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
        raise ValueError("nodes must be strictly increasing and distinct")

    vals = space.collocation(nodes)
    if closed:
        ders = space.collocation_deriv(nodes[1:-1]) if n > 1 else np.zeros((0, m))
    else:
        ders = space.collocation_deriv(nodes)
    v = np.vstack([vals, ders])
    cond = float(np.linalg.cond(v))
    return v, cond


def hermite_lagrange(
    space: FunctionSpace,
    nodes,
    closed: bool,
    max_condition: float = DEFAULT_OPTIONS.max_condition,
) -> HermiteLagrangeBasis:
    """Solve for the cardinal basis at a node set.

    Raises :class:`SolverError` when the Hermite-Vandermonde matrix is
    singular or its condition estimate exceeds ``max_condition``.
    """
    nodes = np.asarray(nodes, dtype=float)
    v, cond = hermite_vandermonde(space, nodes, closed)
    if not np.isfinite(cond) or cond > max_condition:
        raise SolverError(f"Hermite-Vandermonde condition {cond:.3e} above cap")
    n = space.dim // 2
    try:
        x = np.linalg.solve(v, np.eye(space.dim))
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular Hermite-Vandermonde matrix") from exc
    n_eta = n + 1 if closed else n
    eta_coeffs = x[:, :n_eta].T
    sigma_coeffs = x[:, n_eta:].T
    return HermiteLagrangeBasis(sigma_coeffs, eta_coeffs, nodes, closed, space)


def residuals_and_weights(
    basis: HermiteLagrangeBasis,
    measure=None,
    engine: Engine = DEFAULT_ENGINE,
    moments_vec: np.ndarray | None = None,
):
    """Integrals of the sigma and eta functions against a measure.

    The sigma integrals are the node residuals (all zero exactly at a
    generalised Gauss rule); the eta integrals are the weights.
    """
    if moments_vec is None:
        moments_vec = measure_moments(basis.space, measure, engine)
    return basis.sigma_coeffs @ moments_vec, basis.eta_coeffs @ moments_vec


def _condition_integrals(space, nodes, closed, moments_vec):
    """Fast path: sigma/eta integrals via one transposed solve.

    Returns (sigma_integrals, eta_integrals).  Raises SolverError on a
    numerically singular system.
    """
    vals = space.collocation(nodes)
    n = space.dim // 2
    if closed:
        ders = space.collocation_deriv(nodes[1:-1]) if n > 1 else np.zeros((0, space.dim))
    else:
        ders = space.collocation_deriv(nodes)
    v = np.vstack([vals, ders])
    try:
        z = np.linalg.solve(v.T, moments_vec)
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular Hermite-Vandermonde matrix") from exc
    resid = np.linalg.norm(v.T @ z - moments_vec) / max(1.0, np.linalg.norm(moments_vec))
    if not np.isfinite(resid) or resid > 1e-6:
        raise SolverError(f"Hermite-Vandermonde system numerically singular (residual {resid:.2e})")
    n_eta = n + 1 if closed else n
    return z[n_eta:], z[:n_eta]


def _ordered_with_margin(old_full, new_full, margin):
    """Check that new gaps keep at least ``margin`` of the old gaps."""
    old_gaps = np.diff(old_full)
    new_gaps = np.diff(new_full)
    return np.all(new_gaps >= margin * old_gaps)


def newton_solve(
    space: FunctionSpace,
    measure=None,
    x0=None,
    closed: bool = False,
    opts: SolveOptions = DEFAULT_OPTIONS,
    engine: Engine = DEFAULT_ENGINE,
    moments_vec: np.ndarray | None = None,
) -> QuadratureRule:
    """Damped quasi-Newton iteration for the rule nodes.

    Each node moves by (integral of its sigma function) / (integral of
    its eta function); a backtracking line search keeps the nodes
    strictly ordered with a safety margin and never lets the residual
    grow.  For closed rules, the endpoints stay fixed and only interior
    nodes move.  Returns a rule with positive weights and an exactness
    certificate computed from the same moment vector.
    """
    a, b = space.interval
    m = space.dim
    if m % 2 != 0:
        raise ValueError(f"space dimension must be even, got {m}")
    n = m // 2
    nodes = np.asarray(x0, dtype=float).copy()
    expected = n + 1 if closed else n
    if nodes.size != expected:
        raise ValueError(f"x0 must have {expected} entries, got {nodes.size}")
    if closed:
        tol_end = 1e-12 * (b - a)
        if abs(nodes[0] - a) > tol_end or abs(nodes[-1] - b) > tol_end:
            raise ValueError("closed initial guess must include both endpoints")
        nodes[0], nodes[-1] = a, b
        upd = np.arange(1, n)
    else:
        upd = np.arange(n)
    if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
        raise ValueError("initial nodes must be strictly increasing")

    if moments_vec is None:
        moments_vec = measure_moments(space, measure, engine)

    def extended(vec):
        return vec if closed else np.concatenate([[a], vec, [b]])

    sigma, eta = _condition_integrals(space, nodes, closed, moments_vec)
    iterations = 0
    status = "converged"
    for _ in range(opts.max_iterations):
        res = float(np.max(np.abs(sigma))) if sigma.size else 0.0
        if res < opts.residual_tol:
            break
        eta_upd = eta[upd]
        if np.any(np.abs(eta_upd) < 1e-300):
            raise SolverError("vanishing eta integral; degenerate node configuration")
        delta = np.zeros_like(nodes)
        delta[upd] = sigma / eta_upd

        accepted = False
        lam = 1.0
        for _ in range(opts.damping_levels + 1):
            cand = nodes + lam * delta
            full_old = extended(nodes)
            full_new = extended(cand)
            if np.all(np.diff(full_new) > 0) and _ordered_with_margin(
                full_old, full_new, opts.ordering_margin
            ):
                try:
                    sig_c, eta_c = _condition_integrals(space, cand, closed, moments_vec)
                except SolverError:
                    sig_c = None
                if sig_c is not None:
                    res_c = float(np.max(np.abs(sig_c))) if sig_c.size else 0.0
                    if res_c <= res * (1.0 + 1e-12) + 1e-300:
                        nodes, sigma, eta = cand, sig_c, eta_c
                        accepted = True
                        break
            lam *= 0.5
        if not accepted:
            # evaluation noise of the basis can put a floor under the
            # residual; accept within the noise band, the independent
            # exactness certificate remains the quality gate
            if res <= opts.residual_accept:
                status = "noise-floor"
                break
            raise SolverError(
                f"backtracking failed at residual {res:.3e}; node ordering could not be rescued"
            )
        iterations += 1
        step = float(np.max(np.abs(lam * delta)))
        if step < opts.step_tol:
            res_now = float(np.max(np.abs(sigma))) if sigma.size else 0.0
            if res_now < opts.residual_tol:
                break
            if res_now <= opts.residual_accept:
                status = "noise-floor"
                break
            raise SolverError(f"stagnated with residual {res_now:.3e}")
    else:
        raise SolverError(
            f"no convergence in {opts.max_iterations} iterations "
            f"(residual {np.max(np.abs(sigma)):.3e})"
        )

    weights = eta
    if np.min(weights) <= 0.0:
        raise SolverError(
            "non-positive weight at convergence; the space does not behave "
            "as a Tchebyshev system on this interval"
        )

    errors = np.abs(weights @ space.collocation(nodes) - moments_vec)
    cert = ExactnessCertificate(
        target_dim=m,
        max_abs_error=float(np.max(errors)),
        per_function_errors=errors,
        tol=opts.certificate_tol * max(1.0, float(np.max(np.abs(moments_vec)))),
    )
    return QuadratureRule(
        nodes=nodes,
        weights=weights,
        closed=closed,
        interval=(a, b),
        certificate=cert,
        trace={"iterations": iterations, "status": status,
               "final_residual": float(np.max(np.abs(sigma))) if sigma.size else 0.0},
    )


# ---------------------------------------------------------------------------
# continuation driver

def _interlaced_anchors(prev_nodes, a, b):
    ext = np.concatenate([[a], prev_nodes, [b]])
    return 0.5 * (ext[:-1] + ext[1:])


def _spread_anchors(prev_nodes, count, a, b):
    """``count`` interior anchors spread along the previous node set.

    Reduces to interlaced midpoints when counts line up and otherwise
    places anchors at quantiles of the extended node sequence.
    """
    ext = np.concatenate([[a], np.asarray(prev_nodes, dtype=float), [b]])
    u = np.linspace(0.0, 1.0, ext.size)
    return np.interp((np.arange(count) + 0.5) / count, u, ext)


def _anchor_candidates(prev_nodes, count, a, b):
    """Deterministic initial point-mass placements for one stage."""
    cands = []
    if prev_nodes is not None and len(prev_nodes) == count - 1:
        cands.append(_interlaced_anchors(prev_nodes, a, b))
    if prev_nodes is not None:
        cands.append(_spread_anchors(prev_nodes, count, a, b))
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    cands.append(mid - half * np.cos(np.pi * (np.arange(count) + 0.5) / count))
    cands.append(a + (b - a) * (np.arange(count) + 1.0) / (count + 1.0))
    unique = []
    for c in cands:
        if not any(np.allclose(c, u) for u in unique):
            unique.append(c)
    return unique


def _homotopy(space, m_target, anchors, closed, opts, stage_trace):
    """Advance the blend parameter t from 0 to 1, solving at each step."""
    anchors = np.asarray(anchors, dtype=float)
    anchor_moments = space.collocation(anchors).sum(axis=0)
    state = ContinuationState(t=0.0, anchors=anchors, current_nodes=anchors.copy(), step=opts.t_step)
    state.record()
    streak = 0
    while state.t < 1.0:
        t_next = min(1.0, state.t + state.step)
        m_blend = t_next * m_target + (1.0 - t_next) * anchor_moments
        try:
            rule = newton_solve(
                space,
                x0=state.current_nodes,
                closed=closed,
                opts=opts,
                moments_vec=m_blend,
            )
        except SolverError:
            state.step *= 0.5
            streak = 0
            if state.step < opts.t_step_min:
                raise SolverError(
                    f"measure continuation stalled at t={state.t:.6f} "
                    f"(step below {opts.t_step_min})"
                )
            continue
        state.t = t_next
        state.current_nodes = rule.nodes
        state.record()
        stage_trace.append({"t": t_next, "iterations": rule.trace["iterations"]})
        streak += 1
        if streak >= 2:
            state.step *= opts.t_growth
    return state.current_nodes, rule


def continuation_solve(
    space: FunctionSpace,
    weight=None,
    closed: bool = False,
    opts: SolveOptions = DEFAULT_OPTIONS,
    engine: Engine = DEFAULT_ENGINE,
    force: bool = False,
    rng_seed: int = 0,
) -> QuadratureRule:
    """Full pipeline from a space to a converged rule.

    The space is orthonormalised (if it is not already) and pulled back
    to [-1, 1].  Open rules of increasing size are built by measure
    continuation, each initialised with point masses interlaced between
    the previous rule's nodes.  For a closed rule the interior nodes are
    then seeded from consecutive midpoints of the final open rule (with
    a 5% affine guard against the endpoints) and re-solved with the
    endpoints pinned; if that Newton solve fails, the continuation is
    repeated on the closed formulation.

    A Tchebyshev screen runs first and rejects the space on a "fail"
    verdict unless ``force`` is set.  The returned rule lives on the
    original interval and is certified against the original space.
    """
    if space.dim % 2 != 0:
        raise ValueError(
            f"space dimension must be even (got {space.dim}); augment the space first"
        )
    n = space.dim // 2
    a, b = space.interval

    gram = sampled_gram(space)
    if np.max(np.abs(gram - np.eye(space.dim))) > 1e-6:
        work = orthonormalize(space, engine)
        if work.dim != space.dim:
            raise ValueError("space is rank deficient; orthonormalise and augment first")
    else:
        work = space
    ref = pull_back(work, (-1.0, 1.0), renormalize=True)

    report = tchebyshev_screen(ref, trials=opts.screen_trials, rng_seed=rng_seed)
    if report.verdict == "fail" and not force:
        raise ScreenFailure(
            f"Tchebyshev screen failed (min scaled determinant {report.min_abs_det:.3e}); "
            "pass force=True to attempt the solve anyway"
        )

    if weight is None:
        ref_weight = None
    else:
        def ref_weight(s):
            return weight(a + 0.5 * (b - a) * (np.asarray(s, dtype=float) + 1.0))

    m_full = measure_moments(ref, ref_weight, engine)

    trace = {
        "mode": "closed" if closed else "open",
        "screen": asdict(report),
        "stages": [],
        "closed_fallback": False,
        "endpoints_fixed_outside_homotopy": True,
    }

    prev_nodes = None
    open_rule = None
    ladder_error = None
    for k in range(1, n + 1):
        sub = ref.prefix(2 * k)
        stage_steps: list = []
        solved = False
        for anchors in _anchor_candidates(prev_nodes, k, -1.0, 1.0):
            stage_steps.clear()
            try:
                prev_nodes, open_rule = _homotopy(
                    sub, m_full[: 2 * k], anchors, False, opts, stage_steps
                )
                solved = True
                break
            except SolverError as exc:
                ladder_error = exc
        if solved:
            trace["stages"].append({"size": k, "closed": False, "steps": stage_steps})
        elif k < n:
            # an intermediate rule size may simply not exist for spaces
            # without Tchebyshev structure; skip and respread anchors
            trace["stages"].append({"size": k, "closed": False, "skipped": True})
        elif not closed:
            raise SolverError(f"open ladder failed at size {k}/{n}: {ladder_error}")

    if not closed:
        rule_ref = open_rule
    else:
        candidates = []
        if prev_nodes is not None and len(prev_nodes) == n and n >= 2:
            interior = 0.5 * (prev_nodes[:-1] + prev_nodes[1:])
            lo, hi = -0.9, 0.9
            if interior[0] < lo or interior[-1] > hi:
                if interior.size > 1:
                    interior = lo + (interior - interior[0]) * (hi - lo) / (interior[-1] - interior[0])
                else:
                    interior = np.clip(interior, lo, hi)
            candidates.append(interior)
        if n >= 2:
            for cand in _anchor_candidates(prev_nodes, n - 1, -1.0, 1.0):
                candidates.append(np.clip(cand, -0.95, 0.95))
        else:
            candidates.append(np.array([]))

        rule_ref = None
        closed_error = None
        for interior in candidates:
            x0 = np.concatenate([[-1.0], interior, [1.0]])
            if np.any(np.diff(x0) <= 0):
                continue
            try:
                rule_ref = newton_solve(ref, x0=x0, closed=True, opts=opts, moments_vec=m_full)
                trace["stages"].append({
                    "size": n, "closed": True,
                    "steps": [{"t": 1.0, "iterations": rule_ref.trace["iterations"]}],
                })
                break
            except SolverError:
                pass
            trace["closed_fallback"] = True
            stage_steps = []
            try:
                _, rule_ref = _homotopy(ref, m_full, x0, True, opts, stage_steps)
                trace["stages"].append({"size": n, "closed": True, "steps": stage_steps})
                break
            except SolverError as exc:
                closed_error = exc
        if rule_ref is None:
            raise SolverError(f"closed solve failed for every initialisation: {closed_error}")

    # map back to the user interval
    half = 0.5 * (b - a)
    nodes = a + half * (rule_ref.nodes + 1.0)
    if closed:
        nodes[0], nodes[-1] = a, b
    weights = half * rule_ref.weights
    rule = QuadratureRule(nodes=nodes, weights=weights, closed=closed, interval=(a, b), trace=trace)
    rule.certificate = verify_exactness(rule, space, weight, engine, tol=opts.certificate_tol)
    return rule


def verify_exactness(
    rule: QuadratureRule,
    space: FunctionSpace,
    weight=None,
    engine: Engine = DEFAULT_ENGINE,
    tol: float = 1e-8,
) -> ExactnessCertificate:
    """Independent exactness check of a rule against a space.

    The certificate tolerance is ``tol`` scaled by the largest moment
    magnitude (floored at one); stored errors are raw absolute errors.
    """
    a, b = space.interval
    if np.any(rule.nodes < a - 1e-12 * (b - a)) or np.any(rule.nodes > b + 1e-12 * (b - a)):
        raise ValueError("rule nodes fall outside the space's interval")
    m = measure_moments(space, weight, engine)
    approx = rule.weights @ space.collocation(rule.nodes)
    errors = np.abs(approx - m)
    return ExactnessCertificate(
        target_dim=space.dim,
        max_abs_error=float(np.max(errors)),
        per_function_errors=errors,
        tol=tol * max(1.0, float(np.max(np.abs(m)))),
    )


# ---------------------------------------------------------------------------
# auxiliary rule constructions

def equispaced_rule(
    space: FunctionSpace,
    engine: Engine = DEFAULT_ENGINE,
    n_nodes: int | None = None,
    tol: float = 1e-8,
    max_extra: int = 8,
) -> QuadratureRule:
    """Closed equispaced-node rule exact for the space.

    Starting from ``n_nodes`` (default: the space dimension), weights
    are solved from the exactness conditions; if they are not positive
    or not exact, the node count is increased (falling back to a
    non-negative least-squares fit) until both hold.
    """
    a, b = space.interval
    m_vec = measure_moments(space, None, engine)
    scale = max(1.0, float(np.max(np.abs(m_vec))))
    start = space.dim if n_nodes is None else n_nodes
    if start < space.dim:
        raise ValueError(f"need at least dim={space.dim} nodes, got {start}")
    last_issue = "no candidate count tried"
    for count in range(start, start + max_extra + 1):
        nodes = np.linspace(a, b, count)
        c = space.collocation(nodes)           # (count, dim)
        if count == space.dim:
            try:
                w = np.linalg.solve(c.T, m_vec)
            except np.linalg.LinAlgError:
                last_issue = f"singular collocation at {count} nodes"
                continue
        else:
            w = np.linalg.lstsq(c.T, m_vec, rcond=None)[0]
        resid = float(np.max(np.abs(c.T @ w - m_vec)))
        if resid > tol * scale or np.min(w) <= 0:
            w, _ = scipy.optimize.nnls(c.T, m_vec)
            resid = float(np.max(np.abs(c.T @ w - m_vec)))
            if resid > tol * scale or np.min(w) <= 0:
                last_issue = f"{count} nodes: residual {resid:.2e}, min weight {np.min(w):.2e}"
                continue
        rule = QuadratureRule(nodes=nodes, weights=w, closed=True, interval=(a, b),
                              trace={"construction": "equispaced", "n_nodes": count})
        rule.certificate = verify_exactness(rule, space, None, engine, tol=tol)
        return rule
    raise SolverError(
        f"no positive exact equispaced rule with up to {start + max_extra} nodes ({last_issue})"
    )


def classical_gauss_rule(n: int, interval=(-1.0, 1.0)) -> QuadratureRule:
    """Classical n-point Gauss-Legendre rule mapped to an interval."""
    s, w = np.polynomial.legendre.leggauss(n)
    a, b = interval
    half = 0.5 * (b - a)
    return QuadratureRule(
        nodes=a + half * (s + 1.0), weights=half * w, closed=False, interval=(float(a), float(b))
    )


def classical_lobatto_rule(n_nodes: int, interval=(-1.0, 1.0)) -> QuadratureRule:
    """Classical Gauss-Lobatto rule with ``n_nodes`` points on an interval.

    Interior nodes are the roots of P'_{m-1}; the weights are
    2 / (m (m-1) P_{m-1}(x)^2) on [-1, 1].
    """
    m = n_nodes
    if m < 2:
        raise ValueError("a Lobatto rule needs at least two nodes")
    coeffs = np.zeros(m)
    coeffs[m - 1] = 1.0
    leg = np.polynomial.legendre.Legendre(coeffs)
    interior = np.sort(leg.deriv().roots().real) if m > 2 else np.array([])
    s = np.concatenate([[-1.0], interior, [1.0]])
    w = 2.0 / (m * (m - 1) * leg(s) ** 2)
    a, b = interval
    half = 0.5 * (b - a)
    return QuadratureRule(
        nodes=a + half * (s + 1.0), weights=half * w, closed=True, interval=(float(a), float(b))
    )
