"""Replica-symmetric variational saddle-point equations for Cox overfitting.

The order parameters live in the variational family where the inferred
cumulative hazard is ``k * Lambda0(t)^rho``. With ``q = k u~^2 e^{u~^2}``
as sweep variable, all integrals reduce to Gaussian x exponential double
integrals of the Lambert W function:

* compact system (three equations for ``v, rho`` with ``w = rho S``),
* full system (five equations over ``v, w, rho`` with the Gaussian width
  ``sigma = sqrt((w - rho S)^2 + v^2)``), for checking that ``w = rho S``
  emerges rather than being imposed.

Time integrals are carried out over the survival coordinate: with
``s = e^{-ell}`` the inner integral is ``int_0^inf e^{-ell} f(ell) dell``
(Gauss-Laguerre), which removes the endpoint singularities of
``log log(1/s)``; the Gaussian integral uses probabilist Gauss-Hermite.

Solvers sweep ``q`` as the independent parameter by damped fixed-point
iteration and derive the covariate ratio ``zeta`` from the equations; an
outer bisection inverts ``q -> zeta``. The identity
``int W [log log(1/s) + C_E - 1/rho] = 0``, which would make the theory
exactly independent of the signal strength S, is only measured (reported
as the ``identity`` residual), never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, ParameterError, PhaseBoundaryError, RangeError, SolverError
from .special import (
    DEFAULT_HERMITE_ORDER,
    DEFAULT_LAGUERRE_ORDER,
    EULER_GAMMA,
    QuadratureKind,
    QuadratureRule,
    lambert_w0,
    make_quadrature,
)

#: Largest admissible argument of Lambert W inside the quadrature.
W_ARG_LIMIT = 1e300

#: Default bracket for the q-bisection behind ``solve_for_zeta``. The
#: upper end is sized so the documented zeta grid (up to 0.95) stays
#: reachable.
Q_BRACKET = (1e-12, 1e40)


@dataclass(frozen=True)
class SolverOptions:
    """Quadrature orders and iteration controls for the saddle solvers."""

    hermite_order: int = DEFAULT_HERMITE_ORDER
    laguerre_order: int = DEFAULT_LAGUERRE_ORDER
    tol: float = 1e-10
    damping: float = 0.5
    max_iter: int = 20000

    def __post_init__(self):
        if self.hermite_order < 8 or self.laguerre_order < 8:
            raise ParameterError("quadrature orders must be >= 8")
        if not (0 < self.damping <= 1):
            raise ParameterError("damping must be in (0, 1]")
        if not (np.isfinite(self.tol) and self.tol > 0):
            raise ParameterError("tol must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")

    def to_dict(self) -> dict:
        return {
            "hermite_order": self.hermite_order,
            "laguerre_order": self.laguerre_order,
            "tol": self.tol,
            "damping": self.damping,
            "max_iter": self.max_iter,
        }


@dataclass(frozen=True)
class VariationalSolution:
    """Order parameters at a saddle point, with per-equation residuals."""

    q: float
    zeta: float
    u_tilde: float
    v: float
    w: float
    rho: float
    k: float
    S: float
    E: float
    residuals: dict = field(default_factory=dict)

    @property
    def residual_max(self) -> float:
        keys = [k for k in self.residuals if k != "identity"]
        if not keys:
            return float("nan")
        return float(max(abs(self.residuals[k]) for k in keys))

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "zeta": self.zeta,
            "u_tilde": self.u_tilde,
            "v": self.v,
            "w": self.w,
            "rho": self.rho,
            "k": self.k,
            "S": self.S,
            "E": self.E,
            "residuals": dict(self.residuals),
        }


class _Grid:
    """Precomputed quadrature grid for the double integrals."""

    def __init__(self, hermite: QuadratureRule, laguerre: QuadratureRule):
        if hermite.kind is not QuadratureKind.GAUSS_HERMITE_PROBABILIST:
            raise ParameterError("first rule must be gauss_hermite_probabilist")
        if laguerre.kind is not QuadratureKind.GAUSS_LAGUERRE:
            raise ParameterError("second rule must be gauss_laguerre")
        x = np.repeat(hermite.nodes, laguerre.order)
        ell = np.tile(laguerre.nodes, hermite.order)
        wt = np.repeat(hermite.weights, laguerre.order) * np.tile(
            laguerre.weights, hermite.order
        )
        self.x = x
        self.log_ell = np.log(ell)
        self.wt = wt
        self.wt_logell = wt * self.log_ell
        self.wt_ellm1 = wt * (ell - 1.0)
        self._log_limit = math.log(W_ARG_LIMIT)

    def integrals(self, q: float, scale: float, rho: float) -> dict:
        """Quadrature values of every W-moment used by the equations.

        ``scale`` multiplies the Hermite variable inside the exponent
        (``v`` in the compact system, ``sigma`` in the full one).
        """
        log_arg = math.log(q) + scale * self.x + rho * self.log_ell
        if np.max(log_arg) > self._log_limit:
            raise RangeError("Lambert W argument exceeded 1e300 in quadrature")
        wvals = lambert_w0(np.exp(log_arg))
        u2 = float(self.wt @ wvals)
        zeta = float(self.wt @ (wvals / (1.0 + wvals)))
        var_w = float(self.wt @ (wvals - u2) ** 2)
        return {
            "u2": u2,
            "zeta": zeta,
            "var_w": var_w,
            "w_logell": float(self.wt_logell @ wvals),
            "w_ellm1": float(self.wt_ellm1 @ wvals),
        }


def _default_rules(options: SolverOptions | None):
    options = options or SolverOptions()
    hermite = make_quadrature(QuadratureKind.GAUSS_HERMITE_PROBABILIST, options.hermite_order)
    laguerre = make_quadrature(QuadratureKind.GAUSS_LAGUERRE, options.laguerre_order)
    return _Grid(hermite, laguerre), options


def _coerce_rules(rules) -> _Grid:
    if rules is None:
        grid, _ = _default_rules(None)
        return grid
    if isinstance(rules, _Grid):
        return rules
    hermite, laguerre = rules
    return _Grid(hermite, laguerre)


def compact_rhs(q: float, v: float, rho: float, S: float, rules=None) -> dict:
    """Evaluate the compact three-equation system at one point.

    Returns the covariate ratio implied by the W/(1+W) equation, the
    mean-square order parameter ``u_tilde2``, and the signed residuals of
    the variance and hazard-power equations at that ratio. The
    ``identity_residual`` entry reports the unproven cancellation that
    would make the system strictly S-independent.
    """
    if not (q > 0 and np.isfinite(q)):
        raise ParameterError("q must be positive")
    if v < 0 or rho <= 0 or S <= 0:
        raise ParameterError("need v >= 0, rho > 0, S > 0")
    grid = _coerce_rules(rules)
    parts = grid.integrals(q, v, rho)
    zeta = parts["zeta"]
    identity = parts["w_logell"] + (EULER_GAMMA - 1.0 / rho) * parts["u2"]
    rhs3 = parts["w_ellm1"] - identity / (S * S)
    return {
        "zeta": zeta,
        "u_tilde2": parts["u2"],
        "v2_residual": zeta * v * v - parts["var_w"],
        "rho_residual": zeta * rho - rhs3,
        "identity_residual": identity,
    }


def _damped_fixed_point(evaluate, point, options: SolverOptions):
    """Adaptively damped fixed-point iteration with overflow backtracking.

    ``evaluate(point) -> (parts, residuals, target)`` supplies the
    residual dict (converged when every non-``identity`` entry is below
    ``options.tol``) and the undamped update target. The bare map can be
    expansive (strongly so for small S), so the damping shrinks while the
    residuals grow and relaxes back otherwise; steps that push the
    quadrature past the representable range are retried shorter.
    """
    def res_vec(state):
        return np.array(
            [val for key, val in state[1].items() if key != "identity"]
        )

    def res_norm(state):
        return float(np.max(np.abs(res_vec(state))))

    def admissible(pt):
        # v (and w in the full system) only enter through even/absolute
        # combinations, so the first coordinates may be folded back;
        # the hazard power (last coordinate) must stay positive.
        pt = tuple(abs(x) for x in pt[:-1]) + (pt[-1],)
        return pt if pt[-1] > 0 else None

    def try_newton(point, state):
        # Finite-difference Jacobian; the system is tiny (2 or 3 vars).
        n = len(point)
        r0 = res_vec(state)
        jac = np.empty((r0.size, n))
        for j in range(n):
            h = 1e-6 * (1.0 + abs(point[j]))
            bumped = list(point)
            bumped[j] += h
            adm = admissible(tuple(bumped))
            if adm is None:
                return None
            try:
                jac[:, j] = (res_vec(evaluate(adm)) - r0) / h
            except RangeError:
                return None
        try:
            step = np.linalg.solve(jac, -r0)
        except np.linalg.LinAlgError:
            return None
        norm0 = float(np.max(np.abs(r0)))
        alpha = 1.0
        for _ in range(10):
            cand = admissible(tuple(x + alpha * s for x, s in zip(point, step)))
            if cand is not None:
                try:
                    trial = evaluate(cand)
                    if res_norm(trial) < norm0:
                        return cand, trial
                except RangeError:
                    pass
            alpha *= 0.5
        return None

    d = options.damping
    prev = math.inf
    state = evaluate(point)
    since_newton_fail = 0
    for _ in range(options.max_iter):
        parts, residuals, target = state
        res = res_norm(state)
        if res < options.tol:
            return point, state

        # Terminal phase: damped Newton on the residual vector, immune to
        # slow fixed-point contraction rates.
        if res < 50.0 and since_newton_fail <= 0:
            outcome = try_newton(point, state)
            if outcome is not None:
                point, state = outcome
                continue
            since_newton_fail = 10
        since_newton_fail -= 1

        d = max(0.5 * d, 1e-3) if res > prev else min(1.25 * d, options.damping)
        prev = res
        if not all(np.isfinite(t) for t in target):
            raise SolverError("fixed-point update diverged", residuals)
        for _ in range(12):
            candidate = admissible(
                tuple(x + d * (t - x) for x, t in zip(point, target))
            )
            if candidate is not None:
                try:
                    state = evaluate(candidate)
                    point = candidate
                    break
                except RangeError:
                    pass
            d = max(0.25 * d, 1e-6)
        else:
            raise SolverError("no admissible damped step", residuals)
    raise SolverError(
        f"fixed point did not converge in {options.max_iter} iterations",
        state[1],
    )


def _finish_solution(q, S, zeta, u2, v, w, rho, residuals) -> VariationalSolution:
    if zeta >= 1.0:
        raise PhaseBoundaryError(
            f"covariate ratio reached {zeta:.6f} >= 1", residuals
        )
    k = (q / u2) * math.exp(-u2)
    return VariationalSolution(
        q=float(q),
        zeta=float(zeta),
        u_tilde=float(math.sqrt(u2)),
        v=float(v),
        w=float(w),
        rho=float(rho),
        k=float(k),
        S=float(S),
        E=energy(k, rho),
        residuals=residuals,
    )


def solve_compact_at_q(
    q: float,
    S: float,
    options: SolverOptions | None = None,
    warm_start: tuple[float, float] | None = None,
) -> VariationalSolution:
    """Damped fixed-point solve of the compact system at fixed ``q``.

    From the current ``(v, rho)`` the mean-square parameter and covariate
    ratio are recomputed, then ``v`` is updated from the variance equation
    and ``rho`` from the hazard-power equation. Converged when both
    residuals drop below ``options.tol``. ``w = rho S`` and
    ``k = q e^{-u~^2} / u~^2`` follow by construction.
    """
    grid, options = _default_rules(options)
    if not (q > 0 and np.isfinite(q)):
        raise ParameterError("q must be positive")
    if S <= 0:
        raise ParameterError("S must be positive")

    v, rho = warm_start if warm_start is not None else (0.0, 1.0)
    point = (max(float(v), 0.0), max(float(rho), 1e-8))

    def evaluate(pt):
        v, rho = pt
        parts = grid.integrals(q, v, rho)
        zeta, u2 = parts["zeta"], parts["u2"]
        identity = parts["w_logell"] + (EULER_GAMMA - 1.0 / rho) * u2
        rhs3 = parts["w_ellm1"] - identity / (S * S)
        residuals = {
            "compact1": zeta * v * v - parts["var_w"],
            "compact3": zeta * rho - rhs3,
            "identity": identity,
        }
        target = (math.sqrt(max(parts["var_w"], 0.0) / zeta), rhs3 / zeta)
        return parts, residuals, target

    point, state = _damped_fixed_point(evaluate, point, options)
    parts, residuals, _ = state
    return _finish_solution(
        q, S, parts["zeta"], parts["u2"], point[0], point[1] * S, point[1], residuals
    )


def solve_full_variational(
    q: float,
    S: float,
    options: SolverOptions | None = None,
    warm_start: tuple[float, float, float] | None = None,
) -> VariationalSolution:
    """Solve the five-equation system over ``(v, w, rho)`` at fixed ``q``.

    The Gaussian width is ``sigma = sqrt((w - rho S)^2 + v^2)`` and
    ``w = rho S`` is *not* imposed; whether it emerges is a property the
    tests check.
    """
    grid, options = _default_rules(options)
    if not (q > 0 and np.isfinite(q)):
        raise ParameterError("q must be positive")
    if S <= 0:
        raise ParameterError("S must be positive")

    if warm_start is not None:
        point = tuple(float(x) for x in warm_start)
    else:
        point = (0.0, S, 1.0)

    def evaluate(pt):
        v, w, rho = pt
        sigma = math.hypot(w - rho * S, v)
        parts = grid.integrals(q, sigma, rho)
        zeta, u2 = parts["zeta"], parts["u2"]
        rhs5 = parts["w_logell"] - S * (w - rho * S) * zeta + u2 * EULER_GAMMA
        residuals = {
            "var1": zeta * v * v - parts["var_w"],
            "var3": zeta * w / S - parts["w_ellm1"],
            "var5": u2 / rho - rhs5,
            "identity": parts["w_logell"] + (EULER_GAMMA - 1.0 / rho) * u2,
        }
        target = (
            math.sqrt(max(parts["var_w"], 0.0) / zeta),
            S * parts["w_ellm1"] / zeta,
            u2 / rhs5 if rhs5 > 0 else rho,
        )
        return parts, residuals, target

    point, state = _damped_fixed_point(evaluate, point, options)
    parts, residuals, _ = state
    v, w, rho = point
    return _finish_solution(q, S, parts["zeta"], parts["u2"], v, w, rho, residuals)


def solve_for_zeta(
    zeta_target: float,
    S: float,
    options: SolverOptions | None = None,
    q_bracket: tuple[float, float] = Q_BRACKET,
) -> VariationalSolution:
    """Invert the q -> zeta map by bracketed root finding on log q.

    Monotonicity is verified by the bracket itself (the endpoints must
    straddle the target); inside the bracket a secant step is used when
    it stays in range and plain bisection otherwise. Stops when
    ``|zeta - target| < 1e-8``.
    """
    if not (0 < zeta_target <= 0.99):
        raise ParameterError("zeta_target must lie in (0, 0.99]")
    if S <= 0:
        raise ParameterError("S must be positive")
    options = options or SolverOptions()
    # Bracketing solves can run a little looser; the returned solution is
    # re-polished at the requested tolerance.
    inner = SolverOptions(
        hermite_order=options.hermite_order,
        laguerre_order=options.laguerre_order,
        tol=max(options.tol, 1e-8),
        damping=options.damping,
        max_iter=options.max_iter,
    )

    lo, hi = (math.log(float(b)) for b in q_bracket)
    sol_lo = solve_compact_at_q(math.exp(lo), S, inner)
    if sol_lo.zeta >= zeta_target:
        raise RangeError(
            f"zeta({q_bracket[0]:g}) = {sol_lo.zeta:.3e} already above target"
        )
    sol_hi = solve_compact_at_q(math.exp(hi), S, inner)
    if sol_hi.zeta <= zeta_target:
        raise RangeError(
            f"bracket q in [{q_bracket[0]:g}, {q_bracket[1]:g}] does not reach "
            f"zeta = {zeta_target}"
        )

    # Illinois-type regula falsi in (log q, log zeta): near-linear at small
    # q, and the stagnant-endpoint halving keeps it superlinear on the
    # saturating side.
    f_lo = math.log(sol_lo.zeta) - math.log(zeta_target)
    f_hi = math.log(sol_hi.zeta) - math.log(zeta_target)
    # Warm-start from the lower bracket side only: approaching the saddle
    # from below mirrors the benign cold path, while a far-above start can
    # strand the fixed point.
    warm_lo = (sol_lo.v, sol_lo.rho)
    side = 0
    best = None
    for _ in range(120):
        mid = lo + (hi - lo) * f_lo / (f_lo - f_hi)
        if not (lo + 1e-13 < mid < hi - 1e-13):
            mid = 0.5 * (lo + hi)
        try:
            sol = solve_compact_at_q(math.exp(mid), S, inner, warm_start=warm_lo)
        except SolverError:
            sol = solve_compact_at_q(math.exp(mid), S, inner)
        best = sol
        if abs(sol.zeta - zeta_target) < 1e-8:
            break
        g = math.log(sol.zeta) - math.log(zeta_target)
        if g < 0:
            lo, f_lo, warm_lo = mid, g, (sol.v, sol.rho)
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = mid, g
            if side == 1:
                f_lo *= 0.5
            side = 1
    else:
        raise SolverError(
            f"root finding failed to pin zeta = {zeta_target}; "
            f"best {best.zeta if best else None}"
        )
    return solve_compact_at_q(best.q, S, options, warm_start=(best.v, best.rho))


def energy(k: float, rho: float) -> float:
    """Overfitting measure E = -log k - log rho + (rho - 1) C_E.

    Zero at the no-overfitting point (k, rho) = (1, 1); negative when the
    fitted model beats the truth on its own training data.
    """
    if not (k > 0 and rho > 0 and np.isfinite(k) and np.isfinite(rho)):
        raise DomainError("energy requires k > 0 and rho > 0")
    return float(-math.log(k) - math.log(rho) + (rho - 1.0) * EULER_GAMMA)


def asymptotic_rho(u_tilde: float, w: float, S: float) -> float:
    """Large-time hazard power rho = (w/2S)(1 + sqrt(1 + 4 u~^2 / w^2))."""
    if w <= 0 or S <= 0 or u_tilde < 0:
        raise DomainError("need w > 0, S > 0, u_tilde >= 0")
    return float((w / (2.0 * S)) * (1.0 + math.sqrt(1.0 + 4.0 * u_tilde**2 / w**2)))


#: Hermite order used for the event-time tail integral when no rule is given.
LOG_G_HERMITE_ORDER = 400


def numeric_log_g(x: float, S: float, rules: QuadratureRule | None = None) -> float:
    """log of g(x) = E_y[ exp(S y - x e^{S y}) ] with y standard normal.

    Evaluated fully in the log domain (max-subtracted sum over Hermite
    nodes), so arbitrarily large ``x`` cannot overflow.
    """
    if not (x > 0 and np.isfinite(x)):
        raise ParameterError("x must be positive")
    if S <= 0:
        raise ParameterError("S must be positive")
    if rules is None:
        rules = make_quadrature(QuadratureKind.GAUSS_HERMITE_PROBABILIST, LOG_G_HERMITE_ORDER)
    y = rules.nodes
    wts = rules.weights
    keep = wts > 0.0
    y = y[keep]
    logw = np.log(wts[keep])
    with np.errstate(over="ignore"):
        expo = np.exp(S * y)
    terms = logw + S * y - x * expo
    return float(logsumexp(terms))


def asymptotic_log_g(x: float, S: float) -> float:
    """Two-leading-term tail form of log g via Lambert W.

    ``-(W(x S^2 e^{S^2}) + 1)^2 / (2 S^2) - log(W(x S^2 e^{S^2})) / 2``.
    """
    if not (x > 0 and np.isfinite(x)):
        raise ParameterError("x must be positive")
    if S <= 0:
        raise ParameterError("S must be positive")
    arg = x * S * S * math.exp(S * S)
    w = lambert_w0(arg)
    return float(-((w + 1.0) ** 2) / (2.0 * S * S) - 0.5 * math.log(w))
