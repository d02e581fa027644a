"""Best responses, Nash equilibrium computation and equilibrium verifiers.

The atomic game is solved by damped simultaneous best-response relaxation.
Every best response is exact: a per-player bisection/Newton search on the
budget multiplier wraps a per-range solve of the stationarity condition

    alpha f nu K^(alpha-1) / (nu + K^alpha)^2 = tau + lambda * eps

(closed form for alpha = 1, monotone Newton in log K for alpha < 1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .game import AtomicProfile, GameSpec, atomic_utilities, validate_spec, xi


_STALL_WINDOW = 20


class NoMaximizerError(ValueError):
    """A player's utility has an open supremum (no opponent weight on a paid range)."""


@dataclass(frozen=True)
class SolverOptions:
    # None picks min(0.5, 2 / N), which cancels the symmetric mode of the relaxation
    omega: float | None = None
    max_iters: int = 10_000
    tol_profile: float = 1e-10
    tol_kkt: float = 1e-8
    seed: int = 0
    # halve omega whenever the step size grows; 0 disables
    min_omega: float = 1e-3

    def __post_init__(self):
        if self.omega is not None and not (0 < self.omega <= 1):
            raise ValueError("omega must lie in (0, 1]")
        if self.tol_profile <= 0 or self.tol_kkt <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class KKTReport:
    lambda_: np.ndarray
    mu: np.ndarray
    stationarity: float
    comp_slack: float
    feasibility: float

    @property
    def max_residual(self) -> float:
        return max(self.stationarity, self.comp_slack, self.feasibility)

    def as_dict(self) -> dict:
        return {
            "stationarity": float(self.stationarity),
            "comp_slack": float(self.comp_slack),
            "feasibility": float(self.feasibility),
        }


@dataclass
class EquilibriumResult:
    profile: AtomicProfile
    kkt: KKTReport
    iterations: int
    converged: bool
    omega: float = 0.5
    message: str = ""

    @property
    def k(self) -> np.ndarray:
        return self.profile.k

    @property
    def lambda_(self) -> np.ndarray:
        return self.kkt.lambda_

    @property
    def mu(self) -> np.ndarray:
        return self.kkt.mu

    def to_json(self) -> dict:
        return {
            "k": self.k.tolist(),
            "lambda": self.kkt.lambda_.tolist(),
            "mu": self.kkt.mu.tolist(),
            "residuals": self.kkt.as_dict(),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


# ---------------------------------------------------------------------------
# per-range stationarity


def _weights(K: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(K > 0, np.power(np.maximum(K, 0.0), alpha), 0.0)


def opponent_weights(spec: GameSpec, K) -> np.ndarray:
    """``nu_{-n,m}``: non-player weight plus every other player's weight."""
    W = _weights(np.asarray(K, dtype=float), spec.alpha)
    N = W.shape[0]
    others = np.empty_like(W)
    for n in range(N):
        others[n] = W[np.arange(N) != n].sum(axis=0)
    return spec.chis + others


def _newton_log_k(alpha, f, nu, c):
    # root of log(alpha f nu) + (alpha-1) u - 2 log(nu + e^{alpha u}) = log c;
    # the left side is concave decreasing in u, so Newton from an upper bound
    # descends monotonically onto the root
    log_afnu = np.log(alpha * f * nu)
    log_c = np.log(c)
    u_small = (np.log(alpha * f) - np.log(nu) - log_c) / (1.0 - alpha)
    u_large = (log_afnu - log_c) / (1.0 + alpha)
    u = np.minimum(u_small, u_large)
    for _ in range(200):
        ea = np.exp(alpha * u)
        phi = log_afnu + (alpha - 1.0) * u - 2.0 * np.log(nu + ea) - log_c
        dphi = (alpha - 1.0) - 2.0 * alpha * ea / (nu + ea)
        step = phi / dphi
        u = u - step
        if np.all(np.abs(step) <= 1e-14 * np.maximum(1.0, np.abs(u))):
            break
    return np.exp(u)


def stationary_liquidity(alpha: float, f, nu, c):
    """Maximiser of ``f K^a / (nu + K^a) - c K`` over ``K >= 0`` (elementwise).

    ``c`` is the marginal cost ``tau + lambda eps``. Returns ``inf`` where the
    cost is zero on a paid range, and requires ``nu > 0`` on paid ranges.
    """
    f, nu, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (f, nu, c)))
    out = np.zeros(f.shape)
    paid = f > 0
    free = paid & (c <= 0)
    out[free] = np.inf
    live = paid & ~free
    if not np.any(live):
        return out
    fl, nul, cl = f[live], nu[live], c[live]
    if alpha == 1.0:
        out[live] = np.maximum(0.0, np.sqrt(fl * nul / cl) - nul)
    else:
        out[live] = _newton_log_k(alpha, fl, nul, cl)
    return out


def _dk_dc(alpha, f, nu, k):
    # derivative of the stationary liquidity with respect to the marginal cost
    f, nu, k = np.broadcast_arrays(f, nu, k)
    out = np.zeros(k.shape)
    pos = (k > 0) & np.isfinite(k)
    if not np.any(pos):
        return out
    fk, nuk, kk = f[pos], nu[pos], k[pos]
    ka = kk ** alpha
    g = alpha * fk * nuk * kk ** (alpha - 1.0) / (nuk + ka) ** 2
    dg = g * ((alpha - 1.0) / kk - 2.0 * alpha * kk ** (alpha - 1.0) / (nuk + ka))
    out[pos] = 1.0 / dg
    return out


# ---------------------------------------------------------------------------
# best responses


def _check_open_supremum(spec: GameSpec, nu: np.ndarray, rows):
    bad = (nu <= 0) & (spec.fees > 0)
    if np.any(bad):
        n, m = np.argwhere(bad)[0]
        raise NoMaximizerError(
            f"player {rows[n]} faces no competing weight on paid range {m}: "
            "utility has an open supremum and no maximizer"
        )


def _solve_multipliers(spec, nu, budgets, lam_lo, lam_hi):
    """Safeguarded Newton on the budget multiplier, vectorised over players."""
    f, tau, eps = spec.fees, spec.taus, spec.eps
    alpha = spec.alpha

    def used(lam):
        k = stationary_liquidity(alpha, f, nu, tau + lam[:, None] * eps)
        return k, k @ eps

    lo, hi = lam_lo.copy(), lam_hi.copy()
    lam = 0.5 * (lo + hi)
    for _ in range(300):
        k, A = used(lam)
        gap = A - budgets
        over = gap > 0
        lo = np.where(over, lam, lo)
        hi = np.where(over, hi, lam)
        slope = (_dk_dc(alpha, f, nu, k) * eps * eps).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = lam - gap / slope
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        nxt = np.where(ok, newton, 0.5 * (lo + hi))
        done = (np.abs(gap) <= 1e-13 * budgets) | (np.abs(nxt - lam) <= 1e-15 * lam) | (hi - lo <= 1e-15 * hi)
        if np.all(done):
            break
        lam = np.where(done, lam, nxt)
    return lam, k


def _best_responses(spec: GameSpec, K: np.ndarray, rows=None):
    """Exact best responses of ``rows`` (default: all players) against ``K``."""
    rows = np.arange(spec.N) if rows is None else np.atleast_1d(rows)
    nu = opponent_weights(spec, K)[rows]
    _check_open_supremum(spec, nu, rows)
    budgets = spec.budgets[rows]
    f, tau, eps = spec.fees, spec.taus, spec.eps

    k = stationary_liquidity(spec.alpha, f, nu, np.broadcast_to(tau, nu.shape))
    with np.errstate(invalid="ignore"):
        A = np.where(np.isinf(k), np.inf, k * eps).sum(axis=1)
    lam = np.zeros(len(rows))
    binding = A > budgets
    if np.any(binding):
        nb = nu[binding]
        Bb = budgets[binding]
        lo = np.zeros(len(Bb))
        hi = np.ones(len(Bb))
        live = (nb > 0) & (f > 0)
        scale = np.where(live, f / np.where(live, nb, 1.0) / eps, 0.0).max(axis=1)
        hi = np.maximum(hi, scale)
        for _ in range(2000):
            kh = stationary_liquidity(spec.alpha, f, nb, tau + hi[:, None] * eps)
            still = (kh @ eps) > Bb
            if not np.any(still):
                break
            hi = np.where(still, 2.0 * hi, hi)
        lam_b, k_b = _solve_multipliers(spec, nb, Bb, lo, hi)
        k[binding] = k_b
        lam[binding] = lam_b
    # never exceed the budget through rounding
    A = k @ eps
    over = A > budgets
    if np.any(over):
        k[over] *= (budgets[over] / A[over])[:, None]
    return k, lam


def best_response(spec: GameSpec, K, n: int) -> np.ndarray:
    """Utility-maximising row for player ``n`` holding the other rows fixed."""
    K = np.asarray(K, dtype=float)
    k, _ = _best_responses(spec, K, rows=[n])
    return k[0]


def line_best_response(spec: GameSpec, K, n: int, support=None) -> np.ndarray:
    """Best row of the form ``L * 1_S`` (one position spanning ``support``).

    ``support`` is a boolean mask of atomic ranges (default: all). With a
    single atomic range this coincides with :func:`best_response`.
    """
    K = np.asarray(K, dtype=float)
    mask = np.ones(spec.M, bool) if support is None else np.asarray(support, bool)
    if spec.M == 1 and mask.all():
        return best_response(spec, K, n)
    nu = opponent_weights(spec, K)[n][mask]
    f, a = spec.fees[mask], spec.alpha
    tau_total = float(spec.taus[mask].sum())
    cap = spec.budgets[n] / spec.eps[mask].sum()
    row = np.zeros(spec.M)
    paid = f > 0
    if not np.any(paid):
        return row
    if np.any(nu[paid] <= 0):
        raise NoMaximizerError(f"player {n} faces no competing weight on a paid range of the support")
    f, nu = f[paid], nu[paid]

    def slope(L):
        La = L ** a
        return float(np.sum(a * f * nu * L ** (a - 1.0) / (nu + La) ** 2) - tau_total)

    tiny = 1e-300
    if slope(cap) >= 0:
        L = cap
    elif a == 1.0 and slope(tiny) <= 0:
        L = 0.0
    else:
        L = brentq(slope, tiny, cap, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    row[mask] = L
    return row


# ---------------------------------------------------------------------------
# KKT certificate


def marginal_utility(spec: GameSpec, K) -> np.ndarray:
    """Partial derivative of each player's utility in its own entries."""
    K = np.asarray(K, dtype=float)
    nu = opponent_weights(spec, K)
    a, f = spec.alpha, spec.fees
    with np.errstate(divide="ignore", invalid="ignore"):
        Ka = _weights(K, a)
        G = a * f * nu * np.power(K, a - 1.0) / (nu + Ka) ** 2
        at_zero = np.where(a == 1.0, f / nu, np.where(f > 0, np.inf, 0.0))
        G = np.where(K > 0, G, at_zero)
    G = np.where(f > 0, G, 0.0)
    return G - spec.taus


def kkt_residuals(spec: GameSpec, K) -> KKTReport:
    """Recover budget/sign multipliers from stationarity and report violations."""
    K = np.asarray(K, dtype=float)
    G = marginal_utility(spec, K)
    eps = spec.eps
    pos = K > 0
    A = K @ eps
    gap = A - spec.budgets

    def row_residuals(n, lam):
        with np.errstate(invalid="ignore"):
            d = G[n] - lam * eps
        stat = max(np.max(np.abs(d[pos[n]]), initial=0.0), np.max(np.maximum(d[~pos[n]], 0.0), initial=0.0))
        return float(stat), float(abs(lam * gap[n]))

    lam = np.zeros(spec.N)
    stat = np.zeros(spec.N)
    cs = np.zeros(spec.N)
    for n in range(spec.N):
        # the multiplier is not observed directly: take the better of zero and
        # the value stationarity implies on the support
        candidates = [0.0]
        if np.any(pos[n]):
            r = G[n, pos[n]] / eps[pos[n]]
            candidates.append(max(0.0, 0.5 * (r.min() + r.max())))
        scored = [(max(row_residuals(n, c)), c) for c in candidates]
        lam[n] = min(scored)[1]
        stat[n], cs[n] = row_residuals(n, lam[n])
    lam_eps = lam[:, None] * eps
    mu = np.where(pos, 0.0, np.maximum(lam_eps - G, 0.0))
    stationarity = float(stat.max(initial=0.0))
    comp_slack = float(cs.max(initial=0.0))
    feas = max(0.0, float(np.max(gap, initial=0.0)), float(-K.min(initial=0.0)))
    return KKTReport(lam, mu, stationarity, comp_slack, feas)


# ---------------------------------------------------------------------------
# relaxation


def initial_profile(spec: GameSpec, seed=0) -> np.ndarray:
    """Random strictly positive feasible profile."""
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.1, 1.0, size=(spec.N, spec.M))
    frac = rng.uniform(0.2, 1.0, size=spec.N)
    return raw * (frac * spec.budgets / (raw @ spec.eps))[:, None]


def initial_omega(spec: GameSpec, opts: SolverOptions) -> float:
    """Damping of the first relaxation step.

    Along the direction where every player moves together the best response
    has slope about ``1 - N/2``, so damping ``2/N`` removes that mode while
    ``4/N`` is the stability limit.
    """
    if opts.omega is not None:
        return float(opts.omega)
    return min(0.5, 2.0 / spec.N)


def solve_ne(spec: GameSpec, opts: SolverOptions | None = None, init=None) -> EquilibriumResult:
    """Unique Nash equilibrium of the atomic game by damped relaxation.

    The step tolerance is relative to ``max(1, max K)`` so that pools quoted
    in raw on-chain liquidity units converge as well as unit-scale games.
    """
    opts = opts or SolverOptions()
    problems = validate_spec(spec)
    if problems:
        raise ValueError("; ".join(problems))
    if not np.any(spec.fees > 0):
        K = np.zeros((spec.N, spec.M))
        kkt = kkt_residuals(spec, K)
        return EquilibriumResult(AtomicProfile(K, spec.player_ids), kkt, 0, True, initial_omega(spec, opts),
                                 "no fees: zero profile")

    K = initial_profile(spec, opts.seed) if init is None else np.array(init, dtype=float)
    omega = omega0 = initial_omega(spec, opts)
    prev = best = np.inf
    since_best = since_change = falling = 0
    step_ok = False
    it = 0
    res = np.inf
    for it in range(1, opts.max_iters + 1):
        BR, _ = _best_responses(spec, K)
        step = BR - K
        res = float(np.max(np.abs(step)))
        scale = max(1.0, float(np.max(K)))
        if res <= opts.tol_profile * scale:
            step_ok = True
            break
        if res < 0.999 * best:
            best, since_best = res, 0
        else:
            since_best += 1
        falling = falling + 1 if res < prev else 0
        since_change += 1
        # a growing step or a stalled best step means omega is past the
        # stability limit of the relaxation (which shrinks like 4/N); a
        # cooldown keeps one slow transient from halving it repeatedly
        if (opts.min_omega and omega > opts.min_omega and since_change >= _STALL_WINDOW
                and (res > prev or since_best >= _STALL_WINDOW)):
            omega = max(opts.min_omega, 0.5 * omega)
            best, since_best, since_change = res, 0, 0
        elif omega < omega0 and falling >= 2 * _STALL_WINDOW:
            omega = min(omega0, 2.0 * omega)
            falling = since_change = 0
        prev = res
        K = K + omega * step
    # snapping onto the exact best response keeps exact zeros at the boundary
    K_final, _ = _best_responses(spec, K)
    kkt = kkt_residuals(spec, K_final)
    converged = step_ok and kkt.max_residual <= opts.tol_kkt
    if converged:
        msg = "converged"
    elif step_ok:
        msg = f"profile settled but KKT residual {kkt.max_residual:.3e} exceeds {opts.tol_kkt:.1e}"
    else:
        msg = f"no convergence within {opts.max_iters} iterations (last step {res:.3e})"
    return EquilibriumResult(AtomicProfile(K_final, spec.player_ids), kkt, it, converged, omega, msg)


# ---------------------------------------------------------------------------
# closed form for equal budgets


@dataclass
class ClosedFormEquilibrium:
    profile: np.ndarray
    budget_limited: bool
    multiplier: float
    degenerate: bool = False


def closed_form_constant_budget(spec: GameSpec) -> ClosedFormEquilibrium:
    """Symmetric equilibrium when every budget is equal and ``chi = 0``.

    Each player holds ``alpha (N-1) f_m / (N^2 (tau_m + lam eps_m))`` where
    ``lam = 0`` if that fits the budget and otherwise solves the budget
    equation (its left side decreases strictly in ``lam``).
    """
    B = spec.budgets
    if not np.allclose(B, B[0], rtol=1e-12, atol=0):
        raise ValueError("closed form requires equal budgets")
    if np.any(spec.chis != 0):
        raise ValueError("closed form requires zero non-player weight")
    N, M = spec.N, spec.M
    if N == 1:
        return ClosedFormEquilibrium(np.zeros((1, M)), False, 0.0, degenerate=True)
    f, tau, eps, a = spec.fees, spec.taus, spec.eps, spec.alpha
    coef = a * (N - 1) / N ** 2

    def level(lam):
        with np.errstate(divide="ignore"):
            return np.where(f > 0, coef * f / (tau + lam * eps), 0.0)

    def spend(lam):
        return float(level(lam) @ eps)

    B0 = float(B[0])
    paid = f > 0
    if np.all(tau[paid] > 0) and spend(0.0) <= B0:
        return ClosedFormEquilibrium(np.tile(level(0.0), (N, 1)), False, 0.0)
    hi = 1.0
    while spend(hi) > B0:
        hi *= 2.0
    lam = brentq(lambda x: spend(x) - B0, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return ClosedFormEquilibrium(np.tile(level(lam), (N, 1)), True, float(lam))


# ---------------------------------------------------------------------------
# structural verifiers


@dataclass
class CheckReport:
    passed: bool
    details: dict = field(default_factory=dict)


def _waterfill_once(spec, K, plus, tol):
    A = K @ spec.eps
    B = spec.budgets
    k_tol = tol * max(1.0, float(np.max(K, initial=0.0)))
    out = {"n_plus": [int(i) for i in np.flatnonzero(plus)]}
    ok = True
    if np.any(plus):
        rows = K[plus]
        spread = float(np.max(rows.max(axis=0) - rows.min(axis=0), initial=0.0))
        h_m = rows.mean(axis=0)
        excess = float(np.max(K[~plus] - h_m, initial=-np.inf)) if np.any(~plus) else -np.inf
        h = float(h_m @ spec.eps)
        gap = float(np.max(np.abs(A - np.minimum(h, B)) / np.maximum(1.0, B)))
        zero_level = (h_m <= 0) & (spec.fees > 0) & (spec.chis == 0)
        ok = spread <= k_tol and excess <= k_tol and gap <= tol and not np.any(zero_level)
        out.update(h_m=h_m.tolist(), h=h, row_spread=spread, excess_over_level=max(excess, 0.0),
                   budget_gap=gap, zero_levels=int(zero_level.sum()))
    else:
        gap = float(np.max((B - A) / np.maximum(1.0, B)))
        ok = gap <= tol
        out.update(h_m=K.max(axis=0).tolist(), h=float(np.max(B)), budget_gap=gap)
    return ok, out


def waterfill_check(spec: GameSpec, result, tol: float = 1e-7) -> CheckReport:
    """Check the waterfilling structure of an equilibrium profile.

    Players whose budget slack lies within a decade of the classification
    tolerance are tried as both binding and non-binding.
    """
    K = np.asarray(result.k if isinstance(result, EquilibriumResult) else result, dtype=float)
    A = K @ spec.eps
    slack = (spec.budgets - A) / np.maximum(1.0, spec.budgets)
    base = slack > tol
    border = (slack > tol / 10) & (slack <= tol * 10)
    candidates = [base]
    if np.any(border):
        candidates += [base | border, base & ~border]
    best = None
    for plus in candidates:
        ok, details = _waterfill_once(spec, K, plus, tol)
        if ok:
            return CheckReport(True, details)
        best = best or details
    return CheckReport(False, best)


def structure_checks(spec: GameSpec, result, tol: float = 1e-7, util_rtol: float = 1e-8) -> CheckReport:
    """Budget dominance, positive liquidity and constant utility checks.

    The last two only apply without non-player weight; they are reported as
    ``None`` when skipped.
    """
    K = np.asarray(result.k if isinstance(result, EquilibriumResult) else result, dtype=float)
    B = spec.budgets
    k_tol = tol * max(1.0, float(np.max(K, initial=0.0)))
    worst_dom = 0.0
    worst_eq = 0.0
    for i, j in itertools.permutations(range(spec.N), 2):
        if np.isclose(B[i], B[j], rtol=1e-12, atol=0):
            worst_eq = max(worst_eq, float(np.max(np.abs(K[i] - K[j]))))
        elif B[i] < B[j]:
            worst_dom = max(worst_dom, float(np.max(K[i] - K[j])))
    dominance = worst_dom <= k_tol and worst_eq <= k_tol
    details = {"dominance_violation": worst_dom, "equal_budget_spread": worst_eq}

    no_chi = bool(np.all(spec.chis == 0))
    positive = None
    if spec.alpha < 1 and no_chi:
        paid = spec.fees > 0
        positive = bool(np.all(K[:, paid] > 0))
        details["min_entry"] = float(K[:, paid].min(initial=np.inf))

    constant = None
    A = K @ spec.eps
    unconstrained = np.all((B - A) > tol * np.maximum(1.0, B))
    if no_chi and unconstrained:
        N, a = spec.N, spec.alpha
        target = ((1 - a) * N + a) / N ** 2 * float(spec.fees.sum())
        U = atomic_utilities(spec, K)
        err = float(np.max(np.abs(U - target)))
        constant = err <= util_rtol * max(1.0, abs(target))
        details.update(utility_target=target, utility_error=err)

    passed = dominance and positive is not False and constant is not False
    details.update(dominance=dominance, positive_liquidity=positive, constant_utility=constant)
    return CheckReport(passed, details)


def lift_to_original(result, grid) -> list[dict]:
    """Equilibrium of the original game placing every row on atomic ranges."""
    K = np.asarray(result.k if isinstance(result, EquilibriumResult) else result, dtype=float)
    return [xi(row, grid) for row in K]
