"""Structured variational family over community memberships and sizes.

The family holds a membership vector ``delta[i]`` for every individual, the
marginal pmf ``gamma_mar[l][k, n]`` of the size of community ``k`` just after
event ``l`` (``l = 0`` is the initial time), and, for every event, the
transition probabilities between consecutive marginals. Birth transitions are
parametrized by one positive multiplier ``rho`` per event and death
transitions by one multiplier per event and community; both are found by
bracketed root finding on a strictly monotone constraint.

Transition arrays are stored per event as two ``(K, N_prev + 1)`` arrays
indexed by the size *before* the event: ``move[k, n]`` is the probability
that community ``k`` grows (birth) or shrinks (death) given it had ``n``
members, and ``stay = 1 - move`` is stored separately to keep the small
complement accurate.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, xlogy

from .exceptions import InputError, SolverError

#: Residual tolerance of the birth and death constraint solves.
SOLVER_TOL = 1e-8
#: Entries of ``pi`` are kept inside ``[PI_FLOOR, 1 - PI_FLOOR]`` when used as
#: evidence in membership updates.
PI_FLOOR = 1e-12
_LOG_FLOOR = -1e4
_BRACKET_PAD = 40.0


def poisson_binomial_pmf(success_probs):
    """Exact pmf of a sum of independent Bernoulli variables.

    Parameters
    ----------
    success_probs : array-like of float
        Success probability of each trial, each in ``[0, 1]``.

    Returns
    -------
    ndarray, shape (n + 1,)
        ``pmf[m]`` is the probability of exactly ``m`` successes.

    Examples
    --------
    >>> poisson_binomial_pmf([0.5, 0.5])
    array([0.25, 0.5 , 0.25])
    """
    p = np.asarray(success_probs, dtype=float).reshape(-1)
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise InputError("success probabilities must lie in [0, 1]")
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for m, q in enumerate(p, start=1):
        # insert one trial: pmf'[n] = (1 - q) pmf[n] + q pmf[n - 1]
        pmf[1 : m + 1] = (1.0 - q) * pmf[1 : m + 1] + q * pmf[:m]
        pmf[0] *= 1.0 - q
    return pmf


def initial_size_marginals(delta_v0, K=None):
    """Size pmfs of every community at the initial time.

    Parameters
    ----------
    delta_v0 : ndarray, shape (N0, K)
        Memberships of the initial population.

    Returns
    -------
    ndarray, shape (K, N0 + 1)
    """
    delta_v0 = np.asarray(delta_v0, dtype=float)
    if K is None:
        K = delta_v0.shape[1]
    delta_v0 = delta_v0.reshape(-1, K)
    return np.stack([poisson_binomial_pmf(delta_v0[:, k]) for k in range(K)])


def expected_sizes(marginals):
    """Expected community sizes ``sum_n n * pmf[k, n]``."""
    marginals = np.asarray(marginals)
    return marginals @ np.arange(marginals.shape[-1])


def _check_transitions(stay, move):
    if stay.shape != move.shape:
        raise InputError("stay and move arrays must have the same shape")
    if (np.any(stay < -1e-12) or np.any(move < -1e-12)
            or np.max(np.abs(stay + move - 1.0), initial=0.0) > 1e-9):
        raise InputError("transitions are not row-stochastic")


def propagate_marginal(prev, stay, move, kind):
    """Push size pmfs through one event.

    Parameters
    ----------
    prev : ndarray, shape (K, N_prev + 1) or (N_prev + 1,)
        Size pmfs before the event.
    stay, move : ndarray, same shape as ``prev``
        Transition probabilities indexed by the size before the event.
    kind : {1, -1}
        Birth or death.

    Returns
    -------
    ndarray
        Pmfs over ``0 .. N_prev + kind``.
    """
    prev = np.asarray(prev, dtype=float)
    stay = np.asarray(stay, dtype=float)
    move = np.asarray(move, dtype=float)
    _check_transitions(stay, move)
    if stay.shape != prev.shape:
        raise InputError("transitions and marginal have different shapes")
    if kind == 1:
        out = np.zeros(prev.shape[:-1] + (prev.shape[-1] + 1,))
        out[..., :-1] += stay * prev
        out[..., 1:] += move * prev
    elif kind == -1:
        out = stay[..., :-1] * prev[..., :-1]
        out += move[..., 1:] * prev[..., 1:]
    else:
        raise InputError(f"event kind must be +1 or -1, got {kind!r}")
    return out


def transition_matrix(stay, move, kind):
    """Dense ``(N_prev + 1) x (N_prev + 1 + kind)`` matrix of one community's transitions."""
    n_prev = stay.shape[-1]
    P = np.zeros((n_prev, n_prev + kind))
    for n in range(n_prev):
        if n < P.shape[1]:
            P[n, n] = stay[n]
        if 0 <= n + kind < P.shape[1]:
            P[n, n + kind] = move[n]
    return P


# ---------------------------------------------------------------------------
# birth events


@dataclass
class BirthSolution:
    """Result of a birth-transition solve.

    ``rho`` is ``exp(log_rho)``; it is ``inf`` when the newborn's community is
    already forced (some community certainly holds everybody) and ``0`` when
    the constraint is only met in the limit.
    """

    log_rho: float
    stay: np.ndarray
    up: np.ndarray
    residual: float
    iterations: int = 0

    @property
    def rho(self):
        return float(np.exp(self.log_rho))


def _birth_logits(log_weights, n_prev):
    n = np.arange(1, n_prev)
    with np.errstate(divide="ignore"):
        return np.log(n)[None, :] + np.asarray(log_weights, dtype=float)[:, None]


def birth_constraint(log_rho, log_weights, prev):
    """Total expected up-mass ``f(rho)`` of a birth event.

    This is the left-hand side of the constraint that exactly one community
    grows; it equals ``sum_k sum_n up(k, n) * prev[k, n]`` where
    ``up(k, n) = n p_k / (rho + n p_k)`` for ``0 < n < N_prev`` and the
    boundary ``up(k, N_prev) = 1``.
    """
    prev = np.asarray(prev, dtype=float)
    n_prev = prev.shape[1] - 1
    z = _birth_logits(log_weights, n_prev) - log_rho
    return float(np.sum(expit(z) * prev[:, 1:n_prev]) + prev[:, n_prev].sum())


def _birth_transitions(log_rho, log_weights, n_prev):
    K = len(log_weights)
    up = np.zeros((K, n_prev + 1))
    stay = np.ones((K, n_prev + 1))
    if n_prev >= 2:
        z = _birth_logits(log_weights, n_prev) - log_rho
        up[:, 1:n_prev] = expit(z)
        stay[:, 1:n_prev] = expit(-z)
    up[:, n_prev] = 1.0
    stay[:, n_prev] = 0.0
    return stay, up


def solve_birth_transition(log_weights, prev_marginals, tol=SOLVER_TOL):
    """Solve the birth constraint for ``rho`` and return the transitions.

    Parameters
    ----------
    log_weights : array-like, shape (K,)
        ``log p(l, k)``: log-evidence of the newborn joining each community.
        Entries may be ``-inf``.
    prev_marginals : ndarray, shape (K, N_prev + 1)
        Size pmfs just before the birth; ``N_prev >= 1``.

    Returns
    -------
    BirthSolution

    Raises
    ------
    SolverError
        When even ``rho -> 0`` cannot deliver unit up-mass, which happens
        only when the marginals have leaked mass.
    """
    prev = np.asarray(prev_marginals, dtype=float)
    lw = np.asarray(log_weights, dtype=float).reshape(-1)
    K = lw.size
    if prev.ndim != 2 or prev.shape[0] != K:
        raise InputError("prev_marginals must have shape (K, N_prev + 1)")
    n_prev = prev.shape[1] - 1
    if n_prev < 1:
        raise InputError("a birth needs at least one living individual")
    if np.all(lw == -np.inf) or np.any(lw == np.inf) or np.any(np.isnan(lw)):
        raise SolverError("birth log-weights are degenerate", diagnostics={"log_weights": lw})

    # shift for conditioning; rho scales with exp(shift)
    shift = lw.max()
    lw = np.maximum(lw - shift, _LOG_FLOOR)

    forced = float(prev[:, n_prev].sum())
    interior = prev[:, 1:n_prev]
    total = forced + float(interior.sum())
    if total < 1.0 - tol:
        raise SolverError(
            f"birth constraint unreachable: f(0+) = {total!r} < 1",
            diagnostics={"f_at_zero": total, "forced": forced},
        )
    if forced >= 1.0 - 1e-12 or not np.any(interior > 0):
        stay, up = _birth_transitions(np.inf, lw, n_prev)
        return BirthSolution(np.inf, stay, up, abs(forced - 1.0))

    g = lambda x: birth_constraint(x, lw, prev) - 1.0
    z = _birth_logits(lw, n_prev)[interior > 0]
    lo, hi = float(z.min()) - _BRACKET_PAD, float(z.max()) + _BRACKET_PAD
    g_lo, g_hi = g(lo), g(hi)
    if g_lo <= 0.0:
        x, iters = lo, 0
    elif g_hi >= 0.0:
        x, iters = hi, 0
    else:
        x, info = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                         maxiter=500, full_output=True, disp=False)
        iters = info.iterations
    residual = abs(g(x))
    if residual > tol:
        raise SolverError(f"birth solve residual {residual!r} exceeds {tol}",
                          diagnostics={"log_rho": x + shift})
    stay, up = _birth_transitions(x, lw, n_prev)
    return BirthSolution(x + shift, stay, up, residual, iters)


def newborn_delta(up, prev_marginals):
    """Membership of the newborn implied by birth transitions.

    ``delta[k] = sum_{n >= 1} up[k, n] * prev[k, n]``.
    """
    return np.sum(np.asarray(up) * np.asarray(prev_marginals), axis=1)


# ---------------------------------------------------------------------------
# death events


@dataclass
class DeathSolution:
    """Result of a death-transition solve for one community.

    ``down[m]`` is the probability that the community shrinks given it had
    ``m`` members before the death: ``rho m / (1 + rho m)`` for
    ``0 < m < N_prev``, ``1`` at ``m = N_prev`` and ``0`` at ``m = 0``.
    """

    rho: float
    stay: np.ndarray
    down: np.ndarray
    residual: float
    target: float
    clamped: bool = False
    iterations: int = 0


def death_bounds(prev_marginal):
    """Attainable range ``[f(0), f(inf)]`` of the death constraint."""
    prev = np.asarray(prev_marginal, dtype=float)
    return float(prev[-1]) if prev.size > 1 else 0.0, float(prev[1:].sum())


def death_constraint(log_rho, prev_marginal):
    """Expected down-mass ``sum_m down(m) * prev[m]`` at ``rho = exp(log_rho)``."""
    prev = np.asarray(prev_marginal, dtype=float)
    n_prev = prev.size - 1
    m = np.arange(1, n_prev)
    value = float(np.dot(expit(np.log(m) + log_rho), prev[1:n_prev])) if n_prev > 1 else 0.0
    return value + (float(prev[n_prev]) if n_prev >= 1 else 0.0)


def _death_transitions(log_rho, n_prev):
    down = np.zeros(n_prev + 1)
    stay = np.ones(n_prev + 1)
    if n_prev >= 2:
        z = np.log(np.arange(1, n_prev)) + log_rho
        down[1:n_prev] = expit(z)
        stay[1:n_prev] = expit(-z)
    if n_prev >= 1:
        down[n_prev], stay[n_prev] = 1.0, 0.0
    return stay, down


def solve_death_transition(target, prev_marginal, tol=SOLVER_TOL):
    """Solve the death constraint of one community.

    Finds ``rho >= 0`` with ``sum_m down(m) prev[m] = target``, where ``down``
    is the parametric form documented in :class:`DeathSolution`. Targets
    outside the attainable range are clamped to it and flagged.

    Parameters
    ----------
    target : float
        Probability that the dying individual belongs to this community.
    prev_marginal : ndarray, shape (N_prev + 1,)

    Returns
    -------
    DeathSolution
    """
    prev = np.asarray(prev_marginal, dtype=float).reshape(-1)
    n_prev = prev.size - 1
    if n_prev < 1:
        raise InputError("a death needs at least one living individual")
    lo_val, hi_val = death_bounds(prev)
    target = float(target)
    clamped_target = min(max(target, lo_val), hi_val)
    clamped = abs(clamped_target - target) > 1e-9
    target_used = clamped_target

    interior = prev[1:n_prev]
    if target_used <= lo_val + 1e-15 or not np.any(interior > 0):
        stay, down = _death_transitions(-np.inf, n_prev)
        return DeathSolution(0.0, stay, down, abs(death_constraint(-np.inf, prev) - target_used),
                             target_used, clamped)
    if target_used >= hi_val - 1e-15:
        stay, down = _death_transitions(np.inf, n_prev)
        return DeathSolution(np.inf, stay, down, abs(death_constraint(np.inf, prev) - target_used),
                             target_used, clamped)

    g = lambda x: death_constraint(x, prev) - target_used
    lo, hi = -np.log(n_prev) - _BRACKET_PAD, _BRACKET_PAD
    g_lo, g_hi = g(lo), g(hi)
    if g_lo >= 0.0:
        x, iters = lo, 0
    elif g_hi <= 0.0:
        x, iters = hi, 0
    else:
        x, info = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                         maxiter=500, full_output=True, disp=False)
        iters = info.iterations
    residual = abs(g(x))
    if residual > tol:
        raise SolverError(f"death solve residual {residual!r} exceeds {tol}",
                          diagnostics={"target": target_used})
    stay, down = _death_transitions(x, n_prev)
    return DeathSolution(float(np.exp(x)), stay, down, residual, target_used, clamped, iters)


def feasible_death_targets(delta_row, prev_marginals):
    """Project a dying individual's membership onto the attainable targets.

    Each target is clipped to its community's attainable range; the
    difference to unit total mass is then spread over the communities in
    proportion to their remaining slack, so the targets still sum to one
    whenever that is attainable.

    Returns
    -------
    targets : ndarray, shape (K,)
    moved : float
        Largest absolute change applied to any entry.
    """
    delta_row = np.asarray(delta_row, dtype=float)
    bounds = np.array([death_bounds(p) for p in prev_marginals])
    lo, hi = bounds[:, 0], bounds[:, 1]
    t = np.clip(delta_row, lo, hi)
    gap = 1.0 - t.sum()
    if gap > 0:
        slack = hi - t
        if slack.sum() > 0:
            t = t + slack * min(1.0, gap / slack.sum())
    elif gap < 0:
        slack = t - lo
        if slack.sum() > 0:
            t = t - slack * min(1.0, -gap / slack.sum())
    return t, float(np.max(np.abs(t - delta_row), initial=0.0))


# ---------------------------------------------------------------------------
# evidence


def clip_pi(pi):
    return np.clip(np.asarray(pi, dtype=float), PI_FLOOR, 1.0 - PI_FLOOR)


def log_pair_weight(i, delta, pi, network, clip=False):
    """Log-evidence of each community for individual ``i``.

    ``log p(k) = sum_{j != i} sum_{k'} delta[j, k'] sum_{t in Upsilon_ij}
    log phi(e_ij(t), k, k')``, computed from the pairwise edge and
    co-presence counts.

    Parameters
    ----------
    i : int
    delta : ndarray, shape (N, K)
    pi : ndarray, shape (K, K)
    network : TemporalNetwork
    clip : bool
        Keep ``pi`` away from 0 and 1 so the result is finite.

    Returns
    -------
    ndarray, shape (K,)
    """
    pi = clip_pi(pi) if clip else np.asarray(pi, dtype=float)
    w1 = network.edge_counts[i] @ delta
    w0 = network.non_edge_counts[i] @ delta
    return np.sum(xlogy(w1[None, :], pi) + xlogy(w0[None, :], 1.0 - pi), axis=1)


def normalize_log(log_w):
    """Softmax of a log-weight vector, uniform if every entry is ``-inf``.

    Returns
    -------
    probs : ndarray
    degenerate : bool
        True if the uniform fallback was used.
    """
    log_w = np.asarray(log_w, dtype=float)
    top = log_w.max()
    if not np.isfinite(top):
        return np.full(log_w.size, 1.0 / log_w.size), True
    w = np.exp(log_w - top)
    return w / w.sum(), False


def update_initial_delta(i, delta, beta, pi, network, log_mu=None, dies=False):
    """Fixed-point membership update of an initial individual.

    ``delta_new[k] ~ beta_k * prod_j prod_k' prod_t phi(e_ij(t), k, k')^delta[j, k']``,
    additionally multiplied by ``mu_k`` when community-specific death rates
    are used and ``i`` dies in the window.
    """
    with np.errstate(divide="ignore"):
        log_w = np.log(np.asarray(beta, dtype=float))
    log_w = log_w + log_pair_weight(i, delta, pi, network, clip=True)
    if dies and log_mu is not None:
        log_w = log_w + log_mu
    return normalize_log(log_w)[0]


# ---------------------------------------------------------------------------
# state


@dataclass
class VariationalState:
    """Variational distribution of one fit.

    Attributes
    ----------
    delta : ndarray, shape (N, K)
    gamma_mar : list of ndarray
        ``gamma_mar[l]`` has shape ``(K, N(tau_l) + 1)`` for ``l = 0 .. M``.
    stay, move : list of ndarray
        Per event ``l = 1 .. M`` (stored at index ``l - 1``), arrays of shape
        ``(K, N(tau_{l-1}) + 1)``. ``move`` is the up-probability at births
        and the down-probability at deaths.
    rho_birth : ndarray, shape (M,)
        ``rho_l`` at births, NaN at deaths.
    rho_death : ndarray, shape (M, K)
        ``rho_lk`` at deaths, NaN at births.
    """

    delta: np.ndarray
    gamma_mar: list = field(default_factory=list)
    stay: list = field(default_factory=list)
    move: list = field(default_factory=list)
    rho_birth: np.ndarray = None
    rho_death: np.ndarray = None

    @property
    def K(self):
        return self.delta.shape[1]

    def copy(self):
        return VariationalState(
            self.delta.copy(),
            [g.copy() for g in self.gamma_mar],
            [s.copy() for s in self.stay],
            [m.copy() for m in self.move],
            None if self.rho_birth is None else self.rho_birth.copy(),
            None if self.rho_death is None else self.rho_death.copy(),
        )

    def is_propagated(self):
        return bool(self.gamma_mar)

    def expected_sizes(self):
        """``(M + 1, K)`` array of expected community sizes at every event."""
        return np.stack([expected_sizes(g) for g in self.gamma_mar])
