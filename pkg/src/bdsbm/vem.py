"""Variational EM: ELBO, the VE and VM steps, and the fitting loop."""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .exceptions import EstimationError, InputError, SolverError
from .model import PER_COMMUNITY, RATE_MODES, SHARED, ModelParams
from .rates import estimate_rates, exposure_intervals
from .variational import (
    VariationalState,
    clip_pi,
    feasible_death_targets,
    initial_size_marginals,
    newborn_delta,
    normalize_log,
    propagate_marginal,
    solve_birth_transition,
    solve_death_transition,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitOptions:
    """Options of the variational EM loop.

    Parameters
    ----------
    max_iterations : int
    elbo_rel_tolerance : float
        Stop once ``|L_t - L_{t-1}| / |L_t|`` falls below this value.
    fixed_point_sweeps : int
        Gauss-Seidel sweeps over the initial population per VE step.
    seed : int
        Seed of the initialization (the EM loop itself is deterministic).
    rate_mode : {"shared", "per-community"}
    """

    max_iterations: int = 100
    elbo_rel_tolerance: float = 1e-6
    fixed_point_sweeps: int = 1
    seed: int = 0
    rate_mode: str = SHARED

    def __post_init__(self):
        if self.max_iterations < 0:
            raise InputError("max_iterations must be non-negative")
        if not self.elbo_rel_tolerance > 0:
            raise InputError("elbo_rel_tolerance must be positive")
        if self.fixed_point_sweeps < 1:
            raise InputError("fixed_point_sweeps must be at least 1")
        if self.rate_mode not in RATE_MODES:
            raise InputError(f"unknown rate_mode {self.rate_mode!r}")


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    ``elbo_trace[0]`` is the ELBO after the first VE step at the initial
    parameters; every later entry follows one VM step and one VE step, so the
    trace has ``n_iter + 1`` entries.
    """

    params: ModelParams
    state: VariationalState
    elbo_trace: list
    labels: np.ndarray
    converged: bool
    n_iter: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def elbo(self):
        return self.elbo_trace[-1]

    @property
    def K(self):
        return self.params.K


def _rate_logs(params):
    with np.errstate(divide="ignore"):
        return np.log(params.birth_rates()), np.log(params.death_rates())


def ve_step(state, params, network, sweeps=1, diagnostics=None):
    """One VE step: V0 fixed-point sweeps, then a forward pass over events.

    Parameters
    ----------
    state : VariationalState
        Only ``delta`` is read; newborn rows are recomputed.
    params : ModelParams
    network : TemporalNetwork
    sweeps : int
    diagnostics : dict, optional
        Counters updated in place.

    Returns
    -------
    VariationalState
    """
    history = network.history
    K = params.K
    delta = np.array(state.delta, dtype=float, copy=True)
    if delta.shape != (history.n_individuals, K):
        raise InputError(f"delta must have shape {(history.n_individuals, K)}")
    diag = diagnostics if diagnostics is not None else {}
    for key in ("clamped_death_targets", "degenerate_rows", "solver_iterations"):
        diag.setdefault(key, 0)
    diag.setdefault("max_death_clamp", 0.0)

    pi = clip_pi(params.pi)
    log_pi1, log_pi0 = np.log(pi), np.log1p(-pi)
    A, B = network.edge_counts, network.non_edge_counts
    W1, W0 = A @ delta, B @ delta
    per_comm = params.rate_mode == PER_COMMUNITY
    log_lam, log_mu = _rate_logs(params)
    with np.errstate(divide="ignore"):
        log_beta = np.log(params.beta)

    def evidence(i):
        return log_pi1 @ W1[i] + log_pi0 @ W0[i]

    def set_delta(i, new):
        change = new - delta[i]
        if np.any(change):
            W1[...] += np.outer(A[:, i], change)
            W0[...] += np.outer(B[:, i], change)
            delta[i] = new

    for _ in range(sweeps):
        for i in range(history.n0):
            log_w = log_beta + evidence(i)
            if per_comm and history.dies[i]:
                log_w = log_w + log_mu
            new, bad = normalize_log(log_w)
            diag["degenerate_rows"] += int(bad)
            set_delta(i, new)

    M = history.n_events
    marg = initial_size_marginals(delta[: history.n0], K)
    gamma_mar, stays, moves = [marg], [], []
    rho_birth = np.full(M, np.nan)
    rho_death = np.full((M, K), np.nan)
    for ell in range(M):
        i, kind = int(history.ids[ell]), int(history.kinds[ell])
        try:
            if kind == 1:
                log_w = evidence(i)
                if per_comm:
                    log_w = log_w + log_lam
                    if history.dies[i]:
                        log_w = log_w + log_mu
                sol = solve_birth_transition(log_w, marg)
                diag["solver_iterations"] += sol.iterations
                rho_birth[ell] = sol.rho
                stay, move = sol.stay, sol.up
                new = newborn_delta(sol.up, marg)
                set_delta(i, new / new.sum())
            else:
                targets, moved = feasible_death_targets(delta[i], marg)
                if moved > 1e-9:
                    diag["clamped_death_targets"] += 1
                    diag["max_death_clamp"] = max(diag["max_death_clamp"], moved)
                stay = np.empty_like(marg)
                move = np.empty_like(marg)
                for k in range(K):
                    sol = solve_death_transition(targets[k], marg[k])
                    diag["solver_iterations"] += sol.iterations
                    rho_death[ell, k] = sol.rho
                    stay[k], move[k] = sol.stay, sol.down
        except SolverError as exc:
            raise SolverError(f"event {ell}: {exc}", event_index=ell,
                              diagnostics=exc.diagnostics) from exc
        marg = propagate_marginal(marg, stay, move, kind)
        gamma_mar.append(marg)
        stays.append(stay)
        moves.append(move)

    if diag["clamped_death_targets"]:
        logger.debug("%d death targets clamped", diag["clamped_death_targets"])
    return VariationalState(delta, gamma_mar, stays, moves, rho_birth, rho_death)


def block_statistics(delta, network):
    """Expected edge and non-edge counts between blocks over ordered pairs."""
    S1 = delta.T @ network.edge_counts @ delta
    S0 = delta.T @ network.non_edge_counts @ delta
    return S1, S0


def vm_step(state, network, rate_mode=SHARED, previous=None, diagnostics=None):
    """Maximize the ELBO over the parameters for a fixed variational state.

    Parameters
    ----------
    state : VariationalState
        Must be propagated when ``rate_mode`` is ``"per-community"``.
    network : TemporalNetwork
    rate_mode : {"shared", "per-community"}
    previous : ModelParams, optional
        Supplies the value of ``pi`` for blocks without any co-alive pair
        mass. Without it the overall density is used.

    Returns
    -------
    ModelParams
    """
    history = network.history
    delta = state.delta
    K = delta.shape[1]
    if history.n0 < 1:
        raise EstimationError("the initial population is empty")
    S1, S0 = block_statistics(delta, network)
    S1 = 0.5 * (S1 + S1.T)
    S0 = 0.5 * (S0 + S0.T)
    den = S1 + S0
    empty = den <= 0
    if previous is not None:
        fallback = np.asarray(previous.pi, dtype=float)
    else:
        total = network.pair_exposure.sum()
        density = network.edge_counts.sum() / total if total > 0 else 0.0
        fallback = np.full((K, K), density)
    pi = np.where(empty, fallback, S1 / np.where(empty, 1.0, den))
    pi = np.clip(0.5 * (pi + pi.T), 0.0, 1.0)
    if diagnostics is not None:
        diagnostics["empty_blocks"] = diagnostics.get("empty_blocks", 0) + int(empty.sum())

    beta = delta[: history.n0].mean(axis=0)
    beta = beta / beta.sum()

    if rate_mode == SHARED:
        est = estimate_rates(history)
        lam, mu = est.lambda_hat, est.mu_hat
    elif rate_mode == PER_COMMUNITY:
        if not state.is_propagated():
            raise InputError("per-community rates need propagated size marginals")
        _, durations = exposure_intervals(history)
        exposure = durations @ state.expected_sizes()
        births, deaths = history.birth_events, history.death_events
        nb = delta[history.ids[births]].sum(axis=0)
        nd = delta[history.ids[deaths]].sum(axis=0)
        safe = np.where(exposure > 0, exposure, 1.0)
        lam = np.where(exposure > 0, nb / safe, 0.0)
        mu = np.where(exposure > 0, nd / safe, 0.0)
    else:
        raise InputError(f"unknown rate_mode {rate_mode!r}")
    return ModelParams(lam, mu, beta, pi, rate_mode)


def elbo_terms(state, params, network):
    """The ELBO split into named terms (their sum is :func:`elbo`)."""
    history = network.history
    delta = state.delta
    if not state.is_propagated():
        raise InputError("the ELBO needs propagated size marginals")
    S1, S0 = block_statistics(delta, network)
    pi = params.pi
    terms = {"edges": 0.5 * float(np.sum(xlogy(S1, pi) + xlogy(S0, 1.0 - pi)))}

    d0 = delta[: history.n0]
    terms["initial"] = float(np.sum(xlogy(d0, params.beta)))
    terms["initial_entropy"] = -float(np.sum(xlogy(d0, d0)))

    birth_log_n = 0.0
    birth_rate = 0.0
    entropy = 0.0
    lam = params.birth_rates()
    for ell in history.birth_events:
        prev = state.gamma_mar[ell]
        up, stay = state.move[ell], state.stay[ell]
        mass = up * prev
        n = np.arange(prev.shape[1])
        birth_log_n += float(np.sum(mass[:, 1:] * np.log(n[1:])))
        birth_rate += float(np.sum(xlogy(mass.sum(axis=1), lam)))
        entropy -= float(np.sum(prev * (xlogy(stay, stay) + xlogy(up, up))))
    terms["birth_size"] = birth_log_n
    terms["transition_entropy"] = entropy

    deaths = history.death_events
    if params.rate_mode == SHARED:
        n_birth = history.birth_events.size
        terms["rates"] = float(
            xlogy(n_birth, params.lam) + xlogy(deaths.size, params.mu)
            - (params.lam + params.mu) * history.exposure
        )
    else:
        _, durations = exposure_intervals(history)
        exposure = durations @ state.expected_sizes()
        mu = params.death_rates()
        death_mass = delta[history.ids[deaths]].sum(axis=0)
        terms["rates"] = float(
            birth_rate + np.sum(xlogy(death_mass, mu)) - np.dot(lam + mu, exposure)
        )
    return terms


def elbo(state, params, network):
    """Evidence lower bound of a propagated state under ``params``."""
    return float(sum(elbo_terms(state, params, network).values()))


def map_labels(state_or_delta):
    """Per-individual argmax of the memberships; ties go to the lowest index."""
    delta = getattr(state_or_delta, "delta", state_or_delta)
    return np.argmax(np.asarray(delta), axis=1)


def fit(network, init_delta, init_params, options=None):
    """Run variational EM from an initial membership matrix and parameters.

    Parameters
    ----------
    network : TemporalNetwork
    init_delta : ndarray, shape (N, K)
    init_params : ModelParams
        Starting ``pi`` and ``beta``. In shared mode the rates are replaced by
        their closed-form estimates before the first VE step; per-community
        rates are kept only if every birth rate is positive and otherwise
        start from the shared estimates.
    options : FitOptions, optional

    Returns
    -------
    FitResult
        The state with the highest ELBO is returned if the loop stops
        without meeting the tolerance.
    """
    options = options or FitOptions()
    history = network.history
    K = init_params.K
    init_delta = np.asarray(init_delta, dtype=float)
    if init_delta.shape != (history.n_individuals, K):
        raise InputError(f"init_delta must have shape {(history.n_individuals, K)}")
    if history.n0 < 1:
        raise InputError("fitting needs a non-empty initial population")

    if options.rate_mode == SHARED:
        est = estimate_rates(history)
        params = ModelParams(est.lambda_hat, est.mu_hat, init_params.beta, init_params.pi, SHARED)
    elif init_params.rate_mode == PER_COMMUNITY and np.all(init_params.birth_rates() > 0):
        params = init_params
    else:
        # community rates start from the label-free estimates
        est = estimate_rates(history)
        params = ModelParams(np.full(K, est.lambda_hat), np.full(K, est.mu_hat),
                             init_params.beta, init_params.pi, PER_COMMUNITY)

    diagnostics = {"elbo_decreases": 0, "max_relative_dip": 0.0}
    state = ve_step(VariationalState(init_delta), params, network,
                    options.fixed_point_sweeps, diagnostics)
    trace = [elbo(state, params, network)]
    best = (trace[0], state, params)
    converged = False
    n_iter = 0
    while n_iter < options.max_iterations:
        params = vm_step(state, network, options.rate_mode, previous=params,
                         diagnostics=diagnostics)
        state = ve_step(state, params, network, options.fixed_point_sweeps, diagnostics)
        value = elbo(state, params, network)
        n_iter += 1
        change = value - trace[-1]
        trace.append(value)
        if change < 0:
            diagnostics["elbo_decreases"] += 1
            diagnostics["max_relative_dip"] = max(
                diagnostics["max_relative_dip"], -change / abs(value)
            )
        if value > best[0]:
            best = (value, state, params)
        if abs(change) <= options.elbo_rel_tolerance * abs(value):
            converged = True
            break
    if not converged:
        logger.info("no convergence after %d iterations; returning best state", n_iter)
        _, state, params = best
    diagnostics["iterations"] = n_iter
    return FitResult(params, state, trace, map_labels(state), converged, n_iter, diagnostics)
