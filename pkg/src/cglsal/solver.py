"""Joint learning of graph affinity, fusion weights, and node saliency.

Minimizes, over the affinity matrix W, modality weights alpha, feature
weights beta (both on probability simplexes), and saliency vector s:

    theta/2 * sum_ij w_ij (s_i - s_j)^2  +  lambda * ||s - y||^2
    + sum_m alpha_m^g1 sum_k beta_mk^g2 Tr(W' L_mk W)  +  mu * ||W - I||^2

by cycling through four closed-form updates until the largest element
change across all variables drops below ``epsilon``:

    W     <- (sum_mk alpha_m^g1 beta_mk^g2 L_mk + mu I)^-1 (mu I - theta/4 S)
    beta  <- normalized T_mk^(1/(1-g2)),      T_mk = Tr(W' L_mk W)
    alpha <- normalized H_m^(1/(1-g1)),       H_m  = sum_k beta_mk^g2 T_mk
    s     <- (lambda1 F + I)^-1 y,            F = D - What

with S_ij = (s_i - s_j)^2 and lambda1 = theta / lambda. The s update runs
on ``What``, the symmetrized nonnegative projection of W with zero
diagonal, since the closed form for W can emit slightly negative or
asymmetric entries; the raw W is kept for the other updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DegenerateTrace, SingularSystem
from .graphs import GraphStack

_TRACE_FLOOR = 1e-12
_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class SolverParams:
    """Optimization constants; defaults follow the reference configuration."""

    gamma1: float = 0.5
    gamma2: float = 8.0
    theta: float = 1e-4
    mu: float = 1e-3
    lambda1: float = 4e-3
    epsilon: float = 1e-4
    max_iters: int = 50

    def __post_init__(self):
        if self.gamma1 <= 0.0 or self.gamma1 == 1.0:
            raise ValueError("gamma1 must be positive and != 1")
        if self.gamma2 <= 1.0:
            raise ValueError("gamma2 must be > 1")
        if self.theta < 0.0:
            raise ValueError("theta must be >= 0")
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.lambda1 < 0.0:
            raise ValueError("lambda1 must be >= 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class ObjectiveStep:
    """Objective value around one sub-step, other variables held fixed.

    Each stage is monitored against the objective it minimizes exactly: the
    W step with the raw W in the saliency-smoothness coupling, the s step
    with the projected graph there (the graph the s update actually runs
    on). Under a single convention neither step is monotone, because the
    projection reconciling the two closed forms changes that one term.
    """

    iteration: int
    stage: str
    before: float
    after: float


@dataclass
class TraceRow:
    """End-of-iteration snapshot for the optional CSV dump."""

    iteration: int
    objective: float
    max_delta: float
    alpha: np.ndarray
    beta: np.ndarray


@dataclass
class SolverState:
    """Final variables of one solve plus convergence bookkeeping."""

    W: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    s: np.ndarray
    y: np.ndarray
    iterations: int = 0
    converged: bool = False
    trace: list[TraceRow] = field(default_factory=list)
    objective_steps: list[ObjectiveStep] = field(default_factory=list)

    @property
    def W_hat(self) -> np.ndarray:
        return project_affinity(self.W)


def project_affinity(W: np.ndarray) -> np.ndarray:
    """Symmetrize, clip negatives, and zero the diagonal of a learnt W."""
    out = np.maximum(0.5 * (W + W.T), 0.0)
    np.fill_diagonal(out, 0.0)
    return out


def _spread_matrix(s: np.ndarray) -> np.ndarray:
    """Matrix of squared saliency gaps, S_ij = (s_i - s_j)^2."""
    return (s[:, None] - s[None, :]) ** 2


def _solve_spd(system: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    try:
        factor = cho_factor(system, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise SingularSystem(f"{what}: system is not positive definite") from exc
    solution = cho_solve(factor, rhs, check_finite=False)
    residual = np.linalg.norm(system @ solution - rhs)
    scale = np.linalg.norm(rhs)
    if scale > 0.0 and residual > _RESIDUAL_TOL * scale:
        raise SingularSystem(
            f"{what}: relative residual {residual / scale:.3e} exceeds {_RESIDUAL_TOL}"
        )
    return solution


def combined_laplacian(
    stack: GraphStack, alpha: np.ndarray, beta: np.ndarray, gamma1: float, gamma2: float
) -> np.ndarray:
    """Weighted sum of all layer Laplacians with the current fusion weights."""
    total = np.zeros((stack.n, stack.n))
    for m, k in stack.pairs():
        total += alpha[m] ** gamma1 * beta[m, k] ** gamma2 * stack.laplacians[(m, k)]
    return total


def smoothness_traces(stack: GraphStack, W: np.ndarray) -> np.ndarray:
    """T_mk = Tr(W' L_mk W) for every layer, as an (M, K) array."""
    gram = W @ W.T
    traces = np.empty((stack.M, stack.K))
    for m, k in stack.pairs():
        traces[m, k] = np.vdot(stack.laplacians[(m, k)], gram)
    if not np.isfinite(traces).all():
        raise DegenerateTrace("non-finite smoothness trace")
    if (traces < -1e-8 * max(1.0, np.abs(traces).max())).any():
        raise DegenerateTrace("significantly negative smoothness trace")
    return traces


def update_W(
    stack: GraphStack,
    alpha: np.ndarray,
    beta: np.ndarray,
    s: np.ndarray,
    params: SolverParams,
) -> np.ndarray:
    """Closed-form affinity update; solves an SPD linear system for W."""
    system = combined_laplacian(stack, alpha, beta, params.gamma1, params.gamma2)
    system[np.diag_indices_from(system)] += params.mu
    rhs = -0.25 * params.theta * _spread_matrix(s)
    rhs[np.diag_indices_from(rhs)] += params.mu
    return _solve_spd(system, rhs, "affinity update")


def _beta_from_traces(traces: np.ndarray, gamma2: float) -> np.ndarray:
    powered = np.maximum(traces, _TRACE_FLOOR) ** (1.0 / (1.0 - gamma2))
    return powered / powered.sum(axis=1, keepdims=True)


def _alpha_from_traces(traces: np.ndarray, beta: np.ndarray, gamma1: float, gamma2: float) -> np.ndarray:
    collapsed = (beta**gamma2 * traces).sum(axis=1)
    powered = np.maximum(collapsed, _TRACE_FLOOR) ** (1.0 / (1.0 - gamma1))
    return powered / powered.sum()


def update_beta(stack: GraphStack, W: np.ndarray, gamma2: float) -> np.ndarray:
    """Feature-layer weights: beta_mk proportional to T_mk^(1/(1-gamma2))."""
    return _beta_from_traces(smoothness_traces(stack, W), gamma2)


def update_alpha(
    stack: GraphStack, W: np.ndarray, beta: np.ndarray, gamma1: float, gamma2: float
) -> np.ndarray:
    """Modality weights: alpha_m proportional to H_m^(1/(1-gamma1))."""
    return _alpha_from_traces(smoothness_traces(stack, W), beta, gamma1, gamma2)


def update_s(affinity: np.ndarray, y: np.ndarray, lambda1: float) -> np.ndarray:
    """Rank nodes against the query indicator on a nonnegative graph.

    Solves (lambda1 * (D - affinity) + I) s = y; ``affinity`` must already
    be symmetric and nonnegative with a zero diagonal.
    """
    y = np.asarray(y, dtype=np.float64)
    if lambda1 == 0.0:
        return y.copy()
    lap = -lambda1 * affinity
    lap[np.diag_indices_from(lap)] += lambda1 * affinity.sum(axis=1) + 1.0
    return _solve_spd(lap, y, "saliency update")


def objective(
    stack: GraphStack,
    W: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
    s: np.ndarray,
    y: np.ndarray,
    params: SolverParams,
    traces: np.ndarray | None = None,
    coupling: np.ndarray | None = None,
) -> float:
    """Joint model objective at the given variables.

    ``coupling`` is the graph used in the saliency-smoothness term and
    defaults to the raw W (the literal model); pass the projected graph to
    evaluate the objective the s update minimizes.
    """
    if traces is None:
        traces = smoothness_traces(stack, W)
    if coupling is None:
        coupling = W
    coeff = alpha**params.gamma1
    smooth = float((coeff[:, None] * beta**params.gamma2 * traces).sum())
    fit = params.mu * float(((W - np.eye(stack.n)) ** 2).sum())
    s_smooth = 0.5 * params.theta * float(np.vdot(coupling, _spread_matrix(s)))
    lam = params.theta / params.lambda1 if params.lambda1 > 0.0 else 0.0
    rank = lam * float(((s - y) ** 2).sum())
    return smooth + fit + s_smooth + rank


def solve(stack: GraphStack, y: np.ndarray, params: SolverParams | None = None) -> SolverState:
    """Run the alternating optimization from the standard initialization.

    alpha and beta start uniform, s starts at the query indicator, and the
    previous-W baseline for the change metric is the identity (the fitting
    prior). Stops when the largest absolute element change across W, alpha,
    beta, and s falls below ``epsilon``, or after ``max_iters`` cycles.
    """
    if params is None:
        params = SolverParams()
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (stack.n,) or not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("y must be a binary vector over the graph nodes")
    if not y.any():
        raise ValueError("y must select at least one query node")

    alpha = np.full(stack.M, 1.0 / stack.M)
    beta = np.full((stack.M, stack.K), 1.0 / stack.K)
    s = y.copy()
    W = np.eye(stack.n)
    traces = smoothness_traces(stack, W)

    state = SolverState(W=W, alpha=alpha, beta=beta, s=s, y=y.copy())
    for it in range(1, params.max_iters + 1):
        obj_before_w = objective(stack, W, alpha, beta, s, y, params, traces=traces)
        W_new = update_W(stack, alpha, beta, s, params)
        traces = smoothness_traces(stack, W_new)
        obj_after_w = objective(stack, W_new, alpha, beta, s, y, params, traces=traces)
        state.objective_steps.append(ObjectiveStep(it, "W", obj_before_w, obj_after_w))

        beta_new = _beta_from_traces(traces, params.gamma2)
        alpha_new = _alpha_from_traces(traces, beta_new, params.gamma1, params.gamma2)

        projected = project_affinity(W_new)
        obj_before_s = objective(
            stack, W_new, alpha_new, beta_new, s, y, params,
            traces=traces, coupling=projected,
        )
        s_new = update_s(projected, y, params.lambda1)
        obj_after_s = objective(
            stack, W_new, alpha_new, beta_new, s_new, y, params,
            traces=traces, coupling=projected,
        )
        state.objective_steps.append(ObjectiveStep(it, "s", obj_before_s, obj_after_s))

        delta = max(
            np.abs(W_new - W).max(),
            np.abs(alpha_new - alpha).max(),
            np.abs(beta_new - beta).max(),
            np.abs(s_new - s).max(),
        )
        W, alpha, beta, s = W_new, alpha_new, beta_new, s_new
        state.trace.append(
            TraceRow(it, obj_after_s, float(delta), alpha.copy(), beta.copy())
        )
        state.iterations = it
        if delta < params.epsilon:
            state.converged = True
            break

    state.W, state.alpha, state.beta, state.s = W, alpha, beta, s
    return state


def write_trace_csv(path, state: SolverState) -> None:
    """Dump the per-iteration trace as CSV for offline inspection."""
    m, k = state.beta.shape
    header = ["iter", "objective", "max_delta"]
    header += [f"alpha_{i}" for i in range(m)]
    header += [f"beta_{i}{j}" for i in range(m) for j in range(k)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in state.trace:
            cells = [str(row.iteration), f"{row.objective:.12g}", f"{row.max_delta:.12g}"]
            cells += [f"{a:.12g}" for a in row.alpha]
            cells += [f"{b:.12g}" for b in row.beta.ravel()]
            fh.write(",".join(cells) + "\n")
