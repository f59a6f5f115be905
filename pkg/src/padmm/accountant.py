"""zCDP accounting: mechanism costs, composition, DP conversions, budgeting.

All costs are plain nonnegative floats (rho values).  The planner turns a
run-level (epsilon, delta) target into every noise scale and the
regularizer floor the training loops need:

  rho_total = epsilon^2 / (4 ln(1/delta))
  per-release budget = rho_total / T                        (full-broadcast mode)
                     = (rho_total - rho_svt) / c            (gated mode, after the
                                                             one-time SVT charge
                                                             rho_svt = (e1+e2)^2/2)
  rho_i2 = splits * budget,  rho_i1 = (1 - splits) * budget
  eps_i1 = rho_i1 + 2 sqrt(rho_i1 ln(1/delta_i1)),  eps_i3 = 0.99 eps_i1
  lambda_hat >= max_i 2.8 N c1 / ((eps_i1 - eps_i3) |D_i|)
  sigma_i1 = 2 sqrt(2 ln(1.25/delta_i1)) / (|D_i| eps_i3)
  sigma_i2 = beta / (sqrt(2 rho_i2) (lambda_hat/N + 2 eta deg_i))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class BudgetError(ValueError):
    """Raised when a privacy budget request cannot be satisfied."""


def gaussian_zcdp(delta2_sensitivity: float, sigma: float) -> float:
    """zCDP cost of the Gaussian mechanism: sensitivity^2 / (2 sigma^2)."""
    if sigma <= 0:
        raise BudgetError("sigma must be positive")
    return delta2_sensitivity**2 / (2.0 * sigma**2)


def dp_to_zcdp(epsilon: float, delta: float) -> float:
    """Smallest rho that suffices for (epsilon, delta)-DP.

    epsilon^2 / (4 ln(1/delta)) for delta > 0; epsilon^2 / 2 for pure DP.
    """
    if epsilon <= 0 or not 0 <= delta < 1:
        raise BudgetError("need epsilon > 0 and delta in [0, 1)")
    if delta == 0:
        return 0.5 * epsilon**2
    return epsilon**2 / (4.0 * math.log(1.0 / delta))


def zcdp_to_dp(rho: float, delta: float) -> float:
    """DP epsilon guaranteed by rho-zCDP: rho + 2 sqrt(rho ln(1/delta))."""
    if rho < 0 or not 0 < delta < 1:
        raise BudgetError("need rho >= 0 and delta in (0, 1)")
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def zcdp_sufficient_epsilon(rho: float, delta: float) -> float:
    """Epsilon for which rho-zCDP is exactly sufficient at this delta.

    Inverse of dp_to_zcdp: 2 sqrt(rho ln(1/delta)).  Used in run reports so
    a planned budget converts back to the configured epsilon exactly.
    """
    if rho < 0 or not 0 < delta < 1:
        raise BudgetError("need rho >= 0 and delta in (0, 1)")
    return 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def serial_compose(costs) -> float:
    """Mechanisms on the same data compose additively."""
    return float(sum(costs))


def parallel_compose(costs) -> float:
    """Mechanisms on disjoint data partitions cost the maximum."""
    costs = list(costs)
    if not costs:
        raise BudgetError("parallel composition of an empty list")
    return float(max(costs))


def svt_open_cost(eps1: float, eps2: float) -> float:
    """zCDP cost of an SVT gate for its whole lifetime: (eps1+eps2)^2 / 2."""
    return 0.5 * (eps1 + eps2) ** 2


@dataclass(frozen=True)
class BudgetPlan:
    """Derived privacy parameters for one run."""

    epsilon_total: float
    delta_total: float
    T: int
    splits: float
    rho_total: float
    rho_i1: float
    rho_i2: float
    epsilon_i1: float
    epsilon_i3: float
    delta_i1: float
    sigma_i1: dict
    sigma_i2: dict
    lambda_hat_floor: float
    c_broadcasts: int | None = None
    svt_eps: tuple | None = None  # (eps1, eps2) when gated

    @property
    def rho_svt(self) -> float:
        if self.svt_eps is None:
            return 0.0
        return svt_open_cost(*self.svt_eps)

    @property
    def per_release_rho(self) -> float:
        return self.rho_i1 + self.rho_i2


def plan_budget(
    epsilon: float,
    delta: float,
    T: int,
    splits: float,
    dataset_sizes: dict,
    n_agents: int,
    eta: float,
    degrees: dict,
    beta: float,
    c1: float = 0.25,
    c_broadcasts: int | None = None,
    eps_ratio_svt: tuple | None = None,
    delta_i1: float | None = None,
) -> BudgetPlan:
    """Derive all noise scales and the regularizer floor from an (eps, delta) target.

    With c_broadcasts None, the whole budget is spread over T releases.  With
    c_broadcasts set (gated mode), the SVT gate's one-time cost (given by
    eps_ratio_svt = (eps1, eps2)) is subtracted first and the remainder is
    spread over c_broadcasts releases.
    """
    if not 0 < splits < 1:
        raise BudgetError("splits must be in (0, 1)")
    if T < 1:
        raise BudgetError("T must be >= 1")
    if set(dataset_sizes) != set(degrees) or len(dataset_sizes) != n_agents:
        raise BudgetError("dataset_sizes and degrees must cover exactly the n_agents agents")
    if delta_i1 is None:
        delta_i1 = delta

    rho_total = dp_to_zcdp(epsilon, delta)
    svt_eps = None
    if c_broadcasts is not None:
        if c_broadcasts < 1:
            raise BudgetError("c_broadcasts must be >= 1")
        if eps_ratio_svt is None:
            raise BudgetError("gated mode requires the (eps1, eps2) SVT pair")
        svt_eps = (float(eps_ratio_svt[0]), float(eps_ratio_svt[1]))
        rho_svt = svt_open_cost(*svt_eps)
        if rho_svt >= rho_total:
            raise BudgetError(
                f"SVT gate cost {rho_svt:.4g} consumes the whole budget {rho_total:.4g}"
            )
        per_release = (rho_total - rho_svt) / c_broadcasts
    else:
        if eps_ratio_svt is not None:
            raise BudgetError("eps_ratio_svt given but c_broadcasts is None")
        per_release = rho_total / T

    rho_i2 = splits * per_release
    rho_i1 = per_release - rho_i2
    log_inv_delta = math.log(1.0 / delta_i1)
    epsilon_i1 = rho_i1 + 2.0 * math.sqrt(rho_i1 * log_inv_delta)
    epsilon_i3 = 0.99 * epsilon_i1

    lambda_hat_floor = max(
        2.8 * n_agents * c1 / ((epsilon_i1 - epsilon_i3) * dataset_sizes[i])
        for i in dataset_sizes
    )
    sigma_i1 = {
        i: 2.0 * math.sqrt(2.0 * math.log(1.25 / delta_i1)) / (dataset_sizes[i] * epsilon_i3)
        for i in dataset_sizes
    }
    sigma_i2 = {
        i: beta / (math.sqrt(2.0 * rho_i2) * (lambda_hat_floor / n_agents + 2.0 * eta * degrees[i]))
        for i in degrees
    }
    return BudgetPlan(
        epsilon_total=epsilon,
        delta_total=delta,
        T=T,
        splits=splits,
        rho_total=rho_total,
        rho_i1=rho_i1,
        rho_i2=rho_i2,
        epsilon_i1=epsilon_i1,
        epsilon_i3=epsilon_i3,
        delta_i1=delta_i1,
        sigma_i1=sigma_i1,
        sigma_i2=sigma_i2,
        lambda_hat_floor=lambda_hat_floor,
        c_broadcasts=c_broadcasts,
        svt_eps=svt_eps,
    )


@dataclass
class ZcdpLedger:
    """Accumulated per-agent zCDP spend over a run."""

    delta_target: float
    per_agent: dict = field(default_factory=dict)
    _svt_opened: set = field(default_factory=set)

    def charge_pp_iteration(self, agent, plan: BudgetPlan) -> None:
        """One full-broadcast release: rho_i1 + rho_i2."""
        self.per_agent[agent] = self.per_agent.get(agent, 0.0) + plan.per_release_rho

    def charge_ipp(self, agent, plan: BudgetPlan, event: str) -> None:
        """Gated-mode events: 'svt_open' once per agent, 'broadcast' per release."""
        if event == "svt_open":
            if agent in self._svt_opened:
                raise BudgetError(f"agent {agent}: SVT gate already charged")
            self._svt_opened.add(agent)
            self.per_agent[agent] = self.per_agent.get(agent, 0.0) + plan.rho_svt
        elif event == "broadcast":
            self.per_agent[agent] = self.per_agent.get(agent, 0.0) + plan.per_release_rho
        else:
            raise ValueError(f"unknown event {event!r}")

    def total_rho(self) -> float:
        """Network-wide cost: parallel composition over disjoint agent datasets."""
        return parallel_compose(self.per_agent.values()) if self.per_agent else 0.0

    def report(self) -> dict:
        rho = self.total_rho()
        return {
            "per_agent_rho": {str(a): r for a, r in sorted(self.per_agent.items())},
            "total_rho": rho,
            "delta": self.delta_target,
            "epsilon_sufficient": zcdp_sufficient_epsilon(rho, self.delta_target),
            "epsilon_conservative": zcdp_to_dp(rho, self.delta_target),
        }
