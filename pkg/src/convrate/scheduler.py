"""Online scheduling on top of an abstraction: damage counter and gates.

The damage counter ``kappa_hat_k = rho_hat^-k * kappa_{0,k}`` tracks how
much of the allowed overshoot budget ``alpha_hat`` has been consumed; it
is maintained in log domain so that long runs can neither overflow nor
underflow. A mode is admissible when applying it keeps the counter within
budget (exponential mode) or keeps the predicted abstraction state within
the bound C (practical mode). The supervisor reports an alarm whenever no
admissible mode remains or the invariant is already violated; it never
executes the fallback itself - the surrounding harness switches to
strictly nominal execution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .model import AbstractionParams, SystemModel

#: exp() overflows above this; treat larger log values as infinity.
_LOG_MAX = math.log(float("1e308"))


@dataclass(frozen=True)
class ExponentialTarget:
    """Required worst-case decay ``rho_hat`` and overshoot budget ``alpha_hat``."""

    rho_hat: float
    alpha_hat: float

    def __post_init__(self):
        if not (0.0 < self.rho_hat < 1.0):
            raise ParameterError(f"rho_hat must be in (0, 1), got {self.rho_hat}")
        if not self.alpha_hat >= 1.0:
            raise ParameterError(f"alpha_hat must be >= 1, got {self.alpha_hat}")


@dataclass(frozen=True)
class PracticalTarget:
    """State bound C that the abstraction must never exceed."""

    bound: float

    def __post_init__(self):
        if not self.bound > 0.0:
            raise ParameterError(f"bound must be > 0, got {self.bound}")


@dataclass(frozen=True)
class SchedulerState:
    """Step counter plus the log-domain damage counter and/or vbar."""

    step: int = 0
    log_kappa_hat: float = 0.0
    v_bar: float | None = None

    @property
    def kappa_hat(self) -> float:
        if self.log_kappa_hat > _LOG_MAX:
            return math.inf
        return math.exp(self.log_kappa_hat)


def exponential_state() -> SchedulerState:
    """Fresh state with ``kappa_hat = 1``."""
    return SchedulerState()


def practical_state(v0: float) -> SchedulerState:
    """Fresh state carrying the abstraction value ``v0`` (e.g. alpha * |x0|)."""
    v0 = float(v0)
    if not (v0 >= 0.0 and math.isfinite(v0)):
        raise ParameterError(f"v0 must be finite and >= 0, got {v0}")
    return SchedulerState(v_bar=v0)


def _log_rate(rate: float) -> float:
    return -math.inf if rate == 0.0 else math.log(rate)


def kappa_hat_step(state: SchedulerState, sigma: int, params: AbstractionParams,
                   target: ExponentialTarget) -> SchedulerState:
    """Advance the damage counter by one applied mode.

    ``log kappa_hat += log rho_sigma - log rho_hat``; a zero rate maps to
    -inf, a perfect reset that absorbs all previous damage.
    """
    delta = _log_rate(params.rate(sigma)) - math.log(target.rho_hat)
    return replace(state, step=state.step + 1,
                   log_kappa_hat=state.log_kappa_hat + delta)


def admissible_modes(state: SchedulerState, params: AbstractionParams,
                     target: ExponentialTarget) -> frozenset[int]:
    """Modes whose application keeps ``kappa_hat <= alpha_hat``."""
    log_alpha = math.log(target.alpha_hat)
    log_rho_hat = math.log(target.rho_hat)
    return frozenset(
        mode for mode, rate in params.rho.items()
        if state.log_kappa_hat + _log_rate(rate) - log_rho_hat <= log_alpha
    )


def practical_admissible_modes(state: SchedulerState, params: AbstractionParams,
                               target: PracticalTarget,
                               w_bar_k: float) -> frozenset[int]:
    """Modes whose predicted ``vbar`` stays within the bound C."""
    v_bar = _require_v_bar(state)
    w_bar_k = _check_w_bar(w_bar_k)
    return frozenset(
        mode for mode, rate in params.rho.items()
        if rate * v_bar + params.beta * w_bar_k <= target.bound
    )


def _require_v_bar(state: SchedulerState) -> float:
    if state.v_bar is None:
        raise ParameterError("practical mode needs a state initialized via practical_state()")
    return state.v_bar


def _check_w_bar(w_bar_k: float) -> float:
    w_bar_k = float(w_bar_k)
    if not (w_bar_k >= 0.0 and math.isfinite(w_bar_k)):
        raise ParameterError(f"w_bar must be finite and >= 0, got {w_bar_k}")
    return w_bar_k


def practical_step(state: SchedulerState, sigma: int, w_bar_k: float,
                   params: AbstractionParams,
                   target: PracticalTarget) -> tuple[SchedulerState, bool]:
    """Apply one mode to the abstraction state; flag whether it kept the bound."""
    v_bar = _require_v_bar(state)
    w_bar_k = _check_w_bar(w_bar_k)
    predicted = params.rate(sigma) * v_bar + params.beta * w_bar_k
    new_state = replace(state, step=state.step + 1, v_bar=predicted)
    return new_state, predicted <= target.bound


@dataclass(frozen=True)
class SupervisorReport:
    """ok, or an alarm naming the violated quantity, threshold, and step."""

    ok: bool
    reason: str | None = None
    value: float | None = None
    threshold: float | None = None
    step: int = 0

    def __bool__(self) -> bool:
        return self.ok


def supervisor_check(state: SchedulerState, params: AbstractionParams,
                     target: ExponentialTarget | PracticalTarget,
                     w_bar_k: float = 0.0) -> SupervisorReport:
    """Alarm when the budget is already blown or no admissible mode remains.

    The documented contract on alarm is that the caller switches to a
    deterministic safety mode guaranteeing nominal execution.
    """
    if isinstance(target, ExponentialTarget):
        if state.log_kappa_hat > math.log(target.alpha_hat):
            return SupervisorReport(False, "kappa budget exceeded",
                                    state.kappa_hat, target.alpha_hat, state.step)
        if not admissible_modes(state, params, target):
            return SupervisorReport(False, "no admissible mode",
                                    state.kappa_hat, target.alpha_hat, state.step)
        return SupervisorReport(True, step=state.step)
    v_bar = _require_v_bar(state)
    if v_bar > target.bound:
        return SupervisorReport(False, "state bound exceeded",
                                v_bar, target.bound, state.step)
    if not practical_admissible_modes(state, params, target, w_bar_k):
        return SupervisorReport(False, "no admissible mode keeps the bound",
                                v_bar, target.bound, state.step)
    return SupervisorReport(True, step=state.step)


# ---------------------------------------------------------------------------
# selection policies and the run harness

Policy = Callable[[int, frozenset, np.random.Generator | None], int]


def greedy_policy(preference: dict[int, float] | None = None) -> Policy:
    """Most-preferred admissible mode.

    Default preference is the highest mode id (cheapest execution first);
    with an explicit ranking, ties break toward the lowest mode id. The
    gate enforces soundness, so the policy choice is free.
    """

    def choose(k: int, admissible: frozenset, rng=None) -> int:
        if preference is None:
            return max(admissible)
        return min(admissible, key=lambda mode: (-preference.get(mode, -math.inf), mode))

    return choose


def round_robin_policy() -> Policy:
    """Cycle through the admissible modes by step index."""

    def choose(k: int, admissible: frozenset, rng=None) -> int:
        order = sorted(admissible)
        return order[k % len(order)]

    return choose


def random_policy() -> Policy:
    """Uniform choice among admissible modes (seeded by the run harness)."""

    def choose(k: int, admissible: frozenset, rng=None) -> int:
        order = sorted(admissible)
        if rng is None:
            raise ParameterError("random policy needs a seeded generator")
        return order[int(rng.integers(len(order)))]

    return choose


POLICIES: dict[str, Callable[[], Policy]] = {
    "greedy": greedy_policy,
    "round-robin": round_robin_policy,
    "random": random_policy,
}


@dataclass(frozen=True)
class StepRecord:
    """One scheduling decision with the gate context it was taken in."""

    k: int
    chosen: int
    admissible: frozenset[int]
    kappa_hat: float | None
    v_bar: float | None
    alarm: str | None


@dataclass
class ScheduleRun:
    """Decision stream of one run plus the optional co-simulated plant."""

    records: list[StepRecord]
    alarm_fired: bool
    final_state: SchedulerState
    states: np.ndarray | None = None

    @property
    def chosen(self) -> tuple[int, ...]:
        return tuple(record.chosen for record in self.records)


def run_schedule(params: AbstractionParams,
                 target: ExponentialTarget | PracticalTarget,
                 steps: int,
                 policy: Policy | None = None,
                 w_bar: Sequence[float] | float | None = None,
                 system: SystemModel | None = None,
                 x0=None,
                 v0: float | None = None,
                 seed: int | None = None,
                 forced: Sequence[int] | None = None) -> ScheduleRun:
    """Drive the gate for ``steps`` periods and record every decision.

    On alarm the harness models the documented fallback: it pins execution
    to mode 0 from that step on (unless ``forced`` overrides the gate
    entirely, for scripted scenarios). With ``system`` and ``x0`` the plant
    is co-simulated along the chosen modes (disturbance-free), so the
    resulting state norms can be compared against the certified envelope.
    """
    if steps < 0:
        raise ParameterError(f"steps must be >= 0, got {steps}")
    practical = isinstance(target, PracticalTarget)
    if practical:
        if v0 is None:
            if x0 is None:
                raise ParameterError("practical mode needs v0 or x0 to initialize vbar")
            v0 = params.alpha * float(np.linalg.norm(np.atleast_1d(x0)))
        state = practical_state(v0)
    else:
        state = exponential_state()
    if isinstance(w_bar, (int, float)) or w_bar is None:
        w_series = np.full(steps, 0.0 if w_bar is None else float(w_bar))
    else:
        w_series = np.asarray(w_bar, dtype=float).reshape(-1)
        if len(w_series) < steps:
            raise ParameterError(f"w_bar must provide {steps} entries, got {len(w_series)}")
    policy = policy or greedy_policy()
    rng = np.random.default_rng(seed)

    x = None
    if system is not None:
        if x0 is None:
            raise ParameterError("co-simulation needs x0")
        x = np.empty((steps + 1, system.n))
        x[0] = np.atleast_1d(np.asarray(x0, dtype=float))

    records: list[StepRecord] = []
    alarm_fired = False
    fallback = False
    for k in range(steps):
        w_k = float(w_series[k])
        report = supervisor_check(state, params, target, w_k)
        alarm = None if report.ok else report.reason
        if alarm is not None:
            alarm_fired = True
            fallback = True
        if practical:
            candidates = practical_admissible_modes(state, params, target, w_k)
        else:
            candidates = admissible_modes(state, params, target)
        if forced is not None:
            chosen = int(forced[k])
        elif fallback or not candidates:
            chosen = 0
        else:
            chosen = policy(k, candidates, rng)
        if practical:
            state, _ = practical_step(state, chosen, w_k, params, target)
        else:
            state = kappa_hat_step(state, chosen, params, target)
        records.append(StepRecord(
            k=k,
            chosen=chosen,
            admissible=candidates,
            kappa_hat=None if practical else state.kappa_hat,
            v_bar=state.v_bar,
            alarm=alarm,
        ))
        if x is not None:
            x[k + 1] = system.matrix(chosen) @ x[k]
    return ScheduleRun(records=records, alarm_fired=alarm_fired,
                       final_state=state, states=x)


#: Exact column contract of the decision CSV emission.
SCHEDULE_COLUMNS = ("k", "chosen_sigma", "admissible_set", "kappa_hat", "vbar", "alarm")


def schedule_csv_lines(records: Sequence[StepRecord]) -> list[str]:
    """Render a decision stream as CSV under the fixed column contract."""
    lines = [",".join(SCHEDULE_COLUMNS)]
    for record in records:
        cells = [
            str(record.k),
            str(record.chosen),
            "|".join(str(mode) for mode in sorted(record.admissible)),
            "" if record.kappa_hat is None else repr(float(record.kappa_hat)),
            "" if record.v_bar is None else repr(float(record.v_bar)),
            record.alarm or "",
        ]
        lines.append(",".join(cells))
    return lines
