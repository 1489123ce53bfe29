"""
Integrating-factor RK4 time stepping for the potentials (a, b).

The diffusion mu Lap is carried exactly by exp(-mu kappa^2 dt); the
nonlinearity and forcing are advanced by classical RK4 in the
transformed variable.
"""
import logging
import math
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from emhd_lab.exceptions import BlowUpError, StepSizeError
from emhd_lab.models import (
    ForcingSpec, IntegrationResult, ScalarField, StateAB, StepMode, StepPolicy,
    TorusGrid, Variant,
)
from emhd_lab.services.emhd import EMHDModel
from emhd_lab.services.spectral import SpectralService

logger = logging.getLogger(__name__)

Hook = Callable[[StateAB], Any]

# guards the whistler estimate on the zero state
EPSILON = 1e-30


class TimeIntegrator:
    """Advance states of one grid under a fixed variant and forcing.

    Args:
        grid: Grid of the states
        variant: EMHD1 or EMHD2
        forcing: Forcing potentials (empty by default)
        policy: Step control; fixed dt unless told otherwise
    """

    def __init__(self, grid: TorusGrid, variant: Variant = Variant.EMHD1,
                 forcing: Optional[ForcingSpec] = None,
                 policy: Optional[StepPolicy] = None):
        self.grid = grid
        self.model = EMHDModel(grid, variant, forcing)
        self.policy = policy or StepPolicy()
        self._factor_key: Optional[Tuple[float, float]] = None
        self._factors: Tuple[np.ndarray, np.ndarray] = (np.ones(grid.shape), np.ones(grid.shape))

    @property
    def variant(self) -> Variant:
        return self.model.variant

    def _decay_factors(self, mu: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        """exp(-mu kappa^2 dt/2) and exp(-mu kappa^2 dt), cached for the last (mu, dt)."""
        key = (mu, dt)
        if key != self._factor_key:
            rate = -mu * self.grid.kappa_sq
            self._factors = (np.exp(rate * (0.5 * dt)), np.exp(rate * dt))
            self._factor_key = key
        return self._factors

    def step(self, state: StateAB, dt: float) -> StateAB:
        """One integrating-factor RK4 step.

        Args:
            state: Dealiased state at time t
            dt: Step size, > 0

        Returns:
            Dealiased state at time t + dt

        Raises:
            BlowUpError: If the new state is not finite
        """
        if not dt > 0:
            raise ValueError(f"step size must be positive, got {dt}")
        half, full = self._decay_factors(state.mu, dt)
        rhs = self.model.rhs_arrays
        t = state.t
        a0, b0 = state.a.spectral, state.b.spectral

        with np.errstate(over="ignore", invalid="ignore"):
            ka1, kb1 = rhs(a0, b0, t)
            ka2, kb2 = rhs(half * (a0 + 0.5 * dt * ka1), half * (b0 + 0.5 * dt * kb1), t + 0.5 * dt)
            ka3, kb3 = rhs(half * a0 + 0.5 * dt * ka2, half * b0 + 0.5 * dt * kb2, t + 0.5 * dt)
            ka4, kb4 = rhs(full * a0 + dt * half * ka3, full * b0 + dt * half * kb3, t + dt)
            a1 = full * a0 + (dt / 6.0) * (full * ka1 + 2.0 * half * (ka2 + ka3) + ka4)
            b1 = full * b0 + (dt / 6.0) * (full * kb1 + 2.0 * half * (kb2 + kb3) + kb4)

        if not (np.all(np.isfinite(a1)) and np.all(np.isfinite(b1))):
            logger.warning("non-finite state after step from t=%.17g", t)
            raise BlowUpError("state became non-finite", time=t)
        mask = self.grid.dealias_mask
        a = ScalarField.from_spectral(self.grid, np.where(mask, a1, 0.0))
        b = ScalarField.from_spectral(self.grid, np.where(mask, b1, 0.0))
        return state.with_fields(a, b, t=t + dt)

    def whistler_limit(self, state: StateAB, policy: Optional[StepPolicy] = None) -> float:
        """C / ((||grad a||_inf + ||b||_inf + eps) kappa_max^2), the largest stable step for this state."""
        policy = policy or self.policy
        a_x, a_y = SpectralService.gradient(state.a)
        grad_sup = float(np.max(np.hypot(a_x.physical, a_y.physical)))
        b_sup = float(np.max(np.abs(state.b.physical)))
        return policy.cfl / ((grad_sup + b_sup + EPSILON) * self.grid.kappa_max ** 2)

    def suggest_dt(self, state: StateAB, policy: Optional[StepPolicy] = None) -> float:
        """Whistler-limited step, capped by dt_max.

        Raises:
            StepSizeError: If the suggestion falls below dt_min
        """
        policy = policy or self.policy
        dt = min(policy.dt_max, self.whistler_limit(state, policy))
        if dt < policy.dt_min:
            logger.warning("suggested step %.3e below dt_min %.3e", dt, policy.dt_min)
            raise StepSizeError(f"suggested step {dt:.3e} fell below dt_min {policy.dt_min:.3e}", time=state.t)
        return dt

    def integrate(self, state0: StateAB, t_end: float,
                  hooks: Optional[Mapping[str, Hook]] = None,
                  cadence: int = 1) -> IntegrationResult:
        """Advance state0 to t_end, calling hooks at the start, every `cadence` steps and at the end.

        Args:
            state0: Initial state at time t0
            t_end: Final time, >= t0
            hooks: Named callables evaluated on the current state
            cadence: Steps between hook evaluations

        Returns:
            IntegrationResult with the final state and each hook's outputs

        Raises:
            IntegrationAbort: On blow-up or step collapse; carries partial outputs
        """
        if t_end < state0.t:
            raise ValueError(f"end time {t_end} precedes start time {state0.t}")
        if cadence < 1:
            raise ValueError(f"hook cadence must be >= 1, got {cadence}")
        hooks = dict(hooks or {})
        outputs: Dict[str, List[Any]] = {name: [] for name in hooks}

        def fire(current: StateAB) -> None:
            for name, hook in hooks.items():
                outputs[name].append(hook(current))

        state = state0
        steps = 0
        fire(state)
        try:
            if self.policy.mode is StepMode.FIXED:
                state, steps = self._run_fixed(state0, t_end, fire, cadence)
            else:
                state, steps = self._run_adaptive(state0, t_end, fire, cadence)
        except (BlowUpError, StepSizeError) as error:
            error.partial = outputs
            raise
        logger.debug("integrated to t=%.6g in %d steps", state.t, steps)
        return IntegrationResult(state=state, outputs=outputs, steps=steps)

    def _run_fixed(self, state: StateAB, t_end: float, fire, cadence: int):
        t0 = state.t
        span = t_end - t0
        if span <= 0:
            return state, 0
        n_steps = max(1, math.ceil(span / self.policy.dt - 1e-9))
        dt = span / n_steps
        limit = self.whistler_limit(state)
        if dt > limit:
            logger.warning("fixed step %.3e exceeds the whistler limit %.3e of the initial state; "
                           "consider integrator.mode=adaptive", dt, limit)
        for i in range(1, n_steps + 1):
            state = self.step(state, dt)
            # land on the exact grid of times, not on accumulated sums
            state = state.with_fields(state.a, state.b, t=t_end if i == n_steps else t0 + i * dt)
            if i % cadence == 0 or i == n_steps:
                fire(state)
        return state, n_steps

    def _run_adaptive(self, state: StateAB, t_end: float, fire, cadence: int):
        steps = 0
        tolerance = 1e-12 * max(1.0, abs(t_end))
        while t_end - state.t > tolerance:
            dt = min(self.suggest_dt(state), t_end - state.t)
            state = self.step(state, dt)
            steps += 1
            done = t_end - state.t <= tolerance
            if done:
                state = state.with_fields(state.a, state.b, t=t_end)
            if steps % cadence == 0 or done:
                fire(state)
        return state, steps
