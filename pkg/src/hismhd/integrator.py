"""Time integration: integrating-factor Runge-Kutta with adaptive steps.

The dissipative part is applied exactly through the heat propagators
e^{-nu |k|^alpha dt} and e^{-mu |k|^2 dt}; the nonlinear terms are advanced
by explicit RK stages in the transformed variable. Step size is controlled
by step-doubling (one full step against two half steps), additionally capped
by advective/Hall/ion-slip stability bounds. The stiff cubic ion-slip term is
treated explicitly; its dt ceiling is part of the stability cap.

Accepted states are re-projected divergence-free to stop roundoff drift.
"""

import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .dynamics import IntegrationFailure, State, _leray_h, _rhs_impl


@dataclass
class IntegratorConfig:
    scheme_order: int = 3
    dt_init: float = 1e-2
    dt_min: float = 1e-8
    dt_max: float = 0.25
    tolerance: float = 1e-7
    cfl_safety: float = 0.3
    t_end: float = 1.0
    checkpoint_interval: float = 1.0
    diagnostics_interval: float = 0.1

    def __post_init__(self):
        if self.scheme_order not in (3, 4):
            raise ValueError(f"scheme_order must be 3 or 4, got {self.scheme_order}")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"({self.dt_min}, {self.dt_init}, {self.dt_max})"
            )
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.cfl_safety <= 0:
            raise ValueError(f"cfl_safety must be positive, got {self.cfl_safety}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")


@dataclass
class RunRecord:
    accepted: int = 0
    rejected: int = 0
    dt_history: list = field(default_factory=list)
    wall_time: float = 0.0
    termination: str = "finished"
    t_final: float = 0.0


def _nonlinear_half(grid, params):
    def rhs(uh, bh):
        du, db, _ = _rhs_impl(grid, uh, bh, params, want_breakdown=False)
        du -= (-params.nu * grid.kpow_half(params.alpha)) * uh
        db -= (-params.mu * grid.k2_half) * bh
        return du, db

    return rhs


def _zero_nonlinear(uh, bh):
    return np.zeros_like(uh), np.zeros_like(bh)


def _step_half(grid, uh, bh, params, dt, nonlinear, order):
    """One IF-RK step of the given order on half-spectrum arrays."""
    eu = np.exp((-params.nu * dt) * grid.kpow_half(params.alpha))
    eb = np.exp((-params.mu * dt) * grid.k2_half)
    euh = np.exp((-0.5 * params.nu * dt) * grid.kpow_half(params.alpha))
    ebh = np.exp((-0.5 * params.mu * dt) * grid.k2_half)

    n1u, n1b = nonlinear(uh, bh)
    if order == 3:
        # Kutta's third-order scheme in the integrating-factor variable
        y2u = euh * (uh + (0.5 * dt) * n1u)
        y2b = ebh * (bh + (0.5 * dt) * n1b)
        n2u, n2b = nonlinear(y2u, y2b)
        y3u = eu * uh - dt * (eu * n1u) + (2.0 * dt) * (euh * n2u)
        y3b = eb * bh - dt * (eb * n1b) + (2.0 * dt) * (ebh * n2b)
        n3u, n3b = nonlinear(y3u, y3b)
        out_u = eu * uh + (dt / 6.0) * (eu * n1u + 4.0 * (euh * n2u) + n3u)
        out_b = eb * bh + (dt / 6.0) * (eb * n1b + 4.0 * (ebh * n2b) + n3b)
    else:
        # classical RK4 in the integrating-factor variable
        y2u = euh * (uh + (0.5 * dt) * n1u)
        y2b = ebh * (bh + (0.5 * dt) * n1b)
        n2u, n2b = nonlinear(y2u, y2b)
        y3u = euh * uh + (0.5 * dt) * n2u
        y3b = ebh * bh + (0.5 * dt) * n2b
        n3u, n3b = nonlinear(y3u, y3b)
        y4u = eu * uh + dt * (euh * n3u)
        y4b = eb * bh + dt * (ebh * n3b)
        n4u, n4b = nonlinear(y4u, y4b)
        out_u = eu * uh + (dt / 6.0) * (eu * n1u + 2.0 * euh * (n2u + n3u) + n4u)
        out_b = eb * bh + (dt / 6.0) * (eb * n1b + 2.0 * ebh * (n2b + n3b) + n4b)
    return out_u, out_b


def step(grid, state: State, params, dt: float, order: int = 3, nonlinear=None) -> State:
    """Advance one step of size dt; exact propagator on the linear part.

    `nonlinear` may override the nonlinear right-hand side (e.g. with
    _zero_nonlinear for pure-dissipation checks); it receives and returns
    half-spectrum pairs.
    """
    if dt <= 0:
        raise ValueError(f"step size must be positive, got {dt}")
    uh = spectral.halve(grid, state.u)
    bh = spectral.halve(grid, state.b)
    if nonlinear is None:
        nonlinear = _nonlinear_half(grid, params)
    out_u, out_b = _step_half(grid, uh, bh, params, dt, nonlinear, order)
    if not (np.isfinite(np.sum(out_u)) and np.isfinite(np.sum(out_b))):
        raise IntegrationFailure(f"non-finite state after step at t={state.t:g}")
    return State(
        u=spectral.expand_half(grid, out_u),
        b=spectral.expand_half(grid, out_b),
        t=state.t + dt,
    )


def _kmax(grid, order):
    cache = getattr(grid, "_kmax_cache", None)
    if cache is None:
        cache = grid._kmax_cache = {}
    v = cache.get(order)
    if v is None:
        v = float(np.max(grid.kmag[grid.mask_float(order) > 0]))
        cache[order] = v
    return v


def stable_dt(grid, state: State, params, cfl_safety: float = 0.3, dt_max: float = np.inf) -> float:
    """Explicit-stability ceiling: advective CFL plus Hall (whistler) and
    ion-slip constraints, all scaled by the safety factor."""
    uh = spectral.halve(grid, state.u)
    bh = spectral.halve(grid, state.b)
    return _stable_dt_half(grid, uh, bh, params, cfl_safety, dt_max)


def _stable_dt_half(grid, uh, bh, params, cfl_safety, dt_max):
    u_p = spectral.inverse_half(grid, uh)
    b_p = spectral.inverse_half(grid, bh)
    max_u = float(np.sqrt(np.max(np.sum(u_p * u_p, axis=0))))
    max_b = float(np.sqrt(np.max(np.sum(b_p * b_p, axis=0))))
    bound = dt_max
    speed = max(max_u, max_b)
    if speed > 0:
        bound = min(bound, cfl_safety * grid.spacing / speed)
    if params.sigma != 0.0 and max_b > 0:
        bound = min(bound, cfl_safety / (abs(params.sigma) * max_b * _kmax(grid, 2) ** 2))
    if params.kappa != 0.0 and max_b > 0:
        bound = min(bound, cfl_safety / (params.kappa * max_b**2 * _kmax(grid, 3) ** 2))
    return bound


def _err_norm(grid, au, ab, bu, bb):
    num = (
        spectral.l2_norm_half(grid, au - bu) ** 2
        + spectral.l2_norm_half(grid, ab - bb) ** 2
    )
    den = (
        spectral.l2_norm_half(grid, au) ** 2
        + spectral.l2_norm_half(grid, ab) ** 2
    )
    return np.sqrt(num) / max(np.sqrt(den), 1e-300)


def run(grid, state: State, params, config: IntegratorConfig,
        diagnostics_sink=None, checkpoint_sink=None) -> RunRecord:
    """Advance to t_end with step-doubling error control.

    Sinks are called in time order: diagnostics_sink(state, dt_next) at t0,
    at the first accepted step crossing each diagnostics_interval and at the
    end; checkpoint_sink(state, dt_next, reason) at crossings of
    checkpoint_interval, at the end, and on failure.
    """
    record = RunRecord()
    wall0 = _time.perf_counter()
    nonlinear = _nonlinear_half(grid, params)
    order = config.scheme_order
    grow = 3.0

    uh = spectral.halve(grid, state.u)
    bh = spectral.halve(grid, state.b)
    t = state.t
    dt_ctrl = config.dt_init

    def materialize():
        return State(
            u=spectral.expand_half(grid, uh), b=spectral.expand_half(grid, bh), t=t
        )

    def emit_diag():
        if diagnostics_sink is not None:
            diagnostics_sink(materialize(), dt_ctrl)

    def emit_chk(reason):
        if checkpoint_sink is not None:
            checkpoint_sink(materialize(), dt_ctrl, reason)

    emit_diag()
    eps = 1e-12 * max(config.t_end, 1.0)
    try:
        while t < config.t_end - eps:
            dt = min(dt_ctrl,
                     _stable_dt_half(grid, uh, bh, params, config.cfl_safety, config.dt_max),
                     config.t_end - t)
            if dt < config.dt_min:
                record.termination = "dt_underflow"
                break
            cu, cb = _step_half(grid, uh, bh, params, dt, nonlinear, order)
            fu, fb = _step_half(grid, uh, bh, params, 0.5 * dt, nonlinear, order)
            fu, fb = _step_half(grid, fu, fb, params, 0.5 * dt, nonlinear, order)
            if not (np.isfinite(np.sum(fu)) and np.isfinite(np.sum(fb))):
                raise IntegrationFailure(f"non-finite state at t={t:g}")
            err = _err_norm(grid, fu, fb, cu, cb) / (2.0**order - 1.0)
            if err <= config.tolerance:
                uh, bh = _leray_h(grid, fu), _leray_h(grid, fb)
                t_prev, t = t, t + dt
                record.accepted += 1
                record.dt_history.append(dt)
                if err > 0:
                    dt_ctrl = dt * min(grow, 0.9 * (config.tolerance / err) ** (1.0 / (order + 1)))
                else:
                    dt_ctrl = dt * grow
                dt_ctrl = min(dt_ctrl, config.dt_max)
                if _crossed(t_prev, t, config.diagnostics_interval) or t >= config.t_end - eps:
                    emit_diag()
                if _crossed(t_prev, t, config.checkpoint_interval):
                    emit_chk("periodic")
            else:
                record.rejected += 1
                dt_ctrl = dt * max(0.2, 0.9 * (config.tolerance / err) ** (1.0 / (order + 1)))
                if dt_ctrl < config.dt_min:
                    record.termination = "dt_underflow"
                    break
    except IntegrationFailure:
        record.termination = "nonfinite"

    record.t_final = t
    record.wall_time = _time.perf_counter() - wall0
    emit_chk("final" if record.termination == "finished" else "failure")
    return record


def _crossed(t0, t1, interval):
    if interval <= 0:
        return False
    return int(t1 / interval + 1e-12) > int(t0 / interval + 1e-12)
