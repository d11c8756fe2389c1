"""Within-host immune dynamics.

Two models, both integrated with fixed-step fourth-order Runge-Kutta:

* antigen-driven T-cell proliferation with a saturating rate law
  rho * I / (h + I), optionally damped at high antigen by an exhaustion
  multiplier 1 / (1 + (I / k_ex)^n_ex);
* a four-compartment system over CD8+ T cells (T), infected cells (I),
  effector cells (E), and free virus (V):

      dT/dt = beta_TV * T * V          (T cells stimulated by viral load)
      dI/dt = beta_T * V - k_IE * I * E (infection minus effector killing)
      dE/dt = rho_I * I                 (effectors recruited by infected cells)
      dV/dt = p * I - c_v * V           (virion production minus clearance)

Fixed-step RK4 keeps convergence-order measurements exact; states are
clamped at zero after each step. Units: days and 1/day rates throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Exhaustion:
    """High-antigen decline: multiplier 1 / (1 + (I / k_ex)^n_ex)."""

    k_ex: float
    n_ex: float = 2.0

    def __post_init__(self):
        if self.k_ex <= 0:
            raise ValueError(f"k_ex must be positive, got {self.k_ex}")
        if self.n_ex < 1:
            raise ValueError(f"n_ex must be >= 1, got {self.n_ex}")


@dataclass
class ProliferationParams:
    rho: float = 1.0  # max proliferation rate, 1/day
    h: float = 0.01  # half-saturation antigen concentration
    t0_cells: float = 100.0
    duration_days: float = 7.0
    exhaustion: Exhaustion | None = None

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.h <= 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.t0_cells <= 0:
            raise ValueError(f"t0_cells must be positive, got {self.t0_cells}")
        if self.duration_days <= 0:
            raise ValueError(f"duration_days must be positive, got {self.duration_days}")


@dataclass
class Cd8Params:
    beta_t: float = 0.05  # infection rate: virus -> infected cells
    beta_tv: float = 0.001  # T-cell stimulation by viral load
    p: float = 1.0  # virion production per infected cell
    k_ie: float = 0.01  # killing of infected cells by effectors
    rho_i: float = 0.05  # effector stimulation by infected cells
    c_v: float = 1.0  # virus clearance rate

    def __post_init__(self):
        for name in ("beta_t", "beta_tv", "p", "k_ie", "rho_i", "c_v"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.c_v <= 0:
            raise ValueError(f"c_v must be positive, got {self.c_v}")


@dataclass
class ImmuneState:
    t_cells: float
    infected: float
    effectors: float
    virus: float

    def __post_init__(self):
        for name in ("t_cells", "infected", "effectors", "virus"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.t_cells, self.infected, self.effectors, self.virus])


@dataclass
class Trajectory:
    """Time series of simulation output; columns name the state components."""

    times: np.ndarray
    states: np.ndarray  # (n_samples, n_columns)
    columns: tuple[str, ...]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-D and states 2-D")
        if len(self.times) != len(self.states):
            raise ValueError(
                f"length mismatch: {len(self.times)} times vs {len(self.states)} states"
            )
        if self.states.shape[1] != len(self.columns):
            raise ValueError("states width must match columns")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.columns.index(name)]

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path):
        lines = ["t," + ",".join(self.columns)]
        for t, row in zip(self.times, self.states):
            lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _rk4(f, y0: np.ndarray, duration: float, step: float, clamp: bool):
    """Fixed-step RK4 from t=0; returns (times, states) sampled every step."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    n_steps = max(1, int(round(duration / step)))
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, len(y0)))
    times[0] = 0.0
    states[0] = y0
    y = np.array(y0, dtype=np.float64)
    for i in range(1, n_steps + 1):
        t = (i - 1) * step
        k1 = f(t, y)
        k2 = f(t + step / 2.0, y + step / 2.0 * k1)
        k3 = f(t + step / 2.0, y + step / 2.0 * k2)
        k4 = f(t + step, y + step * k3)
        y = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if clamp:
            y = np.maximum(y, 0.0)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite state at t={i * step:.6g}")
        times[i] = i * step
        states[i] = y
    return times, states


def saturating_rate(antigen: float, params: ProliferationParams) -> float:
    """Proliferation rate at a given antigen concentration (1/day)."""
    if antigen < 0:
        raise ValueError(f"antigen must be non-negative, got {antigen}")
    rate = params.rho * antigen / (params.h + antigen)
    if params.exhaustion is not None and antigen > 0:
        ex = params.exhaustion
        rate /= 1.0 + (antigen / ex.k_ex) ** ex.n_ex
    return rate


def simulate_proliferation(params: ProliferationParams, antigen, step: float = 0.01) -> Trajectory:
    """T-cell expansion under dT/dt = saturating_rate(I(t)) * T.

    `antigen` is a constant concentration or a callable of time (days).
    """
    antigen_at = antigen if callable(antigen) else (lambda t: antigen)

    def f(t, y):
        level = antigen_at(t)
        if level < 0:
            raise ValueError(f"antigen function went negative at t={t:.6g}")
        return np.array([saturating_rate(level, params) * y[0]])

    times, states = _rk4(f, np.array([params.t0_cells]), params.duration_days, step, clamp=False)
    return Trajectory(times, states, columns=("T",))


def dose_sweep(params: ProliferationParams, antigen_grid, step: float = 0.01) -> list[tuple[float, float]]:
    """Final T-cell count after the configured duration, per antigen level."""
    grid = list(antigen_grid)
    if not grid:
        raise ValueError("antigen grid is empty")
    out = []
    for level in grid:
        traj = simulate_proliferation(params, level, step=step)
        out.append((float(level), float(traj.final_state()[0])))
    return out


def sweep_to_csv(sweep: list[tuple[float, float]], path):
    lines = ["antigen,final_T"] + [f"{repr(a)},{repr(t)}" for a, t in sweep]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def simulate_cd8(params: Cd8Params, initial: ImmuneState, duration_days: float = 30.0,
                 step: float = 0.01) -> Trajectory:
    """Integrate the four-compartment T/I/E/V system; states clamped at 0."""

    def f(t, y):
        T, I, E, V = y
        return np.array([
            params.beta_tv * T * V,
            params.beta_t * V - params.k_ie * I * E,
            params.rho_i * I,
            params.p * I - params.c_v * V,
        ])

    times, states = _rk4(f, initial.as_array(), duration_days, step, clamp=True)
    return Trajectory(times, states, columns=("T", "I", "E", "V"))


def convergence_ratio(params: Cd8Params, initial: ImmuneState, duration_days: float,
                      step: float) -> float:
    """Step-halving error ratio against a step/16 reference.

    For a 4th-order scheme on smooth dynamics the ratio approaches 16.
    """
    ref = simulate_cd8(params, initial, duration_days, step / 16.0)
    coarse = simulate_cd8(params, initial, duration_days, step)
    half = simulate_cd8(params, initial, duration_days, step / 2.0)
    err_coarse = np.max(np.abs(coarse.states - ref.states[::16]))
    err_half = np.max(np.abs(half.states - ref.states[::8]))
    if err_half == 0:
        raise FloatingPointError("zero integration error; cannot form convergence ratio")
    return float(err_coarse / err_half)


def classify_outcome(traj: Trajectory, detection_limit: float) -> str:
    """'clearance' if the viral load drops below the detection limit and
    stays there, 'resurgence' if it later re-crosses the limit,
    'persistence' if it never drops below."""
    if len(traj.times) < 10:
        raise ValueError(f"need >= 10 trajectory samples, got {len(traj.times)}")
    v = traj.column("V")
    below = v < detection_limit
    if not below.any():
        return "persistence"
    first = int(np.argmax(below))
    if np.any(v[first:] >= detection_limit):
        return "resurgence"
    return "clearance"
