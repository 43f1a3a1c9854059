"""Synthetic post-fault voltage trajectories standing in for a dynamic grid simulator.

Each trajectory is a three-bus record of P, Q and U sampled at ``rate_hz``.
A three-phase fault starts at ``fault_onset_s``, holds the voltage down until
the clearing time, then the voltage recovers along a first-order exponential
whose target and time constant depend on the stability category of the
scenario cell. Categories are assigned by ranking grid cells on a severity
score (load level, motor share, fault proximity, clearing time) and cutting
the ranking at fixed proportions.

The early part of the record (fault period and first samples after clearing)
carries an extra sag ``delta`` whose range depends on the category. That is
what makes the class predictable from a short window after fault onset, the
way a real early-warning classifier has to work.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from ..rng import stage_rng

STABLE, UNSTABLE = 0, 1
CATEGORIES = ("stable", "ambiguous_stable", "ambiguous_unstable", "unstable")
TRUTH = {"stable": STABLE, "ambiguous_stable": STABLE,
         "ambiguous_unstable": UNSTABLE, "unstable": UNSTABLE}

# per-category ranges: extra early sag, recovery target, time constant (s),
# oscillation amplitude, late drift (p.u./s)
PROFILES = {
    "stable": dict(delta=(0.0, 0.04), u_inf=(0.98, 1.01), tau=(0.08, 0.25), osc=(0.0, 0.005),
                   drift=(0.0, 0.0)),
    "ambiguous_stable": dict(delta=(0.125, 0.135), u_inf=(0.93, 0.97), tau=(1.6, 4.5),
                             osc=(0.02, 0.035), drift=(0.0, 0.0)),
    "ambiguous_unstable": dict(delta=(0.205, 0.215), u_inf=(0.77, 0.82), tau=(0.4, 1.2),
                               osc=(0.025, 0.04), drift=(0.01, 0.03)),
    "unstable": dict(delta=(0.27, 0.35), u_inf=(0.45, 0.64), tau=(0.3, 1.0), osc=(0.0, 0.01),
                     drift=(0.0, 0.02)),
}

BUS_P = np.array([1.0, 0.8, 0.6])
BUS_Q = np.array([0.5, 0.4, 0.3])


@dataclass(frozen=True)
class ScenarioGrid:
    load_levels: tuple = (0.8, 0.9, 1.0, 1.1, 1.2)
    motor_ratios: tuple = (0.7, 0.8, 0.9)
    fault_locations: tuple = (0.0, 0.25, 0.5, 0.75)
    clearing_times: tuple = (0.05, 0.1)

    def __post_init__(self):
        for name, axis in asdict(self).items():
            if not axis:
                raise ValueError(f"scenario grid axis {name!r} is empty")

    def cells(self) -> list[dict]:
        keys = ("load", "motor_ratio", "fault_location", "clearing_time")
        axes = (self.load_levels, self.motor_ratios, self.fault_locations, self.clearing_times)
        return [dict(zip(keys, map(float, combo))) for combo in itertools.product(*axes)]

    def __len__(self) -> int:
        return (len(self.load_levels) * len(self.motor_ratios) * len(self.fault_locations)
                * len(self.clearing_times))


@dataclass
class GeneratorConfig:
    rate_hz: float = 100.0
    duration_s: float = 3.0
    fault_onset_s: float = 0.1
    n_buses: int = 3
    noise_u: float = 0.003
    noise_pq: float = 0.02
    # stable, ambiguous-stable, ambiguous-unstable, unstable shares of the cell ranking
    category_shares: tuple = (0.094, 0.386, 0.178, 0.342)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.rate_hz))

    @property
    def onset_index(self) -> int:
        return int(round(self.fault_onset_s * self.rate_hz))


@dataclass
class Trajectory:
    id: str
    P: np.ndarray
    Q: np.ndarray
    U: np.ndarray
    rate_hz: float
    scenario: dict
    label: int | None = None
    truth: int | None = None
    category: str | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.U.shape[1]

    def window(self, length: int, start: int) -> np.ndarray:
        """``[length, 3 * n_buses]`` model input ordered P buses, Q buses, U buses."""
        if length < 1 or start < 0 or start + length > self.n_samples:
            raise ValueError(f"window [{start}, {start + length}) outside trajectory of "
                             f"{self.n_samples} samples")
        seg = slice(start, start + length)
        return np.concatenate([self.P[:, seg], self.Q[:, seg], self.U[:, seg]]).T

    def tail(self, seconds: float) -> np.ndarray:
        n = int(round(seconds * self.rate_hz))
        if not 1 <= n <= self.n_samples:
            raise ValueError(f"tail of {seconds}s does not fit a {self.n_samples}-sample record")
        return self.U[:, -n:]


def severity(cell: dict) -> float:
    """Scalar ordering of how hard a scenario is to recover from."""
    return (2.0 * (cell["load"] - 1.0) / 0.2 + 1.5 * (cell["motor_ratio"] - 0.8) / 0.1
            + 1.0 * (0.75 - cell["fault_location"]) / 0.25 + 1.2 * (cell["clearing_time"] - 0.05) / 0.05)


def assign_categories(cells: list[dict], shares=GeneratorConfig.category_shares) -> list[str]:
    shares = np.asarray(shares, dtype=np.float64)
    if np.any(shares < 0) or shares.sum() <= 0:
        raise ValueError("category shares must be non-negative with positive sum")
    bounds = np.round(np.cumsum(shares / shares.sum()) * len(cells)).astype(int)
    order = sorted(range(len(cells)), key=lambda i: (severity(cells[i]), i))
    out = [""] * len(cells)
    for rank, i in enumerate(order):
        out[i] = CATEGORIES[int(np.searchsorted(bounds, rank, side="right"))]
    return out


def voltage_profile(t: np.ndarray, cell: dict, category: str | None, draw: dict,
                    cfg: GeneratorConfig) -> np.ndarray:
    """Noise-free ``[n_buses, len(t)]`` voltage magnitudes. ``category=None`` means no fault."""
    n_b = cfg.n_buses
    u = np.ones((n_b, t.size))
    if category is None:
        return u
    t_f = cfg.fault_onset_s
    t_c = t_f + cell["clearing_time"]
    # zero-mean bus pattern: which bus sits nearest the fault
    pattern = 0.03 * np.cos(2 * np.pi * (np.arange(n_b) / n_b - cell["fault_location"]))[:, None]
    delta = draw["delta"]
    during = (t >= t_f) & (t < t_c)
    dt_f = t[during] - t_f
    u[:, during] = 0.55 - delta + pattern - 0.04 * np.exp(-dt_f / 0.015)
    after = t >= t_c
    s = t[after] - t_c
    u_c = 0.85 - delta
    rec = draw["u_inf"] + (u_c - draw["u_inf"]) * np.exp(-s / draw["tau"])
    osc = draw["osc"] * (1 - np.exp(-s / 0.3)) * np.sin(2 * np.pi * 0.8 * s + draw["phase"])
    drift = -draw["drift"] * np.maximum(s - 0.5, 0.0)
    u[:, after] = rec + osc + drift + pattern * np.exp(-s / 0.2)
    return np.maximum(u, 0.0)


def _draw(category: str, cell: dict, rng: np.random.Generator) -> dict:
    prof = PROFILES[category]
    # slower recovery for heavier, more motor-dominated load
    stress = np.clip((cell["load"] * cell["motor_ratio"] - 0.56) / (1.08 - 0.56), 0, 1)
    frac = np.clip(0.7 * stress + 0.3 * rng.uniform(), 0, 1)
    lo, hi = prof["tau"]
    return {
        "delta": rng.uniform(*prof["delta"]),
        "u_inf": rng.uniform(*prof["u_inf"]),
        "tau": lo + (hi - lo) * frac,
        "osc": rng.uniform(*prof["osc"]),
        "drift": rng.uniform(*prof["drift"]),
        "phase": rng.uniform(0, 2 * np.pi),
    }


def power_channels(u: np.ndarray, cell: dict) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free P and Q as smooth functions of U, scaled by load and motor share."""
    n_b = u.shape[0]
    p = cell["load"] * BUS_P[:n_b, None] * u
    q = cell["load"] * (0.3 + 1.5 * cell["motor_ratio"] * (1.0 - u)) * BUS_Q[:n_b, None]
    return p, q


def simulate_trajectory(cell: dict, category: str | None, rng: np.random.Generator,
                        cfg: GeneratorConfig | None = None, traj_id: str = "traj",
                        noise: bool = True) -> Trajectory:
    cfg = cfg or GeneratorConfig()
    t = np.arange(cfg.n_samples) / cfg.rate_hz
    draw = _draw(category, cell, rng) if category is not None else {}
    u = voltage_profile(t, cell, category, draw, cfg)
    p, q = power_channels(u, cell)
    if noise:
        u = np.maximum(u + rng.normal(0, cfg.noise_u, u.shape), 0.0)
        p = p + rng.normal(0, cfg.noise_pq, p.shape)
        q = q + rng.normal(0, cfg.noise_pq, q.shape)
    return Trajectory(
        id=traj_id, P=p, Q=q, U=u, rate_hz=cfg.rate_hz, scenario=dict(cell),
        truth=TRUTH[category] if category is not None else STABLE, category=category,
        provenance={"source": "generator"},
    )


def simulate_trajectories(grid: ScenarioGrid | None = None, n_per_cell: int = 17, seed: int = 0,
                          cfg: GeneratorConfig | None = None, noise: bool = True) -> list[Trajectory]:
    """All ``len(grid) * n_per_cell`` trajectories; a pure function of its arguments."""
    grid = grid or ScenarioGrid()
    cfg = cfg or GeneratorConfig()
    cells = grid.cells()
    cats = assign_categories(cells, cfg.category_shares)
    out = []
    for ci, (cell, cat) in enumerate(zip(cells, cats)):
        rng = stage_rng(seed, f"datagen/cell/{ci}")
        for k in range(n_per_cell):
            traj = simulate_trajectory(cell, cat, rng, cfg, f"c{ci:03d}-{k:03d}", noise)
            traj.provenance = {"source": "generator", "seed": int(seed), "cell": ci}
            out.append(traj)
    return out
