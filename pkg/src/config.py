"""
Configuration settings for the cyclicity lab.
"""
from dataclasses import dataclass, fields, asdict
from datetime import datetime
import json
import os

import numpy as np

from .exceptions import ValidationError


@dataclass
class Config:
    """Central configuration for a lab run."""

    # Power series
    series_degree: int = 40  # truncation degree N
    extraction_radius: float = 0.9  # polytorus radius rho for coefficient extraction
    extraction_grid_factor: int = 4  # grid = factor * (N + 1)
    bergman_nodes: int = 32  # radial and modulus-splitting nodes
    coefficient_tol: float = 1e-12

    # Boundary sets
    dissection_ratio: float = 1.0 / 3.0  # lambda
    cantor_depth: int = 18
    base_lo: float = 0.0  # base arc E_0 in parameter units (radians)
    base_hi: float = 1.0
    profile_points: int = 400
    profile_top_level: int = 4  # profile t-grid spans lambda^(depth-2) .. lambda^top

    # K-set test
    kset_max_level: int = 12  # deepest dyadic J level
    kset_coarse_factor: float = 16.0  # second floor = factor * resolution
    kset_growth_threshold: float = 0.25  # growth per log-unit above which the verdict is FAIL

    # Capacity
    capacity_levels: tuple = (3, 4, 5, 6, 7, 8, 9)
    capacity_centers: int = 48  # seeded centers for product-measure energies
    capacity_alpha_lo: float = 0.05
    capacity_alpha_hi: float = 1.95
    bisection_tol: float = 0.005
    cauchy_tol: float = 0.05  # consecutive-level relative change for "converges"
    energy_block: int = 2048  # rows per block in double sums

    # Geometry
    set_sampling: int = 4096  # samples of a boundary set for distance queries
    max_doublings: int = 8
    distance_rtol: float = 0.01  # doubling stops once the change is below this

    # Constructions
    psi_k_max: int = 40
    psi_beta: float = 2.0  # f = exp(-beta * psi)
    bump_epsilon: float = 0.5
    outer_nodes: int = 2 ** 14
    outer_floor: float = 1e-6

    # Integral chains
    u_min: float = 1e-6
    u_max: float = 1e-1
    u_points: int = 41
    fit_u_max: float = 1e-2  # the last decade is pre-asymptotic and left out of fits
    alpha_min: float = 0.5
    alpha_max: float = 2.0
    alpha_step: float = 0.05
    quad_limit: int = 200
    quad_rtol: float = 1e-10

    # Monte Carlo
    mc_budget: int = 1_000_000
    mc_chunk: int = 131_072
    mc_max_rel_error: float = 0.05

    # Dilation sweep and approximants
    sweep_levels: tuple = (1, 2, 3, 4, 5, 6)  # r = 1 - 2^-j
    sweep_truncation_tol: float = 0.05
    gram_jitter: float = 1e-12
    gram_condition_max: float = 1e12

    # Multiplier heuristic
    shell_deltas: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    multiplier_samples: int = 2000

    # Reproducibility
    seed: int = 0

    # Output Configuration
    output_base_dir: str = 'output'

    @property
    def dimension(self) -> float:
        """Hausdorff dimension of the constant-ratio Cantor set."""
        return float(np.log(2.0) / np.log(1.0 / self.dissection_ratio))

    @property
    def extraction_grid(self) -> int:
        return self.extraction_grid_factor * (self.series_degree + 1)

    @property
    def profile_t_grid(self) -> np.ndarray:
        lam = self.dissection_ratio
        base = self.base_hi - self.base_lo
        t_lo = base * lam ** (self.cantor_depth - 2)
        t_hi = base * lam ** self.profile_top_level
        return np.geomspace(t_lo, t_hi, self.profile_points)

    @property
    def u_grid(self) -> np.ndarray:
        return np.geomspace(self.u_min, self.u_max, self.u_points)

    @property
    def alpha_grid(self) -> np.ndarray:
        count = int(round((self.alpha_max - self.alpha_min) / self.alpha_step)) + 1
        return np.round(np.linspace(self.alpha_min, self.alpha_max, count), 10)

    @property
    def sweep_r_grid(self) -> np.ndarray:
        return 1.0 - 2.0 ** (-np.asarray(self.sweep_levels, dtype=float))

    @classmethod
    def from_dict(cls, data: dict) -> 'Config':
        """Build a config from a plain mapping; unknown keys and mistyped values are rejected."""
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**{key: _coerce(key, known[key].default, value) for key, value in data.items()})

    @classmethod
    def load(cls, path: str) -> 'Config':
        with open(path, 'r', encoding='utf-8') as handle:
            return cls.from_dict(json.load(handle))

    def replace(self, **changes) -> 'Config':
        data = asdict(self)
        data.update(changes)
        return Config.from_dict(data)

    def to_dict(self) -> dict:
        return {key: list(value) if isinstance(value, tuple) else value
                for key, value in asdict(self).items()}

    def get_output_dir(self) -> str:
        """Get timestamped output directory path."""
        timestamp = datetime.now().strftime('%Y-%m-%d_%H-%M-%S')
        return os.path.join(self.output_base_dir, timestamp)

    def create_output_dirs(self, output_dir: str) -> dict:
        """Create the output directory and return the artifact paths."""
        os.makedirs(output_dir, exist_ok=True)
        return {
            'base': output_dir,
            'result': os.path.join(output_dir, 'result.csv'),
            'summary': os.path.join(output_dir, 'summary.json'),
            'manifest': os.path.join(output_dir, 'manifest.json'),
            'error': os.path.join(output_dir, 'error.json'),
        }


def _coerce(key: str, default, value):
    """Cast a raw override to the type of the field default."""
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ValidationError(f"config '{key}' expects a list, got {value!r}")
        return tuple(value)
    if isinstance(value, bool) or isinstance(value, (list, tuple, dict)) or value is None:
        raise ValidationError(f"config '{key}' expects {type(default).__name__}, got {value!r}")
    try:
        if isinstance(default, int):
            number = float(value)
            if not number.is_integer():
                raise ValueError(value)
            return int(number)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError) as err:
        raise ValidationError(f"config '{key}' expects {type(default).__name__}, got {value!r}") from err
    return str(value)
