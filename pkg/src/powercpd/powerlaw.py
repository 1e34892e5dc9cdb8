"""Continuous power-law sampling and synthetic multi-segment scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_XMIN = 10.0


@dataclass(frozen=True)
class PowerLawParams:
    """Continuous power law with density proportional to x**(-alpha) on [xmin, inf)."""

    alpha: float
    xmin: float = DEFAULT_XMIN

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if not self.xmin > 0:
            raise ValueError(f"xmin must be > 0, got {self.xmin}")

    def ccdf(self, x):
        """P(X > x)."""
        x = np.asarray(x, dtype=float)
        return np.where(x < self.xmin, 1.0, (np.maximum(x, self.xmin) / self.xmin) ** (1.0 - self.alpha))


def quantile_powerlaw(params: PowerLawParams, p) -> float | np.ndarray:
    """Inverse CDF, ``xmin * (1 - p) ** (-1 / (alpha - 1))``.

    Accepts a scalar or an array of probabilities in [0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr >= 0) & (p_arr < 1))):
        raise ValueError("probability must lie in [0, 1)")
    q = params.xmin * (1.0 - p_arr) ** (-1.0 / (params.alpha - 1.0))
    return float(q) if q.ndim == 0 else q


def sample_powerlaw(params: PowerLawParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. power-law variates by inverse-CDF on uniforms."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return quantile_powerlaw(params, rng.random(n))


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial; order of trial execution does not matter."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial_index)]))


@dataclass(frozen=True)
class ScenarioSpec:
    """Piecewise power-law scenario.

    ``segments`` is a sequence of ``(length, alpha)`` pairs in series order.
    """

    segments: tuple[tuple[int, float], ...]
    xmin: float = DEFAULT_XMIN
    trials: int = 1000
    seed: int = 0
    name: str = field(default="scenario", compare=False)

    def __post_init__(self):
        segs = tuple((int(length), float(alpha)) for length, alpha in self.segments)
        if not segs:
            raise ValueError("segments: at least one segment required")
        for i, (length, alpha) in enumerate(segs):
            if length < 1:
                raise ValueError(f"segments[{i}].length must be >= 1, got {length}")
            if not alpha > 1:
                raise ValueError(f"segments[{i}].alpha must be > 1, got {alpha}")
        if not self.xmin > 0:
            raise ValueError(f"xmin must be > 0, got {self.xmin}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        object.__setattr__(self, "segments", segs)

    @property
    def n(self) -> int:
        return sum(length for length, _ in self.segments)

    @property
    def true_changepoints(self) -> list[int]:
        bounds = np.cumsum([length for length, _ in self.segments])
        return [int(b) for b in bounds[:-1]]

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        segs = d.get("segments")
        if segs is None:
            raise ValueError("scenario: missing field 'segments'")
        pairs = []
        for i, s in enumerate(segs):
            if isinstance(s, dict):
                pairs.append((s["length"], s["alpha"]))
            else:
                length, alpha = s
                pairs.append((length, alpha))
        return cls(
            segments=tuple(pairs),
            xmin=float(d.get("xmin", DEFAULT_XMIN)),
            trials=int(d.get("trials", 1000)),
            seed=int(d.get("seed", 0)),
            name=str(d.get("name", "scenario")),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "segments": [{"length": length, "alpha": alpha} for length, alpha in self.segments],
            "xmin": self.xmin,
            "trials": self.trials,
            "seed": self.seed,
        }


def generate_scenario(spec: ScenarioSpec, trial_index: int) -> tuple[np.ndarray, list[int]]:
    """Series for one trial and its true changepoints.

    Segments are drawn in declared order from a stream derived from
    ``(spec.seed, trial_index)``.
    """
    rng = trial_rng(spec.seed, trial_index)
    parts = [sample_powerlaw(PowerLawParams(alpha, spec.xmin), length, rng) for length, alpha in spec.segments]
    return np.concatenate(parts), spec.true_changepoints
