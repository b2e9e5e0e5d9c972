"""One-dimensional bias distributions and the constants that drive error bounds.

A bias law is a scalar probability density ``p`` from a small family
(shifted exponential, Gaussian, logistic).  Besides the usual density /
CDF / sampling operations, this module computes three scalar functionals
of ``p`` restricted to a working interval ``[-gamma, gamma]``:

``flatness_beta``
    infimum of ``p'(x)^2 / (4 p(x))`` over the interval.  Measures how
    far the density is from flat; a value of zero makes downstream error
    bounds vacuous.
``lipschitz_L``
    maximum of ``p(x) / P(B <= x)`` and ``|p'(x)| / p(x)`` over the
    interval, a Lipschitz-type steepness constant of the log-density and
    log-CDF.
``omega_min_mass``
    smallest probability mass the law puts on any length-``nu`` window
    inside ``[-gamma, gamma]``.

All three are evaluated on a uniform grid with ``grid_resolution`` points
per unit length; the closed-form families used here are smooth enough
that doubling the resolution moves the results by well under a percent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit, ndtr, ndtri

__all__ = [
    "BiasModel",
    "BiasConstants",
    "InvalidIntervalError",
    "VacuousBoundWarning",
    "bias_spec_to_config",
    "compute_bias_constants",
    "default_exponential",
    "density_and_derivative",
    "flatness_beta",
    "interval_probability",
    "lipschitz_L",
    "omega_min_mass",
    "parse_bias_spec",
    "sample_bias",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

_KINDS = ("shifted_exponential", "gaussian", "logistic")

# config-string tags and their parameter names, in storage order
_CONFIG_SCHEMA = {
    "exp": ("shifted_exponential", ("rate", "shift")),
    "gauss": ("gaussian", ("mean", "std")),
    "logistic": ("logistic", ("loc", "scale")),
}


class InvalidIntervalError(ValueError):
    """Raised when interval endpoints are ordered or sized inconsistently."""


class VacuousBoundWarning(UserWarning):
    """A computed constant is (numerically) zero, so bounds using it are vacuous."""


@dataclass(frozen=True)
class BiasModel:
    """A scalar bias distribution.

    Parameters
    ----------
    kind : str
        One of ``"shifted_exponential"``, ``"gaussian"``, ``"logistic"``.
    params : tuple of float
        Kind-specific parameter pair: (rate, shift) for the shifted
        exponential, (mean, std) for the Gaussian, (loc, scale) for the
        logistic.
    grid_resolution : int
        Grid points per unit length used when computing interval
        constants numerically.
    """

    kind: str
    params: tuple[float, float]
    grid_resolution: int = 10_000

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown bias kind {self.kind!r}")
        spread = self.params[0] if self.kind == "shifted_exponential" else self.params[1]
        if not spread > 0:
            raise ValueError(f"scale parameter must be positive, got {spread!r}")
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be at least 2")

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def shifted_exponential(
        cls, rate: float = 1.0, shift: float = 0.0, grid_resolution: int = 10_000
    ) -> "BiasModel":
        """Exponential law with rate ``rate`` supported on ``[shift, inf)``."""
        return cls("shifted_exponential", (float(rate), float(shift)), grid_resolution)

    @classmethod
    def gaussian(
        cls, mean: float = 0.0, std: float = 1.0, grid_resolution: int = 10_000
    ) -> "BiasModel":
        return cls("gaussian", (float(mean), float(std)), grid_resolution)

    @classmethod
    def logistic(
        cls, loc: float = 0.0, scale: float = 1.0, grid_resolution: int = 10_000
    ) -> "BiasModel":
        return cls("logistic", (float(loc), float(scale)), grid_resolution)

    @classmethod
    def from_config(cls, text: str, grid_resolution: int = 10_000) -> "BiasModel":
        """Parse a config string such as ``"exp:rate=1,shift=-2"``.

        The grammar is ``tag:key=value,key=value`` with tags ``exp``
        (keys ``rate``, ``shift``), ``gauss`` (``mean``, ``std``) and
        ``logistic`` (``loc``, ``scale``).  Both keys are required; order
        does not matter.
        """
        head, sep, body = text.strip().partition(":")
        if not sep:
            raise ValueError(f"bias config {text!r} is missing the ':' separator")
        if head not in _CONFIG_SCHEMA:
            raise ValueError(
                f"unknown bias tag {head!r}; expected one of {sorted(_CONFIG_SCHEMA)}"
            )
        kind, keys = _CONFIG_SCHEMA[head]
        values: dict[str, float] = {}
        for part in body.split(","):
            key, eq, raw = part.partition("=")
            key = key.strip()
            if not eq or key not in keys:
                raise ValueError(f"bad bias parameter {part!r} in config {text!r}")
            if key in values:
                raise ValueError(f"duplicate bias parameter {key!r} in config {text!r}")
            try:
                values[key] = float(raw)
            except ValueError as exc:
                raise ValueError(f"bad numeric value {raw!r} for {key!r}") from exc
        missing = [k for k in keys if k not in values]
        if missing:
            raise ValueError(f"bias config {text!r} is missing {missing}")
        return cls(kind, (values[keys[0]], values[keys[1]]), grid_resolution)

    def to_config(self) -> str:
        """Inverse of :meth:`from_config`; values round-trip exactly."""
        for tag, (kind, keys) in _CONFIG_SCHEMA.items():
            if kind == self.kind:
                return f"{tag}:{keys[0]}={self.params[0]!r},{keys[1]}={self.params[1]!r}"
        raise AssertionError(f"unreachable kind {self.kind!r}")

    # ------------------------------------------------------------------
    # distribution functions
    # ------------------------------------------------------------------

    def _loc_scale(self) -> tuple[float, float]:
        """Location/scale standardisation used by the closed forms below."""
        a, b = self.params
        if self.kind == "shifted_exponential":
            return b, 1.0 / a
        return a, b

    def density(self, x):
        return np.exp(self.log_density(x))

    def log_density(self, x):
        loc, scale = self._loc_scale()
        y = (np.asarray(x, dtype=float) - loc) / scale
        if self.kind == "shifted_exponential":
            out = np.where(y >= 0.0, -y - math.log(scale), -np.inf)
        elif self.kind == "gaussian":
            out = -0.5 * y * y - math.log(scale) - _LOG_SQRT_2PI
        else:
            ay = np.abs(y)
            out = -ay - 2.0 * np.log1p(np.exp(-ay)) - math.log(scale)
        return out if out.ndim else float(out)

    def density_derivative(self, x):
        loc, scale = self._loc_scale()
        xarr = np.asarray(x, dtype=float)
        y = (xarr - loc) / scale
        p = self.density(xarr)
        if self.kind == "shifted_exponential":
            # one-sided derivative at the support edge; zero strictly below it
            out = np.where(y >= 0.0, -p / scale, 0.0)
        elif self.kind == "gaussian":
            out = -(y / scale) * p
        else:
            out = -np.tanh(y / 2.0) * p / scale
        return out if out.ndim else float(out)

    def cdf(self, x):
        loc, scale = self._loc_scale()
        y = (np.asarray(x, dtype=float) - loc) / scale
        if self.kind == "shifted_exponential":
            out = np.where(y >= 0.0, -np.expm1(-np.maximum(y, 0.0)), 0.0)
        elif self.kind == "gaussian":
            out = ndtr(y)
        else:
            out = expit(y)
        return out if out.ndim else float(out)

    def ppf(self, q):
        loc, scale = self._loc_scale()
        q = np.asarray(q, dtype=float)
        if self.kind == "shifted_exponential":
            out = loc - scale * np.log1p(-q)
        elif self.kind == "gaussian":
            out = loc + scale * ndtri(q)
        else:
            out = loc + scale * logit(q)
        return out if out.ndim else float(out)

    def sample(self, d: int, seed: int | None = None, rng: np.random.Generator | None = None):
        """Draw ``d`` i.i.d. biases; pass either a seed or an existing generator."""
        if rng is None:
            rng = np.random.default_rng(seed)
        loc, scale = self._loc_scale()
        if self.kind == "shifted_exponential":
            return loc + rng.exponential(scale, size=d)
        if self.kind == "gaussian":
            return rng.normal(loc, scale, size=d)
        return rng.logistic(loc, scale, size=d)

    def support(self) -> tuple[float, float]:
        """Endpoints of the support (extended reals)."""
        if self.kind == "shifted_exponential":
            return self.params[1], math.inf
        return -math.inf, math.inf


def default_exponential(gamma: float) -> BiasModel:
    """Shifted exponential with rate 1 positioned so ``[-gamma, gamma]`` is interior.

    The support starts at ``-gamma - 1``, one unit to the left of the
    working interval, which keeps the density positive and the CDF
    bounded away from zero on the whole interval.
    """
    return BiasModel.shifted_exponential(rate=1.0, shift=-float(gamma) - 1.0)


# ----------------------------------------------------------------------
# config strings covering both random and constant bias specifications
# ----------------------------------------------------------------------


def parse_bias_spec(text: str) -> BiasModel | float:
    """Parse a bias configuration that may be a distribution or a constant.

    ``"const:value=0.5"`` yields the float ``0.5``; anything else is
    delegated to :meth:`BiasModel.from_config`.
    """
    stripped = text.strip()
    if stripped.startswith("const:"):
        key, eq, raw = stripped[len("const:"):].partition("=")
        if key.strip() != "value" or not eq:
            raise ValueError(f"constant bias config {text!r} must be 'const:value=<real>'")
        return float(raw)
    return BiasModel.from_config(stripped)


def bias_spec_to_config(spec: BiasModel | float) -> str:
    if isinstance(spec, BiasModel):
        return spec.to_config()
    return f"const:value={float(spec)!r}"


# ----------------------------------------------------------------------
# module-level operations
# ----------------------------------------------------------------------


def density_and_derivative(model: BiasModel, x):
    """Evaluate ``(p(x), p'(x))``; accepts scalars or arrays."""
    return model.density(x), model.density_derivative(x)


def interval_probability(model: BiasModel, x1, x2) -> float:
    """Probability that the bias lies in ``[-x1, -x2]``.

    Endpoints follow the shifted-observation convention used by the
    likelihoods in this package: ``x1`` is the lower shift, ``x2`` the
    upper one, and the requirement ``x1 >= x2`` makes the target interval
    nonempty.  ``math.inf`` endpoints are accepted and handled by taking
    the corresponding CDF limit; no arithmetic is ever performed on them.
    """
    x1 = float(x1)
    x2 = float(x2)
    if x1 < x2:
        raise InvalidIntervalError(f"need x1 >= x2, got x1={x1}, x2={x2}")
    upper = 1.0 if math.isinf(x2) and x2 < 0 else float(model.cdf(-x2))
    lower = 0.0 if math.isinf(x1) and x1 > 0 else float(model.cdf(-x1))
    return max(upper - lower, 0.0)


def sample_bias(model: BiasModel, d: int, seed: int | None = None) -> np.ndarray:
    """Draw a length-``d`` bias vector reproducibly from ``seed``."""
    return model.sample(d, seed=seed)


def _interval_grid(gamma: float, resolution: int, length: float) -> np.ndarray:
    n = max(int(math.ceil(resolution * length)), 2) + 1
    return np.linspace(-gamma, -gamma + length, n)


def flatness_beta(model: BiasModel, gamma: float) -> float:
    """Infimum of ``p'(x)^2 / (4 p(x))`` over ``[-gamma, gamma]``.

    Returns 0.0 (with a :class:`VacuousBoundWarning`) when the infimum is
    below ``1e-12``, which happens whenever the density has a critical
    point inside the interval.
    """
    if not gamma > 0:
        raise InvalidIntervalError(f"gamma must be positive, got {gamma}")
    grid = _interval_grid(gamma, model.grid_resolution, 2.0 * gamma)
    p, dp = density_and_derivative(model, grid)
    positive = p > 0.0
    if not positive.any():
        raise ValueError(
            f"density vanishes on all of [-{gamma}, {gamma}]; flatness is undefined"
        )
    value = float(np.min(dp[positive] ** 2 / (4.0 * p[positive])))
    if value < 1e-12:
        warnings.warn(
            "flatness constant is numerically zero; error bounds built on it are vacuous",
            VacuousBoundWarning,
            stacklevel=2,
        )
        return 0.0
    return value


def lipschitz_L(model: BiasModel, gamma: float) -> float:
    """Steepness constant ``max(sup p/P(B<=x), sup |p'|/p)`` over ``[-gamma, gamma]``."""
    if not gamma > 0:
        raise InvalidIntervalError(f"gamma must be positive, got {gamma}")
    grid = _interval_grid(gamma, model.grid_resolution, 2.0 * gamma)
    p, dp = density_and_derivative(model, grid)
    cdf = np.asarray(model.cdf(grid))
    if cdf[0] <= 0.0:
        raise ValueError(
            f"CDF vanishes at -{gamma}; the hazard-type ratio p/P(B<=x) is unbounded"
        )
    hazard = float(np.max(p / cdf))
    positive = p > 0.0
    log_slope = float(np.max(np.abs(dp[positive]) / p[positive])) if positive.any() else 0.0
    return max(hazard, log_slope)


def omega_min_mass(model: BiasModel, gamma: float, nu: float) -> float:
    """Smallest mass of a length-``nu`` window contained in ``[-gamma, gamma]``."""
    if not gamma > 0:
        raise InvalidIntervalError(f"gamma must be positive, got {gamma}")
    if not (0.0 < nu <= 2.0 * gamma) or not math.isfinite(nu):
        raise InvalidIntervalError(
            f"window length nu must satisfy 0 < nu <= 2*gamma, got nu={nu}, gamma={gamma}"
        )
    starts = _interval_grid(gamma, model.grid_resolution, 2.0 * gamma - nu)
    mass = np.asarray(model.cdf(starts + nu)) - np.asarray(model.cdf(starts))
    return max(float(np.min(mass)), 0.0)


@dataclass(frozen=True)
class BiasConstants:
    """Bundle of interval constants for one (model, gamma, nu) triple."""

    beta: float
    lipschitz: float
    omega: float
    gamma: float
    nu: float

    def __post_init__(self) -> None:
        if self.beta < 0.0:
            raise ValueError(f"flatness constant must be nonnegative, got {self.beta}")
        if not self.lipschitz > 0.0:
            raise ValueError(f"Lipschitz constant must be positive, got {self.lipschitz}")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"window mass must lie in [0, 1], got {self.omega}")

    @property
    def vacuous(self) -> bool:
        """True when any bound built from these constants is vacuous."""
        return self.beta <= 0.0 or self.omega <= 0.0


def compute_bias_constants(model: BiasModel, gamma: float, nu: float) -> BiasConstants:
    """Evaluate all three interval constants at once."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", VacuousBoundWarning)
        beta = flatness_beta(model, gamma)
    return BiasConstants(
        beta=beta,
        lipschitz=lipschitz_L(model, gamma),
        omega=omega_min_mass(model, gamma, nu),
        gamma=float(gamma),
        nu=float(nu),
    )
