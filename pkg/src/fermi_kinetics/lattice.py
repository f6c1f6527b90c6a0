"""Lattice model: torus grid, dispersion, interaction, equilibrium and cutoffs.

Momenta are handled as arrays whose last axis has length ``dim``.  Grid
points are integer vectors mod ``L``; physical momenta are ``x / L``.

The dispersion and the interaction are single cosine modes per coordinate,
so every evaluator here is exact for real (off-grid) momenta as well.  In
particular the first-order correction ``R`` is a trigonometric polynomial
whose coefficients are grid moments of the equilibrium occupation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Discrete torus ``{0, 1/L, ..., (L-1)/L}^d``."""

    dim: int
    side: int

    def __post_init__(self):
        if self.dim < 1 or self.side < 1:
            raise ValueError("dim and side must be positive")

    @property
    def size(self) -> int:
        return self.side ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dim

    def points(self) -> np.ndarray:
        """All integer points, shape ``(L**d, d)``, C order."""
        axes = np.meshgrid(*[np.arange(self.side)] * self.dim, indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def momenta(self) -> np.ndarray:
        """Physical momenta on the grid, shape ``L**d`` x ``d`` reshaped to ``shape + (d,)``."""
        axes = np.meshgrid(*[np.arange(self.side) / self.side] * self.dim, indexing="ij")
        return np.stack(axes, axis=-1)

    def integrate(self, values) -> float | complex:
        """Grid integral: ``L**-d`` times the sum."""
        return np.sum(values) / self.size

    def cell(self, k) -> np.ndarray:
        """Cell map sending a real torus point to the integer grid point below it."""
        k = np.asarray(k, dtype=float)
        idx = np.floor(self.side * np.mod(k, 1.0)).astype(np.int64)
        return np.mod(idx, self.side)

    def value(self, x) -> np.ndarray:
        return np.mod(np.asarray(x), self.side) / self.side


@dataclass(frozen=True)
class DispersionModel:
    """Nearest-neighbour band ``omega(k) = c - sum_j cos(2 pi k_j)``."""

    c: float = 0.0

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return self.c - np.cos(TWO_PI * k).sum(axis=-1)


@dataclass(frozen=True)
class InteractionModel:
    """Pair potential ``V(k) = c_tilde - a sum_j cos(2 pi k_j - alpha_j)``.

    The strength ``a`` defaults to one; ``a = 0`` gives a constant potential.
    """

    c_tilde: float = 0.0
    alpha: tuple[float, ...] = ()
    strength: float = 1.0

    def phases(self, dim: int) -> np.ndarray:
        if len(self.alpha) == 0:
            return np.zeros(dim)
        if len(self.alpha) != dim:
            raise ValueError(f"alpha has {len(self.alpha)} entries, expected {dim}")
        return np.asarray(self.alpha, dtype=float)

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        a = self.phases(k.shape[-1])
        return self.c_tilde - self.strength * np.cos(TWO_PI * k - a).sum(axis=-1)

    def sup_norm(self, dim: int) -> float:
        return abs(self.c_tilde) + abs(self.strength) * dim

    def l1_norm(self, dim: int) -> float:
        """Sum of absolute Fourier coefficients of ``V``."""
        return abs(self.c_tilde) + abs(self.strength) * dim

    def fourier_modes(self, dim: int) -> list[tuple[tuple[int, ...], complex]]:
        """Modes ``(n, v_n)`` with ``V(k) = sum_n v_n exp(2 pi i n.k)``."""
        a = self.phases(dim)
        modes = [((0,) * dim, complex(self.c_tilde))]
        for j in range(dim):
            e = [0] * dim
            e[j] = 1
            modes.append((tuple(e), -0.5 * self.strength * np.exp(-1j * a[j])))
            e[j] = -1
            modes.append((tuple(e), -0.5 * self.strength * np.exp(1j * a[j])))
        return modes


@dataclass(frozen=True)
class Equilibrium:
    """Fermi-Dirac occupation at zero chemical potential."""

    temperature: float
    dispersion: DispersionModel

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")

    def __call__(self, k) -> np.ndarray:
        return fermi(self.dispersion(k), self.temperature)


def fermi(energy, temperature: float) -> np.ndarray:
    """``1 / (exp(E/T) + 1)`` evaluated without overflow."""
    return 0.5 * (1.0 - np.tanh(0.5 * np.asarray(energy, dtype=float) / temperature))


def w_parity(w, sigma):
    """``W(k, -1) = W(k)`` and ``W(k, +1) = 1 - W(k)``."""
    return np.where(np.asarray(sigma) < 0, w, 1.0 - np.asarray(w))


@dataclass(frozen=True)
class ModelConfig:
    """Serializable model configuration."""

    dim: int = 2
    L: int = 32
    T: float = 1.0
    lam: float = 0.0
    c: float = 0.0
    c_tilde: float = 0.0
    alpha: tuple[float, ...] = ()
    v_strength: float = 1.0
    delta: float = 5.0 / 7.0
    gamma: float = 1.0 / 7.0

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        data["alpha"] = tuple(data.get("alpha", ()) or ())
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "L": self.L,
            "T": self.T,
            "lambda": self.lam,
            "c": self.c,
            "c_tilde": self.c_tilde,
            "alpha": list(self.alpha),
            "v_strength": self.v_strength,
            "delta": self.delta,
            "gamma": self.gamma,
        }


@dataclass(frozen=True)
class LatticeModel:
    """Bundle of grid, band, potential and equilibrium for one configuration."""

    config: ModelConfig = field(default_factory=ModelConfig)

    @cached_property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.config.dim, self.config.L)

    @cached_property
    def dispersion(self) -> DispersionModel:
        return DispersionModel(self.config.c)

    @cached_property
    def interaction(self) -> InteractionModel:
        return InteractionModel(self.config.c_tilde, tuple(self.config.alpha), self.config.v_strength)

    @cached_property
    def equilibrium(self) -> Equilibrium:
        return Equilibrium(self.config.T, self.dispersion)

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def lam(self) -> float:
        return self.config.lam

    def omega(self, k) -> np.ndarray:
        return self.dispersion(k)

    def vhat(self, k) -> np.ndarray:
        return self.interaction(k)

    def w0(self, k) -> np.ndarray:
        return self.equilibrium(k)

    @cached_property
    def _w0_moments(self) -> tuple[float, np.ndarray, np.ndarray]:
        k = self.grid.momenta().reshape(-1, self.dim)
        w = self.w0(k)
        m0 = float(w.mean())
        cj = (w[:, None] * np.cos(TWO_PI * k)).mean(axis=0)
        sj = (w[:, None] * np.sin(TWO_PI * k)).mean(axis=0)
        return m0, cj, sj

    def r_lambda(self, k) -> np.ndarray:
        """``R(k1) = int dk2 W0(k2) [V(0) - V(k1 - k2)]`` with the grid integral.

        The result equals the explicit grid sum for any real ``k1`` because
        ``V`` is a single cosine mode per coordinate.
        """
        k = np.asarray(k, dtype=float)
        m0, cj, sj = self._w0_moments
        a = self.interaction.phases(self.dim)
        g = self.interaction.strength
        arg = TWO_PI * k - a
        v0_minus_c = -g * np.cos(a).sum()
        return m0 * v0_minus_c + g * (cj * np.cos(arg) + sj * np.sin(arg)).sum(axis=-1)

    def r_lambda_direct(self, k1) -> float:
        """Literal grid sum for ``R``; quadratic cost, kept for cross-checks."""
        k2 = self.grid.momenta().reshape(-1, self.dim)
        k1 = np.asarray(k1, dtype=float)
        v0 = self.vhat(np.zeros(self.dim))
        return float(np.mean(self.w0(k2) * (v0 - self.vhat(k1 - k2))))

    def omega_lambda(self, k, lam: float | None = None) -> np.ndarray:
        lam = self.lam if lam is None else lam
        if lam == 0:
            return self.omega(k)
        return self.omega(k) + lam * self.r_lambda(k)

    def dispersion_modes(self, lam: float | None = None) -> tuple[float, np.ndarray]:
        """Write ``omega_lambda(k) = E0 + sum_j Re(A_j exp(2 pi i k_j))``.

        Returns ``(E0, A)`` with complex ``A`` of length ``dim``.
        """
        lam = self.lam if lam is None else lam
        amp = -np.ones(self.dim, dtype=complex)
        e0 = float(self.config.c)
        if lam != 0:
            m0, cj, sj = self._w0_moments
            a = self.interaction.phases(self.dim)
            g = self.interaction.strength
            amp = amp + lam * g * (cj - 1j * sj) * np.exp(-1j * a)
            e0 += lam * g * m0 * (-np.cos(a).sum())
        return e0, amp

    def table(self, fn) -> np.ndarray:
        """Evaluate ``fn`` on the grid, returning an array of shape ``grid.shape``."""
        return np.asarray(fn(self.grid.momenta()))


def torus_dist(x) -> np.ndarray:
    """Distance to the nearest integer, coordinatewise."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.minimum(x, 1.0 - x)


def dist_msing(k) -> np.ndarray:
    """Distance to the set where all but one coordinate lie in ``{0, 1/2}``.

    For each choice of the unconstrained coordinate, take the Euclidean norm
    of the remaining coordinates' distances to ``{0, 1/2}``; minimise over the
    choice.
    """
    k = np.asarray(k, dtype=float)
    h = np.minimum(torus_dist(k), torus_dist(k - 0.5))
    d = k.shape[-1]
    if d == 1:
        return np.zeros(k.shape[:-1])
    sq = h * h
    total = sq.sum(axis=-1, keepdims=True)
    return np.sqrt(np.clip(total - sq, 0.0, None)).min(axis=-1)


def _ramp(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class CutoffConfig:
    """Smooth indicator of the complement of a ``lam**b`` neighbourhood of M_sing."""

    lam: float
    b: float = 0.75

    def __post_init__(self):
        if not 0 < self.b <= 1:
            raise ValueError("b must lie in (0, 1]")
        if not self.lam > 0:
            raise ValueError("cutoff needs lam > 0")

    @property
    def width(self) -> float:
        return self.lam ** self.b

    def f1(self, k) -> np.ndarray:
        return _ramp(dist_msing(k) / self.width)

    def f0(self, k) -> np.ndarray:
        return 1.0 - self.f1(k)

    def phi(self, j: int, k1, k2, k3) -> np.ndarray:
        k1, k2, k3 = (np.asarray(x, dtype=float) for x in (k1, k2, k3))
        p1 = self.f1(k1 + k2) * self.f1(k2 + k3) * self.f1(k3 + k1)
        if j == 1:
            return p1
        if j == 0:
            return 1.0 - p1
        raise ValueError("j must be 0 or 1")

    def lipschitz_constant(self) -> float:
        """Slope bound of the ramp: ``F1 <= 1.5 * dist / lam**b``."""
        return 1.5 / self.width


def cutoff_phi(j: int, k1, k2, k3, cutoff: CutoffConfig) -> np.ndarray:
    return cutoff.phi(j, k1, k2, k3)


@dataclass(frozen=True)
class KineticParams:
    lam: float
    eps: float
    delta: float
    gamma: float
    b: float
    gamma_prime: float
    a0: float
    b0: float
    N0: int
    kappa_prime: float
    kappa: tuple[float, ...]

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def japanese(x: float) -> float:
    return math.sqrt(1.0 + x * x)


def param_schedule(lam: float, delta: float, gamma: float) -> KineticParams:
    """Derived constants and the kappa sequence for coupling ``lam``."""
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    if not delta > 0 or not 0 < gamma <= 1:
        raise ValueError("need delta > 0 and gamma in (0, 1]")
    gp = min(0.25, 2 * gamma, 2 * delta)
    a0 = gp / 24
    b0 = 16 * (3 + 1 / a0)
    ln = abs(math.log(lam))
    n0 = max(1, math.floor(a0 * ln / math.log(japanese(ln))))
    log_kp = 2 * math.log(lam) + b0 * math.log(n0)
    kp = math.exp(log_kp) if log_kp < 709 else math.inf
    kappa = tuple(0.0 if n < n0 / 2 else kp for n in range(n0 + 1))
    return KineticParams(lam, lam ** 2, delta, gamma, 0.75, gp, a0, b0, n0, kp, kappa)
