"""Collision operator, collisional frequency and leading-motive amplitudes on the grid.

Momentum conservation is resolved exactly on the grid (indices mod ``L``);
only the energy constraint is regularized.  A time integral with damping
``exp(-eta t)`` is the single regularization used throughout: it gives the
resolvent ``1 / (eta + i x)`` and, for real parts, the Lorentzian
``eta / (x**2 + eta**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import CapExceeded
from .lattice import LatticeModel, w_parity

CHUNK = 1 << 20


# ---------------------------------------------------------------------------
# occupation fields


@dataclass
class WField:
    """Grid occupation with values clamped to ``[0, 1]``."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.clip(np.asarray(self.values, dtype=float), 0.0, 1.0)

    @classmethod
    def equilibrium(cls, model: LatticeModel) -> "WField":
        return cls(model.table(model.w0))

    @property
    def tilde(self) -> np.ndarray:
        return 1.0 - self.values


def lorentzian(x, eta: float) -> np.ndarray:
    """``(1/pi) eta / (x**2 + eta**2)``."""
    return (eta / np.pi) / (np.asarray(x) ** 2 + eta * eta)


def resolvent(x, eta: float) -> np.ndarray:
    """``i / (x + i eta)``, the damped time integral of ``exp(i t x)``."""
    return 1j / (np.asarray(x) + 1j * eta)


# ---------------------------------------------------------------------------
# grid sums over (k2, k3) with k4 = k1 + k2 - k3


@dataclass
class _GridTables:
    L: int
    dim: int
    omega: np.ndarray  # flat, length L**d
    vhat: np.ndarray  # flat, V at grid point x
    w: np.ndarray  # flat occupation


def _tables(model: LatticeModel, W: np.ndarray | None, lam: float | None) -> _GridTables:
    k = model.grid.momenta()
    om = model.omega_lambda(k, lam or 0.0)
    w = model.table(model.w0) if W is None else np.clip(np.asarray(W, dtype=float), 0.0, 1.0)
    return _GridTables(model.grid.side, model.dim, om.ravel(), model.table(model.vhat).ravel(), w.ravel())


def _lin(idx: np.ndarray, L: int) -> np.ndarray:
    """Flat C-order index of integer points (last axis = coordinates), reduced mod ``L``."""
    idx = np.mod(idx, L)
    out = np.zeros(idx.shape[:-1], dtype=np.int64)
    for j in range(idx.shape[-1]):
        out = out * L + idx[..., j]
    return out


def _k1_index(k1, L: int, dim: int) -> np.ndarray:
    return np.mod(np.broadcast_to(np.asarray(k1, dtype=np.int64), (dim,)), L)


def _pair_sum(tab: _GridTables, k1, fn) -> complex:
    """``L**-2d sum_{k2,k3} fn(i1, i2, i3, i4)`` with flat indices and ``k4 = k1 + k2 - k3``."""
    L, d = tab.L, tab.dim
    pts = np.stack(np.meshgrid(*[np.arange(L)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    a = _k1_index(k1, L, d)
    i1 = int(_lin(a[None, :], L)[0])
    n = len(pts)
    step = max(1, CHUNK // n)
    total = 0j
    i3 = np.arange(n)
    for s in range(0, n, step):
        p2 = pts[s:s + step]
        i2 = np.arange(s, s + len(p2))[:, None]
        i4 = _lin(a[None, None, :] + p2[:, None, :] - pts[None, :, :], L)
        total += complex(np.sum(fn(i1, i2, i3[None, :], i4)))
    return total / n ** 2


def _points(L: int, d: int) -> np.ndarray:
    return np.stack(np.meshgrid(*[np.arange(L)] * d, indexing="ij"), axis=-1).reshape(-1, d)


def _vdiff_table(tab: _GridTables) -> np.ndarray:
    """``V(k_a - k_b)`` for all flat pairs; shape ``(n, n)``."""
    pts = _points(tab.L, tab.dim)
    return tab.vhat[_lin(pts[:, None, :] - pts[None, :, :], tab.L)]


def collision_operator(model: LatticeModel, W, k1, eta: float) -> float:
    """Boltzmann-Nordheim collision operator at grid point ``k1`` with a Lorentzian energy shell."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    tab = _tables(model, W, None)
    w, om = tab.w, tab.omega
    V = _vdiff_table(tab)

    def fn(i1, i2, i3, i4):
        dE = om[i1] + om[i2] - om[i3] - om[i4]
        dv = V[i2, i3] - V[i2, i4]
        br = (1 - w[i1]) * (1 - w[i2]) * w[i3] * w[i4] - w[i1] * w[i2] * (1 - w[i3]) * (1 - w[i4])
        return dv * dv * br * lorentzian(dE, eta)

    return float(np.real(_pair_sum(tab, k1, fn)))


def _nu_bracket(w, i2, i3, i4):
    return w[i3] * w[i4] - w[i2] * w[i4] + w[i2] * (1 - w[i3])


def collisional_frequency_mu(model: LatticeModel, k1, eta: float, lam: float | None = None) -> float:
    """Collisional frequency at equilibrium with a Lorentzian energy shell."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    tab = _tables(model, None, lam)
    w, om = tab.w, tab.omega
    V = _vdiff_table(tab)

    def fn(i1, i2, i3, i4):
        dE = om[i1] + om[i2] - om[i3] - om[i4]
        return V[i2, i3] * (V[i2, i3] - V[i2, i4]) * _nu_bracket(w, i2, i3, i4) * lorentzian(dE, eta)

    return float(np.real(_pair_sum(tab, k1, fn)))


@dataclass
class NuValue:
    k: tuple[int, ...]
    eta: float
    value: complex
    L: int
    dispersion: str
    refined: complex | None = None
    meta: dict = field(default_factory=dict)

    @property
    def re(self) -> float:
        return float(self.value.real)

    @property
    def im(self) -> float:
        return float(self.value.imag)

    def to_dict(self) -> dict:
        out = {
            "k": list(self.k),
            "eta": self.eta,
            "re": self.re,
            "im": self.im,
            "dispersion": self.dispersion,
            "refinement": {"L": self.L},
        }
        if self.refined is not None:
            out["refinement"]["L2x"] = 2 * self.L
            out["refinement"]["L2x_re"] = float(self.refined.real)
            out["refinement"]["L2x_im"] = float(self.refined.imag)
            out["refinement"]["L2x_delta"] = float(abs(self.refined - self.value) / max(abs(self.value), 1e-300))
        out.update(self.meta)
        return out


def _nu_value(model: LatticeModel, k1, eta: float, lam: float | None) -> complex:
    tab = _tables(model, None, lam)
    w, om = tab.w, tab.omega
    V = _vdiff_table(tab)

    def fn(i1, i2, i3, i4):
        dE = om[i1] + om[i2] - om[i3] - om[i4]
        return V[i2, i3] * (V[i2, i3] - V[i2, i4]) * _nu_bracket(w, i2, i3, i4) * resolvent(dE, eta)

    return _pair_sum(tab, k1, fn)


def nu(model: LatticeModel, k1, eta: float, lam: float | None = None, refine: bool = False) -> NuValue:
    """Collisional frequency ``nu = nu1 + i nu2`` with the time integral done per grid cell.

    The sign is fixed so that ``Re nu = pi * mu`` at the same ``eta``, which
    makes ``Re nu`` positive.  ``lam`` selects the dispersion inside the
    phase: ``None`` or ``0`` uses the bare band.  With ``refine`` the value
    on the grid of side ``2L`` (at ``2 k1``) is also reported.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    k = tuple(int(x) for x in _k1_index(k1, model.grid.side, model.dim))
    val = _nu_value(model, k, eta, lam)
    refined = None
    if refine:
        fine = LatticeModel(_with_L(model, 2 * model.grid.side))
        refined = _nu_value(fine, tuple(2 * x for x in k), eta, lam)
    disp = "bare" if not lam else "renormalized"
    return NuValue(k, eta, val, model.grid.side, disp, refined, {"lambda_in_phase": float(lam or 0.0)})


def _with_L(model: LatticeModel, L: int):
    from dataclasses import replace

    return replace(model.config, L=L)


def nu_re_onshell(model: LatticeModel, k1, eta: float) -> float:
    """Symmetrized positive form ``(pi/2) sum delta_eta (V23 - V24)^2 W2~ W3 W4 / W1``."""
    tab = _tables(model, None, None)
    w, om = tab.w, tab.omega
    V = _vdiff_table(tab)

    def fn(i1, i2, i3, i4):
        dE = om[i1] + om[i2] - om[i3] - om[i4]
        dv = V[i2, i3] - V[i2, i4]
        return dv * dv * (1 - w[i2]) * w[i3] * w[i4] / w[i1] * lorentzian(dE, eta)

    return float(0.5 * np.pi * np.real(_pair_sum(tab, k1, fn)))


def nu_re_symmetrized(model: LatticeModel, k1, eta: float) -> float:
    """``(pi/2) sum delta_eta (V23 - V24)^2 (W3 W4 + W2 (1 - W3 - W4))``, the ``3 <-> 4`` symmetrized ``Re nu``."""
    tab = _tables(model, None, None)
    w, om = tab.w, tab.omega
    V = _vdiff_table(tab)

    def fn(i1, i2, i3, i4):
        dE = om[i1] + om[i2] - om[i3] - om[i4]
        dv = V[i2, i3] - V[i2, i4]
        return dv * dv * (w[i3] * w[i4] + w[i2] * (1 - w[i3] - w[i4])) * lorentzian(dE, eta)

    return float(0.5 * np.pi * np.real(_pair_sum(tab, k1, fn)))


def nu_table(model: LatticeModel, eta: float, lam: float | None = None) -> np.ndarray:
    """``nu`` at every grid point, shape ``grid.shape``."""
    L, d = model.grid.side, model.dim
    out = np.empty(L ** d, dtype=complex)
    for i, p in enumerate(_points(L, d)):
        out[i] = _nu_value(model, p, eta, lam)
    return out.reshape((L,) * d)


# ---------------------------------------------------------------------------
# motive kernels

V12_SQ, V12_V13 = "V12^2", "V12*V13"


@dataclass(frozen=True)
class MotiveKernel:
    """One row of the motive contribution table.

    ``coupling`` is ``sign * V(k1+k2)^2`` or ``sign * V(k1+k2) V(k1+k3)``.
    ``phase_sign`` multiplies ``-i r Theta(k, 1)`` in the exponent.
    ``factors`` gives the parity fed to ``W(k_i, .)`` for ``k0..k3``
    (``None`` means the factor is one).
    """

    motive: str
    sigma: int
    sign: int
    coupling: str
    phase_sign: int
    factors: tuple

    @property
    def tau(self) -> tuple[int, int, int, int]:
        """Exponent signs of ``omega(k_i)`` in ``exp(-i s tau_i omega(k_i))``."""
        p = self.phase_sign
        return (-p, -p, p, p)

    def to_dict(self) -> dict:
        return {"motive": self.motive, "sigma": self.sigma, "sign": self.sign, "coupling": self.coupling,
                "phase_sign": self.phase_sign, "factors": list(self.factors)}


# loss rows: sign, coupling, parities of (k1, k2, k3); +1 entry means W~
_LOSS_ROWS = {
    1: (1, V12_SQ, (None, -1, -1)),
    2: (1, V12_V13, (-1, None, -1)),
    3: (1, V12_SQ, (-1, 1, None)),
    4: (-1, V12_V13, (None, -1, -1)),
    5: (-1, V12_SQ, (-1, None, -1)),
    6: (-1, V12_V13, (-1, 1, None)),
}
# gain rows: sign, coupling, phase direction relative to sigma
_GAIN_ROWS = {
    1: (1, V12_V13, 1),
    2: (1, V12_V13, -1),
    3: (-1, V12_SQ, 1),
    4: (-1, V12_SQ, -1),
}


def motive_kernel(motive: str, sigma: int) -> MotiveKernel:
    """Table row for ``motive`` attached to a pairing whose left leg has parity ``sigma``.

    Loss motives accept either parity.  Gain motives ``G1..G4`` need
    ``sigma = +1`` and ``G1-..G4-`` need ``sigma = -1``.
    """
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    minus = motive.endswith("-")
    base = motive.rstrip("-")
    j = int(base[1:])
    if base[0] == "L":
        sign, coup, f = _LOSS_ROWS[j]
        tau = -1 if minus else 1
        return MotiveKernel(motive, sigma, sign, coup, tau, (sigma,) + f)
    if base[0] == "G":
        if (sigma < 0) != minus:
            raise ValueError(f"{motive} cannot replace a pairing whose left leg has parity {sigma:+d}")
        sign, coup, direction = _GAIN_ROWS[j]
        return MotiveKernel(motive, sigma, sign, coup, direction * sigma, (None, -sigma, sigma, sigma))
    raise ValueError(f"unknown motive {motive!r}")


def theta_k1(model: LatticeModel, k0, k1, k2, k3, lam: float | None = None) -> np.ndarray:
    """``Theta(k, 1) = w(k3) - w(k1) + w(k2) - w(k0)``."""
    om = (lambda k: model.omega_lambda(k, lam)) if lam else model.omega
    return om(k3) - om(k1) + om(k2) - om(k0)


def kernel_value(kern: MotiveKernel, model: LatticeModel, k0, k1, k2, k3) -> np.ndarray:
    """Coupling times occupation product, phase stripped."""
    v12 = model.vhat(np.asarray(k1) + np.asarray(k2))
    if kern.coupling == V12_SQ:
        u = v12 * v12
    else:
        u = v12 * model.vhat(np.asarray(k1) + np.asarray(k3))
    out = kern.sign * u
    for s, k in zip(kern.factors, (k0, k1, k2, k3)):
        if s is not None:
            out = out * w_parity(model.w0(k), s)
    return out


def motive_sum_special(model: LatticeModel, k1, k2, k3, sigma: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the six-loss-motive identity at a pairing with left parity ``sigma``.

    Returns ``(-sum_j F_Lj, -W0^sigma V12 (V12 - V13) (W2 W3 - W1 W3 + W1 W2~))``
    with phases stripped and ``k0 = k1 + k2 + k3``.  The special pairing has
    ``sigma = -1``.
    """
    k1, k2, k3 = (np.asarray(x, dtype=float) for x in (k1, k2, k3))
    k0 = k1 + k2 + k3
    lhs = -sum(kernel_value(motive_kernel(f"L{j}", sigma), model, k0, k1, k2, k3) for j in range(1, 7))
    w = model.w0
    v12, v13 = model.vhat(k1 + k2), model.vhat(k1 + k3)
    w1, w2, w3 = w(k1), w(k2), w(k3)
    rhs = -w_parity(w(k0), sigma) * v12 * (v12 - v13) * (w2 * w3 - w1 * w3 + w1 * (1 - w2))
    return lhs, rhs


def detailed_balance(model: LatticeModel, k1, k2, k3) -> tuple[np.ndarray, np.ndarray]:
    """Gain-loss bracket at equilibrium and its factorized form with ``Theta(k, 1)``."""
    k1, k2, k3 = (np.asarray(x, dtype=float) for x in (k1, k2, k3))
    k0 = k1 + k2 + k3
    w = model.w0
    W = [w(k) for k in (k0, k1, k2, k3)]
    br = (1 - W[0]) * (1 - W[1]) * W[2] * W[3] - W[0] * W[1] * (1 - W[2]) * (1 - W[3])
    beta = 1.0 / model.config.T
    om = model.omega
    th = theta_k1(model, k0, k1, k2, k3)
    fac = W[0] * W[1] * W[2] * W[3] * np.exp(beta * (om(k0) + om(k1))) * -np.expm1(beta * th)
    return br, fac


def _motive_grid(model: LatticeModel, k0_idx):
    L, d = model.grid.side, model.dim
    pts = _points(L, d)
    a = _k1_index(k0_idx, L, d)
    k1 = pts[:, None, :]
    k2 = pts[None, :, :]
    k3 = np.mod(a[None, None, :] - k1 - k2, L)
    return a / L, k1 / L, k2 / L, k3 / L


def admissible_motives(sigma: int, special: bool = False) -> list[str]:
    """Motives attachable to a pairing with left-leg parity ``sigma``; six at the special pairing."""
    if special:
        return [f"L{j}" for j in range(1, 7)]
    loss = [f"L{j}" for j in range(1, 7)] + [f"L{j}-" for j in range(1, 7)]
    gain = [f"G{j}-" if sigma < 0 else f"G{j}" for j in range(1, 5)]
    return loss + gain


def motive_sum_generic(model: LatticeModel, k0_idx, sigma: int, eta: float) -> dict:
    """Total of the sixteen motives at an ordinary pairing after the damped time integral.

    Returns the table-driven total and the closed form
    ``-sigma sum (V12 - V13)^2 (W0~ W1~ W2 W3 - W0 W1 W2~ W3~) eta / (Theta^2 + eta^2)``
    evaluated on the same grid.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    k0, k1, k2, k3 = _motive_grid(model, k0_idx)
    th = theta_k1(model, k0, k1, k2, k3)
    n = model.grid.size
    total = 0j
    for name in admissible_motives(sigma):
        kern = motive_kernel(name, sigma)
        val = kernel_value(kern, model, k0, k1, k2, k3)
        total += -np.sum(val / (eta + 1j * kern.phase_sign * th)) / n ** 2
    w = model.w0
    W = [w(k) for k in (k0, k1, k2, k3)]
    br = (1 - W[0]) * (1 - W[1]) * W[2] * W[3] - W[0] * W[1] * (1 - W[2]) * (1 - W[3])
    dv = model.vhat(k1 + k2) - model.vhat(k1 + k3)
    closed = -sigma * float(np.sum(dv * dv * br * eta / (th * th + eta * eta)) / n ** 2)
    return {"table_total": complex(total), "closed_form": closed}


# ---------------------------------------------------------------------------
# G-factor


def _mode_table(model: LatticeModel, n) -> np.ndarray:
    """``exp(2 pi i n.k)`` on the grid."""
    k = model.grid.momenta()
    return np.exp(2j * np.pi * (k @ np.asarray(n, dtype=float)))


def g_factor(model: LatticeModel, s: float, tau, f, coupling: str = V12_SQ, sign: int = 1,
             lam: float | None = None) -> np.ndarray:
    """``G_{s,tau}[f0..f3](k0)`` on the grid by exact discrete convolution.

    ``f`` holds four grid tables.  The coupling ``V(k1+k2)`` is expanded in
    its Fourier modes and rewritten through ``k1 + k2 = k0 - k3`` (and
    ``k1 + k3 = k0 - k2``), so each mode becomes a modulation of one factor.
    """
    k = model.grid.momenta()
    om = model.omega_lambda(k, lam or 0.0)
    h = [np.exp(-1j * s * t * om) * np.asarray(fi, dtype=complex) for t, fi in zip(tau, f)]
    n = model.grid.size
    F1 = np.fft.fftn(h[1])
    modes = model.interaction.fourier_modes(model.dim)
    out = np.zeros(model.grid.shape, dtype=complex)
    for na, va in modes:
        for nb, vb in modes:
            if coupling == V12_SQ:
                # V(k0-k3) V(k0-k3)
                nn = np.add(na, nb)
                m3 = _mode_table(model, -nn)
                conv = np.fft.ifftn(F1 * np.fft.fftn(h[2]) * np.fft.fftn(h[3] * m3))
                out += va * vb * _mode_table(model, nn) * conv
            elif coupling == V12_V13:
                # V(k0-k3) V(k0-k2)
                m3 = _mode_table(model, -np.asarray(na))
                m2 = _mode_table(model, -np.asarray(nb))
                conv = np.fft.ifftn(F1 * np.fft.fftn(h[2] * m2) * np.fft.fftn(h[3] * m3))
                out += va * vb * _mode_table(model, np.add(na, nb)) * conv
            else:
                raise ValueError(f"unknown coupling {coupling!r}")
    return sign * h[0] * out / n ** 2


def g_factor_direct(model: LatticeModel, s: float, tau, f, coupling: str = V12_SQ, sign: int = 1,
                    lam: float | None = None) -> np.ndarray:
    """Quadratic-cost reference for :func:`g_factor`."""
    L, d = model.grid.side, model.dim
    pts = _points(L, d)
    k = model.grid.momenta().reshape(-1, d)
    om = model.omega_lambda(k, lam or 0.0)
    flat = [np.asarray(fi, dtype=complex).ravel() for fi in f]
    ph = [np.exp(-1j * s * t * om) for t in tau]
    out = np.empty(len(pts), dtype=complex)
    i1 = np.arange(len(pts))[:, None]
    i2 = np.arange(len(pts))[None, :]
    for i0, p0 in enumerate(pts):
        i3 = _lin(p0[None, None, :] - pts[:, None, :] - pts[None, :, :], L)
        v12 = model.vhat(k[i1] + k[i2])
        u = v12 * v12 if coupling == V12_SQ else v12 * model.vhat(k[i1] + k[i3])
        val = u * ph[1][i1] * flat[1][i1] * ph[2][i2] * flat[2][i2] * ph[3][i3] * flat[3][i3]
        out[i0] = sign * ph[0][i0] * flat[0][i0] * np.sum(val) / len(pts) ** 2
    return out.reshape((L,) * d)


def kernel_tables(kern: MotiveKernel, model: LatticeModel, f0=None) -> list[np.ndarray]:
    """Grid tables ``f0..f3`` for one motive; ``f0`` overrides the top factor."""
    w = model.table(model.w0)
    out = []
    for i, s in enumerate(kern.factors):
        if i == 0 and f0 is not None:
            out.append(np.asarray(f0, dtype=complex))
        elif s is None:
            out.append(np.ones_like(w))
        else:
            out.append(w_parity(w, s))
    return out


# ---------------------------------------------------------------------------
# leading series and amplitudes


@dataclass
class SeriesValue:
    partial_sums: list
    closed_form: complex
    remainder_bound: float

    def to_dict(self) -> dict:
        return {
            "partial_sums": [[float(np.real(z)), float(np.imag(z))] for z in self.partial_sums],
            "closed_form": [float(np.real(self.closed_form)), float(np.imag(self.closed_form))],
            "remainder_bound": self.remainder_bound,
        }


def leading_series(w0: float, nu_value: complex, t: float, M: int) -> SeriesValue:
    """Partial sums of ``W0 sum_m nu^m (-t)^m / m!`` and ``W0 exp(-nu1 |t| - i t nu2)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    sums, acc, term = [], 0j, complex(w0)
    for m in range(M + 1):
        if m:
            term *= -nu_value * t / m
        acc += term
        sums.append(acc)
    closed = w0 * np.exp(-nu_value.real * abs(t) - 1j * t * nu_value.imag)
    rem = abs(w0) * abs(nu_value * t) ** (M + 1) / math.factorial(M + 1)
    return SeriesValue(sums, complex(closed), float(rem))


def bump(model: LatticeModel, width: float = 0.2, center=None) -> np.ndarray:
    """Smooth compactly supported bump on the grid, used as a test function."""
    k = model.grid.momenta()
    c = np.zeros(model.dim) if center is None else np.asarray(center, dtype=float)
    x = np.mod(k - c + 0.5, 1.0) - 0.5
    r2 = np.sum(x * x, axis=-1) / (width * width)
    out = np.zeros(r2.shape)
    inside = r2 < 1
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def series_target(model: LatticeModel, fhat: np.ndarray, ghat: np.ndarray, t: float, eta: float, m: int = 1,
                  nus: np.ndarray | None = None) -> complex:
    """``int conj(g) f W0 nu^m (-t)^m / m!`` on the grid."""
    nus = nu_table(model, eta) if nus is None else nus
    w0 = model.table(model.w0)
    return complex(model.grid.integrate(np.conj(ghat) * fhat * w0 * nus ** m) * (-t) ** m / math.factorial(m))


@dataclass
class AmplitudeValue:
    value: complex
    motives: list
    lam: float
    t: float
    eta: float
    s_max: float
    tail: float
    nodes: int

    def to_dict(self) -> dict:
        return {"re": float(self.value.real), "im": float(self.value.imag), "motives": self.motives,
                "lambda": self.lam, "t": self.t, "eta": self.eta, "s_max": self.s_max,
                "tail_bound": self.tail, "nodes": self.nodes}


def _motive_chain(spec):
    """Leading motives of ``spec`` ordered from the root down, with the host slot of each lower motive.

    The momenta ``k1, k2, k3`` of a loss motive are the children of its upper
    vertex in left-to-right order (reversed for the mirrored motives), and a
    lower motive sits in slot ``i`` when its top edge carries ``+-k_i``.
    Slot ``0`` is the pairing that already carried the upper motive.
    """
    from .classify import LEADING, classify
    from .graphs import build_graph, resolve_momenta

    g = resolve_momenta(build_graph(spec))
    c = classify(g)
    if c.tag != LEADING:
        raise ValueError(f"graph is {c.tag}, not leading")
    chain = list(reversed(c.motives))
    slots = [None]
    for up, low in zip(chain, chain[1:]):
        if not up.name.startswith("L"):
            raise NotImplementedError("nesting below a gain motive is not implemented")
        kids = [int(e) for e in g.children[up.upper - 1]]
        if up.name.endswith("-"):
            kids = kids[::-1]
        top = int(g.top_edge[up.upper - 1])
        site = int(g.top_edge[low.upper - 1]) if low.name.startswith("L") else low.site[0]
        cand = [top] + kids
        hit = [i for i, e in enumerate(cand)
               if not np.any(g.D[site] - g.D[e]) or not np.any(g.D[site] + g.D[e])]
        if len(hit) != 1:
            raise AssertionError("lower motive does not hang on a unique momentum of the upper one")
        slots.append(hit[0])
    return chain, slots


def _gauss_simplex(nodes: int, smax: float):
    """Nodes and weights for ``0 <= s1 + s2 <= smax`` (collapsed square)."""
    x, wx = np.polynomial.legendre.leggauss(nodes)
    u, wu = 0.5 * (x + 1), 0.5 * wx
    pts, wts = [], []
    for a, wa in zip(u, wu):
        tot = smax * a
        for b, wb in zip(u, wu):
            pts.append((tot * b, tot * (1 - b)))
            wts.append(wa * wb * smax * tot)
    return np.array(pts), np.array(wts)


def amplitude_main_pair(model: LatticeModel, spec, t: float, lam: float, eta: float, fhat: np.ndarray,
                        ghat: np.ndarray | None = None, nodes: int = 24) -> AmplitudeValue:
    """Main pair amplitude of a leading graph with ``m <= 2`` motives.

    Each motive time carries the damping ``exp(-eta s)`` so that the finite
    grid has a limit as ``lam -> 0``.  For one motive the time integral
    ``int_0^{t/lam^2} ds exp(-(eta + i x) s) (t - lam^2 s)`` is done in closed
    form per grid cell.  For two motives the nested G-factor is integrated
    with a Gauss-Legendre rule on the simplex ``s1 + s2 <= s_max`` where
    ``s_max = min(t/lam^2, 40/eta)``; the discarded part is bounded by
    ``tail_bound``.  Nesting needs an even potential (all phases zero).
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    ghat = fhat if ghat is None else ghat
    weight = np.conj(ghat) * fhat
    w0 = model.table(model.w0)
    if spec.N == 0:
        return AmplitudeValue(complex(model.grid.integrate(weight * w0)), [], lam, t, eta, 0.0, 0.0, 0)
    chain, slots = _motive_chain(spec)
    m = len(chain)
    if m > 2:
        raise CapExceeded(f"m={m} exceeds the amplitude cap 2")
    S = t / lam ** 2 if lam > 0 else math.inf
    names = [c.name for c in chain]
    if m == 1:
        val = _one_motive(model, motive_kernel(names[0], -1), weight, t, lam, eta, S)
        return AmplitudeValue(-val, names, lam, t, eta, S, 0.0, 0)
    if np.any(model.interaction.phases(model.dim)):
        raise ValueError("nested amplitudes need an even potential")
    outer = motive_kernel(names[0], -1)
    i = slots[1]
    inner = motive_kernel(names[1], outer.factors[i])
    w_outer = kernel_tables(outer, model)
    w_inner = kernel_tables(inner, model)
    smax = min(S, 40.0 / eta)
    pts, wts = _gauss_simplex(nodes, smax)
    total = 0j
    for (s1, s2), wt in zip(pts, wts):
        fs = list(w_outer)
        fs[i] = g_factor(model, s2, inner.tau, w_inner, inner.coupling, inner.sign, lam)
        Go = g_factor(model, s1, outer.tau, fs, outer.coupling, outer.sign, lam)
        tw = 0.5 * (t - lam ** 2 * (s1 + s2)) ** 2 * np.exp(-eta * (s1 + s2))
        total += wt * tw * model.grid.integrate(weight * Go)
    tail = 0.0
    if smax < S:
        vmax = model.interaction.sup_norm(model.dim)
        tail = float(vmax ** 4 * 0.5 * t * t * np.exp(-eta * smax) * (smax / eta + 1 / eta ** 2)
                     * model.grid.integrate(np.abs(weight)))
    return AmplitudeValue(complex(total), names, lam, t, eta, S, tail, nodes)


def _one_motive(model: LatticeModel, kern: MotiveKernel, weight, t, lam, eta, S) -> complex:
    L, d = model.grid.side, model.dim
    pts = _points(L, d)
    n = len(pts)
    total = 0j
    wf = weight.ravel()
    for i0, p0 in enumerate(pts):
        if wf[i0] == 0:
            continue
        k0, k1, k2, k3 = _motive_grid(model, p0)
        th = theta_k1(model, k0, k1, k2, k3, lam)
        a = eta + 1j * kern.phase_sign * th
        if math.isinf(S):
            time = t / a
        else:
            e = np.exp(-a * S)
            time = t * (1 - e) / a - lam ** 2 * (1 - e * (1 + a * S)) / (a * a)
        val = kernel_value(kern, model, k0, k1, k2, k3)
        total += wf[i0] * np.sum(val * time) / n ** 2
    return total / n


def richardson(lams, values, order: int = 2) -> complex:
    """Value at ``lam = 0`` of the polynomial of degree ``order`` through the points."""
    lams = np.asarray(lams, dtype=float)
    V = np.vander(lams, order + 1, increasing=True)
    vals = np.asarray(values, dtype=complex)
    coef = np.linalg.lstsq(V.astype(complex), vals, rcond=None)[0]
    return complex(coef[0])
