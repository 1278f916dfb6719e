"""
Spectral Core Module for the Half-Space Boussinesq Simulator

Discretizes the half-space as a periodic horizontal box on top of a bounded
vertical slab and provides the mixed transform calculus: FFT in (x1, x2)
combined with a type-II cosine or sine transform in x3 on the half-sample
grid x3_j = (j + 1/2) L3 / N3.

Coefficients are basis amplitudes:

    f(x) = sum c[k1, k2, k3] exp(i xi_h . x_h) cos(xi3 x3)     (Cosine)
    f(x) = sum c[k1, k2, k3] exp(i xi_h . x_h) sin(xi3 x3)     (Sine)

with xi3 = k3 pi / L3, k3 in {0..N3-1} for Cosine and {1..N3} for Sine.
Norms follow the discrete Parseval identity with constant 1.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Iterator, Tuple, Union

import numpy as np
import scipy.fft as sfft

from errors import GridError, NegativeOrderError, SpectralError

logger = logging.getLogger(__name__)

# Relative tolerance for the Hermitian-symmetry precondition of inverse_mixed
HERMITIAN_TOL = 1e-10

# Relative level above which xi_h = 0 content counts as present
MEAN_CONTENT_TOL = 1e-14


class Parity(str, Enum):
    """Vertical basis of a scalar: cosine (Neumann) or sine (Dirichlet)"""

    COSINE = "cosine"
    SINE = "sine"

    @property
    def flipped(self) -> "Parity":
        return Parity.SINE if self is Parity.COSINE else Parity.COSINE


# Parities of (u1, u2, u3, theta)
COMPONENT_PARITIES = (Parity.COSINE, Parity.COSINE, Parity.SINE, Parity.SINE)
COMPONENT_NAMES = ("u1", "u2", "u3", "theta")


def _is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (int(n) & (int(n) - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Truncated computational domain and its wavenumber tables"""

    L_h: float
    N_h: int
    L3: float
    N3: int
    dealias_fraction: float = 2.0 / 3.0

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.N_h, self.N_h, self.N3)

    @property
    def volume(self) -> float:
        return self.L_h ** 2 * self.L3

    @property
    def dx_min(self) -> float:
        return min(self.L_h / self.N_h, self.L3 / self.N3)

    # -- horizontal -----------------------------------------------------

    @cached_property
    def k_h(self) -> np.ndarray:
        """Integer horizontal wavenumbers in FFT order, -N_h/2 .. N_h/2-1"""
        return np.rint(np.fft.fftfreq(self.N_h, d=1.0 / self.N_h)).astype(int)

    @cached_property
    def xi_h(self) -> np.ndarray:
        return 2.0 * np.pi * self.k_h / self.L_h

    @property
    def xi1(self) -> np.ndarray:
        return self.xi_h[:, None, None]

    @property
    def xi2(self) -> np.ndarray:
        return self.xi_h[None, :, None]

    @cached_property
    def xi_h_odd(self) -> np.ndarray:
        """Horizontal wavenumbers with the unpaired Nyquist entry zeroed"""
        xi = self.xi_h.copy()
        xi[self.k_h == -self.N_h // 2] = 0.0
        return xi

    @cached_property
    def h2(self) -> np.ndarray:
        """|xi_h|^2, shape (N_h, N_h, 1)"""
        return self.xi1 ** 2 + self.xi2 ** 2

    @cached_property
    def horizontal_mean(self) -> np.ndarray:
        return (self.k_h[:, None, None] == 0) & (self.k_h[None, :, None] == 0)

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        nyq = -self.N_h // 2
        return (self.k_h[:, None, None] != nyq) & (self.k_h[None, :, None] != nyq)

    # -- vertical -------------------------------------------------------

    def k3(self, parity: Parity) -> np.ndarray:
        if Parity(parity) is Parity.COSINE:
            return np.arange(self.N3)
        return np.arange(1, self.N3 + 1)

    def xi3(self, parity: Parity) -> np.ndarray:
        """Vertical wavenumbers of a parity class, shape (1, 1, N3)"""
        return (self.k3(parity) * np.pi / self.L3)[None, None, :]

    @cached_property
    def xi3_aligned(self) -> np.ndarray:
        """Common vertical wavenumbers k3 = 0..N3 used for mode-wise coupling"""
        return (np.arange(self.N3 + 1) * np.pi / self.L3)[None, None, :]

    @cached_property
    def k2_aligned(self) -> np.ndarray:
        """|xi|^2 on the aligned layout"""
        return self.h2 + self.xi3_aligned ** 2

    def parseval_weights(self, parity: Parity) -> np.ndarray:
        """Quadrature weight of each vertical mode in the discrete Parseval identity"""
        w = np.full(self.N3, 0.5)
        if Parity(parity) is Parity.COSINE:
            w[0] = 1.0
        else:
            w[-1] = 1.0
        return w[None, None, :]

    # -- physical nodes -------------------------------------------------

    @cached_property
    def x_h(self) -> np.ndarray:
        return np.arange(self.N_h) * self.L_h / self.N_h

    @cached_property
    def x3(self) -> np.ndarray:
        """Half-sample vertical nodes; no node on x3 = 0"""
        return (np.arange(self.N3) + 0.5) * self.L3 / self.N3

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_h, self.x_h, self.x3, indexing="ij")

    # -- masks ----------------------------------------------------------

    def dealias_mask(self, parity: Parity) -> np.ndarray:
        cut_h = self.dealias_fraction * self.N_h / 2 + 1e-12
        cut_3 = self.dealias_fraction * self.N3 + 1e-12
        keep_h = np.abs(self.k_h) <= cut_h
        keep_3 = self.k3(parity) <= cut_3
        return keep_h[:, None, None] & keep_h[None, :, None] & keep_3[None, None, :]

    def represented_mask(self, parity: Parity) -> np.ndarray:
        """Modes a MixedSpectralState may populate"""
        mask = self.nyquist_free & ~self.horizontal_mean
        mask = np.broadcast_to(mask, self.shape).copy()
        if Parity(parity) is Parity.SINE:
            mask[..., -1] = False
        return mask


def build_grid(L_h: float, N_h: int, L3: float, N3: int,
               dealias_fraction: float = 2.0 / 3.0) -> GridSpec:
    """
    Build and validate a GridSpec

    Args:
        L_h: horizontal box side length
        N_h: horizontal modes per axis (power of two, >= 8)
        L3: vertical slab height
        N3: vertical modes (power of two, >= 8)
        dealias_fraction: retained fraction of the Nyquist band, in (0, 1]

    Returns:
        GridSpec with populated wavenumber tables
    """
    for name, n in (("N_h", N_h), ("N3", N3)):
        if not _is_power_of_two(n) or n < 8:
            raise GridError(f"{name}={n} must be a power of two >= 8")
    for name, length in (("L_h", L_h), ("L3", L3)):
        if not np.isfinite(length) or length <= 0:
            raise GridError(f"{name}={length} must be positive")
    fraction = float(dealias_fraction)
    if not 0.0 < fraction <= 1.0:
        raise GridError(f"dealias_fraction={dealias_fraction} must lie in (0, 1]")

    grid = GridSpec(float(L_h), int(N_h), float(L3), int(N3), fraction)
    logger.debug(f"Grid built: {grid.shape}, L_h={grid.L_h:.4g}, L3={grid.L3:.4g}")
    return grid


@dataclass
class SpectralScalar:
    """Mixed-transform coefficients of one real scalar field"""

    grid: GridSpec
    parity: Parity
    coeffs: np.ndarray

    def __post_init__(self):
        self.parity = Parity(self.parity)
        if self.coeffs.shape != self.grid.shape:
            raise SpectralError(f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")

    @classmethod
    def zeros(cls, grid: GridSpec, parity: Parity) -> "SpectralScalar":
        return cls(grid, parity, np.zeros(grid.shape, dtype=complex))

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralScalar":
        return replace(self, coeffs=coeffs)


def hermitian_defect(coeffs: np.ndarray) -> float:
    """max |c(k) - conj(c(-k))| over the horizontal wavenumbers"""
    mirrored = np.roll(coeffs[::-1, ::-1, :], 1, axis=(0, 1))
    return float(np.max(np.abs(coeffs - np.conj(mirrored)))) if coeffs.size else 0.0


def forward_mixed(field: np.ndarray, parity: Parity, grid: GridSpec) -> SpectralScalar:
    """
    Transform a real collocation field into mixed spectral coefficients

    Args:
        field: real array of shape grid.shape
        parity: vertical basis to expand in
        grid: computational grid

    Returns:
        SpectralScalar whose inverse_mixed reproduces field
    """
    field = np.asarray(field)
    if field.shape != grid.shape:
        raise SpectralError(f"field shape {field.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(field):
        raise SpectralError("forward_mixed expects a real field")

    parity = Parity(parity)
    if parity is Parity.COSINE:
        vertical = sfft.dct(field, type=2, axis=2) / grid.N3
        vertical[..., 0] *= 0.5
    else:
        vertical = sfft.dst(field, type=2, axis=2) / grid.N3
        vertical[..., -1] *= 0.5
    coeffs = sfft.fft2(vertical, axes=(0, 1)) / grid.N_h ** 2
    return SpectralScalar(grid, parity, coeffs)


def _horizontal_inverse(s: SpectralScalar) -> np.ndarray:
    return sfft.ifft2(s.coeffs, axes=(0, 1)) * s.grid.N_h ** 2


def inverse_mixed(s: SpectralScalar) -> np.ndarray:
    """Exact inverse of forward_mixed; rejects non-Hermitian coefficients"""
    scale = float(np.max(np.abs(s.coeffs))) if s.coeffs.size else 0.0
    defect = hermitian_defect(s.coeffs)
    if defect > HERMITIAN_TOL * max(scale, np.finfo(float).tiny):
        raise SpectralError(f"Hermitian symmetry violated (defect {defect:.3e}, scale {scale:.3e})")

    vertical = _horizontal_inverse(s).real * s.grid.N3
    if s.parity is Parity.COSINE:
        vertical[..., 0] *= 2.0
        return sfft.idct(vertical, type=2, axis=2)
    vertical[..., -1] *= 2.0
    return sfft.idst(vertical, type=2, axis=2)


def d_horizontal(s: SpectralScalar, axis: int) -> SpectralScalar:
    """Multiply by i xi_axis; the unpaired Nyquist row has zero derivative"""
    if axis == 1:
        xi = s.grid.xi_h_odd[:, None, None]
    elif axis == 2:
        xi = s.grid.xi_h_odd[None, :, None]
    else:
        raise SpectralError(f"horizontal axis must be 1 or 2, got {axis}")
    return s.with_coeffs(1j * xi * s.coeffs)


def d_vertical(s: SpectralScalar) -> SpectralScalar:
    """
    Vertical derivative with parity exchange

    Cosine a_k -> Sine -xi3 a_k; Sine b_k -> Cosine +xi3 b_k. The top sine
    mode k3 = N3 has no cosine partner and is dropped.
    """
    grid = s.grid
    out = np.zeros_like(s.coeffs)
    if s.parity is Parity.COSINE:
        xi3 = grid.xi3(Parity.COSINE)
        out[..., :-1] = -xi3[..., 1:] * s.coeffs[..., 1:]
        return SpectralScalar(grid, Parity.SINE, out)
    xi3 = grid.xi3(Parity.SINE)
    out[..., 1:] = xi3[..., :-1] * s.coeffs[..., :-1]
    return SpectralScalar(grid, Parity.COSINE, out)


def horizontal_power_multiplier(grid: GridSpec, lam: float) -> np.ndarray:
    """|xi_h|^lam with xi_h = 0 mapped to 0 (lam != 0)"""
    h = np.sqrt(grid.h2)
    if lam == 0:
        return np.ones_like(h)
    safe = np.where(h > 0, h, 1.0)
    return np.where(h > 0, safe ** lam, 0.0)


def has_mean_content(s: SpectralScalar) -> bool:
    scale = float(np.max(np.abs(s.coeffs))) if s.coeffs.size else 0.0
    if scale == 0.0:
        return False
    mean = s.coeffs[0, 0, :]
    return bool(np.max(np.abs(mean)) > MEAN_CONTENT_TOL * scale)


def lambda_h_pow(s: SpectralScalar, lam: float) -> SpectralScalar:
    """Apply the horizontal fractional multiplier |xi_h|^lam"""
    if lam == 0:
        return s.with_coeffs(s.coeffs.copy())
    if lam < 0 and has_mean_content(s):
        raise NegativeOrderError(f"|xi_h|^{lam} undefined on data with xi_h = 0 content")
    return s.with_coeffs(horizontal_power_multiplier(s.grid, lam) * s.coeffs)


def dealias(s: SpectralScalar) -> SpectralScalar:
    return s.with_coeffs(s.coeffs * s.grid.dealias_mask(s.parity))


def weighted_energy(s: SpectralScalar, multiplier=1.0) -> float:
    """volume * sum(weight * multiplier * |c|^2), the squared weighted L2 norm"""
    w = s.grid.parseval_weights(s.parity)
    return s.grid.volume * float(np.sum(w * multiplier * np.abs(s.coeffs) ** 2))


@dataclass
class MixedSpectralState:
    """The 4-vector FU = (F_c u1, F_c u2, F_s u3, F_s theta)"""

    u1: SpectralScalar
    u2: SpectralScalar
    u3: SpectralScalar
    theta: SpectralScalar
    nu: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        for name, comp, parity in zip(COMPONENT_NAMES, self.components, COMPONENT_PARITIES):
            if comp.parity is not parity:
                raise SpectralError(f"{name} must have {parity.value} parity, got {comp.parity.value}")
            if comp.grid != self.u1.grid:
                raise SpectralError(f"{name} lives on a different grid")

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid

    @property
    def components(self) -> Tuple[SpectralScalar, ...]:
        return (self.u1, self.u2, self.u3, self.theta)

    def __iter__(self) -> Iterator[SpectralScalar]:
        return iter(self.components)

    def stack(self) -> np.ndarray:
        """Coefficients as one array of shape (4, N_h, N_h, N3)"""
        return np.stack([c.coeffs for c in self.components])

    @classmethod
    def from_stack(cls, grid: GridSpec, stack: np.ndarray, nu: float = 1.0,
                   kappa: float = 1.0) -> "MixedSpectralState":
        comps = [SpectralScalar(grid, p, np.asarray(stack[i], dtype=complex))
                 for i, p in enumerate(COMPONENT_PARITIES)]
        return cls(*comps, nu=nu, kappa=kappa)

    @classmethod
    def zeros(cls, grid: GridSpec, nu: float = 1.0, kappa: float = 1.0) -> "MixedSpectralState":
        return cls.from_stack(grid, np.zeros((4,) + grid.shape, dtype=complex), nu, kappa)

    def with_stack(self, stack: np.ndarray) -> "MixedSpectralState":
        return MixedSpectralState.from_stack(self.grid, stack, self.nu, self.kappa)

    def __add__(self, other: "MixedSpectralState") -> "MixedSpectralState":
        return self.with_stack(self.stack() + other.stack())

    def __sub__(self, other: "MixedSpectralState") -> "MixedSpectralState":
        return self.with_stack(self.stack() - other.stack())

    def __mul__(self, factor: float) -> "MixedSpectralState":
        return self.with_stack(factor * self.stack())

    __rmul__ = __mul__


@dataclass
class PhysicalState:
    """Real collocation fields (u1, u2, u3, theta)"""

    grid: GridSpec
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    theta: np.ndarray

    @property
    def fields(self) -> Tuple[np.ndarray, ...]:
        return (self.u1, self.u2, self.u3, self.theta)


def to_physical(state: MixedSpectralState) -> PhysicalState:
    return PhysicalState(state.grid, *[inverse_mixed(c) for c in state.components])


def from_physical(phys: PhysicalState, nu: float = 1.0, kappa: float = 1.0) -> MixedSpectralState:
    comps = [forward_mixed(f, p, phys.grid) for f, p in zip(phys.fields, COMPONENT_PARITIES)]
    return MixedSpectralState(*comps, nu=nu, kappa=kappa)


# -- aligned layout --------------------------------------------------------
# Mode-wise couplings pair F_c and F_s coefficients at the same xi3, so they
# run on a common vertical index k3 = 0..N3 (sine k3 = 0 and cosine k3 = N3
# are structural zeros).

def to_aligned(coeffs: np.ndarray, parity: Parity) -> np.ndarray:
    pad = ((0, 0),) * (coeffs.ndim - 1)
    if Parity(parity) is Parity.COSINE:
        return np.pad(coeffs, pad + ((0, 1),))
    return np.pad(coeffs, pad + ((1, 0),))


def from_aligned(aligned: np.ndarray, parity: Parity) -> np.ndarray:
    if Parity(parity) is Parity.COSINE:
        return aligned[..., :-1]
    return aligned[..., 1:]


def align_stack(stack: np.ndarray) -> np.ndarray:
    return np.stack([to_aligned(stack[i], p) for i, p in enumerate(COMPONENT_PARITIES)])


def unalign_stack(aligned: np.ndarray) -> np.ndarray:
    return np.stack([from_aligned(aligned[i], p) for i, p in enumerate(COMPONENT_PARITIES)])


def divergence_symbol(grid: GridSpec, w1: np.ndarray, w2: np.ndarray, w3: np.ndarray) -> np.ndarray:
    """Divergence symbol i xi1 w1 + i xi2 w2 + xi3 w3 on aligned arrays"""
    return 1j * grid.xi1 * w1 + 1j * grid.xi2 * w2 + grid.xi3_aligned * w3


def divergence_residual(state: MixedSpectralState) -> float:
    """max |D(u)| relative to max |xi| |u|; zero for the zero state"""
    grid = state.grid
    a = align_stack(state.stack())
    div = divergence_symbol(grid, a[0], a[1], a[2])
    magnitude = np.sqrt(grid.k2_aligned) * np.sqrt(np.abs(a[0]) ** 2 + np.abs(a[1]) ** 2 + np.abs(a[2]) ** 2)
    scale = float(np.max(magnitude))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(div))) / scale


def project_represented(state: MixedSpectralState) -> MixedSpectralState:
    """Zero xi_h = 0 content, the horizontal Nyquist row and the top sine mode"""
    grid = state.grid
    comps = [c.with_coeffs(c.coeffs * grid.represented_mask(c.parity)) for c in state.components]
    return MixedSpectralState(*comps, nu=state.nu, kappa=state.kappa)


def dealias_state(state: MixedSpectralState) -> MixedSpectralState:
    comps = [dealias(c) for c in state.components]
    return MixedSpectralState(*comps, nu=state.nu, kappa=state.kappa)


# -- norms ------------------------------------------------------------------

Normable = Union[SpectralScalar, MixedSpectralState]


def _scalars(obj: Normable) -> Tuple[SpectralScalar, ...]:
    if isinstance(obj, MixedSpectralState):
        return obj.components
    return (obj,)


def norm_l2(obj: Normable) -> float:
    """Discrete L2 norm over the truncated domain (Parseval constant 1)"""
    return float(np.sqrt(sum(weighted_energy(s) for s in _scalars(obj))))


def sobolev_multiplier(grid: GridSpec, parity: Parity, s: int, flavor: str = "full") -> np.ndarray:
    """sum over multi-indices |alpha| <= s of xi^(2 alpha), restricted by flavor"""
    x1 = grid.xi1 ** 2
    x2 = grid.xi2 ** 2
    x3 = grid.xi3(parity) ** 2
    total = np.zeros(grid.shape)
    for a1 in range(s + 1):
        for a2 in range(s + 1 - a1):
            for a3 in range(s + 1 - a1 - a2):
                if flavor == "horizontal" and a3 > 0:
                    continue
                if flavor == "vertical" and (a1 > 0 or a2 > 0):
                    continue
                total = total + x1 ** a1 * x2 ** a2 * x3 ** a3
    return total


def sobolev_norm(obj: Normable, s: int, flavor: str = "full") -> float:
    """
    H^s norm via spectral multipliers

    Args:
        obj: scalar or full state
        s: order, 0..3
        flavor: 'full', 'horizontal' (grad_h derivatives only) or 'vertical' (d3 only)
    """
    if not isinstance(s, (int, np.integer)) or not 0 <= s <= 3:
        raise SpectralError(f"Sobolev order must be an integer in 0..3, got {s}")
    if flavor not in ("full", "horizontal", "vertical"):
        raise SpectralError(f"unknown Sobolev flavor '{flavor}'")
    total = 0.0
    for scalar in _scalars(obj):
        total += weighted_energy(scalar, sobolev_multiplier(scalar.grid, scalar.parity, s, flavor))
    return float(np.sqrt(total))
