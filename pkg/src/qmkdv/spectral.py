"""Spectral fields on the rescaled torus [0, 2*pi*lambda].

Conventions (fixed once, everything downstream depends on them):

* A field with physical samples u(x_j), x_j = j * 2*pi*lam / M, is stored
  through coefficients

      coeff(m) = (1 / (2*pi*sqrt(lam))) * integral  u(x) exp(-i*m*x/lam) dx

  on the integer mode index m, |m| <= N_max = M/2 - 1.  The physical
  frequency of index m is n = m / lam.

* The counting measure on the frequency lattice is dn = (1/lam) * sum, so
  Plancherel reads  sum_m |coeff(m)|^2 dn = (2*pi*lam)^(-1) * integral u^2 dx.

* With this scaling, pointwise products turn into constant-free lattice
  convolutions at lam = 1 (one factor 1/lam per extra factor in general),
  which is what keeps the renormalisation constants of the flow free of
  stray 2*pi factors.

Lebesgue norms (`lebesgue4_norm`, `physical_integral`) are plain integrals
over the torus; the Sobolev norm uses the normalised counting measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cutoffs import DEFAULT_CUTOFFS

REALITY_TOL = 1e-12


@dataclass(frozen=True)
class FrequencyGrid:
    """Sample count M (even, >= 4) and torus scale lam >= 1."""

    num_modes: int
    period_scale: float = 1.0

    def __post_init__(self):
        if self.num_modes < 4 or self.num_modes % 2 != 0:
            raise ValueError(f"need even M >= 4, got M={self.num_modes}")
        if self.period_scale <= 0:
            raise ValueError(f"period scale must be positive, got {self.period_scale}")

    @property
    def max_mode(self) -> int:
        return self.num_modes // 2 - 1

    @property
    def circumference(self) -> float:
        return 2.0 * np.pi * self.period_scale

    def mode_indices(self) -> np.ndarray:
        """Integer mode indices -N..N (length 2N+1)."""
        n = self.max_mode
        return np.arange(-n, n + 1)

    def frequencies(self) -> np.ndarray:
        """Physical frequencies m / lam."""
        return self.mode_indices() / self.period_scale

    def sample_points(self, oversample: int = 1) -> np.ndarray:
        m = oversample * self.num_modes
        return np.arange(m) * (self.circumference / m)

    def compatible(self, other: "FrequencyGrid") -> bool:
        return (
            self.num_modes == other.num_modes
            and self.period_scale == other.period_scale
        )


@dataclass(frozen=True)
class SpectralField:
    """Truncated coefficient vector of a (usually real) periodic function."""

    grid: FrequencyGrid
    coeffs: np.ndarray = field(repr=False)
    real: bool = True

    def __post_init__(self):
        expected = 2 * self.grid.max_mode + 1
        if self.coeffs.shape != (expected,):
            raise ValueError(
                f"coefficient array must have length {expected}, got {self.coeffs.shape}"
            )

    def mode(self, m: int) -> complex:
        n = self.grid.max_mode
        if abs(m) > n:
            return 0.0 + 0.0j
        return complex(self.coeffs[m + n])

    def with_coeffs(self, coeffs: np.ndarray, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, np.asarray(coeffs, dtype=complex),
                             self.real if real is None else real)

    def hermitian_defect(self) -> float:
        """Max |coeff(-m) - conj(coeff(m))|; zero for real fields."""
        return float(np.max(np.abs(self.coeffs[::-1] - np.conj(self.coeffs))))

    def reflected(self) -> "SpectralField":
        """The field x -> u(-x)."""
        return self.with_coeffs(self.coeffs[::-1].copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.real and other.real)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar,
                             self.real and float(np.imag(scalar)) == 0.0)

    __rmul__ = __mul__


def _check_same_grid(a: SpectralField, b: SpectralField):
    if not a.grid.compatible(b.grid):
        raise ValueError("fields live on incompatible grids")


def zero_field(grid: FrequencyGrid) -> SpectralField:
    return SpectralField(grid, np.zeros(2 * grid.max_mode + 1, dtype=complex))


def analyze(samples: np.ndarray, grid: FrequencyGrid) -> SpectralField:
    """Physical samples -> truncated coefficient vector."""
    samples = np.asarray(samples)
    m = len(samples)
    if m != grid.num_modes and m % grid.num_modes != 0:
        raise ValueError(
            f"sample count {m} is neither M={grid.num_modes} nor a multiple of it"
        )
    spec = np.fft.fft(samples) * (np.sqrt(grid.period_scale) / m)
    n = grid.max_mode
    coeffs = np.concatenate([spec[m - n:], spec[: n + 1]]).astype(complex)  # -N..N
    if np.isrealobj(samples):
        real = True
    else:
        defect = np.max(np.abs(coeffs[::-1] - np.conj(coeffs)))
        real = bool(defect <= REALITY_TOL * (1.0 + np.max(np.abs(coeffs))))
    return SpectralField(grid, coeffs, real=real)


def synthesize(field: SpectralField, oversample_factor: int = 1,
               allow_complex: bool = False) -> np.ndarray:
    """Coefficients -> physical samples on an (oversample_factor*M)-point grid."""
    if oversample_factor < 1:
        raise ValueError("oversample factor must be a positive integer")
    if not field.real and not allow_complex:
        raise ValueError("field is not real-flagged; pass allow_complex=True")
    grid = field.grid
    m = oversample_factor * grid.num_modes
    n = grid.max_mode
    spec = np.zeros(m, dtype=complex)
    spec[: n + 1] = field.coeffs[n:]
    spec[m - n:] = field.coeffs[:n]
    samples = np.fft.ifft(spec) * (m / np.sqrt(grid.period_scale))
    if field.real and not allow_complex:
        amp = np.max(np.abs(samples)) or 1.0
        resid = np.max(np.abs(samples.imag))
        if resid > REALITY_TOL * amp:
            raise ValueError(
                f"imaginary residue {resid:.3e} exceeds tolerance for a real field"
            )
        return samples.real
    return samples


def field_from_function(fn, grid: FrequencyGrid) -> SpectralField:
    return analyze(fn(grid.sample_points()), grid)


def cosine_field(grid: FrequencyGrid, amplitude: float = 1.0,
                 wavenumber: int = 1) -> SpectralField:
    """amplitude * cos(wavenumber * x / lam), the workhorse initial datum."""
    x = grid.sample_points()
    return analyze(amplitude * np.cos(wavenumber * x / grid.period_scale), grid)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """H^s norm with the lambda-normalised counting measure:
    ( sum <n>^2s |coeff|^2 dn )^(1/2)."""
    n = field.grid.frequencies()
    weights = (1.0 + n * n) ** s
    total = np.sum(weights * np.abs(field.coeffs) ** 2) / field.grid.period_scale
    return float(np.sqrt(total))


def physical_integral(field: SpectralField, power: int, oversample: int | None = None) -> float:
    """integral of u^power over the torus, on a dealiased grid."""
    if oversample is None:
        oversample = max(2, (power + 1) // 2 + 1)
    samples = synthesize(field, oversample)
    m = len(samples)
    return float(np.sum(samples**power) * (field.grid.circumference / m))


def lebesgue4_norm(field: SpectralField) -> float:
    """Plain L^4 norm (integral u^4)^(1/4), computed on a >= 2x grid."""
    if not field.real:
        raise ValueError("L^4 norm is defined here for real fields only")
    val = physical_integral(field, 4, oversample=2)
    return float(max(val, 0.0) ** 0.25)


def l2_norm_physical(field: SpectralField) -> float:
    """Plain L^2 norm (integral u^2)^(1/2), evaluated spectrally."""
    total = 2.0 * np.pi * np.sum(np.abs(field.coeffs) ** 2)
    return float(np.sqrt(total))


def lp_project(field: SpectralField, k: int) -> SpectralField:
    """Littlewood-Paley block P_k: multiply coefficients by chi_k(n)."""
    if k < 0:
        raise ValueError(f"dyadic index must be >= 0, got {k}")
    weights = DEFAULT_CUTOFFS.chi(k, field.grid.frequencies())
    return field.with_coeffs(field.coeffs * weights)


def random_real_field(grid: FrequencyGrid, rng: np.random.Generator,
                      amplitude: float = 1.0, decay: float = 4.0) -> SpectralField:
    """Random real field with smoothly decaying spectrum.

    Coefficients are complex gaussians damped by exp(-|m|/decay), then
    symmetrised and rescaled so the physical amplitude (max |u|) is close
    to `amplitude`.  Deterministic for a fixed generator state.
    """
    n = grid.max_mode
    m = np.arange(-n, n + 1)
    raw = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)
    raw *= np.exp(-np.abs(m) / decay)
    coeffs = 0.5 * (raw + np.conj(raw[::-1]))
    coeffs[n] = coeffs[n].real
    out = SpectralField(grid, coeffs)
    peak = np.max(np.abs(synthesize(out, 2)))
    if peak > 0:
        out = out.with_coeffs(out.coeffs * (amplitude / peak))
    return out


def random_hs_field(grid: FrequencyGrid, rng: np.random.Generator,
                    s: float, target_norm: float) -> SpectralField:
    """Random real field rescaled to a prescribed H^s norm.

    The envelope <n>^(-s) spreads the weighted mass evenly across dyadic
    blocks, which is what the comparability sweeps want to probe.
    """
    n = grid.max_mode
    m = np.arange(-n, n + 1)
    raw = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)
    raw *= (1.0 + (m / grid.period_scale) ** 2) ** (-s / 2.0)
    coeffs = 0.5 * (raw + np.conj(raw[::-1]))
    coeffs[n] = coeffs[n].real
    out = SpectralField(grid, coeffs)
    norm = sobolev_norm(out, s)
    if norm > 0:
        out = out.with_coeffs(out.coeffs * (target_norm / norm))
    return out
