"""Exact integer resonance arithmetic for the cubic and quintic interactions.

The phase mismatch of a cubic frequency triple is

    H(n1, n2, n3) = (n1+n2+n3)^5 - n1^5 - n2^5 - n3^5
                  = (5/2) (n1+n2)(n1+n3)(n2+n3) (n1^2+n2^2+n3^2+n^2),

so a triple is resonant exactly when some pairwise sum vanishes.  Because the
frequencies of a triple sum to the output n, that is the same as saying some
component equals n; the analogous statement holds for quintuples and their
vanishing four-sums.  Set membership is decided in exact integer arithmetic
only; no floats enter these decisions.
"""

from __future__ import annotations

import numpy as np

from .cutoffs import DEFAULT_CUTOFFS
from .spectral import SpectralField

MODE_CAP = 1 << 12  # |n_i| <= 4096 keeps fifth powers exact in 64-bit engines
SUM_CAP = 6000  # |sum n_i|^5 must stay below 2^63


def _check_caps(*freqs: int):
    for f in freqs:
        if abs(int(f)) > MODE_CAP:
            raise OverflowError(
                f"frequency {f} exceeds the exact-arithmetic cap {MODE_CAP}"
            )
    total = sum(int(f) for f in freqs)
    if abs(total) > SUM_CAP:
        raise OverflowError(
            f"frequency sum {total} exceeds the exact-arithmetic cap {SUM_CAP}"
        )


def resonance_cubic(n1: int, n2: int, n3: int) -> int:
    """Exact value of the cubic phase mismatch H."""
    _check_caps(n1, n2, n3)
    n1, n2, n3 = int(n1), int(n2), int(n3)
    return (n1 + n2 + n3) ** 5 - n1**5 - n2**5 - n3**5


def verify_factorization(n1: int, n2: int, n3: int) -> bool:
    """Check 2*H = 5*(n1+n2)(n1+n3)(n2+n3)(n1^2+n2^2+n3^2+n^2) exactly.

    The factor of two keeps everything in integers.
    """
    _check_caps(n1, n2, n3)
    n1, n2, n3 = int(n1), int(n2), int(n3)
    n = n1 + n2 + n3
    lhs = 2 * resonance_cubic(n1, n2, n3)
    rhs = 5 * (n1 + n2) * (n1 + n3) * (n2 + n3) * (n1**2 + n2**2 + n3**2 + n**2)
    return lhs == rhs


def factorization_sweep(max_abs: int) -> tuple[int, int]:
    """Exhaustively verify the factorisation for all |n_i| <= max_abs.

    Returns (checked, failures).  Vectorised in int64; the ranges this is
    meant for (max_abs <= ~200) stay far inside exact territory.
    """
    r = np.arange(-max_abs, max_abs + 1, dtype=np.int64)
    n1 = r[:, None, None]
    n2 = r[None, :, None]
    n3 = r[None, None, :]
    n = n1 + n2 + n3
    lhs = 2 * (n**5 - n1**5 - n2**5 - n3**5)
    rhs = 5 * (n1 + n2) * (n1 + n3) * (n2 + n3) * (n1**2 + n2**2 + n3**2 + n**2)
    failures = int(np.count_nonzero(lhs != rhs))
    return lhs.size, failures


def is_nonresonant3(triple: tuple[int, int, int], n: int) -> bool:
    """Membership in the nonresonant cubic set for output frequency n."""
    n1, n2, n3 = (int(v) for v in triple)
    if n1 + n2 + n3 != int(n):
        raise ValueError(f"triple {triple} does not sum to {n}")
    return (n1 + n2) * (n1 + n3) * (n2 + n3) != 0


def is_nonresonant5(quintuple: tuple[int, int, int, int, int], n: int) -> bool:
    """Membership in the nonresonant quintic set: all four-sums nonzero."""
    vals = [int(v) for v in quintuple]
    if sum(vals) != int(n):
        raise ValueError(f"quintuple {quintuple} does not sum to {n}")
    total = sum(vals)
    return all(total - v != 0 for v in vals)


def _mode_range(field: SpectralField) -> np.ndarray:
    return field.grid.mode_indices()


def split_cubic(
    field: SpectralField,
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Split the cubic nonlinearity into resonant diagonal and the two
    nonresonant sums.

    Returns (resonant, nonresonant_a, nonresonant_b) with

        resonant(n)      = -20 i n^3 |v(n)|^2 v(n) / lam
        nonresonant_a(n) = 10 i n / lam * sum_{N3,n} v(n1) v(n2) n3^2 v(n3)
        nonresonant_b(n) = 10 i n / lam * sum_{N3,n} v(n1) n2 v(n2) n3 v(n3)

    The diagonal sign is forced by the reconstruction identity
    full cubic = nonresonant parts + resonant + linear-like remainder
    (see `cubic_linear_remainder`); it is verified against the transform
    path in the tests.
    """
    grid = field.grid
    if grid.num_modes > 128:
        raise ValueError("direct cubic split is capped at M <= 128")
    lam = grid.period_scale
    c = field.coeffs
    nmax = grid.max_mode
    modes = _mode_range(field)
    freqs = modes / lam

    resonant = -20j * freqs**3 * np.abs(c) ** 2 * c / lam

    m1 = modes[:, None]
    m2 = modes[None, :]
    c1 = c[:, None]
    c2 = c[None, :]
    sum_a = np.zeros(len(modes), dtype=complex)
    sum_b = np.zeros(len(modes), dtype=complex)
    for i, m in enumerate(modes):
        m3 = m - m1 - m2
        valid = (np.abs(m3) <= nmax) & (m1 != m) & (m2 != m) & (m3 != m)
        if not np.any(valid):
            continue
        idx3 = np.where(valid, m3 + nmax, 0)
        c3 = c[idx3]
        f2 = m2 / lam
        f3 = m3 / lam
        a_terms = np.where(valid, c1 * c2 * f3**2 * c3, 0.0)
        b_terms = np.where(valid, c1 * f2 * c2 * f3 * c3, 0.0)
        sum_a[i] = np.sum(a_terms)
        sum_b[i] = np.sum(b_terms)
    prefac = 10j * freqs / lam
    nonres_a = prefac * sum_a
    nonres_b = prefac * sum_b

    real = field.real
    return (
        field.with_coeffs(resonant, real=real),
        field.with_coeffs(nonres_a, real=real),
        field.with_coeffs(nonres_b, real=real),
    )


def full_cubic_transform(field: SpectralField) -> SpectralField:
    """The complete Fourier cubic nonlinearity 10 i n / lam * sum over all
    triples of [v v n3^2 v + v n2 v n3 v], via coefficient convolutions."""
    grid = field.grid
    lam = grid.period_scale
    c = field.coeffs
    modes = _mode_range(field)
    freqs = modes / lam
    nmax = grid.max_mode

    d1 = freqs * c  # first derivative weights (up to the i factor)
    d2 = freqs**2 * c

    pair = np.convolve(c, c)
    term_a = np.convolve(pair, d2)
    term_b = np.convolve(np.convolve(c, d1), d1)
    center = 3 * nmax
    window = slice(center - nmax, center + nmax + 1)
    total = 10j * freqs / lam * (term_a[window] + term_b[window])
    return field.with_coeffs(total, real=field.real)


def cubic_linear_remainder(field: SpectralField) -> SpectralField:
    """The resonant remainder of the cubic terms beyond the diagonal:
    the mass- and gradient-induced linear-like corrections

        10 i n / lam * ( W0 n^2 + W2 ) v(n),

    with W0 = sum |v|^2 and W2 = sum n^2 |v|^2 over the lattice."""
    lam = field.grid.period_scale
    c = field.coeffs
    freqs = _mode_range(field) / lam
    w0 = np.sum(np.abs(c) ** 2)
    w2 = np.sum(freqs**2 * np.abs(c) ** 2)
    out = 10j * freqs / lam * (w0 * freqs**2 + w2) * c
    return field.with_coeffs(out, real=field.real)


def quintic_resonant_sum(field: SpectralField, k: int) -> complex:
    """The exact quintic resonant interaction functional for block k.

    S = sum_n chi_k(n) n |v(n)|^2 *
        sum_{n1+n2+n31+n32=0} v(n1) v(n2) psi_k(n - n31 - n32) v(n31) v(n32),

    enumerated directly over the zero-sum quadruples.  For real fields the
    conjugation symmetry of the inner sum makes S real; the imaginary part
    is the quantity under test.
    """
    grid = field.grid
    if grid.num_modes > 64:
        raise ValueError("direct quintic resonant sum is capped at M <= 64")
    if not field.real:
        raise ValueError("the cancellation statement is for real fields")
    lam = grid.period_scale
    c = field.coeffs
    modes = _mode_range(field)
    freqs = modes / lam
    nmax = grid.max_mode
    fam = DEFAULT_CUTOFFS

    chi_n = fam.chi(k, freqs)
    active = np.nonzero(chi_n)[0]
    if len(active) == 0:
        return 0.0 + 0.0j

    m1 = modes[:, None, None]
    m31 = modes[None, :, None]
    m32 = modes[None, None, :]
    m2 = -(m1 + m31 + m32)
    valid = np.abs(m2) <= nmax
    idx2 = np.where(valid, m2 + nmax, 0)
    quad = (
        c[:, None, None]
        * np.where(valid, c[idx2], 0.0)
        * c[None, :, None]
        * c[None, None, :]
    )

    total = 0.0 + 0.0j
    for i in active:
        n = freqs[i]
        psi_vals = fam.psi(k, n - (m31 + m32) / lam)
        inner = np.sum(quad * psi_vals)
        total += chi_n[i] * n * np.abs(c[i]) ** 2 * inner
    return complex(total)


def quintic_resonant_sum_factored(field: SpectralField, k: int) -> complex:
    """Independent route to the same functional through the pair convolution
    P = v * v:  the inner quadruple sum collapses to sum_m |P(m)|^2-weighted
    psi_k values."""
    grid = field.grid
    lam = grid.period_scale
    c = field.coeffs
    modes = _mode_range(field)
    freqs = modes / lam
    nmax = grid.max_mode
    fam = DEFAULT_CUTOFFS

    pair = np.convolve(c, c)  # entry i is P(m) at m = i - 2*nmax
    pair_modes = np.arange(-2 * nmax, 2 * nmax + 1)
    chi_n = fam.chi(k, freqs)
    total = 0.0 + 0.0j
    for i in np.nonzero(chi_n)[0]:
        n = freqs[i]
        psi_vals = fam.psi(k, n - pair_modes / lam)
        inner = np.sum(pair * pair[::-1] * psi_vals)  # P(m) P(-m) psi_k(n - m)
        total += chi_n[i] * n * np.abs(c[i]) ** 2 * inner
    return complex(total)
