"""Discrete space-time norms adapted to the quintic dispersion n^5, and the
two interaction families that defeat the trilinear estimate.

A `TimeFreqField` stores, for each frequency n, a window of values on a
uniform modulation grid of spacing `TAU_STEP`, indexed relative to the
dispersion surface tau = n^5.  Window origins are kept as exact integers
(in units of the grid spacing), so convolution support arithmetic -- where
the resonance shifts of order N^4 appear -- is exact; floats only enter
through the stored values and the final quadrature.

Both families put unit bumps of modulation width 1/4 on three single
frequencies; the first drives a high output frequency and large output
modulation, the second plays the dual game with the large modulation moved
onto an input factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

TAU_STEP = 1.0 / 64.0  # modulation grid spacing
BUMP_CELLS = 16  # width 1/4 = 16 cells


def dispersion(n: int) -> int:
    """The pure quintic symbol; exact in integer arithmetic."""
    return int(n) ** 5


@dataclass
class Window:
    """Modulation samples for one frequency: values[j] sits at
    tau = (start + j) * TAU_STEP, with start an exact absolute integer."""

    start: int
    values: np.ndarray

    def copy(self) -> "Window":
        return Window(self.start, self.values.copy())


@dataclass
class TimeFreqField:
    """Sparse frequency dict of modulation windows."""

    windows: dict[int, Window] = dc_field(default_factory=dict)

    def frequencies(self) -> list[int]:
        return sorted(self.windows)

    def add_bump(self, n: int, height: float = 1.0, center_offset: int = 0,
                 cells: int = BUMP_CELLS):
        """Indicator bump of `cells` cells centred (up to rounding) on
        tau = n^5 + center_offset * TAU_STEP."""
        start = 64 * dispersion(n) + center_offset - cells // 2
        vals = np.full(cells, height, dtype=complex)
        self._accumulate(n, Window(start, vals))

    def _accumulate(self, n: int, win: Window):
        if n not in self.windows:
            self.windows[n] = win.copy()
            return
        old = self.windows[n]
        lo = min(old.start, win.start)
        hi = max(old.start + len(old.values), win.start + len(win.values))
        merged = np.zeros(hi - lo, dtype=complex)
        merged[old.start - lo : old.start - lo + len(old.values)] += old.values
        merged[win.start - lo : win.start - lo + len(win.values)] += win.values
        self.windows[n] = Window(lo, merged)

    def weighted(self, fn) -> "TimeFreqField":
        """New field with values multiplied by fn(n) per frequency."""
        out = TimeFreqField()
        for n, win in self.windows.items():
            out.windows[n] = Window(win.start, win.values * fn(n))
        return out

    def modulation_center(self, n: int) -> int:
        """Integer tau-index (units of TAU_STEP) of the window's weighted
        centre of mass, rounded; exact for symmetric bumps."""
        win = self.windows[n]
        w = np.abs(win.values)
        j = float(np.sum(w * np.arange(len(w))) / np.sum(w))
        return win.start + int(round(j))

    def support_width_cells(self, n: int) -> int:
        win = self.windows[n]
        idx = np.nonzero(np.abs(win.values) > 0)[0]
        return int(idx[-1] - idx[0] + 1) if len(idx) else 0


def convolve2(f: TimeFreqField, g: TimeFreqField) -> TimeFreqField:
    """Discrete convolution in (tau, n): frequencies add, window origins
    add, tau-integration contributes one quadrature weight."""
    out = TimeFreqField()
    for n1, w1 in f.windows.items():
        for n2, w2 in g.windows.items():
            vals = np.convolve(w1.values, w2.values) * TAU_STEP
            out._accumulate(n1 + n2, Window(w1.start + w2.start, vals))
    return out


def convolve3(f: TimeFreqField, g: TimeFreqField, h: TimeFreqField,
              third_derivative_on_h: bool = True) -> TimeFreqField:
    """Transform of the product u*v*(d^3 w): the cubic-derivative weight
    multiplies the designated factor before the double convolution."""
    if third_derivative_on_h:
        h = h.weighted(lambda n: (1j * n) ** 3)
    return convolve2(convolve2(f, g), h)


def xsb_norm(tf: TimeFreqField, s: float, b: float) -> float:
    """Weighted L^2 norm with weight <n>^s <tau - n^5>^b and quadrature
    weight TAU_STEP on the modulation integral."""
    total = 0.0
    for n, win in tf.windows.items():
        rel = win.start - 64 * dispersion(n) + np.arange(len(win.values))
        zeta = rel * TAU_STEP  # exact small integers times the grid step
        w_mod = (1.0 + zeta * zeta) ** b
        w_freq = (1.0 + float(n) ** 2) ** s
        total += w_freq * float(np.sum(w_mod * np.abs(win.values) ** 2)) * TAU_STEP
    return float(np.sqrt(total))


@dataclass(frozen=True)
class CounterexampleFamily:
    """The three single-frequency factors of one failure family."""

    variant: int
    n_high: int
    u: TimeFreqField
    v: TimeFreqField
    w: TimeFreqField

    @classmethod
    def build(cls, variant: int, n_high: int) -> "CounterexampleFamily":
        if n_high < 8:
            raise ValueError("the families are meaningful for N >= 8")
        u, v, w = TimeFreqField(), TimeFreqField(), TimeFreqField()
        if variant == 1:
            u.add_bump(-1)
            v.add_bump(2)
            w.add_bump(n_high - 1)
        elif variant == 2:
            u.add_bump(-n_high)
            v.add_bump(2)
            w.add_bump(n_high - 1)
        else:
            raise ValueError(f"unknown variant {variant}")
        return cls(variant, n_high, u, v, w)


def ratio(n_high: int, s: float, b: float, variant: int) -> dict:
    """Size of the trilinear output against the product of input norms.

    Variant 1 measures ||u v w_xxx|| in X^{s, b-1} over the three X^{s,b}
    norms; variant 2 measures the dual pairing, with the first factor in
    X^{-s, 1-b} and the output in X^{-s, -b}.
    """
    fam = CounterexampleFamily.build(variant, n_high)
    out = convolve3(fam.u, fam.v, fam.w)
    if variant == 1:
        num = xsb_norm(out, s, b - 1.0)
        den = xsb_norm(fam.u, s, b) * xsb_norm(fam.v, s, b) * xsb_norm(fam.w, s, b)
    else:
        num = xsb_norm(out, -s, -b)
        den = (
            xsb_norm(fam.u, -s, 1.0 - b)
            * xsb_norm(fam.v, s, b)
            * xsb_norm(fam.w, s, b)
        )
    return {
        "N": n_high,
        "numerator": num,
        "denominator": den,
        "ratio": num / den,
        "output_frequency": (max(out.windows) if variant == 1 else 1),
    }


def fit_exponent(ns, ratios) -> tuple[float, float]:
    """Least-squares slope of log(ratio) against log(N), with r^2."""
    ns = np.asarray(ns, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    if len(ns) < 4:
        raise ValueError("need at least four points for a slope")
    if np.any(ratios <= 0.0):
        raise ValueError("ratios must be positive")
    x = np.log(ns)
    y = np.log(ratios)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def exponent_sweep(variant: int, b: float, s: float,
                   n_values=(16, 32, 64, 128, 256)) -> dict:
    """Run the family across a dyadic range of high frequencies and fit the
    growth exponent; the prediction is 3 + 4(b-1) for variant 1 and 3 - 4b
    for variant 2."""
    rows = [ratio(n, s, b, variant) for n in n_values]
    slope, r2 = fit_exponent([r["N"] for r in rows], [r["ratio"] for r in rows])
    predicted = 3.0 + 4.0 * (b - 1.0) if variant == 1 else 3.0 - 4.0 * b
    return {
        "variant": variant,
        "b": b,
        "s": s,
        "rows": rows,
        "slope": slope,
        "r_squared": r2,
        "predicted": predicted,
    }
