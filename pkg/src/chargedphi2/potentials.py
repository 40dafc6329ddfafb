"""Real potentials / spatial cutoffs with analytic Fourier transforms.

The same container serves the electrostatic potential V and the spatial
interaction cutoff g: a real function of position together with its Fourier
transform in the convention f_hat(k) = integral e^{-ikx} f(x) dx.  Built-in
shapes carry closed-form transforms so that matrix elements downstream have no
quadrature noise; sampled user potentials fall back to an FFT table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Potential:
    """A real function of position with its analytic Fourier transform.

    Attributes:
        label: short name for reports.
        V: vectorized real function of position.
        V_hat: vectorized complex Fourier transform, f_hat(k) = int e^{-ikx} f.
        Vp_hat: Fourier transform of the derivative, Vp_hat(k) = i k V_hat(k).

    For real V the transform satisfies V_hat(-k) = conj(V_hat(k)).
    """

    label: str
    V: Callable[[np.ndarray], np.ndarray]
    V_hat: Callable[[np.ndarray], np.ndarray]

    def Vp_hat(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return 1j * k * np.asarray(self.V_hat(k))

    def scaled(self, t: float) -> "Potential":
        """Pointwise rescaling t*V (transform scales linearly)."""
        return Potential(
            label=f"{self.label}*{t:g}",
            V=lambda x, _f=self.V: t * np.asarray(_f(x)),
            V_hat=lambda k, _f=self.V_hat: t * np.asarray(_f(k)),
        )


def zero_potential() -> Potential:
    return Potential(
        label="zero",
        V=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        V_hat=lambda k: np.zeros_like(np.asarray(k, dtype=float), dtype=complex),
    )


def gaussian_potential(amplitude: float = 1.0, width: float = 1.0) -> Potential:
    """A * exp(-x^2 / (2 w^2)); transform A w sqrt(2 pi) exp(-w^2 k^2 / 2)."""
    if width <= 0:
        raise ParameterError(f"width must be positive, got {width}")
    a, w = float(amplitude), float(width)

    def v(x):
        x = np.asarray(x, dtype=float)
        return a * np.exp(-(x**2) / (2 * w**2))

    def v_hat(k):
        k = np.asarray(k, dtype=float)
        return (a * w * np.sqrt(2 * np.pi) * np.exp(-(w**2) * k**2 / 2)).astype(complex)

    return Potential(label=f"gaussian(a={a:g},w={w:g})", V=v, V_hat=v_hat)


def lorentzian_potential(amplitude: float = 1.0, width: float = 1.0) -> Potential:
    """A / (1 + (x/w)^2); transform A w pi exp(-w |k|)."""
    if width <= 0:
        raise ParameterError(f"width must be positive, got {width}")
    a, w = float(amplitude), float(width)

    def v(x):
        x = np.asarray(x, dtype=float)
        return a / (1.0 + (x / w) ** 2)

    def v_hat(k):
        k = np.asarray(k, dtype=float)
        return (a * w * np.pi * np.exp(-w * np.abs(k))).astype(complex)

    return Potential(label=f"lorentzian(a={a:g},w={w:g})", V=v, V_hat=v_hat)


def sampled_potential(
    x_samples: np.ndarray, v_samples: np.ndarray, label: str = "sampled"
) -> Potential:
    """Potential from equispaced real samples; transform via an FFT table.

    The transform is tabulated at the FFT dual frequencies of the sample grid
    and evaluated elsewhere by linear interpolation of real and imaginary
    parts.  Position values interpolate the samples (zero outside the grid).
    """
    x = np.asarray(x_samples, dtype=float)
    vals = np.asarray(v_samples, dtype=float)
    if x.ndim != 1 or x.shape != vals.shape or x.size < 2:
        raise ParameterError("need matching 1d sample arrays with >= 2 points")
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx):
        raise ParameterError("sample grid must be equispaced")

    # f_hat(k) = dx * sum_j e^{-i k x_j} f(x_j) at the FFT frequencies.
    freqs = 2 * np.pi * np.fft.fftfreq(x.size, d=dx)
    table = dx * np.exp(-1j * freqs * x[0]) * np.fft.fft(vals)
    order = np.argsort(freqs)
    k_tab, f_tab = freqs[order], table[order]

    def v(q):
        return np.interp(np.asarray(q, dtype=float), x, vals, left=0.0, right=0.0)

    def v_hat(k):
        k = np.asarray(k, dtype=float)
        re = np.interp(k, k_tab, f_tab.real, left=0.0, right=0.0)
        im = np.interp(k, k_tab, f_tab.imag, left=0.0, right=0.0)
        return re + 1j * im

    return Potential(label=label, V=v, V_hat=v_hat)


_BUILTINS = {
    "zero": lambda amplitude=0.0, width=1.0: zero_potential(),
    "gaussian": gaussian_potential,
    "lorentzian": lorentzian_potential,
}


def make_potential(kind: str, amplitude: float = 1.0, width: float = 1.0) -> Potential:
    """Construct a built-in potential by config name."""
    try:
        factory = _BUILTINS[kind]
    except KeyError:
        raise ParameterError(
            f"unknown potential kind {kind!r}; choose from {sorted(_BUILTINS)}"
        ) from None
    return factory(amplitude=amplitude, width=width)
