"""Gabor wavelet kernels and their discrete Laplacian (edge-selective filters)."""

from dataclasses import dataclass

import numpy as np

from src.config import GaborSection
from src.core.errors import ConfigError


@dataclass(frozen=True)
class GaborParams:
    wavelength: float = 4.0  # lambda, px
    phase: float = 0.0  # psi
    sigma: float = 2.0
    gamma: float = 0.5  # aspect ratio
    kernel_size: int = 7

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError(f"Gabor sigma must be > 0, got {self.sigma}", fields=["gabor.sigma"])
        if self.wavelength <= 0:
            raise ConfigError(f"Gabor wavelength must be > 0, got {self.wavelength}", fields=["gabor.wavelength"])
        if self.gamma <= 0:
            raise ConfigError(f"Gabor gamma must be > 0, got {self.gamma}", fields=["gabor.gamma"])
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"Gabor kernel size must be odd, got {self.kernel_size}", fields=["gabor.kernel_size"])


@dataclass(frozen=True)
class GaborBank:
    """One K x K real kernel per orientation."""
    kernels: np.ndarray  # (n_orientations, K, K)
    orientations: tuple[float, ...]
    params: GaborParams

    @classmethod
    def from_config(cls, section: GaborSection) -> "GaborBank":
        params = GaborParams(
            wavelength=section.wavelength,
            phase=section.phase,
            sigma=section.sigma,
            gamma=section.gamma,
            kernel_size=section.kernel_size,
        )
        return cls.build(params, section.orientations)

    @classmethod
    def build(cls, params: GaborParams, orientations) -> "GaborBank":
        kernels = np.stack([gabor_kernel(params, theta) for theta in orientations])
        return cls(kernels=kernels, orientations=tuple(float(t) for t in orientations), params=params)


def gabor_value(x: float, y: float, params: GaborParams, theta: float) -> float:
    """Real part of the complex Gabor wavelet at integer offset (x, y) from the centre."""
    return float(_gabor(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), params, theta))


def gabor_kernel(params: GaborParams, theta: float) -> np.ndarray:
    """
    K x K kernel sampled on the centred integer grid.

    Indexed [row, col] = [y + r, x + r] with r = K // 2.
    """
    radius = params.kernel_size // 2
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    return _gabor(xs, ys, params, theta)


def _gabor(xs: np.ndarray, ys: np.ndarray, params: GaborParams, theta: float) -> np.ndarray:
    x_rot = xs * np.cos(theta) + ys * np.sin(theta)
    y_rot = -xs * np.sin(theta) + ys * np.cos(theta)
    envelope = np.exp(-(x_rot ** 2 + params.gamma ** 2 * y_rot ** 2) / (2.0 * params.sigma ** 2))
    return envelope * np.cos(2.0 * np.pi * x_rot / params.wavelength + params.phase)


def discrete_laplacian(field: np.ndarray) -> np.ndarray:
    """5-point Laplacian stencil with replicated borders."""
    padded = np.pad(np.asarray(field, dtype=np.float64), 1, mode="edge")
    return (
        padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
        - 4.0 * padded[1:-1, 1:-1]
    )


def laplacian_of_gabor(bank: GaborBank) -> list[np.ndarray]:
    """
    Laplacian-filtered Gabor kernels, one per orientation.

    With replicated borders the stencil telescopes, so every kernel sums to
    zero and annihilates constant feature maps.
    """
    return [discrete_laplacian(kernel) for kernel in bank.kernels]
