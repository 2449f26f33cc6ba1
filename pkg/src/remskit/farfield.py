"""Spherical direction grids and far-field power-wave patterns.

A pattern stores one complex 2-vector (theta-hat, phi-hat components) per
grid direction, in sqrt(W/sr). The grid carries positive area weights that
sum to 4*pi, so the weighted sum of squared pattern magnitudes is the total
radiated power in watts.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from ._textio import atomic_write_text, fmt

FOUR_PI = 4.0 * math.pi

PATTERN_CSV_HEADER = (
    "theta_deg,phi_deg,re_a_theta,im_a_theta,re_a_phi,im_a_phi,intensity_W_per_sr"
)


@dataclass(frozen=True)
class Direction:
    """A direction on the sphere, physicist's convention.

    theta in [0, pi] measured from +z, phi in [0, 2*pi) from +x. Negative
    theta inputs are folded with the (-theta, phi+pi) convention used for
    pattern-slice plots.
    """

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise ModelError(
                f"direction theta {self.theta} outside [0, pi]; "
                "use Direction.canonical for folding"
            )
        if not (0.0 <= self.phi < 2.0 * math.pi):
            raise ModelError(f"direction phi {self.phi} outside [0, 2*pi)")

    @staticmethod
    def canonical(theta: float, phi: float) -> "Direction":
        if theta < 0.0:
            theta = -theta
            phi = phi + math.pi
        if theta > math.pi:
            raise ModelError(f"cannot canonicalize theta {theta} > pi")
        phi = math.fmod(phi, 2.0 * math.pi)
        if phi < 0.0:
            phi += 2.0 * math.pi
        # fmod can land exactly on 2*pi after the += above
        if phi >= 2.0 * math.pi:
            phi = 0.0
        return Direction(theta, phi)

    @staticmethod
    def from_degrees(theta_deg: float, phi_deg: float) -> "Direction":
        return Direction.canonical(math.radians(theta_deg), math.radians(phi_deg))

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )


def direction_from_vector(v) -> Direction:
    """Direction of a nonzero 3-vector."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ModelError("zero vector has no direction")
    theta = math.acos(max(-1.0, min(1.0, v[2] / n)))
    phi = math.atan2(v[1], v[0])
    return Direction.canonical(theta, phi)


def local_basis(theta: float, phi: float):
    """Unit vectors (theta_hat, phi_hat) of the spherical basis at (theta, phi)."""
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    theta_hat = np.array([ct * cp, ct * sp, -st])
    phi_hat = np.array([-sp, cp, 0.0])
    return theta_hat, phi_hat


@dataclass(frozen=True)
class DirectionGrid:
    """Equiangular cell-centered direction set with exact cell-area weights.

    Row-major layout: index = i * n_phi + j with theta ring i and phi column
    j. n_phi must be even so the grid is closed under the antipodal map
    (theta, phi) -> (pi - theta, phi + pi), which the scattering mirror term
    requires.
    """

    n_theta: int
    n_phi: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    antipode: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    def compatible(self, other: "DirectionGrid") -> bool:
        return self.n_theta == other.n_theta and self.n_phi == other.n_phi

    def index_of(self, i: int, j: int) -> int:
        return i * self.n_phi + j

    def direction(self, idx: int) -> Direction:
        return Direction(float(self.theta[idx]), float(self.phi[idx]))

    def interp_stencil(self, theta: float, phi: float):
        """Bilinear stencil for (theta, phi): four (index, weight) pairs.

        phi wraps around; theta is clamped to the first/last ring centers
        (pole cells have no partner ring beyond them).
        """
        dt = math.pi / self.n_theta
        dp = 2.0 * math.pi / self.n_phi
        t = theta / dt - 0.5
        if t <= 0.0:
            i0, ft = 0, 0.0
            i1 = 0
        elif t >= self.n_theta - 1:
            i0, ft = self.n_theta - 1, 0.0
            i1 = self.n_theta - 1
        else:
            i0 = int(math.floor(t))
            ft = t - i0
            i1 = i0 + 1
        u = (phi % (2.0 * math.pi)) / dp
        j0 = int(math.floor(u)) % self.n_phi
        fu = u - math.floor(u)
        j1 = (j0 + 1) % self.n_phi
        return (
            (self.index_of(i0, j0), (1.0 - ft) * (1.0 - fu)),
            (self.index_of(i0, j1), (1.0 - ft) * fu),
            (self.index_of(i1, j0), ft * (1.0 - fu)),
            (self.index_of(i1, j1), ft * fu),
        )


def make_latlon_grid(n_theta: int, n_phi: int) -> DirectionGrid:
    """Build the cell-centered latitude-longitude grid.

    Weights are exact cell integrals d_phi * (cos(theta_lo) - cos(theta_hi)),
    so they telescope to 4*pi. Requires n_theta >= 2 and even n_phi >= 2.
    """
    if n_theta < 2 or n_phi < 2:
        raise ModelError(f"grid resolution ({n_theta}, {n_phi}) below minimum (2, 2)")
    if n_phi % 2 != 0:
        raise ModelError(
            f"n_phi = {n_phi} is odd; antipodal closure requires even n_phi"
        )
    dt = math.pi / n_theta
    dp = 2.0 * math.pi / n_phi
    theta_c = (np.arange(n_theta) + 0.5) * dt
    ring_w = dp * (np.cos(np.arange(n_theta) * dt) - np.cos(np.arange(1, n_theta + 1) * dt))
    # symmetrize so mirror-image rings carry bit-identical weights
    ring_w = 0.5 * (ring_w + ring_w[::-1])
    phi_c = np.arange(n_phi) * dp

    theta = np.repeat(theta_c, n_phi)
    phi = np.tile(phi_c, n_theta)
    weights = np.repeat(ring_w, n_phi)

    ii = np.repeat(np.arange(n_theta), n_phi)
    jj = np.tile(np.arange(n_phi), n_theta)
    antipode = (n_theta - 1 - ii) * n_phi + (jj + n_phi // 2) % n_phi

    return DirectionGrid(n_theta, n_phi, theta, phi, weights, antipode)


@dataclass
class FarFieldPattern:
    """Sampled far-field power-wave pattern a_F or b_F.

    values has shape (grid.size, 2); column 0 is the theta-hat component,
    column 1 the phi-hat component, both in sqrt(W/sr).
    """

    grid: DirectionGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.size, 2):
            raise ModelError(
                f"pattern values shape {self.values.shape} does not match "
                f"grid size ({self.grid.size}, 2)"
            )

    def copy(self) -> "FarFieldPattern":
        return FarFieldPattern(self.grid, self.values.copy())

    def __add__(self, other: "FarFieldPattern") -> "FarFieldPattern":
        if not self.grid.compatible(other.grid):
            raise ModelError("pattern grids do not match")
        return FarFieldPattern(self.grid, self.values + other.values)

    def __sub__(self, other: "FarFieldPattern") -> "FarFieldPattern":
        if not self.grid.compatible(other.grid):
            raise ModelError("pattern grids do not match")
        return FarFieldPattern(self.grid, self.values - other.values)

    def scaled(self, c: complex) -> "FarFieldPattern":
        return FarFieldPattern(self.grid, self.values * c)

    def at(self, d: Direction) -> np.ndarray:
        """Complex 2-vector at d, bilinearly interpolated off-grid."""
        out = np.zeros(2, dtype=complex)
        for idx, w in self.grid.interp_stencil(d.theta, d.phi):
            if w != 0.0:
                out += w * self.values[idx]
        return out


def zero_pattern(grid: DirectionGrid) -> FarFieldPattern:
    return FarFieldPattern(grid, np.zeros((grid.size, 2), dtype=complex))


def impulse_pattern(grid: DirectionGrid, d: Direction, coeff) -> FarFieldPattern:
    """Focused wave from grid direction d with 2-vector coefficient coeff.

    Encoded as coeff / weight(d) at the sample, so the discrete pairing
    reproduces the sifting property exactly. d must be a grid direction.
    """
    stencil = [(i, w) for i, w in grid.interp_stencil(d.theta, d.phi) if w > 1e-12]
    if len(stencil) != 1:
        raise ModelError("impulse direction must coincide with a grid sample")
    idx = stencil[0][0]
    p = zero_pattern(grid)
    p.values[idx] = np.asarray(coeff, dtype=complex) / grid.weights[idx]
    return p


def inner_product(p: FarFieldPattern, q: FarFieldPattern) -> complex:
    """Discrete L2 inner product, linear in p and conjugate-linear in q."""
    if not p.grid.compatible(q.grid):
        raise ModelError("inner_product requires patterns on one grid")
    return complex(np.sum(p.grid.weights * np.sum(p.values * np.conj(q.values), axis=1)))


def total_power(p: FarFieldPattern) -> float:
    return float(np.real(inner_product(p, p)))


def intensity(p: FarFieldPattern, d: Direction) -> float:
    """Radiation intensity ||p(d)||^2 in W/sr."""
    v = p.at(d)
    return float(np.real(np.vdot(v, v)))


def antipodal_mirror(p: FarFieldPattern) -> FarFieldPattern:
    """Output at (theta, phi) is -diag(1, -1) * p(pi - theta, pi + phi)."""
    src = p.values[p.grid.antipode]
    out = np.empty_like(src)
    out[:, 0] = -src[:, 0]
    out[:, 1] = src[:, 1]
    return FarFieldPattern(p.grid, out)


def pattern_to_csv(p: FarFieldPattern) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PATTERN_CSV_HEADER.split(","))
    for idx in range(p.grid.size):
        v = p.values[idx]
        w.writerow(
            [
                fmt(math.degrees(p.grid.theta[idx])),
                fmt(math.degrees(p.grid.phi[idx])),
                fmt(v[0].real),
                fmt(v[0].imag),
                fmt(v[1].real),
                fmt(v[1].imag),
                fmt(float(np.real(np.vdot(v, v)))),
            ]
        )
    return buf.getvalue()


def write_pattern_csv(p: FarFieldPattern, path: str) -> None:
    atomic_write_text(path, pattern_to_csv(p))
