import numpy as np
from scipy.special import ellipe, ellipk, ellipkm1

from errors import NumericalError
from models import MU0, CircularLoop


def green(r: np.ndarray, r_prime: np.ndarray) -> np.ndarray:
    """Static free-space Green's function 1/(4 pi |r - r'|)."""
    dist = np.linalg.norm(np.asarray(r, dtype=np.float64) - np.asarray(r_prime, dtype=np.float64), axis=-1)
    if np.any(dist == 0.0):
        raise NumericalError("green: coincident source and observation points")
    return 1.0 / (4.0 * np.pi * dist)


def _loop_frame(loop: CircularLoop, points: np.ndarray):
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = np.asarray(loop.axis)
    rel = p - np.asarray(loop.center)
    z = rel @ n
    rho_vec = rel - np.outer(z, n)
    rho = np.linalg.norm(rho_vec, axis=1)
    rho_hat = np.zeros_like(rho_vec)
    off_axis = rho > 1.0e-15 * loop.radius
    rho_hat[off_axis] = rho_vec[off_axis] / rho[off_axis, None]
    return n, z, rho, rho_hat, off_axis


def _on_filament(loop: CircularLoop, z: np.ndarray, rho: np.ndarray) -> None:
    gap = np.hypot(rho - loop.radius, z)
    if np.any(gap <= 1.0e-12 * loop.radius):
        raise NumericalError(f"coil '{loop.name}': evaluation point on the current filament")


def _azimuthal_kernel(m: np.ndarray) -> np.ndarray:
    """(1 - m/2) K(m) - E(m), with a series for small m."""
    series = np.pi * m * m / 32.0 * (1.0 + 0.75 * m + 75.0 / 128.0 * m * m)
    exact = (1.0 - 0.5 * m) * ellipk(m) - ellipe(m)
    return np.where(m < 1.0e-4, series, exact)


def coil_vector_potential(loop: CircularLoop, points: np.ndarray, current: float = 1.0) -> np.ndarray:
    """Vector potential (N, 3) of a circular filament carrying `current` per turn."""
    n, z, rho, rho_hat, off_axis = _loop_frame(loop, points)
    _on_filament(loop, z, rho)
    a = loop.radius
    m = 4.0 * a * rho / ((a + rho) ** 2 + z * z)
    A_phi = np.zeros_like(rho)
    k = np.sqrt(m[off_axis])
    A_phi[off_axis] = (
        MU0 * current * loop.turns / (np.pi * k) * np.sqrt(a / rho[off_axis]) * _azimuthal_kernel(m[off_axis])
    )
    phi_hat = np.cross(n, rho_hat)
    return A_phi[:, None] * phi_hat


def loop_field(loop: CircularLoop, points: np.ndarray, current: float = 1.0) -> np.ndarray:
    """Magnetic flux density (N, 3) of a circular filament."""
    n, z, rho, rho_hat, off_axis = _loop_frame(loop, points)
    _on_filament(loop, z, rho)
    a = loop.radius
    alpha2 = a * a + rho * rho + z * z - 2.0 * a * rho
    beta2 = a * a + rho * rho + z * z + 2.0 * a * rho
    beta = np.sqrt(beta2)
    c = MU0 * current * loop.turns / np.pi
    ratio = alpha2 / beta2
    Ek = ellipe(1.0 - ratio)
    Kk = ellipkm1(ratio)

    B_rho = np.zeros_like(rho)
    numer = c * z * ((a * a + rho * rho + z * z) * Ek - alpha2 * Kk)
    B_rho[off_axis] = numer[off_axis] / (2.0 * alpha2[off_axis] * beta[off_axis] * rho[off_axis])
    B_z = c * ((a * a - rho * rho - z * z) * Ek + alpha2 * Kk) / (2.0 * alpha2 * beta)
    return B_rho[:, None] * rho_hat + np.outer(B_z, n)


def neumann_mutual_inductance(loop_a: CircularLoop, loop_b: CircularLoop) -> float:
    """Mutual inductance of two coaxial filaments."""
    axis_a, axis_b = np.asarray(loop_a.axis), np.asarray(loop_b.axis)
    offset = np.asarray(loop_b.center) - np.asarray(loop_a.center)
    lateral = offset - (offset @ axis_a) * axis_a
    if abs(abs(axis_a @ axis_b) - 1.0) > 1.0e-12 or np.linalg.norm(lateral) > 1.0e-12 * loop_a.radius:
        raise NumericalError(f"Neumann formula needs coaxial loops: '{loop_a.name}', '{loop_b.name}'")
    a, b = loop_a.radius, loop_b.radius
    d = float(offset @ axis_a)
    m = 4.0 * a * b / ((a + b) ** 2 + d * d)
    if m >= 1.0:
        raise NumericalError("Neumann formula: coincident filaments")
    k = np.sqrt(m)
    value = MU0 * np.sqrt(a * b) * ((2.0 / k - k) * ellipk(m) - 2.0 / k * ellipe(m))
    return float(value * loop_a.turns * loop_b.turns * np.sign(axis_a @ axis_b))
