"""Spotlight-SAR spectral measurement simulation.

Each aspect angle contributes ``M`` frequency samples of the scene's
spatial Fourier transform. Angles come in ``L`` narrow sub-apertures of
``K`` angles each; within a sub-aperture the per-angle blocks are stacked
(angle-major, ``row = k * M + m``) and optionally row-subsampled by a
random frequency selection shared by every angle of that sub-aperture.
"""

from dataclasses import dataclass, field

import numpy as np

C_LIGHT = 299792458.0


@dataclass(frozen=True)
class ApertureSpec:
    L: int
    K: int
    M: int
    theta_start: float  # degrees
    theta_end: float  # degrees
    center_freq: float  # Hz
    bandwidth: float  # Hz
    elevation: float = 30.0  # degrees, metadata only
    c_light: float = C_LIGHT

    def __post_init__(self):
        if min(self.L, self.K, self.M) < 1:
            raise ValueError(f"L, K, M must be >= 1, got {self.L}, {self.K}, {self.M}")
        if not self.theta_end > self.theta_start:
            raise ValueError("theta_end must exceed theta_start")
        if self.bandwidth < 0 or self.center_freq <= 0:
            raise ValueError("need center_freq > 0 and bandwidth >= 0")
        if self.M > 1 and self.bandwidth == 0:
            raise ValueError("M > 1 requires a positive bandwidth")

    @property
    def subaperture_span(self):
        return (self.theta_end - self.theta_start) / self.L

    @property
    def frequencies(self):
        if self.M == 1:
            return np.array([self.center_freq])
        half = self.bandwidth / 2
        return np.linspace(self.center_freq - half, self.center_freq + half, self.M)

    def angles(self, l):
        """Aspect angles (degrees) of sub-aperture ``l``, cell-centred in its span."""
        if not 0 <= l < self.L:
            raise IndexError(f"sub-aperture {l} out of range 0..{self.L - 1}")
        span = self.subaperture_span
        return self.theta_start + span * (l + (np.arange(self.K) + 0.5) / self.K)


def phase_delay(x, y, theta, c_light=C_LIGHT):
    """Two-way delay ``2 (x cos(theta) + y sin(theta)) / c`` with theta in degrees."""
    t = np.deg2rad(theta)
    return 2.0 * (np.asarray(x) * np.cos(t) + np.asarray(y) * np.sin(t)) / c_light


def build_steering(grid, gamma, theta, c_light=C_LIGHT):
    """M x N matrix of ``exp(-j 2 pi gamma_m phi_n)`` for a single angle."""
    gamma = np.asarray(gamma, dtype=float)
    x, y = grid.centers.T
    phi = phase_delay(x, y, theta, c_light)
    return np.exp(-2j * np.pi * gamma[:, None] * phi[None, :])


def stacked_operator(spec, grid, l):
    """Unselected (K*M) x N operator of sub-aperture ``l``."""
    gamma = spec.frequencies
    return np.vstack([build_steering(grid, gamma, th, spec.c_light) for th in spec.angles(l)])


@dataclass
class SelectionPlan:
    fraction: float
    M: int
    K: int
    J: int
    seed: int
    freq_indices: list = field(repr=False)

    @property
    def L(self):
        return len(self.freq_indices)

    def rows(self, l):
        """Retained row indices of the stacked K*M vector for sub-aperture ``l``."""
        idx = self.freq_indices[l]
        return (np.arange(self.K)[:, None] * self.M + idx[None, :]).ravel()

    def apply(self, l, stacked):
        return np.asarray(stacked)[self.rows(l)]


def make_selection(M, K, fraction, seed=0, L=1):
    """Draw a random J-subset of the M frequency rows for each sub-aperture.

    Each subset is the head of one random permutation per sub-aperture, so for
    a fixed seed a smaller fraction keeps a subset of a larger one's rows.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    J = int(round(fraction * M))
    if J < 1:
        raise ValueError(f"fraction {fraction} keeps no rows of M={M}")
    rng = np.random.default_rng(seed)
    indices = [np.sort(rng.permutation(M)[:J]) for _ in range(L)]
    return SelectionPlan(fraction, M, K, J, seed, indices)


@dataclass
class Measurements:
    l: int
    y: np.ndarray
    Theta: np.ndarray = field(repr=False)
    K: int
    J: int
    noise_sigma: float
    seed: int


def simulate(spec, grid, truth, plan, noise_sigma=0.0, seed=0, snr_db=None):
    """Synthesise selected, noisy measurements for every sub-aperture.

    Noise is circularly-symmetric complex Gaussian with standard deviation
    ``noise_sigma`` per real/imaginary component. If ``snr_db`` is given it
    overrides ``noise_sigma``, which is then set per sub-aperture from the
    mean clean power of that sub-aperture's full sample set. Noise is drawn on
    all K*M rows before selection so nested selections share their noise.

    Returns a list of :class:`Measurements`, one per sub-aperture.
    """
    if truth.N != grid.N:
        raise ValueError(f"truth has {truth.N} cells, grid has {grid.N}")
    if plan.M != spec.M or plan.K != spec.K:
        raise ValueError("selection plan does not match aperture M/K")
    if plan.L != spec.L:
        raise ValueError(f"selection plan covers {plan.L} sub-apertures, aperture has {spec.L}")
    children = np.random.SeedSequence(seed).spawn(spec.L)
    out = []
    for l in range(spec.L):
        full = stacked_operator(spec, grid, l)
        clean = full @ truth.at(l)
        sigma = noise_sigma
        if snr_db is not None:
            power = np.mean(np.abs(clean) ** 2)
            sigma = float(np.sqrt(power / (2 * 10 ** (snr_db / 10))))
        rng = np.random.default_rng(children[l])
        noise = rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
        y = plan.apply(l, clean + sigma * noise)
        out.append(Measurements(l, y, plan.apply(l, full), spec.K, plan.J, float(sigma), seed))
    return out


def dump_measurements(path, meas):
    """Write one sub-aperture's data as text.

    First line is ``l K J N``. Each following line is one measurement row:
    ``Re y Im y Re T0 Im T0 ... Re T(N-1) Im T(N-1)`` where ``T`` is the
    matching row of the operator.
    """
    rows, N = meas.Theta.shape
    block = np.empty((rows, 2 * (N + 1)))
    full = np.column_stack([meas.y, meas.Theta])
    block[:, 0::2] = full.real
    block[:, 1::2] = full.imag
    with open(path, "w") as fh:
        fh.write(f"{meas.l} {meas.K} {meas.J} {N}\n")
        np.savetxt(fh, block, fmt="%.17g")


def load_measurements(path):
    """Inverse of :func:`dump_measurements`; returns ``(l, K, J, y, Theta)``."""
    with open(path) as fh:
        l, K, J, N = (int(v) for v in fh.readline().split())
        block = np.loadtxt(fh, ndmin=2).reshape(K * J, 2 * (N + 1))
    full = block[:, 0::2] + 1j * block[:, 1::2]
    return l, K, J, full[:, 0], full[:, 1:]
