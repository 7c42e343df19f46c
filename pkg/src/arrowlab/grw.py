"""Stochastic position-collapse dynamics on a 1-D lattice.

N distinguishable particles on M sites evolve unitarily under a
tight-binding Hamiltonian; between unitary steps each particle is hit,
with a fixed per-step probability, by a Gaussian position localizer whose
center is drawn by the Born rule. Hits multiply amplitudes and renormalize,
so they are not unitary: a forward run plus its exact mirror (inverse
unitaries, logged hits re-applied in reverse order) generally fails to
reproduce the initial state. That fidelity loss is the quantity of
interest.

Width convention: a hit centered at a multiplies amplitudes by
exp(-(x-a)^2 / (4*width)), so the induced probability density carries
exp(-(x-a)^2 / (2*width)) and has variance `width` in site units.

Two storage modes: `product` keeps N independent M-vectors (non-interacting
particles, scales to large N); `entangled` keeps the full M**N array below
a hard amplitude cap.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .rng import RngStream

ENTANGLED_AMPLITUDE_CAP = 1 << 24

PRODUCT = "product"
ENTANGLED = "entangled"


@dataclass(frozen=True)
class GrwParams:
    """Per-particle per-step hit probability and Gaussian width (variance)."""

    hit_prob: float
    gaussian_width: float

    def __post_init__(self):
        if not 0.0 <= self.hit_prob <= 1.0:
            raise DomainError("hit probability must lie in [0, 1]")
        if self.gaussian_width <= 0.0:
            raise DomainError("gaussian width must be positive")


@dataclass(frozen=True)
class HitEvent:
    step: int
    particle: int
    center: int


@dataclass
class LatticeHamiltonian:
    """Nearest-neighbor hopping plus an on-site potential; Hermitian."""

    hopping: float
    potential: np.ndarray
    boundary: str = "open"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.potential = np.asarray(self.potential, dtype=float)
        if self.potential.ndim != 1:
            raise DomainError("potential must be a 1-D array")
        if self.boundary not in ("open", "periodic"):
            raise DomainError(f"unknown boundary {self.boundary!r}")

    @classmethod
    def free(cls, n_sites: int, hopping: float = 1.0,
             boundary: str = "open") -> "LatticeHamiltonian":
        return cls(hopping=hopping, potential=np.zeros(n_sites),
                   boundary=boundary)

    @property
    def n_sites(self) -> int:
        return self.potential.size

    def matrix(self) -> np.ndarray:
        m = self.n_sites
        h = np.diag(self.potential.astype(float))
        for i in range(m - 1):
            h[i, i + 1] = h[i + 1, i] = -self.hopping
        if self.boundary == "periodic" and m > 2:
            h[0, m - 1] = h[m - 1, 0] = -self.hopping
        return h

    def propagator(self, dt: float) -> np.ndarray:
        """Dense exp(-i H dt), exact via eigendecomposition; cached per dt."""
        u = self._cache.get(dt)
        if u is None:
            w, q = np.linalg.eigh(self.matrix())
            u = (q * np.exp(-1j * w * dt)) @ q.conj().T
            self._cache[dt] = u
        return u


class WaveFunction:
    """Complex amplitudes for N particles on M sites, unit norm."""

    def __init__(self, amplitudes: np.ndarray, mode: str,
                 n_particles: int, n_sites: int):
        if mode not in (PRODUCT, ENTANGLED):
            raise DomainError(f"unknown mode {mode!r}")
        self.amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        self.mode = mode
        self.n_particles = n_particles
        self.n_sites = n_sites
        if mode == PRODUCT:
            if self.amplitudes.shape != (n_particles, n_sites):
                raise DomainError("product amplitudes must have shape (N, M)")
        else:
            if self.amplitudes.shape != (n_sites,) * n_particles:
                raise DomainError("entangled amplitudes must have shape (M,)*N")

    @classmethod
    def from_vectors(cls, vectors: np.ndarray) -> "WaveFunction":
        """Product state from per-particle vectors, normalized per particle."""
        v = np.asarray(vectors, dtype=np.complex128)
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise DomainError("zero-norm particle vector")
        return cls(v / norms, PRODUCT, v.shape[0], v.shape[1])

    @classmethod
    def entangled_from_array(cls, array: np.ndarray) -> "WaveFunction":
        a = np.asarray(array, dtype=np.complex128)
        n = a.ndim
        m = a.shape[0]
        if a.size > ENTANGLED_AMPLITUDE_CAP:
            raise DomainError(
                f"entangled state needs {a.size} amplitudes, above the cap "
                f"{ENTANGLED_AMPLITUDE_CAP}; use product mode for this size")
        norm = np.linalg.norm(a)
        if norm == 0:
            raise DomainError("zero-norm state")
        return cls(a / norm, ENTANGLED, n, m)

    def norm(self) -> float:
        if self.mode == PRODUCT:
            return float(np.prod(np.linalg.norm(self.amplitudes, axis=1)))
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.amplitudes.copy(), self.mode,
                            self.n_particles, self.n_sites)


def init_gas(n: int, m: int, occupied_region: tuple[int, int],
             mode: str = PRODUCT) -> WaveFunction:
    """Each particle in a uniform superposition over [start, stop) sites."""
    start, stop = occupied_region
    if not (0 <= start < stop <= m):
        raise DomainError("occupied region must be a nonempty site range")
    if mode == ENTANGLED and m**n > ENTANGLED_AMPLITUDE_CAP:
        raise DomainError(
            f"entangled mode needs {m**n} amplitudes, above the cap "
            f"{ENTANGLED_AMPLITUDE_CAP}; use product mode instead")
    v = np.zeros(m, dtype=np.complex128)
    v[start:stop] = 1.0 / np.sqrt(stop - start)
    if mode == PRODUCT:
        return WaveFunction(np.tile(v, (n, 1)), PRODUCT, n, m)
    full = v
    for _ in range(n - 1):
        full = np.tensordot(full, v, axes=0)
    return WaveFunction(full.reshape((m,) * n), ENTANGLED, n, m)


def _check_particle(psi: WaveFunction, k: int) -> None:
    if not 0 <= k < psi.n_particles:
        raise DomainError(f"particle index {k} out of range")


def _apply_matrix_axis(array: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(array, axis, 0)
    out = np.tensordot(mat, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def unitary_step(psi: WaveFunction, h: LatticeHamiltonian,
                 dt: float) -> WaveFunction:
    """One exact unitary step exp(-i H dt), applied per particle."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    if h.n_sites != psi.n_sites:
        raise DomainError("Hamiltonian size does not match the lattice")
    u = h.propagator(dt)
    if psi.mode == PRODUCT:
        amps = psi.amplitudes @ u.T
    else:
        amps = psi.amplitudes
        for axis in range(psi.n_particles):
            amps = _apply_matrix_axis(amps, u, axis)
    return WaveFunction(amps, psi.mode, psi.n_particles, psi.n_sites)


def position_marginal(psi: WaveFunction, k: int) -> np.ndarray:
    """|amplitude|^2 of particle k, summed over all other coordinates."""
    _check_particle(psi, k)
    if psi.mode == PRODUCT:
        v = psi.amplitudes[k]
        p = (v.real**2 + v.imag**2)
    else:
        dens = (psi.amplitudes.real**2 + psi.amplitudes.imag**2)
        axes = tuple(i for i in range(psi.n_particles) if i != k)
        p = dens.sum(axis=axes) if axes else dens
    return p / p.sum()


@lru_cache(maxsize=32)
def _amplitude_gaussians(m: int, width: float) -> np.ndarray:
    """Row a holds exp(-(x-a)^2 / (4*width)) over sites x."""
    x = np.arange(m, dtype=float)
    d = x[None, :] - x[:, None]
    return np.exp(-(d * d) / (4.0 * width))


@lru_cache(maxsize=32)
def _born_weights(m: int, width: float) -> np.ndarray:
    g = _amplitude_gaussians(m, width)
    return g * g


def hit_center_distribution(psi: WaveFunction, k: int,
                            delta: float) -> np.ndarray:
    """Born weights over candidate centers: P(a) ~ ||G_a psi||^2."""
    _check_particle(psi, k)
    if delta <= 0:
        raise DomainError("gaussian width must be positive")
    weights = _born_weights(psi.n_sites, float(delta)) @ position_marginal(psi, k)
    total = weights.sum()
    if total <= 0:
        raise DomainError("hit distribution has zero mass")
    return weights / total


def apply_hit(psi: WaveFunction, k: int, a: int, delta: float) -> WaveFunction:
    """Multiply by the Gaussian centered at site a in coordinate k, renormalize.

    Renormalization fixes the Gaussian's prefactor implicitly. Amplitudes
    away from the center are attenuated, never zeroed (floating-point
    underflow aside), so every post-hit state keeps its tails.
    """
    _check_particle(psi, k)
    if not 0 <= a < psi.n_sites:
        raise DomainError(f"hit center {a} out of range")
    g = _amplitude_gaussians(psi.n_sites, float(delta))[a]
    if psi.mode == PRODUCT:
        amps = psi.amplitudes.copy()
        v = amps[k] * g
        amps[k] = v / np.linalg.norm(v)
    else:
        shape = [1] * psi.n_particles
        shape[k] = psi.n_sites
        amps = psi.amplitudes * g.reshape(shape)
        amps = amps / np.linalg.norm(amps)
    return WaveFunction(amps, psi.mode, psi.n_particles, psi.n_sites)


def maybe_hit(psi: WaveFunction, params: GrwParams, step: int,
              rng: RngStream) -> tuple[WaveFunction, list[HitEvent]]:
    """Bernoulli hit per particle; centers drawn by the Born rule.

    Draw order is fixed: one uniform per particle up front, then one
    uniform per realized hit, in particle order.
    """
    u = rng.uniforms(psi.n_particles)
    events: list[HitEvent] = []
    out = psi
    for k in range(psi.n_particles):
        if u[k] < params.hit_prob:
            dist = hit_center_distribution(out, k, params.gaussian_width)
            a = rng.categorical(dist)
            out = apply_hit(out, k, a, params.gaussian_width)
            events.append(HitEvent(step=step, particle=k, center=a))
    return out, events


def marginal_entropy_total(psi: WaveFunction) -> float:
    """Sum over particles of the Shannon entropy of the position marginal."""
    total = 0.0
    for k in range(psi.n_particles):
        p = position_marginal(psi, k)
        p = p[p > 1e-300]
        total -= float((p * np.log(p)).sum())
    return total


def energy_expectation(psi: WaveFunction, h: LatticeHamiltonian) -> float:
    """Sum over particles of <psi| H_k |psi>."""
    hm = h.matrix()
    if psi.mode == PRODUCT:
        return float(np.real(
            np.einsum("ki,ij,kj->", psi.amplitudes.conj(), hm, psi.amplitudes)))
    total = 0.0
    for k in range(psi.n_particles):
        hk = _apply_matrix_axis(psi.amplitudes, hm, k)
        total += float(np.real(np.vdot(psi.amplitudes, hk)))
    return total


@dataclass
class GrwTrajectory:
    """Per-step diagnostics of a collapse run, plus the full hit log."""

    entropy: list[float]
    energy: list[float]
    norm: list[float]
    hits_per_step: list[int]
    hit_log: list[HitEvent]
    final_psi: WaveFunction


def run(psi0: WaveFunction, h: LatticeHamiltonian, params: GrwParams,
        n_steps: int, dt: float, rng: RngStream) -> GrwTrajectory:
    """Alternate unitary steps and stochastic hits, recording diagnostics."""
    if n_steps < 0:
        raise DomainError("n_steps must be nonnegative")
    psi = psi0.copy()
    traj = GrwTrajectory(entropy=[marginal_entropy_total(psi)],
                         energy=[energy_expectation(psi, h)],
                         norm=[psi.norm()],
                         hits_per_step=[0],
                         hit_log=[],
                         final_psi=psi)
    for s in range(1, n_steps + 1):
        psi = unitary_step(psi, h, dt)
        psi, events = maybe_hit(psi, params, s, rng)
        traj.entropy.append(marginal_entropy_total(psi))
        traj.energy.append(energy_expectation(psi, h))
        traj.norm.append(psi.norm())
        traj.hits_per_step.append(len(events))
        traj.hit_log.extend(events)
    traj.final_psi = psi
    return traj


def reverse_run(final_psi: WaveFunction, h: LatticeHamiltonian, dt: float,
                hit_log: list[HitEvent], n_steps: int, params: GrwParams,
                resample_centers: bool = False,
                rng: RngStream | None = None) -> WaveFunction:
    """Mirror a forward run: inverse unitaries, hits re-applied in reverse.

    Re-applying the logged Gaussians (rather than inverting them, which is
    impossible, or resampling them) isolates the non-unitarity of collapse
    as the only obstruction to recovering the initial state. With
    `resample_centers` the hit pattern is kept but each center is redrawn
    from the current state, for exploratory comparisons.
    """
    if any(e.step < 1 or e.step > n_steps for e in hit_log):
        raise DomainError("hit log does not match the declared step count")
    if resample_centers and rng is None:
        raise DomainError("resampling hit centers requires an rng")
    u = h.propagator(dt)
    udag = u.conj().T
    by_step: dict[int, list[HitEvent]] = {}
    for e in hit_log:
        by_step.setdefault(e.step, []).append(e)
    psi = final_psi.copy()
    for s in range(n_steps, 0, -1):
        for e in reversed(by_step.get(s, [])):
            if resample_centers:
                dist = hit_center_distribution(psi, e.particle,
                                               params.gaussian_width)
                center = rng.categorical(dist)
            else:
                center = e.center
            psi = apply_hit(psi, e.particle, center, params.gaussian_width)
        if psi.mode == PRODUCT:
            amps = psi.amplitudes @ udag.T
        else:
            amps = psi.amplitudes
            for axis in range(psi.n_particles):
                amps = _apply_matrix_axis(amps, udag, axis)
        psi = WaveFunction(amps, psi.mode, psi.n_particles, psi.n_sites)
    return psi


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    """|<a|b>| for matching modes."""
    if a.mode != b.mode or a.amplitudes.shape != b.amplitudes.shape:
        raise DomainError("states are not comparable")
    if a.mode == PRODUCT:
        f = 1.0
        for k in range(a.n_particles):
            f *= abs(np.vdot(a.amplitudes[k], b.amplitudes[k]))
        return float(f)
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def write_grw_csv(traj: GrwTrajectory, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "entropy", "energy", "norm", "hits_this_step"])
        for i in range(len(traj.entropy)):
            writer.writerow([i, repr(traj.entropy[i]), repr(traj.energy[i]),
                             repr(traj.norm[i]), traj.hits_per_step[i]])


def write_hit_log_csv(hit_log: list[HitEvent], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "particle", "center"])
        for e in hit_log:
            writer.writerow([e.step, e.particle, e.center])
