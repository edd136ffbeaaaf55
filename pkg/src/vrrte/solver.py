"""Coupled source iteration: sources from moments, moments from kernels,
temperature from radiative equilibrium.

The update can run in two equivalent polarization bases:

* ``"iq"``: total intensity I and linear-polarization difference Q, the
  form used for output moments;
* ``"ilir"``: the component intensities I_l, I_r, in which the interface
  operators are diagonal and every kernel and source is nonnegative, which
  is what makes the iteration monotone.

Both produce identical moments up to roundoff; the basis switch exists so
that equivalence is testable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .characteristics import SNELL, angular_rule_for
from .grids import AltitudeGrid
from .kernels import MOMENT_ORDERS, KernelTables
from .medium import Medium
from .spectral import FrequencyGrid, invert_planck_mean, kelvin_to_rescaled, planck

_SLACK = 1e-12


@dataclass(frozen=True)
class BoundaryData:
    """Unpolarized boundary radiances, linear in the cosine.

    The inflow at the bottom is mu * c_bottom * B(nu, t_bottom) and at the
    top mu * c_top * B(nu, t_top), with rescaled temperatures.
    """

    c_bottom: float = 0.0
    t_bottom: float = 0.0
    c_top: float = 0.0
    t_top: float = 0.0


@dataclass
class SourceField:
    """mu-decomposed volume sources: S = i0 + mu^2 i2 for the intensity
    equation and S' = q0 + mu^2 q2 for the polarization equation."""

    i0: np.ndarray
    i2: np.ndarray
    q0: np.ndarray
    q2: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "SourceField":
        return cls(*(np.zeros(shape) for _ in range(4)))


@dataclass
class MomentField:
    """Directional moments per (z-node, frequency-node):
    j_k = 1/2 integral mu^k I dmu, k_k = 1/2 integral mu^k Q dmu."""

    j0: np.ndarray
    j2: np.ndarray
    k0: np.ndarray
    k2: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "MomentField":
        return cls(*(np.zeros(shape) for _ in range(4)))

    def bounds_ok(self, tol: float = 1e-9) -> bool:
        scale = max(float(np.max(self.j0)), 1e-300)
        return bool(np.all(self.j0 >= -tol * scale)
                    and np.all(self.j2 <= self.j0 + tol * scale)
                    and np.all(np.abs(self.k0) <= self.j0 + tol * scale))


@dataclass
class TransportModel:
    """Grid, medium, kernels and precomputed per-(z, nu) coefficients."""

    grid: AltitudeGrid
    medium: Medium
    freq: FrequencyGrid
    boundary: BoundaryData
    tables: KernelTables
    kappa_bar_nu: np.ndarray   # (nnu,)
    kappa_s: np.ndarray        # (nz, nnu)
    kappa_a: np.ndarray        # (nz, nnu)

    @classmethod
    def assemble(cls, medium: Medium, boundary: BoundaryData,
                 n_z: int = 100, freq: FrequencyGrid | None = None,
                 levels: np.ndarray | None = None, n_mu: int = 64,
                 fresnel_on: bool = True, convention: str = SNELL,
                 cache_path=None) -> "TransportModel":
        profile = medium.profile
        grid = AltitudeGrid.build(profile.y_interface, profile.z_top, n_z,
                                  extra_breaks=medium.rho.breaks)
        if freq is None:
            freq = FrequencyGrid.build()
        kappa_bar_nu = medium.kappa_bar_at(freq.nodes)
        rho_nodes = np.where(
            grid.above,
            medium.rho.value_at(np.nextafter(grid.z, np.inf)),
            medium.rho.value_at(np.nextafter(grid.z, -np.inf)))
        kappa = rho_nodes[:, None] * kappa_bar_nu[None, :]
        albedo = np.stack([medium.scattering_albedo(float(z), freq.nodes)
                           for z in grid.z])
        if np.any(albedo >= 1.0):
            raise ValueError("scattering albedo must stay below 1")
        rule = angular_rule_for(profile, n_mu)
        tables = KernelTables.build(grid, profile, medium.rho, levels=levels,
                                    rule=rule, convention=convention,
                                    fresnel_on=fresnel_on)
        if cache_path is not None:
            if not tables.load_cached(cache_path):
                tables.save(cache_path)
        return cls(grid, medium, freq, boundary, tables, kappa_bar_nu,
                   kappa * albedo, kappa * (1.0 - albedo))

    def boundary_planck(self) -> tuple[np.ndarray, np.ndarray]:
        """c * B(nu, T) factors of the two boundary data on the nu grid."""
        b = self.boundary
        bot = b.c_bottom * planck(self.freq.nodes, b.t_bottom) if b.c_bottom else np.zeros(self.freq.size)
        top = b.c_top * planck(self.freq.nodes, b.t_top) if b.c_top else np.zeros(self.freq.size)
        return bot, top


def build_sources(moments: MomentField, temps: np.ndarray, model: TransportModel) -> SourceField:
    """Pointwise volume sources from the current moments and temperature.

    The anisotropic strength h collects the Rayleigh coupling of the four
    moments; its split over the four components follows from expanding the
    second Legendre polynomial in the scattering integrals.
    """
    emission = np.stack([planck(model.freq.nodes, float(t)) for t in temps])
    h = (9.0 * model.medium.beta / 8.0) * model.kappa_s * (
        moments.j2 - moments.j0 / 3.0 - moments.k0 + moments.k2)
    i0 = model.kappa_a * emission + model.kappa_s * moments.j0 - h / 3.0
    return SourceField(i0=i0, i2=h, q0=-h, q2=h)


def sources_lr_reference(moments: MomentField, temps: np.ndarray,
                         model: TransportModel) -> tuple:
    """Component-basis sources derived directly from the scattering kernels.

    Independent of build_sources' Legendre split; used to pin the algebra:
    (i0 +/- q0)/2 and (i2 +/- q2)/2 must reproduce these exactly.
    """
    emission = np.stack([planck(model.freq.nodes, float(t)) for t in temps])
    jl0 = 0.5 * (moments.j0 + moments.k0)
    jl2 = 0.5 * (moments.j2 + moments.k2)
    jr0 = 0.5 * (moments.j0 - moments.k0)
    jr2 = 0.5 * (moments.j2 - moments.k2)
    beta, ks = model.medium.beta, model.kappa_s
    iso = (1.0 - beta) * ks * 0.5 * (2.0 * jl0 + 2.0 * jr0)
    emit = 0.5 * model.kappa_a * emission
    sl0 = (3.0 * beta * ks / 8.0) * 4.0 * (jl0 - jl2) + iso + emit
    sl2 = (3.0 * beta * ks / 8.0) * (-4.0 * (jl0 - jl2) + 2.0 * jl2 + 2.0 * jr0)
    sr0 = (3.0 * beta * ks / 8.0) * (2.0 * jl2 + 2.0 * jr0) + iso + emit
    sr2 = np.zeros_like(sl2)
    return sl0, sl2, sr0, sr2


def update_moments(sources: SourceField, model: TransportModel,
                   basis: str = "iq") -> MomentField:
    """One transport solve: moments from frozen sources and boundary data."""
    if basis not in ("iq", "ilir"):
        raise ValueError(f"unknown basis {basis!r}")
    n_z, n_nu = sources.i0.shape
    out = MomentField.zeros((n_z, n_nu))
    w = model.grid.weights
    planck_bot, planck_top = model.boundary_planck()

    for iv in range(n_nu):
        ks = model.tables.at(float(model.kappa_bar_nu[iv]))
        cb, ct = planck_bot[iv], planck_top[iv]
        if basis == "ilir":
            s0 = {"l": 0.5 * (sources.i0[:, iv] + sources.q0[:, iv]),
                  "r": 0.5 * (sources.i0[:, iv] - sources.q0[:, iv])}
            s2 = {"l": 0.5 * (sources.i2[:, iv] + sources.q2[:, iv]),
                  "r": 0.5 * (sources.i2[:, iv] - sources.q2[:, iv])}
            for k in MOMENT_ORDERS:
                j_pol = {}
                for pol in "lr":
                    val = 0.5 * (ks.combined(pol, k, -1) @ (w * s0[pol])
                                 + ks.combined(pol, k, 1) @ (w * s2[pol]))
                    val += 0.25 * (ks.bdir[("e", k)] * cb + ks.bdir[("s", k)] * ct)
                    val += 0.25 * (ks.alpha[("e", pol, k)] * cb
                                   + ks.alpha[("s", pol, k)] * ct)
                    j_pol[pol] = val
                _store(out, k, iv, j_pol["l"] + j_pol["r"], j_pol["l"] - j_pol["r"])
        else:
            si0, si2 = sources.i0[:, iv], sources.i2[:, iv]
            sq0, sq2 = sources.q0[:, iv], sources.q2[:, iv]
            for k in MOMENT_ORDERS:
                z_sum = {}
                z_dif = {}
                for j in (-1, 1):
                    zl, zr = ks.zk[("l", k, j)], ks.zk[("r", k, j)]
                    z_sum[j] = 0.5 * (zl + zr)
                    z_dif[j] = 0.5 * (zl - zr)
                a1 = {b: 0.5 * (ks.alpha[(b, "l", k)] + ks.alpha[(b, "r", k)]) for b in "es"}
                a2 = {b: 0.5 * (ks.alpha[(b, "l", k)] - ks.alpha[(b, "r", k)]) for b in "es"}
                jv = 0.5 * ((ks.psi[(k, -1)] + z_sum[-1]) @ (w * si0)
                            + z_dif[-1] @ (w * sq0)
                            + (ks.psi[(k, 1)] + z_sum[1]) @ (w * si2)
                            + z_dif[1] @ (w * sq2))
                jv += 0.5 * (ks.bdir[("e", k)] * cb + ks.bdir[("s", k)] * ct)
                jv += 0.5 * (a1["e"] * cb + a1["s"] * ct)
                kv = 0.5 * ((ks.psi[(k, -1)] + z_sum[-1]) @ (w * sq0)
                            + z_dif[-1] @ (w * si0)
                            + (ks.psi[(k, 1)] + z_sum[1]) @ (w * sq2)
                            + z_dif[1] @ (w * si2))
                kv += 0.5 * (a2["e"] * cb + a2["s"] * ct)
                _store(out, k, iv, jv, kv)
    return out


def _store(out: MomentField, k: int, iv: int, j_val: np.ndarray, k_val: np.ndarray) -> None:
    if k == 0:
        out.j0[:, iv], out.k0[:, iv] = j_val, k_val
    else:
        out.j2[:, iv], out.k2[:, iv] = j_val, k_val


def temperature_update(moments: MomentField, model: TransportModel,
                       rtol: float = 1e-10) -> np.ndarray:
    """Node-wise radiative equilibrium: T balancing emission against j0."""
    temps = np.empty(model.grid.size)
    for i in range(model.grid.size):
        target = model.freq.integrate(model.kappa_a[i] * moments.j0[i])
        temps[i] = invert_planck_mean(max(target, 0.0), model.kappa_a[i],
                                      model.freq, rtol=rtol)
    return temps


def equilibrium_residual(moments: MomentField, temps: np.ndarray,
                         model: TransportModel) -> float:
    """max_z |integral kappa_a (B - j0) dnu| relative to the emission integral."""
    worst = 0.0
    for i in range(model.grid.size):
        emit = model.freq.integrate(model.kappa_a[i] * planck(model.freq.nodes, float(temps[i])))
        absorb = model.freq.integrate(model.kappa_a[i] * moments.j0[i])
        if emit > 0.0:
            worst = max(worst, abs(emit - absorb) / emit)
    return worst


@dataclass
class IterationRecord:
    iteration: int
    sup_delta_t: float
    probe_t: float
    t_monotone: bool
    j0_monotone: bool
    bounds_ok: bool


@dataclass
class RunResult:
    mode: str
    basis: str
    converged: bool
    temperature: np.ndarray
    moments: MomentField
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.records)

    def probe_series(self) -> np.ndarray:
        return np.array([r.probe_t for r in self.records])


def probe_temperature(grid: AltitudeGrid, temps: np.ndarray, probe_z: float) -> float:
    """Temperature interpolated at the probe altitude, on the probe's side."""
    side = grid.above if probe_z > grid.y_interface else grid.below
    return float(np.interp(probe_z, grid.z[side], temps[side]))


def run_source_iteration(model: TransportModel, mode: str = "up",
                         tol: float = 1e-4, max_iter: int = 50,
                         basis: str = "iq", probe_z: float = 0.03,
                         hot_start_kelvin: float = 453.15,
                         down_init: str = "emission") -> RunResult:
    """Iterate sources -> transport -> equilibrium until sup|dT| < tol.

    mode "up" starts from zero temperature and zero radiation (monotone
    nondecreasing iterates); mode "down" starts from a hot uniform state
    (nonincreasing when the start dominates the solution).  Monotonicity is
    recorded per iteration as a diagnostic, not enforced.
    """
    if mode not in ("up", "down"):
        raise ValueError(f"unknown mode {mode!r}")
    shape = (model.grid.size, model.freq.size)
    if mode == "up":
        temps = np.zeros(model.grid.size)
        moments = MomentField.zeros(shape)
    else:
        temps = np.full(model.grid.size, kelvin_to_rescaled(hot_start_kelvin))
        if down_init == "emission":
            sweep = build_sources(MomentField.zeros(shape), temps, model)
            moments = update_moments(sweep, model, basis)
        elif down_init == "blackbody":
            emission = np.stack([planck(model.freq.nodes, float(t)) for t in temps])
            moments = MomentField(j0=emission, j2=emission / 3.0,
                                  k0=np.zeros(shape), k2=np.zeros(shape))
        else:
            raise ValueError(f"unknown down_init {down_init!r}")

    sign = 1.0 if mode == "up" else -1.0
    records: list[IterationRecord] = []
    converged = False
    for n in range(1, max_iter + 1):
        sources = build_sources(moments, temps, model)
        new_moments = update_moments(sources, model, basis)
        new_temps = temperature_update(new_moments, model)
        slack = _SLACK * max(1.0, float(np.max(np.abs(new_temps))))
        t_mono = bool(np.all(sign * (new_temps - temps) >= -slack))
        j_mono = bool(np.all(sign * (new_moments.j0 - moments.j0)
                             >= -_SLACK * max(1.0, float(np.max(new_moments.j0)))))
        delta = float(np.max(np.abs(new_temps - temps)))
        temps, moments = new_temps, new_moments
        records.append(IterationRecord(n, delta, probe_temperature(model.grid, temps, probe_z),
                                       t_mono, j_mono, moments.bounds_ok()))
        if delta < tol:
            converged = True
            break
    return RunResult(mode, basis, converged, temps, moments, records)
