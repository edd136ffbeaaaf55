"""Command line entry point: run a scenario and write the CSV bundle.

Outputs (all deterministic for a given config):

* ``temperature.csv``   altitude profile of the converged temperature
* ``imean_bottom.csv``  spectral moments at the bottom node (scaled columns)
* ``imean_top.csv``     spectral moments at the top node
* ``convergence.csv``   per-iteration probe temperature and sup-norm steps
* ``manifest.txt``      resolved config echo plus convergence status

Exit codes: 0 converged, 1 configuration error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, ScenarioConfig
from .solver import (RunResult, TransportModel, equilibrium_residual,
                     run_source_iteration)
from .spectral import rescaled_to_celsius, rescaled_to_kelvin

log = logging.getLogger(__name__)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    model: TransportModel
    runs: dict
    residual: float

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.runs.values())

    def primary(self) -> RunResult:
        return self.runs.get("up", next(iter(self.runs.values())))


def build_model(cfg: ScenarioConfig) -> TransportModel:
    return TransportModel.assemble(
        medium=cfgmod.medium_from_config(cfg),
        boundary=cfgmod.boundary_from_config(cfg),
        n_z=cfg.n_z,
        freq=cfgmod.frequency_grid_from_config(cfg),
        levels=cfgmod.levels_from_config(cfg),
        n_mu=cfg.n_mu,
        fresnel_on=cfg.fresnel,
    )


def run_scenario(cfg: ScenarioConfig, model: TransportModel | None = None) -> ScenarioResult:
    cfg.validate()
    if model is None:
        model = build_model(cfg)
    modes = ("up", "down") if cfg.mode == "both" else (cfg.mode,)
    runs = {}
    for mode in modes:
        runs[mode] = run_source_iteration(
            model, mode=mode, tol=cfg.tol, max_iter=cfg.max_iter, basis=cfg.basis,
            probe_z=cfgmod.probe_altitude_units(cfg),
            hot_start_kelvin=cfgmod.hot_start_kelvin(cfg),
            down_init=cfg.down_init)
    primary = runs.get("up", runs[modes[0]])
    residual = equilibrium_residual(primary.moments, primary.temperature, model)
    return ScenarioResult(cfg, model, runs, residual)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_outputs(result: ScenarioResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, cfg = result.model, result.config
    run = result.primary()
    written = []

    path = out / "temperature.csv"
    with path.open("w", encoding="utf-8") as fh:
        fh.write("z_10km,side,T_rescaled,T_kelvin,T_celsius\n")
        for z, above, t in zip(model.grid.z, model.grid.above, run.temperature):
            fh.write(f"{_fmt(z)},{'above' if above else 'below'},"
                     f"{_fmt(t)},{_fmt(float(rescaled_to_kelvin(t)))},"
                     f"{_fmt(float(rescaled_to_celsius(t)))}\n")
    written.append(path)

    wavelengths = 3.0 / model.freq.nodes
    order = np.argsort(wavelengths)
    for name, node in (("imean_bottom.csv", 0), ("imean_top.csv", model.grid.size - 1)):
        path = out / name
        with path.open("w", encoding="utf-8") as fh:
            fh.write("wavelength_um,J0_x1e5,K0_x1e7\n")
            for idx in order:
                fh.write(f"{_fmt(wavelengths[idx])},"
                         f"{_fmt(1e5 * run.moments.j0[node, idx])},"
                         f"{_fmt(1e7 * run.moments.k0[node, idx])}\n")
        written.append(path)

    path = out / "convergence.csv"
    with path.open("w", encoding="utf-8") as fh:
        modes = list(result.runs)
        head = ["iteration"]
        for mode in modes:
            head += [f"probe_T_celsius_{mode}", f"max_dT_{mode}", f"monotone_{mode}"]
        fh.write(",".join(head) + "\n")
        depth = max((r.iterations for r in result.runs.values()), default=0)
        for i in range(depth):
            row = [str(i + 1)]
            for mode in modes:
                recs = result.runs[mode].records
                if i < len(recs):
                    r = recs[i]
                    row += [_fmt(float(rescaled_to_celsius(r.probe_t))),
                            _fmt(r.sup_delta_t), str(r.t_monotone).lower()]
                else:
                    row += ["", "", ""]
            fh.write(",".join(row) + "\n")
    written.append(path)

    path = out / "manifest.txt"
    with path.open("w", encoding="utf-8") as fh:
        fh.write(cfgmod.echo_config(cfg) + "\n")
        for mode, r in result.runs.items():
            fh.write(f"converged_{mode} = {str(r.converged).lower()}\n")
            fh.write(f"iterations_{mode} = {r.iterations}\n")
        fh.write(f"thermal_residual = {_fmt(result.residual)}\n")
        fh.write(f"status = {'ok' if result.converged else 'failed'}\n")
    written.append(path)
    return written


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vrrte",
        description="Stratified polarized radiative transfer with a refractive interface")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--preset", help="scenario preset (case1, case2, water_air, custom)")
    p.add_argument("--set", dest="assignments", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--fresnel", choices=("on", "off"),
                   help="interface jump conditions on or off")
    p.add_argument("--mode", choices=("up", "down", "both"),
                   help="iteration direction")
    return p


def resolve_config(args) -> ScenarioConfig:
    cfg = cfgmod.from_preset(args.preset) if args.preset else ScenarioConfig()
    if args.config:
        cfg = cfgmod.parse_config_file(args.config, base=cfg)
    pairs = []
    for item in args.assignments:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        pairs.append((key.strip(), raw))
    cfg = cfgmod.apply_assignments(cfg, pairs)
    if args.fresnel:
        cfg = cfgmod.apply_assignments(cfg, [("fresnel", args.fresnel)])
    if args.mode:
        cfg = cfgmod.apply_assignments(cfg, [("mode", args.mode)])
    return cfg.validate()


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    result = run_scenario(cfg)
    write_outputs(result, args.out)
    for mode, run in result.runs.items():
        status = "converged" if run.converged else "did not converge"
        print(f"{mode}: {status} after {run.iterations} iterations; "
              f"probe T = {rescaled_to_celsius(run.records[-1].probe_t):.3f} C")
    print(f"thermal residual: {result.residual:.3e}")
    print(f"outputs written to {Path(args.out).resolve()}")
    return 0 if result.converged else 2


if __name__ == "__main__":
    sys.exit(main())
