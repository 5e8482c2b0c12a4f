"""``ring-noon`` command line: one subcommand per table, CSV plus JSON sidecar."""

from __future__ import annotations

import argparse
import logging
import sys
from math import pi
from pathlib import Path

import numpy as np

from . import __version__
from .basis import enumerate_basis
from .config import ConfigError, RunConfig, load_config
from .fitting import fit_line_through_origin
from .hamiltonian import DriveAmplitudeError, check_small_angle
from .io import OutputError, emit_table, write_sidecar
from .protocols import (
    DELTA_E_CONSTANT,
    QUOTED_DELTA_E_CONSTANT,
    ShotSampler,
    analytic_delta_e,
    default_readout_ramp,
    detect_noon,
    precision_measurement,
    prepare_readout,
    two_time_protocol,
)
from .spectra import (
    analytic_noon_coupling,
    coupling_sweep,
    gap,
    gap_sweep,
    ground_state,
    ground_state_distribution,
    noon_fidelity,
    single_particle_superposition_score,
    solve,
)
from .validate import validate_suite

log = logging.getLogger("ring_noon")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


class _Stage:
    """Names the running step so a failure can be reported against it."""

    def __init__(self):
        self.name = "setup"

    def __call__(self, name: str):
        self.name = name
        log.info("stage: %s", name)


def _constants() -> dict:
    return {
        "delta_E_constant": DELTA_E_CONSTANT,
        "quoted_delta_E_constant": QUOTED_DELTA_E_CONSTANT,
        "delta_E_convention": "E_0N0 - E_00N = c N (J - dJ/3) sin(dOmega/3)",
        "coupling_V01_at_pi": "N (J - dJ/3) A / sqrt(3)",
        "quoted_coupling_V01_at_pi": "2 N (J - dJ/3) A / sqrt(3)",
        "coupling_ratio_quoted_over_settled": 2.0,
        "delta_eps_convention": "half of the Omega=pi gap",
    }


def _omega_grid(cfg: RunConfig) -> np.ndarray:
    g = cfg.grids.omega
    return np.linspace(0, 2 * pi, 201) if g is None else np.asarray(g)


def _sampler(cfg: RunConfig):
    s = cfg.sampling
    return None if s.shots is None else ShotSampler(s.shots, s.seed)


# -- subcommands -------------------------------------------------------------
# each returns ([(suffix, schema, rows)], payload)


def run_groundstate(cfg, stage):
    p = cfg.model_params()
    stage("diagonalise")
    dist = ground_state_distribution(p)
    psi = ground_state(p)
    rows = [
        (rank, s.label(), s.n_minus, s.n_zero, s.n_plus, prob)
        for rank, (s, prob) in enumerate(dist)
    ]
    a, b = dist[0][1], dist[1][1] if len(dist) > 1 else 0.0
    payload = {
        "derived": {
            "noon_fidelity": noon_fidelity(psi),
            "single_particle_score": single_particle_superposition_score(psi),
            "top_two_weight": a + b,
            "top_two_difference": abs(a - b),
        }
    }
    schema = ["rank", "state", "n_minus", "n_zero", "n_plus", "probability"]
    return [("", schema, rows)], payload


def run_energies(cfg, stage):
    p = cfg.model_params()
    grid = _omega_grid(cfg)
    b = enumerate_basis(p.N)
    k = min(cfg.grids.levels, b.dimension)
    stage("diagonalise")
    rows = []
    for om in grid:
        res = solve(p.at(om), k, b, method=cfg.solver.eig_method)
        rows.append([float(om)] + [float(e) for e in res.eigenvalues[:k]])
    schema = ["omega"] + [f"E{i}" for i in range(k)]
    return [("", schema, rows)], {"resolved_grids": {"omega": grid}}


def run_gap_sweep(cfg, stage):
    p = cfg.model_params()
    grid = _omega_grid(cfg)
    stage("gap sweep")
    gaps = gap_sweep(p, grid)
    rows = [(g.omega_phase, g.E0, g.E1, g.delta_E, g.half_gap, g.degenerate) for g in gaps]
    values = np.array([g.delta_E for g in gaps])
    i = int(np.argmin(values))
    payload = {
        "resolved_grids": {"omega": grid},
        "derived": {
            "min_gap": float(values[i]),
            "min_gap_omega": float(grid[i]),
            "min_gap_degenerate": gaps[i].degenerate,
        },
    }
    schema = ["omega", "E0", "E1", "delta_E", "half_gap", "degenerate"]
    return [("", schema, rows)], payload


def run_coupling_sweep(cfg, stage):
    p = cfg.model_params()
    A = cfg.drive.amplitude
    check_small_angle(A, cfg.drive.small_angle_bound)
    grid = _omega_grid(cfg)
    N_list = cfg.grids.N_list or (p.N,)
    stage("coupling sweep")
    sweep = coupling_sweep(p, A, grid, N_list)
    rows = [
        (N, float(om), float(c))
        for N, row in zip(sweep.N_list, sweep.coupling)
        for om, c in zip(grid, row)
    ]
    scaling = [
        (N, float(c), analytic_noon_coupling(N, p.J, p.delta_J, A))
        for N, c in zip(sweep.N_list, sweep.coupling_at_pi)
    ]
    derived = {}
    if len(N_list) >= 2:
        fit = fit_line_through_origin(sweep.N_list, sweep.coupling_at_pi)
        derived.update(slope=fit.slope, r2=fit.r2)
    try:
        derived["flank_ratio"] = (sweep.coupling_at_pi / sweep.flank_coupling(0.1)).tolist()
    except ValueError:
        pass
    payload = {"resolved_grids": {"omega": grid, "N_list": list(N_list)}, "derived": derived}
    return [
        ("", ["N", "omega", "coupling"], rows),
        ("_scaling", ["N", "coupling_at_pi", "ideal_noon_coupling"], scaling),
    ], payload


def _readout_schedule(cfg, p, side, stage):
    stage("readout point")
    r = cfg.ramp
    sched = default_readout_ramp(p, side, r.readout_threshold, r.factor, r.shape)
    if r.duration is not None:
        sched = type(sched)(sched.omega_start, sched.omega_end, r.duration, sched.shape)
    return sched


def run_resonance_scan(cfg, stage):
    p = cfg.model_params()
    A = cfg.drive.amplitude
    check_small_angle(A, cfg.drive.small_angle_bound)
    b = enumerate_basis(p.N)
    stage("spectrum")
    spec = solve(p, 2, b)
    g = float(spec.eigenvalues[1] - spec.eigenvalues[0])
    omegas = cfg.grids.drive_omega
    if omegas is None:
        if g <= 0:
            raise ValueError("gap is zero; give grids.drive_omega explicitly")
        omegas = np.linspace(0.8 * g, 1.2 * g, 41)
    times = cfg.grids.t
    if times is None:
        from .effective import project_effective

        V01 = abs(project_effective(p, A, g if g > 0 else 1.0, b).V01)
        span = 1.5 * 2 * pi / V01 if V01 > 0 else 100.0
        times = np.linspace(0, span, 121)
    ramp = None
    if cfg.ramp.readout:
        side = 1 if p.omega_phase > pi + 1e-12 else -1
        ramp = _readout_schedule(cfg, p, side, stage)
    stage("driven propagation")
    rep = detect_noon(
        p, A, omegas, times, readout_ramp=ramp,
        readout_threshold=cfg.ramp.readout_threshold,
        detection_threshold=cfg.protocol.detection_threshold,
        fit_rms_bound=cfg.protocol.fit_rms_bound,
        dt_max=cfg.solver.dt_max, tolerance=cfg.solver.tolerance,
        method=cfg.solver.method, sampler=_sampler(cfg), basis=b,
    )
    obs = rep.observables
    keys = ["transfer", "depletion"] + (["P_0N0", "P_00N"] if "P_0N0" in obs else [])
    rows = [
        [float(w), float(t)] + [float(obs[k][i, j]) for k in keys]
        for i, w in enumerate(omegas)
        for j, t in enumerate(times)
    ]
    payload = {
        "resolved_grids": {"drive_omega": omegas, "t": times},
        "derived": rep.derived,
        "fits": rep.fits,
        "protocol_metadata": rep.metadata,
    }
    return [("", ["drive_omega", "t"] + keys, rows)], payload


def run_precision(cfg, stage):
    p = cfg.model_params()
    if not p.symmetric_point:
        raise ConfigError("precision runs at model.omega_phase = pi")
    b = enumerate_basis(p.N)
    sched = _readout_schedule(cfg, p, -1, stage)
    stage("readout ramp")
    readout = prepare_readout(p, sched, cfg.ramp.readout_threshold, None, cfg.solver.tolerance, b)
    rows, summary, reports, grids = [], [], [], {}
    for d in cfg.grids.delta_omega or (0.1,):
        stage(f"phase accumulation (delta_omega={d:g})")
        times = cfg.grids.t
        if times is None:
            dE = abs(analytic_delta_e(p.N, p.J, p.delta_J, d))
            times = np.linspace(0, 3 * 2 * pi / dE if dE > 0 else 100.0, 91)
        grids[f"t[{d:g}]"] = times
        rep = precision_measurement(
            p, d, times, fidelity_threshold=cfg.ramp.fidelity_threshold,
            readout_threshold=cfg.ramp.readout_threshold,
            fit_rms_bound=cfg.protocol.fit_rms_bound, tolerance=cfg.solver.tolerance,
            sampler=_sampler(cfg), basis=b, readout=readout,
        )
        o = rep.observables
        rows += [(float(d), float(t), float(a), float(c))
                 for t, a, c in zip(times, o["P_0N0"], o["P_00N"])]
        dr = rep.derived
        est = dr.get("delta_omega_estimate")
        summary.append((
            float(d), dr["delta_E_fit"], dr["delta_E_exact"], dr["delta_E_analytic"],
            dr["delta_E_quoted_constant"], "" if est is None else float(est),
            float(dr.get("contrast", 0.0)),
        ))
        reports.append({"delta_omega": d, "derived": dr, "fits": rep.fits})
    payload = {
        "resolved_grids": grids,
        "runs": reports,
        "protocol_metadata": {
            "readout_ramp": {"omega_start": sched.omega_start, "omega_end": sched.omega_end,
                             "duration": sched.duration, "shape": sched.shape},
            "readout_ground_fidelity": readout.ground_fidelity,
            "readout_excited_fidelity": readout.excited_fidelity,
            "ramp_ground_overlap": readout.ramp_ground_overlap,
        },
    }
    return [
        ("", ["delta_omega", "t", "P_0N0", "P_00N"], rows),
        ("_summary", ["delta_omega", "delta_E_fit", "delta_E_exact", "delta_E_analytic",
                      "delta_E_quoted_constant", "delta_omega_estimate", "contrast"], summary),
    ], payload


def run_two_time(cfg, stage):
    p = cfg.model_params()
    if not p.symmetric_point:
        raise ConfigError("two-time runs at model.omega_phase = pi")
    op = cfg.protocol.omega_prime
    t1, t2 = cfg.grids.t1, cfg.grids.t2
    stage("spectrum")
    if t1 is None:
        dE = abs(analytic_delta_e(p.N, p.J, p.delta_J, op))
        t1 = np.linspace(0, 0.9 * 2 * pi / dE, 11)
    if t2 is None:
        g = gap(p).delta_E
        if g <= 0:
            raise ValueError("gap at pi is zero; give grids.t2 explicitly")
        t2 = np.linspace(0, 0.9 * 2 * pi / g, 11)
    stage("two-time evolution")
    rep = two_time_protocol(p, op, t1, t2, cfg.ramp.fidelity_threshold,
                            cfg.protocol.fit_rms_bound, _sampler(cfg))
    o = rep.observables
    rows = [(float(a), float(c), float(o["P_0N0"][i, j]), float(o["P_00N"][i, j]))
            for i, a in enumerate(t1) for j, c in enumerate(t2)]
    payload = {"resolved_grids": {"t1": t1, "t2": t2}, "derived": rep.derived, "fits": rep.fits}
    return [("", ["t1", "t2", "P_0N0", "P_00N"], rows)], payload


def run_validate(cfg, stage):
    stage("validation suite")
    rep = validate_suite(cfg)
    rows = [
        (c.name, c.passed, c.value if np.isfinite(c.value) else "",
         c.bound if np.isfinite(c.bound) else "", c.detail)
        for c in rep.checks
    ]
    payload = {"derived": {"passed": rep.passed,
                           "failures": [c.name for c in rep.failures()]}}
    return [("", ["check", "passed", "value", "bound", "detail"], rows)], payload


SUBCOMMANDS = {
    "groundstate": run_groundstate,
    "energies": run_energies,
    "gap-sweep": run_gap_sweep,
    "coupling-sweep": run_coupling_sweep,
    "resonance-scan": run_resonance_scan,
    "precision": run_precision,
    "two-time": run_two_time,
    "validate": run_validate,
}

_NUMERICAL = (ArithmeticError, RuntimeError, np.linalg.LinAlgError)


def run_subcommand(name: str, cfg: RunConfig, out_dir) -> tuple[int, list[Path]]:
    """Run one subcommand and write its tables; returns (exit status, files)."""
    stage = _Stage()
    tables, payload = SUBCOMMANDS[name](cfg, stage)
    stage("write output")
    out_dir = Path(out_dir)
    base = f"{cfg.output.prefix}{name}"
    files = []
    for suffix, schema, rows in tables:
        files.append(emit_table(rows, schema, out_dir / f"{base}{suffix}.csv"))
    sidecar = {
        "subcommand": name,
        "version": __version__,
        "config": cfg.to_dict(),
        "constants": _constants(),
        "outputs": [f.name for f in files],
        **payload,
    }
    files.append(write_sidecar(out_dir / f"{base}.json", sidecar))
    status = EXIT_OK
    if name == "validate" and not payload["derived"]["passed"]:
        status = EXIT_NUMERICAL
    return status, files


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ring-noon", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="TOML run configuration")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one config key")
        sp.add_argument("--out", type=Path, help="output directory (default output.dir)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"ring-noon: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out if args.out is not None else Path(cfg.output.dir)
    try:
        status, files = run_subcommand(args.command, cfg, out)
    except (ConfigError, DriveAmplitudeError) as exc:
        print(f"ring-noon: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"ring-noon {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (*_NUMERICAL, ValueError) as exc:
        print(f"ring-noon {args.command}: {_failed_stage(exc)}failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for f in files:
        print(f)
    return status


def _failed_stage(exc) -> str:
    tb = exc.__traceback__
    while tb is not None:
        st = tb.tb_frame.f_locals.get("stage")
        if isinstance(st, _Stage):
            return f"stage '{st.name}' "
        tb = tb.tb_next
    return ""


if __name__ == "__main__":
    sys.exit(main())
