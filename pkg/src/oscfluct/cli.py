"""Experiment driver: seeded ensembles, CSV/JSON emission, manifests.

Exit codes: 0 success, 2 configuration error, 3 numeric error.  Identical
(config, seed) produce byte-identical outputs independent of --threads: the
worker pool never shares state and results are reduced in member order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib.metadata import version as pkg_version
from pathlib import Path

import numpy as np

from . import chain, correlation, fields, gibbs, nlfh, poisson, potential, spde
from .config import SCHEMAS, parse_config, resolve
from .errors import ConfigError, NumericsError
from .spectral import SpectralGrid, auto_grid, kernel_P

__all__ = ["main"]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_manifest(out: Path, experiment: str, cfg: dict, seed: int,
                   t0: float, extra: dict | None = None) -> None:
    doc = {
        "experiment": experiment,
        "version": pkg_version("oscfluct"),
        "seed": seed,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "wall_time_s": round(time.time() - t0, 3),
    }
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, default=str) + "\n")


def _spec_of(cfg) -> potential.PotentialSpec:
    return potential.from_config(
        cfg["potential.family"], cfg.get("potential.alpha", 0.0),
        cfg.get("potential.gamma_v", 1.0),
    )


def _scaling_of(cfg) -> chain.ScalingParams:
    return chain.ScalingParams(
        a=cfg["chain.a"], kappa=cfg["chain.kappa"], gamma=cfg["chain.gamma"],
        beta_exp=cfg["chain.beta_exp"], lam=cfg["chain.lambda"],
    )


def _member_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def _pool_map(fn, args_list, threads: int):
    if threads <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, args_list, chunksize=max(1, len(args_list) // (4 * threads))))


# -- experiment runners -------------------------------------------------------


def run_sample(cfg, out: Path, seed: int, threads: int) -> dict:
    spec = _spec_of(cfg)
    n = cfg["chain.n"]
    beta = float(n) ** (-cfg["gibbs.beta_exponent"])
    p = gibbs.GibbsParams(beta=beta, b=cfg["gibbs.b"], lam=cfg["gibbs.lambda"])
    sampler = gibbs.GibbsSampler(p, spec)
    x = sampler.sample(np.random.default_rng(seed), cfg["run.samples"])
    write_csv(out / "samples.csv", ["index", "eta"], enumerate(x))
    return {
        "acceptance_rate": sampler.acceptance_rate,
        "empirical_mean": float(np.mean(x)),
        "empirical_var": float(np.var(x)),
    }


def run_simulate(cfg, out: Path, seed: int, threads: int) -> dict:
    spec = _spec_of(cfg)
    p = _scaling_of(cfg)
    n = cfg["chain.n"]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    eta0 = gibbs.GibbsSampler(p.gibbs(n), spec).sample(rng, n)
    times = np.linspace(cfg["run.T"] / cfg["run.snapshots"], cfg["run.T"],
                        cfg["run.snapshots"])
    traj = chain.simulate(chain.ChainState(eta0), spec, p, cfg["run.T"],
                          cfg["run.ode_tol"], rng, snapshot_times=times)
    rows = []
    for i, t in enumerate(traj.times):
        for j in range(n):
            rows.append((t, j, traj.snapshots[i, j]))
    write_csv(out / "snapshots.csv", ["t", "j", "eta"], rows)
    return {"n_exchanges": traj.n_exchanges, "n_ode_steps": traj.n_ode_steps}


def run_qv(cfg, out: Path, seed: int, threads: int) -> dict:
    from ._engines import exchange_only_qv

    spec = _spec_of(cfg)
    p = _scaling_of(cfg)
    n = cfg["chain.n"]
    T = cfg["run.T"]
    phi1 = fields.from_config(cfg["field.phi"])
    phi2 = fields.from_config(cfg["field.phi2"])
    g1 = fields.grad1_ring(phi1.on_ring(n), n)
    g2a = fields.grad2_ring(phi2.on_ring(n), n)
    g2b = fields.grad1_ring(phi2.on_ring(n), n)
    sampler = gibbs.GibbsSampler(p.gibbs(n), spec)
    th = p.theta(n)
    rate = p.exchange_rate(n)
    beta = p.beta(n)
    rows = []
    if p.gamma == 0.0:
        # pure exchange: exact per-event accumulation
        for i, ss in enumerate(_member_seeds(seed, cfg["run.ensemble"])):
            rng = np.random.default_rng(ss)
            eta0 = sampler.sample(rng, n)
            zeta0 = np.asarray(potential.eval_scaled(spec, beta, 0, eta0))
            s64 = np.uint64(rng.integers(0, 2**64, dtype=np.uint64))
            i1, i2, i3, _ = exchange_only_qv(eta0, zeta0, g1 * g1, g2a * g2a,
                                             g1 * g2b, rate, T, s64)
            qv = th / (2 * n**3) * i1 + th / (2 * n**3) * i2 + th / n**3 * i3
            rows.append((i, qv))
    else:
        times = np.linspace(T / 64, T, 64)
        for i, ss in enumerate(_member_seeds(seed, cfg["run.ensemble"])):
            rng = np.random.default_rng(ss)
            eta0 = sampler.sample(rng, n)
            traj = chain.simulate(chain.ChainState(eta0), spec, p, T,
                                  cfg["run.ode_tol"], rng, snapshot_times=times)
            rows.append((i, fields.martingale_qv(traj, spec, p, phi1, phi2)))
    write_csv(out / "qv.csv", ["member", "qv"], rows)
    lam = p.lam
    predicted = T * (
        phi1.l2_norm_sq(1)
        + (2 * lam**2 + 1) / 2 * phi2.l2_norm_sq(1)
        + 2 * lam * phi1.inner_deriv(phi2)
    )
    vals = [r[1] for r in rows]
    return {
        "qv_mean": float(np.mean(vals)),
        "qv_stderr": float(np.std(vals) / np.sqrt(len(vals))),
        "qv_predicted_limit": predicted,
    }


def run_correlate(cfg, out: Path, seed: int, threads: int) -> dict:
    spec = _spec_of(cfg)
    p = _scaling_of(cfg)
    n = cfg["chain.n"]
    times = np.array([float(s) for s in cfg["correlate.times"].split(",")])
    engine = cfg["correlate.engine"]
    if engine == "auto":
        engine = (
            "propagator"
            if spec.family is potential.Family.HARMONIC and p.lam == 0.0
            else "event"
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if engine == "propagator":
        est = correlation.harmonic_energy_correlation(
            n, p, times, rng, members=cfg["run.ensemble"]
        )
    else:
        sampler = gibbs.GibbsSampler(p.gibbs(n), spec)
        cent = fields.Centering.from_measure(p.gibbs(n), spec)
        trajs = []
        full_times = np.concatenate([[min(times) * 1e-9], times])
        for _ in range(cfg["run.ensemble"]):
            eta0 = sampler.sample(rng, n)
            trajs.append(
                chain.simulate(chain.ChainState(eta0), spec, p, float(times[-1]),
                               cfg["run.ode_tol"], rng, snapshot_times=full_times)
            )
        est = correlation.correlation_S(trajs, spec, p, centering=cent)
        est = correlation.CorrelationEstimate(
            times=est.times[1:], offsets=est.offsets, S=est.S[1:],
            stderr=est.stderr[1:], ensemble_size=est.ensemble_size,
        )
    rows = []
    for i, t in enumerate(est.times):
        for k, off in enumerate(est.offsets):
            rows.append((t, off, est.S[i, k], est.stderr[i, k]))
    write_csv(out / "correlation.csv", ["t", "j", "S", "stderr"], rows)
    extra = {"engine": engine, "mass": est.mass(0)}
    if cfg["correlate.compare_kernel"]:
        comp_rows = []
        for i in range(len(est.times)):
            rep = correlation.kernel_comparison(est, n, p.gamma, p.kappa, i)
            comp_rows.append((rep["t"], rep["l1"], rep["linf"]))
            extra[f"skew_chain_t{rep['t']:g}"] = rep["skew_chain"]
            extra[f"skew_kernel_t{rep['t']:g}"] = rep["skew_kernel"]
        write_csv(out / "kernel_compare.csv", ["t", "L1_error", "Linf_error"],
                  comp_rows)
    return extra


def run_kernel(cfg, out: Path, seed: int, threads: int) -> dict:
    gamma, kappa = cfg["kernel.gamma"], cfg["kernel.kappa"]
    times = [float(s) for s in cfg["kernel.times"].split(",")]
    if cfg["kernel.m"] > 0 and cfg["kernel.L"] != "auto":
        grid = SpectralGrid(m=cfg["kernel.m"], L=float(cfg["kernel.L"]))
    else:
        grid = auto_grid(gamma, kappa, max(times))
    for t in times:
        P = kernel_P(gamma, kappa, t, grid, check=not cfg["kernel.periodized"])
        write_csv(out / f"kernel_t{t:g}.csv", ["x", "P"], zip(grid.x, P))
    return {"m": grid.m, "L": grid.L}


def run_poisson(cfg, out: Path, seed: int, threads: int) -> dict:
    phi = fields.from_config(cfg["poisson.phi"])
    exps = [int(s) for s in cfg["poisson.n_exponents"].split(",")]
    ns = [2**e for e in exps]
    rows = poisson.norm_scaling_report(phi, ns, kappa=cfg["poisson.kappa"],
                                       gamma=cfg["poisson.gamma"])
    flat = []
    for r in rows:
        for key in ("sqrt_n_h_sq", "e_h_sq", "sqrt_n_a_h_sq", "near_diag_sq"):
            flat.append((r["n"], key, r[key]))
    write_csv(out / "norms.csv", ["n", "norm_name", "value"], flat)
    lev = poisson.levy_convergence_check(phi, cfg["poisson.gamma"],
                                         cfg["poisson.kappa"], ns)
    write_csv(out / "levy_convergence.csv", ["n", "a", "error"],
              [(r["n"], r["a"], r["error"]) for r in lev])
    rep = poisson.residue_boundedness_check()
    return {
        "vtilde_max": rep["vtilde_max"],
        "residue_at_zero": [rep["res_at_zero"][0.1].real, rep["res_at_zero"][0.1].imag],
    }


def run_nlfh(cfg, out: Path, seed: int, threads: int) -> dict:
    spec = _spec_of(cfg)
    tp = nlfh.thermo_map(cfg["nlfh.v"], cfg["nlfh.e"], spec, cfg["nlfh.beta"])
    rep = nlfh.mode_coupling(tp, spec, theta_alpha=cfg["nlfh.theta_alpha"])
    doc = {
        "point": {"v": tp.v, "e": tp.e, "tau": tp.tau, "b": tp.b, "beta": tp.beta},
        "flux": rep.flux.tolist(),
        "J": rep.J.tolist(),
        "v_plus": rep.v_plus,
        "v_minus": rep.v_minus,
        "modes": rep.modes,
        "H1": rep.H1.tolist(),
        "H2": rep.H2.tolist(),
        "G1": rep.G1.tolist(),
        "G2": rep.G2.tolist(),
        "class_pair": [c.value for c in rep.class_pair],
    }
    (out / "nlfh.json").write_text(json.dumps(doc, indent=2) + "\n")
    return {"class_pair": doc["class_pair"]}


def run_spde(cfg, out: Path, seed: int, threads: int) -> dict:
    scfg = spde.SpdeConfig(m=cfg["spde.m"], nu=cfg["spde.nu"],
                           Lambda=cfg["spde.lambda"], D=cfg["spde.d"],
                           dt=cfg["spde.dt"])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if cfg["spde.kind"] == "ou":
        snaps = spde.simulate_ou(scfg, cfg["run.T"], rng,
                                 n_snapshots=cfg["run.ensemble"])
        mean1, se1 = spde.spectrum(snaps[:, 0])
        rows = [(k + 1, mean1[k], se1[k]) for k in range(len(mean1))]
    elif cfg["spde.kind"] == "sbe":
        snaps = spde.simulate_sbe(scfg, cfg["run.T"], rng,
                                  n_snapshots=cfg["run.ensemble"])
        mean1, se1 = spde.spectrum(snaps)
        rows = [(k + 1, mean1[k], se1[k]) for k in range(len(mean1))]
    else:
        raise ConfigError(f"spde.kind must be ou or sbe, got {cfg['spde.kind']}")
    write_csv(out / "spectrum.csv", ["k", "variance", "stderr"], rows)
    return {"stationary_var": scfg.stationary_var}


def run_bg2(cfg, out: Path, seed: int, threads: int) -> dict:
    from ._engines import exchange_only_bg2

    spec = _spec_of(cfg)
    p = _scaling_of(cfg)
    if p.gamma != 0.0 or spec.family is not potential.Family.HARMONIC:
        raise ConfigError(
            "the bg2 driver runs the pure-exchange harmonic protocol; set "
            "chain.gamma = 0 and potential.family = harmonic"
        )
    n, T = cfg["chain.n"], cfg["run.T"]
    ells = [int(s) for s in cfg["bg2.ells"].split(",")]
    phi = fields.from_config(cfg["field.phi"])
    g = fields.grad1_ring(phi.on_ring(n), n)
    rate = p.exchange_rate(n)
    rows = []
    for ell in ells:
        vals = []
        for ss in _member_seeds(seed + ell, cfg["run.ensemble"]):
            rng = np.random.default_rng(ss)
            eta0 = rng.normal(loc=p.lam, scale=1.0, size=n) - p.lam
            s64 = np.uint64(rng.integers(0, 2**64, dtype=np.uint64))
            vals.append(exchange_only_bg2(eta0, g, ell, rate, T, s64))
        diag = fields.bg2_diagnostic(vals)
        rows.append((ell, diag, fields.bg2_bound(T, n, ell, phi)))
    write_csv(out / "bg2.csv", ["ell", "diagnostic", "bound"], rows)
    return {"ells": ells}


def run_validate_potential(cfg, out: Path, seed: int, threads: int) -> dict:
    spec = _spec_of(cfg)
    rep = potential.validate_assumptions(spec, cfg["validate.range"],
                                         cfg["validate.samples"])
    rows = [
        (c.name, int(c.passed), c.worst_value, c.witness_x, c.severity)
        for c in rep.conditions
    ]
    write_csv(out / "validation.csv",
              ["condition", "passed", "worst_value", "witness_x", "severity"], rows)
    return {"all_pass": rep.all_pass}


_RUNNERS = {
    "sample": run_sample,
    "simulate": run_simulate,
    "qv": run_qv,
    "correlate": run_correlate,
    "kernel": run_kernel,
    "poisson": run_poisson,
    "nlfh": run_nlfh,
    "spde": run_spde,
    "bg2": run_bg2,
    "validate-potential": run_validate_potential,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscfluct",
        description="oscillator-chain fluctuation experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in _RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=str, default=".")
        sp.add_argument("--threads", type=int,
                        default=int(os.environ.get("OFL_THREADS", "1")))
    args = parser.parse_args(argv)

    t0 = time.time()
    try:
        raw = parse_config(args.config) if args.config else {}
        cfg = resolve(args.experiment, raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else cfg.get("run.seed", 0)
    cfg["run.seed"] = seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        extra = _RUNNERS[args.experiment](cfg, out, seed, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"[{exc.module}] numeric error: {exc}", file=sys.stderr)
        return 3
    write_manifest(out, args.experiment, cfg, seed, t0, extra)
    return 0


if __name__ == "__main__":
    sys.exit(main())
