"""Reproducible experiment runner.

Subcommands regenerate the figure data sets (fermibox, bosonquench, lattice),
evaluate the general bounds (bounds), and run the brute-force cross-check
suite (verify).  Every run writes the produced CSVs, a JSON manifest with
parameters and output checksums, and a plain-text summary; identical
parameters and seed reproduce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, box, bounds, lattice, quench
from .fock import (
    FockHamiltonian,
    FockSpace,
    build_hamiltonian,
    counting_operator,
    fluctuation_check,
    product_state,
)
from .reduction import ModeEnsemble, reduce_to_single_particle
from .series import TimeSeries, min_samples
from .spectral import (
    ProjectorObservable,
    SpectralSystem,
    StateSP,
    average_expectation,
    evolve,
    expectation_P,
    expectation_series,
    gap_structure,
)


def load_config(path) -> dict:
    """Parse simple `key = value` lines; `#` starts a comment."""
    entries = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ValueError(f"{path}:{lineno}: malformed assignment")
            if key in entries:
                raise ValueError(f"{path}:{lineno}: duplicate key '{key}'")
            entries[key] = value
    return entries


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, list):
        return [float(v) for v in value.split(",")]
    return value


def resolve_params(args: argparse.Namespace, defaults: dict) -> dict:
    """Defaults < config file < explicit CLI flags."""
    params = dict(defaults)
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        for key, value in cfg.items():
            params[key] = _coerce(value, defaults[key])
    for key in defaults:
        cli_value = getattr(args, key.replace("-", "_"), None)
        if cli_value is not None:
            params[key] = cli_value
    return params


class RunWriter:
    """Collects output files and emits manifest + summary."""

    def __init__(self, out_dir: Path, subcommand: str, params: dict, seed: int):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.subcommand = subcommand
        self.params = params
        self.seed = seed
        self.t0 = time.time()
        self.files = []
        self.lines = []

    def add_series(self, name: str, series: TimeSeries):
        path = self.out / name
        series.to_csv(path)
        self.files.append(path)

    def add_table(self, name: str, header: str, rows):
        path = self.out / name
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        self.files.append(path)

    def say(self, text: str):
        self.lines.append(text)

    def finish(self) -> Path:
        summary = self.out / f"{self.subcommand}_summary.txt"
        summary.write_text("\n".join(self.lines) + "\n")
        self.files.append(summary)
        manifest = {
            "subcommand": self.subcommand,
            "params": {k: (list(v) if isinstance(v, (list, tuple)) else v)
                       for k, v in self.params.items()},
            "version": __version__,
            "seed": self.seed,
            "wall_time_s": round(time.time() - self.t0, 3),
            "outputs": [{"path": p.name, "sha256": _sha256(p)} for p in self.files],
        }
        mpath = self.out / f"{self.subcommand}_manifest.json"
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return mpath


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


# ----------------------------------------------------------------- fermibox

FERMIBOX_DEFAULTS = {"N": 100, "samples": 4096, "a": 0.05, "statistics": "fermion",
                     "scan_N": ""}


def run_fermibox(args) -> int:
    params = resolve_params(args, FERMIBOX_DEFAULTS)
    writer = RunWriter(args.out, "fermibox", params, args.seed)
    if params["scan_N"]:
        lo, _, hi = params["scan_N"].partition(":")
        ns = list(range(int(lo), int(hi) + 1, 5))
        rows = []
        for n in ns:
            cfg = box.BoxConfig(N=n, a=params["a"])
            mean, bound_val = box.time_average_D(cfg, n_samples=params["samples"])
            rows.append((n, mean))
            writer.say(f"N={n}: <D> = {mean:.6g} (analytic bound {bound_val:.6g})")
        writer.add_table("fermibox_scan.csv", "N,meanD", rows)
        slope = np.polyfit(np.log([r[0] for r in rows]),
                           np.log([r[1] for r in rows]), 1)[0]
        writer.say(f"log-log fitted exponent of <D> vs N: {slope:.4f}")
    else:
        cfg = box.BoxConfig(N=params["N"], a=params["a"],
                            statistics=params["statistics"])
        series = box.box_series(cfg, n_samples=params["samples"])
        writer.add_series(f"fermibox_{params['statistics']}_N{params['N']}.csv", series)
        writer.say(f"{params['statistics']} N={params['N']}: "
                   f"window [0, T_rec/2] = [0, {series.t1:.6g}]")
        writer.say(f"<D> over window: {series.mean():.6g}")
        if params["statistics"] == "fermion":
            mean, bound_val = box.time_average_D(cfg, n_samples=params["samples"])
            t_eq, level = box.equilibration_time(cfg)
            writer.say(f"analytic mean bound (a={cfg.a}, K=N): {bound_val:.6g} -> "
                       + ("OK" if mean <= bound_val else "VIOLATED"))
            writer.say(f"T_eq = 1/(2 N a nu) = {t_eq:.6g} "
                       f"(main-text variant 1/(N a nu) = "
                       f"{box.equilibration_time_main_text(cfg):.6g}); "
                       f"certified D(T_eq) <= {level:.6g}")
    writer.finish()
    return 0


# --------------------------------------------------------------- bosonquench

BOSONQUENCH_DEFAULTS = {"gamma": [1.3, 10.0, 100.0], "omega0": 1.0, "samples": 4096,
                        "p": 0.1, "well_width": 0.0}


def run_bosonquench(args) -> int:
    params = resolve_params(args, BOSONQUENCH_DEFAULTS)
    writer = RunWriter(args.out, "bosonquench", params, args.seed)
    if params["well_width"]:
        cfg = quench.QuenchConfig(target="square_well", omega0=params["omega0"],
                                  L=params["well_width"])
        series = quench.square_well_series(cfg, n_samples=params["samples"])
        writer.add_series("squarewell.csv", series)
        timing = quench.well_equilibration_time(cfg)
        writer.say(f"square well sigma/L = {cfg.sigma_wave / cfg.L:.4g}")
        writer.say(f"<D> = {timing.mean_D:.6g}")
        writer.say(f"T_eq measured {timing.measured:.6g} vs ballistic formula "
                   f"{timing.formula:.6g} (ratio {timing.measured / timing.formula:.3f})")
    else:
        for gamma in params["gamma"]:
            omega = params["omega0"] / gamma
            cfg = quench.QuenchConfig(target="harmonic", omega0=params["omega0"],
                                      omega=omega)
            period = 2 * np.pi / omega
            t = np.linspace(0.0, period, params["samples"])
            vals = quench.central_mass_closed_form(cfg, t)
            writer.add_series(f"quench_gamma{gamma:g}.csv",
                              TimeSeries(0.0, period, vals, meta=f"gamma={gamma}"))
            timing = quench.quench_equilibration_time(cfg, params["p"])
            if timing.equilibrated:
                writer.say(f"gamma={gamma:g}: T_eq formula {timing.formula:.6g}, "
                           f"measured crossing {timing.measured:.6g}")
            else:
                writer.say(f"gamma={gamma:g}: no equilibration (central mass "
                           f"never falls below p={params['p']})")
    writer.finish()
    return 0


# ------------------------------------------------------------------- lattice

LATTICE_DEFAULTS = {"L": 101, "p0": float(np.pi / 20), "T": 200.0, "samples": 2048,
                    "separation": 10}


def run_lattice(args) -> int:
    params = resolve_params(args, LATTICE_DEFAULTS)
    writer = RunWriter(args.out, "lattice", params, args.seed)
    model = lattice.HoppingModel(V=params["L"])
    dos = lattice.truncated_dos(model, params["p0"])
    sysm = model.spectral()
    count = int(np.sum(np.abs(sysm.energies) > np.cos(params["p0"])))
    writer.say(f"ring L={params['L']}: n_max = {dos.n_max:.4f}, excluded fraction "
               f"{dos.excluded_fraction:.4f}, excluded count {count} "
               f"(estimate {dos.excluded_count_estimate:.2f})")
    cov0 = lattice.CovarianceMatrix.from_occupied_sites(
        params["L"], range(0, params["L"], 2))
    t = np.linspace(0.0, params["T"], params["samples"])
    corr = lattice.correlator_series(model, cov0, 0, params["separation"], t)
    writer.add_series("correlator_abs.csv",
                      TimeSeries(0.0, params["T"], np.abs(corr),
                                 meta=f"|corr| separation {params['separation']}"))
    phi = np.zeros(params["L"])
    phi[0] = 1.0
    check = lattice.single_mode_bound_check(model, cov0, phi, params["T"],
                                            p0=params["p0"])
    writer.say(f"single-mode bound: lhs {check.lhs:.6g} <= rhs {check.rhs:.6g} "
               f"-> {'OK' if check.ok else 'VIOLATED'}")
    writer.finish()
    return 0 if check.ok else 1


# -------------------------------------------------------------------- bounds

BOUNDS_DEFAULTS = {"N": 10, "L": 101, "T_values": [10.0, 100.0, 1000.0]}


def run_bounds(args) -> int:
    params = resolve_params(args, BOUNDS_DEFAULTS)
    writer = RunWriter(args.out, "bounds", params, args.seed)
    ok = True
    rows = []
    cfg = box.BoxConfig(N=params["N"])
    sysm = box.spectral_system(cfg)
    state, _ = box.sigma0(cfg)
    d_eff = bounds.effective_dimension(sysm, state)
    gs = gap_structure(sysm)
    n_max = 0.5 / cfg.nu      # closed form for the quadratic spectrum at its floor
    for T in params["T_values"]:
        measured = box.mean_sq_delta(cfg, T / cfg.nu)
        rep = bounds.bound_eq5(sysm.dim, d_eff, gs.D_G, gs.n_d, n_max, T / cfg.nu)
        rows.append((T, measured, rep.bound_value))
        ok &= measured <= rep.bound_value
        writer.say(f"box N={params['N']} T={T:g}/nu: measured <|Delta|^2> = "
                   f"{measured:.4g} <= bound {rep.bound_value:.4g} "
                   f"-> {'OK' if measured <= rep.bound_value else 'VIOLATED'}")
    writer.add_table("bounds_box.csv", "T,measured,bound", rows)

    model = lattice.HoppingModel(V=params["L"])
    lsys = model.spectral()
    site = np.zeros(params["L"], dtype=complex)
    site[0] = 1.0
    lstate = StateSP.pure(site)
    ld_eff = bounds.effective_dimension(lsys, lstate)
    lgs = gap_structure(lsys)
    ldos = lattice.truncated_dos(model)
    rows = []
    proj = ProjectorObservable(site[:, None])
    for T in params["T_values"]:
        t = np.linspace(0.0, T, min_samples(T, lsys.spectral_range))
        vals = expectation_series(lsys, lstate, proj, t)
        ref = average_expectation(lsys, lstate, proj)
        measured = bounds.mean_square_deviation(vals, t, ref)
        rep = bounds.bound_eq5(lsys.dim, ld_eff, lgs.D_G, lgs.n_d, ldos.n_max, T)
        rows.append((T, measured, rep.bound_value))
        ok &= measured <= rep.bound_value
        writer.say(f"ring L={params['L']} T={T:g}: measured <|Delta|^2> = "
                   f"{measured:.4g} <= bound {rep.bound_value:.4g} "
                   f"-> {'OK' if measured <= rep.bound_value else 'VIOLATED'}")
    writer.add_table("bounds_ring.csv", "T,measured,bound", rows)
    writer.finish()
    return 0 if ok else 1


# -------------------------------------------------------------------- verify

def _random_instance(rng, statistics):
    m = int(rng.integers(2, 6))
    n_avail = m if statistics == "fermion" else 3
    n = int(rng.integers(1, min(3, n_avail) + 1))
    h = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    h = (h + h.conj().T) / 2
    sysm = SpectralSystem.from_hamiltonian(h, label="random")
    basis = np.linalg.qr(rng.normal(size=(m, m))
                         + 1j * rng.normal(size=(m, m)))[0]
    if statistics == "fermion":
        occ = np.zeros(m)
        occ[rng.choice(m, size=n, replace=False)] = 1
    else:
        occ = np.zeros(m)
        for _ in range(n):
            occ[rng.integers(0, m)] += 1
    n_proj = int(rng.integers(1, m + 1))
    proj = ProjectorObservable(basis[:, :n_proj])
    ens = ModeEnsemble(statistics=statistics, vectors=basis, occupations=occ)
    return sysm, ens, proj, n


def theorem1_instance_error(sysm, ens, proj, rng, n_times=20) -> float:
    """Max |many-body expectation - N tr(sigma(t) P)| over random times."""
    statistics = ens.statistics
    n = int(round(ens.N))
    space = FockSpace(statistics=statistics, m=sysm.dim,
                      n_max_per_mode=(1 if statistics == "fermion" else max(n, 1)))
    ham = FockHamiltonian(space, build_hamiltonian(space, sysm))
    keep = ens.occupations > 0.5
    psi0 = product_state(space, ens.vectors[:, keep], ens.occupations[keep])
    m_op = counting_operator(space, proj.modes)
    sigma, p, _ = reduce_to_single_particle(ens, proj)
    worst = 0.0
    for t in rng.uniform(0.0, 20.0, size=n_times):
        many = ham.expectation(psi0, m_op, t)
        single = n * expectation_P(evolve(sysm, sigma, t), p)
        worst = max(worst, abs(many - single))
    return worst


def run_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = []
    n_inst = args.instances
    for i in range(n_inst):
        statistics = "fermion" if i % 2 == 0 else "boson"
        sysm, ens, proj, n = _random_instance(rng, statistics)
        err = theorem1_instance_error(sysm, ens, proj, rng)
        status = "ok" if err <= 1e-10 else "FAIL"
        if status == "FAIL":
            failures.append({
                "check": "theorem1", "instance": i, "statistics": statistics,
                "error": err, "N": n,
                "energies": sysm.energies.tolist(),
                "eigenvectors_re": sysm.eigenvectors.real.tolist(),
                "eigenvectors_im": sysm.eigenvectors.imag.tolist(),
                "occupations": ens.occupations.tolist(),
            })
        print(f"theorem1[{statistics} m={sysm.dim} N={n}]: max error {err:.2e} {status}")

    for i in range(10):
        v = int(rng.integers(3, 7))
        model = lattice.HoppingModel(V=v, geometry="ring")
        occ = rng.integers(0, 2, size=v)
        cov = lattice.CovarianceMatrix.from_occupied_sites(v, np.nonzero(occ)[0])
        space = FockSpace(statistics="fermion", m=v)
        ham = FockHamiltonian(space, build_hamiltonian(space, model.spectral()))
        psi0 = product_state(space, np.eye(v)[:, occ.astype(bool)],
                             np.ones(int(occ.sum())))
        t = float(rng.uniform(0.0, 5.0))
        cov_t = lattice.evolve_covariance(model, cov, t)
        c_t, _ = cov_t.correlations()
        x, y = rng.integers(0, v, size=2)
        ps = ham.evolve_vector(psi0, t)
        direct = ps.conj() @ (space.creation(int(x)) @ space.annihilation(int(y)) @ ps)
        err = abs(c_t[x, y] - complex(direct))
        status = "ok" if err <= 1e-10 else "FAIL"
        if status == "FAIL":
            failures.append({"check": "covariance", "V": v, "t": t,
                             "occ": occ.tolist(), "error": err})
        print(f"covariance[V={v} t={t:.3f}]: error {err:.2e} {status}")

    for i in range(20):
        sysm, ens, proj, n = _random_instance(rng, "fermion")
        space = FockSpace(statistics="fermion", m=sysm.dim)
        keep = ens.occupations > 0.5
        psi0 = product_state(space, ens.vectors[:, keep], ens.occupations[keep])
        m_op = counting_operator(space, proj.modes)
        _, ok = fluctuation_check(space, psi0, m_op)
        status = "ok" if ok else "FAIL"
        if not ok:
            failures.append({"check": "lemma1", "instance": i})
        print(f"lemma1[m={sysm.dim} N={n}]: bound {status}")

    for _ in range(20):
        dg = float(rng.uniform(0.1, 6.0))
        T = float(rng.uniform(0.05, 1.0))
        chk = bounds.weighted_average_check(dg, T)
        status = "ok" if chk.uniform_within else "FAIL"
        if not chk.uniform_within:
            failures.append({"check": "weighted_average", "delta_g": dg, "T": T})
        print(f"weighted_average[dG={dg:.2f} T={T:.2f}]: "
              f"uniform {chk.uniform:.3g} <= analytic {chk.analytic:.3g} {status}")

    if failures:
        replay = out / "verify_failures.json"
        replay.write_text(json.dumps(failures, indent=2))
        print(f"{len(failures)} failure(s); instances serialized to {replay}",
              file=sys.stderr)
        return 1
    print("verify: all cross-checks passed")
    return 0


# ---------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freegas",
                                description="free-gas equilibration experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--out", default="runs")
        sp.add_argument("--config", default=None, help="key = value file; "
                        "explicit flags win over config values")

    fb = sub.add_parser("fermibox", help="box release example")
    fb.add_argument("--N", type=int, default=None)
    fb.add_argument("--samples", type=int, default=None)
    fb.add_argument("--a", type=float, default=None)
    fb.add_argument("--statistics", choices=["fermion", "boson"], default=None)
    fb.add_argument("--scan-N", dest="scan_N", default=None, metavar="LO:HI")
    common(fb)
    fb.set_defaults(func=run_fermibox)

    bq = sub.add_parser("bosonquench", help="harmonic/square-well quench example")
    bq.add_argument("--gamma", type=float, action="append", default=None)
    bq.add_argument("--omega0", type=float, default=None)
    bq.add_argument("--samples", type=int, default=None)
    bq.add_argument("--p", type=float, default=None)
    bq.add_argument("--well-width", dest="well_width", type=float, default=None)
    common(bq)
    bq.set_defaults(func=run_bosonquench)

    lt = sub.add_parser("lattice", help="hopping ring diagnostics")
    lt.add_argument("--L", type=int, default=None)
    lt.add_argument("--p0", type=float, default=None)
    lt.add_argument("--T", type=float, default=None)
    lt.add_argument("--samples", type=int, default=None)
    lt.add_argument("--separation", type=int, default=None)
    common(lt)
    lt.set_defaults(func=run_lattice)

    bd = sub.add_parser("bounds", help="general bound evaluation")
    bd.add_argument("--N", type=int, default=None)
    bd.add_argument("--L", type=int, default=None)
    common(bd)
    bd.set_defaults(func=run_bounds)

    vf = sub.add_parser("verify", help="brute-force oracle cross-checks")
    vf.add_argument("--instances", type=int, default=20)
    common(vf)
    vf.set_defaults(func=run_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
