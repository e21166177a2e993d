"""Experiment runner: JSON config in, CSV/JSON series plus a run manifest out.

Subcommands mirror the experiments one to one; `full-study` chains them
into a single summary table.  Exit codes: 0 success, 2 inline invariant
failure, 3 config error, 4 numerical abort.  All CSV floats use %.17g so
identical config + seed reproduces every CSV byte for byte (manifests
carry timestamps and are excluded from that guarantee).
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import struct
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .bounds import OdeBoundParams, comparison_falsify, growth_envelopes
from .hill import pick_unstable_mode, tongue_scan, unstable_intervals
from .instability import instability_certificate, predicted_escape
from .nonlinear import (NonlinearitySpec, energy_rate_constant, evolve, evolve_multi,
                        multi_rate_constant)
from .potentials import (BarrierSpec, MultiTermSpec, Potential, SpecError,
                         periodicity_defect, potential_from_dict, time_profile_from_dict)
from .radial import CflError, _check_cfl, dominant_eigenvalue, growth_rate
from .states import RadialGrid, State, random_state

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4

EXPERIMENTS = ("hill-scan", "floquet-eig", "linear-growth", "nonlinear-run",
               "instability", "bound-check", "multi-run", "full-study")

# envelope comparisons allow for the integrator's O(dt^2) energy wiggle;
# widened with dt like the conservation tolerance, since both guard the
# same truncation effect (a real escape clears any such slack in periods)
ENVELOPE_SLACK = 1e-4


def _envelope_slack(dt: float) -> float:
    return max(ENVELOPE_SLACK, 10.0 * dt * dt)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# formatting and file helpers

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return "%d" % int(x)
    return "%.17g" % float(x)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(cell) for cell in row) + "\n")


def atomic_write_json(path: str, obj) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def write_snapshot(path: str, state: State, t: float) -> None:
    """Binary state dump: header (n as u64, dr, t as f64), then v then w,
    all little-endian."""
    with open(path, "wb") as f:
        f.write(struct.pack("<Qdd", state.grid.n, state.grid.dr, float(t)))
        f.write(np.asarray(state.v, dtype="<f8").tobytes())
        f.write(np.asarray(state.w, dtype="<f8").tobytes())


def read_snapshot(path: str) -> tuple[State, float]:
    with open(path, "rb") as f:
        raw = f.read()
    n, dr, t = struct.unpack_from("<Qdd", raw, 0)
    need = 24 + 16 * n
    if len(raw) != need:
        raise ConfigError(f"snapshot {path}: expected {need} bytes, found {len(raw)}")
    v = np.frombuffer(raw, dtype="<f8", count=n, offset=24).copy()
    w = np.frombuffer(raw, dtype="<f8", count=n, offset=24 + 8 * n).copy()
    grid = RadialGrid(r_max=n * dr, n=int(n))
    return State(v, w, grid), float(t)


# ---------------------------------------------------------------------------
# config handling

def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where} is missing required key {key!r}")
    return cfg[key]


def _build_grid(cfg: dict) -> RadialGrid:
    g = _require(cfg, "grid")
    return RadialGrid(r_max=float(_require(g, "r_max", "grid")),
                      n=int(_require(g, "n", "grid")))


def _build_potential(cfg: dict):
    return potential_from_dict(_require(cfg, "potential"))


def _build_nonlinearity(cfg: dict) -> NonlinearitySpec:
    nl = _require(cfg, "nonlinearity")
    return NonlinearitySpec(r=float(_require(nl, "r", "nonlinearity")))


def _build_data(cfg: dict, grid: RadialGrid, seed: int) -> State:
    d = cfg.get("data", {})
    if "snapshot" in d:
        state, _ = read_snapshot(d["snapshot"])
        if state.grid.n != grid.n or abs(state.grid.r_max - grid.r_max) > 1e-12:
            raise ConfigError("snapshot grid does not match the config grid")
        return state
    return random_state(grid, np.random.default_rng(seed),
                        modes=int(d.get("modes", 8)),
                        amplitude=float(d.get("amplitude", 1.0)),
                        support_radius=d.get("support_radius"))


def _dt(cfg: dict) -> float:
    return float(_require(_require(cfg, "time"), "dt", "time"))


def validate_config(cfg: dict) -> list[str]:
    """Schema, CFL and periodicity diagnostics without running anything.
    Lines starting with 'warning:' do not block a run."""
    out: list[str] = []
    exp = cfg.get("experiment")
    if exp is not None and exp not in EXPERIMENTS:
        out.append(f"unknown experiment {exp!r}")
    pot = None
    if "potential" in cfg:
        try:
            pot = potential_from_dict(cfg["potential"])
        except (SpecError, KeyError, TypeError, ValueError) as e:
            out.append(f"bad potential descriptor: {e}")
    grid = None
    if "grid" in cfg:
        try:
            grid = _build_grid(cfg)
        except (ConfigError, ValueError) as e:
            out.append(f"bad grid: {e}")
    if "time" in cfg and "dt" in cfg["time"]:
        dt = cfg["time"]["dt"]
        if grid is not None:
            try:
                _check_cfl(float(dt), grid)
            except CflError as e:
                out.append(str(e))
        T = cfg["time"].get("T")
        if T is not None and pot is not None and isinstance(pot, Potential):
            if abs(float(T) - pot.period) > 1e-9 * max(1.0, pot.period):
                out.append(f"time.T={T} does not match the potential period {pot.period}")
    if "nonlinearity" in cfg:
        try:
            _build_nonlinearity(cfg)
        except (ConfigError, SpecError, ValueError) as e:
            out.append(f"bad nonlinearity: {e}")
    if isinstance(cfg.get("data"), dict) and "snapshot" in cfg["data"]:
        if not os.path.exists(cfg["data"]["snapshot"]):
            out.append(f"snapshot file not found: {cfg['data']['snapshot']}")
    if pot is not None and isinstance(pot, Potential):
        defect = periodicity_defect(pot)
        if defect > 1e-10:
            out.append(f"warning: potential periodicity defect {defect:.3e} exceeds 1e-10")
    return out


# ---------------------------------------------------------------------------
# experiments; each fills manifest["derived"/"outputs"/"checks"]

def _run_hill_scan(cfg, out_dir, seed, threads, manifest):
    forcing = time_profile_from_dict(_require(cfg, "forcing"))
    rng_cfg = _require(cfg, "omega_sq")
    values = np.linspace(float(_require(rng_cfg, "start", "omega_sq")),
                         float(_require(rng_cfg, "stop", "omega_sq")),
                         int(_require(rng_cfg, "count", "omega_sq")))
    steps = int(cfg.get("steps", 512))
    points = tongue_scan(forcing, forcing.period, values, steps=steps)
    path = os.path.join(out_dir, "tongues.csv")
    write_csv(path, ["omega_sq", "trace", "max_multiplier", "unstable"],
              [(p.omega_sq, p.trace, p.max_multiplier, int(p.unstable)) for p in points])
    manifest["outputs"].append("tongues.csv")
    intervals = unstable_intervals(points)
    manifest["derived"]["tongue_intervals"] = [[a, b] for a, b in intervals]
    manifest["checks"]["scan_finite"] = bool(np.isfinite([p.trace for p in points]).all())


def _barrier_spec_from_cfg(cfg) -> BarrierSpec | None:
    d = cfg.get("potential", {})
    if d.get("kind") != "barrier":
        return None
    return BarrierSpec(inner_radius=float(d["inner_radius"]), epsilon=float(d["epsilon"]),
                       hill_profile=time_profile_from_dict(d["hill"], period=d.get("period")),
                       delta=d.get("delta"))


def _hill_prediction(cfg, manifest) -> float | None:
    """For barrier potentials: |z1| of the selected unstable interior mode."""
    spec = _barrier_spec_from_cfg(cfg)
    if spec is None:
        return None
    sel = pick_unstable_mode(spec, k_max=int(cfg.get("k_max", 8)))
    if sel is None:
        return None
    z1 = max(abs(sel.pair.mu1), abs(sel.pair.mu2))
    manifest["derived"]["hill_mode_k"] = sel.k
    manifest["derived"]["hill_multiplier_magnitude"] = z1
    return z1


def _run_floquet_eig(cfg, out_dir, seed, threads, manifest):
    pot = _build_potential(cfg)
    if not isinstance(pot, Potential):
        raise ConfigError("floquet-eig needs a plain potential, not a multi collection")
    grid = _build_grid(cfg)
    res = dominant_eigenvalue(pot, _dt(cfg), grid, max_iter=int(cfg.get("max_iter", 200)),
                              tol=float(cfg.get("tol", 1e-6)), seed=seed)
    atomic_write_json(os.path.join(out_dir, "eig.json"),
                      {"magnitude": res.magnitude,
                       "eigenvalue": [res.eigenvalue.real, res.eigenvalue.imag],
                       "residual": res.residual, "iterations": res.iterations,
                       "converged": res.converged})
    manifest["outputs"].append("eig.json")
    if cfg.get("snapshot", False):
        write_snapshot(os.path.join(out_dir, "eigenstate.bin"), res.eigenstate, 0.0)
        manifest["outputs"].append("eigenstate.bin")
    manifest["derived"]["magnitude"] = res.magnitude
    z1 = _hill_prediction(cfg, manifest)
    if z1 is not None:
        manifest["derived"]["magnitude_gap"] = abs(res.magnitude - z1) / z1
    manifest["checks"]["power_iteration_converged"] = bool(res.converged)


def _run_linear_growth(cfg, out_dir, seed, threads, manifest):
    pot = _build_potential(cfg)
    if not isinstance(pot, Potential):
        raise ConfigError("linear-growth needs a plain potential")
    grid = _build_grid(cfg)
    dt = _dt(cfg)
    periods = int(cfg.get("periods", 12))
    data = _build_data(cfg, grid, seed)
    from .radial import period_map
    apply_T = period_map(pot, grid, dt)
    state = data.copy()
    rows = [(0.0, state.norm0(), state.norm1())]
    for n in range(1, periods + 1):
        state = apply_T(state)
        rows.append((n * pot.period, state.norm0(), state.norm1()))
    path = os.path.join(out_dir, "growth.csv")
    write_csv(path, ["t", "norm0", "norm1"], rows)
    manifest["outputs"].append("growth.csv")
    rate = growth_rate(pot, data, periods, dt) if periods >= 4 else float("nan")
    manifest["derived"]["growth_rate"] = rate
    z1 = _hill_prediction(cfg, manifest)
    if z1 is not None and z1 > 1.0:
        predicted = math.log(z1) / pot.period
        manifest["derived"]["predicted_rate"] = predicted
        manifest["checks"]["rate_matches_hill"] = bool(abs(rate - predicted) <= 0.05 * predicted)


def _energy_rows(traj, envelope):
    slack = _envelope_slack(traj.dt)
    rows = []
    for t, rep, env in zip(traj.times, traj.reports, envelope):
        x = rep.total
        violated = int(x > env * (1.0 + slack) + 1e-12)
        rows.append((t, rep.kinetic, rep.gradient, rep.potential_term,
                     rep.nonlinear_term, x, rep.rhs_identity, env, violated))
    return rows


ENERGY_HEADER = ["t", "kinetic", "gradient", "potential_term", "nonlinear_term",
                 "X", "rhs_identity", "envelope_value", "violated"]


def _conservation_check(manifest, traj, static: bool):
    if not static:
        return
    X = np.array([rep.total for rep in traj.reports])
    drift = float(np.max(np.abs(X - X[0])) / max(X[0], 1e-300))
    # truncation wiggle is quadratic in dt with a data-dependent constant
    # well under 1; a sign or coefficient defect drifts orders of
    # magnitude past this at any usable resolution
    tol = max(1e-6, 10.0 * traj.dt ** 2)
    manifest["derived"]["static_relative_drift"] = drift
    manifest["derived"]["static_tolerance"] = tol
    manifest["checks"]["static_conservation"] = bool(drift <= tol)


def _run_nonlinear(cfg, out_dir, seed, threads, manifest):
    pot = _build_potential(cfg)
    if not isinstance(pot, Potential):
        raise ConfigError("nonlinear-run needs a plain potential; use multi-run for collections")
    grid = _build_grid(cfg)
    nl = _build_nonlinearity(cfg)
    dt = _dt(cfg)
    horizon = float(_require(cfg["time"], "horizon", "time"))
    data = _build_data(cfg, grid, seed)
    traj = evolve(data, pot, nl, 0.0, horizon, dt,
                  report_every=int(cfg.get("report_every", 10)))
    C = energy_rate_constant(pot, nl)
    X0 = traj.reports[0].total
    env = [growth_envelopes(X0, C, nl.r, t).x for t in traj.times]
    rows = _energy_rows(traj, env)
    write_csv(os.path.join(out_dir, "energy.csv"), ENERGY_HEADER, rows)
    manifest["outputs"].append("energy.csv")
    if cfg.get("snapshot", False):
        write_snapshot(os.path.join(out_dir, "final.bin"), traj.states[-1], traj.times[-1])
        manifest["outputs"].append("final.bin")
    manifest["derived"]["energy_rate_constant"] = C
    violations = int(sum(row[-1] for row in rows))
    manifest["derived"]["envelope_violations"] = violations
    manifest["checks"]["envelope_holds"] = violations == 0
    _conservation_check(manifest, traj, static=pot.max_time_derivative() == 0.0)


def _run_multi(cfg, out_dir, seed, threads, manifest):
    multi = _build_potential(cfg)
    if not isinstance(multi, MultiTermSpec):
        raise ConfigError("multi-run needs a potential descriptor of kind 'multi'")
    grid = _build_grid(cfg)
    dt = _dt(cfg)
    horizon = float(_require(cfg["time"], "horizon", "time"))
    data = _build_data(cfg, grid, seed)
    traj = evolve_multi(data, multi, 0.0, horizon, dt,
                        report_every=int(cfg.get("report_every", 10)))
    B = multi_rate_constant(multi)
    r = float(multi.leading_exponent)
    gamma = r / (r + 2.0)
    Y0 = 1.0 + traj.reports[0].total
    env = [(Y0 ** gamma + B * gamma * t) ** (1.0 / gamma) - 1.0 for t in traj.times]
    rows = _energy_rows(traj, env)
    write_csv(os.path.join(out_dir, "energy.csv"), ENERGY_HEADER, rows)
    manifest["outputs"].append("energy.csv")
    manifest["derived"]["multi_rate_constant"] = B
    violations = int(sum(row[-1] for row in rows))
    manifest["derived"]["envelope_violations"] = violations
    manifest["checks"]["shifted_bound_holds"] = violations == 0
    static = all(p.max_time_derivative() == 0.0 for _, p in multi.terms)
    _conservation_check(manifest, traj, static=static)


def _run_instability(cfg, out_dir, seed, threads, manifest):
    pot = _build_potential(cfg)
    if not isinstance(pot, Potential):
        raise ConfigError("instability needs a plain potential")
    grid = _build_grid(cfg)
    nl = _build_nonlinearity(cfg)
    dt = _dt(cfg)
    deltas = [float(d) for d in cfg.get("deltas", (1e-3, 1e-4, 1e-5))]
    floq = dominant_eigenvalue(pot, dt, grid, seed=seed)
    kwargs = dict(eta=cfg.get("eta"), max_n=int(cfg.get("max_n", 200)),
                  growth_constant=float(cfg.get("growth_constant", 0.5)),
                  direction=cfg.get("direction", "eigenstate"), seed=seed)

    def one(delta):
        return instability_certificate(pot, nl, dt, deltas=(delta,), floquet=floq, **kwargs)[0]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        runs = list(pool.map(one, deltas))
    certs = [{"delta": run.delta, "eta": run.eta, "rho": run.rho,
              "escaped_at": run.escaped_at, "iterates": run.iterates,
              "certificate": run.certificate, "min_growth_ratio": run.min_growth_ratio,
              "predicted_escape": predicted_escape(run.delta, run.eta, run.rho)}
             for run in runs]
    atomic_write_json(os.path.join(out_dir, "certificates.json"), certs)
    manifest["outputs"].append("certificates.json")
    manifest["derived"]["rho"] = floq.magnitude
    manifest["derived"]["eta"] = runs[0].eta if runs else None
    if floq.magnitude > 1.0 + 1e-9:
        manifest["checks"]["all_certified"] = all(run.certificate for run in runs)


def _run_bound_check(cfg, out_dir, seed, threads, manifest):
    gammas = [float(g) for g in cfg.get("gammas", (0.1, 0.25, 0.5, 0.9))]
    X0s = [float(x) for x in cfg.get("X0_values", (0.0, 1.0))]
    C = float(cfg.get("C", 1.0))
    trials = int(cfg.get("trials", 1000))
    horizon = float(cfg.get("horizon", 10.0))
    segments = int(cfg.get("segments", 32))
    rows = []
    worst = np.inf
    for gamma in gammas:
        for X0 in X0s:
            p = OdeBoundParams(gamma=gamma, C=C, X0=X0)
            margin = comparison_falsify(p, trials=trials, horizon=horizon,
                                        segments=segments,
                                        rng=np.random.default_rng(seed))
            worst = min(worst, margin)
            rows.append((gamma, C, X0, margin))
    write_csv(os.path.join(out_dir, "bounds.csv"), ["gamma", "C", "X0", "margin"], rows)
    manifest["outputs"].append("bounds.csv")
    manifest["derived"]["worst_margin"] = float(worst)
    manifest["checks"]["margins_nonnegative"] = bool(worst >= -1e-8)


def _run_full_study(cfg, out_dir, seed, threads, manifest):
    """Chains scan -> mode pick -> eigenvalue -> linear growth -> nonlinear
    run -> certificate on the shell-core reference and writes a one-table
    summary of the headline checks."""
    from .presets import reference_barrier_spec, reference_forcing
    eps = float(cfg.get("epsilon", 0.05))
    spec = reference_barrier_spec(epsilon=eps)
    pot = _build_potential({"potential": cfg["potential"]}) if "potential" in cfg else None
    if pot is None:
        from .potentials import build_barrier
        pot = build_barrier(spec)
    elif not isinstance(pot, Potential):
        raise ConfigError("full-study needs a plain potential")
    T = pot.period

    forcing = reference_forcing()
    values = np.linspace(0.05, 2.5, int(cfg.get("scan_count", 241)))
    points = tongue_scan(forcing, forcing.period, values, steps=512)
    write_csv(os.path.join(out_dir, "tongues.csv"),
              ["omega_sq", "trace", "max_multiplier", "unstable"],
              [(p.omega_sq, p.trace, p.max_multiplier, int(p.unstable)) for p in points])
    manifest["outputs"].append("tongues.csv")

    sel = pick_unstable_mode(spec, k_max=8)
    found = sel is not None
    z1 = max(abs(sel.pair.mu1), abs(sel.pair.mu2)) if found else float("nan")

    n = int(cfg.get("grid_n", 768))
    grid = RadialGrid(float(cfg.get("r_max", 7.0)), n)
    dt = 0.5 * grid.dr
    floq = dominant_eigenvalue(pot, dt, grid, seed=seed)
    atomic_write_json(os.path.join(out_dir, "eig.json"),
                      {"magnitude": floq.magnitude,
                       "eigenvalue": [floq.eigenvalue.real, floq.eigenvalue.imag],
                       "residual": floq.residual, "iterations": floq.iterations,
                       "converged": floq.converged})
    manifest["outputs"].append("eig.json")
    gap = abs(floq.magnitude - z1) / z1 if found else float("nan")

    periods = int(cfg.get("periods", 12))
    data = (1.0 / floq.eigenstate.norm1()) * floq.eigenstate
    from .radial import period_map
    apply_T = period_map(pot, grid, dt)
    state = data.copy()
    rows = [(0.0, state.norm0(), state.norm1())]
    for k in range(1, periods + 1):
        state = apply_T(state)
        rows.append((k * T, state.norm0(), state.norm1()))
    write_csv(os.path.join(out_dir, "growth.csv"), ["t", "norm0", "norm1"], rows)
    manifest["outputs"].append("growth.csv")
    rate = growth_rate(pot, data, periods, dt)
    predicted_rate = math.log(z1) / T if found and z1 > 1 else float("nan")
    rate_ok = found and abs(rate - predicted_rate) <= 0.05 * predicted_rate

    nl = NonlinearitySpec(r=float(cfg.get("r", 2.0)))
    horizon = float(cfg.get("nonlinear_periods", 20)) * T
    traj = evolve(data, pot, nl, 0.0, horizon, dt, report_every=50)
    C = energy_rate_constant(pot, nl)
    X0 = traj.reports[0].total
    env = [growth_envelopes(X0, C, nl.r, t).x for t in traj.times]
    write_csv(os.path.join(out_dir, "energy.csv"), ENERGY_HEADER, _energy_rows(traj, env))
    manifest["outputs"].append("energy.csv")
    violations = int(sum(row[-1] for row in _energy_rows(traj, env)))

    runs = instability_certificate(pot, nl, dt, deltas=(float(cfg.get("delta", 1e-3)),),
                                   max_n=int(cfg.get("max_n", 80)), floquet=floq, seed=seed)
    cert = runs[0]
    atomic_write_json(os.path.join(out_dir, "certificates.json"),
                      [{"delta": cert.delta, "eta": cert.eta, "rho": cert.rho,
                        "escaped_at": cert.escaped_at, "iterates": cert.iterates,
                        "certificate": cert.certificate,
                        "min_growth_ratio": cert.min_growth_ratio,
                        "predicted_escape": predicted_escape(cert.delta, cert.eta, cert.rho)}])
    manifest["outputs"].append("certificates.json")

    summary = [
        ("unstable_mode_found", 1.0, float(found), found),
        ("multiplier_gap", 0.10, gap, bool(found and gap <= 0.10)),
        ("linear_rate_rel_err", 0.05, abs(rate - predicted_rate) / predicted_rate
         if found else float("nan"), bool(rate_ok)),
        ("envelope_violations", 0.0, float(violations), violations == 0),
        ("certificate", 1.0, float(cert.certificate), bool(cert.certificate)),
    ]
    write_csv(os.path.join(out_dir, "summary.csv"),
              ["check", "tolerance", "measured", "pass"],
              [(name, tol, meas, int(ok)) for name, tol, meas, ok in summary])
    manifest["outputs"].append("summary.csv")
    manifest["derived"].update({"hill_multiplier_magnitude": z1,
                                "magnitude": floq.magnitude,
                                "growth_rate": rate, "rho": cert.rho, "eta": cert.eta})
    for name, _, _, ok in summary:
        manifest["checks"][name] = bool(ok)


RUNNERS = {
    "hill-scan": _run_hill_scan,
    "floquet-eig": _run_floquet_eig,
    "linear-growth": _run_linear_growth,
    "nonlinear-run": _run_nonlinear,
    "instability": _run_instability,
    "bound-check": _run_bound_check,
    "multi-run": _run_multi,
    "full-study": _run_full_study,
}


# ---------------------------------------------------------------------------
# driver

def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def run(experiment: str, cfg: dict, out_dir: str, seed: int, threads: int) -> int:
    """Dispatch one experiment; writes outputs plus manifest.json (the
    manifest is written even when the run fails its inline checks or
    aborts numerically)."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if cfg.get("experiment") not in (None, experiment):
        raise ConfigError(f"config names experiment {cfg['experiment']!r}, "
                          f"command line says {experiment!r}")
    diagnostics = validate_config(cfg)
    blocking = [d for d in diagnostics if not d.startswith("warning:")]
    if blocking:
        raise ConfigError("; ".join(blocking))
    for d in diagnostics:
        print(d, file=sys.stderr)

    os.makedirs(out_dir, exist_ok=True)
    manifest = {"artifact_version": __version__, "experiment": experiment,
                "config": cfg, "seed": seed, "started_utc": _now(),
                "derived": {}, "outputs": [], "checks": {}, "status": "ok"}
    code = EXIT_OK
    late_config_error: Exception | None = None
    try:
        RUNNERS[experiment](cfg, out_dir, seed, threads, manifest)
        if not all(manifest["checks"].values()):
            manifest["status"] = "invariant-failure"
            code = EXIT_INVARIANT
    except FloatingPointError as e:
        manifest["status"] = "numerical-abort"
        manifest["error"] = str(e)
        code = EXIT_NUMERIC
    except (ConfigError, SpecError, CflError) as e:
        manifest["status"] = "config-error"
        manifest["error"] = str(e)
        late_config_error = e
    finally:
        manifest["finished_utc"] = _now()
        atomic_write_json(os.path.join(out_dir, "manifest.json"), manifest)
    if late_config_error is not None:
        raise late_config_error
    if code == EXIT_INVARIANT:
        failed = [k for k, ok in manifest["checks"].items() if not ok]
        print("invariant failure: " + ", ".join(failed), file=sys.stderr)
    elif code == EXIT_NUMERIC:
        print("numerical abort: " + manifest["error"], file=sys.stderr)
    return code


class _Parser(argparse.ArgumentParser):
    # usage mistakes are config errors, not invariant failures
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"config error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def main(argv=None) -> int:
    parser = _Parser(
        prog="periwave",
        description="Wave-in-a-periodic-potential experiment runner.")
    parser.add_argument("command", help="one of %s, or 'validate'" % ", ".join(EXPERIMENTS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output directory (default: config output_dir, "
                                      "then $PERIWAVE_OUT, then ./periwave-out)")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent sweeps")
    args = parser.parse_args(argv)

    cfg = {}
    if args.config is not None:
        try:
            with open(args.config) as f:
                cfg = json.load(f)
        except FileNotFoundError:
            print(f"config error: no such config file: {args.config}", file=sys.stderr)
            return EXIT_CONFIG
        except json.JSONDecodeError as e:
            print(f"config error: malformed JSON: {e}", file=sys.stderr)
            return EXIT_CONFIG
        if not isinstance(cfg, dict):
            print("config error: top-level JSON value must be an object", file=sys.stderr)
            return EXIT_CONFIG

    if args.command == "validate":
        for line in validate_config(cfg):
            print(line)
        return EXIT_OK

    out_dir = args.out or cfg.get("output_dir") or os.environ.get("PERIWAVE_OUT") \
        or "periwave-out"
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    try:
        return run(args.command, cfg, out_dir, seed, max(1, args.threads))
    except (ConfigError, SpecError, CflError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
