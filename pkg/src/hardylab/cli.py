"""Scenario runner: one experiment per subcommand, artifacts on disk.

Each subcommand assembles a parameter set, runs the corresponding piece of
the library, and writes a versioned JSON report (``schema: 1``) into
``--out-dir``; tabular scenarios also write a CSV whose fixed columns are
documented in the subcommand's ``--help``.  Floats in CSV files carry 17
significant digits so values survive a round trip through text.  Reports
never contain wall-clock data: identical invocations produce identical
bytes.

A flat ``key=value`` file passed via ``--config`` supplies defaults for
any option of any subcommand ('#' starts a comment, dashes and
underscores in keys are interchangeable); explicit command-line flags win
over the file.  Sweeps accept ``--jobs``, defaulting to the ``HSL_JOBS``
environment variable.

Exit codes: 0 on success, 1 on bad usage or parameter validation, 2 on a
numeric failure inside a scenario -- in which case the JSON report is
still written and carries the diagnostic under an ``error`` key.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import click
import numpy as np

from . import __version__, blowup, classifier, constants, greenfn, \
    large_solution, pohozaev, singular_cauchy, variational
from .constants import ProblemParams, omega_n, sobolev_constant
from .errors import DomainError, HardyLabError
from .radial_ode import RadialGrid, RadialProfile, critical_emden_solve

# ---------------------------------------------------------------------------
# plumbing


def _g17(x) -> str:
    """Fixed-width-free float formatting: 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    """Recursively coerce report payloads to valid, deterministic JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        # JSON has no inf/nan; spell them out rather than emitting
        # the nonstandard Infinity token
        return f if math.isfinite(f) else repr(f)
    return obj


def _params_block(params: ProblemParams) -> dict:
    return {"N": params.N, "mu": params.mu, "nu": params.nu,
            "p": params.p, "q": params.q, "eps": params.eps}


def _write_artifacts(command, out_dir, manifest, rows=None, columns=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{command}.json"]
    paths[0].write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    if rows is not None:
        cpath = out / f"{command}.csv"
        with open(cpath, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_g17(v) for v in row])
        paths.append(cpath)
    return paths


def _run_scenario(command, out_dir, params, anchors, tolerances, work):
    """Execute one scenario body and write its artifacts.

    ``work`` returns (results dict, csv rows or None, csv columns).
    Parameter validation errors propagate (exit 1 in main); any other
    library failure is recorded in the JSON report and exits 2.
    """
    manifest = {
        "schema": 1,
        "command": command,
        "version": __version__,
        "anchors": list(anchors),
        "tolerances": dict(tolerances),
        "params": _params_block(params) if params is not None else None,
    }
    try:
        results, rows, columns = work()
    except DomainError:
        raise
    except HardyLabError as exc:
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
        _write_artifacts(command, out_dir, manifest)
        click.echo(f"{command}: {type(exc).__name__}: {exc}", err=True)
        raise SystemExit(2)
    manifest["results"] = results
    for path in _write_artifacts(command, out_dir, manifest, rows, columns):
        click.echo(str(path))


def _read_config(path: str) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(
                f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _float_list(text: str, option: str) -> list:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"{option} wants comma-separated floats, "
                               f"got {text!r}")
    if not vals:
        raise click.UsageError(f"{option} is empty")
    return vals


def _build_params(n, mu, nu, p=None, q=None, eps=0.0) -> ProblemParams:
    if (mu is None) == (nu is None):
        raise click.UsageError("pass exactly one of --mu / --nu")
    if p is None:
        p = (n + 2.0) / (n - 2.0)
    if q is None:
        q = p + 1.0
    if nu is not None:
        return ProblemParams.from_nu(n, nu, p, q, eps)
    return ProblemParams(N=n, mu=mu, p=p, q=q, eps=eps)


def _geometry_options(fn):
    fn = click.option("--nu", type=float, default=None,
                      help="Indicial root; alternative to --mu.")(fn)
    fn = click.option("--mu", type=float, default=None,
                      help="Hardy coefficient, 0 <= mu < ((N-2)/2)^2.")(fn)
    fn = click.option("--n", "n", type=int, required=True,
                      help="Dimension N >= 3.")(fn)
    return fn


def _param_options(fn):
    fn = click.option("--eps", type=float, default=0.0, show_default=True,
                      help="Absorption strength.")(fn)
    fn = click.option("--q", type=float, required=True,
                      help="Absorption exponent (q > p).")(fn)
    fn = click.option("--p", type=float, default=None,
                      help="Source exponent  [default: (N+2)/(N-2)].")(fn)
    return _geometry_options(fn)


def _family_options(fn):
    """Parameter options for the vanishing-absorption family commands."""
    fn = click.option("--q", type=float, required=True,
                      help="Absorption exponent, p < q < (1+nu)/nu.")(fn)
    fn = click.option("--p", type=float, default=None,
                      help="Source exponent  [default: (N+2)/(N-2)].")(fn)
    return _geometry_options(fn)


def _output_option(fn):
    return click.option("--out-dir", type=click.Path(file_okay=False),
                        default=".", show_default=True,
                        help="Directory receiving the JSON/CSV artifacts.")(fn)


# ---------------------------------------------------------------------------
# group


@click.group(invoke_without_command=True)
@click.version_option(__version__, prog_name="hsl")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None,
              help="Flat key=value file supplying option defaults.")
@click.pass_context
def cli(ctx, config):
    """Numerical scenarios for the singular two-power radial problem."""
    if config is not None:
        defaults = _read_config(config)
        ctx.default_map = {name: dict(defaults) for name in cli.commands}
    if ctx.invoked_subcommand is None:
        click.echo(cli.get_help(ctx))
        ctx.exit(1)


# ---------------------------------------------------------------------------
# scenarios


@cli.command("derive")
@_param_options
@_output_option
def derive_cmd(n, mu, nu, p, q, eps, out_dir):
    """Emit every derived exponent and constant for one parameter set."""
    params = _build_params(n, mu, nu, p, q, eps)

    def work():
        der = constants.derive(params)
        results = {
            "mu_bar": params.mu_bar,
            "nu": params.nu,
            "nu_prime": params.nu_prime,
            "alpha": params.alpha,
            "omega_n": omega_n(params.N),
            "sobolev_constant": sobolev_constant(params),
            **asdict(der),
        }
        return results, None, None

    _run_scenario("derive", out_dir, params, ["exponent-derivations"],
                  {}, work)


@cli.command("picard")
@_param_options
@click.option("--delta", type=float, required=True,
              help="Boundary level of the fixed-point window.")
@click.option("--r-max", type=float, default=1.0, show_default=True,
              help="Outer radius of the window.")
@click.option("--grid-points", type=int, default=2000, show_default=True)
@click.option("--max-iters", type=int, default=200, show_default=True)
@click.option("--tol", type=float, default=1e-14, show_default=True)
@click.option("--a-coef", type=float, default=1.0, show_default=True,
              help="Absorption coefficient A of the model equation.")
@click.option("--window-search/--fixed-window", default=True,
              show_default=True,
              help="Halve r_max until the iteration contracts.")
@_output_option
def picard_cmd(n, mu, nu, p, q, eps, delta, r_max, grid_points, max_iters,
               tol, a_coef, window_search, out_dir):
    """Fixed point of the singular integral map.  CSV columns: r,w,dw."""
    params = _build_params(n, mu, nu, p, q, eps)

    def work():
        cfg = singular_cauchy.PicardConfig(
            delta=delta, r_max=r_max, grid_points=grid_points,
            max_iters=max_iters, tol=tol, A=a_coef)
        if window_search:
            res = singular_cauchy.solve_with_window_search(params, cfg)
        else:
            res = singular_cauchy.solve_picard(params, cfg)
        dir_energy, abs_energy = singular_cauchy.energy_check(params, res)
        deviation = singular_cauchy.cross_validate_ode(params, res)
        prof = res.profile
        results = {
            "iterations": res.iterations,
            "converged": res.converged,
            "contraction_estimate": res.contraction_estimate,
            "r_max": res.config.r_max,
            "sup_deviation_from_delta": float(np.max(prof.values)) - delta,
            "dirichlet_energy": dir_energy,
            "absorption_energy": abs_energy,
            "ode_cross_validation": deviation,
        }
        rows = zip(prof.r, prof.values, prof.derivs)
        return results, rows, ["r", "w", "dw"]

    _run_scenario("picard", out_dir, params,
                  ["picard-fixed-point", "energy-admissibility",
                   "ode-cross-validation"],
                  {"tol": tol}, work)


@cli.command("large")
@_param_options
@click.option("--u0", type=float, required=True,
              help="Center value of the shot.")
@click.option("--cap", type=float, default=1e8, show_default=True,
              help="Value at which the solution counts as blown up.")
@click.option("--r-limit", type=float, default=100.0, show_default=True)
@click.option("--n-out", type=int, default=1200, show_default=True)
@_output_option
def large_cmd(n, mu, nu, p, q, eps, u0, cap, r_limit, n_out, out_dir):
    """Shoot the exploding absorption profile.  CSV columns: r,u,du."""
    params = _build_params(n, mu, nu, p, q, eps)

    def work():
        sol = large_solution.shoot_large(params, u0, cap=cap,
                                         r_limit=r_limit, n_out=n_out)
        results = {
            "blowup_radius": sol.blowup_radius,
            "cap_shift": sol.cap_shift,
            "u0": u0,
            "cap": cap,
        }
        prof = sol.profile
        rows = zip(prof.r, prof.values, prof.derivs)
        return results, rows, ["r", "u", "du"]

    _run_scenario("large", out_dir, params,
                  ["large-solution-shooting", "blowup-radius"],
                  {"cap": cap}, work)


@cli.command("classify")
@_param_options
@click.option("--log-corrected", is_flag=True,
              help="Fit the log-corrected profile on the borderline.")
@_output_option
def classify_cmd(n, mu, nu, p, q, eps, log_corrected, out_dir):
    """Classify the origin singularity of the regime's model profile.

    The profile is synthesized from the parameters themselves: the exact
    power solution in the absorption regime (amplitude from --eps when
    positive), the log-corrected model on the borderline, and the
    integral-equation fixed point below it.  CSV columns: r,u.
    """
    params = _build_params(n, mu, nu, p, q, eps)

    def work():
        der = constants.derive(params)
        nu_v = params.nu
        on_line = math.isfinite(der.q_star) and \
            abs(params.q - der.q_star) <= 1e-9 * max(1.0, der.q_star)
        if on_line:
            grid = RadialGrid.log(1e-12, 1e-3, 600)
            rr = grid.radii
            amp = (params.alpha * nu_v / 2.0) ** (nu_v / 2.0)
            ell = -np.log(rr)
            u = amp * rr ** (-nu_v) * ell ** (-nu_v / 2.0)
            du = amp * (-nu_v * rr ** (-nu_v - 1.0) * ell ** (-nu_v / 2.0)
                        + rr ** (-nu_v - 1.0) * (nu_v / 2.0)
                        * ell ** (-nu_v / 2.0 - 1.0))
            prof = RadialProfile(grid, u, derivs=du, meaning="u")
            source = "log-corrected model"
            verdict = classifier.classify(params, prof, log_corrected=True)
        elif params.q > der.q_star:
            m = der.m_abs
            if params.eps > 0.0:
                c = ((params.mu - m * (params.N - 2.0 - m))
                     / params.eps) ** (1.0 / (params.q - 1.0))
            else:
                c = 1.0
            grid = RadialGrid.log(1e-6, 1.0, 600)
            rr = grid.radii
            prof = RadialProfile(grid, c * rr ** (-m),
                                 derivs=-m * c * rr ** (-m - 1.0),
                                 meaning="u")
            source = "absorption power model"
            verdict = classifier.classify(params, prof,
                                          log_corrected=log_corrected)
        else:
            cfg = singular_cauchy.PicardConfig(delta=1.0, r_max=0.5,
                                               grid_points=1200)
            fixed = singular_cauchy.solve_with_window_search(params, cfg)
            rr = fixed.profile.r
            w, dw = fixed.profile.values, fixed.profile.derivs
            u = rr ** (-nu_v) * w
            du = rr ** (-nu_v) * dw - nu_v * rr ** (-nu_v - 1.0) * w
            prof = RadialProfile(fixed.profile.grid, u, derivs=du,
                                 meaning="u")
            source = "picard fixed point"
            verdict = classifier.classify(params, prof,
                                          log_corrected=log_corrected)
        fitted = verdict.fitted
        results = {
            "regime": verdict.regime,
            "expected_exponent": verdict.expected_exponent,
            "expected_amplitude": verdict.expected_amplitude,
            "fitted_exponent": fitted.exponent,
            "fitted_amplitude": fitted.amplitude,
            "fit_window": list(fitted.window),
            "rms_residual": fitted.rms_residual,
            "log_power": fitted.log_power,
            "passed": verdict.passed,
            "profile_source": source,
        }
        rows = zip(prof.r, prof.values)
        return results, rows, ["r", "u"]

    _run_scenario("classify", out_dir, params,
                  ["origin-regime-classification"], {}, work)


@cli.command("critical")
@_param_options
@click.option("--amp-a", type=float, default=1.0, show_default=True,
              help="Absorption coefficient A of the borderline equation.")
@click.option("--s-start", type=float, default=1e4, show_default=True,
              help="Asymptote anchor (integration runs downward).")
@click.option("--s-end", type=float, default=100.0, show_default=True)
@click.option("--n-out", type=int, default=800, show_default=True)
@_output_option
def critical_cmd(n, mu, nu, p, q, eps, amp_a, s_start, s_end, n_out,
                 out_dir):
    """Borderline log-amplitude: track x (A (q-1) s)^{1/(q-1)} toward 1.

    Needs q = (2+nu)/nu.  CSV columns: s,x,scaled.
    """
    params = _build_params(n, mu, nu, p, q, eps)

    def work():
        prof = critical_emden_solve(params, amp_a, s_start, s_end,
                                    n_out=n_out)
        s, x = prof.r, prof.values
        scaled = x * (amp_a * (params.q - 1.0) * s) ** (1.0 / (params.q - 1.0))
        k = params.q / (params.q - 1.0) ** 2
        amp_target = (params.alpha * params.nu / 2.0) ** (params.nu / 2.0)
        results = {
            "scaled_amplitude_end": float(scaled[0]),
            "deviation_end": float(abs(scaled[0] - 1.0)),
            "predicted_log_correction": k * math.log(s[0]) / s[0],
            "amplitude_target": amp_target,
            "u_amplitude": amp_target * float(scaled[0]),
            "s_end": float(s[0]),
        }
        rows = zip(s, x, scaled)
        return results, rows, ["s", "x", "scaled"]

    _run_scenario("critical", out_dir, params,
                  ["critical-line-log-amplitude"], {}, work)


@cli.command("pohozaev")
@_param_options
@click.option("--radius", type=float, default=1.0, show_default=True,
              help="Ball radius for the manufactured check.")
@click.option("--nodes", type=int, default=2000, show_default=True)
@click.option("--rho", type=float, default=None,
              help="Run the variational route on the ball of this radius "
                   "instead of the manufactured one.")
@click.option("--tol", type=float, default=1e-12, show_default=True,
              help="Descent tolerance of the variational route.")
@click.option("--dirichlet", is_flag=True,
              help="Drop boundary-trace terms (variational route).")
@_output_option
def pohozaev_cmd(n, mu, nu, p, q, eps, radius, nodes, rho, tol, dirichlet,
                 out_dir):
    """Flux-virial identity residuals, manufactured or variational.

    Without --rho: evaluates both identity forms on a smooth profile with
    its exact defect supplied, so the residual is pure quadrature error.
    With --rho: minimizes on the ball, rescales the minimizer to the
    --eps problem (eps 1 when unset), and reports the identity residual.
    """
    params = _build_params(n, mu, nu, p, q, eps)

    def work_manufactured():
        grid = RadialGrid.log(1e-6 * radius, radius, nodes)
        rr = grid.radii
        u = 1.0 / (1.0 + rr ** 2)
        du = -2.0 * rr / (1.0 + rr ** 2) ** 2
        prof = RadialProfile(grid, u, derivs=du, meaning="u")

        def defect(r):
            uu = 1.0 / (1.0 + r ** 2)
            dd = -2.0 * r / (1.0 + r ** 2) ** 2
            lap = (-2.0 + 6.0 * r ** 2) / (1.0 + r ** 2) ** 3 \
                + (params.N - 1.0) / r * dd
            return (-lap - params.mu * uu / r ** 2
                    - uu ** params.p + params.eps * uu ** params.q)

        rep_u = pohozaev.pohozaev_u(params, prof, forcing=defect)
        vv = rr ** params.nu * u
        dv = params.nu * rr ** (params.nu - 1.0) * u + rr ** params.nu * du
        prof_v = RadialProfile(grid, vv, derivs=dv, meaning="v")
        rep_v = pohozaev.pohozaev_v_weighted(params, prof_v, forcing=defect)
        results = {
            "mode": "manufactured",
            "residual_u": rep_u.residual,
            "residual_weighted": rep_v.residual,
            "scale_u": rep_u.scale,
            "scale_weighted": rep_v.scale,
        }
        return results, None, None

    def work_variational():
        grid = RadialGrid.log(rho * 1e-7, rho, nodes)
        spec = variational.FunctionalSpec("Fhat_on_manifold", params, rho,
                                          grid=grid)
        res = variational.minimize_on_manifold(spec, tol=tol)
        eps_req = params.eps if params.eps > 0.0 else 1.0
        eps_hat = variational.effective_eps(params, res, eps_req)
        prof = variational.rescale_to_eps(params, res, eps_req,
                                          include_multiplier=True)
        par_eps = replace(params, eps=eps_hat)
        rep = pohozaev.pohozaev_v_weighted(par_eps, prof,
                                           dirichlet=dirichlet)
        results = {
            "mode": "variational",
            "rho": rho,
            "eps_effective": eps_hat,
            "multiplier": res.multiplier,
            "iterations": res.iterations,
            "converged": res.converged,
            "residual_weighted": rep.residual,
            "scale_weighted": rep.scale,
            "boundary_gradient_term": rep.boundary_gradient_term,
            "volume_q_term": rep.volume_q_term,
        }
        rows = zip(prof.r, prof.values)
        return results, rows, ["r", "v"]

    work = work_manufactured if rho is None else work_variational
    _run_scenario("pohozaev", out_dir, params,
                  ["virial-flux-identity"], {"tol": tol}, work)


@cli.command("green")
@_geometry_options
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.option("--samples", type=int, default=9, show_default=True,
              help="Log-spaced sample radii for values and bounds.")
@_output_option
def green_cmd(n, mu, nu, radius, samples, out_dir):
    """Closed-form radial kernel on the ball.  CSV columns: r,green,dgreen."""
    params = _build_params(n, mu, nu)

    def work():
        gb = greenfn.green_ball(params, radius)
        radii = np.geomspace(radius * 1e-4, radius, samples)
        bound = greenfn.green_bound_check(gb, radii)
        lhs, rhs, rel = greenfn.robin_flux_identity(gb)
        results = {
            "alpha": gb.alpha,
            "robin_at_0": gb.robin_at_0,
            "flux_lhs": lhs,
            "flux_rhs": rhs,
            "flux_residual": rel,
            "bound_check": bound,
        }
        rows = zip(radii, gb.green(radii), gb.green_gradient(radii))
        return results, rows, ["r", "green", "dgreen"]

    _run_scenario("green", out_dir, params,
                  ["weighted-green-closed-form", "green-pointwise-bound"],
                  {}, work)


@cli.command("robin")
@_geometry_options
@click.option("--radius", type=float, default=1.0, show_default=True)
@_output_option
def robin_cmd(n, mu, nu, radius, out_dir):
    """Zero-order boundary coefficient and its flux identity."""
    params = _build_params(n, mu, nu)

    def work():
        gb = greenfn.green_ball(params, radius)
        lhs, rhs, rel = greenfn.robin_flux_identity(gb)
        results = {
            "alpha": gb.alpha,
            "robin_at_0": gb.robin_at_0,
            "flux_lhs": lhs,
            "flux_rhs": rhs,
            "flux_residual": rel,
        }
        return results, None, None

    _run_scenario("robin", out_dir, params, ["robin-flux-identity"],
                  {}, work)


@cli.command("doubling")
@_geometry_options
@click.option("--x-norm", type=float, default=0.7, show_default=True,
              help="Center distance from the origin.")
@click.option("--r0", type=float, default=0.1, show_default=True,
              help="Base radius.")
@click.option("--k-max", type=int, default=8, show_default=True)
@click.option("--pairs", type=int, default=0, show_default=True,
              help="Additionally check this many random (center, radius) "
                   "pairs.")
@click.option("--seed", type=int, default=0, show_default=True)
@_output_option
def doubling_cmd(n, mu, nu, x_norm, r0, k_max, pairs, seed, out_dir):
    """Lower doubling of the weighted measure.  CSV: x_norm,r,constant,upper."""
    params = _build_params(n, mu, nu)

    def work():
        measure = greenfn.WeightedMeasure(N=params.N, nu=params.nu)
        checks = [(x_norm, r0)]
        if pairs > 0:
            rng = np.random.default_rng(seed)
            for _ in range(pairs):
                checks.append((float(rng.uniform(0.05, 2.0)),
                               float(10.0 ** rng.uniform(-2.0, 0.0))))
        rows, constants_, uppers = [], [], []
        for xc, rc in checks:
            rep = greenfn.doubling_check(measure, xc, rc, k_max=k_max)
            rows.append((xc, rc, rep.constant, rep.constant_upper))
            constants_.append(rep.constant)
            uppers.append(rep.constant_upper)
        origin_mass = measure.ball(0.0, r0)
        e = measure.exponent
        origin_closed = omega_n(params.N) * r0 ** e / e
        results = {
            "exponent": e,
            "worst_constant": min(constants_),
            "worst_upper": max(uppers),
            "all_positive": bool(min(constants_) > 0.0),
            "origin_mass": origin_mass,
            "origin_mass_closed": origin_closed,
            "origin_mass_residual":
                abs(origin_mass - origin_closed) / origin_closed,
        }
        return results, rows, ["x_norm", "r", "constant", "upper"]

    _run_scenario("doubling", out_dir, params,
                  ["weighted-measure-doubling", "origin-ball-mass"],
                  {}, work)


@cli.command("minimize")
@_param_options
@click.option("--rho", type=float, required=True, help="Ball radius.")
@click.option("--nodes", type=int, default=1200, show_default=True)
@click.option("--inner", type=float, default=None,
              help="Absolute inner cutoff  [default: 1e-7 rho].")
@click.option("--max-iters", type=int, default=4000, show_default=True)
@click.option("--tol", type=float, default=1e-12, show_default=True)
@click.option("--step-cap", type=float, default=None,
              help="Upper bound on the descent step.")
@_output_option
def minimize_cmd(n, mu, nu, p, q, eps, rho, nodes, inner, max_iters, tol,
                 step_cap, out_dir):
    """Constrained minimization on the ball.  CSV columns: r,w,u."""
    params = _build_params(n, mu, nu, p, q, eps)

    def work():
        grid = None
        if inner is not None:
            grid = RadialGrid.log(inner, rho, nodes)
        elif nodes != variational.DEFAULT_NODES:
            grid = RadialGrid.log(rho * 1e-7, rho, nodes)
        spec = variational.FunctionalSpec("Fhat_on_manifold", params, rho,
                                          grid=grid)
        res = variational.minimize_on_manifold(spec, max_iters=max_iters,
                                               tol=tol, step_cap=step_cap)
        el = variational.euler_lagrange_residual(params, res)
        s_spec = variational.FunctionalSpec("S_quotient", params, rho,
                                            grid=spec.grid)
        s_val = variational.evaluate(s_spec, res.profile)
        ell = constants.derive(params).l
        f_val = None
        if math.isfinite(ell):
            f_spec = variational.FunctionalSpec("F_two_term", params, rho,
                                                grid=spec.grid)
            f_val = variational.evaluate(f_spec, res.profile)
        bracket_ok = (2.0 * res.value < res.multiplier
                      < (params.q + 1.0) * res.value)
        results = {
            "value": res.value,
            "multiplier": res.multiplier,
            "s_quotient": s_val,
            "f_two_term": f_val,
            "bracket_low": 2.0 * res.value,
            "bracket_high": (params.q + 1.0) * res.value,
            "bracket_ok": bracket_ok,
            "iterations": res.iterations,
            "converged": res.converged,
            "constraint_residual": res.constraint_residual,
            "clip_shift": res.clip_shift,
            "projection_shift": res.projection_shift,
            "euler_lagrange_residual": el,
        }
        rr = res.profile.r
        rows = zip(rr, res.profile.values,
                   rr ** (-params.nu) * res.profile.values)
        return results, rows, ["r", "w", "u"]

    _run_scenario("minimize", out_dir, params,
                  ["constrained-minimization", "multiplier-bracket",
                   "stationarity-residual"],
                  {"tol": tol}, work)


@cli.command("sweep-rho")
@_param_options
@click.option("--rho", type=str, required=True,
              help="Comma-separated ball radii.")
@click.option("--nodes", type=int, default=1200, show_default=True)
@click.option("--max-iters", type=int, default=4000, show_default=True)
@click.option("--tol", type=float, default=1e-12, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True,
              envvar="HSL_JOBS", help="Worker pool size.")
@_output_option
def sweep_rho_cmd(n, mu, nu, p, q, eps, rho, nodes, max_iters, tol,
                  jobs, out_dir):
    """Minimize across growing balls.  CSV: rho,value,multiplier,iters,converged,bracket_ok.

    Members run in a pool of --jobs workers; rows keep input order.
    """
    params = _build_params(n, mu, nu, p, q, eps)
    rhos = _float_list(rho, "--rho")

    def work():
        def one(rho):
            grid = None
            if nodes != variational.DEFAULT_NODES:
                grid = RadialGrid.log(rho * 1e-7, rho, nodes)
            spec = variational.FunctionalSpec("Fhat_on_manifold", params,
                                              rho, grid=grid)
            res = variational.minimize_on_manifold(
                spec, max_iters=max_iters, tol=tol)
            ok = (2.0 * res.value < res.multiplier
                  < (params.q + 1.0) * res.value)
            return (rho, res.value, res.multiplier, res.iterations,
                    res.converged, ok)

        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            rows = list(pool.map(one, rhos))
        by_rho = sorted(rows, key=lambda row: row[0])
        values = [row[1] for row in by_rho]
        results = {
            "rho": [row[0] for row in rows],
            "value": [row[1] for row in rows],
            "multiplier": [row[2] for row in rows],
            "bracket_all_ok": all(row[5] for row in rows),
            "monotone_nonincreasing": all(
                a >= b - 1e-12 * abs(a) for a, b in zip(values, values[1:])),
        }
        return results, rows, ["rho", "value", "multiplier", "iterations",
                               "converged", "bracket_ok"]

    _run_scenario("sweep-rho", out_dir, params,
                  ["domain-growth-sweep", "multiplier-bracket"],
                  {"tol": tol}, work)


@cli.command("blowup")
@_family_options
@click.option("--radius", type=float, default=1.0, show_default=True,
              help="Ball radius of the perturbed problem.")
@click.option("--eps-seq", type=str,
              default="0.1,0.05,0.025,0.0125", show_default=True,
              help="Comma-separated absorption strengths (>= 3).")
@click.option("--nodes", type=int, default=2000, show_default=True)
@click.option("--tol", type=float, default=1e-15, show_default=True)
@_output_option
def blowup_cmd(n, mu, nu, p, q, radius, eps_seq, nodes, tol, out_dir):
    """Vanishing-absorption family and its limit-window comparison.

    CSV columns: eps_requested,eps_effective,sup_norm,gamma,multiplier,
    z_origin.
    """
    params = _build_params(n, mu, nu, p, q)
    eps_sequence = _float_list(eps_seq, "--eps-seq")

    def work():
        points = blowup.solve_family(params, R=radius,
                                     eps_sequence=eps_sequence,
                                     nodes=nodes, tol=tol)
        report = blowup.z_limit_check(points, params)
        results = {
            "members": len(points),
            "sup_norms": [pt.sup_norm for pt in points],
            "eps_effective": [pt.eps for pt in points],
            **asdict(report),
        }
        rows = [(pt.eps_requested, pt.eps, pt.sup_norm, pt.gamma,
                 pt.multiplier, pt.z_origin) for pt in points]
        return results, rows, ["eps_requested", "eps_effective", "sup_norm",
                               "gamma", "multiplier", "z_origin"]

    _run_scenario("blowup", out_dir, params,
                  ["vanishing-absorption-family", "limit-profile-window"],
                  {"tol": tol}, work)


@cli.command("rate")
@_family_options
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.option("--eps-seq", type=str,
              default="0.1,0.05,0.025,0.0125", show_default=True,
              help="Comma-separated absorption strengths (>= 4).")
@click.option("--nodes", type=int, default=2000, show_default=True)
@click.option("--tol", type=float, default=1e-15, show_default=True)
@_output_option
def rate_cmd(n, mu, nu, p, q, radius, eps_seq, nodes, tol, out_dir):
    """Divergence-rate constant: family, extrapolation, closed form.

    CSV columns: eps_effective,left_hand,flux_residual.
    """
    params = _build_params(n, mu, nu, p, q)
    eps_sequence = _float_list(eps_seq, "--eps-seq")

    def work():
        points = blowup.solve_family(params, R=radius,
                                     eps_sequence=eps_sequence,
                                     nodes=nodes, tol=tol)
        report = blowup.rate_limit(points, params, R=radius)
        balance = blowup.pohozaev_balance(points, params)
        results = {
            "rate_exponent": blowup.rate_exponent(params),
            "flux_balance_residuals": list(balance),
            **asdict(report),
        }
        rows = zip(report.eps_sequence, report.left_hand, balance)
        return results, rows, ["eps_effective", "left_hand",
                               "flux_residual"]

    _run_scenario("rate", out_dir, params,
                  ["blowup-rate-richardson", "rate-closed-form",
                   "family-flux-balance"],
                  {"tol": tol}, work)


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="hsl", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DomainError as exc:
        click.echo(f"parameter validation failed: {exc}", err=True)
        return 1
    except HardyLabError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        return 2
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
