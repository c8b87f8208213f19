"""Command-line front end.

Usage:
    fracnls solve --s 1 --omega 1.5
    fracnls krein --s 0.5 --omega 1.5
    fracnls spectrum --s 1 --omega 2
    fracnls sweep --s-list 0.5,0.7,0.9,1.0 --omega-min 1.1 --omega-max 3 --omega-step 0.1
    fracnls validate-exact --omega 1.5

Exit codes: 0 ok, 2 convergence/numerical failure, 3 invalid input, 4 validation failure.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import os
import sys
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import click
import numpy as np

from .elliptic import EllipticParams
from .errors import DomainError, FracNLSError, ShapeError
from .grid import PeriodicGrid
from .krein import DEFAULT_FD_STEP, analyze_wave, sector_counts
from .sweep import COLUMNS, FAILED, omega_grid, run_sweep, worker_count, write_chain_csv
from .wave import DEFAULT_N_MODES, SolverConfig, check_wave_exponent, lobe_check, solve_wave

EXIT_OK = 0
EXIT_CONVERGENCE = 2
EXIT_INPUT = 3
EXIT_VALIDATION = 4


class ValidationFailed(FracNLSError):
    stage = "validate"


@dataclass
class RunManifest:
    command: str
    parameters: dict
    output_dir: str
    timestamp: str
    artifact_paths: list = dc_field(default_factory=list)


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the manifest time for reproducible output trees
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (
        dt.datetime.fromtimestamp(int(epoch), tz=dt.timezone.utc)
        if epoch
        else dt.datetime.now(tz=dt.timezone.utc)
    )
    return when.replace(microsecond=0).isoformat()


class Run:
    """Collects artifacts for one invocation and writes the manifest last."""

    def __init__(self, command: str, params: dict, output_dir: str, force: bool):
        self.dir = Path(output_dir)
        if self.dir.exists() and any(self.dir.iterdir()) and not force:
            raise DomainError(f"output directory {self.dir} is not empty (use --force)")
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command, params, str(self.dir), _timestamp())

    def path(self, name: str) -> Path:
        self.manifest.artifact_paths.append(name)
        return self.dir / name

    def finish(self) -> Path:
        missing = [n for n in self.manifest.artifact_paths if not (self.dir / n).exists()]
        if missing:
            raise FracNLSError(f"artifacts missing before manifest write: {missing}")
        out = self.dir / "manifest.json"
        out.write_text(json.dumps(asdict(self.manifest), indent=1, sort_keys=True) + "\n")
        return out


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_plain) + "\n")


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _config(ctx_params) -> SolverConfig:
    return SolverConfig(
        newton_tol=ctx_params["tol"],
        gmres_tol=ctx_params["gmres_tol"],
        dealias=ctx_params.get("dealias", False),
    )


def _grid(n_modes: int) -> PeriodicGrid:
    return PeriodicGrid(n_modes)


def _check_s(s: float) -> float:
    return check_wave_exponent(s)


def common_options(*names):
    table = {
        "s": click.option("--s", "s", type=float, required=True, help="Fractional exponent in (1/4, 1]."),
        "omega": click.option("--omega", type=float, required=True, help="Wave frequency."),
        "n_modes": click.option("--n-modes", type=int, default=DEFAULT_N_MODES, show_default=True),
        "basis_cutoff": click.option("--basis-cutoff", type=int, default=None, help="Parity-basis size M (default N/4)."),
        "tol": click.option("--tol", type=float, default=1e-6, show_default=True, help="Newton residual tolerance."),
        "gmres_tol": click.option("--gmres-tol", type=float, default=1e-8, show_default=True),
        "kernel_tol": click.option("--kernel-tol", type=float, default=None),
        "fd_step": click.option("--fd-step", type=float, default=DEFAULT_FD_STEP, show_default=True),
        "output_dir": click.option("--output-dir", type=click.Path(file_okay=False), default="fracnls-out", show_default=True),
        "force": click.option("--force", is_flag=True, help="Allow writing into a non-empty output directory."),
        "json": click.option("--json", "as_json", is_flag=True, help="Print a JSON summary on stdout."),
    }

    def deco(f):
        for name in reversed(names):
            f = table[name](f)
        return f

    return deco


@click.group()
def cli():
    """Odd periodic standing waves of the defocusing fractional NLS and their Krein counts."""


@cli.command()
@common_options("s", "omega", "n_modes", "tol", "gmres_tol", "output_dir", "force", "json")
@click.option("--dealias", is_flag=True, help="Zero-pad the cubic term 2x.")
def solve(**p):
    """Solve for the wave and write profile JSON + CSV."""
    s = _check_s(p["s"])
    cfg = _config(p)
    grid = _grid(p["n_modes"])
    run = Run("solve", p, p["output_dir"], p["force"])
    wave = solve_wave(s, p["omega"], cfg, grid)
    wave.write_json(run.path("profile.json"))
    wave.write_csv(run.path("profile.csv"))
    try:
        cert = lobe_check(wave)
        lobe = f"certified (max at {cert.x_max:.6f}, min at {cert.x_min:.6f})"
    except ShapeError as exc:
        lobe = f"NOT certified: {exc}"
    run.finish()
    summary = {
        "s": s,
        "omega": wave.omega,
        "residual_norm": wave.residual_norm,
        "newton_iters": wave.newton_iters,
        "norm_sq": wave.norm_sq,
        "lobe_check": lobe,
    }
    if p["as_json"]:
        click.echo(json.dumps(summary, sort_keys=True))
    else:
        click.echo(f"residual max-norm: {wave.residual_norm:.3e}")
        click.echo(f"newton iterations: {wave.newton_iters}")
        click.echo(f"||phi||^2:         {wave.norm_sq:.12g}")
        click.echo(f"two-lobe check:    {lobe}")
    return EXIT_OK


def _sector_table(counts) -> str:
    lines = [f"{'operator':<8} {'sector':<6} {'n_neg':>5} {'n_zero':>6}  lowest eigenvalues"]
    for (kind, parity), rep in counts.items():
        low = " ".join(f"{v: .4e}" for v in rep.eigenvalues[:3])
        lines.append(f"{kind:<8} {parity:<6} {rep.n_neg:>5} {rep.n_zero:>6}  {low}")
    for kind in ("L1", "L2"):
        n = sum(counts[(kind, q)].n_neg for q in ("odd", "even"))
        z = sum(counts[(kind, q)].n_zero for q in ("odd", "even"))
        lines.append(f"{kind:<8} {'full':<6} {n:>5} {z:>6}")
    return "\n".join(lines)


@cli.command()
@common_options("s", "omega", "n_modes", "basis_cutoff", "tol", "gmres_tol", "kernel_tol", "output_dir", "force", "json")
def spectrum(**p):
    """Negative/kernel counts of L1 and L2 in both parity sectors."""
    s = _check_s(p["s"])
    cfg = _config(p)
    grid = _grid(p["n_modes"])
    run = Run("spectrum", p, p["output_dir"], p["force"])
    wave = solve_wave(s, p["omega"], cfg, grid)
    counts = sector_counts(wave, p["kernel_tol"], p["basis_cutoff"])
    records = [rep.to_record() for rep in counts.values()]
    _dump(records, run.path("spectrum.json"))
    run.finish()
    if p["as_json"]:
        click.echo(json.dumps(records, sort_keys=True))
    else:
        click.echo(_sector_table(counts))
    return EXIT_OK


@cli.command()
@common_options("s", "omega", "n_modes", "basis_cutoff", "tol", "gmres_tol", "kernel_tol", "fd_step", "output_dir", "force", "json")
def krein(**p):
    """Sector counts, V entries and the Krein-index verdict."""
    s = _check_s(p["s"])
    cfg = _config(p)
    grid = _grid(p["n_modes"])
    run = Run("krein", p, p["output_dir"], p["force"])
    wave = solve_wave(s, p["omega"], cfg, grid)
    report = analyze_wave(wave, cfg, p["basis_cutoff"], p["kernel_tol"], p["fd_step"])
    record = report.to_record()
    _dump(record, run.path("krein_report.json"))
    run.finish()
    if p["as_json"]:
        click.echo(json.dumps(record, sort_keys=True, default=_plain))
        return EXIT_OK
    oc = report.operator_counts
    click.echo(f"s={s} omega={wave.omega}  v_odd={report.v_odd:.10g}  v_even={report.v_even:.10g}")
    if report.dnorm_domega is not None:
        click.echo(f"1/2 d/domega ||phi||^2 (FD) = {report.dnorm_domega:.10g}")
    click.echo(
        f"n(L1)={oc['L1_odd']['n_neg'] + oc['L1_even']['n_neg']} "
        f"z(L1)={oc['L1_odd']['n_zero'] + oc['L1_even']['n_zero']} "
        f"n(L2)={oc['L2_odd']['n_neg'] + oc['L2_even']['n_neg']} "
        f"z(L2)={oc['L2_odd']['n_zero'] + oc['L2_even']['n_zero']}"
    )
    click.echo(f"{'sector':<6} {'n(L)':>4} {'n(V)':>4} {'diff':>4}")
    click.echo(f"{'odd':<6} {report.n_L_odd:>4} {report.n_V_odd:>4} {report.diff_odd:>4}")
    click.echo(f"{'even':<6} {report.n_L_even:>4} {report.n_V_even:>4} {report.diff_even:>4}")
    click.echo(f"{'full':<6} {report.n_L_full:>4} {report.n_V_full:>4} {report.diff_full:>4}")
    click.echo(f"verdict: {report.verdict}")
    return EXIT_OK


def _parse_s_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise DomainError(f"cannot parse --s-list {text!r}") from exc
    if not values:
        raise DomainError("--s-list is empty")
    return [_check_s(v) for v in values]


@cli.command()
@click.option("--s-list", required=True, help="Comma-separated exponents, e.g. 0.5,0.7,0.9,1.0")
@click.option("--omega-min", type=float, default=1.1, show_default=True)
@click.option("--omega-max", type=float, default=5.0, show_default=True, help="Upper end of the omega range.")
@click.option("--omega-step", type=float, default=0.1, show_default=True)
@common_options("n_modes", "basis_cutoff", "tol", "gmres_tol", "kernel_tol", "fd_step", "output_dir", "force", "json")
def sweep(**p):
    """Continuation sweep over omega for each s; one CSV per s plus sweep.json."""
    s_list = _parse_s_list(p["s_list"])
    omegas = omega_grid(p["omega_min"], p["omega_max"], p["omega_step"])
    cfg = _config(p)
    _grid(p["n_modes"])  # validate before touching the output directory
    run = Run("sweep", p, p["output_dir"], p["force"])
    results = run_sweep(
        s_list,
        omegas,
        workers=worker_count(),
        cfg=cfg,
        n_modes=p["n_modes"],
        cutoff=p["basis_cutoff"],
        kernel_tol=p["kernel_tol"],
        fd_step=p["fd_step"],
    )
    combined = []
    for res in results:
        write_chain_csv(res, run.path(f"sweep_s{res.s:g}.csv"))
        combined.append(
            {
                "s": res.s,
                "rows": res.rows,
                "reports": [r.to_record() if r is not None else None for r in res.reports],
            }
        )
    _dump(combined, run.path("sweep.json"))
    run.finish()
    n_failed = sum(1 for res in results for r in res.rows if r["verdict"] == FAILED)
    if p["as_json"]:
        click.echo(json.dumps([{"s": c["s"], "rows": c["rows"]} for c in combined], default=_plain, sort_keys=True))
    else:
        click.echo(" ".join(f"{c:>10}" for c in ("s",) + COLUMNS))
        for res in results:
            for r in res.rows:
                cells = [f"{res.s:>10g}"] + [
                    f"{r[c]:>10.5g}" if isinstance(r[c], float) else f"{r[c]:>10}" for c in COLUMNS
                ]
                click.echo(" ".join(cells))
    if n_failed:
        click.echo(f"{n_failed} sweep cell(s) failed", err=True)
        return EXIT_CONVERGENCE
    return EXIT_OK


@cli.command("validate-exact")
@common_options("omega", "n_modes", "tol", "gmres_tol", "output_dir", "force", "json")
@click.option("--max-err", type=float, default=1e-5, show_default=True)
def validate_exact(**p):
    """Compare the s = 1 Newton wave with the exact sn profile."""
    params = EllipticParams.from_omega(p["omega"])
    cfg = _config(p)
    grid = _grid(p["n_modes"])
    run = Run("validate-exact", p, p["output_dir"], p["force"])
    wave = solve_wave(1.0, p["omega"], cfg, grid)
    exact = params.sample(grid.points)
    diff = np.abs(exact - wave.values)
    with run.path("validate_exact.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "phi_exact", "phi_numeric", "abs_diff"])
        for row in zip(grid.points, exact, wave.values, diff):
            w.writerow([f"{v:.17g}" for v in row])
    run.finish()
    max_err = float(np.max(diff))
    if p["as_json"]:
        click.echo(json.dumps({"omega": p["omega"], "k": params.k, "max_err": max_err}, sort_keys=True))
    else:
        click.echo(f"k={params.k:.15g}  max |phi_exact - phi_numeric| = {max_err:.3e}")
    if max_err > p["max_err"]:
        raise ValidationFailed(f"max error {max_err:.3e} exceeds --max-err {p['max_err']:.1e}")
    return EXIT_OK


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ValidationFailed):
        return EXIT_VALIDATION
    if isinstance(exc, (DomainError, click.UsageError)):
        return EXIT_INPUT
    return EXIT_CONVERGENCE


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="fracnls", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_INPUT
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except FracNLSError as exc:
        click.echo(f"error [{exc.stage}]: {exc}", err=True)
        return exit_code_for(exc)
    return rv if isinstance(rv, int) else EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
