import logging
import math
from fractions import Fraction
from typing import Callable, Dict

from cli.commands.commands_functions import (
    RunContext,
    build_potential,
    complex_cells,
    gaussian_packet,
    grid_of,
    load_recorded_data,
    new_manifest,
    second_potential,
)
from cli.schemas import (
    EvolveConfig,
    ExponentsConfig,
    OrthogonalityConfig,
    ReconstructConfig,
    ResolventRow,
    StationaryConfig,
    OrthogonalityRow,
    VerifyResolventConfig,
)
from inversion.orthogonality import alessandrini_pair
from inversion.reconstruct import data_map, record_data, recover_potential, xi_set
from model.norms import as_exponent, exponents, format_exponent, lp_norm
from model.propagator import default_steps, evolve, refinement_study
from model.resolvent import Estimate, ratio_study
from model.stationary import build_stationary_state, decay_study, working_norm
from utils.field_io import read_field, write_field
from utils.report_writer import write_csv
from utils.sampling import make_rng, random_smooth_field

logger = logging.getLogger(__name__)

COMMANDS: Dict[str, Callable] = {}


def command(name: str):
    def register(fn):
        COMMANDS[name] = fn
        return fn
    return register


@command("exponents")
def run_exponents(cfg: ExponentsConfig, ctx: RunContext):
    table = exponents(cfg.n, cfg.q)
    row = table.as_row()
    columns = ("n", "q", "q_n", "p_n", "p", "r")
    print(" ".join(f"{k}={format_exponent(row[k])}" for k in columns[1:]))
    manifest = new_manifest(cfg, ctx)
    manifest.add(write_csv(ctx.out / "exponents.csv", columns, [[format_exponent(row[k]) for k in columns]]))
    return manifest.write()


@command("verify-resolvent")
def run_verify_resolvent(cfg: VerifyResolventConfig, ctx: RunContext):
    grid = grid_of(cfg)
    rng = make_rng(ctx.seed)
    fs = [random_smooth_field(grid, rng, cfg.bumps, cfg.width) for _ in range(cfg.draws)]
    kinds = [Estimate.KRS, Estimate.REFINED] if cfg.estimate == "both" else [Estimate(cfg.estimate)]
    if Estimate.REFINED in kinds and cfg.n < 3:
        if cfg.estimate == "refined":
            raise ValueError("The refined estimate needs n >= 3")
        kinds = [Estimate.KRS]

    table = exponents(cfg.n, Fraction(cfg.n + 1, 2))
    rows, summary, failures = [], [], []
    for kind in kinds:
        study = ratio_study(fs, cfg.ladder, kind, cfg.p, cfg.eps_factor)
        p = format_exponent(table.p_n if kind is Estimate.REFINED else (table.q_n if cfg.p is None else cfg.p))
        for i in range(len(fs)):
            for lam, ratio in zip(study.lambdas, study.ratios[i]):
                eps = cfg.eps_factor * lam * grid.dk
                rows.append(ResolventRow(estimate=kind.value, n=cfg.n, p=p, lam=lam, epsilon=eps,
                                         ratio=ratio, seed=ctx.seed).cells())
            passed = study.slopes[i] <= cfg.slope_max and study.growth[i] <= cfg.growth_max
            summary.append((kind.value, i, float(study.slopes[i]), float(study.growth[i]), passed))
        if study.worst_slope > cfg.slope_max or study.worst_growth > cfg.growth_max:
            failures.append(f"{kind.value}: slope {study.worst_slope:.3f}, growth {study.worst_growth:.3f}")

    manifest = new_manifest(cfg, ctx)
    manifest.add(write_csv(ctx.out / "resolvent.csv",
                           ("estimate", "n", "p", "lambda", "epsilon", "ratio", "seed"), rows))
    manifest.add(write_csv(ctx.out / "resolvent_summary.csv",
                           ("estimate", "draw", "slope", "growth", "passed"), summary))
    path = manifest.write()
    if failures:
        raise RuntimeError(f"Resolvent ratios are not lambda-uniform: {'; '.join(failures)}")
    return path


@command("stationary")
def run_stationary(cfg: StationaryConfig, ctx: RunContext):
    V = build_potential(cfg)
    s = build_stationary_state(V, cfg.lam, cfg.omega, cfg.mode, cfg.tol, cfg.max_iter)
    study = None
    if cfg.ladder:
        study = decay_study(V, cfg.mode, cfg.ladder, cfg.omega, cfg.tol, cfg.max_iter, ctx.threads)

    norm_value = working_norm(V, s.mode).measure(s.wcor, s.lam)
    omega_cols = tuple(f"omega{i + 1}" for i in range(V.grid.n))
    manifest = new_manifest(cfg, ctx)
    manifest.add(write_field(ctx.out / "w0.cfld", s.w0))
    manifest.add(write_field(ctx.out / "wcor.cfld", s.wcor))
    manifest.add(write_csv(
        ctx.out / "stationary.csv",
        ("lambda",) + omega_cols + ("iters", "contraction", "residual", "norm_value"),
        [(s.lam,) + tuple(s.omega) + (s.neumann.iterations, s.neumann.contraction_estimate,
                                      s.residual, norm_value)],
    ))
    if study is not None:
        manifest.add(write_csv(
            ctx.out / "decay.csv",
            ("lambda", "norm_value", "iters", "contraction", "residual", "v_lambda", "slope"),
            [(r.lam, r.norm_value, r.iterations, r.contraction, r.residual,
              math.nan if r.v_lambda is None else r.v_lambda, study.slope) for r in study.rows],
        ))
    return manifest.write()


@command("evolve")
def run_evolve(cfg: EvolveConfig, ctx: RunContext):
    V = build_potential(cfg)
    f = read_field(cfg.state) if cfg.state else gaussian_packet(V.grid, cfg.packet_width)
    if f.grid != V.grid:
        raise ValueError(f"Initial state grid {f.grid} does not match potential grid {V.grid}")
    steps = cfg.steps or default_steps(V, cfg.T)
    traj = evolve(V, f, cfg.T, steps, cfg.keep)
    study = refinement_study(V, f, cfg.T, steps, cfg.refine) if cfg.refine >= 2 else None
    recorded = None
    if cfg.xi_band is not None:
        recorded = record_data(data_map(V, cfg.T, steps), V.grid, xi_set(V.grid, cfg.xi_band),
                               cfg.ladder or [2, 4, 8, 16], cfg.T)

    manifest = new_manifest(cfg, ctx)
    frames_dir = ctx.out / "frames"
    frames_dir.mkdir(exist_ok=True)
    for i, frame in enumerate(traj.frames):
        manifest.add(write_field(frames_dir / f"frame_{i:05d}.cfld", frame))
    manifest.add(write_csv(ctx.out / "trajectory.csv", ("frame", "t", "mass"),
                           [(i, t, lp_norm(fr, 2) ** 2) for i, (t, fr) in enumerate(zip(traj.times, traj.frames))]))
    if study is not None:
        manifest.add(write_csv(ctx.out / "refinement.csv", ("N_coarse", "N_fine", "steps_fine", "l2_difference"),
                               [(a, b, s, d) for a, b, s, d in zip(study.points, study.points[1:],
                                                                   study.steps[1:], study.differences)]))
    if recorded is not None:
        data_dir = ctx.out / "data"
        data_dir.mkdir(exist_ok=True)
        rows = []
        for i, (inp, final) in enumerate(recorded.pairs):
            manifest.add(write_field(data_dir / f"input_{i:05d}.cfld", inp))
            manifest.add(write_field(data_dir / f"output_{i:05d}.cfld", final))
            rows.append((f"data/input_{i:05d}.cfld", f"data/output_{i:05d}.cfld", recorded.T))
        manifest.add(write_csv(ctx.out / "data.csv", ("input", "output", "T"), rows))
    return manifest.write()


@command("orthogonality")
def run_orthogonality(cfg: OrthogonalityConfig, ctx: RunContext):
    V1 = build_potential(cfg)
    V2 = second_potential(cfg, V1)
    f = gaussian_packet(V1.grid, cfg.packet_width)
    g = gaussian_packet(V1.grid, cfg.packet_width, cfg.g_wavevector)
    rows = []
    for steps in (cfg.steps, cfg.steps * cfg.refine_factor):
        pair = alessandrini_pair(V1, V2, f, g, cfg.T, steps, cfg.keep)
        rows.append(OrthogonalityRow(case=f"alessandrini_steps{steps}", lhs_re=pair.lhs.real, lhs_im=pair.lhs.imag,
                                     rhs_re=pair.rhs.real, rhs_im=pair.rhs.imag, gap=pair.gap).cells())
    manifest = new_manifest(cfg, ctx)
    manifest.add(write_csv(ctx.out / "orthogonality.csv",
                           ("case", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "gap"), rows))
    return manifest.write()


@command("reconstruct")
def run_reconstruct(cfg: ReconstructConfig, ctx: RunContext):
    if cfg.data:
        return _reconstruct_recorded(cfg, ctx)
    V1 = build_potential(cfg)
    V2 = second_potential(cfg, V1)
    grid = V1.grid
    xis = xi_set(grid, cfg.xi_band)
    if cfg.source == "direct":
        report = recover_potential((V1, V2), xis, cfg.ladder, cfg.mode, cfg.extrapolate, tol=cfg.tol,
                                   threads=ctx.threads)
    else:
        truth = V1 - V2
        U = data_map(truth, cfg.T, cfg.steps)
        report = recover_potential(U, xis, cfg.ladder, cfg.mode, cfg.extrapolate, truth=truth, T=cfg.T,
                                   grid=grid, q=V1.q, threads=ctx.threads)
    return _write_reconstruction(cfg, ctx, grid, report)


def _reconstruct_recorded(cfg: ReconstructConfig, ctx: RunContext):
    U = load_recorded_data(cfg.data)
    truth = None
    if cfg.potential:
        V1 = build_potential(cfg)
        truth = V1 - second_potential(cfg, V1)
        if truth.grid != U.grid:
            raise ValueError(f"Potential grid {truth.grid} does not match recorded grid {U.grid}")
    if U.T != cfg.T:
        logger.info(f"Using the recorded final time T={U.T} in place of T={cfg.T}")
    report = recover_potential(U, xi_set(U.grid, cfg.xi_band), cfg.ladder, cfg.mode, cfg.extrapolate,
                               truth=truth, T=U.T, grid=U.grid, q=as_exponent(cfg.q), threads=ctx.threads)
    return _write_reconstruction(cfg, ctx, U.grid, report)


def _cell(error):
    return math.nan if error is None else error


def _write_reconstruction(cfg: ReconstructConfig, ctx: RunContext, grid, report):
    xi_cols = tuple(f"xi{i + 1}" for i in range(grid.n))
    spectrum = []
    for index, rungs in report.estimates.items():
        xi = tuple(grid.dk * c for c in index)
        for r in rungs:
            re, im = complex_cells(r.fhat)
            spectrum.append(xi + (r.cfg.m, r.lam, re, im) + tuple(r.remainders))
    manifest = new_manifest(cfg, ctx)
    manifest.add(write_csv(ctx.out / "spectrum.csv",
                           xi_cols + ("m", "lambda", "fhat_re", "fhat_im", "rem1", "rem2", "rem3"), spectrum))
    manifest.add(write_field(ctx.out / "v_rec.cfld", report.V_rec))
    manifest.add(write_csv(ctx.out / "reconstruction.csv", ("m", "relative_error"),
                           [(m, e) for m, e in zip(report.ladder, report.rung_errors)]
                           + [("top_rung", _cell(report.top_rung_error)),
                              ("extrapolated", _cell(report.error) if report.extrapolated else math.nan),
                              ("selected", _cell(report.error))]))
    if report.monotone_fraction is not None:
        logger.info(f"Fraction of frequencies with strictly decreasing error: {report.monotone_fraction:.3f}")
    return manifest.write()
