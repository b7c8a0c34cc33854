"""Command line front end: gen, synth, eval, compare, gradcheck.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error. Every
command that writes into an output directory also writes the resolved
configuration there, so runs are reproducible from (config, seed).
Concurrent invocations writing to the same out_dir are undefined behavior.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import METHODS, load_config, resolved_toml, to_synthesis_config
from .descriptors import build_gamma_h, wph_descriptor, wph_descriptor_adjoint
from .energy import (
    gradient_check,
    make_energy_context,
    nnd_energy_fn,
    wph_energy_fn,
)
from .generators import GENERATOR_KINDS, GeneratorSpec, load_intensity
from .geometry import (
    PointPattern,
    Window,
    random_thin,
    read_pattern,
    write_pattern,
)
from .evaluation import (
    RadialSpectrum,
    bootstrap_ci,
    euler_characteristic,
    mds_embed,
    pd_wasserstein,
    persistence,
    radial_spectrum,
    scdf,
    write_dist_matrix_csv,
    write_euler_csv,
    write_mds_csv,
    write_pd_csv,
    write_scdf_csv,
    write_spectrum_csv,
)
from .optimizers import gd_synthesize, rs_synthesize, write_trace_csv
from .rasterize import SplatConfig, splat, splat_adjoint
from .seeding import TAG_GRADCHECK, TAG_THIN, spawn
from .wavelets import build_bank

_GEN_ALIASES = {"matern2": "matern2_hardcore", "cluster": "matern_cluster"}
_METRICS = ("spectrum", "scdf", "euler", "pd")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointsynth",
        description="Generate, synthesize, and evaluate periodic point patterns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a pattern from a model family")
    g.add_argument(
        "--kind", required=True,
        choices=sorted(set(GENERATOR_KINDS) | set(_GEN_ALIASES)),
        help="model family",
    )
    g.add_argument("--n", type=int, help="point count (binomial)")
    g.add_argument("--rate", type=float, help="intensity per unit area")
    g.add_argument("--parent-rate", type=float, help="parent intensity")
    g.add_argument("--edge-point-rate", type=float,
                   help="points per unit edge length (cox_voronoi)")
    g.add_argument("--r0", type=float, help="circle radius (cox_circles)")
    g.add_argument("--perimeter-point-rate", type=float,
                   help="points per unit perimeter (cox_circles)")
    g.add_argument("--R", type=float, help="hardcore radius (matern2)")
    g.add_argument("--cluster-radius", type=float, help="offspring disk radius")
    g.add_argument("--mean-offspring", type=float, help="mean points per cluster")
    g.add_argument("--intensity", help="intensity raster file (inhomogeneous kinds)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output pattern file")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("synth", help="synthesize new patterns from an observation")
    s.add_argument("observation", help="observed pattern file")
    s.add_argument("--config", help="TOML config file (defaults if omitted)")
    s.add_argument("--method", choices=METHODS, help="optimizer + descriptor")
    s.add_argument("--n-outputs", type=int, help="number of syntheses")
    s.add_argument("--seed", type=int, help="base seed (output i uses seed+i)")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="summary metrics for pattern files")
    e.add_argument("patterns", nargs="+", help="pattern files (one group)")
    e.add_argument("--metrics", default="spectrum,scdf,euler,pd",
                   help=f"comma list from {{{','.join(_METRICS)}}}")
    e.add_argument("--out-dir", required=True)
    e.add_argument("--k-max", type=int, default=50, help="spectrum ring cutoff")
    e.add_argument("--scdf-r-max", type=float, default=0.1)
    e.add_argument("--scdf-n-radii", type=int, default=50)
    e.add_argument("--r-cap", type=float, default=0.5, help="persistence cap radius")
    e.add_argument("--pd-thin", type=int, default=200,
                   help="thin patterns above this size before persistence")
    e.add_argument("--euler-n-radii", type=int, default=64)
    e.add_argument("--confidence", type=float, default=0.95)
    e.add_argument("--bootstrap-method", default="bca",
                   choices=("percentile", "bca", "gaussian"))
    e.add_argument("--n-resamples", type=int, default=9999)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="PD distance matrix and MDS across groups")
    c.add_argument("group_dirs", nargs="+",
                   help="directories of pattern files (>= 2)")
    c.add_argument("--out-dir", required=True)
    c.add_argument("--r-cap", type=float, default=0.5)
    c.add_argument("--pd-thin", type=int, default=200)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    d.add_argument("--config", help="TOML config file")
    d.add_argument("--N", type=int, default=16, help="grid size (16 = fast mode)")
    d.add_argument("--n-patterns", type=int, default=3)
    d.add_argument("--n-points", type=int, default=8)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--truncation", type=float, default=10.0,
                   help="kernel cutoff in sigmas; keep large so the energy "
                        "stays smooth at finite-difference step size")
    d.add_argument("--corrupt", choices=("descriptor", "splat"),
                   help="deliberately scale one adjoint stage (negative control)")
    d.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args) or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


def _console():
    sys.exit(main())


def cmd_gen(args) -> int:
    kind = _GEN_ALIASES.get(args.kind, args.kind)
    params = {}
    for flag in ("n", "rate", "parent_rate", "edge_point_rate", "r0",
                 "perimeter_point_rate", "R", "cluster_radius", "mean_offspring"):
        value = getattr(args, flag)
        if value is not None:
            params[flag] = value
    if args.intensity is not None:
        params["raster"] = load_intensity(args.intensity)
    spec = GeneratorSpec(kind, params, args.seed)
    pattern = spec.sample(Window())
    write_pattern(pattern, args.out)
    print(f"wrote {len(pattern)} points ({kind}, seed {args.seed}) to {args.out}")
    return 0


def cmd_synth(args) -> int:
    cfg = load_config(
        args.config, method=args.method, n_outputs=args.n_outputs, seed=args.seed
    )
    observation = read_pattern(args.observation)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_resolved.toml").write_text(resolved_toml(cfg))
    for i in range(cfg.n_outputs):
        seed_i = cfg.seed + i
        if cfg.method == "gd-wph":
            syn_cfg = to_synthesis_config(cfg, seed=seed_i)
            pattern, trace = gd_synthesize(observation, syn_cfg)
        else:
            if cfg.method == "rs-nnd":
                energy = nnd_energy_fn(
                    observation, cfg.nnd_k_max, cfg.nnd_r_max, cfg.nnd_n_radii
                )
            else:  # rs-wph
                syn_cfg = to_synthesis_config(cfg, seed=seed_i)
                sigma = syn_cfg.schedule.sigmas[-1]
                splat_cfg = SplatConfig(
                    N=cfg.N, sigma=sigma,
                    truncation_radius_sigmas=cfg.truncation_radius_sigmas,
                    kernel_exponent=cfg.kernel_exponent,
                )
                bank = build_bank(cfg.N, syn_cfg.J, cfg.L, syn_cfg.xi0)
                gamma = build_gamma_h(
                    syn_cfg.J, cfg.L, cfg.N, cfg.second_order_only
                )
                energy = wph_energy_fn(
                    make_energy_context(observation, splat_cfg, bank, gamma)
                )
            pattern, trace = rs_synthesize(
                observation, energy, cfg.rs_iterations_per_point, seed_i,
                target_relative_energy=cfg.target_relative_energy,
                max_energy_evals=cfg.max_energy_evals,
            )
        stem = f"synth_{i:03d}"
        write_pattern(pattern, out_dir / f"{stem}.pts")
        write_trace_csv(trace, out_dir / f"{stem}_trace.csv")
        print(
            f"{stem}: {len(pattern)} points, relative energy "
            f"{trace.final_relative_energy:.3e}, "
            f"{trace.n_energy_evals} energy evaluations"
        )
    return 0


def _curve_with_ci(per_pattern, args):
    """Mean curve plus per-abscissa bootstrap CI over the pattern group."""
    stacked = np.asarray(per_pattern)
    mean = stacked.mean(axis=0)
    lo = np.empty_like(mean)
    hi = np.empty_like(mean)
    for i in range(stacked.shape[1]):
        col = stacked[:, i]
        if stacked.shape[0] < 2:
            lo[i] = hi[i] = col[0]
            continue
        lo[i], hi[i] = bootstrap_ci(
            col, confidence=args.confidence, n_resamples=args.n_resamples,
            method=args.bootstrap_method, seed=args.seed + i,
        )
    return mean, lo, hi


def _thinned_for_pd(patterns, cap, seed):
    out = []
    for i, p in enumerate(patterns):
        if len(p) > cap:
            p = random_thin(p, cap, spawn(seed, TAG_THIN, i))
        out.append(p)
    return out


def cmd_eval(args) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = set(metrics) - set(_METRICS)
    if unknown:
        raise ValueError(f"unknown metric(s): {sorted(unknown)}")
    patterns = [read_pattern(path) for path in args.patterns]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if "spectrum" in metrics:
        spectra = [radial_spectrum(p, args.k_max) for p in patterns]
        mean = np.mean([sp.power for sp in spectra], axis=0)
        write_spectrum_csv(
            RadialSpectrum(spectra[0].k, mean), out_dir / "spectrum.csv"
        )
        print(f"spectrum.csv: mean over {len(patterns)} pattern(s)")

    if "scdf" in metrics:
        radii = np.linspace(0.0, args.scdf_r_max, args.scdf_n_radii + 1)[1:]
        curves = [scdf(p, radii) for p in patterns]
        mean, lo, hi = _curve_with_ci(curves, args)
        write_scdf_csv(radii, mean, lo, hi, out_dir / "scdf.csv")
        print(f"scdf.csv: {len(radii)} radii")

    if "euler" in metrics or "pd" in metrics:
        thinned = _thinned_for_pd(patterns, args.pd_thin, args.seed)
        for original, thin in zip(patterns, thinned):
            if len(thin) != len(original):
                print(
                    f"note: thinned {len(original)} -> {len(thin)} points "
                    "for persistence"
                )
        diagrams = [persistence(p, r_cap=args.r_cap) for p in thinned]
        if "pd" in metrics:
            if len(diagrams) == 1:
                write_pd_csv(diagrams[0], out_dir / "pd.csv")
                print("pd.csv written")
            else:
                for i, dg in enumerate(diagrams):
                    write_pd_csv(dg, out_dir / f"pd_{i:03d}.csv")
                print(f"pd_000.csv .. pd_{len(diagrams) - 1:03d}.csv written")
        if "euler" in metrics:
            radii = np.linspace(0.0, args.r_cap, args.euler_n_radii)
            curves = [euler_characteristic(dg, radii) for dg in diagrams]
            mean, lo, hi = _curve_with_ci(curves, args)
            write_euler_csv(radii, mean, lo, hi, out_dir / "euler.csv")
            print(f"euler.csv: {len(radii)} radii")
    return 0


def cmd_compare(args) -> int:
    if len(args.group_dirs) < 2:
        raise ValueError("compare needs at least two group directories")
    labels, groups, group_names = [], [], []
    for d in args.group_dirs:
        directory = Path(d)
        files = sorted(directory.glob("*.pts"))
        if not files:
            raise ValueError(f"no .pts pattern files in {directory}")
        patterns = _thinned_for_pd(
            [read_pattern(f) for f in files], args.pd_thin, args.seed
        )
        indices = []
        for f in files:
            labels.append(f"{directory.name}/{f.stem}")
            indices.append(len(labels) - 1)
        group_names.append(directory.name)
        groups.append((indices, patterns))

    all_patterns = [p for _, patterns in groups for p in patterns]
    diagrams = [persistence(p, r_cap=args.r_cap) for p in all_patterns]
    m = len(diagrams)
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            dist = pd_wasserstein(diagrams[i], diagrams[j], dim=0)
            dist += pd_wasserstein(diagrams[i], diagrams[j], dim=1)
            D[i, j] = D[j, i] = dist

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_dist_matrix_csv(labels, D, out_dir / "dist_matrix.csv")
    write_mds_csv(labels, mds_embed(D), out_dir / "mds.csv")
    summary = {"groups": group_names, "mean_cross_distance": {}}
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            ia, _ = groups[a]
            ib, _ = groups[b]
            block = D[np.ix_(ia, ib)]
            key = f"{group_names[a]}|{group_names[b]}"
            summary["mean_cross_distance"][key] = float(block.mean())
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"compared {m} patterns across {len(groups)} groups -> {out_dir}")
    return 0


def _check_line(name, err, tol, ok):
    status = "PASS" if ok else "FAIL"
    print(f"{name}: max rel err {err:.3e} ({status}, tol {tol:.0e})")
    return ok


def cmd_gradcheck(args) -> int:
    cfg = load_config(args.config, N=args.N, seed=args.seed)
    window = Window()
    sigma = 2.0 * window.s / cfg.N
    splat_cfg = SplatConfig(
        N=cfg.N, sigma=sigma, truncation_radius_sigmas=args.truncation,
        kernel_exponent=cfg.kernel_exponent,
    )
    bank = build_bank(cfg.N, cfg.J, cfg.L, cfg.xi0)
    gamma = build_gamma_h(cfg.J, cfg.L, cfg.N, cfg.second_order_only)
    h = 1e-5 * window.side
    all_ok = True

    # splat adjoint vs finite differences of <G, splat(x)>
    worst = 0.0
    for t in range(args.n_patterns):
        rng = spawn(args.seed, TAG_GRADCHECK, 1, t)
        pts = rng.uniform(-window.s, window.s, (args.n_points, 2))
        p = PointPattern(pts, window)
        G = rng.standard_normal((cfg.N, cfg.N))
        analytic = splat_adjoint(p, splat_cfg, G)
        if args.corrupt == "splat":
            analytic = analytic * 1.001
        numeric = np.zeros_like(pts)
        for i in range(len(pts)):
            for a in range(2):
                for sign in (1.0, -1.0):
                    q = pts.copy()
                    q[i, a] += sign * h
                    val = float(
                        np.sum(G * splat(PointPattern(q, window), splat_cfg).values)
                    )
                    numeric[i, a] += sign * val
                numeric[i, a] /= 2 * h
        scale = max(np.abs(numeric).max(), 1e-300)
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 0.01 * scale)
        worst = max(worst, float(rel.max()))
    all_ok &= _check_line("splat adjoint", worst, 1e-6, worst < 1e-6)

    # descriptor adjoint vs finite differences at random pixels
    rng = spawn(args.seed, TAG_GRADCHECK, 2)
    base = splat(
        PointPattern(rng.uniform(-window.s, window.s, (args.n_points, 2)), window),
        splat_cfg,
    ).values
    ref = wph_descriptor(
        splat(
            PointPattern(
                rng.uniform(-window.s, window.s, (args.n_points, 2)), window
            ),
            splat_cfg,
        ).values,
        bank,
        gamma,
    )

    def dloss(img):
        d = wph_descriptor(img, bank, gamma, reference_means=ref.means)
        return 0.5 * float(np.sum(np.abs(d.values - ref.values) ** 2))

    diff = (
        wph_descriptor(base, bank, gamma, reference_means=ref.means).values
        - ref.values
    )
    g_img = wph_descriptor_adjoint(base, bank, gamma, ref.means, diff).real
    if args.corrupt == "descriptor":
        g_img = g_img * 1.001
    hp = 1e-5 * max(1.0, float(np.abs(base).max()))
    worst = 0.0
    flat = rng.choice(cfg.N * cfg.N, size=20, replace=False)
    numeric_all = []
    for q in flat:
        i, j = divmod(int(q), cfg.N)
        bumped = base.copy()
        bumped[i, j] += hp
        up = dloss(bumped)
        bumped[i, j] -= 2 * hp
        dn = dloss(bumped)
        numeric_all.append((up - dn) / (2 * hp))
    numeric_all = np.array(numeric_all)
    analytic_all = np.array(
        [g_img[divmod(int(q), cfg.N)] for q in flat]
    )
    scale = max(np.abs(numeric_all).max(), 1e-300)
    rel = np.abs(analytic_all - numeric_all) / np.maximum(
        np.abs(numeric_all), 0.01 * scale
    )
    worst = float(rel.max())
    all_ok &= _check_line("descriptor adjoint", worst, 1e-5, worst < 1e-5)

    # full chain: energy gradient vs central differences
    worst = 0.0
    for t in range(args.n_patterns):
        rng = spawn(args.seed, TAG_GRADCHECK, 3, t)
        obs = PointPattern(
            rng.uniform(-window.s, window.s, (args.n_points, 2)), window
        )
        ctx = make_energy_context(obs, splat_cfg, bank, gamma)
        pts = rng.uniform(-window.s, window.s, (args.n_points, 2))
        err, _, _ = gradient_check(
            ctx, PointPattern(pts, window), corrupt_stage=args.corrupt
        )
        worst = max(worst, err)
    all_ok &= _check_line("energy gradient", worst, 1e-4, worst < 1e-4)

    if not all_ok and args.corrupt:
        print(f"FAIL: corrupted adjoint stage '{args.corrupt}' detected")
    print("gradcheck " + ("PASS" if all_ok else "FAIL"))
    return 0 if all_ok else 1


if __name__ == "__main__":
    _console()
