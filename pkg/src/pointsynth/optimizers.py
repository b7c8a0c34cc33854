"""Synthesis drivers: multiscale particle gradient descent and random search.

GD moves the 2n unconstrained coordinates with a hand-rolled L-BFGS
(two-loop recursion, Armijo backtracking); the torus wrap is applied only
when materializing a pattern, which is consistent because the energy is
periodic in every coordinate. Random search proposes uniform single-point
replacements and accepts strict decreases.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .descriptors import build_gamma_h
from .energy import energy_and_gradient, make_energy_context
from .geometry import PointPattern, Window, wrap_coords
from .rasterize import SplatConfig
from .seeding import TAG_FINAL_BLUR, TAG_INIT, TAG_RS_PROPOSALS, spawn
from .wavelets import build_bank, default_xi0

__all__ = [
    "MultiscaleSchedule",
    "multiscale_schedule",
    "SynthesisConfig",
    "TraceRow",
    "Trace",
    "write_trace_csv",
    "sample_binomial_init",
    "gd_synthesize",
    "rs_synthesize",
    "final_blur",
]


@dataclass(frozen=True)
class MultiscaleSchedule:
    """Decreasing splat widths, coarse to fine, each run for a fixed
    iteration budget. The final stages may tie at sigma_min: the width
    formula halves below the representable floor there and is clamped."""

    sigmas: tuple
    iterations_per_stage: int = 100

    def __post_init__(self):
        sig = tuple(float(v) for v in self.sigmas)
        if len(sig) == 0:
            raise ValueError("schedule needs at least one stage")
        if any(not (v > 0) for v in sig):
            raise ValueError("sigmas must be positive")
        if any(a < b for a, b in zip(sig, sig[1:])):
            raise ValueError("sigmas must be nonincreasing")
        if self.iterations_per_stage < 1:
            raise ValueError("iterations_per_stage must be >= 1")
        object.__setattr__(self, "sigmas", sig)


def multiscale_schedule(N, J, window: Window = Window(), iterations_per_stage=100):
    """sigma_j = (s/N) * 2^(J-j-2) for j = 0..J-1, clamped to sigma_min = s/N."""
    smin = window.s / N
    sigmas = [max(smin, (window.s / N) * 2.0 ** (J - j - 2)) for j in range(J)]
    return MultiscaleSchedule(tuple(sigmas), iterations_per_stage)


@dataclass(frozen=True)
class SynthesisConfig:
    N: int
    J: int = None  # default log2(N) - 3
    L: int = 8
    xi0: float = None
    schedule: MultiscaleSchedule = None
    lbfgs_memory: int = 10
    line_search: str = "armijo"
    final_blur: bool = True
    seed: int = 0
    max_stages: int = None
    target_relative_energy: float = None
    truncation_radius_sigmas: float = 4.0
    kernel_exponent: str = "stddev"
    second_order_only: bool = False
    window: Window = field(default_factory=Window)

    def __post_init__(self):
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.J is None:
            object.__setattr__(self, "J", int(np.log2(self.N)) - 3)
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        if self.xi0 is None:
            object.__setattr__(self, "xi0", default_xi0())
        if self.line_search != "armijo":
            raise ValueError(f"unknown line_search {self.line_search!r}")
        if self.lbfgs_memory < 1:
            raise ValueError("lbfgs_memory must be >= 1")
        if self.schedule is None:
            object.__setattr__(
                self, "schedule", multiscale_schedule(self.N, self.J, self.window)
            )


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    sigma_stage: float  # nan for gradient-free moves
    energy: float
    relative_energy: float
    grad_norm: float  # nan for gradient-free moves
    wall_time_ms: float


@dataclass
class Trace:
    rows: list = field(default_factory=list)
    n_energy_evals: int = 0

    def log(self, *args):
        self.rows.append(TraceRow(*args))

    @property
    def final_energy(self):
        return self.rows[-1].energy if self.rows else float("nan")

    @property
    def final_relative_energy(self):
        return self.rows[-1].relative_energy if self.rows else float("nan")


def write_trace_csv(trace: Trace, path):
    lines = ["iteration,sigma_stage,energy,relative_energy,grad_norm,wall_time_ms"]
    for r in trace.rows:
        lines.append(
            f"{r.iteration},{r.sigma_stage!r},{r.energy!r},"
            f"{r.relative_energy!r},{r.grad_norm!r},{r.wall_time_ms!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def sample_binomial_init(n, window: Window, rng) -> np.ndarray:
    """n i.i.d. uniform positions; raw coordinates, already in-window."""
    return rng.uniform(-window.s, window.s, size=(n, 2))


def _two_loop(g, mem):
    """L-BFGS search direction from memory pairs [(s, y, rho), ...]."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(mem):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if mem:
        s, y, _ = mem[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(mem, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


_ARMIJO_C1 = 1e-4
_MIN_STEP = 1e-20
_CURVATURE_GUARD = 1e-10


def _lbfgs_stage(x, fun_grad, n_iters, memory, on_accept, target_rel):
    """Run up to n_iters accepted L-BFGS steps from x; returns (x, reached)."""
    f, rel, g = fun_grad(x)
    if target_rel is not None and rel <= target_rel:
        return x, True
    mem = []
    for _ in range(n_iters):
        d = -_two_loop(g, mem)
        gd = np.dot(g, d)
        if gd >= 0.0:
            d = -g
            gd = np.dot(g, d)
            if gd >= 0.0:
                break  # zero gradient: stage converged
        step = 1.0
        accepted = False
        while step >= _MIN_STEP:
            xn = x + step * d
            fn, reln, gn = fun_grad(xn)
            if fn <= f + _ARMIJO_C1 * step * gd:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # no decrease representable: stage converged
        s = xn - x
        y = gn - g
        sy = np.dot(s, y)
        if sy > _CURVATURE_GUARD * np.linalg.norm(s) * np.linalg.norm(y):
            mem.append((s, y, 1.0 / sy))
            if len(mem) > memory:
                mem.pop(0)
        x, f, rel, g = xn, fn, reln, gn
        on_accept(f, rel, float(np.linalg.norm(g)))
        if target_rel is not None and rel <= target_rel:
            return x, True
    return x, False


def gd_synthesize(observation: PointPattern, cfg: SynthesisConfig):
    """Multiscale particle gradient descent from a binomial initialization.

    Returns (pattern, trace). Raises RuntimeError with a stage diagnostic
    if the energy turns non-finite.
    """
    if len(observation) == 0:
        raise ValueError("observation must be non-empty")
    if observation.window != cfg.window:
        raise ValueError("observation window does not match config window")
    w = cfg.window
    n = len(observation)
    bank = build_bank(cfg.N, cfg.J, cfg.L, cfg.xi0)
    gamma = build_gamma_h(cfg.J, cfg.L, cfg.N, cfg.second_order_only)
    sigmas = cfg.schedule.sigmas
    if cfg.max_stages is not None:
        sigmas = sigmas[: cfg.max_stages]
    x = sample_binomial_init(n, w, spawn(cfg.seed, TAG_INIT)).ravel()
    trace = Trace()
    t0 = time.perf_counter()
    counter = {"it": 0}
    reached = False
    for sig in sigmas:
        scfg = SplatConfig(
            cfg.N, sig, cfg.truncation_radius_sigmas, cfg.kernel_exponent, w
        )
        ctx = make_energy_context(observation, scfg, bank, gamma)

        def fun_grad(xflat, _sig=sig, _ctx=ctx):
            pts = wrap_coords(xflat.reshape(n, 2), w)
            rep = energy_and_gradient(PointPattern(pts, w, _trusted=True), _ctx)
            trace.n_energy_evals += 1
            if not np.isfinite(rep.energy) or not np.all(np.isfinite(rep.gradient)):
                raise RuntimeError(
                    f"energy diverged (non-finite) at sigma={_sig:g}, "
                    f"iteration {counter['it']}"
                )
            return rep.energy, rep.relative_energy, rep.gradient.ravel()

        def on_accept(f, rel, gnorm, _sig=sig):
            counter["it"] += 1
            trace.log(
                counter["it"], _sig, f, rel, gnorm,
                (time.perf_counter() - t0) * 1e3,
            )

        x, reached = _lbfgs_stage(
            x,
            fun_grad,
            cfg.schedule.iterations_per_stage,
            cfg.lbfgs_memory,
            on_accept,
            cfg.target_relative_energy,
        )
        if reached:
            break
    out = PointPattern(wrap_coords(x.reshape(n, 2), w), w, _trusted=True)
    if cfg.final_blur:
        out = final_blur(out, cfg.N, spawn(cfg.seed, TAG_FINAL_BLUR))
    return out, trace


def final_blur(p: PointPattern, N, seed) -> PointPattern:
    """Independent uniform offsets in [-s/N, s/N)^2, torus-wrapped."""
    rng = spawn(seed)
    half_px = p.window.s / N
    offsets = rng.uniform(-half_px, half_px, size=p.points.shape)
    return PointPattern(
        wrap_coords(p.points + offsets, p.window), p.window, _trusted=True
    )


def rs_synthesize(
    observation: PointPattern,
    energy,
    iterations_per_point,
    seed,
    target_relative_energy=None,
    max_energy_evals=None,
):
    """Random search: uniform single-point replacement, accept strict
    decreases. Returns (pattern, trace); trace rows mark accepted moves."""
    if iterations_per_point < 0:
        raise ValueError("iterations_per_point must be >= 0")
    if len(observation) == 0:
        raise ValueError("observation must be non-empty")
    w = observation.window
    n = len(observation)
    pts = sample_binomial_init(n, w, spawn(seed, TAG_INIT))
    trace = Trace()
    t0 = time.perf_counter()
    ref_nsq = getattr(energy, "ref_norm_sq", None)

    def rel_of(e):
        return 2.0 * e / ref_nsq if ref_nsq else float("nan")

    current = float(energy(PointPattern(pts, w, _trusted=True)))
    trace.n_energy_evals += 1
    nan = float("nan")
    trace.log(0, nan, current, rel_of(current), nan, (time.perf_counter() - t0) * 1e3)
    if target_relative_energy is not None and rel_of(current) <= target_relative_energy:
        return PointPattern(pts, w, _trusted=True), trace
    rng = spawn(seed, TAG_RS_PROPOSALS)
    total = n * int(iterations_per_point)
    for t in range(1, total + 1):
        if max_energy_evals is not None and trace.n_energy_evals >= max_energy_evals:
            break
        i = int(rng.integers(n))
        proposal = rng.uniform(-w.s, w.s, size=2)
        cand = pts.copy()
        cand[i] = proposal
        e = float(energy(PointPattern(cand, w, _trusted=True)))
        trace.n_energy_evals += 1
        if e < current:
            pts = cand
            current = e
            trace.log(
                t, nan, current, rel_of(current), nan,
                (time.perf_counter() - t0) * 1e3,
            )
            if (
                target_relative_energy is not None
                and rel_of(current) <= target_relative_energy
            ):
                break
    return PointPattern(pts, w, _trusted=True), trace
