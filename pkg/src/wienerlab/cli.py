"""Command-line experiment runner.

Usage: ``wienerlab <subcommand> --config exp.toml [--out DIR] [--svg] [--tol-override k=v ...]``

Exit status: 0 when every verdict passes, 1 when some verdict fails,
2 for configuration or validation errors, 3 for numerical errors.
The output directory is ``--out``, else ``$WIENERLAB_OUT``, else
``[experiment].out``, else ``wienerlab-out``.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import groups as gr
from . import koopman, operators, sequences, wiener
from .config import ExperimentConfig, load_config, parse_matrix, parse_vector
from .errors import ConfigError, WienerLabError
from .sets import parse_function, parse_set

OUT_ENV = "WIENERLAB_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class Outcome:
    """Collected CSV rows, summary lines and named pass/fail checks for one run."""

    def __init__(self, name: str, header: list[str]):
        self.name = name
        self.header = header
        self.rows: list[list] = []
        self.lines: list[str] = []
        self.checks: list[tuple[str, bool]] = []
        self.series: dict[str, list] = {}

    def check(self, label: str, ok: bool) -> None:
        self.checks.append((label, bool(ok)))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([c if isinstance(c, str) else fmt(c) for c in r])
        return buf.getvalue()


def _expect(cfg: ExperimentConfig) -> dict:
    return cfg.section("expect")


def _status_check(out: Outcome, label: str, verdict, expect: dict, key: str) -> None:
    want = expect.get(key, "converged")
    out.check(f"{label} status {verdict.status.value} (expected {want})", verdict.status.value == want)


# ---------------------------------------------------------------------------
# Subcommands


def run_wiener(cfg: ExperimentConfig) -> Outcome:
    nu = cfg.sequence()
    mu = cfg.measure(nu.pair)
    sched = cfg.schedule()
    t = cfg.tolerances
    grid = cfg.grid(nu.pair, required=False) or None
    rep = wiener.verify_wiener_theorem(mu, nu, sched, t["tol"], t["tol_extremal"], grid)
    out = Outcome("wiener", ["N", "lhs"])
    out.rows = [[N, v] for N, v in rep.lhs.values]
    out.series["lhs"] = rep.lhs.values
    out.lines.append(f"lhs: {rep.lhs.summary()}")
    out.lines.append(f"rhs_atomic: {fmt(rep.rhs_atomic)}")
    if rep.rhs_pairing is not None:
        out.lines.append(f"rhs_pairing: {fmt(complex(rep.rhs_pairing).real)}{complex(rep.rhs_pairing).imag:+.3g}i")
    for k, v in rep.verdicts.items():
        out.lines.append(f"verdict {k}: {v}")
    for note in rep.notes:
        out.lines.append(f"note: {note}")
    ex = _expect(cfg)
    _status_check(out, "lhs", rep.lhs, ex, "status")
    out.check("no checked part of the lemma failed", rep.consistent)
    if "lhs" in ex and rep.lhs.converged:
        out.check(f"lhs limit near {ex['lhs']}", abs(rep.lhs.limit - float(ex["lhs"])) < t["tol"])
    for k, want in ex.get("verdicts", {}).items():
        out.check(f"verdict {k} == {want}", rep.verdicts.get(k) == want)
    return out


def run_kvn(cfg: ExperimentConfig) -> Outcome:
    nu = cfg.sequence()
    sec = cfg.require("function")
    f = _guard("[function].f", lambda: parse_function(sec["f"]))
    M = float(sec.get("bound", f.bound))
    eps = sec.get("eps", list(koopman.DEFAULT_EPS))
    rep = koopman.kvn_report(f, M, nu, eps, cfg.schedule(), cfg.tolerances["tol"])
    out = Outcome("kvn", ["N", "lhs"] + [f"d_{fmt(e)}" for e, _ in rep.filter_side])
    for i, (N, v) in enumerate(rep.cesaro_side.values):
        out.rows.append([N, v] + [dv.values[i][1] for _, dv in rep.filter_side])
    out.series["lhs"] = rep.cesaro_side.values
    for e, dv in rep.filter_side:
        out.series[f"d_{fmt(e)}"] = dv.values
    out.lines.append(f"lhs: {rep.cesaro_side.summary()}")
    for e, dv in rep.filter_side:
        out.lines.append(f"density eps={fmt(e)}: {dv.summary()}")
    out.lines.append(f"equivalence: {rep.equivalence_verdict.value} {rep.details}".rstrip())
    out.check("Chebyshev bound at every N", rep.chebyshev_ok)
    out.check("reverse bound at every N", rep.reverse_ok)
    want = _expect(cfg).get("verdict")
    if want is None:
        out.check("equivalence decided and consistent",
                  rep.equivalence_verdict in (koopman.Equivalence.BOTH_ZERO, koopman.Equivalence.BOTH_NONZERO))
    else:
        out.check(f"equivalence {rep.equivalence_verdict.value} (expected {want})", rep.equivalence_verdict.value == want)
    return out


def run_cvalue(cfg: ExperimentConfig) -> Outcome:
    nu = cfg.sequence()
    grid = cfg.grid(nu.pair)
    sched = cfg.schedule()
    out = Outcome("cvalue", ["g", "N", "re", "im", "abs"])
    ex = _expect(cfg)
    for g in grid:
        v = sequences.c_estimate(nu, g, sched, cfg.tolerances["tol"])
        name = gr.format_element(g)
        for N, z in v.values:
            z = complex(z)
            out.rows.append([name, N, z.real, z.imag, abs(z)])
        out.series[name] = [(N, abs(z)) for N, z in v.values]
        out.lines.append(f"c({name}): {v.summary()}")
        _status_check(out, f"c({name})", v, ex, "status")
    return out


def run_density(cfg: ExperimentConfig) -> Outcome:
    nu = cfg.sequence()
    names = cfg.require("sets").get("names", [])
    if not names:
        raise ConfigError(f"{cfg.path}: [sets].names is empty")
    sched = cfg.schedule()
    out = Outcome("density", ["set", "N", "value"])
    ex = _expect(cfg)
    for name in names:
        J = _guard(f"[sets] {name!r}", lambda: parse_set(name))
        v = sequences.density_estimate(nu, J, sched, cfg.tolerances["tol"])
        for N, d in v.values:
            out.rows.append([J.name, N, d])
        out.series[J.name] = v.values
        out.lines.append(f"d({J.name}): {v.summary()}")
        _status_check(out, f"d({J.name})", v, ex, "status")
    return out


def build_system(cfg: ExperimentConfig):
    """The configured system plus ``x`` and ``y``, drawn from the seed when absent."""
    sec = cfg.require("system")
    kind = sec.get("kind", "power")
    rng = np.random.default_rng(cfg.seed)
    if "planted" in sec:
        if kind != "power":
            raise ConfigError(f"{cfg.path}: [system.planted] builds power systems only")
        p = sec["planted"]
        planted = _guard("[system.planted]", lambda: operators.planted_power_system(
            int(p["dim"]), angles=p.get("angles"), n_unit=p.get("n_unit"),
            contraction=float(p.get("contraction", 0.8)),
            contraction_kind=p.get("contraction_kind", "unitary"), seed=cfg.seed,
            min_gap=float(p.get("min_gap", 0.05))))
        system = planted.system
    elif "matrix" in sec:
        mat = parse_matrix(sec["matrix"], "[system].matrix")
        if kind == "power":
            system = _guard("[system]", lambda: operators.PowerSystem(mat))
        elif kind == "flow":
            system = _guard("[system]", lambda: operators.SampledFlow(mat))
        elif kind == "finite":
            system = _guard("[system]", lambda: operators.FiniteAction(int(sec["m"]), mat))
        else:
            raise ConfigError(f"{cfg.path}: [system].kind must be power, flow or finite, got {kind!r}")
    else:
        raise ConfigError(f"{cfg.path}: [system] needs a matrix or a [system.planted] table")
    d = system.dim
    x = parse_vector(sec["x"], "[system].x") if "x" in sec else operators.random_unit_vector(d, rng)
    y = parse_vector(sec["y"], "[system].y") if "y" in sec else operators.random_unit_vector(d, rng)
    for name, v in (("x", x), ("y", y)):
        if v.shape != (d,):
            raise ConfigError(f"{cfg.path}: [system].{name} has length {v.shape[0]}, the system has dimension {d}")
    return system, x, y


def _split(cfg: ExperimentConfig, system):
    t = cfg.tolerances
    return operators.spectral_split(system, t["tol_crosscheck"], t["tol_cluster"])


def run_decompose(cfg: ExperimentConfig) -> Outcome:
    system, _, _ = build_system(cfg)
    chk = operators.contraction_check(system)
    out = Outcome("decompose", ["index", "eigenvalue_re", "eigenvalue_im", "character", "rank"])
    out.lines.append("sigma_max: " + ", ".join(fmt(s) for s in chk.sigma_max))
    out.check("contraction check", chk.ok)
    if not chk.ok:
        return out
    split = _split(cfg, system)
    out.lines.append(f"dim X1: {split.dim_x1}")
    out.lines.append(f"dim X2: {split.dim_x2}")
    out.lines.append(f"cross-check angle: {split.crosscheck_angle:.3e}")
    for i, ((a, P), lam) in enumerate(zip(split.projections, split.eigenvalues)):
        rank = int(round(np.trace(P).real))
        out.rows.append([i, lam.real, lam.imag, gr.format_element(a), rank])
        out.lines.append(f"eigenvalue {lam.real:+.6f}{lam.imag:+.6f}i -> {gr.format_element(a)} (rank {rank})")
    ex = _expect(cfg)
    if "dim_x1" in ex:
        out.check(f"dim X1 == {ex['dim_x1']}", split.dim_x1 == int(ex["dim_x1"]))
    return out


def run_goldstein(cfg: ExperimentConfig) -> Outcome:
    system, x, y = build_system(cfg)
    nu = cfg.sequence()
    chk = operators.contraction_check(system)
    out = Outcome("goldstein", ["N", "lhs", "rhs", "gap"])
    out.check("contraction check", chk.ok)
    if not chk.ok:
        return out
    split = _split(cfg, system)
    rep = operators.goldstein_verify(system, x, y, nu, cfg.schedule(operators.GOLDSTEIN_SCHEDULE),
                                     cfg.tolerances["tol_goldstein"], cfg.tolerances["tol"], split=split)
    for (N, v), (_, gap) in zip(rep.lhs.values, rep.gaps):
        out.rows.append([N, v, rep.rhs, gap])
    out.series["lhs"] = rep.lhs.values
    out.series["rhs"] = [(N, rep.rhs) for N, _ in rep.lhs.values]
    out.lines.append(f"lhs: {rep.lhs.summary()}")
    out.lines.append(f"rhs: {fmt(rep.rhs)}")
    out.lines.append(f"final gap: {rep.gaps[-1][1]:.3e}, shrinking over last three: {rep.shrinking}")
    out.check(f"final gap below {fmt(rep.tol)}", rep.gaps[-1][1] < rep.tol)
    out.check("gap shrinking over the last three schedule points", rep.shrinking)
    return out


def run_extremal(cfg: ExperimentConfig) -> Outcome:
    nu = cfg.sequence()
    grid = cfg.grid(nu.pair)
    one = gr.identity(nu.pair)
    if not any(gr.is_identity(nu.pair, g) for g in grid):
        grid = [one] + grid
    t = cfg.tolerances
    rep = wiener.extremality_check(nu, grid, cfg.schedule(), t["tol"], t["tol_extremal"])
    gam = sequences.gamma_probe(nu, grid, cfg.schedule(), t["tol"], t["tol_gamma"])
    out = Outcome("extremal", ["g", "c_re", "c_im", "witness_limit", "confirmed"])
    for g, c, wv, ok in rep.violators:
        lim = wv.limit if wv.converged else float("nan")
        out.rows.append([gr.format_element(g), complex(c).real, complex(c).imag, lim, ok])
        out.series[gr.format_element(g)] = wv.values
    out.lines.append(f"grid size: {len(grid)}")
    out.lines.append("gamma probe: " + ", ".join(gr.format_element(g) for g, _ in gam))
    out.lines.append(f"violators: {len(rep.violators)}, undecided: {len(rep.undecided)}")
    out.check("every violator confirmed by its two-atom witness", rep.witnesses_confirmed)
    ex = _expect(cfg)
    if "violators" in ex:
        out.check(f"violator count == {ex['violators']}", len(rep.violators) == int(ex["violators"]))
    else:
        out.check("extremal for discrete measures on the grid", rep.extremal_for_discrete_consistent)
    return out


def _guard(key: str, thunk):
    try:
        return thunk()
    except ConfigError:
        raise
    except (WienerLabError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


SUBCOMMANDS = {
    "wiener": run_wiener,
    "kvn": run_kvn,
    "cvalue": run_cvalue,
    "density": run_density,
    "decompose": run_decompose,
    "goldstein": run_goldstein,
    "extremal": run_extremal,
}


# ---------------------------------------------------------------------------
# SVG


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def render_svg(out: Outcome, width: int = 640, height: int = 400) -> str:
    """Line plot of every series against log2 N; the data are exactly the CSV's."""
    series = {k: [(N, float(abs(v)) if isinstance(v, complex) else float(v)) for N, v in s]
              for k, s in out.series.items() if s}
    pad = 50
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<text x="{pad}" y="20" font-family="monospace" font-size="14">{out.name}</text>']
    pts = [(np.log2(N), v) for s in series.values() for N, v in s if np.isfinite(v)]
    if pts:
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x1 = x0 + 1
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5

        def sx(x):
            return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

        def sy(y):
            return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

        lines.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>')
        lines.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
        lines.append(f'<text x="{pad}" y="{height - 15}" font-family="monospace" font-size="11">'
                     f'log2 N: {x0:.0f} .. {x1:.0f}</text>')
        lines.append(f'<text x="5" y="{pad - 8}" font-family="monospace" font-size="11">'
                     f'{y0:.4g} .. {y1:.4g}</text>')
        for i, (name, s) in enumerate(series.items()):
            color = _COLORS[i % len(_COLORS)]
            coords = " ".join(f"{sx(np.log2(N)):.2f},{sy(v):.2f}" for N, v in s if np.isfinite(v))
            lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
            lines.append(f'<text x="{width - pad - 150}" y="{pad + 14 * i}" font-family="monospace" '
                         f'font-size="11" fill="{color}">{_escape(name)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wienerlab", description="Run a Wiener-lemma or Goldstein experiment.")
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    parser.add_argument("--config", required=True, help="TOML experiment file")
    parser.add_argument("--out", help="output directory (overrides $%s and the config)" % OUT_ENV)
    parser.add_argument("--svg", action="store_true", help="also write an SVG plot of the CSV data")
    parser.add_argument("--tol-override", action="append", default=[], metavar="K=V",
                        help="override a tolerance, e.g. tol=1e-4 (repeatable)")
    return parser


def output_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or cfg.out or "wienerlab-out")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.tol_override)
        out = SUBCOMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WienerLabError as exc:
        print(f"{args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    target = output_dir(args, cfg)
    target.mkdir(parents=True, exist_ok=True)
    csv_path = target / f"{out.name}.csv"
    csv_path.write_text(out.csv_text(), encoding="utf-8")
    if args.svg:
        (target / f"{out.name}.svg").write_text(render_svg(out), encoding="utf-8")
    for line in out.lines:
        print(line)
    for label, ok in out.checks:
        print(f"{'PASS' if ok else 'FAIL'} {label}")
    print(f"{args.subcommand}: {'PASS' if out.passed else 'FAIL'} ({csv_path})")
    return EXIT_OK if out.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
