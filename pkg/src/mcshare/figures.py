"""Parameter sweeps backing the shipped figures, CSV output and plots.

Each figure preset pins its fixed parameter values and sweeps the remaining
axis; every CSV row carries the analytic value(s) next to the Monte Carlo
estimate so the two can be compared column-by-column. CSV files are UTF-8,
comma-separated, with '#' metadata header lines and 12 significant digits
for reals; bodies are byte-identical for a given seed regardless of thread
count.
"""

import csv
import io
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__
from . import analytic, montecarlo
from .params import SystemParams

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "custom")

# Sweep grids for the shipped presets.
THETA_DB_GRID = [-20.0 + i for i in range(41)]
EPSILON_GRID = [round(0.05 * i, 2) for i in range(1, 21)]
LAMBDA_GRID = [1e-6, 3e-6, 6e-6]
FIG2_EPSILONS = [0.1, 0.4, 0.8]
POINT_THETA_DB = -10.0

_SVG_HASHSALT = "mcshare"


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(path, metadata: dict, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key} = {value}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row width {len(row)} != column count {len(columns)}")
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """Read one of our CSVs back: (metadata dict, column list, float rows)."""
    metadata = {}
    with open(path, encoding="utf-8", newline="") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                metadata[key.strip()] = value.strip()
            else:
                body.append(line)
    reader = csv.reader(io.StringIO("".join(body)))
    columns = next(reader)
    rows = [[float(v) for v in row] for row in reader if row]
    return metadata, columns, rows


def _base_metadata(figure_id, params, runs, seed, redraws):
    return {
        "tool": f"mcshare {__version__}",
        "figure": figure_id,
        "seed": seed,
        "runs": runs,
        "window_half_width_m": _fmt(params.area_half_width),
        "l_mode": params.l_mode,
        "redraws": redraws,
    }


def _build_fig2(params, runs, seed, threads):
    """Backhaul success vs threshold, one curve per penetration factor."""
    theta_lin = [10.0 ** (t / 10.0) for t in THETA_DB_GRID]
    rows = []
    redraws = 0
    for eps in FIG2_EPSILONS:
        p = params.with_overrides(epsilon=eps)
        analytic_vals = [analytic.p1_success(t, p) for t in theta_lin]
        est, rd = montecarlo.estimate_success("bh", theta_lin, p, n_runs=runs, seed=seed, threads=threads)
        redraws += rd
        for t_db, a, e in zip(THETA_DB_GRID, analytic_vals, est):
            rows.append((t_db, eps, a, e.p_hat, e.ci95_halfwidth, e.n))
    columns = ["theta_db", "epsilon", "analytic_p1", "mc_p1", "mc_ci95", "n"]
    meta = {"lambda_c": _fmt(params.lambda_c)}
    return columns, rows, meta, redraws


def _build_fig3(params, runs, seed, threads):
    """Backhaul success vs threshold, one curve per macro-cell density."""
    theta_lin = [10.0 ** (t / 10.0) for t in THETA_DB_GRID]
    p_eps = params.with_overrides(epsilon=0.1)
    rows = []
    redraws = 0
    for lam in LAMBDA_GRID:
        p = p_eps.with_overrides(lambda_c=lam)
        analytic_vals = [analytic.p1_success(t, p) for t in theta_lin]
        est, rd = montecarlo.estimate_success("bh", theta_lin, p, n_runs=runs, seed=seed, threads=threads)
        redraws += rd
        for t_db, a, e in zip(THETA_DB_GRID, analytic_vals, est):
            rows.append((t_db, lam, a, e.p_hat, e.ci95_halfwidth, e.n))
    columns = ["theta_db", "lambda_c", "analytic_p1", "mc_p1", "mc_ci95", "n"]
    meta = {"epsilon": _fmt(0.1)}
    return columns, rows, meta, redraws


def _build_fig4(params, runs, seed, threads):
    """Both links' success vs penetration factor at a fixed -10 dB threshold."""
    theta = 10.0 ** (POINT_THETA_DB / 10.0)
    rows = []
    redraws = 0
    for eps in EPSILON_GRID:
        p = params.with_overrides(epsilon=eps)
        a_p1 = analytic.p1_success(theta, p)
        a_p2 = analytic.p2_series(theta, p)
        est_bh, rd1 = montecarlo.estimate_success("bh", [theta], p, n_runs=runs, seed=seed, threads=threads)
        est_al, rd2 = montecarlo.estimate_success("al", [theta], p, n_runs=runs, seed=seed, threads=threads)
        redraws += rd1 + rd2
        e1, e2 = est_bh[0], est_al[0]
        rows.append(
            (POINT_THETA_DB, eps, a_p1, e1.p_hat, e1.ci95_halfwidth, a_p2, e2.p_hat, e2.ci95_halfwidth, e1.n)
        )
    columns = [
        "theta_db", "epsilon",
        "analytic_p1", "mc_p1", "mc_p1_ci95",
        "analytic_p2", "mc_p2", "mc_p2_ci95",
        "n",
    ]
    meta = {"lambda_c": _fmt(params.lambda_c), "k_factor": _fmt(params.k_factor)}
    return columns, rows, meta, redraws


def _build_fig5(params, runs, seed, threads):
    """Backhaul ergodic rate vs penetration factor, per macro-cell density."""
    rows = []
    redraws = 0
    for lam in LAMBDA_GRID:
        for eps in EPSILON_GRID:
            p = params.with_overrides(lambda_c=lam, epsilon=eps)
            rate = analytic.ergodic_rate_bh(p)
            est, rd = montecarlo.estimate_ergodic_rate(p, n_runs=runs, seed=seed, threads=threads)
            redraws += rd
            rows.append(
                (eps, lam, rate.integral_value, rate.est_error, est.mean, est.ci95_halfwidth, est.n)
            )
    columns = ["epsilon", "lambda_c", "analytic_rate", "rate_est_error", "mc_rate", "mc_rate_ci95", "n"]
    return columns, rows, {}, redraws


def _build_fig6(params, runs, seed, threads):
    """Access-link success vs penetration factor at the caption's K."""
    theta = 10.0 ** (POINT_THETA_DB / 10.0)
    rows = []
    redraws = 0
    for eps in EPSILON_GRID:
        p = params.with_overrides(epsilon=eps)
        a_p2 = analytic.p2_series(theta, p)
        a_p2s = analytic.p2_series_simplified(theta, p)
        hyb, rd1 = montecarlo.p2_hybrid([theta], p, n_samples=runs, seed=seed, threads=threads)
        est, rd2 = montecarlo.estimate_success("al", [theta], p, n_runs=runs, seed=seed, threads=threads)
        redraws += rd1 + rd2
        h, e = hyb[0], est[0]
        rows.append(
            (POINT_THETA_DB, eps, p.k_factor, a_p2, a_p2s, h.mean, h.ci95_halfwidth, e.p_hat, e.ci95_halfwidth, e.n)
        )
    columns = [
        "theta_db", "epsilon", "k_factor",
        "analytic_p2", "analytic_p2_simplified",
        "hybrid_p2", "hybrid_ci95",
        "mc_p2", "mc_p2_ci95",
        "n",
    ]
    meta = {
        "lambda_c": _fmt(params.lambda_c),
        "k_note": "caption value K=2 (linear); the text's '2 dB' reading is k_factor=1.5849",
    }
    return columns, rows, meta, redraws


def _build_custom(params, runs, seed, threads, sweep):
    """Single-axis sweep of any parameter at a fixed threshold."""
    if sweep is None:
        raise ValueError("custom figure requires --sweep key=start:stop:step")
    key, values = sweep
    theta = 10.0 ** (POINT_THETA_DB / 10.0)
    rows = []
    redraws = 0
    for v in values:
        p = params.with_overrides(**{key: v})
        a_p1 = analytic.p1_success(theta, p)
        a_p2 = analytic.p2_series(theta, p)
        est_bh, rd1 = montecarlo.estimate_success("bh", [theta], p, n_runs=runs, seed=seed, threads=threads)
        est_al, rd2 = montecarlo.estimate_success("al", [theta], p, n_runs=runs, seed=seed, threads=threads)
        redraws += rd1 + rd2
        e1, e2 = est_bh[0], est_al[0]
        rows.append(
            (v, POINT_THETA_DB, a_p1, e1.p_hat, e1.ci95_halfwidth, a_p2, e2.p_hat, e2.ci95_halfwidth, e1.n)
        )
    columns = [
        key, "theta_db",
        "analytic_p1", "mc_p1", "mc_p1_ci95",
        "analytic_p2", "mc_p2", "mc_p2_ci95",
        "n",
    ]
    return columns, rows, {"swept": key}, redraws


def run_figure(
    figure_id: str,
    params: SystemParams,
    out_dir,
    runs=None,
    seed=None,
    threads: int = 1,
    make_plot: bool = True,
    sweep=None,
):
    """Run one figure sweep; write <figure_id>.csv (and .svg) into out_dir.

    Returns the list of written paths. Output is a pure function of
    (figure_id, params, runs, seed); threads only affects wall time.
    """
    if figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {figure_id!r}; expected one of {FIGURE_IDS}")
    runs = params.n_runs if runs is None else int(runs)
    seed = params.seed if seed is None else int(seed)
    os.makedirs(out_dir, exist_ok=True)

    if figure_id == "custom":
        columns, rows, extra, redraws = _build_custom(params, runs, seed, threads, sweep)
    else:
        builder = {
            "fig2": _build_fig2,
            "fig3": _build_fig3,
            "fig4": _build_fig4,
            "fig5": _build_fig5,
            "fig6": _build_fig6,
        }[figure_id]
        columns, rows, extra, redraws = builder(params, runs, seed, threads)

    metadata = _base_metadata(figure_id, params, runs, seed, redraws)
    metadata.update(extra)
    csv_path = os.path.join(out_dir, f"{figure_id}.csv")
    write_csv(csv_path, metadata, columns, rows)
    written = [csv_path]
    if make_plot:
        written.append(render_plot(csv_path))
    return written


# --- plotting -------------------------------------------------------------

# figure id -> (x column, curve-grouping column or None, y specs)
# y specs: list of (analytic column, mc column, mc ci column) triples;
# mc entries may be None.
_PLOT_LAYOUT = {
    "fig2": ("theta_db", "epsilon", [("analytic_p1", "mc_p1", "mc_ci95")], "backhaul success probability"),
    "fig3": ("theta_db", "lambda_c", [("analytic_p1", "mc_p1", "mc_ci95")], "backhaul success probability"),
    "fig4": (
        "epsilon",
        None,
        [("analytic_p1", "mc_p1", "mc_p1_ci95"), ("analytic_p2", "mc_p2", "mc_p2_ci95")],
        "success probability",
    ),
    "fig5": ("epsilon", "lambda_c", [("analytic_rate", "mc_rate", "mc_rate_ci95")], "ergodic rate (nats/s/Hz)"),
    "fig6": (
        "epsilon",
        None,
        [
            ("analytic_p2", "mc_p2", "mc_p2_ci95"),
            ("analytic_p2_simplified", None, None),
            ("hybrid_p2", None, None),
        ],
        "access-link success probability",
    ),
}


def render_plot(csv_path, out_path=None) -> str:
    """Render the vector plot for a figure CSV.

    Pure function of the CSV file contents: same CSV bytes give the same
    SVG bytes (fixed hash salt, no embedded date).
    """
    metadata, columns, rows = read_csv(csv_path)
    figure_id = metadata.get("figure", "custom")
    if out_path is None:
        out_path = os.path.splitext(csv_path)[0] + ".svg"

    if figure_id in _PLOT_LAYOUT:
        x_col, group_col, y_specs, y_label = _PLOT_LAYOUT[figure_id]
    else:
        x_col, group_col, y_specs, y_label = columns[0], None, [("analytic_p1", "mc_p1", "mc_p1_ci95")], "value"

    col = {name: i for i, name in enumerate(columns)}
    groups = sorted({r[col[group_col]] for r in rows}) if group_col else [None]

    plt.rcParams["svg.hashsalt"] = _SVG_HASHSALT
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for g in groups:
        sub = [r for r in rows if group_col is None or r[col[group_col]] == g]
        sub.sort(key=lambda r: r[col[x_col]])
        x = [r[col[x_col]] for r in sub]
        suffix = f" ({group_col}={g:g})" if group_col else ""
        for a_col, m_col, ci_col in y_specs:
            if a_col in col:
                style = "--" if a_col.endswith("simplified") else "-"
                ax.plot(x, [r[col[a_col]] for r in sub], style, label=a_col + suffix)
            if m_col and m_col in col:
                ax.errorbar(
                    x,
                    [r[col[m_col]] for r in sub],
                    yerr=[r[col[ci_col]] for r in sub],
                    fmt="o",
                    markersize=3,
                    capsize=2,
                    linestyle="none",
                    label=m_col + suffix,
                )
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_label)
    ax.grid(True, linestyle=":", linewidth=0.6)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path
