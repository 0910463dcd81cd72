"""Figure rendering for the CLI report path.

Each experiment that writes a CSV also renders one matplotlib figure next to
it (same stem, .png). Figures are a convenience view of the delimited
output, never a data source; the CSV remains the contract.
"""

from __future__ import annotations

import numpy as np

from .spectral import density_rho0


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def figure_path(out_csv: str) -> str:
    stem = out_csv[:-4] if out_csv.endswith(".csv") else out_csv
    return stem + ".png"


def render_quantile_figure(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    by_shape: dict[tuple, list] = {}
    for r in rows:
        by_shape.setdefault((r.case, r.m, r.n), []).append(r)
    for (case, m, n), cells in sorted(by_shape.items()):
        nominal = [c.nominal_p for c in cells]
        empirical = [c.empirical_p for c in cells]
        ax.plot(nominal, empirical, "o-", ms=4, label=f"{case} {m}x{n}")
    ax.plot([0, 1], [0, 1], "k--", lw=0.8, label="nominal")
    ax.set_xlabel("nominal TW probability")
    ax.set_ylabel("empirical probability")
    ax.set_title("Quantile accuracy of the normalized top eigenvalue")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_size_power_figure(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [f"{r['M']}x{r['N']}" for r in rows]
    rates = [r["rejection_rate"] for r in rows]
    errs = [r["two_se"] for r in rows]
    x = np.arange(len(rows))
    ax.bar(x, rates, yerr=errs, capsize=3, color="#4878b0")
    ax.axhline(rows[0].get("_level", 0.05) if rows else 0.05, color="gray",
               ls=":", lw=0.8)
    ax.set_xticks(x, labels, rotation=45, ha="right", fontsize=8)
    alt = rows[0]["alternative"] if rows else "null"
    tau = rows[0]["tau"] if rows else 0
    ax.set_ylabel("rejection rate")
    ax.set_title(f"Gap-ratio test, {alt} (tau={tau})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_null_table_figure(table, cv: float, level: float, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ratios = table.sorted_ratios
    clip = np.quantile(ratios, 0.995)
    ax.hist(ratios[ratios <= clip], bins=80, color="#4878b0", alpha=0.85)
    ax.axvline(cv, color="crimson", lw=1.2,
               label=f"critical value {cv:.3g} (level {level:g})")
    ax.set_xlabel("gap ratio (l1-l2)/(l2-l3)")
    ax.set_ylabel("count")
    ax.set_title(f"Simulated null, beta={table.beta}, dim={table.meta[0]}, "
                 f"reps={table.meta[1]}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_edge_params_figure(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for row in rows:
        spectrum = row["_spectrum"]
        ep = row["_edge"]
        grid = np.linspace(0.05, ep.lambda_r * 1.08, 320)
        rho = density_rho0(grid, spectrum, row["d_n"])
        ax.plot(grid, rho, lw=1.2, label=f"M={row['M']} N={row['N']}")
        ax.axvline(ep.lambda_r, color="gray", ls=":", lw=0.8)
    ax.set_xlabel("E")
    ax.set_ylabel("density")
    ax.set_title(f"Limiting density and right edge, {rows[0]['sigma_model']}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_test_figure(row, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    bars = ["statistic", "critical value"]
    vals = [min(row["statistic"], 1e6), row["critical_value"]]
    ax.bar(bars, vals, color=["crimson" if row["reject"] else "#4878b0", "gray"])
    verdict = "reject" if row["reject"] else "no reject"
    ax.set_title(f"{row['M']}x{row['N']} matrix: {verdict} at level {row['level']:g}")
    ax.set_ylabel("gap ratio")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_diagnostics_figure(result, path: str) -> None:
    plt = _pyplot()
    fit = result["rigidity"]
    fig, ax = plt.subplots(figsize=(5, 4))
    sizes = np.array(fit.sizes, dtype=float)
    ax.loglog(sizes, fit.spreads, "o", color="#4878b0", label="spread of top eigenvalue")
    anchor = fit.spreads[0] * (sizes / sizes[0]) ** fit.slope
    ax.loglog(sizes, anchor, "-", color="crimson", lw=1,
              label=f"fit slope {fit.slope:.3f}")
    ref = fit.spreads[0] * (sizes / sizes[0]) ** (-2.0 / 3.0)
    ax.loglog(sizes, ref, "k--", lw=0.8, label="slope -2/3")
    ax.set_xlabel("N")
    ax.set_ylabel("spread")
    ax.set_title("Edge rigidity scaling")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
