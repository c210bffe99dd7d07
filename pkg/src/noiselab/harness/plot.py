"""Best-effort SVG figures. Needs matplotlib; never used by acceptance checks."""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "noiselab"
    return plt


def plot_trace(trace, path: str | Path, title: str = "") -> Path:
    plt = _pyplot()
    its = [r.index for r in trace.iterates]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(its, [r.loss for r in trace.iterates], label="loss J")
    ax.plot(its, [r.stability for r in trace.iterates], label="stability s")
    ax.set_xlabel("iteration")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def plot_report(report, out_dir: str | Path) -> list[Path]:
    plt = _pyplot()
    out = Path(out_dir)
    paths = []
    if report.kind == "select":
        for name in dict.fromkeys(r["condition"] for r in report.rows):
            recs = [r for r in report.rows if r["condition"] == name]
            fig, ax = plt.subplots(figsize=(4.5, 3.5))
            ax.scatter([r["score"] for r in recs], [r["x0_quality_loglik"] for r in recs], s=8)
            ax.set_xlabel("stability s(eps)")
            ax.set_ylabel("log-likelihood of x0")
            ax.set_title(name)
            fig.tight_layout()
            p = out / f"scatter_{name}.svg"
            fig.savefig(p, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(p)
    else:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        keys = sorted({(t["T"], t["condition"], t["seed"]) for t in report.traces})
        for T in sorted({k[0] for k in keys}):
            by_iter: dict[int, list[float]] = {}
            for t in report.traces:
                if t["T"] == T:
                    by_iter.setdefault(t["iter"], []).append(t["stability"])
            its = sorted(by_iter)
            ax.plot(its, [sum(by_iter[i]) / len(by_iter[i]) for i in its], label=f"T={T}")
        ax.set_xlabel("iteration")
        ax.set_ylabel("mean stability")
        ax.legend()
        fig.tight_layout()
        p = out / "mean_stability.svg"
        fig.savefig(p, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(p)
    return paths
