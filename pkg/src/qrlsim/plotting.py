"""Learning-curve figures (episode vs. steps, one line per learning rate)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import InvalidArgument  # noqa: E402

COLORS = plt.get_cmap("tab20").colors

RC = {
    "axes.labelsize": 12,
    "axes.spines.right": False,
    "axes.spines.top": False,
    "legend.fontsize": 8,
    "legend.framealpha": 0.6,
    "xtick.labelsize": 10,
    "ytick.labelsize": 10,
    # keep text as <text> so labels stay searchable; fixed salt for reproducible ids
    "svg.fonttype": "none",
    "svg.hashsalt": "qrlsim",
}


def series_label(agent: str, alpha: float) -> str:
    return f"{agent} alpha={alpha:g}"


def emit_learning_curve_svg(agg, path, log_x: bool = False, stat: str = "median",
                            oracle: int | None = None, title: str | None = None) -> Path:
    """Render one line per series of ``agg`` to a standalone SVG file.

    Each line is tagged ``gid="series-<i>"`` in the output.
    """
    if agg is None or len(agg) == 0:
        raise InvalidArgument("nothing to plot: aggregate is empty")
    if stat not in ("mean", "median", "min", "max"):
        raise InvalidArgument(f"unknown statistic {stat!r}")
    path = Path(path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(8, 5))
        for i, s in enumerate(agg.series):
            y = getattr(s, stat)
            x = range(1, len(y) + 1)
            (line,) = ax.plot(x, y, lw=0.9, color=COLORS[i % len(COLORS)],
                              label=series_label(s.agent, s.alpha))
            line.set_gid(f"series-{i}")
        if oracle is not None:
            ax.axhline(oracle, color="0.3", ls="--", lw=0.8, label=f"shortest path ({oracle})")
        if log_x:
            ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("episode")
        ax.set_ylabel(f"steps per episode ({stat} over runs)")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", ncol=2 if len(agg) > 6 else 1)
        fig.tight_layout()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        finally:
            plt.close(fig)
    return path
