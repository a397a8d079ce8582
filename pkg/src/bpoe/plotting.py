"""Figure rendering for CLI sweep reports."""

from __future__ import annotations


def render_sweep_figure(xs, bpoe_values, failure_probs, path) -> None:
    """Plot bPOE and failure probability against the decision value.

    Saved to ``path``; the format follows the file extension.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, bpoe_values, label="buffered failure probability", lw=1.8)
    ax.plot(xs, failure_probs, label="failure probability", lw=1.4, ls="--")
    ax.set_xlabel("x")
    ax.set_ylabel("probability")
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
