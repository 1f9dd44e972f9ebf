"""Plot a run CSV written by ``osmm run``: ``python -m osmm.plot run.csv [out.png]``.

Panels: suboptimality and gap (top) and RMS residual (bottom), each against
iteration (left) and wall time (right).  Suboptimality uses the best ``h`` in
the file as the reference value.  Needs matplotlib (``pip install .[plot]``).
"""

import csv
import sys

import numpy as np


def load(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def plot(path, out=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    d = load(path)
    h_star = np.min(d["h"])
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharey="row")
    for col, (xkey, xlabel) in enumerate((("iter", "iteration"), ("time_s", "time (s)"))):
        top, bottom = axes[0, col], axes[1, col]
        top.semilogy(d[xkey], np.maximum(d["h"] - h_star, 1e-16), label="suboptimality")
        gap = d["gap"]
        ok = np.isfinite(gap)
        if np.any(ok):
            top.semilogy(d[xkey][ok], np.maximum(gap[ok], 1e-16), label="gap")
        res = d["rms_residual"]
        ok = np.isfinite(res)
        bottom.semilogy(d[xkey][ok], res[ok], "o-", ms=3, label="RMS residual")
        bottom.set_xlabel(xlabel)
        top.legend()
        bottom.legend()
    fig.tight_layout()
    out = out or path.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=120)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print(__doc__)
        return 1
    print(plot(argv[0], argv[1] if len(argv) > 1 else None))
    return 0


if __name__ == "__main__":
    sys.exit(main())
