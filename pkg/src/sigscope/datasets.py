"""Synthetic fixtures with known outcomes.

``taxonomy_fixture`` is a hand-built 2-D embedding of four clusters whose
points were placed so that classification yields 2 absolute, 9 valid and 5
ambiguous potential outliers, each with a comfortable margin from every region
boundary at the default alpha.

``series_fixture`` turns that layout into raw periodic series. Each period is
``level + u cos(7 w t) + v cos(14 w t)``, so its signature is
``(level, u, v, 0, 0, 0, 0)`` and the embedding of the signatures is the layout
itself up to translation and axis reflections, neither of which changes a
verdict. Four singleton periods make the layout's principal axes coincide with
the coordinate axes, and ten extra periods contain negative samples so the
default filter drops them.

Run ``python -m sigscope.datasets DIR`` to write ``volume.csv``,
``clusters.csv`` and ``config.toml`` into ``DIR``.
"""

import sys
from pathlib import Path

import numpy as np

from .ingest import SeriesMatrix, write_csv

# (cluster id, points). Inliers lie on the cluster's own curve, the outliers
# after them supply the residual scatter.
_LAYOUT = (
    (0, (0.0, 0.0), (
        (0.007, 0.0021), (0.016, 0.0046), (0.04, 0.0107), (0.05, 0.013), (0.069, 0.0169),
        (0.088, 0.0202), (0.144, 0.0266), (0.162, 0.0276), (0.185, 0.0281), (0.264, 0.0234),
        (0.868, -0.3604), (0.889, -0.3574), (0.896, -0.3581), (0.099, -0.038),
    )),
    (1, (3.0, 5.0), (
        (0.003, 0.0), (0.011, 0.0001), (0.024, 0.0006), (0.045, 0.002), (0.063, 0.004),
        (0.071, 0.005), (0.095, 0.009), (0.122, 0.0149), (0.142, 0.0202), (0.264, 0.0697),
        (0.266, 0.0708), (0.272, 0.074), (0.879, 0.7696), (0.904, 0.8102), (0.905, 0.8214),
        (0.088, 0.147), (0.083, 0.118),
    )),
    (3, (-3.0, 6.0), (
        (0.039, 0.0015), (0.067, 0.0045), (0.082, 0.0067), (0.088, 0.0077), (0.156, 0.0243),
        (0.184, 0.0339), (0.185, 0.0342), (0.197, 0.0388), (0.209, 0.0437), (0.21, 0.0441),
        (0.224, 0.0502), (0.897, 0.7973), (0.91, 0.8104), (0.412, 0.049), (0.255, 0.277),
    )),
    (4, (4.0, -4.0), (
        (0.001, 0.0), (0.029, 0.0008), (0.042, 0.0018), (0.05, 0.0025), (0.06, 0.0036),
        (0.062, 0.0038), (0.076, 0.0058), (0.127, 0.0161), (0.169, 0.0286), (0.205, 0.042),
        (0.986, 0.9765), (0.987, 0.9722), (0.998, 0.9909),
    )),
)

# classes in layout order
_EXPECTED = (
    ["inlier"] * 10 + ["valid"] * 3 + ["ambiguous"]
    + ["inlier"] * 12 + ["valid"] * 3 + ["ambiguous"] * 2
    + ["inlier"] * 11 + ["valid"] * 2 + ["ambiguous"] * 2
    + ["inlier"] * 10 + ["absolute", "valid", "absolute"]
)

SINGLETON_IDS = (2, 5, 6, 7)
SINGLETON_LABELS = ("Wk15", "Wk18", "Wk44", "Wk55")
LEVEL = 200.0
AMPLITUDE_BASE = 30.0
N_REJECTED = 10


def taxonomy_fixture():
    """Return ``(labels, coords, cluster_ids, expected_classes)``."""
    coords, ids = [], []
    for cid, (ox, oy), pts in _LAYOUT:
        for x, y in pts:
            coords.append((x + ox, y + oy))
            ids.append(cid)
    labels = [f"P{i + 1:02d}" for i in range(len(coords))]
    return labels, np.array(coords), np.array(ids), list(_EXPECTED)


def _singletons(coords):
    # offsets summing to zero keep the centroid; the first pair cancels the
    # cross moment, the second stretches x so it stays the leading axis
    c = coords - coords.mean(axis=0)
    sxx, syy = float(c[:, 0] @ c[:, 0]), float(c[:, 1] @ c[:, 1])
    sxy = float(c[:, 0] @ c[:, 1])
    a = np.sqrt(abs(sxy)) + 1.0
    b = -sxy / (2 * a)
    a2 = np.sqrt(max(0.0, syy + 2 * b * b - sxx - 2 * a * a) / 2) + 5.0
    g = coords.mean(axis=0)
    return g + np.array([(a, b), (-a, -b), (a2, 0.0), (-a2, 0.0)])


def series_fixture(samples_per_period=168):
    """Return ``(SeriesMatrix, clusters)`` where ``clusters`` maps label to id
    for the periods that survive the default filter."""
    _, coords, ids, _ = taxonomy_fixture()
    coords = np.vstack([coords, _singletons(coords)])
    ids = np.concatenate([ids, SINGLETON_IDS])
    t = np.arange(samples_per_period)
    w = 2 * np.pi / samples_per_period
    c7, c14 = np.cos(7 * w * t), np.cos(14 * w * t)

    n_total = len(coords) + N_REJECTED
    names = [f"Wk{i + 1}" for i in range(n_total)]
    pool = [n for n in names if n not in SINGLETON_LABELS]
    rejected = set(pool[4::6][:N_REJECTED])
    kept = [n for n in pool if n not in rejected]
    assigned = dict(zip(kept, range(len(kept))))
    for k, lab in enumerate(SINGLETON_LABELS):
        assigned[lab] = len(kept) + k

    rows, clusters = [], {}
    for n, name in enumerate(names):
        if name in rejected:
            row = LEVEL + AMPLITUDE_BASE * c7
            row[(5 * n) % samples_per_period] = -1.0
        else:
            i = assigned[name]
            u, v = AMPLITUDE_BASE + coords[i]
            row = LEVEL + u * c7 + v * c14
            clusters[name] = int(ids[i])
        rows.append(row)
    return SeriesMatrix(tuple(names), np.array(rows)), clusters


def write_fixture(directory):
    """Write the series fixture, its cluster file and a matching config."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    matrix, clusters = series_fixture()
    write_csv(matrix, directory / "volume.csv")
    lines = ["label,cluster"] + [f"{lab},{cid}" for lab, cid in clusters.items()]
    (directory / "clusters.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (directory / "config.toml").write_text(
        'input = "volume.csv"\nclusters = "clusters.csv"\nout = "out"\n'
        "min_value = 0.0\nalpha = 0.05\nmax_degree = 3\n",
        encoding="utf-8",
    )
    return directory


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit("usage: python -m sigscope.datasets DIR")
    print(write_fixture(sys.argv[1]))
