"""Snapshots, run manifests and plot-script emission."""

import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import os
import subprocess
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .config import format_config, parse_config_text
from .errors import MissingSnapshotError, ObvortexError

SNAPSHOT_HEADER = ("x1", "x2", "u1", "u2", "theta", "rho", "omega", "phi", "Theta1", "Theta2")
MANIFEST_NAME = "manifest.json"


def snapshot_name(t):
    return f"fields_t{t:08.3f}.csv"


def _fmt(v):
    # adding 0.0 maps -0.0 to 0.0 so equal fields give equal bytes
    return repr(float(v) + 0.0)


def snapshot_columns(grid):
    n2, n1 = grid.shape
    g1, g2 = np.meshgrid(grid.x1, grid.x2)
    cols = [g1, g2, grid.u[..., 0], grid.u[..., 1], grid.theta, grid.rho,
            grid.omega, grid.phi, grid.Theta[..., 0], grid.Theta[..., 1]]
    return np.stack([c.reshape(n1 * n2) for c in cols], axis=-1)


def write_snapshot(grid, t, directory):
    """Write ``grid`` as one CSV row per node (rows of constant ``x2``)."""
    path = os.path.join(directory, snapshot_name(t))
    table = snapshot_columns(grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        for row in table:
            w.writerow([_fmt(v) for v in row])
    return path


def read_snapshot(path):
    """Columns of a snapshot CSV keyed by header name."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body])
    return {name: data[:, k] for k, name in enumerate(header)}


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def version_string():
    from . import __version__
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True,
                             text=True, timeout=5, cwd=os.path.dirname(__file__))
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}-g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class RunManifest:
    config: str
    seed: int
    version: str
    started: str
    finished: str | None = None
    snapshots: list = field(default_factory=list)  # dicts: t, file, sha256
    counters: dict = field(default_factory=lambda: {"clamped": 0, "cfl_warnings": 0})
    complete: bool = False
    error: str | None = None

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(manifest, directory):
    path = os.path.join(directory, MANIFEST_NAME)
    with open(path, "w") as fh:
        fh.write(manifest.to_json() + "\n")
    return path


def load_manifest(directory):
    with open(os.path.join(directory, MANIFEST_NAME)) as fh:
        return RunManifest.from_json(fh.read())


def verify_run(directory):
    """Problems found in a run directory; empty when checksums and config echo hold."""
    problems = []
    man = load_manifest(directory)
    for snap in man.snapshots:
        path = os.path.join(directory, snap["file"])
        if not os.path.exists(path):
            problems.append(f"missing snapshot {snap['file']}")
        elif sha256_file(path) != snap["sha256"]:
            problems.append(f"checksum mismatch for {snap['file']}")
    try:
        cfg = parse_config_text(man.config)
        if format_config(cfg) != man.config:
            problems.append("config echo does not round-trip")
    except ObvortexError as err:
        problems.append(f"config echo does not parse: {err}")
    if not man.complete:
        problems.append("run is flagged incomplete")
    return problems


def run(cfg, out_dir, threads=1, plots=True):
    """Run ``cfg`` writing snapshots, a manifest and plot scripts into ``out_dir``.

    A failing step still leaves a manifest, flagged incomplete, listing the
    snapshots written so far; the error is then re-raised.
    """
    os.makedirs(out_dir, exist_ok=True)
    man = RunManifest(config=format_config(cfg), seed=int(cfg.seed),
                      version=version_string(), started=_now())

    def on_snapshot(state):
        path = write_snapshot(state.grid, state.t, out_dir)
        man.snapshots.append({"t": state.t, "file": os.path.basename(path),
                              "sha256": sha256_file(path)})
        man.counters["clamped"] = int(state.counters.get("clamped", 0))

    try:
        final = engine.simulate(cfg, on_snapshot=on_snapshot, threads=threads)
    except Exception as err:
        man.error = f"{type(err).__name__}: {err}"
        man.finished = _now()
        write_manifest(man, out_dir)
        raise
    man.counters["clamped"] = int(final.counters.get("clamped", 0))
    man.complete = True
    man.finished = _now()
    write_manifest(man, out_dir)
    if plots:
        emit_plot_scripts(man, out_dir)
    return man


# --- plot scripts ----------------------------------------------------------

_PLOT_PRELUDE = '''"""Plot {title} from the snapshot CSVs next to this script."""
import os

import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
SNAPSHOTS = {snapshots!r}


def load(name):
    data = np.genfromtxt(os.path.join(HERE, name), delimiter=",", names=True)
    x1 = np.unique(data["x1"])
    x2 = np.unique(data["x2"])
    shape = (len(x2), len(x1))
    return x1, x2, {{k: data[k].reshape(shape) for k in data.dtype.names}}


fig, axes = plt.subplots(1, len(SNAPSHOTS), figsize=(4 * len(SNAPSHOTS), 3.5), squeeze=False)
for ax, (t, name) in zip(axes[0], SNAPSHOTS):
    x1, x2, f = load(name)
'''

_HEATMAP_BODY = '''    im = ax.pcolormesh(x1, x2, f["{column}"], shading="auto", cmap="{cmap}")
    fig.colorbar(im, ax=ax)
    ax.set_title("{label}, t = %g" % t)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{stem}.png"), dpi=150)
'''

_QUIVER_BODY = '''    keep = x2 <= {x2max!r}
    X1, X2 = np.meshgrid(x1, x2[keep])
    ax.quiver(X1, X2, f["u1"][keep], f["u2"][keep])
    ax.set_title("{label}, t = %g" % t)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{stem}.png"), dpi=150)
'''

_HEATMAPS = (
    ("plot_temperature", "theta", "temperature", "inferno"),
    ("plot_density", "rho", "density", "viridis"),
    ("plot_vorticity", "omega", "vorticity", "RdBu_r"),
    ("plot_expansion_rate", "phi", "expansion rate", "RdBu_r"),
)


def emit_plot_scripts(manifest, directory):
    """Write matplotlib scripts for every field family plus the wall layer.

    Scripts refer to the snapshot CSVs by file name relative to
    ``directory``; returns the script paths.
    """
    snaps = [(float(s["t"]), s["file"]) for s in manifest.snapshots]
    if not snaps:
        raise MissingSnapshotError("manifest lists no snapshots")
    for _, name in snaps:
        if not os.path.exists(os.path.join(directory, name)):
            raise MissingSnapshotError(f"snapshot {name} not found in {directory}")
    cfg = parse_config_text(manifest.config)
    jobs = [("plot_velocity", _QUIVER_BODY.format(x2max=float(cfg.L), label="velocity",
                                                 stem="plot_velocity"), "velocity")]
    for stem, col, label, cmap in _HEATMAPS:
        jobs.append((stem, _HEATMAP_BODY.format(column=col, label=label, cmap=cmap, stem=stem),
                     label))
    jobs.append(("plot_wall_layer",
                 _QUIVER_BODY.format(x2max=float(cfg.s) * (1 + 1e-9), label="wall layer velocity",
                                     stem="plot_wall_layer"), "the wall-layer velocity"))
    paths = []
    for stem, body, title in jobs:
        path = os.path.join(directory, stem + ".py")
        with open(path, "w") as fh:
            fh.write(_PLOT_PRELUDE.format(title=title, snapshots=snaps) + body)
        paths.append(path)
    return paths
