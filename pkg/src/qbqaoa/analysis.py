"""Mixability analysis and experiment drivers.

Every driver returns plain data and writes deterministic artifacts (CSV,
JSON, PGM). Each artifact carries the config that produced it.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.stats

from .circuit import QaoaCircuit
from .config import build_model, moments_from_config, risk_factor
from .encoding import build_layout, decode_index, qubit_counts
from .exceptions import CapExceeded, ConfigError
from .iterate import IterationConfig, qaoa_solver, refine
from .problem import IntegerModel
from .qaoa import QuasiBinaryQAOA

MIXABILITY_CAP = 512
BETA_GRID = tuple(i * math.pi / 4 for i in range(1, 8))


def mixer_circuit(layout, D_hat):
    """Cost-free circuit on the feasible subspace of ``layout`` at sum ``D_hat``."""
    n = layout.n_assets
    model = IntegerModel(
        np.zeros((n, n)),
        np.zeros(n),
        np.zeros(n, dtype=np.int64),
        np.array(layout.R, dtype=np.int64),
        int(D_hat),
    )
    return QaoaCircuit(model, layout)


def mixer_unitary(circuit, betas, reverse=False):
    """Matrix of ``len(betas)`` mixing layers on the feasible subspace.

    Columns are evolved basis states. With ``reverse`` each layer applies
    its gates in reverse order, so negated angles in reverse layer order
    give the adjoint.
    """
    x = np.eye(circuit.size, dtype=np.complex128)
    pairs = circuit._pairs[::-1] if reverse else circuit._pairs
    for beta in betas:
        for lo, hi, scale in pairs:
            c = np.cos(scale * beta)
            s = -1j * np.sin(scale * beta)
            xu = x[lo]
            xv = x[hi]
            x[lo] = c * xu + s * xv
            x[hi] = s * xu + c * xv
    return x


@dataclass
class MixabilityMatrix:
    encodings: np.ndarray
    portfolios: np.ndarray
    reachable: np.ndarray
    amplitude: np.ndarray = field(repr=False)
    boundaries: list
    p: int
    eps: float
    angle_scale: float = 1.0

    @property
    def size(self):
        return self.encodings.size

    def pgm(self):
        """Binary PGM, black where reachable."""
        n = self.size
        header = f"P5\n{n} {n}\n255\n".encode("ascii")
        pixels = np.where(self.reachable, 0, 255).astype(np.uint8)
        return header + pixels.tobytes()

    def csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "column", "row_portfolio", "column_portfolio", "max_amplitude", "reachable"])
        for i in range(self.size):
            for j in range(self.size):
                w.writerow([
                    int(self.encodings[i]),
                    int(self.encodings[j]),
                    " ".join(map(str, self.portfolios[i])),
                    " ".join(map(str, self.portfolios[j])),
                    repr(float(self.amplitude[i, j])),
                    int(self.reachable[i, j]),
                ])
        return buf.getvalue()

    def to_dict(self):
        return {
            "p": self.p,
            "eps": self.eps,
            "betas": "i*pi/4 for i=1..7, equal in every layer",
            "angle_scale": self.angle_scale,
            "encodings": self.encodings.tolist(),
            "portfolios": self.portfolios.tolist(),
            "boundaries": self.boundaries,
            "n_reachable": int(self.reachable.sum()),
            "all_reachable": bool(self.reachable.all()),
        }


def mixability_matrix(layout, D_hat, p, eps=1e-3, cap=MIXABILITY_CAP, angle_scale=1.0):
    """Reachability between feasible encodings under mixer-only evolution.

    Entry ``(phi, psi)`` is true when some grid angle, used in all ``p``
    layers, moves more than ``eps`` amplitude from ``psi`` onto ``phi``.
    Encodings are ordered by decoded portfolio, then by basis index;
    ``boundaries`` lists the positions where the portfolio changes.

    With the mixer normalization used throughout (rotation ``2*beta`` for
    XY, ``4*beta`` for XYY) every grid angle turns each gate into either
    the identity or a full swap, so the layer is a phased permutation and
    reachability stays sparse. ``angle_scale`` multiplies the grid angles
    to study other gate-angle conventions; 0.25 matches gates that rotate
    by ``beta/2`` and ``beta``.
    """
    circuit = mixer_circuit(layout, D_hat)
    if circuit.size > cap:
        raise CapExceeded(f"{circuit.size} feasible encodings exceeds cap {cap}")
    y = decode_index(layout, circuit.indices)
    order = np.lexsort((circuit.indices,) + tuple(y[:, k] for k in range(y.shape[1] - 1, -1, -1)))
    if p == 0:
        amp = np.eye(circuit.size)
    else:
        amp = np.zeros((circuit.size, circuit.size))
        for beta in BETA_GRID:
            U = mixer_unitary(circuit, [angle_scale * beta] * p)
            np.maximum(amp, np.abs(U), out=amp)
    amp = amp[np.ix_(order, order)]
    ys = y[order]
    boundaries = [i for i in range(1, len(ys)) if np.any(ys[i] != ys[i - 1])]
    return MixabilityMatrix(circuit.indices[order], ys, amp > eps, amp, boundaries, int(p), float(eps), float(angle_scale))


def qubit_sweep(r_max=4096):
    """Rows ``(R, qubits, log2(R+1))`` for single variables ``1..r_max``."""
    rows = []
    for r in range(1, r_max + 1):
        _, total = qubit_counts(build_layout([r]))
        rows.append((r, total, math.log2(r + 1)))
    return rows


def t_interval(values, level=0.95):
    """Student-t confidence interval ``(mean, low, high)``; NaN width for one value."""
    x = np.asarray(values, dtype=float)
    mean = float(x.mean())
    if x.size < 2:
        return mean, math.nan, math.nan
    half = float(scipy.stats.t.ppf(0.5 + level / 2, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))
    return mean, mean - half, mean + half


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def instance_runs(model, config):
    """Repeated QAOA runs over schedulers and depths.

    Returns ``(reports, table)``; ``reports`` maps ``(scheduler, p, rep)``
    to a :class:`RunReport`, ``table`` holds mean approximation ratios with
    t-intervals over repetitions.
    """
    reports = {}
    table = []
    reps = config["repetitions"]
    for scheduler in _as_list(config["scheduler"]):
        for p in _as_list(config["p"]):
            ar_c, ar_n = [], []
            for rep in range(reps):
                est = QuasiBinaryQAOA(
                    p=p,
                    scheduler=scheduler,
                    estimator=config["estimator"],
                    tau=config["tau"],
                    shots=config["K"],
                    sampling=config["sampling"],
                    eta=config["eta"],
                    budget=config["budget"],
                    seed=config["seed"] + rep,
                ).fit(model)
                r = est.report_
                reports[(scheduler, p, rep)] = r
                ar_c.append(r.ar_cvar)
                ar_n.append(r.ar_normal)
            table.append((scheduler, p, reps, *t_interval(ar_c), *t_interval(ar_n)))
    return reports, table


AR_HEADER = [
    "scheduler", "p", "repetitions",
    "ar_cvar_mean", "ar_cvar_low", "ar_cvar_high",
    "ar_normal_mean", "ar_normal_low", "ar_normal_high",
]


def _write(out, name, data):
    path = Path(out) / name
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data)
    return path


def _json(data):
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def run_experiment(config, out):
    """Run the experiment named by ``config["experiment"]`` and write its artifacts.

    ``config`` is a validated dict (see :func:`qbqaoa.config.load_config`).
    Returns the list of written paths.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    kind = config["experiment"]
    written = [_write(out, "config.json", _json(config))]
    if kind == "sweep-qubits":
        rows = qubit_sweep(config["R_max"])
        written.append(_write(out, "qubits.csv", _csv(["R", "qubits", "log2_R_plus_1"], rows)))
    elif kind == "mixability":
        layout = build_layout(config["R"])
        m = mixability_matrix(layout, config["D_hat"], config["p"], config["epsilon"], angle_scale=config["angle_scale"])
        written.append(_write(out, "mixability.pgm", m.pgm()))
        written.append(_write(out, "mixability.csv", m.csv()))
        written.append(_write(out, "mixability.json", _json({"config": config, **m.to_dict()})))
    elif kind in ("solve", "instance"):
        model = build_model(config)
        reports, table = instance_runs(model, config)
        written.append(_write(out, "ar_table.csv", _csv(AR_HEADER, table)))
        rows = []
        for (scheduler, p, rep), r in reports.items():
            rows.extend((scheduler, p, rep, *row) for row in r.cdf_rows())
        written.append(_write(out, "cdf.csv", _csv(["scheduler", "p", "repetition", "cost", "probability", "cumulative"], rows)))
        runs = [
            {"scheduler": s, "p": p, "repetition": rep, "report": r.to_dict()}
            for (s, p, rep), r in reports.items()
        ]
        written.append(_write(out, "reports.json", _json({"config": config, "runs": runs})))
    elif kind == "iterate":
        moments = moments_from_config(config)
        lo, hi = config["bounds"]
        icfg = IterationConfig(
            alpha0=config["alpha"],
            lam=config["lambda"],
            iterations=config["iterations"],
            p=_as_list(config["p"])[0],
            scheduler=_as_list(config["scheduler"])[0],
            estimator=config["estimator"],
            tau=config["tau"],
            shots=config["K"],
            sampling=config["sampling"],
            eta=config["eta"],
            budget=config["budget"],
            seed=config["seed"],
        )
        q = risk_factor(config, moments)
        result = refine(qaoa_solver(moments, q, icfg, config["total"]), icfg, lo, hi, config["total"])
        summary = {"config": config, **result.to_dict()}
        written.append(_write(out, "iteration.json", _json(summary)))
        rows = []
        for rec in result.records:
            if rec.report is not None:
                rows.extend((rec.iteration, rec.alpha, *row) for row in rec.report.cdf_rows())
        written.append(_write(out, "iteration_cdf.csv", _csv(["iteration", "alpha", "cost", "probability", "cumulative"], rows)))
    else:
        raise ConfigError(f"unknown experiment {kind!r}")
    return written

