"""Dataset generation, train/validation split, evaluation and reporting.

Dataset files are CSV with a single ``#``-prefixed JSON header line
followed by a column row and one row per channel realization. Floats are
written with 17 significant digits so files round-trip losslessly.

Report CSV columns (one row per scheme, then a ``summary`` row)::

    scheme,mean_rate_nn,mean_rate_conv,rate_ratio_pct,time_nn_s,time_conv_s,time_ratio_pct,satisfaction_pct
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from . import nn
from .model import (
    FEATURE_NAMES,
    ChannelInstance,
    ScenarioParams,
    SystemParams,
    effective_gains,
    effective_gains_array,
    gen_channel,
    rate_from_coeffs,
)
from .solver_perfect import TOL_FEAS, golden_search
from .solver_robust import solve_robust

DATA_COLUMNS = FEATURE_NAMES + ("p_star", "rate_star")
REPORT_COLUMNS = (
    "scheme",
    "mean_rate_nn",
    "mean_rate_conv",
    "rate_ratio_pct",
    "time_nn_s",
    "time_conv_s",
    "time_ratio_pct",
    "satisfaction_pct",
)
SCHEMES = ("none", "l1", "l2")
DEFAULT_TRAIN_FRACTION = 5.0 / 6.0


@dataclass(frozen=True)
class DatasetHeader:
    params: SystemParams
    scenario: ScenarioParams
    uncertainty_profile: tuple[float, float, float]
    solver: str  # "golden", "robust" or "mixed"
    seed: int
    n: int
    n_perfect: int = 0

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "scenario": self.scenario.to_dict(),
            "uncertainty_profile": list(self.uncertainty_profile),
            "solver": self.solver,
            "seed": self.seed,
            "n": self.n,
            "n_perfect": self.n_perfect,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetHeader":
        return cls(
            params=SystemParams(**d["params"]),
            scenario=ScenarioParams(**d["scenario"]),
            uncertainty_profile=tuple(float(e) for e in d["uncertainty_profile"]),
            solver=d["solver"],
            seed=int(d["seed"]),
            n=int(d["n"]),
            n_perfect=int(d.get("n_perfect", 0)),
        )


@dataclass
class LabeledDataset:
    header: DatasetHeader
    features: np.ndarray  # (n, 8)
    labels: np.ndarray  # optimal power, mW
    rates: np.ndarray  # solver secrecy rate, bits/s/Hz

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(
            replace(self.header, n=len(idx)), self.features[idx], self.labels[idx], self.rates[idx]
        )

    def channel(self, i: int) -> ChannelInstance:
        return ChannelInstance.from_features(self.features[i])


def _solve_row(ch: ChannelInstance, params: SystemParams, sc: ScenarioParams):
    if ch.is_perfect:
        return golden_search(effective_gains(ch, params), sc)
    return solve_robust(ch, params, sc)


def _generate(
    n: int,
    params: SystemParams,
    sc: ScenarioParams,
    profiles: list[tuple[float, float, float]],
    seed: int,
    force_robust: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    features = np.empty((n, len(FEATURE_NAMES)))
    labels = np.empty(n)
    rates = np.empty(n)
    for i in range(n):
        # per-row substream: rows are independent of generation order
        ch = gen_channel([seed, i], params, profiles[i])
        res = solve_robust(ch, params, sc) if force_robust else _solve_row(ch, params, sc)
        features[i] = ch.features()
        labels[i] = res.p_star
        rates[i] = res.rate_star
    return features, labels, rates


def gen_dataset(
    n: int,
    params: SystemParams,
    sc: ScenarioParams,
    uncertainty_profile: tuple[float, float, float],
    seed: int,
    robust: bool,
) -> LabeledDataset:
    """Label ``n`` random realizations with a conventional solver.

    Perfect-CSI rows (``robust=False``) carry zero radii and are labeled by
    golden-section search; robust rows carry ``uncertainty_profile`` and are
    labeled by the robust solver.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    profile = tuple(float(e) for e in uncertainty_profile) if robust else (0.0, 0.0, 0.0)
    if min(profile) < 0:
        raise ValueError("uncertainty radii must be >= 0")
    feats, labels, rates = _generate(n, params, sc, [profile] * n, seed, force_robust=robust)
    header = DatasetHeader(params, sc, profile, "robust" if robust else "golden", seed, n, 0 if robust else n)
    return LabeledDataset(header, feats, labels, rates)


def gen_mixed_dataset(
    n: int,
    params: SystemParams,
    sc: ScenarioParams,
    uncertainty_profile: tuple[float, float, float],
    seed: int,
) -> LabeledDataset:
    """First half perfect CSI, second half imperfect with the given radii."""
    if n < 1:
        raise ValueError("n must be >= 1")
    profile = tuple(float(e) for e in uncertainty_profile)
    if min(profile) < 0:
        raise ValueError("uncertainty radii must be >= 0")
    n_perfect = n // 2
    profiles = [(0.0, 0.0, 0.0)] * n_perfect + [profile] * (n - n_perfect)
    feats, labels, rates = _generate(n, params, sc, profiles, seed, force_robust=False)
    header = DatasetHeader(params, sc, profile, "mixed", seed, n, n_perfect)
    return LabeledDataset(header, feats, labels, rates)


def check_labels(ds: LabeledDataset) -> np.ndarray:
    """Boolean mask of rows whose label meets the power cap and worst-case leakage cap."""
    sc = ds.header.scenario
    _, _, leak = effective_gains_array(ds.features, ds.header.params, worst_case=True)
    in_range = (ds.labels >= 0) & (ds.labels <= sc.max_power)
    return in_range & (ds.labels * leak <= sc.leakage_cap + TOL_FEAS)


def split(
    ds: LabeledDataset, train_fraction: float = DEFAULT_TRAIN_FRACTION, seed: int = 0
) -> tuple[LabeledDataset, LabeledDataset]:
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    order = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF).permutation(len(ds))
    n_train = int(round(len(ds) * train_fraction))
    return ds.subset(order[:n_train]), ds.subset(order[n_train:])


def save_dataset(ds: LabeledDataset, path) -> None:
    buf = io.StringIO()
    buf.write("# " + json.dumps(ds.header.to_dict(), sort_keys=True) + "\n")
    buf.write(",".join(DATA_COLUMNS) + "\n")
    table = np.column_stack([ds.features, ds.labels, ds.rates])
    for row in table:
        buf.write(",".join("%.17g" % v for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def load_dataset(path) -> LabeledDataset:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing '#' JSON header line")
        header = DatasetHeader.from_dict(json.loads(first[1:]))
        columns = fh.readline().strip().split(",")
        if tuple(columns) != DATA_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {columns}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    if table.shape[0] != header.n:
        raise ValueError(f"{path}: header says {header.n} rows, found {table.shape[0]}")
    nf = len(FEATURE_NAMES)
    return LabeledDataset(header, table[:, :nf].copy(), table[:, nf].copy(), table[:, nf + 1].copy())


# -- training ---------------------------------------------------------------


def scenario_tag(header: DatasetHeader) -> dict:
    return {"params": header.params.to_dict(), "scenario": header.scenario.to_dict()}


def train_on_dataset(
    ds: LabeledDataset, cfg: nn.TrainConfig, val_fraction: float = 1.0 - DEFAULT_TRAIN_FRACTION
) -> nn.TrainResult:
    """Split ``ds`` (seeded by ``cfg.seed``), train, and tag the model with the dataset scenario."""
    train_ds, val_ds = split(ds, 1.0 - val_fraction, cfg.seed)
    result = nn.train(train_ds.features, train_ds.labels, cfg, val_ds.features, val_ds.labels)
    result.model.info["scenario"] = scenario_tag(ds.header)
    result.model.info["regularization"] = cfg.regularization
    return result


def val_curve_settles(values, n_windows: int = 10, rel_tol: float = 0.10) -> bool:
    """True if a validation-loss curve drops and then stays flat.

    The curve is averaged over ``n_windows`` equal windows. It passes when
    the last window is below the first and no window after the lowest one
    exceeds that lowest window mean by more than ``rel_tol``.
    """
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if len(v) < n_windows:
        return False
    means = np.array([w.mean() for w in np.array_split(v, n_windows)])
    k = int(np.argmin(means))
    return bool(means[-1] < means[0] and np.all(means[k:] <= (1.0 + rel_tol) * means[k]))


# -- evaluation -------------------------------------------------------------


@dataclass
class SchemeStats:
    mean_rate: float
    time: float
    satisfaction: float
    rate_ratio: float
    time_ratio: float


@dataclass
class EvalReport:
    mean_rate_nn: float
    mean_rate_conv: float
    rate_ratio: float  # %, minimum over schemes
    time_nn: float
    time_conv: float
    time_ratio: float  # %, maximum over schemes
    satisfaction: float  # %, minimum over schemes
    n_test: int
    schemes: dict[str, SchemeStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        d = dict(d)
        d["schemes"] = {k: SchemeStats(**v) for k, v in d.get("schemes", {}).items()}
        return cls(**d)


def _ratio_pct(num: float, den: float) -> float:
    if den > 0:
        return 100.0 * num / den
    return 100.0 if num == 0 else math.inf


def conventional_pass(test: LabeledDataset) -> tuple[np.ndarray, float]:
    """Re-solve every test row; returns (powers, total wall time)."""
    params, sc = test.header.params, test.header.scenario
    channels = [test.channel(i) for i in range(len(test))]
    powers = np.empty(len(test))
    start = time.perf_counter()
    for i, ch in enumerate(channels):
        powers[i] = _solve_row(ch, params, sc).p_star
    return powers, time.perf_counter() - start


def _check_scenario(model: nn.Mlp, header: DatasetHeader, name: str) -> None:
    tag = model.info.get("scenario")
    if tag is not None and tag != scenario_tag(header):
        raise ValueError(f"model {name!r} was trained on a different scenario than the test set")


def evaluate(models: Mapping[str, nn.Mlp], test: LabeledDataset) -> EvalReport:
    """Score each trained model against the conventional solvers on ``test``.

    Rates are evaluated at the worst-case channel (identical to the nominal
    one for perfect-CSI rows). Satisfaction counts rows whose clipped NN
    power keeps worst-case leakage within q.
    """
    if not models:
        raise ValueError("no models to evaluate")
    for name, m in models.items():
        _check_scenario(m, test.header, name)
    params, sc = test.header.params, test.header.scenario
    a, b, leak = effective_gains_array(test.features, params, worst_case=True)

    conv_power, time_conv = conventional_pass(test)
    mean_conv = float(np.mean(rate_from_coeffs(conv_power, a, b)))

    stats: dict[str, SchemeStats] = {}
    for name, m in models.items():
        start = time.perf_counter()
        p = nn.predict_power(m, test.features, sc.max_power)
        elapsed = time.perf_counter() - start
        mean_rate = float(np.mean(rate_from_coeffs(p, a, b)))
        sat = 100.0 * float(np.mean(p * leak <= sc.leakage_cap + TOL_FEAS))
        stats[name] = SchemeStats(
            mean_rate=mean_rate,
            time=elapsed,
            satisfaction=sat,
            rate_ratio=_ratio_pct(mean_rate, mean_conv),
            time_ratio=_ratio_pct(elapsed, time_conv),
        )

    worst_rate = min(stats, key=lambda k: stats[k].rate_ratio)
    slowest = max(stats, key=lambda k: stats[k].time)
    return EvalReport(
        mean_rate_nn=stats[worst_rate].mean_rate,
        mean_rate_conv=mean_conv,
        rate_ratio=stats[worst_rate].rate_ratio,
        time_nn=stats[slowest].time,
        time_conv=time_conv,
        time_ratio=stats[slowest].time_ratio,
        satisfaction=min(s.satisfaction for s in stats.values()),
        n_test=len(test),
        schemes=stats,
    )


def report_csv(er: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    rows = [(name, s.mean_rate, s.rate_ratio, s.time, s.time_ratio, s.satisfaction) for name, s in er.schemes.items()]
    rows.append(("summary", er.mean_rate_nn, er.rate_ratio, er.time_nn, er.time_ratio, er.satisfaction))
    for name, rate, rate_ratio, t, t_ratio, sat in rows:
        w.writerow(
            [
                name,
                f"{rate:.4f}",
                f"{er.mean_rate_conv:.4f}",
                f"{rate_ratio:.2f}",
                f"{t:.6f}",
                f"{er.time_conv:.6f}",
                f"{t_ratio:.2f}",
                f"{sat:.2f}",
            ]
        )
    return buf.getvalue()


def report_json(er: EvalReport) -> str:
    return json.dumps(er.to_dict(), indent=1, sort_keys=True) + "\n"


def report(er: EvalReport, fmt: str, path: Optional[str] = None) -> str:
    """Serialize ``er`` as ``csv`` or ``json``; write to ``path`` when given."""
    if fmt == "csv":
        text = report_csv(er)
    elif fmt == "json":
        text = report_json(er)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def load_report(path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text()))
