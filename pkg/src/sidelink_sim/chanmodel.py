"""Distance -> SNR in two modes: an analytic log-distance path-loss model and a
replay mode that resamples embedded laboratory measurement tables, plus AWGN
injection for the bit-true chain.

Replay draws come from a truncated Gaussian whose location parameter is
adjusted so that the truncated mean matches the tabulated mean exactly; naive
truncation of an asymmetric [min, max] window would bias the sample mean.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from importlib import resources
from typing import Optional

import numpy as np
from scipy import optimize, stats

from sidelink_sim.linkadapt import LinkType
from sidelink_sim.waveform import SampleBuffer

N_MEASUREMENTS = 1000  # samples behind every tabulated row
CI_FACTOR = 1.96
CI_TOLERANCE_DB = 0.0002

DOWNLINK_CELL_EDGE_CM = 256.0
DEFAULT_RELAY_POSITION_CM = 200.0

EMBEDDED_TABLES = {
    ("sidelink", 30): "sidelink_30db.csv",
    ("sidelink", 40): "sidelink_40db.csv",
    ("downlink", 55): "downlink_55db.csv",
}


class OutOfCoverage(Exception):
    """Raised when a replay query falls outside the measured range."""


@dataclass(frozen=True)
class TableRow:
    distance_cm: float
    mean_db: float
    std_db: float
    ci95_db: float
    max_db: float
    min_db: float


@dataclass(frozen=True)
class MeasurementTable:
    link: LinkType
    tx_gain_db: float
    rows: tuple

    def __post_init__(self):
        if len(self.rows) == 0:
            raise ValueError("measurement table has no rows")
        dists = [r.distance_cm for r in self.rows]
        if sorted(set(dists)) != dists:
            raise ValueError("distances must be sorted and unique")

    def validate(self) -> list[str]:
        """CI-convention and bound-ordering check; returns per-row failures."""
        problems = []
        for r in self.rows:
            expected_ci = CI_FACTOR * r.std_db / np.sqrt(N_MEASUREMENTS)
            if abs(r.ci95_db - expected_ci) > CI_TOLERANCE_DB:
                problems.append(
                    f"row {r.distance_cm:g} cm: ci95 {r.ci95_db} vs 1.96*std/sqrt(1000) = {expected_ci:.6f}"
                )
            if not r.min_db <= r.mean_db <= r.max_db:
                problems.append(f"row {r.distance_cm:g} cm: mean outside [min, max]")
        return problems

    @property
    def distance_range(self) -> tuple[float, float]:
        return self.rows[0].distance_cm, self.rows[-1].distance_cm

    def covers(self, distance_cm: float) -> bool:
        lo, hi = self.distance_range
        return lo <= distance_cm <= hi

    def interpolate(self, distance_cm: float) -> TableRow:
        if not self.covers(distance_cm):
            raise OutOfCoverage(
                f"{self.link.value} has no measurement at {distance_cm:g} cm"
            )
        d = np.array([r.distance_cm for r in self.rows])
        cols = {
            name: float(np.interp(distance_cm, d, np.array([getattr(r, name) for r in self.rows])))
            for name in ("mean_db", "std_db", "ci95_db", "max_db", "min_db")
        }
        return TableRow(distance_cm=distance_cm, **cols)

    @classmethod
    def from_csv(cls, path_or_file, link: LinkType, tx_gain_db: float) -> "MeasurementTable":
        if hasattr(path_or_file, "read"):
            reader = csv.DictReader(path_or_file)
            rows = list(reader)
        else:
            with open(path_or_file, newline="") as f:
                rows = list(csv.DictReader(f))
        if not rows:
            raise ValueError("empty measurement table file")
        parsed = tuple(
            TableRow(
                distance_cm=float(r["distance_cm"]),
                mean_db=float(r["mean_db"]),
                std_db=float(r["std_db"]),
                ci95_db=float(r["ci95_db"]),
                max_db=float(r["max_db"]),
                min_db=float(r["min_db"]),
            )
            for r in rows
        )
        return cls(link=link, tx_gain_db=tx_gain_db, rows=parsed)


def load_embedded_table(link: LinkType, tx_gain_db: int) -> MeasurementTable:
    name = EMBEDDED_TABLES[(link.value, tx_gain_db)]
    text = resources.files("sidelink_sim.data").joinpath(name).read_text()
    return MeasurementTable.from_csv(io.StringIO(text), link, tx_gain_db)


@dataclass(frozen=True)
class PathlossParams:
    pl0_db: float
    exponent: float
    ref_distance_cm: float
    relay_position_cm: float = DEFAULT_RELAY_POSITION_CM
    noise_floor_db: float = 0.0
    gain_to_power_offset_db: float = 0.0

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("path loss exponent must be positive")
        if self.ref_distance_cm <= 0:
            raise ValueError("reference distance must be positive")


# fitted defaults: downlink against the 55 dB table, sidelink against the 40 dB
# table with the relay at 200 cm (fit_params recovers these from the CSVs)
def default_params(link: LinkType) -> PathlossParams:
    if link is LinkType.DOWNLINK:
        return fit_params(
            load_embedded_table(link, 55),
            PathlossParams(pl0_db=0.0, exponent=2.0, ref_distance_cm=20.0),
        )
    return fit_params(
        load_embedded_table(link, 40),
        PathlossParams(pl0_db=0.0, exponent=2.0, ref_distance_cm=10.0),
    )


def effective_distance(link: LinkType, remote_pos_cm: float, params: PathlossParams) -> float:
    """Downlink: distance from the eNodeB; sidelink: distance from the relay."""
    if remote_pos_cm < 0:
        raise ValueError("position must be non-negative")
    if link is LinkType.DOWNLINK:
        d = remote_pos_cm
    else:
        d = abs(remote_pos_cm - params.relay_position_cm)
    return max(d, params.ref_distance_cm)


def model_snr_db(
    link: LinkType, tx_gain_db: float, remote_pos_cm: float, params: PathlossParams
) -> float:
    """Log-distance surrogate for the measured SNR curves; linear in tx gain."""
    d = effective_distance(link, remote_pos_cm, params)
    pl = params.pl0_db + 10 * params.exponent * np.log10(d / params.ref_distance_cm)
    return float(tx_gain_db + params.gain_to_power_offset_db - pl - params.noise_floor_db)


def fit_params(table: MeasurementTable, base: PathlossParams) -> PathlossParams:
    """Least-squares fit of (pl0, exponent) to the table means.

    Geometry (reference distance, relay position) is taken from `base`; the fit
    absorbs the gain-to-power offset and noise floor into pl0.
    """
    if len(table.rows) < 3:
        raise ValueError("need at least 3 rows to fit")
    d = np.array(
        [effective_distance(table.link, r.distance_cm, base) for r in table.rows]
    )
    if np.allclose(d, d[0]):
        raise ValueError("degenerate table: all effective distances equal")
    x = np.log10(d / base.ref_distance_cm)
    y = np.array([r.mean_db for r in table.rows])
    # snr = (gain - pl0) - 10*exponent*x   (noise floor / offset folded into pl0)
    A = np.column_stack([np.ones_like(x), -10 * x])
    (intercept, exponent), *_ = np.linalg.lstsq(A, y, rcond=None)
    pl0 = table.tx_gain_db + base.gain_to_power_offset_db - base.noise_floor_db - intercept
    return replace(base, pl0_db=float(pl0), exponent=float(exponent))


def fit_rms_error(table: MeasurementTable, params: PathlossParams) -> float:
    resid = np.array(
        [
            model_snr_db(table.link, table.tx_gain_db, r.distance_cm, params) - r.mean_db
            for r in table.rows
        ]
    )
    return float(np.sqrt(np.mean(resid**2)))


def _debias_location(mean: float, std: float, lo: float, hi: float) -> float:
    """Location mu such that a Gaussian(mu, std) truncated to [lo, hi] has the
    requested mean."""
    if std <= 0:
        return mean

    def truncated_mean(mu):
        a, b = (lo - mu) / std, (hi - mu) / std
        return stats.truncnorm.mean(a, b, loc=mu, scale=std) - mean

    span = hi - lo
    return float(optimize.brentq(truncated_mean, lo - 5 * span, hi + 5 * span, xtol=1e-9))


def replay_sample(
    table: MeasurementTable,
    remote_pos_cm: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
):
    """Draw SNR sample(s) at a position by resampling the table statistics.

    Raises OutOfCoverage outside the measured distance range (this is what
    models the downlink cell boundary).
    """
    row = table.interpolate(remote_pos_cm)
    if row.std_db <= 0 or row.max_db <= row.min_db:
        draws = np.full(size or 1, row.mean_db)
        return draws if size is not None else float(draws[0])
    mu = _debias_location(row.mean_db, row.std_db, row.min_db, row.max_db)
    a = (row.min_db - mu) / row.std_db
    b = (row.max_db - mu) / row.std_db
    draws = stats.truncnorm.rvs(
        a, b, loc=mu, scale=row.std_db, size=size or 1, random_state=rng
    )
    return draws if size is not None else float(draws[0])


def apply_awgn(
    samples: SampleBuffer, snr_db: float, signal_power: float, rng: np.random.Generator
) -> SampleBuffer:
    """Add circular complex Gaussian noise at variance signal_power / 10^(snr/10)."""
    if signal_power <= 0:
        raise ValueError("signal power must be positive")
    var = signal_power / 10 ** (snr_db / 10)
    n = samples.iq.size
    noise = rng.normal(scale=np.sqrt(var / 2), size=(n, 2))
    iq = samples.iq + noise[:, 0] + 1j * noise[:, 1]
    return SampleBuffer(iq, samples.sample_rate)
