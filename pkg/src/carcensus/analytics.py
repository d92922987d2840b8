"""Evaluation statistics and the sedan/pickup voting heuristic."""

from dataclasses import asdict, dataclass
import math

import numpy as np

from carcensus import constants as C
from carcensus._io import atomic_write_text, dumps_json


# -- Student t tail via the regularized incomplete beta ---------------------

def _betacf(a, b, x, max_iter=500, eps=1e-16):
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_reg(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    lnfront = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
               + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lnfront) * _betacf(a, b, x) / a
    return 1.0 - math.exp(lnfront) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t, df):
    if math.isinf(t):
        return 0.0
    return betainc_reg(0.5 * df, 0.5, df / (df + t * t))


# -- statistics ------------------------------------------------------------

def pearson(xs, ys):
    """Sample correlation and its two-sided t-test p-value (n - 2 dof)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D sequences of equal length")
    n = x.size
    if n < 3:
        raise ValueError("pearson needs at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation is undefined for a constant input")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, t_two_sided_p(t, df)


def mae(predicted, actual):
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {a.shape}")
    if p.size == 0:
        raise ValueError("mae of empty input")
    return float(np.mean(np.abs(p - a)))


def precinct_accuracy(predicted_share, actual_share):
    """Fraction of regions whose Democrat/Republican call (share > 0.5) matches."""
    p = np.asarray(predicted_share, dtype=float)
    a = np.asarray(actual_share, dtype=float)
    if p.shape != a.shape:
        raise ValueError("length mismatch")
    if p.size == 0:
        raise ValueError("precinct accuracy of empty input")
    if np.any((p < 0) | (p > 1)) or np.any((a < 0) | (a > 1)):
        raise ValueError("shares must lie in [0, 1]")
    return float(np.mean((p > 0.5) == (a > 0.5)))


@dataclass
class EvalReport:
    target: str
    n: int
    pearson_r: float
    p_value: float
    mae: float
    accuracy: float | None = None

    def to_json(self):
        return asdict(self)


def evaluate(target, predicted, actual, with_accuracy=False):
    r, p = pearson(predicted, actual)
    acc = precinct_accuracy(predicted, actual) if with_accuracy else None
    return EvalReport(target, len(predicted), r, p, mae(predicted, actual), acc)


def write_report(path, reports, config):
    doc = {"config": dict(config), "reports": [r.to_json() for r in reports]}
    atomic_write_text(path, dumps_json(doc))


# -- sedans vs pickups -----------------------------------------------------

@dataclass(frozen=True)
class CityTally:
    city_id: str
    sedans: float
    pickups: float
    obama_votes: int
    mccain_votes: int

    def __post_init__(self):
        if min(self.sedans, self.pickups, self.obama_votes, self.mccain_votes) < 0:
            raise ValueError("tally counts must be nonnegative")


class UndefinedConditional(ValueError):
    """A conditioning set is empty. Defined sides are kept as attributes."""

    def __init__(self, message, p_dem_given_sedans=None, p_rep_given_trucks=None):
        super().__init__(message)
        self.p_dem_given_sedans = p_dem_given_sedans
        self.p_rep_given_trucks = p_rep_given_trucks


@dataclass(frozen=True)
class HeuristicResult:
    p_dem_given_sedans: float
    p_rep_given_trucks: float
    counted: int
    excluded: int
    n_sedan_cities: int
    n_pickup_cities: int
    n_dem_sedan: int
    n_rep_pickup: int


def tally_cities(census_by_city, catalog):
    """Count sedans and pickups (all truck cabs) per city.

    ``census_by_city`` maps ``city_id -> (category_ids, obama, mccain)``.
    """
    if not isinstance(catalog, dict):
        catalog = {c.category_id: c for c in catalog}
    out = []
    for city_id, (cids, obama, mccain) in census_by_city.items():
        bodies = [catalog[c].body_type for c in cids]
        out.append(CityTally(
            city_id,
            sum(b == "sedan" for b in bodies),
            sum(b in C.TRUCK_BODY_TYPES for b in bodies),
            obama, mccain,
        ))
    return out


def sedan_truck_conditionals(tallies):
    """Estimate P(Democrat | more sedans) and P(Republican | more pickups).

    Cities with as many sedans as pickups, or a tied vote, are excluded.
    Joint and marginal probabilities are frequencies over the counted cities.
    """
    counted = [t for t in tallies if t.sedans != t.pickups and t.obama_votes != t.mccain_votes]
    n_city = len(counted)
    n_s = sum(t.sedans > t.pickups for t in counted)
    n_p = sum(t.pickups > t.sedans for t in counted)
    n_ds = sum(t.sedans > t.pickups and t.obama_votes > t.mccain_votes for t in counted)
    n_rp = sum(t.pickups > t.sedans and t.mccain_votes > t.obama_votes for t in counted)
    p_dem = (n_ds / n_city) / (n_s / n_city) if n_s else None
    p_rep = (n_rp / n_city) / (n_p / n_city) if n_p else None
    if p_dem is None or p_rep is None:
        empty = [name for name, v in (("more-sedans", p_dem), ("more-pickups", p_rep)) if v is None]
        raise UndefinedConditional(
            f"no counted city in the {' and '.join(empty)} conditioning set", p_dem, p_rep
        )
    return HeuristicResult(p_dem, p_rep, n_city, len(tallies) - n_city, n_s, n_p, n_ds, n_rp)
