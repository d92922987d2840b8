"""The fixed 88-component car-attribute summary of a region."""

from dataclasses import dataclass
import math

import numpy as np

from carcensus import constants as C
from carcensus._io import DataError, fmt_float, read_csv, write_csv


def _slug(name):
    return name.replace(" ", "_")


FEATURE_NAMES = (
    "cars_per_image",
    "avg_price_usd",
    "avg_city_mpg",
    "avg_highway_mpg",
    "pct_hybrid",
    "pct_electric",
    *(f"pct_country_{_slug(c)}" for c in C.COUNTRIES),
    "pct_foreign",
    *(f"pct_body_{_slug(b)}" for b in C.BODY_TYPES),
    *(f"pct_year_{lo}_{hi}" for lo, hi in C.YEAR_RANGES),
    *(f"pct_make_{_slug(m)}" for m in C.MAKES),
)
N_FEATURES = len(FEATURE_NAMES)

COUNTRY_OFFSET = 6
FOREIGN_INDEX = 13
BODY_OFFSET = 14
YEAR_OFFSET = 25
MAKE_OFFSET = 30

GROUPS = {
    "country": slice(COUNTRY_OFFSET, COUNTRY_OFFSET + len(C.COUNTRIES)),
    "body": slice(BODY_OFFSET, BODY_OFFSET + len(C.BODY_TYPES)),
    "year": slice(YEAR_OFFSET, YEAR_OFFSET + len(C.YEAR_RANGES)),
    "make": slice(MAKE_OFFSET, MAKE_OFFSET + len(C.MAKES)),
}

_COUNTRY_IX = {c: i for i, c in enumerate(C.COUNTRIES)}
_BODY_IX = {b: i for i, b in enumerate(C.BODY_TYPES)}
_MAKE_IX = {m: i for i, m in enumerate(C.MAKES)}


def year_bucket(year_min):
    for i, (lo, hi) in enumerate(C.YEAR_RANGES):
        if lo <= year_min <= hi:
            return i
    raise ValueError(f"year {year_min} outside every year range")


@dataclass(frozen=True)
class RegionCensus:
    region_id: str
    image_count: int
    detections: tuple

    def __post_init__(self):
        if self.image_count < 1:
            raise ValueError("image_count must be at least 1")


def resolve_category(det):
    """Top-1 category id; equal probabilities resolve to the smallest id."""
    if not det.class_hypotheses:
        raise ValueError(f"detection in image {det.image_id!r} has no class hypotheses")
    best_p = max(p for _, p in det.class_hypotheses)
    return min(c for c, p in det.class_hypotheses if p == best_p)


def _category_weights(det, weighted):
    if not weighted:
        return [(resolve_category(det), 1.0)]
    if not det.class_hypotheses:
        raise ValueError(f"detection in image {det.image_id!r} has no class hypotheses")
    total = sum(p for _, p in det.class_hypotheses)
    if total <= 0:
        return [(resolve_category(det), 1.0)]
    return [(c, p / total) for c, p in det.class_hypotheses]


def aggregate_features(census, catalog, weighted=False):
    """Summarize a region's detections as the 88-component feature vector.

    ``catalog`` maps category id to :class:`VehicleCategory` (a list is also
    accepted). With ``weighted=True`` each detection spreads one unit of
    count over its class hypotheses in proportion to their probabilities
    instead of counting only the top-1 class.

    MPG means skip cars without MPG values; a region where no car reports
    MPG gets NaN there.
    """
    if not isinstance(catalog, dict):
        catalog = {c.category_id: c for c in catalog}
    if not census.detections:
        raise ValueError(f"region {census.region_id!r} has no detections")

    x = np.zeros(N_FEATURES)
    total = 0.0
    price = 0.0
    city = [0.0, 0.0]
    hwy = [0.0, 0.0]
    hybrid = electric = 0.0
    for det in census.detections:
        for cid, w in _category_weights(det, weighted):
            cat = catalog.get(cid)
            if cat is None:
                raise ValueError(f"category {cid!r} is missing from the catalog")
            total += w
            price += w * cat.price_usd
            if cat.city_mpg is not None:
                city[0] += w * cat.city_mpg
                city[1] += w
            if cat.highway_mpg is not None:
                hwy[0] += w * cat.highway_mpg
                hwy[1] += w
            hybrid += w * cat.is_hybrid
            electric += w * cat.is_electric
            x[COUNTRY_OFFSET + _COUNTRY_IX[cat.country]] += w
            x[BODY_OFFSET + _BODY_IX[cat.body_type]] += w
            x[YEAR_OFFSET + year_bucket(cat.year_min)] += w
            x[MAKE_OFFSET + _MAKE_IX[cat.make]] += w

    x[0] = len(census.detections) / census.image_count
    x[1] = price / total
    x[2] = city[0] / city[1] if city[1] > 0 else math.nan
    x[3] = hwy[0] / hwy[1] if hwy[1] > 0 else math.nan
    x[4] = 100.0 * hybrid / total
    x[5] = 100.0 * electric / total
    x[COUNTRY_OFFSET:] *= 100.0 / total
    x[FOREIGN_INDEX] = 100.0 - x[COUNTRY_OFFSET + _COUNTRY_IX[C.DOMESTIC_COUNTRY]]
    return x


def write_features(path, rows):
    """``rows`` is a sequence of ``(region_id, vector)``."""
    write_csv(path, ("region_id", *FEATURE_NAMES),
              [(rid, *(fmt_float(v) for v in vec)) for rid, vec in rows])


def read_features(path):
    """Return ``(region_ids, X)`` from a features.csv file."""
    ids, rows = [], []
    for lineno, row in read_csv(path, ("region_id", *FEATURE_NAMES)):
        ids.append(row["region_id"])
        try:
            rows.append([float(row[n]) for n in FEATURE_NAMES])
        except ValueError as exc:
            raise DataError(str(exc), path, lineno) from None
    return ids, np.array(rows, dtype=float).reshape(len(rows), N_FEATURES)
