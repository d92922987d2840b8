"""Vehicle catalog, region ground truth, county split and eligibility."""

from dataclasses import asdict, dataclass
import json
import math

from carcensus import constants as C
from carcensus._io import DataError, atomic_write_text, read_csv, write_csv

CATALOG_HEADER = (
    "category_id", "make", "model", "body_type", "year_min", "year_max", "country",
    "city_mpg", "highway_mpg", "price_usd", "is_hybrid", "is_electric",
)
REGIONS_HEADER = ("region_id", "kind", "city", "state", "county", "population")
ACS_HEADER = ("region_id", C.ACS_INCOME, *C.ACS_RACE, *C.ACS_EDU)
VOTES_HEADER = ("region_id", "obama_votes", "mccain_votes")
REGION_KINDS = ("city", "zip", "precinct")
SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class VehicleCategory:
    category_id: str
    make: str
    model: str
    body_type: str
    year_min: int
    year_max: int
    country: str
    city_mpg: float | None
    highway_mpg: float | None
    price_usd: float
    is_hybrid: bool = False
    is_electric: bool = False

    def __post_init__(self):
        if self.make not in C.MAKES:
            raise ValueError(f"unknown make {self.make!r}")
        if self.body_type not in C.BODY_TYPES:
            raise ValueError(f"unknown body type {self.body_type!r}")
        if self.country not in C.COUNTRIES:
            raise ValueError(f"unknown country {self.country!r}")
        if not C.YEAR_MIN <= self.year_min <= self.year_max <= C.YEAR_MAX:
            raise ValueError(
                f"year range {self.year_min}-{self.year_max} outside {C.YEAR_MIN}-{C.YEAR_MAX}"
            )
        if not self.price_usd > 0:
            raise ValueError("price_usd must be positive")
        for name in ("city_mpg", "highway_mpg"):
            v = getattr(self, name)
            if v is None:
                if not self.is_electric:
                    raise ValueError(f"{name} may only be empty for electric cars")
            elif not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.is_electric and self.is_hybrid:
            raise ValueError("a category cannot be both electric and hybrid")


@dataclass(frozen=True)
class Region:
    region_id: str
    kind: str
    city: str
    state: str
    county: str
    population: int
    income_median: float | None = None
    race_shares: tuple | None = None
    edu_shares: tuple | None = None
    obama_votes: int | None = None
    mccain_votes: int | None = None

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if not self.county.strip():
            raise ValueError("county must be nonempty")
        if self.population < 0:
            raise ValueError("population must be nonnegative")
        if self.income_median is not None and self.income_median < 0:
            raise ValueError("income must be nonnegative")
        for name, k in (("race_shares", len(C.RACE_CLASSES)), ("edu_shares", len(C.EDU_CLASSES))):
            shares = getattr(self, name)
            if shares is None:
                continue
            if len(shares) != k:
                raise ValueError(f"{name} needs {k} components")
            if min(shares) < 0 or abs(math.fsum(shares) - 1.0) > SIMPLEX_TOL:
                raise ValueError(f"{name} is not on the simplex: {shares}")
        for name in ("obama_votes", "mccain_votes"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def vote_share(self):
        """Obama fraction of the two-candidate vote, or None when undefined."""
        if self.obama_votes is None or self.mccain_votes is None:
            return None
        total = self.obama_votes + self.mccain_votes
        if total == 0:
            return None
        return self.obama_votes / total

    @property
    def vote_share_undefined(self):
        return self.obama_votes is not None and self.vote_share is None


@dataclass(frozen=True)
class SplitAssignment:
    region_id: str
    side: str


def _parse_bool(text):
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _parse_int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _field(path, lineno, row, name, conv, optional=False):
    text = row[name]
    if text == "":
        if optional:
            return None
        raise DataError("missing value", path, lineno, name)
    try:
        return conv(text)
    except ValueError as exc:
        raise DataError(str(exc), path, lineno, name) from None


def parse_catalog(path):
    """Read ``catalog.csv`` into a list of :class:`VehicleCategory` in file order."""
    out = []
    seen = {}
    for lineno, row in read_csv(path, CATALOG_HEADER):
        cid = row["category_id"]
        if not cid:
            raise DataError("empty category_id", path, lineno, "category_id")
        if cid in seen:
            raise DataError(
                f"duplicate category_id {cid!r} (first seen on line {seen[cid]})",
                path, lineno, "category_id",
            )
        seen[cid] = lineno
        for name, allowed in (("make", C.MAKES), ("body_type", C.BODY_TYPES), ("country", C.COUNTRIES)):
            if row[name] not in allowed:
                raise DataError(f"unknown {name} {row[name]!r}", path, lineno, name)
        kw = dict(
            category_id=cid,
            make=row["make"],
            model=row["model"],
            body_type=row["body_type"],
            year_min=_field(path, lineno, row, "year_min", _parse_int),
            year_max=_field(path, lineno, row, "year_max", _parse_int),
            country=row["country"],
            city_mpg=_field(path, lineno, row, "city_mpg", _parse_float, optional=True),
            highway_mpg=_field(path, lineno, row, "highway_mpg", _parse_float, optional=True),
            price_usd=_field(path, lineno, row, "price_usd", _parse_float),
            is_hybrid=_field(path, lineno, row, "is_hybrid", _parse_bool),
            is_electric=_field(path, lineno, row, "is_electric", _parse_bool),
        )
        try:
            out.append(VehicleCategory(**kw))
        except ValueError as exc:
            raise DataError(str(exc), path, lineno) from None
    return out


def write_catalog(path, catalog):
    def num(v):
        return "" if v is None else repr(v)

    rows = [
        (c.category_id, c.make, c.model, c.body_type, c.year_min, c.year_max, c.country,
         num(c.city_mpg), num(c.highway_mpg), repr(c.price_usd),
         str(c.is_hybrid).lower(), str(c.is_electric).lower())
        for c in catalog
    ]
    write_csv(path, CATALOG_HEADER, rows)


def catalog_index(catalog):
    return {c.category_id: c for c in catalog}


def _shares_from_counts(counts, total):
    if total <= 0:
        return None
    return tuple(c / total for c in counts)


def parse_regions(regions_path, acs_path=None, votes_path=None):
    """Join region definitions with ACS ground truth and vote counts.

    ACS person counts are turned into shares at ingest. Race shares are
    taken over the region population, with "other" as the remainder; the
    education shares are normalized over the five education counts. Empty
    cells leave the corresponding field as None.
    """
    base = {}
    order = []
    for lineno, row in read_csv(regions_path, REGIONS_HEADER):
        rid = row["region_id"]
        if not rid:
            raise DataError("empty region_id", regions_path, lineno, "region_id")
        if rid in base:
            raise DataError(f"duplicate region_id {rid!r}", regions_path, lineno, "region_id")
        if row["kind"] not in REGION_KINDS:
            raise DataError(f"unknown kind {row['kind']!r}", regions_path, lineno, "kind")
        if not row["county"]:
            raise DataError("empty county", regions_path, lineno, "county")
        pop = _field(regions_path, lineno, row, "population", _parse_int)
        if pop < 0:
            raise DataError("negative population", regions_path, lineno, "population")
        base[rid] = dict(
            region_id=rid, kind=row["kind"], city=row["city"], state=row["state"],
            county=row["county"], population=pop,
        )
        order.append(rid)

    if acs_path is not None:
        for lineno, row in read_csv(acs_path, ACS_HEADER):
            rec = _lookup(base, row["region_id"], acs_path, lineno)
            income = _field(acs_path, lineno, row, C.ACS_INCOME, _parse_float, optional=True)
            if income is not None and income < 0:
                raise DataError(f"negative income {income}", acs_path, lineno, C.ACS_INCOME)
            rec["income_median"] = income
            race = [_count(acs_path, lineno, row, k) for k in C.ACS_RACE]
            if all(v is not None for v in race):
                pop = rec["population"]
                if sum(race) > pop:
                    raise DataError(
                        f"race counts {sum(race)} exceed population {pop}; shares leave the simplex",
                        acs_path, lineno,
                    )
                rec["race_shares"] = _shares_from_counts([*race, pop - sum(race)], pop)
            elif any(v is not None for v in race):
                raise DataError("race counts must be all present or all empty", acs_path, lineno)
            edu = [_count(acs_path, lineno, row, k) for k in C.ACS_EDU]
            if all(v is not None for v in edu):
                rec["edu_shares"] = _shares_from_counts(edu, sum(edu))
            elif any(v is not None for v in edu):
                raise DataError("education counts must be all present or all empty", acs_path, lineno)

    if votes_path is not None:
        for lineno, row in read_csv(votes_path, VOTES_HEADER):
            rec = _lookup(base, row["region_id"], votes_path, lineno)
            for name in ("obama_votes", "mccain_votes"):
                v = _field(votes_path, lineno, row, name, _parse_int)
                if v < 0:
                    raise DataError(f"negative vote count {v}", votes_path, lineno, name)
                rec[name] = v

    regions = []
    for rid in order:
        try:
            regions.append(Region(**base[rid]))
        except ValueError as exc:
            raise DataError(f"region {rid!r}: {exc}", regions_path) from None
    return regions


def _lookup(base, rid, path, lineno):
    if rid not in base:
        raise DataError(f"unknown region_id {rid!r}", path, lineno, "region_id")
    return base[rid]


def _count(path, lineno, row, name):
    v = _field(path, lineno, row, name, _parse_float, optional=True)
    if v is not None and v < 0:
        raise DataError(f"negative count {v}", path, lineno, name)
    return v


def dump_regions_json(regions):
    """Serialize regions to JSON text; :func:`load_regions_json` inverts it exactly."""
    rows = []
    for r in regions:
        d = asdict(r)
        for k in ("race_shares", "edu_shares"):
            if d[k] is not None:
                d[k] = list(d[k])
        rows.append(d)
    return json.dumps(rows, indent=1) + "\n"


def load_regions_json(text):
    out = []
    for d in json.loads(text):
        for k in ("race_shares", "edu_shares"):
            if d.get(k) is not None:
                d[k] = tuple(d[k])
        out.append(Region(**d))
    return out


def write_regions_json(path, regions):
    atomic_write_text(path, dump_regions_json(regions))


def county_side(county):
    """'train' for counties starting with A-C, 'test' for D-Z."""
    name = county.strip()
    if not name:
        raise ValueError("empty county name")
    first = name[0]
    if not (first.isascii() and first.isalpha()):
        raise ValueError(f"county {county!r} does not start with an ASCII letter")
    return "train" if first.upper() in C.TRAIN_INITIALS else "test"


def split_by_county(regions):
    return [SplitAssignment(r.region_id, county_side(r.county)) for r in regions]


def load_split_override(path):
    """Read an explicit ``region_id,side`` file used instead of the county rule."""
    out = {}
    for lineno, row in read_csv(path, ("region_id", "side")):
        if row["side"] not in ("train", "test"):
            raise DataError(f"bad side {row['side']!r}", path, lineno, "side")
        out[row["region_id"]] = row["side"]
    return out


def is_eligible(region, detected_car_count, min_population=C.MIN_POPULATION, min_cars=C.MIN_CARS):
    return region.population >= min_population and detected_car_count >= min_cars
