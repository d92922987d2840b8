"""Synthetic catalogs, regions and detections with known ground truth.

Regions carry a 3-factor latent (affluence, rurality, import preference)
that tilts which car categories are seen there. Detections are simulated
per image, thresholded and aggregated through the real feature path, and
the region targets are the true models applied to the standardized
realized features plus Gaussian noise. All randomness comes from
:class:`carcensus.rng.Lcg64`, so a seed fixes every output byte.
"""

from dataclasses import asdict, dataclass, field
import json
import math
import os

import numpy as np

from carcensus import constants as C
from carcensus._io import atomic_write_text, dumps_json, write_csv
from carcensus.catalog import (
    ACS_HEADER, REGIONS_HEADER, VOTES_HEADER, VehicleCategory, write_catalog,
)
from carcensus.detection import BoundingBox, Detection, detection_to_json, threshold
from carcensus.features import (
    BODY_OFFSET, COUNTRY_OFFSET, FEATURE_NAMES, FOREIGN_INDEX, MAKE_OFFSET, N_FEATURES, YEAR_OFFSET,
    RegionCensus, aggregate_features,
)
from carcensus.rng import Lcg64

DEFAULT_COUNTIES = (
    "Ada", "Adams", "Alameda", "Allen",
    "Baldwin", "Benton", "Bexar", "Boone",
    "Cabarrus", "Clark", "Contra Costa", "Cook",
    "Dakota", "Erie", "Fulton", "Greene", "Harris", "Iroquois", "Jefferson", "King",
    "Lake", "Maricopa", "Nassau", "Orange", "Pima", "Queens", "Riverside", "Suffolk",
    "Travis", "Union", "Ventura", "Wayne", "Yolo", "Zapata",
)

MAKE_COUNTRY = {
    "Acura": "Japan", "AM General": "USA", "Aston Martin": "England", "Audi": "Germany",
    "Bentley": "England", "BMW": "Germany", "Buick": "USA", "Cadillac": "USA",
    "Chevrolet": "USA", "Chrysler": "USA", "Daewoo": "South Korea", "Dodge": "USA",
    "Eagle": "USA", "Ferrari": "Italy", "Fiat": "Italy", "Fisker": "USA", "Ford": "USA",
    "Geo": "USA", "GMC": "USA", "Honda": "Japan", "Hummer": "USA", "Hyundai": "South Korea",
    "Infiniti": "Japan", "Isuzu": "Japan", "Jaguar": "England", "Jeep": "USA", "Kia": "South Korea",
    "Lamborghini": "Italy", "Land Rover": "England", "Lexus": "Japan", "Lincoln": "USA",
    "Lotus": "England", "Maserati": "Italy", "Maybach": "Germany", "Mazda": "Japan",
    "McLaren": "England", "Mercedes-Benz": "Germany", "Mercury": "USA", "Mini": "England",
    "Mitsubishi": "Japan", "Nissan": "Japan", "Oldsmobile": "USA", "Panoz": "USA",
    "Plymouth": "USA", "Pontiac": "USA", "Porsche": "Germany", "Ram": "USA",
    "Rolls-Royce": "England", "Saab": "Sweden", "Saturn": "USA", "Scion": "Japan",
    "Smart": "Germany", "Subaru": "Japan", "Suzuki": "Japan", "Tesla": "USA",
    "Toyota": "Japan", "Volkswagen": "Germany", "Volvo": "Sweden",
}
LUXURY = {"Aston Martin", "Bentley", "Ferrari", "Lamborghini", "Maybach", "McLaren",
          "Rolls-Royce", "Maserati", "Porsche", "Lotus", "Panoz", "Fisker", "Tesla"}
PREMIUM = {"Acura", "Audi", "BMW", "Cadillac", "Infiniti", "Jaguar", "Land Rover", "Lexus",
           "Lincoln", "Mercedes-Benz", "Volvo", "Saab", "Hummer", "AM General"}
ELECTRIC_MAKES = {"Tesla", "Fisker"}
BODY_MPG = {
    "convertible": 21, "coupe": 23, "hatchback": 29, "minivan": 19, "sedan": 26, "SUV": 18,
    "truck-regular": 17, "truck-extended": 16, "truck-crew": 15, "van": 15, "wagon": 24,
}
RURAL_BODY = {"truck-regular": 1.0, "truck-extended": 1.2, "truck-crew": 1.0, "SUV": 0.6,
              "van": 0.3, "minivan": 0.2, "sedan": -0.8, "hatchback": -0.7, "coupe": -0.3,
              "convertible": -0.2, "wagon": -0.2}

TARGET_NAMES = ("income", "vote_share", "race", "education")


@dataclass
class SynthSpec:
    seed: int = 0
    n_regions: int = 300
    counties: tuple = DEFAULT_COUNTIES
    noise_sigma: float = 0.05  # as a fraction of each target's noiseless std
    cars_per_region: tuple = (150, 400)
    images_per_region: tuple = (40, 120)
    n_categories: int = 240
    top_k: int = 5
    detector_recall: float = 0.92
    false_positives_per_image: float = 0.8
    low_population_rate: float = 0.03
    true_ridge_weights: dict = field(default_factory=dict)  # target -> 88 weights
    true_softmax_weights: dict = field(default_factory=dict)  # target -> K x 88

    def __post_init__(self):
        self.counties = tuple(self.counties)
        self.cars_per_region = tuple(self.cars_per_region)
        self.images_per_region = tuple(self.images_per_region)
        if self.n_regions < 10:
            raise ValueError("n_regions must be at least 10")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not self.counties:
            raise ValueError("at least one county is required")
        if not 1 <= self.top_k <= C.TOP_K:
            raise ValueError(f"top_k must lie in [1, {C.TOP_K}]")
        lo, hi = self.cars_per_region
        if not 1 <= lo <= hi:
            raise ValueError("cars_per_region must be an increasing positive range")
        lo, hi = self.images_per_region
        if not 1 <= lo <= hi:
            raise ValueError("images_per_region must be an increasing positive range")
        for name, w in self.true_ridge_weights.items():
            if len(w) != N_FEATURES:
                raise ValueError(f"true ridge weights for {name!r} need {N_FEATURES} entries")
        for name, W in self.true_softmax_weights.items():
            if any(len(row) != N_FEATURES for row in W):
                raise ValueError(f"true softmax weights for {name!r} need {N_FEATURES} columns")

    @property
    def covers_both_splits(self):
        initials = {c.strip()[0].upper() for c in self.counties}
        return bool(initials & C.TRAIN_INITIALS) and bool(initials - C.TRAIN_INITIALS)

    @classmethod
    def from_json(cls, d):
        return cls(**d)

    def to_json(self):
        d = asdict(self)
        for k in ("counties", "cars_per_region", "images_per_region"):
            d[k] = list(d[k])
        return d


@dataclass
class SynthDataset:
    spec: SynthSpec
    catalog: list
    regions: list  # dicts with region fields plus ground truth counts
    images: list  # (image_id, region_id)
    detections: list
    truths: list  # (image_id, BoundingBox)
    features: dict  # region_id -> 88-vector (post-threshold)
    targets: dict  # target name -> {region_id: value or share tuple}
    true_weights: dict


def _make_catalog(rng, n):
    cats = []
    for i in range(n):
        make = C.MAKES[i % len(C.MAKES)]
        if make == "Ram":
            body = C.TRUCK_BODY_TYPES[rng.randint(0, 2)]
        elif make in ("AM General", "Hummer", "Land Rover", "Jeep"):
            body = "SUV"
        else:
            body = C.BODY_TYPES[rng.randint(0, len(C.BODY_TYPES) - 1)]
        year_min = rng.randint(C.YEAR_MIN, C.YEAR_MAX)
        year_max = min(C.YEAR_MAX, year_min + rng.randint(0, 4))
        base = 120_000 if make in LUXURY else 42_000 if make in PREMIUM else 24_000
        price = round(base * math.exp(rng.gauss(0.0, 0.25)) * (0.6 + 0.02 * (year_min - 1990)), 2)
        electric = make in ELECTRIC_MAKES
        hybrid = (not electric) and rng.random() < 0.05
        if electric:
            city = hwy = None
        else:
            mpg = BODY_MPG[body] * math.exp(rng.gauss(0.0, 0.1)) * (1.6 if hybrid else 1.0)
            city = round(mpg, 1)
            hwy = round(mpg * 1.3, 1)
        cats.append(VehicleCategory(
            category_id=f"c{i:04d}", make=make, model=f"{make} model {i}", body_type=body,
            year_min=year_min, year_max=year_max, country=MAKE_COUNTRY[make],
            city_mpg=city, highway_mpg=hwy, price_usd=price,
            is_hybrid=hybrid, is_electric=electric,
        ))
    return cats


def _category_loadings(rng, catalog):
    logp = np.log([c.price_usd for c in catalog])
    afflu = (logp - logp.mean()) / logp.std()
    rural = np.array([RURAL_BODY[c.body_type] for c in catalog])
    imports = np.array([1.0 if c.country in ("Japan", "South Korea") else
                        0.4 if c.country != C.DOMESTIC_COUNTRY else -0.6 for c in catalog])
    noise = np.array([[rng.gauss(0, 0.2) for _ in range(3)] for _ in catalog])
    pop = np.array([math.exp(rng.gauss(0.0, 0.7)) for _ in catalog])
    return np.column_stack([afflu, rural, imports]) + noise, pop


def _default_weights(rng):
    """Default true models: weights on the aggregate (non-make) features."""
    def randvec(scale):
        w = np.zeros(N_FEATURES)
        for j in range(MAKE_OFFSET):
            w[j] = rng.gauss(0.0, scale)
        return w

    trucks = [BODY_OFFSET + C.BODY_TYPES.index(b) for b in C.TRUCK_BODY_TYPES]
    sedan = BODY_OFFSET + C.BODY_TYPES.index("sedan")
    income = randvec(0.2)
    income[1] += 1.0
    income[YEAR_OFFSET + 4] += 0.4
    income[FOREIGN_INDEX] += 0.3
    income[0] -= 0.3
    for t in trucks:
        income[t] -= 0.2
    vote = randvec(0.3)
    vote[sedan] += 1.0
    vote[FOREIGN_INDEX] += 0.5
    for t in trucks:
        vote[t] -= 1.0
    race = np.array([randvec(0.5) for _ in C.RACE_CLASSES])
    race[2, COUNTRY_OFFSET + C.COUNTRIES.index("Japan")] += 1.0
    edu = np.array([randvec(0.5) for _ in C.EDU_CLASSES])
    edu[3:, 1] += 0.8
    return {"income": income, "vote_share": vote}, {"race": race, "education": edu}


RACE_BASE = np.array([1.2, 0.2, -0.2, -0.4])
EDU_BASE = np.array([-0.2, 0.4, 0.5, 0.2, -0.3])


def _hypotheses(rng, true_idx, catalog, k, correct_rate=0.85):
    n = len(catalog)
    top = true_idx if rng.random() < correct_rate else rng.randint(0, n - 1)
    ids = [top]
    while len(ids) < min(k, n):
        j = rng.randint(0, n - 1)
        if j not in ids:
            ids.append(j)
    p1 = rng.uniform(0.35, 0.9)
    rest = (1.0 - p1) * 0.9
    probs = [p1]
    share = 0.5
    for _ in ids[1:]:
        probs.append(rest * share)
        share *= 0.5
    probs = [math.floor(p * 1e4) / 1e4 for p in probs]
    pairs = sorted(zip((catalog[j].category_id for j in ids), probs), key=lambda t: -t[1])
    return tuple(pairs)


def _truth_box(rng):
    area = math.exp(rng.gauss(math.log(130 * 95), 0.45))
    w = math.sqrt(area * 1.4)
    h = area / w
    w, h = min(w, C.IMAGE_WIDTH - 2.0), min(h, C.IMAGE_HEIGHT - 2.0)
    cy = min(max(rng.gauss(0.62, 0.06) * C.IMAGE_HEIGHT, h / 2 + 1), C.IMAGE_HEIGHT - h / 2 - 1)
    cx = rng.uniform(w / 2 + 1, C.IMAGE_WIDTH - w / 2 - 1)
    return BoundingBox(round(cx - w / 2, 1), round(cy - h / 2, 1), round(w, 1), round(h, 1))


def _jitter(rng, box):
    s = 0.06
    w = max(box.w * math.exp(rng.gauss(0, s)), 5.0)
    h = max(box.h * math.exp(rng.gauss(0, s)), 5.0)
    x = box.x + rng.gauss(0, s) * box.w
    y = box.y + rng.gauss(0, s) * box.h
    return BoundingBox(round(x, 1), round(y, 1), round(w, 1), round(h, 1))


def _random_box(rng):
    w = rng.uniform(50, 300)
    h = rng.uniform(50, 200)
    return BoundingBox(round(rng.uniform(0, C.IMAGE_WIDTH - w), 1),
                       round(rng.uniform(0, C.IMAGE_HEIGHT - h), 1), round(w, 1), round(h, 1))


def _standardize_columns(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return (X - mean) / std


def _noisy(rng, signal, sigma_frac):
    sd = float(np.std(signal))
    return signal + np.array([rng.gauss(0.0, sigma_frac * sd) for _ in signal])


def generate_dataset(spec):
    """Simulate a dataset; see :func:`write_dataset` for the on-disk form."""
    rng = Lcg64(spec.seed)
    catalog = _make_catalog(rng, spec.n_categories)
    loadings, popularity = _category_loadings(rng, catalog)
    default_ridge, default_soft = _default_weights(rng)
    ridge_w = {k: np.asarray(spec.true_ridge_weights.get(k, v), dtype=float) for k, v in default_ridge.items()}
    soft_w = {k: np.asarray(spec.true_softmax_weights.get(k, v), dtype=float) for k, v in default_soft.items()}
    if soft_w["race"].shape[0] != len(C.RACE_CLASSES) or soft_w["education"].shape[0] != len(C.EDU_CLASSES):
        raise ValueError("softmax weights need one row per race / education class")

    regions, images, detections, truths = [], [], [], []
    features = {}
    for r in range(spec.n_regions):
        rid = f"r{r:04d}"
        county = spec.counties[r % len(spec.counties)]
        if rng.random() < spec.low_population_rate:
            population = rng.randint(100, 499)
        else:
            population = rng.randint(800, 30000)
        z = np.array([rng.gauss(0, 1) for _ in range(3)])
        weights = popularity * np.exp(loadings @ z)
        cum = np.cumsum(weights).tolist()
        n_img = rng.randint(*spec.images_per_region)
        n_cars = rng.randint(*spec.cars_per_region)
        image_ids = [f"{rid}-i{k:04d}" for k in range(n_img)]
        images.extend((i, rid) for i in image_ids)
        per_image = [[] for _ in range(n_img)]
        for _ in range(n_cars):
            per_image[rng.randint(0, n_img - 1)].append(rng.choice_index(cum))
        region_dets = []
        for image_id, cars in zip(image_ids, per_image):
            for cat_idx in cars:
                box = _truth_box(rng)
                truths.append((image_id, box))
                if rng.random() < spec.detector_recall:
                    region_dets.append(Detection(
                        image_id, rid, _jitter(rng, box), round(rng.gauss(-0.3, 0.8), 4),
                        class_hypotheses=_hypotheses(rng, cat_idx, catalog, spec.top_k),
                    ))
            for _ in range(rng.poisson(spec.false_positives_per_image)):
                region_dets.append(Detection(
                    image_id, rid, _random_box(rng), round(rng.gauss(-2.9, 0.5), 4),
                    class_hypotheses=_hypotheses(rng, rng.randint(0, len(catalog) - 1), catalog,
                                                 spec.top_k, correct_rate=0.0),
                ))
        detections.extend(region_dets)
        kept = threshold(region_dets, C.DETECTION_THRESHOLD)
        if not kept:
            raise ValueError(f"infeasible spec: region {rid} has no detections above threshold")
        features[rid] = aggregate_features(RegionCensus(rid, n_img, tuple(kept)), catalog)
        regions.append(dict(region_id=rid, kind="zip", city=f"{county} City {r % 3}", state="ZZ",
                            county=county, population=population))

    ids = [g["region_id"] for g in regions]
    Z = _standardize_columns(np.array([features[i] for i in ids]))

    targets = {}
    lin = Z @ ridge_w["income"]
    lin = lin / (np.std(lin) or 1.0)
    income = np.maximum(55_000.0 + 15_000.0 * _noisy(rng, lin, spec.noise_sigma), 5_000.0)
    targets["income"] = dict(zip(ids, np.round(income, 2).tolist()))

    lin = Z @ ridge_w["vote_share"]
    lin = lin / (np.std(lin) or 1.0)
    share = np.clip(0.6 + 0.12 * _noisy(rng, lin, spec.noise_sigma), 0.02, 0.98)

    for name, base in (("race", RACE_BASE), ("education", EDU_BASE)):
        logits = Z @ soft_w[name].T
        logits = np.column_stack([_noisy(rng, logits[:, k], spec.noise_sigma)
                                  for k in range(logits.shape[1])]) + base
        targets[name] = dict(zip(ids, _softmax_rows(logits)))

    acs_rows, vote_rows = [], []
    for g, s in zip(regions, share):
        rid, pop = g["region_id"], g["population"]
        race = targets["race"][rid]
        counts = [int(round(race[k] * pop)) for k in range(3)]
        while sum(counts) > pop:
            counts[int(np.argmax(counts))] -= 1
        pop25 = int(round(0.68 * pop))
        edu = [int(round(v * pop25)) for v in targets["education"][rid]]
        acs_rows.append((rid, repr(targets["income"][rid]), *counts, *edu))
        voters = int(round(0.5 * pop))
        obama = int(round(s * voters))
        vote_rows.append((rid, obama, voters - obama))
        g["acs"] = acs_rows[-1]
        g["votes"] = vote_rows[-1]
    targets["vote_share"] = {rid: (o / (o + m) if o + m else None) for rid, o, m in vote_rows}

    true_weights = {
        "feature_names": list(FEATURE_NAMES),
        **{k: v.tolist() for k, v in ridge_w.items()},
        **{k: v.tolist() for k, v in soft_w.items()},
    }
    return SynthDataset(spec, catalog, regions, images, detections, truths, features, targets,
                        true_weights)


def _softmax_rows(L):
    L = L - L.max(axis=1, keepdims=True)
    E = np.exp(L)
    P = E / E.sum(axis=1, keepdims=True)
    return [tuple(row) for row in P.tolist()]


def write_dataset(ds, out_dir):
    """Write the dataset in the pipeline's input formats.

    Files: catalog.csv, regions.csv, acs.csv, votes.csv, images.csv,
    detections.jsonl, truths.jsonl, synth_spec.json, true_weights.json.
    """
    os.makedirs(out_dir, exist_ok=True)
    p = lambda name: os.path.join(out_dir, name)
    write_catalog(p("catalog.csv"), ds.catalog)
    write_csv(p("regions.csv"), REGIONS_HEADER,
              [tuple(g[k] for k in REGIONS_HEADER) for g in ds.regions])
    write_csv(p("acs.csv"), ACS_HEADER, [g["acs"] for g in ds.regions])
    write_csv(p("votes.csv"), VOTES_HEADER, [g["votes"] for g in ds.regions])
    write_csv(p("images.csv"), ("image_id", "region_id"), ds.images)
    atomic_write_text(p("detections.jsonl"),
                      "".join(json.dumps(detection_to_json(d)) + "\n" for d in ds.detections))
    atomic_write_text(p("truths.jsonl"), "".join(
        json.dumps({"image_id": i, "bbox": b.as_list()}) + "\n" for i, b in ds.truths))
    atomic_write_text(p("synth_spec.json"), dumps_json(ds.spec.to_json()))
    atomic_write_text(p("true_weights.json"), dumps_json(ds.true_weights))
    return out_dir
