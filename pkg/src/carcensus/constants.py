"""Fixed vocabularies and protocol defaults shared across the pipeline."""

MAKES = (
    "Acura", "AM General", "Aston Martin", "Audi", "Bentley", "BMW", "Buick",
    "Cadillac", "Chevrolet", "Chrysler", "Daewoo", "Dodge", "Eagle", "Ferrari",
    "Fiat", "Fisker", "Ford", "Geo", "GMC", "Honda", "Hummer", "Hyundai",
    "Infiniti", "Isuzu", "Jaguar", "Jeep", "Kia", "Lamborghini", "Land Rover",
    "Lexus", "Lincoln", "Lotus", "Maserati", "Maybach", "Mazda", "McLaren",
    "Mercedes-Benz", "Mercury", "Mini", "Mitsubishi", "Nissan", "Oldsmobile",
    "Panoz", "Plymouth", "Pontiac", "Porsche", "Ram", "Rolls-Royce", "Saab",
    "Saturn", "Scion", "Smart", "Subaru", "Suzuki", "Tesla", "Toyota",
    "Volkswagen", "Volvo",
)

# Feature-layout order; differs from the metadata listing only in van/wagon.
BODY_TYPES = (
    "convertible", "coupe", "hatchback", "minivan", "sedan", "SUV",
    "truck-regular", "truck-extended", "truck-crew", "van", "wagon",
)
TRUCK_BODY_TYPES = ("truck-regular", "truck-extended", "truck-crew")

COUNTRIES = (
    "England", "Germany", "Italy", "Japan", "South Korea", "Sweden", "USA",
)
DOMESTIC_COUNTRY = "USA"

YEAR_RANGES = ((1990, 1994), (1995, 1999), (2000, 2004), (2005, 2009), (2010, 2014))
YEAR_MIN = 1990
YEAR_MAX = 2014

RACE_CLASSES = ("white", "black", "asian", "other")
EDU_CLASSES = ("less_than_hs", "high_school", "some_college", "bachelors", "graduate")

ACS_INCOME = "B19013_001E"
ACS_RACE = ("B02001_002E", "B02001_003E", "B02001_005E")
ACS_EDU = ("B06009_002E", "B06009_003E", "B06009_004E", "B06009_005E", "B06009_006E")

# Protocol defaults.
DETECTION_THRESHOLD = -2.3
REPORTING_THRESHOLD = -1.5
IOU_MIN = 0.5
TOP_K = 20
FOLDS = 5
MIN_POPULATION = 500
MIN_CARS = 50
TRAIN_INITIALS = frozenset("ABC")
LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0)

# Street View acquisition geometry.
EARTH_RADIUS_M = 6_371_000.0
GRID_SIDE_M = 20_000.0
GRID_SPACING_M = 25.0
MAX_ROAD_DIST_M = 12.5
IMAGE_WIDTH = 860
IMAGE_HEIGHT = 573
HFOV_DEG = 90.0
HEADINGS_DEG = (0.0, 60.0, 120.0, 180.0, 240.0, 300.0)

FEATURE_LAYOUT_VERSION = "carcensus-features-88-v1"


def protocol_defaults():
    """Protocol constants as emitted into every report."""
    return {
        "detection_threshold": DETECTION_THRESHOLD,
        "folds": FOLDS,
        "min_population": MIN_POPULATION,
        "min_cars": MIN_CARS,
        "iou_min": IOU_MIN,
        "top_k": TOP_K,
    }
