"""Estimate region demographics and voting from street-level vehicle censuses.

Modules
-------
catalog      vehicle categories, regions, ACS ground truth, county split
detection    boxes, IoU matching, location-size prior, average precision
calibration  isotonic score-to-probability calibration
features     the 88-component regional car-attribute vector
estimator    standardization, ridge/softmax regression, 5-fold CV averaging
analytics    Pearson r, MAE, precinct accuracy, sedan/pickup conditionals
geo          GPS grids, road filtering, camera headings, panorama unwarping
synth        synthetic datasets with known ground truth
oracles      brute-force reference solvers for the numerical pieces
"""

from carcensus.constants import FEATURE_LAYOUT_VERSION

__version__ = "0.1.0"
__all__ = ["FEATURE_LAYOUT_VERSION", "__version__"]
