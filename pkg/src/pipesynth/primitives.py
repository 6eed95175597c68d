"""Catalog of pipeline primitives and their structural roles.

The engine never executes these components itself; the names are shared
vocabulary between the shipped grammar files, the surrogate evaluator's
structural checks, and any external executor (which declares its actual
primitive list during the protocol handshake).
"""

from __future__ import annotations

CLEANER = "cleaner"
TRANSFORM = "transform"
ESTIMATOR = "estimator"

CLEANERS = (
    "SkImputer",
    "MissingIndicator",
)

TRANSFORMS = (
    "OneHotEncoder",
    "OrdinalEncoder",
    "PCA",
    "StandardScaler",
    "MinMaxScaler",
    "RobustScaler",
    "Normalizer",
    "SelectKBest",
    "VarianceThreshold",
    "Binarizer",
    "PolynomialFeatures",
)

CLASSIFIERS = (
    "GaussianNB",
    "BernoulliNB",
    "MultinomialNB",
    "RidgeClassifier",
    "SGDClassifier",
    "LinearSVC",
    "SVC",
    "DecisionTreeClassifier",
    "RandomForestClassifier",
    "ExtraTreesClassifier",
    "GradientBoostingClassifier",
    "KNeighborsClassifier",
    "LogisticRegression",
    "AdaBoostClassifier",
    "BaggingClassifier",
    "MLPClassifier",
)

REGRESSORS = (
    "LinearRegression",
    "Ridge",
    "Lasso",
    "ElasticNet",
    "Lars",
    "LassoLars",
    "OrthogonalMatchingPursuit",
    "BayesianRidge",
    "ARDRegression",
    "SGDRegressor",
    "PassiveAggressiveRegressor",
    "HuberRegressor",
    "TheilSenRegressor",
    "KernelRidge",
    "SVR",
    "LinearSVR",
    "KNeighborsRegressor",
    "DecisionTreeRegressor",
    "RandomForestRegressor",
    "ExtraTreesRegressor",
    "GradientBoostingRegressor",
    "AdaBoostRegressor",
)

ESTIMATORS = CLASSIFIERS + REGRESSORS


def default_roles() -> dict[str, str]:
    """Name -> role for every catalog primitive."""
    roles: dict[str, str] = {}
    for name in CLEANERS:
        roles[name] = CLEANER
    for name in TRANSFORMS:
        roles[name] = TRANSFORM
    for name in ESTIMATORS:
        roles[name] = ESTIMATOR
    return roles


def roles_from_sections(
    cleaners=(), transforms=(), estimators=()
) -> dict[str, str]:
    """Build a role table for ad-hoc (e.g. toy test) primitive sets."""
    roles: dict[str, str] = {}
    for name in cleaners:
        roles[name] = CLEANER
    for name in transforms:
        roles[name] = TRANSFORM
    for name in estimators:
        roles[name] = ESTIMATOR
    return roles
