"""Primitive registry: engine vocabulary name -> scikit-learn factory.

Components are instantiated with library defaults; the only parameter the
executor ever sets is `random_state`, from the request seed, on components
that accept one.
"""

from sklearn.decomposition import PCA
from sklearn.ensemble import (
    AdaBoostClassifier,
    AdaBoostRegressor,
    BaggingClassifier,
    ExtraTreesClassifier,
    ExtraTreesRegressor,
    GradientBoostingClassifier,
    GradientBoostingRegressor,
    RandomForestClassifier,
    RandomForestRegressor,
)
from sklearn.feature_selection import SelectKBest, VarianceThreshold
from sklearn.impute import MissingIndicator, SimpleImputer
from sklearn.kernel_ridge import KernelRidge
from sklearn.linear_model import (
    ARDRegression,
    BayesianRidge,
    ElasticNet,
    HuberRegressor,
    Lars,
    Lasso,
    LassoLars,
    LinearRegression,
    LogisticRegression,
    OrthogonalMatchingPursuit,
    PassiveAggressiveRegressor,
    Ridge,
    RidgeClassifier,
    SGDClassifier,
    SGDRegressor,
    TheilSenRegressor,
)
from sklearn.naive_bayes import BernoulliNB, GaussianNB, MultinomialNB
from sklearn.neighbors import KNeighborsClassifier, KNeighborsRegressor
from sklearn.neural_network import MLPClassifier
from sklearn.preprocessing import (
    Binarizer,
    MinMaxScaler,
    Normalizer,
    OneHotEncoder,
    OrdinalEncoder,
    PolynomialFeatures,
    RobustScaler,
    StandardScaler,
)
from sklearn.svm import SVC, SVR, LinearSVC, LinearSVR
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

CLEANERS = {
    "SkImputer": SimpleImputer,
    "MissingIndicator": MissingIndicator,
}

TRANSFORMS = {
    "OneHotEncoder": OneHotEncoder,
    "OrdinalEncoder": OrdinalEncoder,
    "PCA": PCA,
    "StandardScaler": StandardScaler,
    "MinMaxScaler": MinMaxScaler,
    "RobustScaler": RobustScaler,
    "Normalizer": Normalizer,
    "SelectKBest": SelectKBest,
    "VarianceThreshold": VarianceThreshold,
    "Binarizer": Binarizer,
    "PolynomialFeatures": PolynomialFeatures,
}

CLASSIFIERS = {
    "GaussianNB": GaussianNB,
    "BernoulliNB": BernoulliNB,
    "MultinomialNB": MultinomialNB,
    "RidgeClassifier": RidgeClassifier,
    "SGDClassifier": SGDClassifier,
    "LinearSVC": LinearSVC,
    "SVC": SVC,
    "DecisionTreeClassifier": DecisionTreeClassifier,
    "RandomForestClassifier": RandomForestClassifier,
    "ExtraTreesClassifier": ExtraTreesClassifier,
    "GradientBoostingClassifier": GradientBoostingClassifier,
    "KNeighborsClassifier": KNeighborsClassifier,
    "LogisticRegression": LogisticRegression,
    "AdaBoostClassifier": AdaBoostClassifier,
    "BaggingClassifier": BaggingClassifier,
    "MLPClassifier": MLPClassifier,
}

REGRESSORS = {
    "LinearRegression": LinearRegression,
    "Ridge": Ridge,
    "Lasso": Lasso,
    "ElasticNet": ElasticNet,
    "Lars": Lars,
    "LassoLars": LassoLars,
    "OrthogonalMatchingPursuit": OrthogonalMatchingPursuit,
    "BayesianRidge": BayesianRidge,
    "ARDRegression": ARDRegression,
    "SGDRegressor": SGDRegressor,
    "PassiveAggressiveRegressor": PassiveAggressiveRegressor,
    "HuberRegressor": HuberRegressor,
    "TheilSenRegressor": TheilSenRegressor,
    "KernelRidge": KernelRidge,
    "SVR": SVR,
    "LinearSVR": LinearSVR,
    "KNeighborsRegressor": KNeighborsRegressor,
    "DecisionTreeRegressor": DecisionTreeRegressor,
    "RandomForestRegressor": RandomForestRegressor,
    "ExtraTreesRegressor": ExtraTreesRegressor,
    "GradientBoostingRegressor": GradientBoostingRegressor,
    "AdaBoostRegressor": AdaBoostRegressor,
}

REGISTRY = {**CLEANERS, **TRANSFORMS, **CLASSIFIERS, **REGRESSORS}


def primitive_names() -> list:
    """Every name this executor can run, for the hello handshake."""
    return list(REGISTRY)


def build(name: str, seed=None):
    """Instantiate a registered component, seeding it when it supports one."""
    component = REGISTRY[name]()
    if seed is not None and "random_state" in component.get_params():
        component.set_params(random_state=seed)
    return component


def _family(name: str):
    if name in CLASSIFIERS:
        return "classification"
    if name in REGRESSORS:
        return "regression"
    return None


def validate_pipeline(names, task: str):
    """Structural check; returns an explanation string or None when valid.

    A valid pipeline is a non-empty name sequence whose one estimator sits
    last and matches the task; cleaners and transforms may appear in any
    order before it.
    """
    if not names or not all(isinstance(n, str) for n in names):
        return "pipeline must be a non-empty list of primitive names"
    for name in names:
        if name not in REGISTRY:
            return f"unknown primitive {name!r}"
    estimators = [n for n in names if _family(n)]
    if len(estimators) != 1:
        return f"expected exactly one estimator, got {len(estimators)}"
    if _family(names[-1]) is None:
        return "estimator must be the final step"
    if _family(names[-1]) != task:
        return f"{names[-1]} does not fit a {task} task"
    return None
