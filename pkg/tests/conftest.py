from pathlib import Path

import pytest

from fairgap import LogitTerm, MissingnessSpec, SyntheticSpec

DATA_DIR = Path(__file__).parent / "data"

BETA10 = (0.1,) * 5 + (1.0,) * 5


def classify_spec(n_per_group=(1000, 1000), c=(1.0, -2.0)) -> SyntheticSpec:
    """The Gaussian classification population used across the experiments."""
    return SyntheticSpec(n_per_group=tuple(n_per_group), p=10, beta=BETA10,
                         task="classification", feature_mean_coefficients=tuple(c))


def regress_spec(n_per_group=(1000, 1000), c=(1.0, -2.0), noise_sd=1.0) -> SyntheticSpec:
    """Quadratic-response regression variant of the same population."""
    return SyntheticSpec(n_per_group=tuple(n_per_group), p=10, beta=BETA10,
                         task="regression_quadratic", feature_mean_coefficients=tuple(c),
                         noise_sd=noise_sd)


def mar_recipe(intercept=-3.0, slope=0.2) -> MissingnessSpec:
    """MAR: logit = intercept + slope * sum of the first five features;
    the last five features go missing jointly."""
    terms = (LogitTerm("intercept", intercept),) + tuple(
        LogitTerm("feature", slope, j) for j in range(5))
    return MissingnessSpec("MAR", terms, frozenset(range(5, 10)))


def group_logit_recipe(intercept=0.25, slope_a=-0.5) -> MissingnessSpec:
    """Propensity depends on the sensitive attribute only (constant within group)."""
    return MissingnessSpec("MCAR", (LogitTerm("intercept", intercept),
                                    LogitTerm("sensitive", slope_a)),
                           frozenset(range(5, 10)))


def constant_logit_recipe(logit=0.8) -> MissingnessSpec:
    return MissingnessSpec("MCAR", (LogitTerm("intercept", logit),),
                           frozenset(range(5, 10)))


@pytest.fixture
def compas_like_csv() -> Path:
    return DATA_DIR / "compas_like.csv"
