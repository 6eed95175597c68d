from sklexec import registry


def test_catalog_counts():
    assert len(registry.CLEANERS) == 2
    assert len(registry.TRANSFORMS) == 11
    assert len(registry.CLASSIFIERS) == 16
    assert len(registry.REGRESSORS) == 22
    assert len(registry.REGISTRY) == 51


def test_primitive_names_cover_registry_in_section_order():
    names = registry.primitive_names()
    assert len(names) == 51
    assert names[:2] == list(registry.CLEANERS)
    assert names[2:13] == list(registry.TRANSFORMS)
    assert set(names[13:29]) == set(registry.CLASSIFIERS)
    assert set(names[29:]) == set(registry.REGRESSORS)


def test_every_component_instantiates():
    for name in registry.primitive_names():
        component = registry.build(name, seed=3)
        assert component is not None


def test_build_seeds_components_that_accept_a_random_state():
    forest = registry.build("RandomForestClassifier", seed=3)
    assert forest.get_params()["random_state"] == 3
    gnb = registry.build("GaussianNB", seed=3)
    assert "random_state" not in gnb.get_params()


def test_build_without_seed_keeps_defaults():
    forest = registry.build("RandomForestClassifier")
    assert forest.get_params()["random_state"] is None


def test_validate_accepts_full_chain():
    names = ["SkImputer", "PCA", "GaussianNB"]
    assert registry.validate_pipeline(names, "classification") is None


def test_validate_allows_any_preprocessing_order():
    names = ["PCA", "SkImputer", "GaussianNB"]
    assert registry.validate_pipeline(names, "classification") is None


def test_validate_rejects_estimator_not_last():
    message = registry.validate_pipeline(["GaussianNB", "PCA"], "classification")
    assert "final step" in message


def test_validate_rejects_unknown_primitive():
    message = registry.validate_pipeline(["MadeUpThing"], "classification")
    assert "MadeUpThing" in message


def test_validate_rejects_multiple_estimators():
    message = registry.validate_pipeline(["GaussianNB", "LinearSVC"], "classification")
    assert "exactly one estimator" in message


def test_validate_rejects_task_mismatch():
    message = registry.validate_pipeline(["Ridge"], "classification")
    assert "classification" in message
    assert registry.validate_pipeline(["Ridge"], "regression") is None


def test_validate_rejects_empty_and_non_string_pipelines():
    assert registry.validate_pipeline([], "classification") is not None
    assert registry.validate_pipeline([42], "classification") is not None
