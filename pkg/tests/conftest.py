import json
from importlib import resources

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def schema_validator():
    """validate(instance, name) against a shipped schema, with refs resolved."""
    import jsonschema
    from referencing import Registry, Resource

    root = resources.files("pfl") / "schemas"
    docs = {p.name: json.loads(p.read_text()) for p in root.iterdir() if p.name.endswith(".json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(doc)) for name, doc in docs.items())

    def validate(instance, name):
        jsonschema.Draft202012Validator(docs[name], registry=registry).validate(instance)

    return validate
