import pytest

from hermrank.hermite_core import FunctionSpec

CATALOG = {
    "z": FunctionSpec.polynomial([0, 1]),
    "z2": FunctionSpec.polynomial([0, 0, 1]),
    "z2m1": FunctionSpec.polynomial([-1, 0, 1]),
    "z3": FunctionSpec.polynomial([0, 0, 0, 1]),
    "he3": FunctionSpec.hermite_combo([0, 0, 0, 1]),
    "he2_he4": FunctionSpec.hermite_combo([0, 0, 1, 0, 0.5]),
    "abs": FunctionSpec.absolute(),
    "exp": FunctionSpec.exponential(),
    "spow": FunctionSpec.signed_power(1.5),
    "ind": FunctionSpec.indicator(0.3),
}

# entries smooth enough for finite-difference and Parseval checks at 1e-8
SMOOTH = ["z", "z2", "z2m1", "z3", "he3", "he2_he4", "exp"]
EVEN = ["z2", "z2m1", "he2_he4", "abs"]


@pytest.fixture(params=sorted(CATALOG))
def catalog_item(request):
    return request.param, CATALOG[request.param]
