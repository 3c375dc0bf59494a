import pytest

from pgconics.galois import Field, QuadExtension
from pgconics.bruckbose import build_frame, canonical_tangent_conic, build_C
from pgconics.reconstruct import full_pipeline


@pytest.fixture(scope="session")
def gf7():
    return Field(7)


@pytest.fixture(scope="session")
def gf9():
    return Field(3, 2)


@pytest.fixture(scope="session")
def ext7(gf7):
    return QuadExtension(gf7)


@pytest.fixture(scope="session")
def frame7(ext7):
    return build_frame(ext7)


@pytest.fixture(scope="session")
def conic7(frame7):
    return canonical_tangent_conic(frame7)


@pytest.fixture(scope="session")
def c7(frame7, conic7):
    return build_C(frame7, conic7)


@pytest.fixture(scope="session")
def run7(frame7, conic7, c7):
    """Full q=7 round trip on the canonical conic: (records, state)."""
    return full_pipeline(c7, frame=frame7, conic=conic7, expect_classical=True)


@pytest.fixture(scope="session")
def frame9(gf9):
    return build_frame(QuadExtension(gf9))
