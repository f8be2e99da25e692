import numpy as np
import pytest

from fdboundary.series import CONVERGES, DIVERGES, INCONCLUSIVE, classify_partial_sums

m = np.arange(1, 41, dtype=float)


@pytest.mark.parametrize(
    "S, expected",
    [
        (np.cumsum(np.ones(40)), DIVERGES),
        (np.cumsum(1 / m), DIVERGES),
        (np.cumsum(0.5 ** m), CONVERGES),
        (np.cumsum(1 / m ** 3), CONVERGES),
        (np.append(np.ones(39), np.inf), DIVERGES),
        (np.cumsum((-1) ** m / m), INCONCLUSIVE),
    ],
    ids=["linear", "harmonic", "geometric", "cubic", "infinite", "alternating"],
)
def test_verdicts(S, expected):
    assert classify_partial_sums(S).verdict == expected


def test_too_short():
    with pytest.raises(ValueError):
        classify_partial_sums([1.0, 2.0])
