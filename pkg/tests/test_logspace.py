import math

import numpy as np
import pytest

from utils.logspace import LogReal, complex_logsumexp, log_relative_error


def test_complex_logsumexp_matches_direct_sum():
    c = np.array([0.3 + 1.0j, -1.2 - 2.5j, 0.8 + 0.1j])
    result = complex_logsumexp(c)
    assert np.exp(result) == pytest.approx(np.sum(np.exp(c)), rel=1e-14)


def test_complex_logsumexp_large_logs():
    shift = 5000.0
    c = np.array([shift + 0.4j, shift - 1.0 + 2.0j])
    result = complex_logsumexp(c)
    expected = np.log(np.sum(np.exp(c - shift)))
    assert result.real - shift == pytest.approx(expected.real, abs=1e-12)
    assert np.exp(1j * result.imag) == pytest.approx(np.exp(1j * expected.imag), abs=1e-12)


def test_complex_logsumexp_zero_terms():
    """Test that -inf entries drop out even when their phase is NaN"""
    c = np.array([complex(-np.inf, np.nan), 0.5 + 0.2j])
    assert np.exp(complex_logsumexp(c)) == pytest.approx(np.exp(0.5 + 0.2j), rel=1e-14)
    rows = np.array([[0.0 + 0.0j, 1.0 + 0.0j], [complex(-np.inf, 0.0), complex(-np.inf, np.nan)]])
    reduced = complex_logsumexp(rows, axis=1)
    assert reduced[0] == pytest.approx(math.log(1.0 + math.e), rel=1e-14)
    assert reduced[1].real == -np.inf


def test_log_relative_error():
    a = LogReal.from_float(2.0)
    assert log_relative_error(a, LogReal.from_float(2.0)) == 0.0
    assert log_relative_error(a, LogReal.from_float(4.0)) == pytest.approx(math.log(2.0))
    assert log_relative_error(a, LogReal.from_float(-2.0)) == math.inf
    assert log_relative_error(LogReal.zero(), LogReal.zero()) == 0.0
    assert log_relative_error(LogReal.zero(), a) == math.inf
