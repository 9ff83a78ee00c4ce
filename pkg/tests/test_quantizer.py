import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsysid.errors import (
    DomainError,
    IdentifiabilityWarning,
    InvalidLevelError,
    OutOfRangeError,
)
from qsysid.quantizer import (
    BinaryQuantizer,
    CeilQuantizer,
    CustomQuantizer,
    IdentityQuantizer,
    format_quantizer,
    interval_contains,
    invalid_level_positions,
    level_interval,
    level_intervals,
    parse_quantizer,
    quantize,
    quantize_array,
    roundtrip_check,
)


class TestBinary:
    def test_threshold_convention(self):
        q = BinaryQuantizer(1.0)
        assert quantize(q, 1.0) == 1.0  # boundary belongs to the upper level
        assert quantize(q, 1.0 - 1e-12) == -1.0
        assert quantize(q, 5.0) == 1.0
        assert quantize(q, -2.0) == -1.0

    def test_intervals(self):
        q = BinaryQuantizer(1.0)
        assert level_interval(q, 1.0) == (1.0, np.inf)
        assert level_interval(q, -1.0) == (-np.inf, 1.0)
        assert interval_contains(q, 1.0, 1.0)  # lower endpoint closed
        assert not interval_contains(q, -1.0, 1.0)

    def test_unknown_level(self):
        with pytest.raises(InvalidLevelError):
            level_interval(BinaryQuantizer(0.5), 2.0)

    def test_zero_threshold_warns(self):
        with pytest.warns(IdentifiabilityWarning):
            BinaryQuantizer(0.0)

    def test_nonzero_threshold_silent(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            BinaryQuantizer(1.0)

    def test_non_finite_threshold_rejected(self):
        with pytest.raises(DomainError):
            BinaryQuantizer(np.inf)


class TestCeil:
    def test_quantize(self):
        q = CeilQuantizer()
        assert quantize(q, 0.3) == 1.0
        assert quantize(q, -0.2) == 0.0
        assert quantize(q, 3.0) == 3.0  # integers map to themselves
        assert quantize(q, 2.0001) == 3.0

    def test_interval_half_open(self):
        q = CeilQuantizer()
        assert level_interval(q, 3.0) == (2.0, 3.0)
        assert interval_contains(q, 3.0, 3.0)
        assert not interval_contains(q, 3.0, 2.0)

    def test_non_integer_level(self):
        with pytest.raises(InvalidLevelError):
            level_interval(CeilQuantizer(), 2.5)


class TestCustom:
    def make(self):
        return CustomQuantizer(thresholds=(-np.inf, 0.0, 1.0, np.inf),
                               levels=(10.0, 20.0, 30.0))

    def test_mapping(self):
        q = self.make()
        assert quantize(q, -3.0) == 10.0
        assert quantize(q, 0.0) == 10.0  # right-closed cells
        assert quantize(q, 0.5) == 20.0
        assert quantize(q, 1.0) == 20.0
        assert quantize(q, 7.0) == 30.0

    def test_intervals(self):
        q = self.make()
        assert level_interval(q, 20.0) == (0.0, 1.0)
        assert level_interval(q, 30.0) == (1.0, np.inf)
        with pytest.raises(InvalidLevelError):
            level_interval(q, 99.0)

    def test_out_of_range_with_finite_edges(self):
        q = CustomQuantizer(thresholds=(0.0, 1.0, 2.0), levels=(5.0, 6.0))
        assert quantize(q, 1.5) == 6.0
        with pytest.raises(OutOfRangeError):
            quantize(q, 2.5)
        with pytest.raises(OutOfRangeError):
            quantize(q, 0.0)  # left edge is open

    def test_construction_validation(self):
        with pytest.raises(DomainError):
            CustomQuantizer(thresholds=(0.0, 0.0, 1.0), levels=(1.0, 2.0))
        with pytest.raises(DomainError):
            CustomQuantizer(thresholds=(0.0, 1.0, 2.0), levels=(1.0, 1.0))
        with pytest.raises(DomainError):
            CustomQuantizer(thresholds=(0.0, 1.0), levels=(1.0, 2.0))
        with pytest.raises(DomainError):
            CustomQuantizer(thresholds=(0.0, np.inf, 1.0, 2.0), levels=(1.0, 2.0, 3.0))


class TestIdentity:
    def test_passthrough(self):
        q = IdentityQuantizer()
        assert quantize(q, 2.75) == 2.75
        assert level_interval(q, 2.75) == (2.75, 2.75)
        assert roundtrip_check(q, -1.25)

    def test_array(self):
        x = np.array([0.1, -3.4, 7.0])
        out = quantize_array(IdentityQuantizer(), x)
        np.testing.assert_array_equal(out, x)
        assert out is not x


class TestVectorized:
    def test_matches_scalar(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 2, 300)
        for q in (BinaryQuantizer(1.0), CeilQuantizer(),
                  CustomQuantizer((-np.inf, -1.0, 1.0, np.inf), (1.0, 2.0, 3.0))):
            vec = quantize_array(q, x)
            scal = np.array([quantize(q, v) for v in x])
            np.testing.assert_array_equal(vec, scal)

    def test_level_intervals_match_scalar(self):
        rng = np.random.default_rng(6)
        x = rng.normal(0, 2, 200)
        for q in (BinaryQuantizer(0.5), CeilQuantizer(),
                  CustomQuantizer((-np.inf, 0.0, np.inf), (-7.0, 4.0))):
            y = quantize_array(q, x)
            lo, hi = level_intervals(q, y)
            for t in range(len(y)):
                assert (lo[t], hi[t]) == level_interval(q, y[t])

    def test_level_intervals_bad_level_carries_index(self):
        y = np.array([1.0, -1.0, 3.0])
        with pytest.raises(InvalidLevelError) as info:
            level_intervals(BinaryQuantizer(0.5), y)
        assert info.value.index == 2
        assert info.value.level == 3.0

    def test_invalid_level_positions(self):
        y = np.array([1.0, 2.5, -1.0, 0.0])
        np.testing.assert_array_equal(
            invalid_level_positions(BinaryQuantizer(1.0), y), [1, 3]
        )
        np.testing.assert_array_equal(
            invalid_level_positions(CeilQuantizer(), y), [1]
        )

    def test_non_finite_input_rejected(self):
        with pytest.raises(DomainError):
            quantize_array(CeilQuantizer(), np.array([1.0, np.inf]))


class TestGrammar:
    def test_parse_binary(self):
        q = parse_quantizer("binary:1.5")
        assert q == BinaryQuantizer(1.5)
        assert format_quantizer(q) == "binary:1.5"

    def test_parse_ceil_and_identity(self):
        assert parse_quantizer("ceil") == CeilQuantizer()
        assert parse_quantizer("identity") == IdentityQuantizer()
        assert format_quantizer(CeilQuantizer()) == "ceil"

    def test_parse_custom(self):
        q = parse_quantizer("custom:0,1:10,20,30")
        assert q.thresholds == (-np.inf, 0.0, 1.0, np.inf)
        assert q.levels == (10.0, 20.0, 30.0)
        assert parse_quantizer(format_quantizer(q)) == q

    @pytest.mark.parametrize("text", [
        "", "binary", "binary:a", "binary:1:2", "ceil:3", "custom:1",
        "custom:1,0:5,6,7", "triangle:2",
    ])
    def test_parse_rejects(self, text):
        with pytest.raises(DomainError):
            parse_quantizer(text)

    def test_format_rejects_unexpressible_custom(self):
        q = CustomQuantizer(thresholds=(0.0, 1.0), levels=(5.0,))
        with pytest.raises(DomainError):
            format_quantizer(q)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-1e9, 1e9, allow_nan=False))
def test_roundtrip_property(x):
    for q in (BinaryQuantizer(1.0), BinaryQuantizer(-0.25), CeilQuantizer(),
              CustomQuantizer((-np.inf, -2.0, 0.0, 3.0, np.inf),
                              (1.0, 2.0, 3.0, 4.0)),
              IdentityQuantizer()):
        assert roundtrip_check(q, x)
